"""Command-line front end: throughput sweeps and the BER model gate.

The `sweep` subcommand runs the Monte Carlo comparison.  For every
(p_t, trial) pair one channel realization is drawn and shared by every
system and every SNR point, so differences between systems reflect only
their modulation constraints, and curves are smooth in SNR.  The swept SNR
is 1/noise_var in dB; with the unit-power channel profile it equals the mean
per-position SNR.

The `validate-ber` subcommand checks every analytic BER model against the
symbol-level simulator over its whole usable range and fails loudly on
disagreement; run it before trusting sweep output.

Per-trial totals are deterministic functions of (seed, p_t index, trial), so
any worker count produces byte-identical CSV.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from .ber_sim import SimConfig, simulate_ber
from .channel import draw_realization, load_channel_profile, snr_grid, tux_profile
from .loading import block_total_bits, flat_mask, greedy_total_bits, position_ber_table
from .metrics import SweepPoint, aggregate, eta_r
from .modulation import CATALOG, CATALOG_BITS, ber, min_snr_for
from .systems import SYSTEM_NAMES, build_profile, load_profile

CSV_HEADER = "system,snr_db,p_t,trials,mean_bits_per_subcarrier,ci95,eta_r"

REFERENCE_SYSTEM = "fb"

#: validate-ber samples this many log-spaced target BERs per scheme
N_VALIDATION_POINTS = 8
VALIDATION_SPAN = (1e-4, 0.4)

#: per-point symbol counts are raised until this many bit errors are expected,
#: keeping the relative noise near 2% so a 10% tolerance is a 4-sigma test
VALIDATION_ERROR_FLOOR = 2000


@dataclass(frozen=True)
class SweepConfig:
    """Validated sweep parameters (see the flag reference in `main`)."""

    systems: tuple = SYSTEM_NAMES
    snr_db: tuple = tuple(float(s) for s in range(0, 41, 2))
    p_t: tuple = (1e-3,)
    trials: int = 1000
    seed: int = 0
    n_fft: int = 128
    n_f: int = 12
    n_t: int = 7
    granularity: str = "subcarrier"
    profile_file: str | None = None
    channel_file: str | None = None
    out: str | None = None
    series_out: str | None = None
    workers: int = 1

    def __post_init__(self):
        if not self.systems:
            raise ValueError("at least one system is required")
        for name in self.systems:
            if name not in SYSTEM_NAMES:
                raise ValueError(
                    f"unknown system {name!r}; choose from {', '.join(SYSTEM_NAMES)}"
                )
        if len(set(self.systems)) != len(self.systems):
            raise ValueError("duplicate system names")
        if not self.snr_db:
            raise ValueError("empty SNR grid")
        for p in self.p_t:
            if not 0.0 < p < 0.5:
                raise ValueError(f"p_t must lie in (0, 0.5), got {p!r}")
        if not self.p_t:
            raise ValueError("at least one p_t is required")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")
        if self.n_fft < 1 or self.n_f < 1 or self.n_t < 1:
            raise ValueError("n_fft and grid dimensions must be positive")
        if self.granularity not in ("subcarrier", "block"):
            raise ValueError("granularity must be subcarrier or block")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


def _resolve_profiles(cfg: SweepConfig):
    """Profiles to compute: requested systems, any custom map, and the
    reference system (always simulated, it is the ratio denominator)."""
    out_names = list(dict.fromkeys(cfg.systems))
    profiles = {n: build_profile(n, cfg.n_f, cfg.n_t) for n in out_names}
    if cfg.profile_file is not None:
        custom = load_profile(cfg.profile_file)
        if (custom.grid.n_f, custom.grid.n_t) != (cfg.n_f, cfg.n_t):
            raise ValueError(
                f"custom profile is {custom.grid.n_f} x {custom.grid.n_t}, "
                f"sweep grid is {cfg.n_f} x {cfg.n_t}"
            )
        if custom.name in profiles:
            raise ValueError(f"custom profile name {custom.name!r} collides")
        profiles[custom.name] = custom
        out_names.append(custom.name)
    if REFERENCE_SYSTEM not in profiles:
        profiles[REFERENCE_SYSTEM] = build_profile(REFERENCE_SYSTEM, cfg.n_f, cfg.n_t)
    computed = [REFERENCE_SYSTEM]
    computed += [n for n in profiles if n != REFERENCE_SYSTEM]
    return out_names, computed, profiles


def _sweep_chunk(args):
    """Per-trial bit totals for trials [lo, hi); runs in a worker process."""
    chan, grids, snr_db, p_ts, seed, n_f, n_t, n_fft, granularity, lo, hi = args
    masks = [flat_mask(g) for g in grids]
    total_bits = greedy_total_bits if granularity == "subcarrier" else block_total_bits
    noise_vars = [10.0 ** (-s / 10.0) for s in snr_db]
    out = np.zeros((len(p_ts), len(snr_db), len(grids), hi - lo), dtype=np.int64)
    for pt_i, p_t in enumerate(p_ts):
        for trial in range(lo, hi):
            rng = np.random.default_rng(np.random.SeedSequence((seed, pt_i, trial)))
            real = draw_realization(chan, n_f, n_t, rng, n_fft=n_fft)
            for snr_i, noise_var in enumerate(noise_vars):
                snr = snr_grid(real, noise_var)
                cost = CATALOG_BITS[:, None] * position_ber_table(snr)
                for g_i, mask in enumerate(masks):
                    out[pt_i, snr_i, g_i, trial - lo] = total_bits(mask, cost, p_t)
    return out


def run_sweep(cfg: SweepConfig) -> list:
    """Run the configured sweep; returns SweepPoints in output row order."""
    out_names, computed, profiles = _resolve_profiles(cfg)
    chan = (
        load_channel_profile(cfg.channel_file)
        if cfg.channel_file is not None
        else tux_profile()
    )
    grids = [profiles[n].grid for n in computed]
    workers = min(cfg.workers, cfg.trials)
    bounds = [(cfg.trials * i) // workers for i in range(workers + 1)]
    tasks = [
        (chan, grids, cfg.snr_db, cfg.p_t, cfg.seed, cfg.n_f, cfg.n_t,
         cfg.n_fft, cfg.granularity, lo, hi)
        for lo, hi in zip(bounds[:-1], bounds[1:])
        if hi > lo
    ]
    if len(tasks) == 1:
        chunks = [_sweep_chunk(tasks[0])]
    else:
        with get_context("fork").Pool(len(tasks)) as pool:
            chunks = pool.map(_sweep_chunk, tasks)
    bits = np.concatenate(chunks, axis=3)  # (p_t, snr, system, trial)

    n_positions = cfg.n_f * cfg.n_t
    ref_i = computed.index(REFERENCE_SYSTEM)
    points = []
    for pt_i, p_t in enumerate(cfg.p_t):
        for name in out_names:
            g_i = computed.index(name)
            for snr_i, snr in enumerate(cfg.snr_db):
                series = bits[pt_i, snr_i, g_i] / n_positions
                if cfg.trials >= 2:
                    mean, half = aggregate(series)
                else:
                    mean, half = float(series[0]), math.nan
                ref_total = int(bits[pt_i, snr_i, ref_i].sum())
                own_total = int(bits[pt_i, snr_i, g_i].sum())
                eta = eta_r(own_total, ref_total) if ref_total > 0 else math.nan
                points.append(
                    SweepPoint(name, float(snr), float(p_t), cfg.trials,
                               mean, half, eta)
                )
    return points


def write_csv(points, fh):
    """Stable six-significant-digit CSV; the determinism contract is byte-level."""
    fh.write(CSV_HEADER + "\n")
    for p in points:
        fh.write(
            f"{p.system},{p.snr_db:.6g},{p.p_t:.6g},{p.trials},"
            f"{p.mean_bits_per_subcarrier:.6g},{p.ci95:.6g},{p.eta_r:.6g}\n"
        )


def series_payload(cfg: SweepConfig, points) -> list:
    """Per-SNR series grouped by (p_t, system), for external plotting."""
    blocks = []
    for p_t in cfg.p_t:
        rows = [p for p in points if p.p_t == float(p_t)]
        systems = {}
        for p in rows:
            entry = systems.setdefault(
                p.system, {"mean_bits_per_subcarrier": [], "ci95": [], "eta_r": []}
            )
            entry["mean_bits_per_subcarrier"].append(p.mean_bits_per_subcarrier)
            entry["ci95"].append(p.ci95)
            entry["eta_r"].append(p.eta_r)
        blocks.append(
            {"p_t": float(p_t), "snr_db": [float(s) for s in cfg.snr_db],
             "systems": systems}
        )
    return blocks


def run_ber_validation(n_symbols: int = 1_000_000, tolerance: float = 0.10,
                       seed: int = 0):
    """Compare every analytic BER model with the Monte Carlo simulator.

    Per scheme, targets are log-spaced across the usable BER range; the SNR
    for each target comes from the model's own inverse, so the check spans
    exactly the region the loader queries.  Returns (report rows, all_ok).
    """
    rows = []
    all_ok = True
    non_silent = [s for s in CATALOG if not s.silent]
    targets = np.geomspace(*VALIDATION_SPAN, N_VALIDATION_POINTS)
    for s_i, scheme in enumerate(non_silent):
        for t_i, target in enumerate(targets):
            gamma = min_snr_for(scheme, float(target))
            analytic = float(ber(scheme, gamma))
            boosted = math.ceil(VALIDATION_ERROR_FLOOR / (analytic * scheme.bits))
            n = max(n_symbols, boosted)
            cfg = SimConfig(scheme, gamma, n, seed * 1000 + s_i * 10 + t_i)
            empirical, _ci = simulate_ber(cfg)
            rel = abs(empirical - analytic) / analytic
            ok = rel <= tolerance
            all_ok &= ok
            rows.append((str(scheme), gamma, analytic, empirical, rel, ok))
    return rows, all_ok


def _print_validation_report(rows, all_ok, fh):
    fh.write(
        f"{'scheme':<7} {'gamma':>12} {'analytic':>12} "
        f"{'empirical':>12} {'rel_err':>9}  status\n"
    )
    for name, gamma, analytic, empirical, rel, ok in rows:
        fh.write(
            f"{name:<7} {gamma:>12.6g} {analytic:>12.6g} "
            f"{empirical:>12.6g} {rel:>9.2%}  {'pass' if ok else 'FAIL'}\n"
        )
    n_fail = sum(not r[-1] for r in rows)
    fh.write(f"{len(rows) - n_fail}/{len(rows)} points passed\n")


_SWEEP_KEYS = (
    "systems", "snr_db", "pt", "trials", "seed", "nfft", "n_f", "n_t",
    "granularity", "profile_file", "channel_file", "out", "series_out",
    "workers",
)


def _parse_systems(value) -> tuple:
    names = value if isinstance(value, (list, tuple)) else str(value).split(",")
    return tuple(n.strip().lower() for n in names if n.strip())


def _parse_snr(value) -> tuple:
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    text = str(value)
    if ":" not in text:
        return (float(text),)
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError("SNR range must be START:STEP:STOP")
    start, step, stop = (float(p) for p in parts)
    if step <= 0:
        raise ValueError("SNR step must be positive")
    if stop < start:
        raise ValueError("SNR stop must not precede start")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(start + i * step for i in range(count))


def _parse_pt(value) -> tuple:
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    return tuple(float(v) for v in str(value).split(",") if v.strip())


def _build_sweep_config(args, parser) -> SweepConfig:
    file_cfg = {}
    if args.config is not None:
        try:
            file_cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config {args.config}: {exc}")
        if not isinstance(file_cfg, dict):
            parser.error(f"config {args.config} must hold a JSON object")
        unknown = sorted(set(file_cfg) - set(_SWEEP_KEYS))
        if unknown:
            parser.error(f"unknown config keys: {', '.join(unknown)}")

    def pick(key, fallback=None):
        flag = getattr(args, key)
        if flag is not None:
            return flag
        return file_cfg.get(key, fallback)

    try:
        return SweepConfig(
            systems=_parse_systems(pick("systems", "fb,cm,lte,mlte")),
            snr_db=_parse_snr(pick("snr_db", "0:2:40")),
            p_t=_parse_pt(pick("pt", "1e-3")),
            trials=int(pick("trials", 1000)),
            seed=int(pick("seed", 0)),
            n_fft=int(pick("nfft", 128)),
            n_f=int(pick("n_f", 12)),
            n_t=int(pick("n_t", 7)),
            granularity=str(pick("granularity", "subcarrier")),
            profile_file=pick("profile_file"),
            channel_file=pick("channel_file"),
            out=pick("out"),
            series_out=pick("series_out"),
            workers=int(pick("workers", 1)),
        )
    except ValueError as exc:
        parser.error(str(exc))


def _cmd_sweep(args, parser) -> int:
    cfg = _build_sweep_config(args, parser)
    try:
        points = run_sweep(cfg)
    except (ValueError, OSError) as exc:
        parser.error(str(exc))
    try:
        if cfg.out is None:
            write_csv(points, sys.stdout)
        else:
            with open(cfg.out, "w") as fh:
                write_csv(points, fh)
        if cfg.series_out is not None:
            Path(cfg.series_out).write_text(
                json.dumps(series_payload(cfg, points), indent=1) + "\n"
            )
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return 1
    return 0


def _cmd_validate_ber(args, parser) -> int:
    if args.symbols < 10_000:
        parser.error(f"--symbols must be >= 10000, got {args.symbols}")
    if args.tolerance < 0:
        parser.error("--tolerance must be non-negative")
    if args.seed < 0:
        parser.error("--seed must be non-negative")
    rows, all_ok = run_ber_validation(args.symbols, args.tolerance, args.seed)
    _print_validation_report(rows, all_ok, sys.stdout)
    return 0 if all_ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ofdmse",
        description="Spectral-efficiency evaluation of modulation-constrained "
                    "OFDM systems by BER-constrained bit loading.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="run a Monte Carlo throughput sweep")
    sweep.add_argument("--systems", help="comma list from: fb,cm,lte,mlte")
    sweep.add_argument("--snr-db", dest="snr_db",
                       help="START:STEP:STOP in dB, or a single value")
    sweep.add_argument("--pt", help="comma list of average-BER targets")
    sweep.add_argument("--trials", type=int, help="channel draws per cell")
    sweep.add_argument("--seed", type=int, help="master seed")
    sweep.add_argument("--nfft", type=int, help="DFT size for the channel")
    sweep.add_argument("--granularity", choices=("subcarrier", "block"),
                       help="per-position loading or one scheme per block")
    sweep.add_argument("--profile-file", dest="profile_file",
                       help="text map adding a custom system profile")
    sweep.add_argument("--channel-file", dest="channel_file",
                       help="power-delay profile replacing the built-in one")
    sweep.add_argument("--out", help="CSV path (default: stdout)")
    sweep.add_argument("--series-out", dest="series_out",
                       help="JSON per-SNR series for plotting")
    sweep.add_argument("--workers", type=int, help="worker processes")
    sweep.add_argument("--config", help="JSON file with defaults for any flag")
    sweep.set_defaults(n_f=None, n_t=None, handler=_cmd_sweep)

    vb = sub.add_parser("validate-ber",
                        help="check analytic BER models against simulation")
    vb.add_argument("--symbols", type=int, default=1_000_000,
                    help="baseline symbols per point (raised where BER is low)")
    vb.add_argument("--tolerance", type=float, default=0.10,
                    help="maximum relative disagreement")
    vb.add_argument("--seed", type=int, default=0)
    vb.set_defaults(handler=_cmd_validate_ber)

    args = parser.parse_args(argv)
    return args.handler(args, parser)


if __name__ == "__main__":
    sys.exit(main())
