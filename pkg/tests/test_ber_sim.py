"""Monte Carlo BER simulator tests, plus the model-vs-simulation agreement check."""

import numpy as np
import pytest

from ofdmse.ber_sim import MIN_SYMBOLS, SimConfig, simulate_ber
from ofdmse.modulation import (
    CATALOG,
    ModulationFamily,
    ModulationScheme,
    ber,
    min_snr_for,
)

PSK = ModulationFamily.PSK
QAM = ModulationFamily.QAM
ASK = ModulationFamily.ASK

NON_SILENT = [s for s in CATALOG if not s.silent]


def test_config_validation():
    bpsk = ModulationScheme(PSK, 2)
    with pytest.raises(ValueError):
        SimConfig(ModulationScheme(PSK, 1), 1.0)
    with pytest.raises(ValueError):
        SimConfig(bpsk, 0.0)
    with pytest.raises(ValueError):
        SimConfig(bpsk, -3.0)
    with pytest.raises(ValueError):
        SimConfig(bpsk, 1.0, n_symbols=MIN_SYMBOLS - 1)


def test_deterministic_for_fixed_seed():
    cfg = SimConfig(ModulationScheme(QAM, 16), 8.0, n_symbols=200_000, seed=7)
    assert simulate_ber(cfg) == simulate_ber(cfg)
    other = SimConfig(ModulationScheme(QAM, 16), 8.0, n_symbols=200_000, seed=8)
    assert simulate_ber(other) != simulate_ber(cfg)


def test_high_snr_gives_zero_errors():
    for s in NON_SILENT:
        p, _ = simulate_ber(SimConfig(s, 1e6, n_symbols=MIN_SYMBOLS, seed=1))
        assert p == 0.0, f"{s}: errors at gamma=1e6"


def test_bpsk_anchor_within_confidence():
    # Q(sqrt(2)) = 0.0786496..., one million symbols
    cfg = SimConfig(ModulationScheme(PSK, 2), 1.0, n_symbols=1_000_000, seed=3)
    p, ci = simulate_ber(cfg)
    expected = 0.078649603525142565
    assert abs(p - expected) < 3.0 * ci / 1.96, f"BPSK at 1.0: {p} vs {expected} (ci {ci})"


def test_qpsk_matches_bpsk_at_double_snr():
    # Gray QPSK carries two BPSK streams at half the per-bit energy
    p4, ci4 = simulate_ber(SimConfig(ModulationScheme(PSK, 4), 4.0, 400_000, seed=5))
    p2, ci2 = simulate_ber(SimConfig(ModulationScheme(PSK, 2), 2.0, 400_000, seed=6))
    assert abs(p4 - p2) < 3.0 * (ci4 + ci2), f"QPSK@4: {p4}, BPSK@2: {p2}"


def test_empirical_monotone_in_gamma():
    s = ModulationScheme(ASK, 4)
    gammas = [1.0, 4.0, 16.0, 64.0]
    bers = [simulate_ber(SimConfig(s, g, 200_000, seed=11))[0] for g in gammas]
    assert all(a > b for a, b in zip(bers, bers[1:])), f"not decreasing: {bers}"


@pytest.mark.parametrize("scheme", NON_SILENT, ids=str)
def test_models_track_simulation(scheme):
    """Closed forms within 10% of simulation wherever the model BER >= 1e-4."""
    targets = [0.3, 0.05, 5e-3, 3e-4]
    for t in targets:
        gamma = min_snr_for(scheme, t)
        analytic = ber(scheme, gamma)
        n = max(200_000, int(round(400.0 / (t * scheme.bits))))
        empirical, ci = simulate_ber(SimConfig(scheme, gamma, n, seed=17))
        rel = abs(empirical - analytic) / analytic
        assert rel < 0.10, (
            f"{scheme} at gamma={gamma:.4g}: model {analytic:.4g} "
            f"vs sim {empirical:.4g} (rel {rel:.1%}, ci {ci:.2g})"
        )
