"""Bit loading over a faded resource grid under an average-BER constraint.

Given the per-position SNR grid and a ConstraintGrid of allowed schemes, the
loader picks one scheme per position to maximize the block's total bits while
keeping the bit-weighted mean of instantaneous BERs at or below a target p_t.
Silent (order-1) positions carry no bits and add nothing to the average, so
the empty allocation is always feasible.

Three solvers are provided:

  greedy_allocate      incremental best-move-first heuristic, the main path
  exhaustive_allocate  brute-force oracle, refuses search spaces above 10^7
  block_allocate       one scheme for the whole grid (coarse signalling mode)

Positions are ordered time-major, pos = l * n_f + k, and all tie-breaks are
total orders, so every solver is deterministic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import SnrGrid
from .modulation import (
    CATALOG,
    CATALOG_BITS,
    N_SCHEMES,
    ModulationScheme,
    ber,
    scheme_from_name,
)
from .systems import ConstraintGrid

EXHAUSTIVE_LIMIT = 10_000_000

#: Assignments evaluated per block of the exhaustive search.
_CHUNK = 1 << 17

#: Catalog rows per positive bits-per-symbol level, family-ascending.
_LEVELS = tuple(
    (b, tuple(i for i, s in enumerate(CATALOG) if s.bits == b))
    for b in sorted({s.bits for s in CATALOG if s.bits})
)

_SILENT_ROWS = tuple(i for i, s in enumerate(CATALOG) if s.silent)


@dataclass(frozen=True)
class Allocation:
    """A committed scheme choice per position with its score.

    ``schemes[k][l]`` is the modulation used at subcarrier k, symbol l.
    ``avg_ber`` is the bit-weighted mean instantaneous BER of the loaded
    positions (0.0 when nothing is loaded).
    """

    schemes: tuple[tuple[ModulationScheme, ...], ...]
    total_bits: int
    avg_ber: float

    def __post_init__(self):
        counted = sum(s.bits for row in self.schemes for s in row)
        if counted != self.total_bits:
            raise ValueError(
                f"total_bits {self.total_bits} != {counted} counted from schemes"
            )
        if not 0.0 <= self.avg_ber <= 0.5:
            raise ValueError(f"avg_ber out of range: {self.avg_ber!r}")


def _flat_gamma(snr: SnrGrid) -> np.ndarray:
    # time-major flatten: entry p = l * n_f + k
    return np.ascontiguousarray(np.asarray(snr.gamma, dtype=float).T).ravel()


def position_ber_table(snr: SnrGrid) -> np.ndarray:
    """Instantaneous BER of every catalog scheme at every position.

    Returns shape (n_schemes, n_f * n_t), time-major positions; silent rows
    are zero.  Computing this once and passing it to the allocators lets
    several constraint grids share one SNR draw cheaply.
    """
    gamma = _flat_gamma(snr)
    table = np.zeros((N_SCHEMES, gamma.size))
    for i, s in enumerate(CATALOG):
        if not s.silent:
            table[i] = ber(s, gamma)
    return table


def evaluate_avg_ber(schemes, snr: SnrGrid) -> float:
    """Bit-weighted mean instantaneous BER of an assignment:
    sum(bits * ber) / sum(bits) over the non-silent positions."""
    gamma = np.asarray(snr.gamma, dtype=float)
    n_f, n_t = gamma.shape
    if len(schemes) != n_f or any(len(row) != n_t for row in schemes):
        raise ValueError("scheme grid shape does not match the SNR grid")
    weighted = np.zeros(n_f * n_t)
    total_bits = 0
    for k, row in enumerate(schemes):
        for l, s in enumerate(row):
            if s.silent:
                continue
            weighted[l * n_f + k] = s.bits * ber(s, float(gamma[k, l]))
            total_bits += s.bits
    if total_bits == 0:
        return 0.0
    return float(np.sum(weighted) / total_bits)


def flat_mask(constraints: ConstraintGrid) -> np.ndarray:
    # (n_schemes, n_f, n_t) -> (n_schemes, N) in time-major position order
    mask = constraints.allowed_mask
    return mask.transpose(0, 2, 1).reshape(N_SCHEMES, -1)


def _candidate_moves(mask, cost):
    """Prune the move set to one candidate per (position, bits level).

    For equal bits at one position only the cheapest scheme can ever win
    (ties go to the lowest family, matching np.argmin's first-hit rule on
    family-ascending rows), so the rest are dropped up front.
    """
    n = mask.shape[1]
    pos_parts, idx_parts = [], []
    for _bits, rows in _LEVELS:
        rows = list(rows)
        level_cost = np.where(mask[rows], cost[rows], np.inf)
        pick = np.argmin(level_cost, axis=0)
        have = np.isfinite(level_cost[pick, np.arange(n)])
        pos_parts.append(np.nonzero(have)[0])
        idx_parts.append(np.asarray(rows)[pick[have]])
    pos = np.concatenate(pos_parts)
    idx = np.concatenate(idx_parts)
    return pos, idx, CATALOG_BITS[idx], cost[idx, pos]


def _initial_silent(mask) -> np.ndarray:
    init = np.full(mask.shape[1], -1)
    for row in reversed(_SILENT_ROWS):
        init = np.where(mask[row], row, init)
    if np.any(init < 0):
        raise ValueError("a position has no order-1 scheme to fall back to")
    return init


def _greedy_core(mask, cost, p_t):
    """Run the incremental loop; returns (scheme index per position, S, W).

    S is the running sum of bits * ber over positions (recomputed in full
    after every commit so it cannot drift from evaluate_avg_ber), W the
    running bit total.
    """
    cand_pos, cand_idx, cand_bits, cand_cost = _candidate_moves(mask, cost)
    cur_idx = _initial_silent(mask)
    n = mask.shape[1]
    cur_bits = np.zeros(n, dtype=np.int64)
    cur_cost = np.zeros(n)
    alive = np.ones(cand_pos.size, dtype=bool)
    s_sum, w_sum = 0.0, 0
    while True:
        cur_b = cur_bits[cand_pos]
        up = alive & (cand_bits > cur_b)
        sel = np.nonzero(up)[0]
        if sel.size == 0:
            break
        w_new = w_sum + (cand_bits[sel] - cur_b[sel])
        avg_new = (s_sum + cand_cost[sel] - cur_cost[cand_pos[sel]]) / w_new
        feas = avg_new <= p_t
        sel, avg_new = sel[feas], avg_new[feas]
        if sel.size == 0:
            break
        # greatest bit gain, then lowest resulting average, then first position;
        # the per-level pruning already settled family ties
        gain = cand_bits[sel] - cur_bits[cand_pos[sel]]
        top = gain == gain.max()
        sel, avg_new = sel[top], avg_new[top]
        best = avg_new == avg_new.min()
        sel = sel[best]
        j = sel[np.argmin(cand_pos[sel])]
        p = cand_pos[j]
        old = cur_idx[p], cur_bits[p], cur_cost[p]
        cur_idx[p] = cand_idx[j]
        cur_bits[p] = cand_bits[j]
        cur_cost[p] = cand_cost[j]
        s_full = float(np.sum(cur_cost))
        w_full = int(cur_bits.sum())
        if s_full / w_full > p_t:
            # the incremental screen was optimistic by rounding; drop the move
            cur_idx[p], cur_bits[p], cur_cost[p] = old
            alive[j] = False
            continue
        s_sum, w_sum = s_full, w_full
    return cur_idx, s_sum, w_sum


def _to_allocation(idx_flat, n_f, n_t, s_sum, w_sum) -> Allocation:
    schemes = tuple(
        tuple(CATALOG[idx_flat[l * n_f + k]] for l in range(n_t))
        for k in range(n_f)
    )
    avg = s_sum / w_sum if w_sum else 0.0
    return Allocation(schemes=schemes, total_bits=int(w_sum), avg_ber=float(avg))


def _check_shapes(snr: SnrGrid, constraints: ConstraintGrid, p_t: float):
    gamma = np.asarray(snr.gamma, dtype=float)
    if gamma.shape != (constraints.n_f, constraints.n_t):
        raise ValueError(
            f"SNR grid {gamma.shape} does not match constraints "
            f"({constraints.n_f}, {constraints.n_t})"
        )
    if not 0.0 < p_t < 0.5:
        raise ValueError(f"p_t must lie in (0, 0.5), got {p_t!r}")


def greedy_allocate(
    snr: SnrGrid,
    constraints: ConstraintGrid,
    p_t: float,
    ber_table: np.ndarray | None = None,
) -> Allocation:
    """Incremental bit loading: best feasible single-position upgrade first.

    Starts all-silent and repeatedly commits the move (position changed to an
    allowed scheme with strictly more bits) that gains the most bits while
    keeping the average BER at or below p_t; ties prefer the lowest resulting
    average, then the earliest position time-major, then the lowest family.
    Stops when no move is feasible, which leaves a locally maximal
    allocation.

    ``ber_table`` may carry a precomputed position_ber_table(snr).
    """
    _check_shapes(snr, constraints, p_t)
    if ber_table is None:
        ber_table = position_ber_table(snr)
    cost = CATALOG_BITS[:, None] * ber_table
    idx, s_sum, w_sum = _greedy_core(flat_mask(constraints), cost, p_t)
    return _to_allocation(idx, constraints.n_f, constraints.n_t, s_sum, w_sum)


def greedy_total_bits(mask, cost, p_t) -> int:
    """Greedy bit total from prebuilt flat tables, skipping Allocation wrap.

    The batch sweep path: one position_ber_table serves every system's grid.
    """
    _idx, _s, w_sum = _greedy_core(mask, cost, p_t)
    return int(w_sum)


def exhaustive_allocate(
    snr: SnrGrid,
    constraints: ConstraintGrid,
    p_t: float,
    ber_table: np.ndarray | None = None,
) -> Allocation:
    """Enumerate every assignment; oracle for small grids.

    Maximizes total bits, breaking ties by lowest average BER and then by
    first-enumerated assignment (allowed schemes in catalog order, position
    p = l * n_f + k varying fastest at the highest p).  Refuses search
    spaces larger than EXHAUSTIVE_LIMIT assignments.
    """
    _check_shapes(snr, constraints, p_t)
    mask = flat_mask(constraints)
    n = mask.shape[1]
    options = [np.nonzero(mask[:, p])[0] for p in range(n)]
    sizes = np.array([o.size for o in options], dtype=np.int64)
    total = math.prod(int(s) for s in sizes)  # exact: 13^84 overflows int64
    if total > EXHAUSTIVE_LIMIT:
        raise ValueError(
            f"search space {total} exceeds the exhaustive bound {EXHAUSTIVE_LIMIT}"
        )
    if ber_table is None:
        ber_table = position_ber_table(snr)
    cost = CATALOG_BITS[:, None] * ber_table
    # mixed-radix digits: position 0 is the most significant, so the first
    # feasible id found at the best score is also first in position order
    strides = np.ones(n, dtype=np.int64)
    strides[:-1] = np.cumprod(sizes[::-1], dtype=np.int64)[::-1][1:]
    lut = np.zeros((n, int(sizes.max())), dtype=np.int64)
    for p, opt in enumerate(options):
        lut[p, : opt.size] = opt
    cols = np.arange(n)
    best = (-1, np.inf, 0.0, None)  # (bits, avg, weighted sum, scheme indices)
    for start in range(0, total, _CHUNK):
        ids = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        digits = (ids[:, None] // strides[None, :]) % sizes[None, :]
        sel = lut[cols[None, :], digits]
        w = CATALOG_BITS[sel].sum(axis=1)
        weighted = np.ascontiguousarray(cost[sel, cols[None, :]]).sum(axis=1)
        avg = np.where(w > 0, weighted / np.maximum(w, 1), 0.0)
        feas = np.nonzero(avg <= p_t)[0]
        if feas.size == 0:
            continue
        w_f = w[feas]
        top = feas[w_f == w_f.max()]
        j = top[np.argmin(avg[top])]
        if int(w[j]) > best[0] or (int(w[j]) == best[0] and float(avg[j]) < best[1]):
            best = (int(w[j]), float(avg[j]), float(weighted[j]), sel[j].copy())
    w_best, _avg_best, s_best, sel_best = best
    return _to_allocation(
        sel_best, constraints.n_f, constraints.n_t, s_best, w_best
    )


def _block_core(mask, cost, p_t):
    """Best single scheme for the whole block; returns (idx per position, S, W)."""
    silent = _initial_silent(mask)
    best_idx, best_w, best_s = None, 0, 0.0
    for i, s in enumerate(CATALOG):
        if s.silent:
            continue
        loaded = mask[i]
        w = int(s.bits * np.count_nonzero(loaded))
        if w == 0 or w < best_w:
            continue
        weighted = float(np.sum(np.where(loaded, cost[i], 0.0)))
        avg = weighted / w
        if avg > p_t:
            continue
        if best_idx is None or w > best_w or avg < best_s / best_w:
            best_idx, best_w, best_s = i, w, weighted
    if best_idx is None:
        return silent, 0.0, 0
    return np.where(mask[best_idx], best_idx, silent), best_s, best_w


def block_total_bits(mask, cost, p_t) -> int:
    """Block-mode bit total from prebuilt flat tables (batch sweep path)."""
    _idx, _s, w_sum = _block_core(mask, cost, p_t)
    return int(w_sum)


def block_allocate(
    snr: SnrGrid,
    constraints: ConstraintGrid,
    p_t: float,
    ber_table: np.ndarray | None = None,
) -> Allocation:
    """Coarse mode: one scheme for the whole block.

    The chosen scheme is applied at every position whose allowed set contains
    it; the rest stay silent.  Candidates are scored like the other solvers
    (most bits, then lowest average, then catalog order).
    """
    _check_shapes(snr, constraints, p_t)
    mask = flat_mask(constraints)
    if ber_table is None:
        ber_table = position_ber_table(snr)
    cost = CATALOG_BITS[:, None] * ber_table
    idx, s_sum, w_sum = _block_core(mask, cost, p_t)
    return _to_allocation(idx, constraints.n_f, constraints.n_t, s_sum, w_sum)


def save_instance(path, snr: SnrGrid, constraints: ConstraintGrid, p_t: float):
    """Serialize an allocation problem instance for regression fixtures."""
    payload = {
        "p_t": p_t,
        "gamma": np.asarray(snr.gamma, dtype=float).tolist(),
        "roles": [[r.value for r in row] for row in constraints.roles],
        "allowed": [
            [sorted(str(s) for s in schemes) for schemes in row]
            for row in constraints.allowed
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=1))


def load_instance(path):
    """Inverse of save_instance: returns (SnrGrid, ConstraintGrid, p_t)."""
    from .systems import Role

    payload = json.loads(Path(path).read_text())
    snr = SnrGrid(gamma=np.asarray(payload["gamma"], dtype=float))
    allowed = tuple(
        tuple(frozenset(scheme_from_name(n) for n in names) for names in row)
        for row in payload["allowed"]
    )
    roles = tuple(
        tuple(Role(value) for value in row) for row in payload["roles"]
    )
    return snr, ConstraintGrid(allowed, roles), float(payload["p_t"])
