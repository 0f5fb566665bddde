"""Allocator tests: weighted-average evaluation, greedy vs exhaustive oracle,
block mode, instance serialization."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ofdmse.channel import SnrGrid, draw_realization, snr_grid, tux_profile
from ofdmse.loading import (
    Allocation,
    block_allocate,
    evaluate_avg_ber,
    exhaustive_allocate,
    greedy_allocate,
    load_instance,
    position_ber_table,
    save_instance,
)
from ofdmse.modulation import CATALOG, ber, min_snr_for, scheme_from_name
from ofdmse.systems import ConstraintGrid, Role, build_profile

Q_SQRT2 = 0.078649603525142565  # BPSK BER at gamma = 1

BPSK = scheme_from_name("PSK2")
QAM16 = scheme_from_name("QAM16")
SILENT = scheme_from_name("PSK1")


def grid_of(names, n_f, n_t):
    it = iter(names)
    return tuple(tuple(scheme_from_name(next(it)) for _ in range(n_t)) for _ in range(n_f))


def data_grid(sets):
    """ConstraintGrid with the given allowed sets (plus a silent escape)."""
    allowed = tuple(
        tuple(frozenset(schemes) | {SILENT} for schemes in row) for row in sets
    )
    roles = tuple(tuple(Role.DATA for _ in row) for row in sets)
    return ConstraintGrid(allowed, roles)


def random_instance(rng, n_f=2, n_t=2, snr_db=12.0):
    real = draw_realization(tux_profile(), n_f, n_t, rng)
    return snr_grid(real, 10 ** (-snr_db / 10))


class TestEvaluateAvgBer:
    def test_all_silent_is_zero(self):
        snr = SnrGrid(gamma=np.ones((2, 3)))
        assert evaluate_avg_ber(grid_of(["PSK1"] * 6, 2, 3), snr) == 0.0

    def test_single_bpsk(self):
        snr = SnrGrid(gamma=np.array([[1.0]]))
        got = evaluate_avg_ber(((BPSK,),), snr)
        assert abs(got - Q_SQRT2) < 1e-14

    def test_equal_weight_mean(self):
        snr = SnrGrid(gamma=np.array([[1.0], [2.5]]))
        p1, p2 = ber(BPSK, 1.0), ber(BPSK, 2.5)
        got = evaluate_avg_ber(((BPSK,), (BPSK,)), snr)
        assert abs(got - (p1 + p2) / 2) < 1e-15

    def test_bit_weighted_mean(self):
        snr = SnrGrid(gamma=np.array([[1.0], [40.0]]))
        p1, p2 = ber(BPSK, 1.0), ber(QAM16, 40.0)
        got = evaluate_avg_ber(((BPSK,), (QAM16,)), snr)
        assert abs(got - (p1 + 4 * p2) / 5) < 1e-15

    def test_shape_mismatch(self):
        snr = SnrGrid(gamma=np.ones((2, 2)))
        with pytest.raises(ValueError):
            evaluate_avg_ber(((BPSK,),), snr)


class TestAllocationType:
    def test_bit_count_consistency(self):
        with pytest.raises(ValueError):
            Allocation(((BPSK,),), total_bits=2, avg_ber=0.01)
        with pytest.raises(ValueError):
            Allocation(((BPSK,),), total_bits=1, avg_ber=0.7)
        a = Allocation(((BPSK,),), total_bits=1, avg_ber=0.01)
        assert a.total_bits == 1


class TestGreedy:
    def test_saturates_at_high_snr(self):
        prof = build_profile("fb", 3, 2)
        snr = SnrGrid(gamma=np.full((3, 2), 1e6))
        a = greedy_allocate(snr, prof.grid, 1e-3)
        assert a.total_bits == 36
        assert all(str(s) == "QAM64" for row in a.schemes for s in row)

    def test_all_silent_at_zero_snr(self):
        prof = build_profile("fb", 3, 2)
        snr = SnrGrid(gamma=np.zeros((3, 2)))
        a = greedy_allocate(snr, prof.grid, 1e-3)
        assert a.total_bits == 0 and a.avg_ber == 0.0
        # canonical order-1 fallback is the lowest family allowed
        assert all(str(s) == "ASK1" for row in a.schemes for s in row)

    def test_single_position_threshold(self):
        need = min_snr_for(BPSK, 1e-3)
        grid = data_grid([[{BPSK}]])
        a = greedy_allocate(SnrGrid(gamma=np.array([[need * 1.01]])), grid, 1e-3)
        assert a.total_bits == 1
        a = greedy_allocate(SnrGrid(gamma=np.array([[need * 0.99]])), grid, 1e-3)
        assert a.total_bits == 0

    def test_family_tiebreak_prefers_psk_over_qam(self):
        # PSK4 and QAM4 cost exactly the same; the lower family must win
        qpsk, qam4 = scheme_from_name("PSK4"), scheme_from_name("QAM4")
        grid = data_grid([[{qpsk, qam4}]])
        snr = SnrGrid(gamma=np.array([[100.0]]))
        a = greedy_allocate(snr, grid, 1e-3)
        assert a.schemes[0][0] == qpsk
        x = exhaustive_allocate(snr, grid, 1e-3)
        assert x.schemes[0][0] == qpsk

    def test_avg_matches_full_recomputation(self):
        rng = np.random.default_rng(11)
        prof = build_profile("fb", 3, 3)
        for _ in range(10):
            snr = random_instance(rng, 3, 3)
            a = greedy_allocate(snr, prof.grid, 1e-3)
            full = evaluate_avg_ber(a.schemes, snr)
            assert a.avg_ber == pytest.approx(full, rel=1e-12, abs=0.0)
            assert a.avg_ber <= 1e-3

    def test_locally_maximal(self):
        rng = np.random.default_rng(3)
        prof = build_profile("fb", 2, 2)
        checked = 0
        for _ in range(10):
            snr = random_instance(rng)
            a = greedy_allocate(snr, prof.grid, 1e-3)
            for k in range(2):
                for l in range(2):
                    cur = a.schemes[k][l]
                    for s in prof.grid.allowed[k][l]:
                        if s.bits <= cur.bits:
                            continue
                        trial = [list(row) for row in a.schemes]
                        trial[k][l] = s
                        assert evaluate_avg_ber(trial, snr) > 1e-3
                        checked += 1
        assert checked > 0

    def test_deterministic_and_table_reuse(self):
        rng = np.random.default_rng(9)
        prof = build_profile("mlte")
        snr = random_instance(rng, 12, 7, snr_db=18.0)
        a = greedy_allocate(snr, prof.grid, 1e-3)
        b = greedy_allocate(snr, prof.grid, 1e-3)
        c = greedy_allocate(snr, prof.grid, 1e-3, ber_table=position_ber_table(snr))
        assert a == b == c

    def test_input_validation(self):
        prof = build_profile("fb", 2, 2)
        snr = SnrGrid(gamma=np.ones((2, 2)))
        with pytest.raises(ValueError):
            greedy_allocate(snr, prof.grid, 0.0)
        with pytest.raises(ValueError):
            greedy_allocate(snr, prof.grid, 0.5)
        with pytest.raises(ValueError):
            greedy_allocate(SnrGrid(gamma=np.ones((2, 3))), prof.grid, 1e-3)


class TestExhaustiveOracle:
    def test_single_position(self):
        grid = data_grid([[{BPSK}]])
        snr = SnrGrid(gamma=np.array([[50.0]]))
        x = exhaustive_allocate(snr, grid, 1e-3)
        assert x.total_bits == 1 and x.schemes[0][0] == BPSK

    def test_refuses_large_search_space(self):
        prof = build_profile("fb")  # 13^84 assignments
        snr = SnrGrid(gamma=np.ones((12, 7)))
        with pytest.raises(ValueError, match="search space"):
            exhaustive_allocate(snr, prof.grid, 1e-3)

    def test_greedy_never_beats_oracle(self):
        rng = np.random.default_rng(21)
        prof = build_profile("fb", 2, 2)
        gaps = []
        for _ in range(15):
            snr = random_instance(rng)
            for p_t in (1e-2, 1e-3):
                g = greedy_allocate(snr, prof.grid, p_t)
                x = exhaustive_allocate(snr, prof.grid, p_t)
                assert g.total_bits <= x.total_bits
                assert x.avg_ber <= p_t
                assert evaluate_avg_ber(x.schemes, snr) == pytest.approx(
                    x.avg_ber, rel=1e-12, abs=0.0
                )
                gaps.append(x.total_bits - g.total_bits)
        assert min(gaps) >= 0

    def test_relaxation_monotonicity(self):
        rng = np.random.default_rng(31)
        fb = build_profile("fb", 2, 2)
        cm = build_profile("cm", 2, 2)
        for _ in range(8):
            snr = random_instance(rng)
            wide = exhaustive_allocate(snr, fb.grid, 1e-3)
            narrow = exhaustive_allocate(snr, cm.grid, 1e-3)
            assert wide.total_bits >= narrow.total_bits

    def test_p_t_monotonicity(self):
        rng = np.random.default_rng(41)
        prof = build_profile("fb", 2, 2)
        for _ in range(8):
            snr = random_instance(rng)
            prev = -1
            for p_t in (1e-4, 1e-3, 1e-2, 1e-1):
                x = exhaustive_allocate(snr, prof.grid, p_t)
                assert x.total_bits >= prev
                prev = x.total_bits


class TestBlockMode:
    def test_uniform_scheme_at_high_snr(self):
        lte = build_profile("lte")
        snr = SnrGrid(gamma=np.full((12, 7), 1e6))
        a = block_allocate(snr, lte.grid, 1e-3)
        assert a.total_bits == 480  # 64-QAM on the 80 non-pilot positions
        assert str(a.schemes[1][0]) == "QAM64"
        assert a.schemes[0][0].silent  # pilot position stays silent

    def test_silent_when_infeasible(self):
        prof = build_profile("cm", 2, 2)
        a = block_allocate(SnrGrid(gamma=np.zeros((2, 2))), prof.grid, 1e-3)
        assert a.total_bits == 0

    def test_feasible_and_consistent(self):
        rng = np.random.default_rng(51)
        for name in ("fb", "cm", "lte", "mlte"):
            prof = build_profile(name)
            snr = random_instance(rng, 12, 7, snr_db=22.0)
            a = block_allocate(snr, prof.grid, 1e-3)
            assert a.avg_ber <= 1e-3
            assert evaluate_avg_ber(a.schemes, snr) == pytest.approx(
                a.avg_ber, rel=1e-12, abs=0.0
            )
            # one non-silent scheme across the whole block
            used = {s for row in a.schemes for s in row if not s.silent}
            assert len(used) <= 1

    def test_block_never_beats_oracle(self):
        rng = np.random.default_rng(61)
        prof = build_profile("fb", 2, 2)
        for _ in range(8):
            snr = random_instance(rng)
            b = block_allocate(snr, prof.grid, 1e-3)
            x = exhaustive_allocate(snr, prof.grid, 1e-3)
            assert b.total_bits <= x.total_bits


class TestInstanceRoundTrip:
    def test_save_load(self, tmp_path):
        rng = np.random.default_rng(71)
        prof = build_profile("mlte", 12, 7)
        snr = random_instance(rng, 12, 7)
        path = tmp_path / "instance.json"
        save_instance(path, snr, prof.grid, 1e-3)
        snr2, grid2, p_t2 = load_instance(path)
        np.testing.assert_array_equal(snr.gamma, snr2.gamma)
        assert grid2 == prof.grid
        assert p_t2 == 1e-3
        a = greedy_allocate(snr, prof.grid, 1e-3)
        b = greedy_allocate(snr2, grid2, p_t2)
        assert a == b


@settings(max_examples=25, deadline=None)
@given(
    gammas=st.lists(
        st.floats(min_value=1e-2, max_value=1e5), min_size=4, max_size=4
    ),
    p_t=st.sampled_from([1e-2, 1e-3, 1e-4]),
)
def test_greedy_feasible_and_dominated(gammas, p_t):
    snr = SnrGrid(gamma=np.array(gammas).reshape(2, 2))
    grid = build_profile("fb", 2, 2).grid
    g = greedy_allocate(snr, grid, p_t)
    assert g.avg_ber <= p_t
    x = exhaustive_allocate(snr, grid, p_t)
    assert g.total_bits <= x.total_bits
