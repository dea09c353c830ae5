import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qrepeater import maps
from qrepeater import oracle as orc
from qrepeater.errors import (
    BelowThresholdError,
    PurificationImpossibleError,
    ValidationError,
    WorkingFidelityUnreachableError,
)
from qrepeater.oracle import NoiseParams
from qrepeater.states import BellDiagonalState, WernerState

PERFECT = NoiseParams.perfect()
GRID_VALUES = (1.0, 0.995, 0.99, 0.97)
GRID_FIDELITIES = (0.55, 0.7, 0.85, 0.97)


def eq_modified_bennett(f, eta, p2):
    """The published closed form, transcribed literally, as an independent check."""
    x = (1.0 - f) / 3.0
    alpha = eta ** 2 + (1 - eta) ** 2
    beta = 2 * eta * (1 - eta)
    extra = (1 - p2 ** 2) / (8 * p2 ** 2)
    num = (f * f + x * x) * alpha + (f * x + x * x) * beta + extra
    den = ((f * f + (2 / 3) * f * (1 - f) + (5 / 9) * (1 - f) ** 2) * alpha
           + (f * x + x * x) * 4 * beta + 4 * extra)
    return num / den, den


class TestConnectL:
    def test_length_one_is_identity_exactly(self):
        for f in (0.25, 0.3123, 0.5, 0.77, 1.0):
            for noise in (PERFECT, NoiseParams(0.9, 0.9, 0.9)):
                assert maps.connect_L(f, 1, noise) == f

    def test_perfect_everything(self):
        assert maps.connect_L(1.0, 5, PERFECT) == pytest.approx(1.0, abs=1e-15)

    def test_pinned_value(self):
        # frozen 64-bit value, cross-checked against the density-matrix oracle
        noise = NoiseParams.uniform(0.995)
        assert maps.connect_L(0.95, 2, noise) == pytest.approx(0.8882136761, abs=1e-10)

    def test_composition_matches_pairwise(self):
        # the Werner-restricted closed form composes: t parameters multiply
        noise = NoiseParams.uniform(0.99)
        f4 = maps.connect_L(0.93, 4, noise)
        f2 = maps.connect_L(0.93, 2, noise)
        werner_f2 = maps.connect_L(f2, 2, noise)
        # twirled pairwise composition reproduces the L=4 formula
        assert werner_f2 == pytest.approx(f4, abs=1e-12)

    def test_domain_errors(self):
        with pytest.raises(ValidationError):
            maps.connect_L(0.9, 0, PERFECT)
        with pytest.raises(ValidationError):
            maps.connect_L(0.1, 2, PERFECT)

    @given(st.floats(0.2501, 1.0), st.integers(2, 6))
    @settings(max_examples=60)
    def test_below_diagonal_with_imperfect_noise(self, f, length):
        noise = NoiseParams(0.999, 0.995, 0.995)
        assert maps.connect_L(f, length, noise) < f

    @given(st.floats(0.26, 0.99), st.floats(0.27, 1.0))
    @settings(max_examples=60)
    def test_strictly_increasing_in_fidelity(self, f1, f2):
        if abs(f1 - f2) < 1e-9:
            return
        lo, hi = sorted((f1, f2))
        noise = NoiseParams.uniform(0.99)
        assert maps.connect_L(lo, 3, noise) < maps.connect_L(hi, 3, noise)

    def test_decreasing_in_length(self):
        noise = NoiseParams.uniform(0.995)
        values = [maps.connect_L(0.95, length, noise) for length in range(1, 7)]
        assert all(a > b for a, b in zip(values, values[1:]))


class TestOracleEquivalence:
    def test_connect_matches_oracle_on_grid(self):
        worst = 0.0
        for f in GRID_FIDELITIES:
            werner = WernerState(f).to_bell_diagonal()
            for p1 in GRID_VALUES:
                for p2 in GRID_VALUES:
                    for eta in GRID_VALUES:
                        noise = NoiseParams(p1, p2, eta)
                        got = orc.oracle_connect(werner, werner, noise).fidelity
                        worst = max(worst, abs(got - maps.connect_L(f, 2, noise)))
        assert worst <= 1e-12

    def test_purify_bennett_matches_oracle_on_grid(self):
        worst_f = worst_p = 0.0
        for f in GRID_FIDELITIES:
            werner = WernerState(f).to_bell_diagonal()
            for p2 in GRID_VALUES:
                for eta in GRID_VALUES:
                    noise = NoiseParams(1.0, p2, eta)
                    p_succ, out = orc.oracle_purify(werner, werner, noise, "bennett")
                    ref = maps.purify_bennett(f, noise)
                    worst_f = max(worst_f, abs(out.fidelity - ref.out_fidelity))
                    worst_p = max(worst_p, abs(p_succ - ref.p_succ))
        assert worst_f <= 1e-12
        assert worst_p <= 1e-12

    def test_purify_deutsch_matches_oracle(self):
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(12):
            v1, v2 = rng.random(4), rng.random(4)
            s1 = BellDiagonalState(tuple(v1 / v1.sum()))
            s2 = BellDiagonalState(tuple(v2 / v2.sum()))
            for p2 in (1.0, 0.995, 0.97):
                for eta in (1.0, 0.995, 0.97):
                    noise = NoiseParams(1.0, p2, eta)
                    p_succ, out = orc.oracle_purify(s1, s2, noise, "deutsch")
                    ref, out_cf = maps.purify_deutsch(s1, s2, noise)
                    worst = max(worst, abs(p_succ - ref.p_succ))
                    worst = max(worst, max(
                        abs(a - b) for a, b in zip(out.coeffs, out_cf.coeffs)))
        assert worst <= 1e-12

    def test_connect_states_matches_untwirled_oracle(self):
        rng = np.random.default_rng(99)
        worst = 0.0
        for _ in range(8):
            v1, v2 = rng.random(4), rng.random(4)
            s1 = BellDiagonalState(tuple(v1 / v1.sum()))
            s2 = BellDiagonalState(tuple(v2 / v2.sum()))
            for noise in (PERFECT, NoiseParams(0.99, 0.97, 0.995), NoiseParams(0.97, 1.0, 0.97)):
                got = orc.oracle_connect(s1, s2, noise, twirl_output=False)
                want = maps.connect_states(s1, s2, noise)
                worst = max(worst, max(
                    abs(a - b) for a, b in zip(got.coeffs, want.coeffs)))
        assert worst <= 1e-12


class TestPurifyBennett:
    def test_matches_published_closed_form(self):
        for f in (0.55, 0.75, 0.9, 0.99):
            for p2 in (1.0, 0.995, 0.97):
                for eta in (1.0, 0.995, 0.97):
                    noise = NoiseParams(1.0, p2, eta)
                    res = maps.purify_bennett(f, noise)
                    f_ref, den = eq_modified_bennett(f, eta, p2)
                    assert res.out_fidelity == pytest.approx(f_ref, abs=1e-13)
                    # physical branch probability carries the gate factor
                    assert res.p_succ == pytest.approx(p2 ** 2 * den, abs=1e-13)

    def test_noiseless_reduction_on_fine_grid(self):
        for f in np.linspace(0.25, 1.0, 100):
            got = maps.purify_bennett(float(f), PERFECT)
            assert abs(got.out_fidelity - maps.eq_noiseless_bennett(float(f))) <= 1e-14

    def test_noiseless_fixed_points_by_direct_evaluation(self):
        assert maps.purify_bennett(0.5, PERFECT).out_fidelity == pytest.approx(0.5, abs=1e-15)
        res = maps.purify_bennett(1.0, PERFECT)
        assert res.out_fidelity == pytest.approx(1.0, abs=1e-15)
        assert res.p_succ == pytest.approx(1.0, abs=1e-15)

    def test_pinned_noisy_value(self):
        # frozen from the closed form; the oracle grid test covers agreement
        res = maps.purify_bennett(0.9, NoiseParams(1.0, 0.995, 0.995))
        assert res.out_fidelity == pytest.approx(0.921534013582337, abs=1e-14)
        assert res.p_succ == pytest.approx(0.86441038205, abs=1e-14)


class TestPurifyDeutsch:
    def test_perfect_pairs(self):
        perfect = BellDiagonalState((1.0, 0.0, 0.0, 0.0))
        outcome, out = maps.purify_deutsch(perfect, perfect, PERFECT)
        assert out.coeffs == (1.0, 0.0, 0.0, 0.0)
        assert outcome.p_succ == pytest.approx(1.0, abs=1e-15)

    def test_noiseless_werner_recursion_exact(self):
        # Werner 0.8 gives the rational image (145, 24, 2, 2)/173, p = 173/225
        state = WernerState(0.8).to_bell_diagonal()
        outcome, out = maps.purify_deutsch(state, state, PERFECT)
        assert out.coeffs[0] == pytest.approx(145 / 173, abs=1e-14)
        assert out.coeffs[1] == pytest.approx(24 / 173, abs=1e-14)
        assert out.coeffs[2] == pytest.approx(2 / 173, abs=1e-14)
        assert out.coeffs[3] == pytest.approx(2 / 173, abs=1e-14)
        assert outcome.p_succ == pytest.approx(173 / 225, abs=1e-14)

    def test_faster_than_bennett_under_noise(self):
        noise = NoiseParams.uniform(0.995)
        state = WernerState(0.9).to_bell_diagonal()
        _, out1 = maps.purify_deutsch(state, state, noise)
        outcome2, _ = maps.purify_deutsch(out1, out1, noise)
        f_b = maps.purify_bennett(0.9, noise).out_fidelity
        f_b2 = maps.purify_bennett(f_b, noise).out_fidelity
        assert outcome2.out_fidelity > f_b2


class TestPurifyWithAux:
    def test_aux_equals_target_reduces_to_symmetric(self):
        noise = NoiseParams.uniform(0.99)
        state = BellDiagonalState((0.9, 0.06, 0.025, 0.015))
        sym = maps.purify_deutsch(state, state, noise)
        asym = maps.purify_with_aux(state, state, noise, "deutsch")
        assert sym == asym

    def test_perfect_aux_never_reduces_werner_fidelity(self):
        perfect = BellDiagonalState((1.0, 0.0, 0.0, 0.0))
        for f in (0.3, 0.5, 0.8, 0.95):
            target = WernerState(f).to_bell_diagonal()
            outcome, _ = maps.purify_with_aux(target, perfect, PERFECT, "deutsch")
            assert outcome.out_fidelity >= f - 1e-12

    def test_iterated_aux_purification_converges_above_target(self):
        noise = NoiseParams.uniform(0.995)
        pi0 = maps.connect_L(0.96, 2, noise)
        aux = WernerState(pi0).to_bell_diagonal()
        stored = aux
        previous = 0.0
        for _ in range(60):
            outcome, stored = maps.purify_with_aux(stored, aux, noise, "deutsch")
            if stored.fidelity <= previous + 1e-13:
                break
            previous = stored.fidelity
        assert stored.fidelity > 0.955
        assert stored.fidelity > pi0


class TestFixedPoints:
    def test_noiseless_bennett(self):
        points = maps.fixed_points(maps.bennett_map(PERFECT))
        assert points.f_min == pytest.approx(0.5, abs=1e-10)
        assert points.f_max == pytest.approx(1.0, abs=1e-10)

    def test_imperfect_gate_regime(self):
        points = maps.fixed_points(maps.bennett_map(NoiseParams(1.0, 0.97, 1.0)))
        assert 0.5 < points.f_min < points.f_max < 1.0
        assert points.f_min == pytest.approx(0.5851724025220608, abs=1e-9)
        assert points.f_max == pytest.approx(0.9148275974779392, abs=1e-9)

    def test_fixed_points_satisfy_map(self):
        fmap = maps.bennett_map(NoiseParams(1.0, 0.98, 0.99))
        points = maps.fixed_points(fmap)
        assert fmap(points.f_min) == pytest.approx(points.f_min, abs=1e-9)
        assert fmap(points.f_max) == pytest.approx(points.f_max, abs=1e-9)

    def test_purification_impossible_at_low_gate_quality(self):
        # the map loses both diagonal crossings a little below p2 = 0.95
        with pytest.raises(PurificationImpossibleError):
            maps.fixed_points(maps.bennett_map(NoiseParams(1.0, 0.9, 1.0)))

    def test_threshold_scan_brackets_the_loss(self):
        feasible = []
        p2 = 0.97
        while p2 > 0.90:
            try:
                maps.fixed_points(maps.bennett_map(NoiseParams(1.0, p2, 1.0)))
                feasible.append(p2)
            except PurificationImpossibleError:
                break
            p2 = round(p2 - 0.005, 3)
        assert feasible and min(feasible) == pytest.approx(0.95, abs=1e-9)


class TestStaircase:
    def test_perfect_noise_at_unity_needs_no_steps(self):
        trace = maps.staircase(1.0, 2, PERFECT, "bennett")
        assert trace.m_max == 0
        assert trace.avg_pairs == 1.0
        assert trace.achieved_fidelity == 1.0

    @pytest.mark.parametrize("protocol", ["bennett", "deutsch"])
    def test_fidelities_strictly_increase(self, protocol):
        noise = NoiseParams.uniform(0.995)
        trace = maps.staircase(0.94, 2, noise, protocol)
        fids = [f for f, _ in trace.steps]
        assert all(a < b for a, b in zip(fids, fids[1:]))
        assert trace.achieved_fidelity >= 0.94

    def test_avg_pairs_bounded_by_two_to_steps(self):
        noise = NoiseParams.uniform(0.995)
        for f_work in (0.9, 0.94, 0.96):
            trace = maps.staircase(f_work, 2, noise, "bennett")
            assert trace.avg_pairs >= 2 ** trace.m_max

    def test_below_threshold_error(self):
        # p2 = 0.96 keeps fixed points but a long chain drops below f_min
        noise = NoiseParams(1.0, 0.96, 1.0)
        with pytest.raises(BelowThresholdError):
            maps.staircase(0.85, 16, noise)

    def test_unreachable_working_fidelity(self):
        noise = NoiseParams(1.0, 0.97, 1.0)  # attractor near 0.915
        with pytest.raises(WorkingFidelityUnreachableError):
            maps.staircase(0.95, 2, noise)

    def test_deutsch_staircase_carries_state(self):
        noise = NoiseParams.uniform(0.995)
        trace = maps.staircase(0.96, 2, noise, "deutsch")
        # non-Werner output: phase-flip coefficient dominates the tail
        assert trace.final_state.coeffs[1] > trace.final_state.coeffs[2]
        assert trace.m_max == 2
