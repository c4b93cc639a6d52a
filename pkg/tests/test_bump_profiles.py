import math

import numpy as np
import pytest

from sclab.bump_profiles import (
    RepresentabilityError,
    is_representable,
    log_limit_probe,
    make_bump,
    make_smooth_step,
    pair_with_bump,
    phi_gate,
    shift_amount,
    shifted_bump,
    step_n,
)
from sclab.scale_core import AnalyticTailFunction, GridFunction, grid_l2_inner


def _oracle_integral(fn, lo, hi, n=200001):
    """Independent quadrature oracle: trapezoid with one refinement step."""
    xs = np.linspace(lo, hi, n)
    coarse = np.trapezoid(fn(xs), dx=(hi - lo) / (n - 1))
    xs2 = np.linspace(lo, hi, 2 * n - 1)
    fine = np.trapezoid(fn(xs2), dx=(hi - lo) / (2 * n - 2))
    assert abs(fine - coarse) < 1e-9
    return fine


class TestBump:
    def test_unit_square_integral(self):
        b = make_bump()
        assert _oracle_integral(lambda x: b(x) ** 2, -1.1, 1.1) == pytest.approx(
            1.0, abs=1e-10
        )

    def test_normalization_against_oracle(self):
        b = make_bump()
        raw = _oracle_integral(
            lambda x: np.where(
                np.abs(x) < 1, np.exp(-1.0 / np.clip(1 - x**2, 1e-300, None)), 0.0
            )
            ** 2,
            -1.0,
            1.0,
        )
        assert b.normalization == pytest.approx(raw ** -0.5, rel=1e-9)

    def test_compact_support(self):
        b = make_bump()
        assert b(1.0) == 0.0 and b(-1.0) == 0.0
        assert b(1.5) == 0.0 and b(-2.0) == 0.0
        assert b(0.0) > 0.0

    def test_derivatives_vanish_outside(self):
        b = make_bump()
        for order in (1, 2, 3):
            assert b.derivative(1.2, order) == 0.0
            assert abs(b.derivative(0.3, order)) > 0.0

    def test_mass_exceeds_one(self):
        # the plain integral of the unit-square-normalized bump
        b = make_bump()
        mass = _oracle_integral(lambda x: b(x), -1.1, 1.1)
        assert mass == pytest.approx(1.21705593385, abs=1e-6)
        assert mass > 1.0


class TestSmoothStep:
    def test_plateaus(self):
        f = make_smooth_step()
        for x in (-3.0, 0.0, 0.5):
            assert f(x) == 1.0
        for x in (1.0, 2.0, 50.0):
            assert f(x) == 0.5

    def test_monotone_between_plateaus(self):
        f = make_smooth_step()
        xs = np.linspace(0.5, 1.0, 500)
        vals = [f(x) for x in xs]
        assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))

    def test_derivative_sup_constants(self):
        f = make_smooth_step()
        assert f.derivative_sup(1) == pytest.approx(4.0, rel=0.01)
        assert f.derivative_sup(2) == pytest.approx(47.7, rel=0.01)
        assert f.derivative_sup(3) == pytest.approx(1664.0, rel=0.01)


class TestStepN:
    def test_plateau_values(self):
        for n in range(2, 11):
            assert step_n(n, 1.0 / (n + 1), 0) == 1.0
            assert step_n(n, 1.0 / n, 0) == 0.5
            assert step_n(n, -0.7, 0) == 1.0
            assert step_n(n, 5.0, 0) == 0.5

    def test_derivative_support_window(self):
        for n in (2, 3, 5):
            lo, hi = 1.0 / (n + 1), 1.0 / n
            for k in (1, 2, 3):
                assert step_n(n, lo - 1e-6, k) == 0.0
                assert step_n(n, hi + 1e-6, k) == 0.0
            mid = 0.5 * (lo + hi)
            assert abs(step_n(n, mid, 1)) > 0.0

    def test_chain_rule_scaling(self):
        f = make_smooth_step()
        for n in (2, 4):
            for k in (1, 2):
                ts = np.linspace(1.0 / (n + 1), 1.0 / n, 2000)
                got = max(abs(step_n(n, t, k)) for t in ts)
                expected = (n * (n + 1) / 2.0) ** k * f.derivative_sup(k)
                assert got == pytest.approx(expected, rel=0.01)


class TestShiftedBump:
    def test_window_location_and_mass(self):
        for t in (0.3, 0.4, 0.5):
            b = shifted_bump(t, 0)
            center = -shift_amount(t)
            assert b.x0 < center - 1.0 < center + 1.0 < b.x_end
            assert grid_l2_inner(b, b) == pytest.approx(1.0, abs=1e-10)

    def test_representability_policy(self):
        assert is_representable(0.3)
        assert is_representable(0.0725)
        assert not is_representable(0.07)
        with pytest.raises(RepresentabilityError):
            shifted_bump(0.05, 0)

    def test_pairing_disjoint_is_exact_zero(self):
        f = GridFunction(-2.0, 1e-3, np.ones(4001))
        assert pair_with_bump(f, 0.4) == 0.0
        # unrepresentable shift but provably disjoint: still exact zero
        assert pair_with_bump(f, 0.01) == 0.0

    def test_pairing_unrepresentable_overlap_errors(self):
        # a window far enough left that it may reach the escaped bump
        f = GridFunction(-2e6, 1e-3, np.ones(10))
        with pytest.raises(RepresentabilityError):
            pair_with_bump(f, 0.07)

    def test_pairing_matches_direct_quadrature(self):
        t = 0.4
        b = shifted_bump(t, 0)
        f = shifted_bump(t, 1)
        assert pair_with_bump(f, t) == pytest.approx(grid_l2_inner(f, b), rel=1e-12)

    def test_tail_pairing_in_log_domain(self):
        tail = AnalyticTailFunction.inverse_square_tail(0.1)
        for t in (0.5, 0.4, 0.3):
            got = pair_with_bump(tail, t)
            shift = shift_amount(t)
            # dominated by the tail value at the bump location
            upper = -0.1 * (shift - 1.0) - 2.0 * math.log(shift - 1.0) + 1.0
            lower = -0.1 * (shift + 1.0) - 2.0 * math.log(shift + 1.0) - 1.0
            assert got.sign == 1
            assert lower <= got.logmag <= upper


class TestPhiGate:
    def test_vanishes_for_nonpositive(self):
        for t in (0.0, -0.5, -2.0):
            assert phi_gate(t).is_zero

    def test_known_value(self):
        assert phi_gate(0.5).logmag == pytest.approx(-math.exp(4.0), rel=1e-15)
        assert phi_gate(0.5).sign == 1

    def test_deep_underflow_stays_finite(self):
        g = phi_gate(0.01)
        assert g.sign == 1
        assert math.isfinite(g.logmag)

    def test_smooth_vanishing_of_derivatives(self):
        # log-domain bound on the k-th finite difference: it collapses as t -> 0
        for k in (1, 2, 3):
            prev = math.inf
            for t in (0.4, 0.3, 0.2, 0.1):
                h = t / 4.0
                stencil = [phi_gate(t + j * h) for j in range(-k, k + 1)]
                top = max(s.logmag for s in stencil if not s.is_zero)
                bound = top + k * math.log(2.0 / h)
                assert bound < prev
                prev = bound
            assert prev < -1e4


class TestLogLimitProbe:
    def test_strict_decrease_and_collapse(self):
        grid = [0.5, 0.4, 0.3, 0.25, 0.2, 0.15]
        vals = log_limit_probe(3, 3, 3, 0.2, grid)
        lms = [v.logmag for v in vals]
        assert all(b < a for a, b in zip(lms, lms[1:]))
        assert lms[-1] < -1e3

    def test_drop_between_half_and_point_three(self):
        vals = log_limit_probe(1, 1, 1, 0.2, [0.5, 0.3])
        assert vals[0].logmag - vals[1].logmag >= math.exp(1.0 / 0.09) / 2.0
