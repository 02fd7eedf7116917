import math

import numpy as np
import pytest

from careerdp.betadist import BetaParams, posterior_mean
from careerdp.finite import (
    FiniteHorizonSpec,
    FinitePolicy,
    UnreachableStateError,
    branch_wages,
    solve_finite,
    value_at,
)
from careerdp.model import (
    Preferences,
    PricingRegime,
    solve_cutoff,
    utility,
    zero_continuation,
)

CRRA_HALF = Preferences.crra(0.5)

# terminal closed forms at rho = 0.5
NAIVE_11 = math.sqrt(0.5)
NAIVE_21 = math.sqrt(2 / 3)
NAIVE_12 = math.sqrt(1 / 3)
SOPH_11 = 0.5
SOPH_21 = 2 / 3
SOPH_12 = (4.0 - math.sqrt(7.0)) / 3.0

# three-period reference values at delta = 0.95, prior (1,1), rho = 0.5,
# computed by an independent quadrature + scalar-root-finder recursion
DATE1_NAIVE_11 = 0.65575448145039006
DATE1_SOPH_11 = 0.417762473045111
DATE1_SOPH_21 = 0.610415660283316
DATE1_SOPH_12 = 0.384317133983252
DATE1_SOPH_WAGE_UP = 0.406943773522211
DATE1_SOPH_WAGE_DN = 0.176922526287133


def three_period(regime):
    spec = FiniteHorizonSpec(3, BetaParams(1, 1), 0.95, CRRA_HALF, regime)
    return solve_finite(spec)


class TestSpecValidation:
    def test_periods_positive_int(self):
        for bad in [0, -1]:
            with pytest.raises(ValueError):
                FiniteHorizonSpec(bad, BetaParams(1, 1), 0.9, CRRA_HALF, PricingRegime.NAIVE)

    def test_delta_domain(self):
        for bad in [-0.1, 1.0, 1.5]:
            with pytest.raises(ValueError):
                FiniteHorizonSpec(2, BetaParams(1, 1), bad, CRRA_HALF, PricingRegime.NAIVE)
        FiniteHorizonSpec(2, BetaParams(1, 1), 0.0, CRRA_HALF, PricingRegime.NAIVE)


class TestTerminalTable:
    def test_naive_closed_forms(self):
        spec = FiniteHorizonSpec(1, BetaParams(1, 1), 0.95, CRRA_HALF, PricingRegime.NAIVE)
        pol = solve_finite(spec)
        cw = pol.cutoff_wage(0, BetaParams(1, 1))
        assert cw.cutoff == pytest.approx(NAIVE_11, abs=1e-9)
        assert cw.wage == pytest.approx(0.5, rel=1e-15)

    def test_sophisticated_closed_forms(self):
        for prior, target in [
            (BetaParams(1, 1), SOPH_11),
            (BetaParams(2, 1), SOPH_21),
            (BetaParams(1, 2), SOPH_12),
        ]:
            spec = FiniteHorizonSpec(1, prior, 0.95, CRRA_HALF, PricingRegime.SOPHISTICATED)
            cw = solve_finite(spec).cutoff_wage(0, prior)
            assert cw.cutoff == pytest.approx(target, abs=1e-9)

    def test_terminal_value_semantics(self):
        spec = FiniteHorizonSpec(1, BetaParams(1, 1), 0.95, CRRA_HALF, PricingRegime.NAIVE)
        pol = solve_finite(spec)
        cw = pol.cutoff_wage(0, BetaParams(1, 1))
        # above the cutoff the worker self-employs and the value is theta
        assert pol.value(0, 0.9, BetaParams(1, 1)) == pytest.approx(0.9, rel=1e-15)
        # at or below it the worker takes the wage
        assert pol.value(0, 0.3, BetaParams(1, 1)) == pytest.approx(
            utility(CRRA_HALF, cw.wage), rel=1e-12
        )


class TestGoldenThreePeriod:
    def test_date1_cutoffs(self):
        naive = three_period(PricingRegime.NAIVE)
        soph = three_period(PricingRegime.SOPHISTICATED)
        assert naive.cutoff_wage(1, BetaParams(1, 1)).cutoff == pytest.approx(
            DATE1_NAIVE_11, abs=1e-8
        )
        assert soph.cutoff_wage(1, BetaParams(1, 1)).cutoff == pytest.approx(
            DATE1_SOPH_11, abs=1e-8
        )
        assert soph.cutoff_wage(1, BetaParams(2, 1)).cutoff == pytest.approx(
            DATE1_SOPH_21, abs=1e-8
        )
        assert soph.cutoff_wage(1, BetaParams(1, 2)).cutoff == pytest.approx(
            DATE1_SOPH_12, abs=1e-8
        )

    def test_date1_naive_cutoff_solves_its_quadratic(self):
        # with two periods to go the naive cutoff at (1,1) is the root in
        # [sqrt(1/3), sqrt(1/2)] of
        #   d*th^2 - (1 + d + d*sqrt(2/3))*th + (1 + d)*sqrt(1/2) = 0
        # derived by substituting the terminal closed forms into the
        # indifference condition
        d = 0.95
        coeffs = [d, -(1.0 + d + d * NAIVE_21), (1.0 + d) * NAIVE_11]
        roots = [r for r in np.roots(coeffs) if NAIVE_12 <= r <= NAIVE_11]
        assert len(roots) == 1
        pol = three_period(PricingRegime.NAIVE)
        assert pol.cutoff_wage(1, BetaParams(1, 1)).cutoff == pytest.approx(
            float(roots[0]), abs=1e-8
        )

    def test_date1_wages(self):
        naive = three_period(PricingRegime.NAIVE)
        soph = three_period(PricingRegime.SOPHISTICATED)
        assert naive.cutoff_wage(1, BetaParams(2, 1)).wage == pytest.approx(2 / 3, rel=1e-15)
        assert naive.cutoff_wage(1, BetaParams(1, 2)).wage == pytest.approx(1 / 3, rel=1e-15)
        assert soph.cutoff_wage(1, BetaParams(2, 1)).wage == pytest.approx(
            DATE1_SOPH_WAGE_UP, abs=5e-8
        )
        assert soph.cutoff_wage(1, BetaParams(1, 2)).wage == pytest.approx(
            DATE1_SOPH_WAGE_DN, abs=5e-8
        )

    def test_terminal_row_matches_one_period_solve(self):
        soph = three_period(PricingRegime.SOPHISTICATED)
        for prior, target in [
            (BetaParams(1, 1), SOPH_11),
            (BetaParams(2, 1), SOPH_21),
            (BetaParams(1, 2), SOPH_12),
        ]:
            assert soph.cutoff_wage(2, prior).cutoff == pytest.approx(target, abs=1e-9)

    def test_states_enumeration(self):
        pol = three_period(PricingRegime.NAIVE)
        assert pol.states(0) == [BetaParams(1, 1)]
        assert pol.states(2) == [
            BetaParams(1, 1),
            BetaParams(1, 2),
            BetaParams(1, 3),
            BetaParams(2, 1),
            BetaParams(2, 2),
            BetaParams(3, 1),
        ]


class TestPolicyQueries:
    def test_date_bounds(self):
        pol = three_period(PricingRegime.NAIVE)
        for bad in [-1, 3]:
            with pytest.raises(ValueError):
                pol.cutoff_wage(bad, BetaParams(1, 1))

    def test_unreachable_states(self):
        pol = three_period(PricingRegime.NAIVE)
        with pytest.raises(UnreachableStateError):
            pol.cutoff_wage(0, BetaParams(2, 1))  # no outcome yet
        with pytest.raises(UnreachableStateError):
            pol.cutoff_wage(1, BetaParams(2, 2))  # needs two outcomes
        with pytest.raises(UnreachableStateError):
            pol.cutoff_wage(1, BetaParams(1.5, 1))  # off the lattice
        with pytest.raises(UnreachableStateError):
            pol.cutoff_wage(1, BetaParams(0.5, 1))  # below the prior

    def test_branch_wages_maps_histories(self):
        soph = three_period(PricingRegime.SOPHISTICATED)
        assert branch_wages(soph, 1, [True]).wage == pytest.approx(
            DATE1_SOPH_WAGE_UP, abs=5e-8
        )
        assert branch_wages(soph, 1, [False]).wage == pytest.approx(
            DATE1_SOPH_WAGE_DN, abs=5e-8
        )
        assert branch_wages(soph, 1, []) == soph.cutoff_wage(1, BetaParams(1, 1))
        assert branch_wages(soph, 2, [1, 0]) == soph.cutoff_wage(2, BetaParams(2, 2))

    def test_branch_wages_history_too_long(self):
        pol = three_period(PricingRegime.NAIVE)
        with pytest.raises(ValueError):
            branch_wages(pol, 1, [True, False])

    def test_value_self_consistent(self):
        # the stored value must equal the better of the two branch utilities
        # recomputed from the policy tables themselves
        for regime in PricingRegime:
            pol = three_period(regime)
            for theta in [0.0, 0.17, 0.41, 0.6557, 0.83, 1.0]:
                for date in [0, 1]:
                    for state in pol.states(date):
                        cw = pol.cutoff_wage(date, state)
                        up = BetaParams(state.alpha + 1, state.beta)
                        dn = BetaParams(state.alpha, state.beta + 1)
                        v_next = pol.value(date + 1, theta, state) if date + 1 < 3 else 0.0
                        stay = utility(CRRA_HALF, cw.wage) + 0.95 * v_next
                        vu = pol.value(date + 1, theta, up) if date + 1 < 3 else 0.0
                        vd = pol.value(date + 1, theta, dn) if date + 1 < 3 else 0.0
                        go = theta + 0.95 * (theta * vu + (1.0 - theta) * vd)
                        want = stay if theta <= cw.cutoff else go
                        assert pol.value(date, theta, state) == pytest.approx(
                            want, rel=1e-12, abs=1e-12
                        )

    def test_value_weakly_increasing_in_theta(self):
        pol = three_period(PricingRegime.SOPHISTICATED)
        thetas = np.linspace(0.0, 1.0, 41)
        vals = [pol.value(0, float(t), BetaParams(1, 1)) for t in thetas]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_naive_value_dominates_sophisticated(self):
        # naive wages are posterior means, sophisticated wages are truncated
        # means, so the whole wage schedule and hence the value is lower
        naive = three_period(PricingRegime.NAIVE)
        soph = three_period(PricingRegime.SOPHISTICATED)
        for theta in np.linspace(0.0, 1.0, 21):
            assert naive.value(0, float(theta), BetaParams(1, 1)) >= soph.value(
                0, float(theta), BetaParams(1, 1)
            ) - 1e-12

    def test_value_at_delegates(self):
        pol = three_period(PricingRegime.NAIVE)
        assert value_at(pol, 1, 0.3, BetaParams(2, 1)) == pol.value(1, 0.3, BetaParams(2, 1))

    def test_value_theta_domain(self):
        pol = three_period(PricingRegime.NAIVE)
        with pytest.raises(ValueError):
            pol.value(0, -0.1, BetaParams(1, 1))
        with pytest.raises(ValueError):
            pol.value(0, 1.1, BetaParams(1, 1))


class TestKernelMatchesGenericSolver:
    def test_one_period_solve_equals_direct_cutoff(self, rng):
        # the compiled lattice kernel and the generic bisection must agree on
        # terminal problems state by state
        for _ in range(40):
            prior = BetaParams(rng.uniform(0.5, 8.0), rng.uniform(0.5, 8.0))
            for regime in PricingRegime:
                spec = FiniteHorizonSpec(1, prior, 0.9, CRRA_HALF, regime)
                got = solve_finite(spec).cutoff_wage(0, prior)
                want = solve_cutoff(prior, regime, zero_continuation, CRRA_HALF, 0.9)
                assert got.cutoff == pytest.approx(want.cutoff, abs=1e-9)
                assert got.wage == pytest.approx(want.wage, abs=1e-9)

    def test_tabulated_preferences_supported(self):
        tab = Preferences.tabulated(
            [(0.0, 0.0), (0.25, 0.45), (0.5, 0.72), (0.75, 0.89), (1.0, 1.0)]
        )
        prior = BetaParams(1, 1)
        spec = FiniteHorizonSpec(1, prior, 0.9, tab, PricingRegime.NAIVE)
        got = solve_finite(spec).cutoff_wage(0, prior)
        want = solve_cutoff(prior, PricingRegime.NAIVE, zero_continuation, tab, 0.9)
        assert got.cutoff == pytest.approx(want.cutoff, abs=1e-9)


class TestHorizonEffects:
    def test_cutoff_weakly_increasing_toward_terminal(self):
        # option value of public experimentation shrinks as dates run out
        for regime in PricingRegime:
            spec = FiniteHorizonSpec(6, BetaParams(1, 1), 0.95, CRRA_HALF, regime)
            pol = solve_finite(spec)
            cuts = [pol.cutoff_wage(t, BetaParams(1, 1)).cutoff for t in range(6)]
            assert all(b >= a - 1e-12 for a, b in zip(cuts, cuts[1:]))

    def test_interior_point_preferred_over_empty_pool(self):
        # regression: at (10,1) with 19 dates left the empty pool is
        # self-consistent but an interior pooling point coexists; the solver
        # must return the interior one, not collapse to the corner
        spec = FiniteHorizonSpec(
            28, BetaParams(1, 1), 0.9, CRRA_HALF, PricingRegime.SOPHISTICATED
        )
        pol = solve_finite(spec)
        cut = pol.cutoff_wage(9, BetaParams(10, 1)).cutoff
        assert 0.4 < cut < 0.6

    def test_long_horizon_roots(self):
        naive = solve_finite(
            FiniteHorizonSpec(60, BetaParams(1, 1), 0.9, CRRA_HALF, PricingRegime.NAIVE)
        )
        assert naive.cutoff_wage(0, BetaParams(1, 1)).cutoff == pytest.approx(
            0.5068073601, abs=1e-6
        )
        soph = solve_finite(
            FiniteHorizonSpec(
                60, BetaParams(1, 1), 0.9, CRRA_HALF, PricingRegime.SOPHISTICATED
            )
        )
        assert soph.cutoff_wage(0, BetaParams(1, 1)).cutoff > 0.05

    def test_moderate_discounting_has_no_empty_pool(self):
        # at delta = 0.5 the effective horizon is short enough that every
        # state keeps an interior pooling point even over 60 dates
        spec = FiniteHorizonSpec(
            60, BetaParams(1, 1), 0.5, CRRA_HALF, PricingRegime.SOPHISTICATED
        )
        pol = solve_finite(spec)
        assert all(
            cw.cutoff > 0.0 for table in pol.tables for cw in table.values()
        )
