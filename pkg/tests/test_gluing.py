import functools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from qflow.core import make_params
from qflow.delaunay import shoot_delaunay
from qflow.errors import DomainError, IllConditioned
from qflow.gluing import (
    CauchyTrace,
    GluingState,
    ScheduleKnobs,
    cauchy_mismatch,
    constant_mode_matrix,
    constant_residual,
    coordinate_matrix,
    coordinate_residual,
    exterior_trace,
    fgmn,
    initial_state,
    interior_trace,
    make_schedule,
    pde_residual_diagnostic,
    reduction_coefficients,
    run_glue,
    solve_all,
    solve_constants,
    solve_coordinates,
    solve_high_modes,
    t_coefficient,
)
from qflow.modes import BoundaryData

# Frozen from tests/oracles/gluing_oracle.py: the four coefficients computed
# symbolically from the four-term power expansion of u at n = 5, eps = 0.2,
# b = 0.  The package uses the exact orbit, so the two differ by the
# expansion remainder; the tolerances are that remainder's bound pushed
# through the Euler-derivative polynomials.
FGMN_ORACLE = (0.99918171204618269, 0.99754335403413381, -0.011463159771099370, -0.011452467144613767)
FGMN_REMAINDER = (4.7e-5, 3.1e-4, 2.9e-3, 2.2e-2)
ALPHA_ORACLE = 0.20000290398237529
R_EPS_ORACLE = 0.043353162937091702
R_ORACLE = 0.010000290400345807


@pytest.fixture(scope="module")
def sched5(sol5):
    return make_schedule(sol5.params, 0.2, solution=sol5)


@pytest.fixture(scope="module")
def solved5(sched5):
    return solve_all(initial_state(sched5))


def test_knob_validation():
    ScheduleKnobs()
    with pytest.raises(DomainError):
        ScheduleKnobs(delta1=0.05, delta2=0.03)
    with pytest.raises(DomainError):
        ScheduleKnobs(m=0.03, delta2=0.03)
    with pytest.raises(DomainError):
        ScheduleKnobs(delta0=0.0)
    with pytest.raises(DomainError):
        ScheduleKnobs(b=0.6)


def test_schedule_oracle(sched5):
    assert_allclose(sched5.s, 1.95)
    assert_allclose(sched5.alpha, ALPHA_ORACLE, rtol=1e-9)
    assert_allclose(sched5.r, R_EPS_ORACLE, rtol=1e-8)
    assert_allclose(sched5.R, R_ORACLE, rtol=1e-8)
    # with this R the constant term of the expansion is exactly 1 + b
    n, R = 5, sched5.R
    assert_allclose(sched5.alpha / 2 * R ** ((4 - n) / 2), 1.0, rtol=1e-13)
    moved = sched5.with_b(0.25)
    assert_allclose(moved.alpha / 2 * moved.R ** ((4 - n) / 2), 1.25, rtol=1e-13)
    with pytest.raises(DomainError):
        sched5.with_b(0.7)


def test_schedule_errors(sol5):
    p = sol5.params
    with pytest.raises(DomainError):
        make_schedule(p, 0.1, solution=sol5)
    with pytest.raises(DomainError):
        make_schedule(p, 0.2, knobs=ScheduleKnobs(delta0=3.0), solution=sol5)


def test_initial_lambda(sched5):
    st0 = initial_state(sched5)
    assert_allclose(st0.lam, sched5.alpha ** 2 / 4)
    assert st0.a.shape == (5,) and not np.any(st0.tau)


def test_state_validation(sched5):
    with pytest.raises(DomainError):
        GluingState(sched5, a=np.zeros(3))
    with pytest.raises(DomainError):
        GluingState(sched5, psi=BoundaryData(sched5.r, {(1, 0): [0.0, 1.0]}))
    with pytest.raises(DomainError):
        GluingState(sched5, forcing={(0, 0): [1.0, 2.0]})
    with pytest.raises(DomainError):
        GluingState(sched5, forcing={(1, 7): [0.0, 0.0, 0.0, 1.0]})


def test_fgmn_oracle(sched5):
    got = fgmn(initial_state(sched5))
    for g, ref, tol in zip(got, FGMN_ORACLE, FGMN_REMAINDER):
        assert abs(g - ref) <= tol
    # T over the symbolic model is n(n-4)(1+b)/(n-1) = 5/4
    w = np.array([float(c) for c in reduction_coefficients(5)])
    assert abs(t_coefficient(initial_state(sched5)) - 1.25) <= np.abs(w) @ np.array(FGMN_REMAINDER)


@pytest.mark.parametrize("n", [5, 6, 7, 8, 10])
def test_reduction_removes_data_columns(n):
    w = reduction_coefficients(n)
    assert w[0] == 1 and w[1] == Fraction(1, n - 1)
    assert_allclose(np.array([float(c) for c in w]) @ coordinate_matrix(n), 0.0, atol=1e-15)
    assert w == (1, Fraction(1, n - 1), Fraction(-(n - 3), 2 * (n - 1) * (n - 2)), Fraction(-1, 2 * (n - 1) * (n - 2)))


@pytest.mark.parametrize("n", [5, 6, 8])
def test_constant_matrix_is_invertible(n):
    M = constant_mode_matrix(n)
    assert M.shape == (4, 4)
    assert abs(np.linalg.det(M)) > 1e-3


def test_trivial_matching(solved5):
    mm = cauchy_mismatch(solved5)
    assert max(mm.values()) < 1e-14
    assert np.max(np.abs(constant_residual(solved5))) < 1e-14
    assert coordinate_residual(solved5) == 0.0
    assert not np.any(solved5.a)
    assert abs(solved5.schedule.b) < 1e-4
    assert all(ok for _, _, ok in solved5.bounds().values())


def test_lambda_tracks_alpha(solved5):
    n, r = 5, solved5.r
    assert_allclose(solved5.lam, solved5.schedule.alpha ** 2 / (4 * (1 + solved5.schedule.b)) - 0, rtol=1e-3)
    assert abs(solved5.lam) <= r ** (n - 4 + solved5.schedule.knobs.m / 2)


def test_solve_constants_is_a_fixed_point(solved5):
    again = solve_constants(solved5)
    assert_allclose(again.schedule.b, solved5.schedule.b, atol=1e-15)
    assert_allclose(again.lam, solved5.lam, rtol=1e-12)


FORCING = {
    (0, 0): [1e-4, -2e-4, 3e-4, 1e-4],
    (1, 0): [2e-4, 1e-4, -1e-4, 5e-5],
    (1, 3): [-1e-4, 0.0, 2e-4, 1e-4],
    (2, 1): [1e-4, 1e-4, 2e-4, -3e-4],
    (3, 0): [-5e-5, 1e-4, 0.0, 2e-4],
}


def test_forced_matching_is_exact(sched5):
    state = solve_all(initial_state(sched5, FORCING), l_max=3)
    assert max(cauchy_mismatch(state).values()) < 1e-13
    assert coordinate_residual(state) < 1e-13
    assert np.any(state.a) and state.a[1] == 0.0
    assert set(state.psi.coeffs) == {(2, 1), (3, 0)}


def test_high_modes_are_exact_in_one_pass(sched5):
    state = solve_high_modes(initial_state(sched5, FORCING), l_max=3, max_pass=1)
    d = interior_trace(state) - exterior_trace(state)
    for k, v in d.high().items():
        assert np.max(np.abs(v)) < 1e-15


def test_high_mode_errors(sched5):
    with pytest.raises(DomainError):
        solve_high_modes(initial_state(sched5, FORCING), l_max=1)
    with pytest.raises(DomainError):
        solve_high_modes(initial_state(sched5, FORCING), l_max=2)


def test_coordinate_threshold(sched5):
    with pytest.raises(IllConditioned):
        solve_coordinates(initial_state(sched5, FORCING), threshold=10.0)


@functools.lru_cache(maxsize=None)
def _schedule():
    sol = shoot_delaunay(make_params(5), 0.2)
    return make_schedule(sol.params, 0.2, solution=sol)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 4), st.lists(st.floats(-1e-4, 1e-4), min_size=4, max_size=4))
def test_coordinate_forcing_any_direction(j, vec):
    state = solve_coordinates(initial_state(_schedule(), {(1, j): vec}))
    assert coordinate_residual(state) < 1e-14


def test_cauchy_trace_algebra():
    a = CauchyTrace(0.1, 5)
    a.add((0, 0), [1, 2, 3, 4])
    a.add((0, 0), [1, 1, 1, 1])
    b = CauchyTrace(0.1, 5)
    b.add((2, 0), [1, 0, 0, 0])
    d = a - b
    assert_allclose(d.get((0, 0)), [2, 3, 4, 5])
    assert_allclose(d.get((2, 0)), [-1, 0, 0, 0])
    assert d.keys() == [(0, 0), (2, 0)]
    assert list(d.high()) == [(2, 0)]


def test_run_glue_shrinking_necks(shot):
    initial, pde = [], []
    for eps in (0.3, 0.2, 0.1, 0.05):
        sol = shot(5, eps)
        state, man = run_glue(sol.params, eps, solution=sol)
        assert max(man["mismatch"].values()) < 1e-13
        assert all(v["ok"] for v in man["bounds"].values())
        assert_allclose(man["T"], man["T_model"], rtol=1e-3)
        initial.append(max(man["initial_mismatch"].values()))
        pde.append(man["pde_residual"])
    assert np.all(np.diff(initial) < 0)
    assert np.all(np.diff(pde) < 0)


def test_pde_diagnostic_shrinks_after_solve(sched5, solved5):
    before = pde_residual_diagnostic(initial_state(sched5))
    after = pde_residual_diagnostic(solved5)
    # the solve moves b and lambda by amounts far below the diagnostic
    assert_allclose(after, before, rtol=1e-3)
    assert after < 1e-3


def test_run_glue_is_deterministic(sol5):
    _, m1 = run_glue(sol5.params, 0.2, solution=sol5, forcing=FORCING, l_max=3)
    _, m2 = run_glue(sol5.params, 0.2, solution=sol5, forcing=FORCING, l_max=3)
    assert m1 == m2
