import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sirsi_lv.analysis import endemic_equilibrium
from sirsi_lv.integrate import SolverOptions, integrate, sample
from sirsi_lv.model import (
    DimensionalParams,
    DimensionlessParams,
    DomainError,
    FullState,
    LVState,
    SystemState,
    nondimensionalize,
    redimensionalize,
    rhs_controlled,
    rhs_dimensionless,
    rhs_full,
    rhs_lv,
    rhs_reduced,
    v_lv,
)

from conftest import dimensionless_params, log_uniform

E1 = (1.0, 0.0, 0.0, 0.0, 0.0)
E2 = (1.0, 0.0, 1.0, 0.0, 1.0)


def test_params_reject_nonpositive():
    with pytest.raises(DomainError):
        DimensionlessParams(B_h=0.0, B_v=1.0, mu_h=1.0, gamma=1.0, mu_D=1.0)
    with pytest.raises(DomainError):
        DimensionalParams.table1(N_h=-1.0)


def test_states_reject_negative_components():
    with pytest.raises(DomainError):
        SystemState(1, -0.1, 0, 0, 0)
    with pytest.raises(DomainError):
        FullState(1, 0, -1, 0, 0, 0)
    with pytest.raises(DomainError):
        LVState(-1, 1)
    assert FullState(9, 1, 0, 9, 1, 0.1).reduced() == SystemState(9, 1, 9, 1, 0.1)


def test_full_vector_free_state_is_equilibrium(table1):
    np.testing.assert_array_equal(rhs_full((10, 0, 0, 0, 0, 0), table1), np.zeros(6))


def test_full_host_total_is_conserved_pointwise(table1):
    f = rhs_full((9, 1, 0, 9, 1, 0.1), table1)
    assert abs(f[0] + f[1] + f[2]) < 1e-15


def test_full_disease_free_set_has_no_incidence(table1):
    f = rhs_full((7, 0, 3, 5, 0, 2), table1)
    assert f[1] == 0.0 and f[4] == 0.0


@pytest.mark.parametrize("bad", [np.nan, np.inf])
def test_rhs_rejects_nonfinite(table1, table1_dimless, bad):
    with pytest.raises(DomainError):
        rhs_full((9, bad, 0, 9, 1, 0.1), table1)
    with pytest.raises(DomainError):
        rhs_dimensionless((1, 0, bad, 0, 1), table1_dimless)
    with pytest.raises(DomainError):
        rhs_lv((bad, 1), table1_dimless)


def test_wrong_state_length_is_rejected(table1_dimless):
    with pytest.raises(DomainError):
        rhs_dimensionless((1, 0, 1, 0), table1_dimless)


@given(dimensionless_params())
def test_disease_free_equilibria_are_rest_points(p):
    assert np.all(rhs_dimensionless(E1, p) == 0)
    assert np.all(rhs_dimensionless(E2, p) == 0)


def test_endemic_state_is_rest_point(table1_dimless):
    ee = endemic_equilibrium(table1_dimless)
    assert np.linalg.norm(rhs_dimensionless(ee, table1_dimless)) < 1e-12


def test_controlled_examples(table1_dimless):
    p = table1_dimless
    np.testing.assert_array_equal(rhs_controlled(E2, p, 0.0), rhs_dimensionless(E2, p))
    np.testing.assert_array_equal(rhs_controlled(E2, p, 0.5), [0, 0, 0, 0, 0.5])
    diff = rhs_controlled(E2, p, 0.3) - rhs_controlled(E2, p, 0.1)
    np.testing.assert_allclose(diff, [0, 0, 0, 0, 0.2], rtol=0, atol=1e-15)
    with pytest.raises(DomainError):
        rhs_controlled(E2, p, -0.1)


@given(
    dimensionless_params(),
    st.lists(st.floats(0, 10), min_size=5, max_size=5),
    st.floats(0, 10),
)
def test_control_enters_predator_equation_only(p, state, u):
    diff = rhs_controlled(state, p, u) - rhs_dimensionless(state, p)
    assert np.all(diff[:4] == 0)
    # adding u to a float sum is exact only up to rounding of that sum
    base = rhs_dimensionless(state, p)[4]
    assert abs(diff[4] - u) <= 2 * np.spacing(max(abs(base), abs(base + u), u))


def test_reduced_matches_full_without_recovered(table1):
    full = rhs_full((9, 1, 0, 9, 1, 0.1), table1)
    red = rhs_reduced((9, 1, 9, 1, 0.1), table1)
    np.testing.assert_array_equal(red, full[[0, 1, 3, 4, 5]])


def test_lv_examples(table1_dimless):
    p = table1_dimless
    np.testing.assert_array_equal(rhs_lv((1, 1), p), [0, 0])
    np.testing.assert_allclose(rhs_lv((2, 1), p), [0, p.mu_D])
    np.testing.assert_array_equal(rhs_lv((3.5, 0), p), [3.5, 0])


def test_first_integral_values():
    assert v_lv(1, 1) == -2
    assert v_lv(math.e, 1) == pytest.approx(-math.e, abs=1e-15)
    assert v_lv(1, 1, mu_D=12.0) == -2
    assert v_lv(math.e, 1, mu_D=3.0) == pytest.approx((3 * (1 - math.e) - 1) / 2, abs=1e-15)
    for bad in [(0, 1), (1, 0), (-1, 1)]:
        with pytest.raises(DomainError):
            v_lv(*bad)


@given(log_uniform(1e-6, 1e6), log_uniform(1e-6, 1e6), log_uniform())
def test_first_integral_never_exceeds_coexistence_value(n_v, d, mu_D):
    assert v_lv(n_v, d) <= -2
    assert v_lv(n_v, d, mu_D) <= -2


def test_first_integral_along_one_period(table1_dimless):
    p = table1_dimless
    opts = SolverOptions(rel_tol=1e-11, abs_tol=1e-13)
    traj = integrate(lambda t, y: rhs_lv(y, p), [2.0, 1.0], (0.0, 3.0), opts)
    vals = [v_lv(*y, p.mu_D) for y in sample(traj, np.linspace(0, 3, 3001))]
    assert max(abs(v - vals[0]) for v in vals) < 1e-8


def test_first_integral_at_default_tolerances(table1_dimless):
    p = table1_dimless
    traj = integrate(lambda t, y: rhs_lv(y, p), [2.0, 1.0], (0.0, 10.0))
    vals = [v_lv(*y, p.mu_D) for y in sample(traj, np.linspace(0, 10, 2001))]
    assert max(abs(v - vals[0]) for v in vals) < 1e-6


def test_table1_rescaled_values(table1):
    p, scales = nondimensionalize(table1)
    assert p.B_h == pytest.approx(3.78, rel=1e-12)
    assert p.B_v == pytest.approx(30.8, rel=1e-12)
    assert p.mu_h == pytest.approx(2.72e-3, rel=1e-12)
    assert p.gamma == pytest.approx(11.2, rel=1e-12)
    assert p.mu_D == pytest.approx(12.0, rel=1e-12)
    assert scales.N_v_star == pytest.approx(table1.mu_D / table1.eta)
    assert scales.D_star == pytest.approx(table1.mu_v / table1.alpha)


@given(st.lists(log_uniform(), min_size=10, max_size=10))
def test_rescaling_round_trip(values):
    p = DimensionalParams(*values)
    back = redimensionalize(*nondimensionalize(p))
    for name, v in p.to_dict().items():
        assert getattr(back, name) == pytest.approx(v, rel=1e-13)


def test_scales_state_and_control_maps(table1):
    _, s = nondimensionalize(table1)
    y = np.array([9.0, 1.0, 0.0, 9.0, 1.0, 0.1])
    np.testing.assert_allclose(s.state_to_dimensional(s.state_to_dimensionless(y)), y, rtol=1e-15)
    assert s.control_to_dimensional(s.control_to_dimensionless(0.5)) == pytest.approx(0.5, rel=1e-15)
    assert s.control_to_dimensionless(1.0) == pytest.approx(table1.alpha / table1.mu_v**2)
    assert s.time_to_dimensional(s.time_to_dimensionless(30.0)) == pytest.approx(30.0)


def test_dimensional_flow_satisfies_rescaled_equations(table1):
    p, s = nondimensionalize(table1)
    opts = SolverOptions(rel_tol=1e-11, abs_tol=1e-13)
    y0 = np.array([9.0, 1.0, 9.0, 1.0, 0.1])
    dim = integrate(lambda t, y: rhs_reduced(y, table1), y0, (0.0, 20.0), opts)
    rescaled = integrate(
        lambda t, y: rhs_dimensionless(y, p),
        s.state_to_dimensionless(y0),
        (0.0, s.time_to_dimensionless(20.0)),
        opts,
    )
    t = np.linspace(0, 20, 201)
    mapped = s.state_to_dimensionless(sample(dim, t))
    direct = sample(rescaled, s.time_to_dimensionless(t))
    np.testing.assert_allclose(mapped, direct, rtol=1e-7, atol=1e-9)


def test_redimensionalize_rejects_mismatched_scales(table1):
    p, s = nondimensionalize(table1)
    other = DimensionlessParams(p.B_h, p.B_v, p.mu_h, p.gamma, p.mu_D * 2)
    with pytest.raises(DomainError):
        redimensionalize(other, s)


@given(
    dimensionless_params(),
    st.lists(st.floats(0, 5), min_size=5, max_size=5),
)
def test_rescaled_solutions_stay_nonnegative(p, y0):
    try:
        traj = integrate(lambda t, y: rhs_dimensionless(y, p), y0, (0.0, 5.0), SolverOptions(max_steps=20_000))
    except Exception as exc:  # very stiff draws may exhaust the step budget
        from sirsi_lv.integrate import IntegrationError

        assert isinstance(exc, IntegrationError)
        traj = exc.trajectory
    assert np.all(traj.y >= -1e-9)


def test_full_model_conserves_hosts(table1):
    traj = integrate(lambda t, y: rhs_full(y, table1), [9, 1, 0, 9, 1, 0.1], (0.0, 120.0))
    totals = traj.y[:, :3].sum(axis=1)
    assert np.max(np.abs(totals - 10.0)) <= 1e-9 * 10


def test_disease_free_start_stays_disease_free(table1_dimless):
    traj = integrate(lambda t, y: rhs_dimensionless(y, table1_dimless), [0.7, 0, 1.3, 0, 0.6], (0.0, 10.0))
    assert np.all(traj.y[:, 1] == 0) and np.all(traj.y[:, 3] == 0)
