import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import lambertw

from sirsi_lv.analysis import (
    REARRANGED,
    basic_reproduction_number,
    classify_equilibria,
    comparison_bound_check,
    disease_free_equilibria,
    endemic_equilibrium,
    equilibrium_residual,
    infective_block,
    jacobian,
    level_set_bounds,
    lnx_minus_x_roots,
    metzler_comparison,
)
from sirsi_lv.integrate import SolverOptions, integrate, sample
from sirsi_lv.model import DimensionlessParams, DomainError, rhs_dimensionless, rhs_lv, v_lv

from conftest import dimensionless_params, random_dimensionless


def lambert_roots(level):
    """Independent oracle: ln x - x = L  <=>  x = -W(-e^L) on branches 0 and -1."""
    z = -np.exp(level)
    return float(-lambertw(z, 0).real), float(-lambertw(z, -1).real)


def with_threshold(p, r0):
    """Copy of ``p`` rescaled so that its reproduction number equals ``r0``."""
    gm = p.gamma + p.mu_h
    return DimensionlessParams(B_h=r0**2 * gm / p.B_v, B_v=p.B_v, mu_h=p.mu_h, gamma=p.gamma, mu_D=p.mu_D)


# reproduction number

def test_r0_table1(table1_dimless):
    assert basic_reproduction_number(table1_dimless) == pytest.approx(3.2238, abs=1e-3)
    assert table1_dimless.gamma + table1_dimless.mu_h == pytest.approx(11.20272)


def test_r0_threshold_and_scaling(table1_dimless):
    p = with_threshold(table1_dimless, 1.0)
    assert basic_reproduction_number(p) == pytest.approx(1.0, rel=1e-14)
    q = DimensionlessParams(4 * p.B_h, p.B_v, p.mu_h, p.gamma, p.mu_D)
    assert basic_reproduction_number(q) == pytest.approx(2.0, rel=1e-14)


# equilibria

@given(dimensionless_params())
def test_disease_free_equilibria(p):
    e1, e2 = disease_free_equilibria()
    assert equilibrium_residual(e1, p) == 0 and equilibrium_residual(e2, p) == 0
    assert (e2.S_v + e2.I_v, e2.D) == (1.0, 1.0)


def test_endemic_table1(table1_dimless):
    p = table1_dimless
    ee = endemic_equilibrium(p)
    assert ee.S_h == pytest.approx(0.09687, abs=1e-5)
    assert equilibrium_residual(ee, p) < 1e-12
    r0sq = basic_reproduction_number(p) ** 2
    assert ee.I_h == pytest.approx(p.mu_h * (r0sq - 1) / (p.B_v * (p.B_h + p.mu_h)), rel=1e-12)
    gm = p.gamma + p.mu_h
    assert ee.I_v == pytest.approx(p.mu_h * (r0sq - 1) * gm / (p.B_h * (p.B_v * p.mu_h + gm)), rel=1e-12)


def test_endemic_at_threshold_is_disease_free(table1_dimless):
    ee = endemic_equilibrium(with_threshold(table1_dimless, 1.0))
    assert abs(ee.I_h) < 1e-15 and abs(ee.I_v) < 1e-15
    np.testing.assert_allclose(ee, [ee.S_h, 0, 1, 0, 1], atol=1e-12)


@given(dimensionless_params())
def test_endemic_exists_iff_r0_at_least_one(p):
    ee = endemic_equilibrium(p)
    assert (ee is not None) == (basic_reproduction_number(p) >= 1)
    if ee is not None:
        assert min(ee) >= 0
        assert abs(ee.S_v + ee.I_v - 1) < 1e-12 and ee.D == 1.0
        assert equilibrium_residual(ee, p) < 1e-10 * max(1.0, p.B_h, p.B_v, p.gamma)


# jacobian

def test_jacobian_printed_entries(table1_dimless):
    p = table1_dimless
    e1, e2 = disease_free_equilibria()
    j2 = jacobian(e2, p)
    assert j2[0, 0] == -(p.gamma + p.mu_h)
    assert j2[1, 0] == p.B_v
    assert np.all(jacobian(e1, p)[1] == 0)


def _fd_jacobian(y, p, h=1e-6):
    cols = []
    for i in range(5):
        e = np.zeros(5)
        e[i] = h
        cols.append((rhs_dimensionless(y + e, p) - rhs_dimensionless(y - e, p)) / (2 * h))
    perm = list(REARRANGED)
    return np.array(cols).T[np.ix_(perm, perm)]


@given(dimensionless_params(), st.lists(st.floats(0.05, 3.0), min_size=5, max_size=5))
def test_jacobian_matches_finite_differences(p, y):
    y = np.asarray(y)
    exact = jacobian(y, p)
    approx = _fd_jacobian(y, p)
    scale = np.max(np.abs(exact))
    assert np.max(np.abs(exact - approx)) <= 1e-6 * scale


def test_jacobian_rejects_bad_state(table1_dimless):
    with pytest.raises(DomainError):
        jacobian([1, 0, np.nan, 0, 1], table1_dimless)


# spectra

def test_infective_block_table1(table1_dimless):
    m, abscissa = infective_block(table1_dimless)
    assert abscissa > 0
    np.testing.assert_array_equal(m, [[-(table1_dimless.gamma + table1_dimless.mu_h), 3.78], [30.8, -1.0]])


def test_infective_block_at_threshold(table1_dimless):
    m, abscissa = infective_block(with_threshold(table1_dimless, 1.0))
    assert abs(np.linalg.det(m)) < 1e-12
    assert abs(abscissa) < 1e-12


def test_infective_block_sign_over_random_draws():
    for p in random_dimensionless(np.random.default_rng(1), 1000):
        r0 = basic_reproduction_number(p)
        abscissa = infective_block(p)[1]
        assert np.sign(abscissa) == np.sign(r0 - 1)


def test_e1_spectrum_contains_zero_and_one(table1_dimless):
    rep = classify_equilibria(table1_dimless)[0]
    assert rep.label == "E1"
    assert np.min(np.abs(rep.eigenvalues)) < 1e-12
    assert np.min(np.abs(rep.eigenvalues - 1)) < 1e-12
    assert rep.classification.startswith("unstable (non-hyperbolic)")


def test_endemic_spectrum_table1(table1_dimless):
    reports = {r.label: r for r in classify_equilibria(table1_dimless)}
    eig = reports["Ee"].eigenvalues
    assert int(np.sum(eig.real < -1e-6)) == 3
    pair = eig[np.abs(eig.real) < 1e-6]
    assert len(pair) == 2 and pair[0] == pytest.approx(np.conj(pair[1])) and abs(pair[0].imag) > 0
    assert reports["E2"].classification.startswith("unstable (R0 > 1)")


def test_eigenvalues_are_spectrum_of_reported_jacobian(table1_dimless):
    for rep in classify_equilibria(table1_dimless):
        ref = np.sort_complex(np.linalg.eigvals(rep.jacobian))
        np.testing.assert_allclose(np.sort_complex(rep.eigenvalues), ref, atol=1e-12)
        assert equilibrium_residual(rep.state, table1_dimless) < 1e-10


def test_no_endemic_report_below_threshold(table1_dimless):
    labels = [r.label for r in classify_equilibria(with_threshold(table1_dimless, 0.5))]
    assert labels == ["E1", "E2"]


# level sets

def test_level_set_equality_case(table1_dimless):
    b = level_set_bounds(-2.0, table1_dimless)
    assert (b.a, b.b) == (1.0, 1.0)
    assert b.eco_r0 == pytest.approx(basic_reproduction_number(table1_dimless) ** 2)


def test_level_set_k0_minus_three(table1_dimless):
    b = level_set_bounds(-3.0, table1_dimless)
    lo, hi = lambert_roots(-2.0)
    assert b.a == pytest.approx(lo, abs=1e-12) and b.b == pytest.approx(hi, abs=1e-12)
    assert b.a == pytest.approx(0.15859, abs=1e-4) and b.b == pytest.approx(3.14619, abs=1e-4)
    assert b.eco_r0 == pytest.approx(206.2, abs=0.1)


def test_level_set_rejects_k0_above_minus_two(table1_dimless):
    with pytest.raises(DomainError):
        level_set_bounds(-1.9, table1_dimless)


@given(st.floats(-40.0, -2.0), dimensionless_params())
def test_level_set_bounds_properties(k0, p):
    b = level_set_bounds(k0, p)
    assert 0 < b.a <= 1 <= b.b
    assert abs(np.log(b.a) - b.a - (k0 + 1)) < 1e-10
    assert abs(np.log(b.b) - b.b - (k0 + 1)) < 1e-10
    if k0 < -2.01:  # the oracle degrades at its branch point
        lo, hi = lambert_roots(k0 + 1)
        assert b.a == pytest.approx(lo, rel=1e-9) and b.b == pytest.approx(hi, rel=1e-9)
    if k0 < -2:
        assert b.eco_r0 > basic_reproduction_number(p) ** 2


def test_roots_for_extreme_levels():
    lo, hi = lnx_minus_x_roots(-700.0)
    assert lo > 0 and np.log(lo) - lo == pytest.approx(-700.0, rel=1e-12)
    assert np.log(hi) - hi == pytest.approx(-700.0, rel=1e-12)


@pytest.mark.parametrize("k0", [-2.05, -2.5, -3.0, -4.0])
def test_lv_orbit_stays_within_level_set_bounds(k0):
    # the bounds are tight for unit predator mortality, where v_lv is the plain sum
    p = DimensionlessParams(B_h=1.0, B_v=1.0, mu_h=0.1, gamma=0.5, mu_D=1.0)
    b = level_set_bounds(k0, p)
    traj = integrate(lambda t, y: rhs_lv(y, p), [b.a, 1.0], (0.0, 30.0))
    ys = sample(traj, np.linspace(0, 30, 6001))
    vals = np.array([v_lv(*y) for y in ys])
    assert np.max(np.abs(vals - k0)) <= 1e-6
    assert ys.min() >= b.a - 1e-6 and ys.max() <= b.b + 1e-6


# comparison system

def synthetic_params():
    return DimensionlessParams(B_h=0.1, B_v=0.1, mu_h=0.2, gamma=11.0, mu_D=1.0)


def test_metzler_examples(table1_dimless):
    m, flag = metzler_comparison(synthetic_params(), -2.1)
    assert level_set_bounds(-2.1, synthetic_params()).eco_r0 < 1
    assert flag and np.all(np.linalg.eigvals(m).real < 0)
    assert not metzler_comparison(table1_dimless, -3.0)[1]


def test_metzler_flag_matches_eco_r0_over_random_draws():
    rng = np.random.default_rng(2)
    for p in random_dimensionless(rng, 1000):
        k0 = rng.uniform(-6.0, -2.0)
        _, flag = metzler_comparison(p, k0)
        assert flag == (level_set_bounds(k0, p).eco_r0 < 1)


def _synthetic_run(y0, horizon=40.0):
    p = synthetic_params()
    traj = integrate(lambda t, y: rhs_dimensionless(y, p), y0, (0.0, horizon), SolverOptions(rel_tol=1e-10, abs_tol=1e-14))
    return p, traj


def test_comparison_zero_infectives():
    p, traj = _synthetic_run([0.9, 0.0, 1.0, 0.0, 1.0], horizon=10.0)
    rep = comparison_bound_check(traj, p, -2.1)
    assert np.all(rep.comparison == 0) and np.all(rep.infectives == 0)
    assert rep.holds()


def test_comparison_bound_and_decay():
    p, traj = _synthetic_run([0.8, 0.2, 0.9, 0.1, 1.05])
    rep = comparison_bound_check(traj, p, -2.1)
    assert rep.exit_time is None
    assert rep.max_excess_h <= 1e-8 and rep.max_excess_v <= 1e-8
    assert rep.decay_time_comparison is not None
    assert rep.decay_time_infectives <= rep.decay_time_comparison


def test_comparison_tail_rate_matches_slowest_eigenvalue():
    p, traj = _synthetic_run([0.8, 0.2, 0.9, 0.1, 1.05])
    rep = comparison_bound_check(traj, p, -2.1)
    slowest = np.max(np.linalg.eigvals(rep.matrix).real)
    tail = rep.grid > 0.5 * rep.grid[-1]
    rate = np.polyfit(rep.grid[tail], np.log(rep.comparison[tail, 0]), 1)[0]
    assert rate == pytest.approx(slowest, rel=0.05)


def test_comparison_flags_region_exit(table1_dimless):
    p = synthetic_params()
    # start far outside the k0 = -2.1 orbit
    traj = integrate(lambda t, y: rhs_dimensionless(y, p), [0.8, 0.2, 2.5, 0.5, 0.3], (0.0, 5.0))
    rep = comparison_bound_check(traj, p, -2.1)
    assert rep.exit_time == 0.0 and not rep.holds()
