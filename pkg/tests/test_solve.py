import numpy as np
import pytest

from modules import measure as measures
from modules.errors import BarrierError, StencilTooLargeError, ValidationError
from modules.experiments.solve import torsion_oracle
from modules.grid import Field, GridDomain
from modules.local_operator import make_coefficient
from modules.solve import (
    MixedProblem,
    MixedSystem,
    build_barrier,
    check_concavity,
    check_max_principle,
    comparison_vlambda,
    contraction_map,
    fit_annulus,
    m_matrix_report,
    phi,
    residual_target,
    resolvent_bound,
    select_lambda,
    solve_direct,
    solve_picard,
    solve_proximal,
    vlambda_sweep,
)


def test_problem_needs_an_operator(grid_1d):
    with pytest.raises(ValidationError):
        MixedProblem(None, None, grid_1d, Field.zeros(grid_1d))


def test_direct_solve_residual(mixed_problem):
    system = MixedSystem(mixed_problem)
    report = solve_direct(mixed_problem, system=system)
    assert report.residual_sup <= 1e-8 * (mixed_problem.f.sup_norm() + 1.0)
    assert residual_target(report, system, mixed_problem.f.sup_norm()) == pytest.approx(2e-8)
    assert report.method == "direct"
    u = report.u
    assert np.all(u.values[~mixed_problem.grid.omega_mask] == 0)
    assert u.values[mixed_problem.grid.omega_mask].min() > 0


def test_direct_solve_matches_closed_form():
    grid = GridDomain(1, 2.0, 513)
    spec = measures.OperatorSpec(0.5, measures.uniform(1))
    problem = MixedProblem(spec, None, grid, Field(grid, grid.omega_mask.astype(float)))
    u = solve_direct(problem).u
    exact = torsion_oracle(problem, 1.0)
    inner = np.abs(grid.axis) <= 0.5
    error = np.max(np.abs(u.values - exact.values)[inner]) / exact.sup_norm()
    assert error <= 0.1


def test_zero_source_gives_zero(mixed_problem):
    report = solve_direct(mixed_problem.with_source(Field.zeros(mixed_problem.grid)))
    assert report.u.sup_norm() == 0.0
    assert report.iterations == 0


def test_stencil_cap_surfaces(mixed_problem):
    with pytest.raises(StencilTooLargeError):
        MixedSystem(mixed_problem, max_points=32)


def test_picard_limit_solves_the_shifted_problem(mixed_problem):
    system = MixedSystem(mixed_problem)
    picard = solve_picard(mixed_problem, tol=1e-10, system=system)
    assert picard.lambda_shift > 0
    assert max(picard.contraction_ratios) < 1.0
    direct = solve_direct(mixed_problem.with_shift(picard.lambda_shift), system=system)
    np.testing.assert_allclose(picard.u.values, direct.u.values, atol=1e-7)


def test_select_lambda_contracts(mixed_problem):
    lam = select_lambda(mixed_problem)
    assert lam >= 1.0
    assert np.log2(lam) == pytest.approx(round(np.log2(lam)))


def test_contraction_map_needs_positive_shift(mixed_problem):
    with pytest.raises(ValidationError):
        contraction_map(mixed_problem, Field.zeros(mixed_problem.grid))
    shifted = mixed_problem.with_shift(1e4)
    assert contraction_map(shifted, Field.zeros(mixed_problem.grid)).sup_norm() > 0


def test_proximal_limit_solves_the_unshifted_problem(mixed_problem):
    system = MixedSystem(mixed_problem)
    proximal = solve_proximal(mixed_problem, 1.0, tol=1e-9, system=system)
    direct = solve_direct(mixed_problem, system=system)
    np.testing.assert_allclose(proximal.u.values, direct.u.values, atol=1e-7)
    assert all(r < 1.0 for r in proximal.contraction_ratios)
    with pytest.raises(ValidationError):
        solve_proximal(mixed_problem, 0.0)


def test_iterative_residuals_meet_their_targets(mixed_problem):
    system = MixedSystem(mixed_problem)
    f_sup = mixed_problem.f.sup_norm()
    proximal = solve_proximal(mixed_problem, 1.0, tol=1e-8, system=system)
    assert proximal.residual_sup <= residual_target(proximal, system, f_sup, 1e-8)
    picard = solve_picard(mixed_problem, tol=1e-8, system=system)
    target = residual_target(picard, system, f_sup, 1e-8)
    assert picard.residual_sup <= target
    assert target > 1e-8 * (f_sup + 1.0)


def test_maximum_principle(mixed_problem):
    report = check_max_principle(mixed_problem, trials=5, seed=3)
    assert report.passed
    assert report.applicable
    assert len(report.trials) == 5
    assert report.summary()["passed_trials"] == 5


def test_signed_sources_are_not_applicable(mixed_problem):
    report = check_max_principle(mixed_problem, trials=4, seed=1, signed=True)
    if (report.trials["f_min"] < 0).any():
        assert not report.applicable


def test_m_matrix_signs(mixed_problem):
    structure = m_matrix_report(MixedSystem(mixed_problem))
    assert structure["offdiagonal_nonpositive"]
    assert structure["row_sums_nonnegative"]
    assert structure["boundary_rows_positive"]


def test_vlambda_bounds(grid_1d, uniform_spec):
    report = comparison_vlambda(grid_1d, uniform_spec, 40.0)
    assert report.passed
    assert report.v_sup <= 2.0 / 40.0
    assert report.phi_at_zero == pytest.approx(2.0 / 40.0)
    frame, monotone = vlambda_sweep(grid_1d, uniform_spec, [160.0, 10.0, 40.0])
    assert monotone
    assert frame["lambda"].tolist() == [10.0, 40.0, 160.0]


def test_phi():
    assert phi(0.0, 4.0) == pytest.approx(0.5)
    assert phi(10.0, 4.0) == pytest.approx(0.25, rel=1e-12)


def test_resolvent_bound(mixed_problem):
    result = resolvent_bound(mixed_problem, 20.0)
    assert result["passed"]
    assert result["u_sup"] <= 2.0 * result["g_sup"] / 20.0


def test_fit_annulus_contains_the_domain():
    grid = GridDomain(1, 5.0, 257, omega_center=(2.5,))
    center, R = fit_annulus(grid)
    distance = np.abs(grid.axis[grid.omega_mask] - center[0])
    assert distance.min() >= R / 4
    assert distance.max() <= 3 * R / 4

    # a centred Ω forces a shifted annulus
    centred = GridDomain(1, 5.0, 257)
    center, R = fit_annulus(centred)
    distance = np.abs(centred.axis[centred.omega_mask] - center[0])
    assert distance.min() >= R / 4
    assert distance.max() <= 3 * R / 4


def test_barrier_and_concavity(uniform_spec):
    grid = GridDomain(1, 5.0, 257, omega_center=(2.5,))
    barrier = build_barrier(grid, uniform_spec)
    assert barrier.max_residual <= 1.0
    assert check_concavity(barrier, uniform_spec, grid) <= 1e-12
    assert np.all(barrier.w.values >= 0)
    # v_λ stays under φ(w)
    report = comparison_vlambda(grid, uniform_spec, 40.0, barrier)
    assert report.dominated


def test_barrier_outside_the_box(uniform_spec):
    grid = GridDomain(1, 2.0, 129)
    with pytest.raises(BarrierError):
        build_barrier(grid, uniform_spec)


def test_local_only_problem(grid_2d):
    a = make_coefficient("smooth-sine", 0.5, 1.0, 2.0, grid_2d)
    problem = MixedProblem(None, a, grid_2d, Field(grid_2d, grid_2d.omega_mask.astype(float)))
    report = solve_direct(problem)
    assert report.residual_sup <= 1e-6
    assert report.u.values.min() >= 0
