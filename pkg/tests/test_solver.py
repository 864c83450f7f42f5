import os
import logging

import numpy as np
import pytest

from ehrc.core import PowerSchedule, TransferMode, check_feasible, throughput
from ehrc.errors import ProfileError, SolverError
from ehrc.policies import two_way_optimal
from ehrc.solver import (
    EpigraphProblem,
    SolverConfig,
    solve_epigraph,
    solve_no_et,
    solve_one_way,
    solve_two_way,
)
from tests.conftest import TABLE, make_profile

logger = logging.getLogger(__name__)


@pytest.mark.parametrize('name', sorted(TABLE))
def test_solvers_against_the_table(name, table_profiles, channel):
    profile = table_profiles[name]
    expected = TABLE[name]
    no_et = solve_no_et(profile, channel)
    one_way = solve_one_way(profile, channel)
    two_way = solve_two_way(profile, channel)
    logger.info(f"{name}: {no_et.throughput:.6f} {one_way.throughput:.6f}"
                f" {two_way.throughput:.6f}")
    assert no_et.throughput == pytest.approx(expected[4], abs=1e-3)
    assert one_way.throughput == pytest.approx(expected[5], abs=1e-3)
    assert two_way.throughput == pytest.approx(expected[6], abs=1e-3)


def test_single_epoch_closed_form(channel):
    profile = make_profile([5], [1000], instants=(0,), deadline=2)
    result = solve_no_et(profile, channel)
    assert result.throughput == pytest.approx(2 * np.log2(11), abs=1e-6)
    assert result.throughput == pytest.approx(6.9189, abs=1e-4)


@pytest.mark.parametrize('mode', list(TransferMode))
def test_barrier_gradient_matches_finite_differences(mode, example3,
                                                     channel):
    problem = EpigraphProblem.build(example3, channel, mode)
    rng = np.random.default_rng(5)
    start = problem.start_point(0.1)
    n = problem.n
    checked = 0
    for _ in range(100):
        x = start.copy()
        x[:2 * n] *= 1 + 0.1 * rng.uniform(-1, 1, size=2 * n)
        rates = [problem.beta * np.log1p(mat @ x / problem.noise)
                 for mat in (problem.mac_mat, problem.sr_mat)]
        x[2 * n:] = np.minimum(*rates) - rng.uniform(0.05, 0.5, size=n)
        if not problem.in_domain(x):
            continue
        grad = problem.barrier_gradient(x, 3.0)
        h = 1e-6
        numeric = np.empty_like(x)
        for j in range(len(x)):
            step = np.zeros_like(x)
            step[j] = h
            numeric[j] = (problem.barrier_value(x + step, 3.0)
                          - problem.barrier_value(x - step, 3.0)) / (2 * h)
        np.testing.assert_allclose(grad, numeric, rtol=1e-5, atol=1e-5)
        checked += 1
    logger.info(f"Checked {checked} interior points.")
    assert checked > 50


def test_barrier_hessian_is_symmetric(example2, channel):
    problem = EpigraphProblem.build(example2, channel, TransferMode.TWO_WAY)
    x = problem.start_point(0.1)
    hess = problem.barrier_hessian(x, 1.0)
    np.testing.assert_allclose(hess, hess.T, atol=1e-9)
    assert np.all(np.linalg.eigvalsh(hess) > 0)


def test_start_point_is_strictly_feasible(table_profiles, channel):
    for profile in table_profiles.values():
        for mode in TransferMode:
            problem = EpigraphProblem.build(profile, channel, mode)
            assert problem.in_domain(problem.start_point(0.1))


@pytest.mark.parametrize('name', sorted(TABLE))
def test_solver_results_are_feasible(name, table_profiles, channel):
    profile = table_profiles[name]
    for solver in (solve_no_et, solve_one_way, solve_two_way):
        result = solver(profile, channel)
        if result.notes.get('transfer_realizable') is False:
            continue
        report = check_feasible(result.schedule, result.transfers, profile,
                                channel, result.mode)
        assert report.ok, f"{result.policy_tag}: {report.violations()}"


def test_unrealizable_one_way_transfers_are_flagged(table_profiles, channel):
    result = solve_one_way(table_profiles['s1'], channel)
    assert result.notes['transfer_realizable'] is False
    assert not result.feasibility.ok
    assert result.throughput == pytest.approx(32.4212, abs=1e-3)


def _scale_into_budget(powers, harvests, lengths):
    used = np.cumsum(powers * lengths)
    budget = np.cumsum(harvests)
    ratio = np.min(np.where(used > 0, budget / np.maximum(used, 1e-300),
                            np.inf))
    return powers * min(1.0, ratio)


def test_no_feasible_perturbation_improves(example3, channel):
    result = solve_no_et(example3, channel)
    schedule = result.schedule
    lengths = np.asarray(example3.epoch_lengths)
    base = result.throughput
    rng = np.random.default_rng(13)
    improved = checked = 0
    for _ in range(1000):
        p1 = np.asarray(schedule.p1) + 1e-4 * rng.standard_normal(4)
        p2 = np.asarray(schedule.p2) + 1e-4 * rng.standard_normal(4)
        if np.any(p1 < 0) or np.any(p2 < 0):
            continue
        p1 = _scale_into_budget(p1, np.asarray(example3.e1), lengths)
        p2 = _scale_into_budget(p2, np.asarray(example3.e2), lengths)
        moved = PowerSchedule.from_arrays(p1, p2, lengths)
        if not check_feasible(moved, None, example3, channel).ok:
            continue
        checked += 1
        if throughput(moved, example3, channel) > base + 1e-6:
            improved += 1
    logger.info(f"Checked {checked} feasible perturbations.")
    assert checked > 900
    assert improved == 0


@pytest.mark.parametrize('name', sorted(TABLE))
def test_relaxations_increase_the_throughput(name, table_profiles, channel):
    profile = table_profiles[name]
    no_et = solve_no_et(profile, channel).throughput
    one_way = solve_one_way(profile, channel).throughput
    two_way = solve_two_way(profile, channel).throughput
    assert no_et <= one_way + 1e-6
    assert one_way <= two_way + 1e-6


def test_zero_harvest_instant_does_not_change_the_optimum(channel):
    coarse = make_profile([10, 9, 7, 9], [2, 10, 10, 13])
    fine = make_profile([10, 9, 0, 7, 9], [2, 10, 0, 10, 13],
                        instants=(0, 2, 3, 4, 6))
    for solver in (solve_no_et, solve_two_way):
        assert solver(coarse, channel).throughput \
            == pytest.approx(solver(fine, channel).throughput, abs=1e-5)


def test_centering_converges_at_large_barrier_parameters(channel):
    fine = make_profile([10, 9, 0, 7, 9], [2, 10, 0, 10, 13],
                        instants=(0, 2, 3, 4, 6))
    assert solve_no_et(fine, channel).throughput \
        == pytest.approx(28.9548, abs=1e-3)

    profile = make_profile([12, 13, 9, 10], [10, 16, 8, 9])
    no_et = solve_no_et(profile, channel)
    two_way = solve_two_way(profile, channel)
    assert no_et.feasibility.ok
    assert no_et.throughput <= solve_one_way(profile, channel).throughput \
        + 1e-6
    assert two_way.throughput == pytest.approx(
        two_way_optimal(profile, channel).throughput, abs=1e-4
    )


def test_solver_notes(example3, channel):
    result = solve_two_way(example3, channel)
    notes = result.notes
    logger.info(f"Solver notes: {notes}")
    assert notes['outer'] >= 1
    assert notes['iterations'] > 0
    assert notes['gap'] <= 1e-8 * max(abs(notes['objective']), 1.0)
    assert len(notes['lambda']) == example3.num_epochs
    assert set(notes['lambda']) <= {0.0, 0.5, 1.0}
    assert notes['objective'] == pytest.approx(result.throughput, abs=1e-5)


def test_solver_config_round_trip(tmp_path):
    cfg = SolverConfig(barrier_factor=20.0, rel_tol=1e-9)
    path = os.path.join(tmp_path, 'solver.yaml')
    cfg.save(path)
    loaded = SolverConfig.load(path)
    assert loaded.state_dict() == cfg.state_dict()


def test_solver_config_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        SolverConfig.load(os.path.join(tmp_path, 'missing.yaml'))
    with pytest.raises(ValueError):
        SolverConfig(barrier_factor=1.0)
    with pytest.raises(ValueError):
        SolverConfig(line_search_alpha=0.6)
    with pytest.raises(ValueError):
        SolverConfig().load_state_dict({'step_size': 0.1})


def test_solver_error_keeps_the_last_iterate(example3, channel):
    cfg = SolverConfig(max_outer_iter=1)
    with pytest.raises(SolverError) as info:
        solve_no_et(example3, channel, cfg)
    assert info.value.best_iterate is not None
    assert np.isfinite(info.value.best_objective)


def test_tiny_epochs_are_rejected(channel):
    profile = make_profile([1, 1], [1, 1], instants=(0, 1e-12), deadline=1)
    with pytest.raises(ProfileError):
        solve_two_way(profile, channel)


def test_solve_epigraph_defaults(example2, channel):
    problem = EpigraphProblem.build(example2, channel, TransferMode.TWO_WAY)
    x, info = solve_epigraph(problem)
    assert problem.objective(x) == pytest.approx(29.7968, abs=1e-3)
    assert info['objective'] == problem.objective(x)
