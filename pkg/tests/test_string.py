import logging
import itertools

import numpy as np
import pytest

from ehrc.errors import GridMismatchError, InfeasibleError
from ehrc.string import (
    Staircase,
    StringSolution,
    single_user_alloc,
    tight_string,
)

logger = logging.getLogger(__name__)


def utility(solution):
    powers = np.asarray(solution.powers)
    return float(np.dot(solution.durations, np.log2(1.0 + powers)))


def test_example_staircase_string():
    stair = Staircase.from_harvests([0, 2, 4, 6], [2, 9, 7, 9], 7)
    solution = tight_string(stair, (0, 0), (7, 27))
    logger.info(f"Powers: {solution.powers}")
    np.testing.assert_allclose(solution.powers, [1, 4, 9])
    np.testing.assert_allclose(solution.durations, [2, 4, 1])
    np.testing.assert_allclose(solution.breakpoints, [2, 6, 7])


def test_single_harvest_string():
    stair = Staircase.from_harvests([0], [10], 5)
    solution = tight_string(stair, (0, 0), (5, 10))
    assert solution.powers == (2.0,)
    assert solution.durations == (5.0,)


def test_capped_two_step_string():
    stair = Staircase((0, 2), (7, 18), 4)
    solution = tight_string(stair, (0, 0), (4, 18))
    np.testing.assert_allclose(solution.powers, [3.5, 5.5])
    np.testing.assert_allclose(solution.durations, [2, 2])


def test_string_from_an_inner_point():
    stair = Staircase.from_harvests([0, 2, 4, 6], [7, 11, 11, 9], 7)
    solution = tight_string(stair, (4, 18), (6, 29))
    np.testing.assert_allclose(solution.powers, [5.5])
    assert solution.end == pytest.approx((6, 29))


@pytest.mark.parametrize('energies, powers, durations', [
    ([10, 9, 14, 8], [4.75, 7, 8], [4, 2, 1]),
    ([7, 5, 5, 5], [17 / 6, 5], [6, 1]),
])
def test_single_user_alloc(energies, powers, durations):
    solution = single_user_alloc([0, 2, 4, 6], energies, 7)
    np.testing.assert_allclose(solution.powers, powers)
    np.testing.assert_allclose(solution.durations, durations)


def test_single_user_alloc_single_epoch():
    solution = single_user_alloc([0], [10], 4)
    np.testing.assert_allclose(solution.powers, [2.5])
    np.testing.assert_allclose(solution.durations, [4])


def test_equal_slopes_take_the_latest_vertex():
    solution = single_user_alloc([0, 1, 2], [1, 1, 1], 3)
    assert solution.powers == (1.0,)
    assert solution.durations == (3.0,)


@pytest.mark.parametrize('start, end', [
    ((0, 0), (7, 28)),        # more than harvested
    ((0, 3), (7, 20)),        # start above the staircase
    ((0, 10), (7, 5)),        # end below start
    ((7, 0), (7, 5)),         # empty interval
    ((0, 0), (4, 12)),        # more than harvested before t=4
])
def test_infeasible_endpoints(start, end):
    stair = Staircase.from_harvests([0, 2, 4, 6], [2, 9, 7, 9], 7)
    with pytest.raises(InfeasibleError):
        tight_string(stair, start, end)


def test_staircase_validation():
    with pytest.raises(InfeasibleError):
        Staircase((0, 0), (1, 2), 3)
    with pytest.raises(InfeasibleError):
        Staircase((0, 1), (2, 1), 3)
    with pytest.raises(InfeasibleError):
        Staircase((0, 3), (1, 2), 3)


def test_staircase_levels():
    stair = Staircase.from_harvests([0, 2, 4], [3, 4, 5], 6)
    assert stair.level_at(2) == 7
    assert stair.level_before(2) == 3
    assert stair.level_before(0) == 0
    assert stair.level_at(5) == 12
    assert stair.level_before(6) == 12
    np.testing.assert_allclose(stair.amounts, [3, 4, 5])
    assert stair.clamp(5).levels == (3.0, 5.0, 5.0)


def test_epoch_powers_on_the_grid():
    solution = single_user_alloc([0, 2, 4, 6], [2, 9, 7, 9], 7)
    powers = solution.epoch_powers([0, 2, 4, 6, 7])
    np.testing.assert_allclose(powers, [1, 4, 4, 9])


def test_epoch_powers_off_the_grid():
    solution = StringSolution((0, 0), (3, 7), (1, 2), (3, 4))
    with pytest.raises(GridMismatchError):
        solution.epoch_powers([0, 2, 4, 6, 7])


def test_concat_keeps_the_curve():
    first = StringSolution((0, 0), (2, 4), (1, 2), (2, 2))
    second = StringSolution((4, 6), (7,), (3,), (3,))
    curve = StringSolution.concat([first, second])
    assert curve.end == pytest.approx((7, 15))
    assert curve.consumed_at(5) == pytest.approx(9)


def random_staircases(count, max_vertices, max_energy, seed=7):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        k = int(rng.integers(1, max_vertices + 1))
        times = np.concatenate([[0], np.sort(rng.choice(
            np.arange(1, 6), size=k - 1, replace=False))])
        energies = rng.integers(0, max_energy + 1, size=k)
        energies[0] = max(energies[0], 1)
        horizon = times[-1] + int(rng.integers(1, 4))
        yield times, energies, horizon


@pytest.mark.parametrize('times, energies, horizon',
                         list(random_staircases(60, 4, 20)))
def test_string_properties(times, energies, horizon):
    solution = single_user_alloc(times, energies, horizon)
    stair = Staircase.from_harvests(times, energies, horizon)
    powers = np.asarray(solution.powers)
    assert np.all(np.diff(powers) > 0)
    for time in stair.times[1:]:
        assert solution.consumed_at(time) <= stair.level_before(time) + 1e-9
    assert solution.end[1] == pytest.approx(stair.total, rel=1e-12)


@pytest.mark.parametrize('times, energies, horizon',
                         list(random_staircases(40, 4, 20, seed=11)))
def test_no_small_move_improves_the_string(times, energies, horizon):
    solution = single_user_alloc(times, energies, horizon)
    stair = Staircase.from_harvests(times, energies, horizon)
    edges = np.append(times, horizon).astype(float)
    lengths = np.diff(edges)
    powers = solution.epoch_powers(edges)
    base = float(np.dot(lengths, np.log2(1 + powers)))
    eps = 1e-6
    for i in range(len(lengths) - 1):
        for direction in (1, -1):
            moved = powers.copy()
            moved[i] += direction * eps / lengths[i]
            moved[i + 1] -= direction * eps / lengths[i + 1]
            if np.any(moved < 0):
                continue
            used = np.cumsum(moved * lengths)
            budget = [stair.level_before(t) for t in edges[1:]]
            if np.any(used > np.asarray(budget) + 1e-12):
                continue
            value = float(np.dot(lengths, np.log2(1 + moved)))
            assert value <= base + 1e-12


def brute_force(times, energies, horizon, step=0.01):
    """Best utility over cumulative consumptions on a grid."""
    edges = np.append(times, horizon).astype(float)
    lengths = np.diff(edges)
    budget = np.cumsum(energies).astype(float)
    total = budget[-1]
    grids = [np.arange(0.0, budget[k] + step / 2, step)
             for k in range(len(times) - 1)]
    if not grids:
        return lengths[0] * np.log2(1 + total / lengths[0])
    mesh = np.meshgrid(*grids, indexing='ij')
    used = [np.zeros_like(mesh[0])] + list(mesh) \
        + [np.full_like(mesh[0], total)]
    value = np.zeros_like(mesh[0])
    valid = np.ones_like(mesh[0], dtype=bool)
    for k, length in enumerate(lengths):
        spent = used[k + 1] - used[k]
        valid &= spent >= -1e-12
        value += length * np.log2(1 + np.maximum(spent, 0) / length)
    return float(np.max(np.where(valid, value, -np.inf)))


def small_staircases():
    cases = []
    for k in (1, 2, 3):
        for energies in itertools.product((0, 3, 7, 10), repeat=k):
            if energies[0] == 0:
                continue
            cases.append((np.arange(k) * 2.0, np.asarray(energies), 2.0 * k))
    cases.append((np.array([0.0, 1.0, 3.0]), np.array([1, 10, 2]), 4.0))
    cases.append((np.array([0.0, 3.0, 4.0]), np.array([9, 0, 7]), 6.0))
    cases.append((np.array([0.0, 0.5, 2.5]), np.array([4, 6, 1]), 3.0))
    cases.append((np.array([0.0, 1.5]), np.array([2, 13]), 5.0))
    return cases


@pytest.mark.parametrize('times, energies, horizon', small_staircases())
def test_string_matches_brute_force(times, energies, horizon):
    solution = single_user_alloc(times, energies, horizon)
    best = brute_force(times, energies, horizon)
    value = utility(solution)
    logger.info(f"string {value:.6f} brute force {best:.6f}")
    assert value >= best - 1e-9
    assert value <= best + 0.03
