import os
import logging

import pytest

from ehrc.core import ChannelModel, EHProfile
from ehrc.bench import Scenario, generate_poisson
from ehrc.policies import (
    NotApplicable,
    disjoint,
    greedy_no_et,
    one_way_optimal,
    total_suboptimal_no_et,
    two_way_optimal,
)
from ehrc.solver import solve_no_et, solve_one_way, solve_two_way

logger = logging.getLogger(__name__)

DATA_DIR = os.path.join(os.path.dirname(__file__), 'data')
INSTANTS = (0.0, 2.0, 4.0, 6.0)
DEADLINE = 7.0

# name: (e1, e2, total suboptimal, disjoint, solver no ET,
#        solver one-way ET, two-way ET)
TABLE = {
    's1': ([10, 21, 14, 9], [7, 5, 8, 11],
           31.8339, 31.8082, 32.1965, 32.4212, 32.4212),
    's2': ([10, 9, 14, 8], [7, 5, 5, 5],
           29.7968, 29.7821, 29.7968, 29.7968, 29.7968),
    's3': ([10, 9, 7, 9], [2, 10, 10, 13],
           28.2032, 28.4398, 28.9548, 29.8207, 31.1735),
    's4': ([17, 7, 9, 5], [13, 7, 9, 10],
           31.5337, 31.5387, 31.5387, 31.5387, 33.6705),
    's5': ([7, 11, 15, 15], [12, 15, 10, 8],
           32.3543, 32.3543, 32.7000, 32.7000, 35.3402),
    's6': ([7, 11, 11, 9], [10, 7, 11, 12],
           31.1175, 31.1175, 31.1175, 31.1175, 33.4912),
}


def make_profile(e1, e2, instants=INSTANTS, deadline=DEADLINE):
    return EHProfile(tuple(instants), tuple(e1), tuple(e2), deadline)


@pytest.fixture(scope='session')
def channel():
    return ChannelModel(a=2.0, b=2.0)


@pytest.fixture(scope='session')
def example1():
    return make_profile([2, 9, 7, 9], [9, 2, 9, 10])


@pytest.fixture(scope='session')
def example2():
    return make_profile([10, 9, 14, 8], [7, 5, 5, 5])


@pytest.fixture(scope='session')
def example3():
    return make_profile([10, 9, 7, 9], [2, 10, 10, 13])


@pytest.fixture(scope='session')
def table_profiles():
    return {name: make_profile(row[0], row[1]) for name, row in TABLE.items()}


@pytest.fixture(scope='session')
def table_scenarios(table_profiles, channel):
    return [Scenario(name, profile, channel)
            for name, profile in table_profiles.items()]


@pytest.fixture(scope='session')
def poisson_scenarios():
    return generate_poisson(2024, 1000, 10.0, INSTANTS, DEADLINE)


@pytest.fixture(scope='session')
def poisson_results(poisson_scenarios):
    """Every policy and solver on the Poisson scenarios, computed once."""
    results = []
    for scenario in poisson_scenarios:
        profile, ch = scenario.profile, scenario.channel
        greedy = greedy_no_et(profile, ch)
        one_way = one_way_optimal(profile, ch)
        results.append({
            'scenario': scenario,
            'greedy': None if isinstance(greedy, NotApplicable) else greedy,
            'total_subopt': total_suboptimal_no_et(profile, ch),
            'disjoint': disjoint(profile, ch),
            'one_way': None if isinstance(one_way, NotApplicable)
            else one_way,
            'two_way': two_way_optimal(profile, ch),
            'solve_no_et': solve_no_et(profile, ch),
            'solve_one_way': solve_one_way(profile, ch),
            'solve_two_way': solve_two_way(profile, ch),
        })
    logger.info(f"Evaluated {len(results)} Poisson scenarios.")
    return results
