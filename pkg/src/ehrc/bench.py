#!/usr/bin/env python3
#-*- encoding: utf8 -*-

"""
+=============================================================================+
|          SCENARIOS, POLICY COMPARISON AND COMMAND LINE INTERFACE            |
+=============================================================================+

Scenario files are YAML documents::

    name: example2
    channel:
      a: 2.0
      b: 2.0
      noise: 1.0          # optional, normalized noise level
      bandwidth: 1.0      # optional, MHz
      physical:           # optional, replaces noise and bandwidth
        noise_psd: 1.0e-19
        bandwidth_hz: 1.0e+6
        path_loss_db: 100.0
    profile:
      instants: [0, 2, 4, 6]
      e1: [10, 9, 14, 8]
      e2: [7, 5, 5, 5]
      deadline: 7

Subcommands: ``alloc``, ``compare``, ``gen``, ``staircase`` and ``audit``.
Exit codes: 0 success, 2 invalid input, 3 policy not applicable, 4 solver
failure, 125 canceled by user.


MIT License

Copyright (c) 2025 Doctor Mokira

Permission is hereby granted, free of charge, to any person obtaining a copy
of this software and associated documentation files (the "Software"), to deal
in the Software without restriction, including without limitation the rights
to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
copies of the Software, and to permit persons to whom the Software is
furnished to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in all
copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
SOFTWARE.
"""

__version__ = '0.1.0'
__author__ = 'Doctor Mokira'

import os
import sys
import glob
import argparse
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import yaml
import numpy as np
import pandas as pd
import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
from scipy import stats
from tqdm import tqdm

from ehrc.core import ChannelModel, EHProfile, check_grid, binding_branches
from ehrc.errors import (
    ContractError,
    DomainError,
    InfeasibleError,
    ProfileError,
    ScenarioError,
    SolverError,
)
from ehrc.policies import (
    NotApplicable,
    disjoint,
    disjoint_modified,
    greedy_no_et,
    modified_eh_patterns,
    one_way_optimal,
    total_suboptimal_no_et,
    two_way_optimal,
)
from ehrc.solver import (
    SolverConfig,
    solve_no_et,
    solve_one_way,
    solve_two_way,
)

# Set up logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - - \033[95m%(levelname)s\033[0m - %(message)s',
    handlers=[
        logging.FileHandler("ehrc.log"),
        logging.StreamHandler()
    ]
)
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NOT_APPLICABLE = 3
EXIT_SOLVER = 4
EXIT_CANCELED = 125


def _r15(value):
    """Round to 15 significant digits."""
    return float(f"{float(value):.15g}")


def _plain(value):
    """Convert numpy values into YAML friendly builtins."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return _r15(value)
    if hasattr(value, 'value'):
        return value.value
    return value


###############################################################################
# SCENARIOS
###############################################################################

@dataclass(frozen=True)
class Scenario:
    """
    A named profile with its channel

    :arg physical: Physical link parameters the channel was derived from,
      ``None`` when the channel was given in normalized form.
    """
    name: str
    profile: EHProfile
    channel: ChannelModel
    physical: dict = field(default=None)


def _line_index(node, prefix=''):
    """
    Map every dotted field path of a YAML node to its line

    :rtype: typing.Dict[str, int]
    """
    lines = {}
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            path = f"{prefix}.{key_node.value}" if prefix else key_node.value
            lines[path] = key_node.start_mark.line + 1
            lines.update(_line_index(value_node, path))
    elif isinstance(node, yaml.SequenceNode):
        for idx, item in enumerate(node.value):
            path = f"{prefix}[{idx}]"
            lines[path] = item.start_mark.line + 1
            lines.update(_line_index(item, path))
    return lines


def _read_documents(path):
    if not os.path.isfile(path):
        raise FileNotFoundError(f"No such scenario file at {path}.")
    with open(path, mode='r', encoding='utf-8') as f:
        text = f.read()
    try:
        nodes = list(yaml.compose_all(text, Loader=yaml.SafeLoader))
        documents = list(yaml.safe_load_all(text))
    except yaml.YAMLError as e:
        mark = getattr(e, 'problem_mark', None)
        raise ScenarioError(
            f"Malformed YAML: {getattr(e, 'problem', None) or e}",
            line=mark.line + 1 if mark else None,
            path=path,
        ) from e
    return [
        (document, _line_index(node))
        for document, node in zip(documents, nodes)
        if document is not None
    ]


def _get(data, key, prefix, lines, path):
    name = f"{prefix}.{key}" if prefix else key
    if not isinstance(data, dict):
        raise ScenarioError(
            "Expected a mapping.", field=prefix or None,
            line=lines.get(prefix), path=path
        )
    if key not in data:
        raise ScenarioError(
            f"Missing field '{name}'.", field=name,
            line=lines.get(prefix), path=path
        )
    return data[key]


def _number(value, name, lines, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(
            f"Expected a number, got {value!r}.", field=name,
            line=lines.get(name), path=path
        )
    return float(value)


def _numbers(values, name, lines, path):
    if not isinstance(values, list):
        raise ScenarioError(
            f"Expected a list of numbers, got {values!r}.", field=name,
            line=lines.get(name), path=path
        )
    return tuple(
        _number(v, f"{name}[{i}]", lines, path) for i, v in enumerate(values)
    )


def scenario_from_dict(data, lines=None, path=None, default_name=None):
    """
    Validate a parsed scenario document

    :param data: The parsed YAML document;
    :param lines: Line of every dotted field path, for error messages;
    :param path: Source file, for error messages;
    :param default_name: Name used when the document has none;

    :rtype: Scenario
    """
    lines = lines or {}
    name = data.get('name', default_name) if isinstance(data, dict) \
        else default_name
    channel_data = _get(data, 'channel', '', lines, path)
    profile_data = _get(data, 'profile', '', lines, path)

    a = _number(_get(channel_data, 'a', 'channel', lines, path),
                'channel.a', lines, path)
    b = _number(_get(channel_data, 'b', 'channel', lines, path),
                'channel.b', lines, path)
    physical = channel_data.get('physical')
    try:
        if physical is not None:
            if not isinstance(physical, dict):
                raise ScenarioError(
                    "Expected a mapping.", field='channel.physical',
                    line=lines.get('channel.physical'), path=path
                )
            physical = {
                key: _number(_get(physical, key, 'channel.physical',
                                  lines, path),
                             f"channel.physical.{key}", lines, path)
                for key in ('noise_psd', 'bandwidth_hz', 'path_loss_db')
            }
            channel = ChannelModel.from_physical(a, b, **physical)
        else:
            channel = ChannelModel(
                a, b,
                noise=_number(channel_data.get('noise', 1.0),
                              'channel.noise', lines, path),
                bandwidth=_number(channel_data.get('bandwidth', 1.0),
                                  'channel.bandwidth', lines, path),
            )
    except DomainError as e:
        raise ScenarioError(
            str(e), field='channel', line=lines.get('channel'), path=path
        ) from e

    values = {
        key: _numbers(_get(profile_data, key, 'profile', lines, path),
                      f"profile.{key}", lines, path)
        for key in ('instants', 'e1', 'e2')
    }
    deadline = _number(_get(profile_data, 'deadline', 'profile', lines, path),
                       'profile.deadline', lines, path)
    try:
        profile = EHProfile(deadline=deadline, **values)
    except ProfileError as e:
        field_name = f"profile.{e.field}" if e.field else 'profile'
        raise ScenarioError(
            str(e), field=field_name,
            line=lines.get(field_name, lines.get('profile')), path=path
        ) from e

    return Scenario(
        name=str(name) if name is not None else 'scenario',
        profile=profile,
        channel=channel,
        physical=physical,
    )


def scenario_to_dict(scenario):
    """
    Canonical serializable form of a scenario

    :rtype: typing.Dict[str, object]
    """
    channel = {'a': _r15(scenario.channel.a), 'b': _r15(scenario.channel.b)}
    if scenario.physical:
        channel['physical'] = _plain(scenario.physical)
    else:
        channel['noise'] = _r15(scenario.channel.noise)
        channel['bandwidth'] = _r15(scenario.channel.bandwidth)
    profile = scenario.profile
    return {
        'name': scenario.name,
        'channel': channel,
        'profile': {
            'instants': _plain(profile.instants),
            'e1': _plain(profile.e1),
            'e2': _plain(profile.e2),
            'deadline': _r15(profile.deadline),
        },
    }


def dump_scenarios(scenarios):
    """Multi-document YAML text of scenarios."""
    return yaml.safe_dump_all(
        [scenario_to_dict(s) for s in scenarios],
        sort_keys=False, default_flow_style=None
    )


def load_scenario(path):
    """
    Load the first scenario of a YAML file

    :param path: The scenario file;
    :rtype: Scenario
    """
    scenarios = load_scenarios([path])
    if not scenarios:
        raise ScenarioError("The file holds no scenario.", path=path)
    return scenarios[0]


def load_scenarios(paths):
    """
    Load every scenario of files and directories

    Directories are scanned for ``*.yaml`` and ``*.yml`` files in name
    order; a file may hold several YAML documents.

    :type paths: typing.Iterable[str]
    :rtype: typing.List[Scenario]
    """
    files = []
    for path in paths:
        if os.path.isdir(path):
            found = glob.glob(os.path.join(path, '*.yaml')) \
                + glob.glob(os.path.join(path, '*.yml'))
            files.extend(sorted(found))
        else:
            files.append(path)

    scenarios = []
    for file_path in files:
        stem = os.path.splitext(os.path.basename(file_path))[0]
        documents = _read_documents(file_path)
        for idx, (data, lines) in enumerate(documents):
            default_name = stem if len(documents) == 1 else f"{stem}-{idx}"
            scenarios.append(
                scenario_from_dict(data, lines, file_path, default_name)
            )
    return scenarios


def save_scenario(scenario, path):
    """
    Save a scenario into a YAML file

    :type scenario: Scenario
    :type path: str
    """
    with open(path, mode='w', encoding='utf-8') as f:
        yaml.safe_dump(scenario_to_dict(scenario), f,
                       sort_keys=False, default_flow_style=None)


def result_to_dict(result):
    """
    Serializable form of an allocation result, 15 significant digits.

    :type result: ehrc.core.AllocationResult
    :rtype: typing.Dict[str, object]
    """
    schedule = result.schedule
    segments = {}
    for node, key in ((1, 'p1'), (2, 'p2')):
        powers, durations = schedule.segments(node)
        segments[key] = {'powers': _plain(powers),
                         'durations': _plain(durations)}
    return {
        'policy': result.policy_tag,
        'mode': result.mode.value,
        'throughput': _r15(result.throughput),
        'schedule': {
            'p1': _plain(schedule.p1),
            'p2': _plain(schedule.p2),
            'durations': _plain(schedule.durations),
        },
        'segments': segments,
        'transfers': {
            'd1': _plain(result.transfers.d1),
            'd2': _plain(result.transfers.d2),
        },
        'excess_energy': _plain(result.excess_energy),
        'feasible': result.feasibility.ok,
        'active': [[name, k] for name, k in result.feasibility.active],
        'notes': _plain(result.notes),
    }


def save_result(result, path):
    """
    Save an allocation result into a YAML file

    :type result: ehrc.core.AllocationResult
    :type path: str
    """
    with open(path, mode='w', encoding='utf-8') as f:
        yaml.safe_dump(result_to_dict(result), f,
                       sort_keys=False, default_flow_style=None)


def load_result(path):
    """
    Read back a saved result

    :rtype: typing.Dict[str, object]
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"No such result file at {path}.")
    with open(path, mode='r', encoding='utf-8') as f:
        return yaml.safe_load(f)


def generate_poisson(
    seed, count, mean, instants, deadline, a=2.0, b=2.0, progress=False
):
    """
    Random scenarios with Poisson harvests
    --------------------------------------

    Harvests are drawn by inversion: uniforms of the PCG64 generator seeded
    with ``seed`` go through the Poisson quantile function. A first harvest
    equal to zero is drawn again until it is positive.

    :param seed: Seed of the generator;
    :param count: Number of scenarios;
    :param mean: Mean harvest in mJ;
    :param instants: Harvest instants;
    :param deadline: Deadline in s;
    :param a: S-R gain;
    :param b: R-D gain;
    :param progress: Show a progress bar;

    :rtype: typing.List[Scenario]
    """
    if not mean > 0:
        raise ValueError(f"Mean harvest must be positive, got {mean}.")
    rng = np.random.Generator(np.random.PCG64(seed))
    instants = tuple(float(t) for t in instants)
    channel = ChannelModel(a, b)

    def draw(size):
        u = rng.random(size)
        return np.clip(stats.poisson.ppf(u, mean), 0, None).astype(int)

    scenarios = []
    bar = tqdm(range(count), desc="Generating", disable=not progress)
    for idx in bar:
        harvests = []
        for _ in range(2):
            e = draw(len(instants))
            while e[0] <= 0:
                e[0] = draw(1)[0]
            harvests.append(tuple(int(v) for v in e))
        profile = EHProfile(instants, harvests[0], harvests[1], deadline)
        scenarios.append(Scenario(f"poisson-{seed}-{idx:04d}", profile,
                                  channel))
    return scenarios


###############################################################################
# POLICIES
###############################################################################

POLICIES = {
    'greedy': lambda profile, ch, cfg: greedy_no_et(profile, ch),
    'total-subopt': lambda profile, ch, cfg: total_suboptimal_no_et(
        profile, ch),
    'disjoint': lambda profile, ch, cfg: disjoint(profile, ch),
    'one-way': lambda profile, ch, cfg: one_way_optimal(profile, ch),
    'two-way': lambda profile, ch, cfg: two_way_optimal(profile, ch),
    'solve-no-et': solve_no_et,
    'solve-one-way': solve_one_way,
    'solve-two-way': solve_two_way,
}
FALLBACKS = {'greedy': 'solve-no-et', 'one-way': 'solve-one-way'}


def run_policy(name, scenario, cfg=None, fallback=False):
    """
    Run a policy by name on a scenario

    :param name: One of :data:`POLICIES`;
    :param scenario: The scenario;
    :param cfg: Solver settings;
    :param fallback: Run the matching solver when the policy does not apply;

    :rtype: typing.Union[ehrc.core.AllocationResult, NotApplicable]
    """
    if name not in POLICIES:
        raise ValueError(
            f"Unknown policy {name!r}, expected one of {sorted(POLICIES)}."
        )
    outcome = POLICIES[name](scenario.profile, scenario.channel, cfg)
    if isinstance(outcome, NotApplicable) and fallback \
            and name in FALLBACKS:
        logger.warning(f"{outcome}; falling back to {FALLBACKS[name]}.")
        outcome = POLICIES[FALLBACKS[name]](
            scenario.profile, scenario.channel, cfg
        )
    return outcome


###############################################################################
# COMPARISON
###############################################################################

COLUMNS = (
    ('total_subopt', 'Total suboptimal'),
    ('disjoint', 'Disjoint'),
    ('solve_no_et', 'Solver no ET'),
    ('solve_one_way', 'Solver one-way ET'),
    ('two_way', 'Two-way ET'),
)


@dataclass(frozen=True)
class ComparisonRow:
    """
    Throughput in Mbits of every policy column for one scenario.
    """
    scenario: str
    total_subopt: float = None
    disjoint: float = None
    solve_no_et: float = None
    solve_one_way: float = None
    two_way: float = None
    greedy_applicable: bool = None
    one_way_applicable: bool = None
    error: str = None


def compare_scenario(scenario, cfg=None):
    """
    Run every policy and solver on a scenario, never raising.

    :rtype: ComparisonRow
    """
    profile, ch = scenario.profile, scenario.channel
    try:
        greedy = greedy_no_et(profile, ch)
        one_way = one_way_optimal(profile, ch)
        return ComparisonRow(
            scenario=scenario.name,
            total_subopt=total_suboptimal_no_et(profile, ch).throughput,
            disjoint=disjoint(profile, ch).throughput,
            solve_no_et=solve_no_et(profile, ch, cfg).throughput,
            solve_one_way=solve_one_way(profile, ch, cfg).throughput,
            two_way=two_way_optimal(profile, ch).throughput,
            greedy_applicable=not isinstance(greedy, NotApplicable),
            one_way_applicable=not isinstance(one_way, NotApplicable),
        )
    except (ValueError, RuntimeError) as e:
        logger.error(f"Scenario {scenario.name} failed: {e}")
        return ComparisonRow(
            scenario=scenario.name, error=f"{type(e).__name__}: {e}"
        )


def run_comparison(scenarios, cfg=None, workers=1, progress=True):
    """
    Compare the policies on a batch of scenarios
    --------------------------------------------

    Rows come back in the order of ``scenarios`` whatever the number of
    workers; a failing scenario yields a row with its ``error`` set.

    :param scenarios: The scenarios;
    :param cfg: Solver settings;
    :param workers: Number of threads;
    :param progress: Show a progress bar;

    :type scenarios: typing.List[Scenario]
    :type cfg: SolverConfig
    :type workers: int
    :rtype: typing.List[ComparisonRow]
    """
    scenarios = list(scenarios)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(tqdm(
                pool.map(lambda s: compare_scenario(s, cfg), scenarios),
                total=len(scenarios), desc="Comparing",
                disable=not progress,
            ))
        return rows

    rows = []
    bar = tqdm(scenarios, desc="Comparing", disable=not progress)
    for scenario in bar:
        bar.set_postfix(scenario=scenario.name)
        rows.append(compare_scenario(scenario, cfg))
    return rows


def comparison_frame(rows):
    """
    :rtype: pandas.DataFrame
    """
    names = ['scenario'] + [key for key, _ in COLUMNS] \
        + ['greedy_applicable', 'one_way_applicable', 'error']
    records = [[getattr(row, name) for name in names] for row in rows]
    return pd.DataFrame(records, columns=names)


def render_markdown(rows):
    """
    Table of the comparison with 4 decimals.

    :rtype: str
    """
    headers = ['Scenario'] + [title for _, title in COLUMNS] \
        + ['Greedy', 'One-way', 'Error']
    lines = [
        '| ' + ' | '.join(headers) + ' |',
        '|' + '|'.join(['---'] + ['---:'] * len(COLUMNS)
                       + [':---:', ':---:', '---']) + '|',
    ]

    def flag(value):
        if value is None:
            return '-'
        return 'yes' if value else 'no'

    for row in rows:
        cells = [row.scenario]
        for key, _ in COLUMNS:
            value = getattr(row, key)
            cells.append('-' if value is None else f"{value:.4f}")
        cells += [flag(row.greedy_applicable), flag(row.one_way_applicable),
                  row.error or '']
        lines.append('| ' + ' | '.join(cells) + ' |')
    return '\n'.join(lines) + '\n'


def render_csv(rows):
    return comparison_frame(rows).to_csv(index=False, float_format='%.15g')


def render_json(rows):
    return comparison_frame(rows).to_json(
        orient='records', double_precision=15, indent=2
    ) + '\n'


RENDERERS = {'md': render_markdown, 'csv': render_csv, 'json': render_json}


###############################################################################
# STAIRCASE EXPORT
###############################################################################

def _cumulative_at_edges(amounts):
    cumulative = np.cumsum(amounts)
    return np.append(cumulative, cumulative[-1])


def emit_staircase(scenario, result, path=None):
    """
    Cumulative harvested and consumed energy curves
    -----------------------------------------------

    Sampled at every epoch edge: harvested values include the harvest made
    at the edge, consumed values are the energy spent up to it. Columns of
    the modified harvests are added when the result carries transfers.

    :param scenario: The scenario;
    :param result: An allocation on the grid of the scenario;
    :param path: CSV file to write, nothing is written when ``None``;
    :returns: The curves.

    :type scenario: Scenario
    :type result: ehrc.core.AllocationResult
    :type path: str
    :rtype: pandas.DataFrame
    """
    profile, ch = scenario.profile, scenario.channel
    schedule = result.schedule
    check_grid(schedule, profile)
    lengths = np.asarray(schedule.durations)

    harvested_s = _cumulative_at_edges(profile.harvests(1))
    harvested_r = _cumulative_at_edges(profile.harvests(2))
    consumed_s = np.concatenate([[0.0], np.cumsum(np.multiply(schedule.p1,
                                                              lengths))])
    consumed_r = np.concatenate([[0.0], np.cumsum(np.multiply(schedule.p2,
                                                              lengths))])
    frame = pd.DataFrame({
        'time': profile.edges,
        'harvested_s': harvested_s,
        'harvested_r': harvested_r,
        'consumed_s': consumed_s,
        'consumed_r': consumed_r,
        'harvested_total': harvested_s + ch.b2 * harvested_r,
        'consumed_total': consumed_s + ch.b2 * consumed_r,
    })
    if not result.transfers.is_zero:
        e1, e2 = modified_eh_patterns(profile, result.transfers, ch)
        frame['modified_s'] = _cumulative_at_edges(e1)
        frame['modified_r'] = _cumulative_at_edges(e2)

    if path:
        frame.to_csv(path, index=False, float_format='%.15g')
        logger.info(f"Staircase saved at {path}.")
    return frame


def plot_staircase(frame, path, title=None):
    """
    Save the harvested and consumed curves of both nodes as an image.

    :type frame: pandas.DataFrame
    :type path: str
    """
    fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharex=True)
    for ax, node, label in ((axes[0], 's', 'S'), (axes[1], 'r', 'R')):
        ax.step(frame['time'], frame[f'harvested_{node}'], where='post',
                label='harvested')
        ax.plot(frame['time'], frame[f'consumed_{node}'], marker='o',
                label='consumed')
        if f'modified_{node}' in frame:
            ax.step(frame['time'], frame[f'modified_{node}'], where='post',
                    linestyle='--', label='after transfer')
        ax.set_title(label)
        ax.set_xlabel('time (s)')
        ax.set_ylabel('energy (mJ)')
        ax.legend()
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    logger.info(f"Staircase figure saved at {path}.")


###############################################################################
# AUDIT
###############################################################################

def _segments_equal(schedule, other, node, tol=5e-9):
    powers, durations = schedule.segments(node)
    other_powers, other_durations = other.segments(node)
    return len(powers) == len(other_powers) \
        and np.allclose(powers, other_powers, rtol=0, atol=tol) \
        and np.allclose(durations, other_durations, rtol=0, atol=tol)


def run_audit(scenario, cfg=None):
    """
    Check the closed form policies against the solver
    -------------------------------------------------

    Reports the throughput gaps of the greedy, one-way and two-way policies
    to their solver counterparts, the energy exhaustion residuals of the
    one-way policy, whether both rate branches are equal under the two-way
    policy, and whether single-user strings on the harvests modified by the
    two-way transfers give back the two-way powers.

    :rtype: typing.Dict[str, object]
    """
    profile, ch = scenario.profile, scenario.channel
    report = {'scenario': scenario.name}

    greedy = greedy_no_et(profile, ch)
    one_way = one_way_optimal(profile, ch)
    two_way = two_way_optimal(profile, ch)

    reference = solve_no_et(profile, ch, cfg)
    report['solve_no_et'] = reference.throughput
    report['greedy_gap'] = None if isinstance(greedy, NotApplicable) \
        else abs(greedy.throughput - reference.throughput)

    reference = solve_one_way(profile, ch, cfg)
    report['solve_one_way'] = reference.throughput
    if isinstance(one_way, NotApplicable):
        report['one_way_gap'] = None
        report['one_way_exhaustion'] = None
    else:
        report['one_way_gap'] = abs(one_way.throughput - reference.throughput)
        lengths = profile.epoch_lengths
        sent = float(np.sum(one_way.transfers.d1))
        report['one_way_exhaustion'] = [
            float(np.dot(one_way.schedule.p1, lengths)) + sent
            - float(np.sum(profile.e1)),
            float(np.dot(one_way.schedule.p2, lengths))
            - float(np.sum(profile.e2)) - sent / ch.b2,
        ]

    reference = solve_two_way(profile, ch, cfg)
    report['solve_two_way'] = reference.throughput
    report['two_way'] = two_way.throughput
    report['two_way_gap'] = abs(two_way.throughput - reference.throughput)
    report['branches_equal'] = bool(
        np.all(binding_branches(two_way.schedule, ch) == 0.5)
    )
    try:
        modified = disjoint_modified(profile, two_way.transfers, ch)
        report['modified_patterns_match'] = all(
            _segments_equal(modified, two_way.schedule, node)
            for node in (1, 2)
        )
    except InfeasibleError as e:
        logger.warning(f"Modified harvests are not a staircase: {e}")
        report['modified_patterns_match'] = None
    return _plain(report)


###############################################################################
# COMMAND LINE INTERFACE
###############################################################################

def parse_argument(argv=None):
    """
    Command line argument parsing

    :rtype: argparse.Namespace
    """
    parser = argparse.ArgumentParser(
        prog="ehrc",
        description="Energy harvesting relay channel scheduling"
    )
    sub = parser.add_subparsers(dest='command', required=True)

    alloc = sub.add_parser('alloc', help="Run one policy on a scenario")
    alloc.add_argument('-s', '--scenario', type=str, required=True)
    alloc.add_argument('-p', '--policy', choices=sorted(POLICIES),
                       required=True)
    alloc.add_argument('-o', '--out', type=str)
    alloc.add_argument(
        '--fallback', action='store_true',
        help="Run the matching solver when the policy does not apply"
    )
    alloc.add_argument('--solver-config', type=str)

    compare = sub.add_parser('compare', help="Compare every policy")
    compare.add_argument('-s', '--scenarios', type=str, nargs='+',
                         required=True)
    compare.add_argument('-f', '--format', choices=sorted(RENDERERS),
                         default='md')
    compare.add_argument('-o', '--out', type=str)
    compare.add_argument('-w', '--workers', type=int, default=1)
    compare.add_argument('--no-progress', action='store_true')
    compare.add_argument('--solver-config', type=str)

    gen = sub.add_parser('gen', help="Generate Poisson scenarios")
    gen.add_argument('--seed', type=int, default=42)
    gen.add_argument('-n', '--count', type=int, default=10)
    gen.add_argument('--mean', type=float, default=10.0)
    gen.add_argument('--instants', type=str, default='0,2,4,6')
    gen.add_argument('--deadline', type=float, default=7.0)
    gen.add_argument('-a', type=float, default=2.0)
    gen.add_argument('-b', type=float, default=2.0)
    gen.add_argument('--out-dir', type=str)

    staircase = sub.add_parser('staircase', help="Export energy curves")
    staircase.add_argument('-s', '--scenario', type=str, required=True)
    staircase.add_argument('-p', '--policy', choices=sorted(POLICIES),
                           required=True)
    staircase.add_argument('-o', '--out', type=str, required=True)
    staircase.add_argument('--plot', type=str, help="PNG figure to save")
    staircase.add_argument('--solver-config', type=str)

    audit = sub.add_parser('audit', help="Check policies against the solver")
    audit.add_argument('-s', '--scenario', type=str, required=True)
    audit.add_argument('--solver-config', type=str)

    args = parser.parse_args(argv)
    logger.info("Run arguments:")
    for arg, value in vars(args).items():
        logger.info(f"  {arg}: {value}")
    return args


def _solver_config(args):
    path = getattr(args, 'solver_config', None)
    return SolverConfig.load(path) if path else SolverConfig()


def _write(text, path=None):
    if path:
        with open(path, mode='w', encoding='utf-8') as f:
            f.write(text)
        logger.info(f"Output saved at {path}.")
    else:
        sys.stdout.write(text)


def _not_applicable(outcome):
    logger.warning(str(outcome))
    print(f"NotApplicable: {outcome.reason} ({outcome.constraint},"
          f" k={outcome.index})")
    return EXIT_NOT_APPLICABLE


def _alloc(args):
    scenario = load_scenario(args.scenario)
    outcome = run_policy(args.policy, scenario, _solver_config(args),
                         fallback=args.fallback)
    if isinstance(outcome, NotApplicable):
        return _not_applicable(outcome)
    text = yaml.safe_dump(result_to_dict(outcome), sort_keys=False,
                          default_flow_style=None)
    _write(text, args.out)
    return EXIT_OK


def _compare(args):
    scenarios = load_scenarios(args.scenarios)
    rows = run_comparison(scenarios, _solver_config(args),
                          workers=args.workers,
                          progress=not args.no_progress)
    _write(RENDERERS[args.format](rows), args.out)
    return EXIT_OK


def _gen(args):
    instants = [float(t) for t in args.instants.split(',') if t.strip()]
    scenarios = generate_poisson(
        args.seed, args.count, args.mean, instants, args.deadline,
        a=args.a, b=args.b, progress=bool(args.out_dir),
    )
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        for scenario in scenarios:
            save_scenario(scenario,
                          os.path.join(args.out_dir, f"{scenario.name}.yaml"))
        logger.info(f"{len(scenarios)} scenarios saved in {args.out_dir}.")
    else:
        sys.stdout.write(dump_scenarios(scenarios))
    return EXIT_OK


def _staircase(args):
    scenario = load_scenario(args.scenario)
    outcome = run_policy(args.policy, scenario, _solver_config(args))
    if isinstance(outcome, NotApplicable):
        return _not_applicable(outcome)
    frame = emit_staircase(scenario, outcome, args.out)
    if args.plot:
        plot_staircase(frame, args.plot,
                       title=f"{scenario.name} ({outcome.policy_tag})")
    return EXIT_OK


def _audit(args):
    report = run_audit(load_scenario(args.scenario), _solver_config(args))
    sys.stdout.write(yaml.safe_dump(report, sort_keys=False,
                                    default_flow_style=None))
    return EXIT_OK


COMMANDS = {
    'alloc': _alloc,
    'compare': _compare,
    'gen': _gen,
    'staircase': _staircase,
    'audit': _audit,
}


def main(argv=None):
    """
    Main function of the command line interface

    :returns: The process exit code.
    :rtype: int
    """
    args = parse_argument(argv)
    try:
        return COMMANDS[args.command](args)
    except (SolverError, ContractError) as e:
        logger.error(f"[{type(e).__name__}] {e}")
        return EXIT_SOLVER
    except FileNotFoundError as e:
        logger.error(f"[FileNotFoundError] {e}")
        return EXIT_INVALID
    except ValueError as e:
        logger.error(f"[{type(e).__name__}] {e}")
        return EXIT_INVALID
    except KeyboardInterrupt:
        print("\033[91mCanceled by user!\033[0m")
        return EXIT_CANCELED


if __name__ == '__main__':
    exit(main())
