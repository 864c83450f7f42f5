#!/usr/bin/env python3
#-*- encoding: utf8 -*-

"""
+=============================================================================+
|               CLOSED FORM POWER AND ENERGY TRANSFER POLICIES                |
+=============================================================================+

Offline policies of the energy harvesting relay channel:

  - greedy allocation without energy transfer (optimal when R harvests
    enough energy);
  - total power suboptimal allocation without energy transfer;
  - disjoint single-user allocation of S and R;
  - optimal allocation with one-way S to R transfer (optimal when S
    harvests enough energy);
  - optimal allocation with two-way transfer.

Policies that are only optimal under a condition return a
:class:`NotApplicable` outcome when the condition fails.


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

import logging
from dataclasses import dataclass

import numpy as np

from ehrc.core import (
    FEASIBILITY_TOL,
    AllocationResult,
    PowerSchedule,
    TransferMode,
    TransferSchedule,
    check_feasible,
    scaled_totals,
)
from ehrc.errors import ContractError
from ehrc.string import StringSolution, single_user_alloc, tight_string

logger = logging.getLogger(__name__)

SLOT_TOL = 1e-9


@dataclass(frozen=True)
class NotApplicable:
    """
    Outcome of a policy whose optimality condition does not hold

    :arg policy_tag: Name of the policy.
    :arg reason: Human readable description.
    :arg constraint: Name of the failed constraint.
    :arg index: One based index ``k`` of the failed constraint.
    :arg slack: Slack of the failed constraint.
    """
    policy_tag: str
    reason: str
    constraint: str
    index: int
    slack: float

    def __str__(self):
        return f"{self.policy_tag} not applicable: {self.reason}"


def _first_violation(values):
    bad = np.flatnonzero(np.asarray(values) < -FEASIBILITY_TOL)
    if bad.size == 0:
        return None
    return int(bad[0])


def _node_string(profile, node):
    return single_user_alloc(
        profile.instants, profile.harvests(node), profile.deadline
    )


def _split_total(profile, ch):
    """
    Split the total string into powers of S and R with equal branches.

    :returns: Total, source and relay per-epoch powers.
    :rtype: typing.Tuple[numpy.ndarray, numpy.ndarray, numpy.ndarray]
    """
    stair = scaled_totals(profile, ch)
    total = tight_string(stair, (0.0, 0.0), (profile.deadline, stair.total))
    pt = total.epoch_powers(profile.edges)
    a2 = ch.a2_dagger
    p1 = pt / a2
    p2 = (a2 - 1.0) * pt / (a2 * ch.b2)
    return pt, p1, p2


###############################################################################
# NO ENERGY TRANSFER
###############################################################################

def greedy_no_et(profile, ch):
    """
    Greedy allocation without energy transfer
    -----------------------------------------

    S follows its own single-user string; R spends just enough power to
    keep the multiple access term at the level of the S-R term. Optimal
    whenever R can afford it, otherwise :class:`NotApplicable`.

    :param profile: The scenario;
    :param ch: The channel, with ``a^2 >= 1``;

    :type profile: ehrc.core.EHProfile
    :type ch: ehrc.core.ChannelModel
    :rtype: typing.Union[ehrc.core.AllocationResult, NotApplicable]
    """
    ch.require_relay()
    lengths = profile.epoch_lengths
    p1 = _node_string(profile, 1).epoch_powers(profile.edges)
    p2 = (ch.a2_dagger - 1.0) / ch.b2 * p1
    schedule = PowerSchedule.from_arrays(p1, p2, lengths)

    report = check_feasible(schedule, None, profile, ch, TransferMode.NO_ET)
    k = _first_violation(report.r_slack)
    if k is not None:
        outcome = NotApplicable(
            policy_tag='greedy',
            reason=(
                f"R needs {-report.r_slack[k]:.6g} mJ more than it harvests"
                f" by t={profile.edges[k + 1]:g}"
            ),
            constraint='r_causality',
            index=k + 1,
            slack=report.r_slack[k],
        )
        logger.debug(str(outcome))
        return outcome

    return AllocationResult.build(
        'greedy', schedule, profile, ch, mode=TransferMode.NO_ET
    )


def _slot_boundaries(total, stair, deadline):
    boundaries = [stair.times[0]]
    for time in stair.times[1:]:
        level = stair.level_before(time)
        if abs(total.consumed_at(time) - level) <= SLOT_TOL * max(1.0, level):
            boundaries.append(time)
    boundaries.append(deadline)
    return boundaries


def total_suboptimal_no_et(profile, ch, slot_weight=None):
    """
    Suboptimal allocation without energy transfer
    ---------------------------------------------

    The horizon is split into slots where the total string touches its
    staircase. In every slot S and R run their own string and empty their
    batteries of everything harvested before the slot end.

    :param profile: The scenario;
    :param ch: The channel, with ``a^2 >= 1``;
    :param slot_weight: Weight of the relay harvests in the staircase that
      defines the slots, the R-D gain ``b`` by default;

    :type profile: ehrc.core.EHProfile
    :type ch: ehrc.core.ChannelModel
    :type slot_weight: float
    :rtype: ehrc.core.AllocationResult
    """
    ch.require_relay()
    weight = ch.b if slot_weight is None else float(slot_weight)
    stair = scaled_totals(profile, ch, weight=weight)
    total = tight_string(stair, (0.0, 0.0), (profile.deadline, stair.total))
    slots = _slot_boundaries(total, stair, profile.deadline)
    logger.debug(f"Slot boundaries: {slots}")

    powers = []
    for node in (1, 2):
        node_stair = profile.staircase(node)
        parts = []
        for start, end in zip(slots[:-1], slots[1:]):
            parts.append(tight_string(
                node_stair,
                (start, node_stair.level_before(start)),
                (end, node_stair.level_before(end)),
            ))
        powers.append(StringSolution.concat(parts).epoch_powers(profile.edges))

    schedule = PowerSchedule.from_arrays(
        powers[0], powers[1], profile.epoch_lengths
    )
    result = AllocationResult.build(
        'total-subopt', schedule, profile, ch, mode=TransferMode.NO_ET,
        notes={'slots': [float(t) for t in slots], 'slot_weight': weight},
    )
    if not result.feasibility.ok:
        raise ContractError(
            f"Slot allocation broke causality:"
            f" {result.feasibility.violations()}"
        )
    return result


def disjoint(profile, ch):
    """
    S and R follow their own single-user strings, ignoring each other.

    :rtype: ehrc.core.AllocationResult
    """
    ch.require_relay()
    p1 = _node_string(profile, 1).epoch_powers(profile.edges)
    p2 = _node_string(profile, 2).epoch_powers(profile.edges)
    schedule = PowerSchedule.from_arrays(p1, p2, profile.epoch_lengths)
    return AllocationResult.build(
        'disjoint', schedule, profile, ch, mode=TransferMode.NO_ET
    )


###############################################################################
# ONE-WAY ENERGY TRANSFER
###############################################################################

def construct_delta_one_way(profile, p1):
    """
    S to R transfers supporting a source allocation
    -----------------------------------------------

    With ``slack_k`` the unused S energy at ``t^k``, the cumulative
    transfer up to instant ``m`` is the smallest slack from ``k = m + 1``
    on. Every S constraint keeps a non-negative slack and S ends with an
    empty battery.

    :param profile: The scenario;
    :param p1: Source powers per epoch, or a schedule;
    :returns: The transfer at every harvest instant.

    :type profile: ehrc.core.EHProfile
    :type p1: typing.Union[numpy.ndarray, ehrc.core.PowerSchedule]
    :rtype: numpy.ndarray
    """
    if isinstance(p1, PowerSchedule):
        p1 = p1.p1
    p1 = np.asarray(p1, dtype=float)
    slack = np.cumsum(profile.harvests(1)) \
        - np.cumsum(p1 * profile.epoch_lengths)
    if np.any(slack < -FEASIBILITY_TOL):
        k = int(np.argmin(slack)) + 1
        raise ContractError(
            f"Source allocation overspends at k={k} (slack {slack[k - 1]:.6g});"
            f" no non-negative transfer exists."
        )
    cumulative = np.minimum.accumulate(slack[::-1])[::-1]
    cumulative = np.maximum(cumulative, 0.0)
    return np.diff(cumulative, prepend=0.0)


def one_way_optimal(profile, ch):
    """
    Optimal allocation with one-way transfer from S to R
    ----------------------------------------------------

    The total string of ``E1 + b^2 E2`` is split so that both rate
    branches are equal. Applicable when S can fund its share at every
    instant and the transfers built from its surplus keep R causal.

    :param profile: The scenario;
    :param ch: The channel, with ``a^2 >= 1``;

    :type profile: ehrc.core.EHProfile
    :type ch: ehrc.core.ChannelModel
    :rtype: typing.Union[ehrc.core.AllocationResult, NotApplicable]
    """
    ch.require_relay()
    pt, p1, p2 = _split_total(profile, ch)
    lengths = profile.epoch_lengths

    slack = np.cumsum(profile.harvests(1)) - np.cumsum(p1 * lengths)
    k = _first_violation(slack)
    if k is not None:
        outcome = NotApplicable(
            policy_tag='one-way',
            reason=(
                f"S cannot fund its share of the total power by"
                f" t={profile.edges[k + 1]:g} (short of {-slack[k]:.6g} mJ)"
            ),
            constraint='s_causality',
            index=k + 1,
            slack=float(slack[k]),
        )
        logger.debug(str(outcome))
        return outcome

    delta = construct_delta_one_way(profile, p1)
    schedule = PowerSchedule.from_arrays(p1, p2, lengths)
    transfers = TransferSchedule(tuple(delta), (0.0,) * len(delta))
    result = AllocationResult.build(
        'one-way', schedule, profile, ch, transfers=transfers,
        mode=TransferMode.ONE_WAY, notes={'total_powers': pt.tolist()},
    )

    k = _first_violation(result.feasibility.r_slack)
    if k is not None:
        outcome = NotApplicable(
            policy_tag='one-way',
            reason=(
                f"transfers from S arrive too late for R at"
                f" t={profile.edges[k + 1]:g}"
            ),
            constraint='r_causality',
            index=k + 1,
            slack=result.feasibility.r_slack[k],
        )
        logger.debug(str(outcome))
        return outcome
    return result


###############################################################################
# TWO-WAY ENERGY TRANSFER
###############################################################################

def construct_deltas_two_way(profile, schedule, ch):
    """
    Two-way transfers keeping R exactly at its consumption
    ------------------------------------------------------

    ``Delta[i] = b^2 e2[i-1] - b^2 p2[i] l[i]`` for every epoch; a surplus
    at R is sent to S (``d2``), a deficit is covered by S (``d1``), both at
    instant ``i - 1``.

    :param profile: The scenario;
    :param schedule: An allocation satisfying the total energy constraint;
    :param ch: The channel;

    :type profile: ehrc.core.EHProfile
    :type schedule: ehrc.core.PowerSchedule
    :type ch: ehrc.core.ChannelModel
    :rtype: ehrc.core.TransferSchedule
    """
    scaled_e2 = ch.b2 * profile.harvests(2)
    scaled_p2 = ch.b2 * np.asarray(schedule.p2) * np.asarray(schedule.durations)
    delta = scaled_e2 - scaled_p2
    return TransferSchedule(
        d1=tuple(np.maximum(-delta, 0.0)),
        d2=tuple(np.maximum(delta, 0.0)),
    )


def two_way_optimal(profile, ch):
    """
    Optimal allocation with two-way energy transfer.

    :rtype: ehrc.core.AllocationResult
    """
    ch.require_relay()
    pt, p1, p2 = _split_total(profile, ch)
    schedule = PowerSchedule.from_arrays(p1, p2, profile.epoch_lengths)
    transfers = construct_deltas_two_way(profile, schedule, ch)
    return AllocationResult.build(
        'two-way', schedule, profile, ch, transfers=transfers,
        mode=TransferMode.TWO_WAY, notes={'total_powers': pt.tolist()},
    )


@dataclass(frozen=True)
class ModifiedPatterns:
    """
    Harvests of S and R once the transfers are applied.

    :arg negative: ``(node, instant)`` pairs of negative amounts.
    """
    e1: tuple
    e2: tuple
    negative: tuple = ()

    def __iter__(self):
        yield np.asarray(self.e1)
        yield np.asarray(self.e2)


def modified_eh_patterns(profile, transfers, ch):
    """
    Apply transfers to the harvest amounts

    ``E1 - d1 + d2`` for S and ``E2 + (d1 - d2) / b^2`` for R.

    :rtype: ModifiedPatterns
    """
    d1 = np.asarray(transfers.d1)
    d2 = np.asarray(transfers.d2)
    e1 = profile.harvests(1) - d1 + d2
    e2 = profile.harvests(2) + (d1 - d2) / ch.b2

    negative = []
    for node, amounts in ((1, e1), (2, e2)):
        for idx in np.flatnonzero(amounts < -FEASIBILITY_TOL):
            negative.append((node, int(idx)))
    if negative:
        logger.warning(f"Modified harvests are negative at {negative}.")
    return ModifiedPatterns(tuple(e1), tuple(e2), tuple(negative))


def disjoint_modified(profile, transfers, ch):
    """
    Single-user strings of S and R on the harvests modified by transfers.

    :raises ehrc.errors.InfeasibleError: A modified cumulative harvest
      decreases somewhere.
    :rtype: ehrc.core.PowerSchedule
    """
    patterns = modified_eh_patterns(profile, transfers, ch)
    powers = [
        single_user_alloc(profile.instants, amounts, profile.deadline)
        .epoch_powers(profile.edges)
        for amounts in patterns
    ]
    return PowerSchedule.from_arrays(
        powers[0], powers[1], profile.epoch_lengths
    )
