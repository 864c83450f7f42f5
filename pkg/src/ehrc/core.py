#!/usr/bin/env python3
#-*- encoding: utf8 -*-

"""
+=============================================================================+
|        ENERGY HARVESTING RELAY CHANNEL: DOMAIN TYPES AND EVALUATION         |
+=============================================================================+

Scenario and channel types of the three node energy harvesting relay
channel (source S, full-duplex decode-and-forward relay R, destination D),
the noncoherent rate function, throughput evaluation and the cumulative
energy causality checks of the no transfer, one-way and two-way transfer
problems.

Units: powers in mW, energies in mJ, times in s, rates in Mbits/s.


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
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ehrc.errors import (
    DegenerateRelayError,
    DomainError,
    GridMismatchError,
    ProfileError,
)
from ehrc.string import Staircase

logger = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-9
MERGE_TOL = 1e-12
POWER_TOL = 1e-12
BRANCH_TOL = 1e-9


class TransferMode(str, Enum):
    NO_ET = 'no_et'
    ONE_WAY = 'one_way'
    TWO_WAY = 'two_way'


def _as_tuple(values):
    return tuple(float(v) for v in np.asarray(values, dtype=float).ravel())


###############################################################################
# SCENARIO TYPES
###############################################################################

@dataclass(frozen=True)
class EHProfile:
    """
    Harvest instants and amounts of both nodes with the deadline

    ``e1[i]`` and ``e2[i]`` are harvested at ``instants[i]``; epoch ``i``
    (one based) spans ``(t^{i-1}, t^i]`` with ``t^{K+1} = deadline``.

    :type instants: typing.Tuple[float, ...]
    :type e1: typing.Tuple[float, ...]
    :type e2: typing.Tuple[float, ...]
    :type deadline: float
    """
    instants: tuple
    e1: tuple
    e2: tuple
    deadline: float

    def __post_init__(self):
        instants = _as_tuple(self.instants)
        e1 = _as_tuple(self.e1)
        e2 = _as_tuple(self.e2)
        deadline = float(self.deadline)
        object.__setattr__(self, 'instants', instants)
        object.__setattr__(self, 'e1', e1)
        object.__setattr__(self, 'e2', e2)
        object.__setattr__(self, 'deadline', deadline)

        if not instants:
            raise ProfileError("At least one harvest instant is required.",
                               field='instants')
        if len(e1) != len(instants):
            raise ProfileError(
                f"e1 has {len(e1)} amounts for {len(instants)} instants.",
                field='e1'
            )
        if len(e2) != len(instants):
            raise ProfileError(
                f"e2 has {len(e2)} amounts for {len(instants)} instants.",
                field='e2'
            )
        if not all(math.isfinite(v) for v in instants + e1 + e2) \
                or not math.isfinite(deadline):
            raise ProfileError("Profile values must be finite.")
        if instants[0] != 0.0:
            raise ProfileError(
                f"The first harvest instant must be 0, got {instants[0]}.",
                field='instants'
            )
        if any(b <= a for a, b in zip(instants, instants[1:])):
            raise ProfileError("Harvest instants must be strictly increasing.",
                               field='instants')
        if instants[-1] >= deadline:
            raise ProfileError(
                f"Last instant {instants[-1]} is not before the deadline"
                f" {deadline}.",
                field='deadline'
            )
        for name, amounts in (('e1', e1), ('e2', e2)):
            if min(amounts) < 0:
                raise ProfileError("Harvest amounts must be non-negative.",
                                   field=name)
            if amounts[0] <= 0:
                raise ProfileError(
                    f"{name}[0] must be positive so that the node can"
                    f" transmit from t=0.",
                    field=name
                )

    @property
    def num_epochs(self):
        return len(self.instants)

    @property
    def edges(self):
        """Epoch edges ``t^0, ..., t^K, T``."""
        return np.asarray(self.instants + (self.deadline,))

    @property
    def epoch_lengths(self):
        return np.diff(self.edges)

    def harvests(self, node):
        """
        Harvest amounts of a node

        :param node: ``1`` for the source, ``2`` for the relay.
        :rtype: numpy.ndarray
        """
        if node == 1:
            return np.asarray(self.e1)
        if node == 2:
            return np.asarray(self.e2)
        raise ValueError(f"Unknown node {node!r}, expected 1 or 2.")

    def staircase(self, node):
        """
        Cumulative harvested energy curve of a node

        :rtype: ehrc.string.Staircase
        """
        return Staircase.from_harvests(
            self.instants, self.harvests(node), self.deadline
        )


@dataclass(frozen=True)
class ChannelModel:
    """
    Amplitude gains of the S-R link (``a``) and of the R-D link (``b``),
    the effective noise level and the bandwidth in MHz.
    """
    a: float
    b: float
    noise: float = 1.0
    bandwidth: float = 1.0

    def __post_init__(self):
        for name in ('a', 'b', 'noise', 'bandwidth'):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise DomainError(f"Channel {name} must be finite.")
            object.__setattr__(self, name, value)
        if self.b <= 0:
            raise DomainError(f"Gain b must be positive, got {self.b}.")
        if self.noise <= 0:
            raise DomainError(f"Noise must be positive, got {self.noise}.")
        if self.bandwidth <= 0:
            raise DomainError(
                f"Bandwidth must be positive, got {self.bandwidth}."
            )

    @property
    def a2_dagger(self):
        return max(1.0, self.a * self.a)

    @property
    def b2(self):
        return self.b * self.b

    def require_relay(self):
        """Raise when the S-R link is weaker than the direct link."""
        if self.a * self.a < 1.0:
            raise DegenerateRelayError(
                f"Relay policies need a^2 >= 1, got a^2 = {self.a * self.a}."
            )

    @classmethod
    def from_physical(
        cls, a, b, noise_psd=1e-19, bandwidth_hz=1e6, path_loss_db=100.0
    ):
        """
        Build the normalized channel from physical link parameters

        The received SNR of ``p`` mW is ``p / noise`` with
        ``noise = N0 * W * 10^(PL/10)`` expressed in mW.

        :param a: S-R amplitude gain.
        :param b: R-D amplitude gain.
        :param noise_psd: Noise power spectral density in W/Hz.
        :param bandwidth_hz: Bandwidth in Hz.
        :param path_loss_db: Path loss in dB.

        :rtype: ChannelModel
        """
        noise = noise_psd * bandwidth_hz * 10 ** (path_loss_db / 10) / 1e-3
        return cls(a=a, b=b, noise=noise, bandwidth=bandwidth_hz / 1e6)


###############################################################################
# SCHEDULES
###############################################################################

def _merge_segments(powers, durations):
    merged_p, merged_l = [], []
    for power, length in zip(powers, durations):
        if merged_p and abs(merged_p[-1] - power) <= MERGE_TOL:
            merged_l[-1] += length
        else:
            merged_p.append(float(power))
            merged_l.append(float(length))
    return tuple(merged_p), tuple(merged_l)


@dataclass(frozen=True)
class PowerSchedule:
    """
    Per-epoch powers of S (``p1``) and R (``p2``) with epoch durations.
    """
    p1: tuple
    p2: tuple
    durations: tuple

    def __post_init__(self):
        p1 = _as_tuple(self.p1)
        p2 = _as_tuple(self.p2)
        durations = _as_tuple(self.durations)
        if not (len(p1) == len(p2) == len(durations)):
            raise GridMismatchError(
                f"Schedule lengths differ: p1={len(p1)}, p2={len(p2)},"
                f" durations={len(durations)}."
            )
        if any(v < -POWER_TOL for v in p1 + p2):
            raise DomainError("Powers must be non-negative.")
        if any(v <= 0 for v in durations):
            raise GridMismatchError("Epoch durations must be positive.")
        object.__setattr__(self, 'p1', tuple(max(v, 0.0) for v in p1))
        object.__setattr__(self, 'p2', tuple(max(v, 0.0) for v in p2))
        object.__setattr__(self, 'durations', durations)

    @classmethod
    def from_arrays(cls, p1, p2, durations):
        return cls(_as_tuple(p1), _as_tuple(p2), _as_tuple(durations))

    @classmethod
    def zeros(cls, durations):
        n = len(durations)
        return cls((0.0,) * n, (0.0,) * n, _as_tuple(durations))

    @property
    def total_time(self):
        return float(sum(self.durations))

    def powers(self, node):
        return np.asarray(self.p1 if node == 1 else self.p2)

    def segments(self, node):
        """
        Canonical ``(powers, durations)`` view of a node, adjacent epochs
        with equal powers merged.

        :param node: ``1`` for the source, ``2`` for the relay.
        :rtype: typing.Tuple[typing.Tuple[float, ...], typing.Tuple[float, ...]]
        """
        return _merge_segments(self.powers(node), self.durations)


@dataclass(frozen=True)
class TransferSchedule:
    """
    Energy transferred at every harvest instant, in the b^2 scaled domain:
    ``d1`` from S to R and ``d2`` from R to S.
    """
    d1: tuple
    d2: tuple

    def __post_init__(self):
        d1 = _as_tuple(self.d1)
        d2 = _as_tuple(self.d2)
        if len(d1) != len(d2):
            raise GridMismatchError(
                f"Transfer lengths differ: d1={len(d1)}, d2={len(d2)}."
            )
        if any(v < -POWER_TOL for v in d1 + d2):
            raise DomainError("Transfers must be non-negative.")
        object.__setattr__(self, 'd1', tuple(max(v, 0.0) for v in d1))
        object.__setattr__(self, 'd2', tuple(max(v, 0.0) for v in d2))

    @classmethod
    def zeros(cls, n):
        return cls((0.0,) * n, (0.0,) * n)

    @property
    def is_zero(self):
        return not any(self.d1) and not any(self.d2)

    def physical_gain_r(self, ch):
        """Net energy received by R at every instant, in physical mJ."""
        return (np.asarray(self.d1) - np.asarray(self.d2)) / ch.b2


###############################################################################
# RATE AND THROUGHPUT
###############################################################################

@dataclass(frozen=True)
class RateBreakdown:
    """
    Noncoherent rate with both branches of the minimum.

    ``branch`` names the smaller one: ``"mac"`` for the multiple access
    term, ``"source_relay"`` for the S-R term.
    """
    value: float
    mac: float
    source_relay: float
    branch: str
    tied: bool

    def __float__(self):
        return self.value


def _branch_rates(p1, p2, ch):
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    mac = ch.bandwidth * np.log2(1.0 + (p1 + ch.b2 * p2) / ch.noise)
    source_relay = ch.bandwidth * np.log2(1.0 + ch.a2_dagger * p1 / ch.noise)
    return mac, source_relay


def rate_nc(p1, p2, ch):
    """
    Noncoherent decode-and-forward rate of a power pair

    :param p1: Source power in mW;
    :param p2: Relay power in mW;
    :param ch: The channel;
    :returns: The rate in Mbits/s with the binding branch.

    :type p1: float
    :type p2: float
    :type ch: ChannelModel
    :rtype: RateBreakdown
    """
    p1, p2 = float(p1), float(p2)
    if p1 < 0 or p2 < 0:
        raise DomainError(f"Powers must be non-negative, got ({p1}, {p2}).")
    mac, source_relay = _branch_rates(p1, p2, ch)
    mac, source_relay = float(mac), float(source_relay)
    tied = abs(mac - source_relay) <= BRANCH_TOL
    return RateBreakdown(
        value=min(mac, source_relay),
        mac=mac,
        source_relay=source_relay,
        branch='mac' if mac < source_relay else 'source_relay',
        tied=tied,
    )


def check_grid(schedule, profile):
    """Raise when the schedule epochs are not the profile epochs."""
    lengths = profile.epoch_lengths
    if len(schedule.durations) != len(lengths) \
            or not np.allclose(schedule.durations, lengths,
                               rtol=0, atol=1e-12):
        raise GridMismatchError(
            f"Schedule durations {list(schedule.durations)} do not match the"
            f" epoch lengths {lengths.tolist()}."
        )


def epoch_rates(schedule, ch):
    """Rate of every epoch, in Mbits/s."""
    mac, source_relay = _branch_rates(schedule.p1, schedule.p2, ch)
    return np.minimum(mac, source_relay)


def throughput(schedule, profile, ch):
    """
    Total number of bits delivered by the deadline

    :param schedule: Powers on the epoch grid of ``profile``;
    :param profile: The scenario, ``None`` to evaluate the schedule on its
      own durations;
    :param ch: The channel;
    :returns: Mbits.

    :type schedule: PowerSchedule
    :type profile: EHProfile
    :type ch: ChannelModel
    :rtype: float
    """
    if profile is not None:
        check_grid(schedule, profile)
    return float(np.dot(epoch_rates(schedule, ch), schedule.durations))


def binding_branches(schedule, ch, tol=BRANCH_TOL):
    """
    Per-epoch indicator of the binding branch

    ``1`` where the multiple access term is the minimum, ``0`` where the
    S-R term is, ``0.5`` when both agree within ``tol`` (relative).

    :rtype: numpy.ndarray
    """
    mac, source_relay = _branch_rates(schedule.p1, schedule.p2, ch)
    scale = np.maximum(1.0, np.maximum(mac, source_relay))
    indicator = np.where(mac < source_relay, 1.0, 0.0)
    return np.where(np.abs(mac - source_relay) <= tol * scale, 0.5, indicator)


def scaled_totals(profile, ch, weight=None):
    """
    Staircase of the cumulative scaled total energy ``E1 + b^2 E2``.

    :param weight: Factor applied to the relay harvests, ``b^2`` by default.
    :rtype: ehrc.string.Staircase
    """
    weight = ch.b2 if weight is None else float(weight)
    amounts = np.asarray(profile.e1) + weight * np.asarray(profile.e2)
    return Staircase.from_harvests(profile.instants, amounts, profile.deadline)


###############################################################################
# FEASIBILITY
###############################################################################

@dataclass(frozen=True)
class FeasibilityReport:
    """
    Slack of every constraint of a transfer mode

    Causality slacks are indexed by ``k - 1`` for the constraint at
    ``t^k`` (``k = 1..K+1``, ``t^{K+1} = T``). ``r_slack`` is in physical
    mJ at the relay. ``active`` lists ``(constraint, k)`` pairs whose slack
    is zero within the tolerance; non-negativity entries use the one based
    epoch index, transfer entries the zero based instant index.
    """
    mode: TransferMode
    s_slack: tuple
    r_slack: tuple
    total_slack: tuple
    power_slack: tuple
    transfer_slack: tuple
    half_duplex_slack: tuple
    ok: bool
    active: tuple = ()

    def slacks(self):
        return {
            's_causality': self.s_slack,
            'r_causality': self.r_slack,
            'total_causality': self.total_slack,
            'power_nonneg': self.power_slack,
            'transfer_nonneg': self.transfer_slack,
            'half_duplex': self.half_duplex_slack,
        }

    def violations(self):
        """
        Constraints with a slack below ``-1e-9``

        :rtype: typing.List[typing.Tuple[str, int, float]]
        """
        found = []
        for name, values in self.slacks().items():
            offset = 0 if name in ('transfer_nonneg', 'half_duplex') else 1
            for idx, value in enumerate(values):
                if value < -FEASIBILITY_TOL:
                    found.append((name, idx + offset, value))
        return found

    @property
    def excess(self):
        """Unused energy of S and R at the deadline, in mJ."""
        return self.s_slack[-1], self.r_slack[-1]


def check_feasible(schedule, transfers, profile, ch, mode=TransferMode.NO_ET):
    """
    Evaluate every cumulative constraint of a transfer mode
    -------------------------------------------------------

    Mode ``no_et`` ignores the transfers, mode ``one_way`` ignores ``d2``.

    :param schedule: Powers on the grid of ``profile``;
    :param transfers: Transfers at the harvest instants, or ``None``;
    :param profile: The scenario;
    :param ch: The channel;
    :param mode: The constraint system to evaluate;
    :returns: The report, never raises on a violation.

    :type schedule: PowerSchedule
    :type transfers: TransferSchedule
    :type profile: EHProfile
    :type ch: ChannelModel
    :type mode: TransferMode
    :rtype: FeasibilityReport
    """
    mode = TransferMode(mode)
    check_grid(schedule, profile)
    n = profile.num_epochs
    if transfers is None:
        transfers = TransferSchedule.zeros(n)
    if len(transfers.d1) != n:
        raise GridMismatchError(
            f"Transfers cover {len(transfers.d1)} instants, the profile has"
            f" {n}."
        )

    d1 = np.asarray(transfers.d1)
    d2 = np.asarray(transfers.d2)
    if mode is TransferMode.NO_ET:
        d1 = np.zeros(n)
        d2 = np.zeros(n)
    elif mode is TransferMode.ONE_WAY:
        d2 = np.zeros(n)

    e1, e2 = profile.harvests(1), profile.harvests(2)
    lengths = np.asarray(schedule.durations)
    used1 = np.cumsum(np.asarray(schedule.p1) * lengths)
    used2 = np.cumsum(np.asarray(schedule.p2) * lengths)

    s_slack = np.cumsum(e1 - d1 + d2) - used1
    r_slack = np.cumsum(e2 + (d1 - d2) / ch.b2) - used2
    total_slack = np.cumsum(e1 + ch.b2 * e2) - (used1 + ch.b2 * used2)
    power_slack = np.minimum(schedule.p1, schedule.p2)
    transfer_slack = np.minimum(d1, d2)
    half_duplex = -d1 * d2

    groups = {
        's_causality': s_slack,
        'r_causality': r_slack,
        'total_causality': total_slack,
        'power_nonneg': power_slack,
        'transfer_nonneg': transfer_slack,
        'half_duplex': half_duplex,
    }
    ok = all(np.all(values >= -FEASIBILITY_TOL) for values in groups.values())
    active = []
    for name in ('s_causality', 'r_causality', 'total_causality'):
        for k in np.flatnonzero(np.abs(groups[name]) <= FEASIBILITY_TOL):
            active.append((name, int(k) + 1))

    return FeasibilityReport(
        mode=mode,
        s_slack=_as_tuple(s_slack),
        r_slack=_as_tuple(r_slack),
        total_slack=_as_tuple(total_slack),
        power_slack=_as_tuple(power_slack),
        transfer_slack=_as_tuple(transfer_slack),
        half_duplex_slack=_as_tuple(half_duplex),
        ok=bool(ok),
        active=tuple(active),
    )


###############################################################################
# RESULT
###############################################################################

@dataclass(frozen=True, eq=False)
class AllocationResult:
    """
    Output of a policy or of a solver

    :arg excess_energy: Unused ``(S, R)`` energy at the deadline in mJ.
    :arg policy_tag: Name of the producing policy.
    :arg notes: Free-form diagnostics (solver iterations, warnings, ...).
    """
    schedule: PowerSchedule
    transfers: TransferSchedule
    throughput: float
    feasibility: FeasibilityReport
    excess_energy: tuple
    policy_tag: str
    mode: TransferMode = TransferMode.NO_ET
    notes: dict = field(default_factory=dict)

    @classmethod
    def build(
        cls, policy_tag, schedule, profile, ch, transfers=None,
        mode=TransferMode.NO_ET, notes=None
    ):
        """
        Evaluate a schedule and wrap it as a result

        :rtype: AllocationResult
        """
        mode = TransferMode(mode)
        if transfers is None:
            transfers = TransferSchedule.zeros(profile.num_epochs)
        report = check_feasible(schedule, transfers, profile, ch, mode)
        value = throughput(schedule, profile, ch)
        if not report.ok:
            logger.debug(
                f"{policy_tag}: infeasible schedule {report.violations()}"
            )
        return cls(
            schedule=schedule,
            transfers=transfers,
            throughput=value,
            feasibility=report,
            excess_energy=report.excess,
            policy_tag=policy_tag,
            mode=mode,
            notes=dict(notes or {}),
        )
