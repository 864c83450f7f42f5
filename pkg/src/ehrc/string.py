#!/usr/bin/env python3
#-*- encoding: utf8 -*-

"""
+=============================================================================+
|                   TIGHT STRING (SHORTEST PATH) ALLOCATOR                    |
+=============================================================================+

Single-node allocation under a cumulative energy staircase. The optimal
consumption curve of a concave rate under energy causality is the taut
string from the start point to the end point lying below the staircase;
its slopes are the transmit powers.


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

from ehrc.errors import GridMismatchError, InfeasibleError

logger = logging.getLogger(__name__)

SLOPE_TIE_RTOL = 1e-12
ENERGY_TOL = 1e-9


###############################################################################
# STAIRCASE
###############################################################################

@dataclass(frozen=True)
class Staircase:
    """
    Cumulative harvested energy curve.

    ``levels[j]`` is the energy available from ``times[j]`` (harvest
    included) up to the next harvest instant. The curve ends at ``horizon``.

    :type times: typing.Tuple[float, ...]
    :type levels: typing.Tuple[float, ...]
    :type horizon: float
    """
    times: tuple
    levels: tuple
    horizon: float

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        levels = tuple(float(v) for v in self.levels)
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'levels', levels)
        object.__setattr__(self, 'horizon', float(self.horizon))

        if len(times) < 1:
            raise InfeasibleError("A staircase needs at least one vertex.")
        if len(times) != len(levels):
            raise InfeasibleError(
                f"Got {len(times)} vertex times for {len(levels)} levels."
            )
        if np.any(np.diff(times) <= 0):
            raise InfeasibleError(
                "Staircase times must be strictly increasing."
            )
        if np.any(np.diff(levels) < 0):
            raise InfeasibleError(
                "Staircase levels must be non-decreasing."
            )
        if times[-1] >= self.horizon:
            raise InfeasibleError(
                f"Last vertex at {times[-1]} is not before the horizon"
                f" {self.horizon}."
            )

    @classmethod
    def from_harvests(cls, instants, amounts, horizon):
        """
        Build the staircase of cumulative harvests

        :param instants: Harvest instants, strictly increasing.
        :param amounts: Energy harvested at each instant.
        :param horizon: Terminal time of the curve.
        :rtype: Staircase
        """
        amounts = np.asarray(amounts, dtype=float)
        return cls(tuple(instants), tuple(np.cumsum(amounts)), horizon)

    @property
    def amounts(self):
        """Per-vertex harvest amounts (differences of the levels)."""
        return np.diff(np.asarray(self.levels), prepend=0.0)

    @property
    def total(self):
        return self.levels[-1]

    def level_at(self, time):
        """Energy available at ``time`` including a harvest made at it."""
        idx = np.searchsorted(self.times, time, side='right') - 1
        return self.levels[idx] if idx >= 0 else 0.0

    def level_before(self, time):
        """Energy harvested strictly before ``time``."""
        idx = np.searchsorted(self.times, time, side='left') - 1
        return self.levels[idx] if idx >= 0 else 0.0

    def clamp(self, cap):
        """Return the staircase capped at ``cap``."""
        levels = np.minimum(np.asarray(self.levels), cap)
        return Staircase(self.times, tuple(levels), self.horizon)


###############################################################################
# STRING SOLUTION
###############################################################################

@dataclass(frozen=True)
class StringSolution:
    """
    Piecewise-linear consumption curve

    :arg start: ``(time, energy)`` the curve leaves from.
    :arg breakpoints: End time of every segment, the last one is the
      end point time.
    :arg powers: Slope of every segment.
    :arg durations: Length of every segment.
    """
    start: tuple
    breakpoints: tuple
    powers: tuple
    durations: tuple

    @property
    def end(self):
        energy = self.start[1] + float(
            np.dot(self.powers, self.durations)
        )
        return self.breakpoints[-1], energy

    def knots(self):
        """
        Return the curve vertices

        :rtype: typing.Tuple[numpy.ndarray, numpy.ndarray]
        """
        times = np.concatenate([[self.start[0]], self.breakpoints])
        energy = np.asarray(self.powers) * np.asarray(self.durations)
        energies = self.start[1] + np.concatenate([[0.0], np.cumsum(energy)])
        return times, energies

    def consumed_at(self, time):
        times, energies = self.knots()
        return np.interp(time, times, energies)

    def epoch_powers(self, edges):
        """
        Spread the segments over an epoch grid

        Every breakpoint must be an epoch edge, otherwise a segment change
        would fall inside an epoch.

        :param edges: Epoch edges ``t^0, ..., t^K, T`` covering the curve.
        :returns: The power used in every epoch.

        :type edges: numpy.ndarray
        :rtype: numpy.ndarray
        """
        edges = np.asarray(edges, dtype=float)
        knots, _ = self.knots()
        if not (np.isclose(knots[0], edges[0])
                and np.isclose(knots[-1], edges[-1])):
            raise GridMismatchError(
                f"Curve spans [{knots[0]}, {knots[-1]}] but the grid spans"
                f" [{edges[0]}, {edges[-1]}]."
            )
        for time in knots[1:-1]:
            if not np.any(np.isclose(edges, time, rtol=0, atol=1e-12)):
                raise GridMismatchError(
                    f"Breakpoint {time} is not an epoch edge."
                )

        middles = 0.5 * (edges[:-1] + edges[1:])
        segment = np.searchsorted(knots[1:], middles, side='left')
        return np.asarray(self.powers, dtype=float)[segment]

    @classmethod
    def concat(cls, parts):
        """
        Chain consecutive solutions into one curve

        :type parts: typing.List[StringSolution]
        :rtype: StringSolution
        """
        if not parts:
            raise ValueError("Nothing to concatenate.")
        breakpoints, powers, durations = [], [], []
        for part in parts:
            breakpoints.extend(part.breakpoints)
            powers.extend(part.powers)
            durations.extend(part.durations)
        return cls(
            parts[0].start, tuple(breakpoints), tuple(powers),
            tuple(durations)
        )


###############################################################################
# ALLOCATION
###############################################################################

def tight_string(stair, start, end):
    """
    Taut string from ``start`` to ``end`` below the staircase
    ---------------------------------------------------------

    The staircase is capped at the end energy; from the current point the
    vertex with the smallest slope is taken (the latest one on ties) until
    the end point is reached.

    :param stair: The cumulative energy curve;
    :param start: ``(time, energy)`` already consumed at the start time;
    :param end: ``(time, energy)`` to be consumed at the end time;
    :returns: The piecewise-constant power allocation.

    :type stair: Staircase
    :type start: typing.Tuple[float, float]
    :type end: typing.Tuple[float, float]
    :rtype: StringSolution
    """
    t0, e0 = float(start[0]), float(start[1])
    t_end, e_end = float(end[0]), float(end[1])

    if not t0 < t_end:
        raise InfeasibleError(f"Start time {t0} is not before end {t_end}.")
    if t_end > stair.horizon + 1e-12:
        raise InfeasibleError(
            f"End time {t_end} exceeds the staircase horizon {stair.horizon}."
        )
    if e_end < e0 - ENERGY_TOL:
        raise InfeasibleError(
            f"End energy {e_end} is below the start energy {e0}."
        )
    if e0 > stair.level_at(t0) + ENERGY_TOL:
        raise InfeasibleError(
            f"Start energy {e0} exceeds the {stair.level_at(t0)} available"
            f" at t={t0}."
        )
    if e_end > stair.level_before(t_end) + ENERGY_TOL:
        raise InfeasibleError(
            f"End energy {e_end} exceeds the {stair.level_before(t_end)}"
            f" harvested before t={t_end}."
        )

    times = np.asarray(stair.times)
    levels = np.asarray(stair.clamp(e_end).levels)
    inside = np.flatnonzero((times > t0) & (times < t_end))
    # Vertex j constrains the consumption at times[j] to the level before it
    cand_t = np.append(times[inside], t_end)
    cand_e = np.append(
        [levels[j - 1] if j > 0 else 0.0 for j in inside], e_end
    )
    cand_e = np.maximum(cand_e, e0)

    breakpoints, powers, durations = [], [], []
    cur_t, cur_e, first = t0, e0, 0
    while first < len(cand_t):
        slopes = (cand_e[first:] - cur_e) / (cand_t[first:] - cur_t)
        lowest = slopes.min()
        ties = slopes <= lowest + SLOPE_TIE_RTOL * max(1.0, abs(lowest))
        chosen = first + int(np.flatnonzero(ties)[-1])

        duration = cand_t[chosen] - cur_t
        breakpoints.append(float(cand_t[chosen]))
        powers.append(float((cand_e[chosen] - cur_e) / duration))
        durations.append(float(duration))

        cur_t, cur_e = cand_t[chosen], cand_e[chosen]
        first = chosen + 1

    logger.debug(f"String from {start} to {end}: powers {powers}")
    return StringSolution(
        (t0, e0), tuple(breakpoints), tuple(powers), tuple(durations)
    )


def single_user_alloc(instants, energies, deadline):
    """
    Point-to-point optimum: exhaust every harvested mJ by the deadline.

    :type instants: typing.Sequence[float]
    :type energies: typing.Sequence[float]
    :type deadline: float
    :rtype: StringSolution
    """
    stair = Staircase.from_harvests(instants, energies, deadline)
    return tight_string(stair, (0.0, 0.0), (deadline, stair.total))
