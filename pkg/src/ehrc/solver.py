#!/usr/bin/env python3
#-*- encoding: utf8 -*-

"""
+=============================================================================+
|            REFERENCE CONCAVE SOLVER (LOG-BARRIER INTERIOR POINT)            |
+=============================================================================+

Reference optimizer of the three relay problems. The rate minimum is
written in epigraph form: maximize ``sum(l * r)`` subject to ``r`` below
both rate branches and to the linear cumulative energy constraints. The
barrier method multiplies its parameter by ``barrier_factor`` until the
duality gap estimate falls below ``rel_tol * |objective|``; every
centering step is a damped Newton iteration with backtracking.

Decision vector ``x = [p1, q, r]``, one entry per epoch each:

  - no transfer: ``q = b^2 p2``, S and R causality;
  - one-way: ``q = p1 + b^2 p2``, S causality and total causality;
  - two-way: ``q = p1 + b^2 p2``, total causality only.


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
import math
import logging

import yaml
import numpy as np
import scipy.linalg

from ehrc.core import (
    AllocationResult,
    PowerSchedule,
    TransferMode,
    TransferSchedule,
    binding_branches,
)
from ehrc.errors import ProfileError, SolverError
from ehrc.policies import construct_delta_one_way, construct_deltas_two_way

logger = logging.getLogger(__name__)

MIN_EPOCH_LENGTH = 1e-9
MIN_STEP = 1e-16


###############################################################################
# CONFIGURATION
###############################################################################

class SolverConfig:

    def __init__(
        self, barrier_start=1.0, barrier_factor=10.0, newton_tol=1e-10,
        max_newton_iter=200, max_outer_iter=60, rel_tol=1e-8,
        start_margin=0.1, line_search_alpha=0.25, line_search_beta=0.5,
    ):
        self.barrier_start = barrier_start
        self.barrier_factor = barrier_factor
        self.newton_tol = newton_tol
        self.max_newton_iter = max_newton_iter
        self.max_outer_iter = max_outer_iter
        self.rel_tol = rel_tol
        self.start_margin = start_margin
        self.line_search_alpha = line_search_alpha
        self.line_search_beta = line_search_beta
        self.validate()

    def validate(self):
        """Raise a ``ValueError`` on an out of range value."""
        for name, value in self.__dict__.items():
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value}.")
        if self.barrier_factor <= 1:
            raise ValueError(
                f"barrier_factor must be greater than 1,"
                f" got {self.barrier_factor}."
            )
        if self.line_search_alpha >= 0.5:
            raise ValueError("line_search_alpha should be 0 < alpha < 0.5")
        if self.line_search_beta >= 1:
            raise ValueError("line_search_beta should be 0 < beta < 1")

    def state_dict(self):
        """
        Returns the dictionary of variables associated with its values
        :rtype: typing.Dict[str, object]
        """
        return dict(self.__dict__)

    def load_state_dict(self, state_dict):
        """
        Update the config values from a dictionary

        :param state_dict: The dictionary of solver config attributes
        :type state_dict: typing.Dict[str, object]
        """
        unknown = set(state_dict) - set(self.__dict__)
        if unknown:
            raise ValueError(f"Unknown solver settings: {sorted(unknown)}.")
        self.__dict__.update(state_dict)
        self.validate()

    def save(self, file_path):
        """
        Save the attribute values into a YAML file

        :param file_path: The path to the YAML file
        :type file_path: str
        """
        with open(file_path, mode='w', encoding='utf-8') as f:
            yaml.safe_dump(self.state_dict(), f)

    @classmethod
    def load(cls, file_path):
        """
        Load the solver config from a YAML file

        :param file_path: The YAML file where the solver settings are stored
        :type file_path: str
        :rtype: SolverConfig
        """
        if not os.path.isfile(file_path):
            raise FileNotFoundError(
                f"No such solver config file at {file_path}."
            )
        with open(file_path, mode='r', encoding='utf-8') as f:
            config_data = yaml.safe_load(f) or {}
        config = cls()
        config.load_state_dict(config_data)
        return config


###############################################################################
# EPIGRAPH PROBLEM
###############################################################################

class EpigraphProblem:
    """
    Epigraph form of a relay throughput problem

    Linear constraints read ``A x <= c``; the rate constraints read
    ``r_i < beta * log(1 + (W x)_i / N0)`` for ``W`` in ``(W_mac, W_sr)``
    with ``beta = bandwidth / ln 2``.

    :type lengths: numpy.ndarray
    :type lin_mat: numpy.ndarray
    :type lin_rhs: numpy.ndarray
    :type mac_mat: numpy.ndarray
    :type sr_mat: numpy.ndarray
    """

    def __init__(self, mode, lengths, lin_mat, lin_rhs, mac_mat, sr_mat,
                 noise, beta, b2):
        self.mode = TransferMode(mode)
        self.lengths = lengths
        self.lin_mat = lin_mat
        self.lin_rhs = lin_rhs
        self.mac_mat = mac_mat
        self.sr_mat = sr_mat
        self.noise = noise
        self.beta = beta
        self.b2 = b2

        n = len(lengths)
        self.n = n
        self.r_mat = np.hstack([np.zeros((n, 2 * n)), np.eye(n)])
        self.cost = np.concatenate([np.zeros(2 * n), lengths])

    @classmethod
    def build(cls, profile, ch, mode):
        """
        Build the problem of a transfer mode

        :param profile: The scenario;
        :param ch: The channel;
        :param mode: ``no_et``, ``one_way`` or ``two_way``;

        :type profile: ehrc.core.EHProfile
        :type ch: ehrc.core.ChannelModel
        :type mode: ehrc.core.TransferMode
        :rtype: EpigraphProblem
        """
        mode = TransferMode(mode)
        ch.require_relay()
        lengths = profile.epoch_lengths
        if np.any(lengths < MIN_EPOCH_LENGTH):
            raise ProfileError(
                f"Epochs shorter than {MIN_EPOCH_LENGTH} s cannot be solved:"
                f" {lengths.tolist()}.",
                field='instants'
            )

        n = len(lengths)
        zero = np.zeros((n, n))
        eye = np.eye(n)
        cum_l = np.tril(np.ones((n, n))) * lengths[None, :]
        cum_e1 = np.cumsum(profile.harvests(1))
        cum_e2 = np.cumsum(profile.harvests(2))

        rows, rhs = [], []
        if mode is TransferMode.NO_ET:
            rows += [np.hstack([cum_l, zero, zero]),
                     np.hstack([zero, cum_l, zero]),
                     np.hstack([-eye, zero, zero]),
                     np.hstack([zero, -eye, zero])]
            rhs += [cum_e1, ch.b2 * cum_e2, np.zeros(n), np.zeros(n)]
            mac_mat = np.hstack([eye, eye, zero])
        else:
            if mode is TransferMode.ONE_WAY:
                rows.append(np.hstack([cum_l, zero, zero]))
                rhs.append(cum_e1)
            rows += [np.hstack([zero, cum_l, zero]),
                     np.hstack([-eye, zero, zero]),
                     np.hstack([eye, -eye, zero])]
            rhs += [cum_e1 + ch.b2 * cum_e2, np.zeros(n), np.zeros(n)]
            mac_mat = np.hstack([zero, eye, zero])
        sr_mat = np.hstack([ch.a2_dagger * eye, zero, zero])

        return cls(
            mode=mode,
            lengths=lengths,
            lin_mat=np.vstack(rows),
            lin_rhs=np.concatenate(rhs),
            mac_mat=mac_mat,
            sr_mat=sr_mat,
            noise=ch.noise,
            beta=ch.bandwidth / math.log(2.0),
            b2=ch.b2,
        )

    @property
    def num_constraints(self):
        return self.lin_mat.shape[0] + 2 * self.n

    def objective(self, x):
        """Epigraph throughput ``sum(l * r)`` in Mbits."""
        return float(self.cost @ x)

    def _rate_terms(self, x):
        terms = []
        for mat in (self.mac_mat, self.sr_mat):
            s = mat @ x
            g = self.beta * np.log1p(s / self.noise) - self.r_mat @ x
            terms.append((mat, s, g))
        return terms

    def in_domain(self, x):
        if np.any(self.lin_rhs - self.lin_mat @ x <= 0):
            return False
        for mat in (self.mac_mat, self.sr_mat):
            if np.any(mat @ x <= -self.noise):
                return False
        return all(np.all(g > 0) for _, _, g in self._rate_terms(x))

    def barrier_value(self, x, t):
        """
        Centering objective ``-t * sum(l * r) + phi(x)``

        :rtype: float
        """
        slack = self.lin_rhs - self.lin_mat @ x
        value = -t * self.objective(x) - np.sum(np.log(slack))
        for _, _, g in self._rate_terms(x):
            value -= np.sum(np.log(g))
        return float(value)

    def barrier_gradient(self, x, t):
        slack = self.lin_rhs - self.lin_mat @ x
        grad = -t * self.cost + self.lin_mat.T @ (1.0 / slack)
        for mat, s, g in self._rate_terms(x):
            jac = (self.beta / (self.noise + s))[:, None] * mat - self.r_mat
            grad -= jac.T @ (1.0 / g)
        return grad

    def barrier_hessian(self, x, t):
        slack = self.lin_rhs - self.lin_mat @ x
        hess = self.lin_mat.T @ (self.lin_mat / slack[:, None] ** 2)
        for mat, s, g in self._rate_terms(x):
            jac = (self.beta / (self.noise + s))[:, None] * mat - self.r_mat
            hess += jac.T @ (jac / g[:, None] ** 2)
            curv = self.beta / (g * (self.noise + s) ** 2)
            hess += mat.T @ (mat * curv[:, None])
        return hess

    def start_point(self, margin):
        """
        Strictly feasible point with constant powers

        :param margin: Gap between ``r`` and the smaller rate branch.
        :rtype: numpy.ndarray
        """
        n = self.n
        cum_l = np.cumsum(self.lengths)
        head = self.lin_rhs[:n]
        if self.mode is TransferMode.TWO_WAY:
            # First rows hold the total budget, shared evenly
            p1 = aux = 0.25 * np.min(head / cum_l)
        else:
            scaled_e2 = self.lin_rhs[n:2 * n]
            if self.mode is TransferMode.ONE_WAY:
                scaled_e2 = scaled_e2 - head
            p1 = 0.5 * np.min(head / cum_l)
            aux = 0.5 * np.min(scaled_e2 / cum_l)
        q = aux if self.mode is TransferMode.NO_ET else p1 + aux

        x = np.concatenate([np.full(n, p1), np.full(n, q), np.zeros(n)])
        rates = [self.beta * np.log1p(mat @ x / self.noise)
                 for mat in (self.mac_mat, self.sr_mat)]
        x[2 * n:] = np.minimum(*rates) - margin
        return x

    def split(self, x):
        """
        Recover per-epoch powers of S and R

        :rtype: typing.Tuple[numpy.ndarray, numpy.ndarray]
        """
        n = self.n
        p1 = x[:n]
        q = x[n:2 * n]
        if self.mode is TransferMode.NO_ET:
            p2 = q / self.b2
        else:
            p2 = (q - p1) / self.b2
        return np.maximum(p1, 0.0), np.maximum(p2, 0.0)


###############################################################################
# BARRIER METHOD
###############################################################################

def _newton_step(hess, grad):
    try:
        factor = scipy.linalg.cho_factor(hess)
        return scipy.linalg.cho_solve(factor, -grad)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        step, *_ = scipy.linalg.lstsq(hess, -grad)
        return step


def _center(problem, x, t, cfg):
    iterations = 0
    while True:
        grad = problem.barrier_gradient(x, t)
        hess = problem.barrier_hessian(x, t)
        step = _newton_step(hess, grad)
        decrement = -float(grad @ step)
        value = problem.barrier_value(x, t)
        # Barrier values grow with t, the tolerance follows their scale
        if decrement / 2.0 <= cfg.newton_tol * max(abs(value), 1.0):
            return x, iterations
        if iterations >= cfg.max_newton_iter:
            objective = problem.objective(x)
            scale = max(abs(objective), 1.0)
            if decrement / (2.0 * t) <= cfg.rel_tol * scale:
                logger.warning(
                    f"[{problem.mode.value}] centering stopped after"
                    f" {iterations} steps at t={t:g} (decrement"
                    f" {decrement:.3e}), objective is within tolerance."
                )
                return x, iterations
            raise SolverError(
                f"Newton centering did not converge in {iterations} steps"
                f" (t={t:g}, decrement {decrement:.3e}).",
                best_iterate=x,
                best_objective=objective,
            )

        if not np.all(np.isfinite(step)):
            return x, iterations
        size = 1.0
        while size >= MIN_STEP and not problem.in_domain(x + size * step):
            size *= cfg.line_search_beta
        slope = float(grad @ step)
        while size >= MIN_STEP and problem.barrier_value(x + size * step, t) \
                > value + cfg.line_search_alpha * size * slope:
            size *= cfg.line_search_beta
        if size < MIN_STEP:
            # Rounding floor of the barrier value reached
            return x, iterations
        x = x + size * step
        iterations += 1


def solve_epigraph(problem, cfg=None):
    """
    Run the barrier method on an epigraph problem
    ---------------------------------------------

    :param problem: The problem to maximize;
    :param cfg: Solver settings, defaults when ``None``;
    :returns: The final iterate with ``iterations``, ``outer`` and ``gap``
      diagnostics.

    :type problem: EpigraphProblem
    :type cfg: SolverConfig
    :rtype: typing.Tuple[numpy.ndarray, typing.Dict[str, float]]
    """
    cfg = cfg if cfg else SolverConfig()
    x = problem.start_point(cfg.start_margin)
    if not problem.in_domain(x):
        raise SolverError("Could not build a strictly feasible start point.")

    t = cfg.barrier_start
    total_iterations = 0
    for outer in range(1, cfg.max_outer_iter + 1):
        x, iterations = _center(problem, x, t, cfg)
        total_iterations += iterations
        objective = problem.objective(x)
        gap = problem.num_constraints / t
        logger.debug(
            f"[{problem.mode.value}] outer {outer}: t={t:.3e}"
            f" objective={objective:.10f} gap={gap:.3e}"
            f" newton={iterations}"
        )
        if gap <= cfg.rel_tol * max(abs(objective), 1.0):
            logger.info(
                f"[{problem.mode.value}] converged: {objective:.6f} Mbits"
                f" in {outer} outer / {total_iterations} Newton iterations."
            )
            return x, {
                'iterations': total_iterations,
                'outer': outer,
                'gap': gap,
                'objective': objective,
            }
        t *= cfg.barrier_factor

    raise SolverError(
        f"Barrier method did not reach the tolerance in"
        f" {cfg.max_outer_iter} outer iterations.",
        best_iterate=x,
        best_objective=problem.objective(x),
    )


###############################################################################
# SOLVERS
###############################################################################

def _solve(profile, ch, cfg, mode):
    problem = EpigraphProblem.build(profile, ch, mode)
    x, info = solve_epigraph(problem, cfg)
    p1, p2 = problem.split(x)
    schedule = PowerSchedule.from_arrays(p1, p2, profile.epoch_lengths)
    info['lambda'] = binding_branches(schedule, ch, tol=1e-6).tolist()
    return schedule, info


def solve_no_et(profile, ch, cfg=None):
    """
    Optimal allocation without energy transfer.

    :type profile: ehrc.core.EHProfile
    :type ch: ehrc.core.ChannelModel
    :type cfg: SolverConfig
    :rtype: ehrc.core.AllocationResult
    """
    schedule, info = _solve(profile, ch, cfg, TransferMode.NO_ET)
    return AllocationResult.build(
        'solve-no-et', schedule, profile, ch, mode=TransferMode.NO_ET,
        notes=info,
    )


def solve_one_way(profile, ch, cfg=None):
    """
    Optimal allocation with one-way transfer from S to R
    ----------------------------------------------------

    R causality is replaced by the total energy constraint, so the
    optimization runs over the source and total powers only. The S to R
    transfers are then built from the surplus of S; when they arrive too
    late for R, ``notes['transfer_realizable']`` is ``False`` and the
    feasibility report shows the R causality violation.

    :type profile: ehrc.core.EHProfile
    :type ch: ehrc.core.ChannelModel
    :type cfg: SolverConfig
    :rtype: ehrc.core.AllocationResult
    """
    schedule, info = _solve(profile, ch, cfg, TransferMode.ONE_WAY)
    delta = construct_delta_one_way(profile, schedule)
    transfers = TransferSchedule(tuple(delta), (0.0,) * len(delta))
    result = AllocationResult.build(
        'solve-one-way', schedule, profile, ch, transfers=transfers,
        mode=TransferMode.ONE_WAY, notes=info,
    )
    result.notes['transfer_realizable'] = result.feasibility.ok
    if not result.feasibility.ok:
        logger.warning(
            f"One-way optimum needs transfers S cannot make in time:"
            f" {result.feasibility.violations()}"
        )
    return result


def solve_two_way(profile, ch, cfg=None):
    """
    Optimal allocation with two-way energy transfer.

    :type profile: ehrc.core.EHProfile
    :type ch: ehrc.core.ChannelModel
    :type cfg: SolverConfig
    :rtype: ehrc.core.AllocationResult
    """
    schedule, info = _solve(profile, ch, cfg, TransferMode.TWO_WAY)
    transfers = construct_deltas_two_way(profile, schedule, ch)
    return AllocationResult.build(
        'solve-two-way', schedule, profile, ch, transfers=transfers,
        mode=TransferMode.TWO_WAY, notes=info,
    )
