"""Aggregated cutting-plane (ACP) models and accuracy certificates.

The model is a running convex combination of linearizations plus the
strongly convex side of the problem,

    Gamma(x) = chi + <s, x> + (strongly convex part)(x),

so only the aggregated slope ``s`` and offset ``chi`` need to be stored.
The same aggregator serves the primal model (cuts of ``f``, completed by
``h^alpha``) and the dual model (cuts of ``(h^alpha)*(-K .)``, completed by
``f*``); only the minimization step differs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .oracles import ProblemOracles, Vector, f_conj, phi_alpha, psi_alpha


@dataclass(frozen=True)
class AcpAggregator:
    s_agg: Vector
    chi_hi: float
    chi_lo: float = 0.0  # compensation term of the double-word offset
    num_cuts: int = 1

    @property
    def chi(self) -> float:
        return self.chi_hi + self.chi_lo

    def linear_part(self, point: Vector) -> float:
        """``chi + <s_agg, point>`` (point in the space the cuts were taken in)."""
        return math.fsum([self.chi_hi, self.chi_lo, float(np.dot(self.s_agg, point))])


@dataclass(frozen=True)
class Certificate:
    test_point: Vector
    model: AcpAggregator
    gap: float
    model_min: float
    epsilon_target: float = math.inf

    @property
    def certified(self) -> bool:
        return self.gap <= self.epsilon_target / 2


def _offset(value: float, slope: Vector, point: Vector) -> float:
    return math.fsum([value, -float(np.dot(slope, point))])


def acp_init(point: Vector, value: float, slope: Vector) -> AcpAggregator:
    """Single-cut model from the linearization ``value + <slope, . - point>``."""
    slope = np.array(slope, dtype=float)
    return AcpAggregator(s_agg=slope, chi_hi=_offset(value, slope, point), num_cuts=1)


def acp_update(model: AcpAggregator, zeta: float, point: Vector, value: float,
               slope: Vector) -> AcpAggregator:
    """``Gamma <- (1 - zeta) Gamma + zeta (cut at point)``."""
    if not 0.0 <= zeta <= 1.0:
        raise ValueError(f"zeta must lie in [0, 1], got {zeta}")
    slope = np.asarray(slope, dtype=float)
    s_new = (1.0 - zeta) * model.s_agg + zeta * slope
    c = _offset(value, slope, point)
    # chi + zeta (c - chi): the only rounded product is the small correction
    diff = math.fsum([c, -model.chi_hi, -model.chi_lo])
    terms = [model.chi_hi, model.chi_lo, zeta * diff]
    hi = math.fsum(terms)
    lo = math.fsum(terms + [-hi])
    return AcpAggregator(s_agg=s_new, chi_hi=hi, chi_lo=lo, num_cuts=model.num_cuts + 1)


def primal_cut_at(problem: ProblemOracles, x: Vector) -> "tuple[Vector, float, Vector]":
    return problem.cut(x)


def dual_cut_at(problem: ProblemOracles, z: Vector) -> "tuple[Vector, float, Vector]":
    """Linearization of ``z -> (h^alpha)*(-K z)`` at ``z``."""
    x, minval = problem.best_response(z)
    return z, -minval, -problem.restrict(x)


def dual_cut_from_primal(problem: ProblemOracles, x: Vector) -> "tuple[Vector, float, Vector]":
    """Fenchel-Young minorant ``g -> -<K x, g> - h^alpha(x)`` of ``(h^alpha)*(-K g)``."""
    slope = -problem.restrict(x)
    return np.zeros_like(slope), -problem.h_alpha(x), slope


def acp_min(model: AcpAggregator, problem: ProblemOracles) -> "tuple[Vector, float]":
    """Minimizer and minimum of the primal model via one GLMO call."""
    v, minval = problem.best_response(model.s_agg)
    return v, math.fsum([model.chi_hi, model.chi_lo, minval])


def acp_min_dual(model: AcpAggregator, problem: ProblemOracles) -> "tuple[Vector, float]":
    """Minimizer and minimum of the dual model ``chi + <s, g> + f*(g)``.

    ``min_g <s, g> + f*(g) = -f(-s)`` with minimizer ``grad f(-s)``.
    """
    u = -model.s_agg
    return problem.smooth.grad(u), math.fsum([model.chi_hi, model.chi_lo,
                                              -problem.smooth.value(u)])


def model_value(model: AcpAggregator, problem: ProblemOracles, x: Vector) -> float:
    """``Gamma(x)`` for the primal model."""
    return model.linear_part(problem.restrict(x)) + problem.h_alpha(x)


def dual_model_value(model: AcpAggregator, problem: ProblemOracles, g: Vector) -> float:
    return model.linear_part(g) + f_conj(problem, g)


def certificate_gap(model: AcpAggregator, problem: ProblemOracles, u: Vector,
                    epsilon: float = math.inf) -> Certificate:
    """``phi^alpha(u) - min Gamma``; an upper bound on the primal-dual gap."""
    _, m = acp_min(model, problem)
    return Certificate(np.asarray(u, dtype=float), model, phi_alpha(problem, u) - m, m, epsilon)


def dual_certificate_gap(model: AcpAggregator, problem: ProblemOracles, z: Vector,
                         epsilon: float = math.inf) -> Certificate:
    _, m = acp_min_dual(model, problem)
    return Certificate(np.asarray(z, dtype=float), model, psi_alpha(problem, z) - m, m, epsilon)
