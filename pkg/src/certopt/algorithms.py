"""Primal-dual averaging methods as pure step functions.

Each method has an ``*_init`` building its state record from a starting
point and a ``*_step`` mapping a state to the next one.  States are frozen;
nothing here records traces or decides when to stop.

Methods (primal / dual pairs):

* ``mda``  -- modified dual averaging; one average of gradients.
* ``gcg``  -- generalized conditional gradient on the dual problem.
* ``agg_gcg_primal`` / ``agg_gcg_dual`` -- the self-dual two-average method.
* ``taa``  -- three-average accelerated method.
* ``gem``  -- gradient extrapolation on the dual, with ``nu* = L f*``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import acp as acp_mod
from .acp import AcpAggregator
from .oracles import BregmanProx, ProblemOracles, UnsupportedError, Vector, f_conj


def schedule_eta(alpha: float, L: float) -> float:
    """One-average weight ``alpha / (L + alpha)``."""
    if not (alpha > 0 and L > 0):
        raise ValueError(f"alpha and L must be positive, got alpha={alpha}, L={L}")
    return alpha / (L + alpha)


def schedule_lambda(alpha: float, L: float) -> float:
    """Three-average weight; solves ``L / alpha = (1 - lam) / lam**2``."""
    if not (alpha > 0 and L > 0):
        raise ValueError(f"alpha and L must be positive, got alpha={alpha}, L={L}")
    return 2.0 * alpha / (alpha + math.sqrt(alpha * alpha + 4.0 * L * alpha))


def _mix(weight: float, old: Vector, new: Vector) -> Vector:
    return (1.0 - weight) * old + weight * new


# -- one average --------------------------------------------------------------

@dataclass(frozen=True)
class MdaState:
    x: Vector
    y: Vector
    eta: float
    acp: AcpAggregator
    k: int = 0

    @property
    def s(self) -> Vector:
        return self.acp.s_agg


def mda_init(problem: ProblemOracles, y0: Vector, eta: Optional[float] = None) -> MdaState:
    y0 = np.asarray(y0, dtype=float)
    model = acp_mod.acp_init(*problem.cut(y0))
    x0 = problem.best_response(model.s_agg).argmin
    if eta is None:
        eta = schedule_eta(problem.alpha, problem.L)
    return MdaState(x=x0, y=y0.copy(), eta=eta, acp=model)


def mda_step(state: MdaState, problem: ProblemOracles) -> MdaState:
    eta = state.eta
    model = acp_mod.acp_update(state.acp, eta, *problem.cut(state.x))
    x = problem.best_response(model.s_agg).argmin
    return MdaState(x=x, y=_mix(eta, state.y, x), eta=eta, acp=model, k=state.k + 1)


@dataclass(frozen=True)
class GcgState:
    """``x`` and ``zbar`` are the best response to ``z`` and its gradient image."""

    z: Vector
    x: Vector
    zbar: Vector
    ytilde: Vector
    eta: float
    k: int = 0


def gcg_init(problem: ProblemOracles, z0: Vector, eta: Optional[float] = None) -> GcgState:
    z0 = np.asarray(z0, dtype=float)
    x0 = problem.best_response(z0).argmin
    if eta is None:
        eta = schedule_eta(problem.alpha, problem.L)
    return GcgState(z=z0.copy(), x=x0, zbar=problem.response(x0), ytilde=x0.copy(), eta=eta)


def gcg_step(state: GcgState, problem: ProblemOracles) -> GcgState:
    # zbar = argmin <-K^T x, v> + f*(v) is grad f(K^T x) in closed form
    eta = state.eta
    z = _mix(eta, state.z, state.zbar)
    x = problem.best_response(z).argmin
    return GcgState(z=z, x=x, zbar=problem.response(x),
                    ytilde=_mix(eta, state.ytilde, state.x), eta=eta, k=state.k + 1)


def wolfe_gap(problem: ProblemOracles, z: Vector) -> float:
    """Conditional-gradient gap ``S(z)`` of the dual problem."""
    x = problem.best_response(z).argmin
    zbar = problem.response(x)
    lin = float(np.dot(-problem.restrict(x), z - zbar))
    return lin + f_conj(problem, z) - f_conj(problem, zbar)


# -- two averages -------------------------------------------------------------

@dataclass(frozen=True)
class AggGcgState:
    """Primal run: (y, s) with ``x`` the latest GLMO output.

    ``acp`` aggregates the cuts at the lagged points ``y_k``; its slope equals
    ``s`` whenever the run starts from ``s_0 = grad f(y_0)``.
    """

    y: Vector
    s: Vector
    eta: float
    acp: AcpAggregator
    x: Optional[Vector] = None
    k: int = 0


def agg_gcg_primal_init(problem: ProblemOracles, y0: Vector, s0: Optional[Vector] = None,
                        eta: Optional[float] = None) -> AggGcgState:
    y0 = np.asarray(y0, dtype=float)
    model = acp_mod.acp_init(*problem.cut(y0))
    s0 = model.s_agg.copy() if s0 is None else np.asarray(s0, dtype=float).copy()
    if eta is None:
        eta = schedule_eta(problem.alpha, problem.L)
    return AggGcgState(y=y0.copy(), s=s0, eta=eta, acp=model)


def agg_gcg_primal_step(state: AggGcgState, problem: ProblemOracles) -> AggGcgState:
    eta = state.eta
    x = problem.best_response(state.s).argmin
    u, fv, g = problem.cut(state.y)
    return AggGcgState(
        y=_mix(eta, state.y, x),
        s=_mix(eta, state.s, g),
        eta=eta,
        acp=acp_mod.acp_update(state.acp, eta, u, fv, g),
        x=x,
        k=state.k + 1,
    )


@dataclass(frozen=True)
class AggGcgDualState:
    """Dual run: (z, v); ``zbar`` and ``xbr`` are the responses of the last step.

    ``dual_acp`` aggregates the cuts of ``(h^alpha)*(-K .)`` taken at the
    points averaged into ``v``, with the same weights; it only feeds the
    diagnostic certificate and does not influence the iterates.
    """

    z: Vector
    v: Vector
    eta: float
    dual_acp: AcpAggregator
    zbar: Optional[Vector] = None
    xbr: Optional[Vector] = None
    k: int = 0


def agg_gcg_dual_init(problem: ProblemOracles, z0: Vector, v0: Vector,
                      eta: Optional[float] = None) -> AggGcgDualState:
    if eta is None:
        eta = schedule_eta(problem.alpha, problem.L)
    v0 = np.array(v0, dtype=float)
    model = acp_mod.acp_init(*acp_mod.dual_cut_from_primal(problem, v0))
    return AggGcgDualState(z=np.array(z0, dtype=float), v=v0, eta=eta, dual_acp=model)


def agg_gcg_dual_step(state: AggGcgDualState, problem: ProblemOracles) -> AggGcgDualState:
    eta = state.eta
    zbar = problem.response(state.v)
    xbr, minval = problem.best_response(state.z)
    model = acp_mod.acp_update(state.dual_acp, eta, state.z, -minval, -problem.restrict(xbr))
    return AggGcgDualState(z=_mix(eta, state.z, zbar), v=_mix(eta, state.v, xbr), eta=eta,
                           dual_acp=model, zbar=zbar, xbr=xbr, k=state.k + 1)


# -- three averages -----------------------------------------------------------

@dataclass(frozen=True)
class TaaState:
    y: Vector
    x: Vector
    xtilde: Vector
    lam: float
    acp: AcpAggregator
    k: int = 0

    @property
    def s(self) -> Vector:
        return self.acp.s_agg


def taa_init(problem: ProblemOracles, y0: Vector, lam: Optional[float] = None) -> TaaState:
    y0 = np.asarray(y0, dtype=float)
    model = acp_mod.acp_init(*problem.cut(y0))
    x0 = problem.best_response(model.s_agg).argmin
    if lam is None:
        lam = schedule_lambda(problem.alpha, problem.L)
    return TaaState(y=y0.copy(), x=x0, xtilde=y0.copy(), lam=lam, acp=model)


def taa_step(state: TaaState, problem: ProblemOracles) -> TaaState:
    lam = state.lam
    xtilde = _mix(lam, state.y, state.x)
    model = acp_mod.acp_update(state.acp, lam, *problem.cut(xtilde))
    x = problem.best_response(model.s_agg).argmin
    return TaaState(y=_mix(lam, state.y, x), x=x, xtilde=xtilde, lam=lam, acp=model,
                    k=state.k + 1)


@dataclass(frozen=True)
class GemState:
    """Gradient extrapolation state.

    ``subgrad`` is the element of the subdifferential of ``f*`` at ``g`` that
    linearizes the Bregman term; ``vbar`` is the primal average paired with
    the dual model ``dual_acp``.
    """

    g: Vector
    subgrad: Vector
    z: Vector
    v: Vector
    v_prev: Vector
    vhat: Vector
    vbar: Vector
    tau: float
    a_prev: float
    A: float
    dual_acp: AcpAggregator
    k: int = 0


def conjugate_prox(problem: ProblemOracles) -> BregmanProx:
    """Bregman step for ``nu* = L f*`` through the gradient of ``f``.

    Optimality gives a subgradient of ``f*`` at the new point as a convex
    combination of the old subgradient and the linear term, and ``g = grad f``
    of it.  Works for any instance whose ``f`` is smooth everywhere.
    """
    grad, L = problem.smooth.grad, problem.L

    def prox(w, g, subgrad, a, beta):
        weight = beta * L
        u = (a * np.asarray(w) + weight * np.asarray(subgrad)) / (a + weight)
        return grad(u), u

    return prox


def gem_init(problem: ProblemOracles, g0: Vector, subgrad0: Optional[Vector] = None) -> GemState:
    if problem.conjugate.bregman_prox is None:
        raise UnsupportedError(f"{problem.name}: instance lacks a Bregman prox for GEM")
    g0 = np.asarray(g0, dtype=float)
    if subgrad0 is None:
        if problem.conjugate.f_conj_subgrad is None:
            raise UnsupportedError(f"{problem.name}: no subgradient of f* available")
        subgrad0 = problem.conjugate.f_conj_subgrad(g0)
    x0, minval = problem.best_response(g0)
    model = acp_mod.acp_init(g0, -minval, -problem.restrict(x0))
    return GemState(g=g0.copy(), subgrad=np.asarray(subgrad0, dtype=float), z=g0.copy(),
                    v=x0, v_prev=x0, vhat=x0, vbar=x0.copy(), tau=problem.alpha / problem.L,
                    a_prev=0.0, A=1.0, dual_acp=model)


def gem_scalars(tau: float, A: float, alpha: float, L: float) -> "tuple[float, float, float]":
    """``(a_k, tau_{k+1}, A_{k+1})`` from ``(tau_k, A_k)``."""
    a = (tau + math.sqrt(tau * tau + 4.0 * tau * A)) / 2.0
    return a, tau + alpha * a / L, A + a


def gem_step(state: GemState, problem: ProblemOracles,
             prox: Optional[BregmanProx] = None) -> GemState:
    prox = prox or problem.conjugate.bregman_prox
    if prox is None:
        raise UnsupportedError(f"{problem.name}: instance lacks a Bregman prox for GEM")
    alpha, L = problem.alpha, problem.L
    a, tau_next, A_next = gem_scalars(state.tau, state.A, alpha, L)
    vhat = state.v + (state.a_prev / a) * (state.v - state.v_prev)
    g, subgrad = prox(problem.restrict(vhat), state.g, state.subgrad, a, state.tau / alpha)
    keep, take = state.A / A_next, a / A_next
    z = keep * state.z + take * g
    v, minval = problem.best_response(z)
    model = acp_mod.acp_update(state.dual_acp, take, z, -minval, -problem.restrict(v))
    return GemState(g=g, subgrad=subgrad, z=z, v=v, v_prev=state.v, vhat=vhat,
                    vbar=keep * state.vbar + take * v, tau=tau_next, a_prev=a, A=A_next,
                    dual_acp=model, k=state.k + 1)
