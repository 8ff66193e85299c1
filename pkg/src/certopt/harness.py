"""Run drivers and verification suites.

``run`` iterates one method until its stopping quantity drops below
``epsilon / 2``.  The ``check_*`` functions run methods side by side or
against closed-form envelopes and return a :class:`VerificationReport`.
"""

from __future__ import annotations

import concurrent.futures as cf
import enum
import json
import math
import os
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import acp as acp_mod
from . import algorithms as alg
from .oracles import (
    ProblemOracles,
    UnsupportedError,
    Vector,
    bregman_divergence,
    f_conj,
    phi_alpha,
    phi_original,
    psi_alpha,
)


class Algorithm(str, enum.Enum):
    MDA = "mda"
    GCG = "gcg"
    AGG_GCG_PRIMAL = "agg_gcg_primal"
    AGG_GCG_DUAL = "agg_gcg_dual"
    TAA = "taa"
    GEM = "gem"


# methods that need f* (the dual objective) to run at all
DUAL_ALGORITHMS = frozenset({Algorithm.GCG, Algorithm.AGG_GCG_DUAL, Algorithm.GEM})


class Status(str, enum.Enum):
    CERTIFIED = "certified"
    PD_CONVERGED = "pd_converged"
    BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass(frozen=True)
class RunConfig:
    """``alpha=None`` selects the policy ``alpha = epsilon / (2 M)``."""

    algorithm: Algorithm
    epsilon: float
    alpha: Optional[float] = None
    max_iters: int = 100_000
    record_every: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.alpha is not None and not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.max_iters < 0:
            raise ValueError("max_iters must be nonnegative")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")

    @property
    def alpha_policy(self) -> str:
        return "from_epsilon" if self.alpha is None else "explicit"


def alpha_from_epsilon(problem: ProblemOracles, epsilon: float) -> float:
    """Regularization weight ``epsilon / (2 M)``.

    With ``M = 0`` the regularizer is constant on the domain, any weight is
    sound, and the instance's own weight is kept.
    """
    M = problem.M
    if not math.isfinite(M):
        raise ValueError(f"{problem.name}: alpha from epsilon needs a finite w_bound")
    return problem.alpha if M == 0 else epsilon / (2.0 * M)


def configure(problem: ProblemOracles, config: RunConfig) -> ProblemOracles:
    alpha = config.alpha if config.alpha is not None else alpha_from_epsilon(problem, config.epsilon)
    return problem if alpha == problem.alpha else problem.with_alpha(alpha)


@dataclass(frozen=True)
class IterationTrace:
    iter: int
    phi_at_test: float
    psi_at_dual: Optional[float]
    cert_gap: Optional[float]
    pd_gap: Optional[float]
    wall_ns: int


@dataclass
class RunResult:
    traces: list
    status: Status
    iterations: int
    final: IterationTrace
    alpha: float
    state: object = field(repr=False, default=None)

    @property
    def final_gap(self) -> float:
        gap = self.final.cert_gap if self.final.cert_gap is not None else self.final.pd_gap
        return math.nan if gap is None else gap


def _psi_or_none(problem, z):
    return psi_alpha(problem, z) if problem.has_f_conj else None


def _sum_or_none(a, b):
    return None if a is None or b is None else a + b


class _Driver:
    """Per-method init/step/metrics triple."""

    def __init__(self, problem: ProblemOracles, algorithm: Algorithm, y0: Vector):
        self.problem, self.algorithm = problem, algorithm
        if algorithm in DUAL_ALGORITHMS and not problem.has_f_conj:
            raise UnsupportedError(f"{problem.name}: instance lacks f* support")
        p = problem
        if algorithm is Algorithm.MDA:
            self.state = alg.mda_init(p, y0)
            self._step = alg.mda_step
        elif algorithm is Algorithm.TAA:
            self.state = alg.taa_init(p, y0)
            self._step = alg.taa_step
        elif algorithm is Algorithm.GCG:
            self.state = alg.gcg_init(p, p.response(y0))
            self._step = alg.gcg_step
        elif algorithm is Algorithm.AGG_GCG_PRIMAL:
            self.state = alg.agg_gcg_primal_init(p, y0)
            self._step = alg.agg_gcg_primal_step
        elif algorithm is Algorithm.AGG_GCG_DUAL:
            self.state = alg.agg_gcg_dual_init(p, p.response(y0), y0)
            self._step = alg.agg_gcg_dual_step
        elif algorithm is Algorithm.GEM:
            self.state = alg.gem_init(p, p.response(y0), p.restrict(y0))
            self._step = alg.gem_step
        else:  # pragma: no cover
            raise ValueError(f"unknown algorithm {algorithm}")

    def step(self):
        self.state = self._step(self.state, self.problem)

    def metrics(self) -> "tuple[float, Optional[float], Optional[float], Optional[float]]":
        """(phi at test point, psi at dual point, certificate gap, pd gap)."""
        p, s, a = self.problem, self.state, self.algorithm
        if a in (Algorithm.MDA, Algorithm.TAA, Algorithm.AGG_GCG_PRIMAL):
            phi = phi_alpha(p, s.y)
            dual = s.acp.s_agg if a is not Algorithm.AGG_GCG_PRIMAL else s.s
            psi = _psi_or_none(p, dual)
            cert = phi - acp_mod.acp_min(s.acp, p)[1]
            return phi, psi, cert, _sum_or_none(phi, psi)
        if a is Algorithm.GCG:
            phi, psi = phi_alpha(p, s.x), psi_alpha(p, s.z)
            return phi, psi, alg.wolfe_gap(p, s.z), phi + psi
        if a is Algorithm.AGG_GCG_DUAL:
            phi, psi = phi_alpha(p, s.v), psi_alpha(p, s.z)
            cert = acp_mod.dual_certificate_gap(s.dual_acp, p, s.z).gap
            return phi, psi, cert, phi + psi
        phi, psi = phi_alpha(p, s.vbar), psi_alpha(p, s.z)
        cert = acp_mod.dual_certificate_gap(s.dual_acp, p, s.z).gap
        return phi, psi, cert, phi + psi


def run(problem: ProblemOracles, config: RunConfig, y0: Optional[Vector] = None) -> RunResult:
    """Iterate until the stopping quantity is at most ``epsilon / 2``.

    Certificate-bearing methods stop on the certificate gap (status
    ``certified``).  The two-average methods stop on the primal-dual gap
    (``pd_converged``); when the dual objective is unavailable the recorded
    certificate gap, which bounds the primal-dual gap from above, stands in.
    """
    problem = configure(problem, config)
    if y0 is None:
        y0 = problem.start
    y0 = np.asarray(y0, dtype=float)
    driver = _Driver(problem, config.algorithm, y0)
    two_avg = config.algorithm in (Algorithm.AGG_GCG_PRIMAL, Algorithm.AGG_GCG_DUAL)
    target = config.epsilon / 2.0
    traces = []
    t0 = time.perf_counter_ns()
    k = 0
    while True:
        phi, psi, cert, pdg = driver.metrics()
        row = IterationTrace(k, phi, psi, cert, pdg, time.perf_counter_ns() - t0)
        if two_avg:
            stop_on = pdg if pdg is not None else cert
            status = Status.PD_CONVERGED if stop_on <= target else None
        else:
            status = Status.CERTIFIED if cert <= target else None
        if status is None and k >= config.max_iters:
            status = Status.BUDGET_EXHAUSTED
        if k % config.record_every == 0 or status is not None:
            traces.append(row)
        if status is not None:
            return RunResult(traces, status, k, row, problem.alpha, driver.state)
        driver.step()
        k += 1


# -- reports ------------------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    desc: str
    violation: float
    tol: float
    passed: bool

    def to_dict(self) -> dict:
        return {"desc": self.desc, "violation": self.violation, "tol": self.tol,
                "pass": self.passed}


@dataclass
class VerificationReport:
    suite: str
    checks: list = field(default_factory=list)

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, desc: str, violation: float, tol: float) -> Check:
        violation = float(violation)
        check = Check(desc, violation, tol, bool(violation <= tol))
        self.checks.append(check)
        return check

    def extend(self, other: "VerificationReport", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append(Check(prefix + c.desc, c.violation, c.tol, c.passed))

    def to_dict(self) -> dict:
        return {"suite": self.suite, "checks": [c.to_dict() for c in self.checks],
                "overall": "pass" if self.overall else "fail"}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def summary(self) -> str:
        lines = [f"[{'PASS' if c.passed else 'FAIL'}] {c.desc}: violation={c.violation:.3e} "
                 f"tol={c.tol:.1e}" for c in self.checks]
        lines.append(f"{self.suite}: {'PASS' if self.overall else 'FAIL'}")
        return "\n".join(lines)


def _linf(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def _default_y0(problem: ProblemOracles, y0: Optional[Vector]) -> Vector:
    y0 = problem.start if y0 is None else y0
    return np.asarray(y0, dtype=float)


def perturb_dual(problem: ProblemOracles, z: Vector, size: float) -> Vector:
    """Move ``z`` by about ``size`` while staying in the domain of ``f*``."""
    z = np.asarray(z, dtype=float)
    dom = problem.dual_domain
    if dom is not None and dom.kind == "simplex":
        target = np.zeros_like(z)
        target[int(np.argmin(z))] = 1.0
        return z + size * (target - z)
    return z + size


# -- correspondences ---------------------------------------------------------------------

def check_correspondence_one_avg(problem: ProblemOracles, y0: Optional[Vector] = None,
                                 k_max: int = 200, tol: float = 1e-8,
                                 z0_perturbation: float = 0.0) -> VerificationReport:
    """MDA against GCG started from ``z_0 = grad f(y_0)``."""
    y0 = _default_y0(problem, y0)
    mda = alg.mda_init(problem, y0)
    z0 = problem.response(y0)
    if z0_perturbation:
        z0 = perturb_dual(problem, z0, z0_perturbation)
    gcg = alg.gcg_init(problem, z0)
    worst = {"s": 0.0, "x": 0.0, "zbar": 0.0}
    for k in range(k_max + 1):
        worst["s"] = max(worst["s"], _linf(mda.s, gcg.z))
        worst["x"] = max(worst["x"], _linf(mda.x, gcg.x))
        worst["zbar"] = max(worst["zbar"], _linf(problem.response(mda.x), gcg.zbar))
        if k < k_max:
            mda, gcg = alg.mda_step(mda, problem), alg.gcg_step(gcg, problem)
    rep = VerificationReport("correspondence_one_avg")
    rep.add(f"s_k = z_k for k <= {k_max}", worst["s"], tol)
    rep.add(f"x_k = grad (h^a)*(-z_k) for k <= {k_max}", worst["x"], tol)
    rep.add(f"grad f(x_k) = zbar_k for k <= {k_max}", worst["zbar"], tol)
    return rep


def check_correspondence_two_avg(problem: ProblemOracles, y0: Optional[Vector] = None,
                                 z0_equal_s0: bool = True, k_max: int = 200,
                                 tol: float = 1e-8,
                                 z0_perturbation: float = 1e-3) -> VerificationReport:
    """Primal two-average run against its dual twin from ``(z_0, v_0) = (s_0, y_0)``.

    With ``z0_equal_s0=False`` the dual run starts from a perturbed ``z_0``.
    """
    y0 = _default_y0(problem, y0)
    primal = alg.agg_gcg_primal_init(problem, y0)
    z0 = primal.s if z0_equal_s0 else perturb_dual(problem, primal.s, z0_perturbation)
    dual = alg.agg_gcg_dual_init(problem, z0, y0)
    worst = {"y": 0.0, "s": 0.0, "x": 0.0, "zbar": 0.0}
    for k in range(k_max + 1):
        worst["y"] = max(worst["y"], _linf(primal.y, dual.v))
        worst["s"] = max(worst["s"], _linf(primal.s, dual.z))
        if k > 0:
            worst["x"] = max(worst["x"], _linf(primal.x, dual.xbr))
            worst["zbar"] = max(worst["zbar"], _linf(problem.response(y_prev), dual.zbar))
        if k < k_max:
            y_prev = primal.y
            primal = alg.agg_gcg_primal_step(primal, problem)
            dual = alg.agg_gcg_dual_step(dual, problem)
    rep = VerificationReport("correspondence_two_avg")
    rep.add(f"y_k = v_k for k <= {k_max}", worst["y"], tol)
    rep.add(f"s_k = z_k for k <= {k_max}", worst["s"], tol)
    rep.add(f"x_k = grad (h^a)*(-z_(k-1)) for k <= {k_max}", worst["x"], tol)
    rep.add(f"grad f(y_(k-1)) = zbar_k for k <= {k_max}", worst["zbar"], tol)
    return rep


def check_correspondence_three_avg(problem: ProblemOracles, y0: Optional[Vector] = None,
                                   k_max: int = 200, tol: float = 1e-8,
                                   lam: Optional[float] = None) -> VerificationReport:
    """TAA against GEM with ``g_0 = grad f(y_0)``; ``lam`` overrides TAA's weight."""
    if problem.conjugate.bregman_prox is None:
        raise UnsupportedError(f"{problem.name}: instance lacks a Bregman prox for GEM")
    y0 = _default_y0(problem, y0)
    taa = alg.taa_init(problem, y0, lam)
    gem = alg.gem_init(problem, problem.response(y0), problem.restrict(y0))
    worst = {"g": 0.0, "s": 0.0, "x": 0.0}
    for k in range(k_max + 1):
        worst["g"] = max(worst["g"], _linf(problem.response(taa.xtilde), gem.g))
        worst["s"] = max(worst["s"], _linf(taa.s, gem.z))
        worst["x"] = max(worst["x"], _linf(taa.x, gem.v))
        if k < k_max:
            taa, gem = alg.taa_step(taa, problem), alg.gem_step(gem, problem)
    rep = VerificationReport("correspondence_three_avg")
    rep.add(f"grad f(xtilde_k) = g_k for k <= {k_max}", worst["g"], tol)
    rep.add(f"s_k = z_k for k <= {k_max}", worst["s"], tol)
    rep.add(f"x_k = v_k for k <= {k_max}", worst["x"], tol)
    return rep


def check_correspondence(problem: ProblemOracles, y0: Optional[Vector] = None,
                         k_max: int = 200, tol: float = 1e-8) -> VerificationReport:
    """All three correspondences that the instance supports."""
    rep = VerificationReport("correspondence")
    rep.extend(check_correspondence_one_avg(problem, y0, k_max, tol), "one-average: ")
    rep.extend(check_correspondence_two_avg(problem, y0, True, k_max, tol), "two-average: ")
    if problem.conjugate.bregman_prox is not None:
        rep.extend(check_correspondence_three_avg(problem, y0, k_max, tol), "three-average: ")
    return rep


# -- rate envelopes ---------------------------------------------------------------------

@dataclass(frozen=True)
class EnvelopeTrace:
    """Measured sequence against its closed-form bound, index by index."""

    values: np.ndarray
    bounds: np.ndarray

    def relative_violation(self) -> float:
        """``max_k (value_k - bound_k) / bound_k``; pass when <= relative tolerance."""
        with np.errstate(divide="ignore", invalid="ignore"):
            r = (self.values - self.bounds) / np.abs(self.bounds)
        r = np.where(self.values <= self.bounds, np.minimum(r, 0.0), r)
        return float(np.max(r))

    def slack_violation(self) -> float:
        """``max_k (value_k - bound_k) / (1 + |bound_k|)``."""
        return float(np.max((self.values - self.bounds) / (1.0 + np.abs(self.bounds))))


def mda_envelope(problem: ProblemOracles, k_max: int, y0=None) -> EnvelopeTrace:
    """Certificate gap ``t_k`` of MDA against ``t_0 (1 + alpha/L)^-k``."""
    y0 = _default_y0(problem, y0)
    s = alg.mda_init(problem, y0)
    rho = 1.0 / (1.0 + problem.alpha / problem.L)
    vals = []
    for k in range(k_max + 1):
        vals.append(acp_mod.certificate_gap(s.acp, problem, s.y).gap)
        if k < k_max:
            s = alg.mda_step(s, problem)
    vals = np.array(vals)
    return EnvelopeTrace(vals, vals[0] * rho ** np.arange(k_max + 1))


def taa_envelope(problem: ProblemOracles, k_max: int, y0=None) -> EnvelopeTrace:
    """``phi(y_k) - min Gamma_k`` against ``Delta (1 - lam)^k``."""
    y0 = _default_y0(problem, y0)
    s = alg.taa_init(problem, y0)
    delta = phi_alpha(problem, y0) - acp_mod.model_value(s.acp, problem, s.x)
    vals = []
    for k in range(k_max + 1):
        vals.append(acp_mod.certificate_gap(s.acp, problem, s.y).gap)
        if k < k_max:
            s = alg.taa_step(s, problem)
    return EnvelopeTrace(np.array(vals), delta * (1.0 - s.lam) ** np.arange(k_max + 1))


def gcg_envelope(problem: ProblemOracles, k_max: int, y0=None) -> EnvelopeTrace:
    """``psi(z_k) + phi(ytilde_k)`` against its initial value times ``(1 + alpha/L)^-k``."""
    y0 = _default_y0(problem, y0)
    s = alg.gcg_init(problem, problem.response(y0))
    rho = 1.0 / (1.0 + problem.alpha / problem.L)
    vals = []
    for k in range(k_max + 1):
        vals.append(psi_alpha(problem, s.z) + phi_alpha(problem, s.ytilde))
        if k < k_max:
            s = alg.gcg_step(s, problem)
    vals = np.array(vals)
    return EnvelopeTrace(vals, vals[0] * rho ** np.arange(k_max + 1))


def gcg_descent(problem: ProblemOracles, k_max: int, y0=None) -> EnvelopeTrace:
    """``psi(z_(k+1))`` against ``psi(z_k) - eta S(z_k)``."""
    y0 = _default_y0(problem, y0)
    s = alg.gcg_init(problem, problem.response(y0))
    vals, bounds = [], []
    for _ in range(k_max):
        bound = psi_alpha(problem, s.z) - s.eta * alg.wolfe_gap(problem, s.z)
        s = alg.gcg_step(s, problem)
        vals.append(psi_alpha(problem, s.z))
        bounds.append(bound)
    return EnvelopeTrace(np.array(vals), np.array(bounds))


def agg_gcg_envelope(problem: ProblemOracles, k_max: int, y0=None) -> EnvelopeTrace:
    """``phi(y_k) + psi(s_k)`` against ``(1 - eta)^k`` times its initial value."""
    y0 = _default_y0(problem, y0)
    s = alg.agg_gcg_primal_init(problem, y0)
    vals = []
    for k in range(k_max + 1):
        vals.append(phi_alpha(problem, s.y) + psi_alpha(problem, s.s))
        if k < k_max:
            s = alg.agg_gcg_primal_step(s, problem)
    vals = np.array(vals)
    return EnvelopeTrace(vals, vals[0] * (1.0 - s.eta) ** np.arange(k_max + 1))


def gem_envelope(problem: ProblemOracles, k_max: int, y0=None) -> EnvelopeTrace:
    """``psi(z_k) - min Gamma*_k`` against ``(phi(v_0) + psi(z_0) + D/L) rho^(2k)``."""
    radius = problem.conjugate.bregman_radius
    if radius is None:
        raise UnsupportedError(f"{problem.name}: no Bregman radius for the GEM bound")
    y0 = _default_y0(problem, y0)
    g0 = problem.response(y0)
    s = alg.gem_init(problem, g0, problem.restrict(y0))
    alpha, L = problem.alpha, problem.L
    c0 = phi_alpha(problem, s.v) + psi_alpha(problem, s.z) + radius(g0) / L
    rho = 1.0 + math.sqrt(alpha) / (2.0 * math.sqrt(L))
    vals = []
    for k in range(k_max + 1):
        vals.append(acp_mod.dual_certificate_gap(s.dual_acp, problem, s.z).gap)
        if k < k_max:
            s = alg.gem_step(s, problem)
    return EnvelopeTrace(np.array(vals), c0 * rho ** (-2.0 * np.arange(k_max + 1)))


ENVELOPES: "dict[Algorithm, Callable[..., EnvelopeTrace]]" = {
    Algorithm.MDA: mda_envelope,
    Algorithm.GCG: gcg_envelope,
    Algorithm.AGG_GCG_PRIMAL: agg_gcg_envelope,
    Algorithm.TAA: taa_envelope,
    Algorithm.GEM: gem_envelope,
}

RATE_TOL = 1e-9


def check_rates(problem: ProblemOracles, algorithm, k_max: int = 200,
                y0: Optional[Vector] = None) -> VerificationReport:
    """Envelope check with slack ``1e-9 (1 + |bound|)`` at every k."""
    algorithm = Algorithm(algorithm)
    if algorithm is Algorithm.AGG_GCG_DUAL:
        algorithm = Algorithm.AGG_GCG_PRIMAL  # same sequences
    env = ENVELOPES[algorithm](problem, k_max, y0)
    rep = VerificationReport(f"rates_{algorithm.value}")
    rep.add(f"{algorithm.value} envelope for k <= {k_max}", env.slack_violation(), RATE_TOL)
    if algorithm is Algorithm.GCG:
        rep.add(f"gcg per-step descent for k < {k_max}",
                gcg_descent(problem, k_max, y0).slack_violation(), RATE_TOL)
    return rep


def supported_algorithms(problem: ProblemOracles) -> "list[Algorithm]":
    """Methods whose envelope can be evaluated; the GCG and AggGCG bounds need ``psi``."""
    algos = [Algorithm.MDA, Algorithm.TAA]
    if problem.has_f_conj:
        algos[1:1] = [Algorithm.GCG, Algorithm.AGG_GCG_PRIMAL]
        if problem.conjugate.bregman_prox is not None and problem.conjugate.bregman_radius:
            algos.append(Algorithm.GEM)
    return algos


def check_all_rates(problem: ProblemOracles, k_max: int = 200,
                    y0: Optional[Vector] = None) -> VerificationReport:
    rep = VerificationReport("rates")
    reports = parallel_map(lambda a: check_rates(problem, a, k_max, y0),
                           supported_algorithms(problem))
    for r in reports:
        rep.extend(r)
    return rep


# -- soundness --------------------------------------------------------------------------

def check_soundness(problem: ProblemOracles, epsilon: float, resolution: float = 1e-4,
                    algorithms: Sequence = (Algorithm.MDA, Algorithm.TAA),
                    max_iters: int = 1_000_000) -> VerificationReport:
    """Certified points are epsilon-optimal for the unregularized problem.

    Sets ``alpha = epsilon / (2 M)``, runs each method to a certificate and
    compares ``f + h`` at its test point against a grid minimum.
    """
    from .instances import brute_force_min

    ref = brute_force_min(problem, resolution=resolution, objective="original")
    rep = VerificationReport("soundness")

    def one(a):
        res = run(problem, RunConfig(Algorithm(a), epsilon, max_iters=max_iters))
        return a, res

    for a, res in parallel_map(one, algorithms):
        name = Algorithm(a).value
        if res.status is not Status.CERTIFIED:
            rep.add(f"{name} certified within {max_iters} iterations", math.inf, 0.0)
            continue
        point = _test_point(res.state)
        excess = phi_original(problem, point) - ref.value
        rep.add(f"{name}: phi(u) - phi*_grid <= eps + grid bound "
                f"(eps={epsilon:g}, grid bound={ref.error_bound:.1e})",
                excess - epsilon, ref.error_bound)
    return rep


def _test_point(state) -> Vector:
    for name in ("y", "vbar", "x"):
        if hasattr(state, name):
            return getattr(state, name)
    raise TypeError(f"no test point on {type(state).__name__}")


# -- oracle identities ------------------------------------------------------------------

def _sample(problem: ProblemOracles, rng, interior: bool = False) -> Vector:
    if problem.domain is None:
        raise UnsupportedError(f"{problem.name}: no domain description for sampling")
    return problem.domain.sample(rng, interior)


def _primal_norm(problem: ProblemOracles, d: Vector) -> float:
    kind = problem.norm_kind.value
    return float(np.sum(np.abs(d))) if kind.startswith("ell1") else float(np.linalg.norm(d))


def check_identities(problem: ProblemOracles, samples: int = 100, seed: int = 0,
                     gcg_iters: int = 100) -> VerificationReport:
    """Oracle-level identities on random samples; see each check's description."""
    rng = np.random.default_rng(seed)
    rep = VerificationReport("identities")
    p = problem
    xs = [_sample(p, rng) for _ in range(samples)]
    scale = 3.0 * max(1.0, p.alpha)
    vs = [scale * rng.standard_normal(xs[0].size) for _ in range(samples)]

    if p.has_f_conj:
        worst = 0.0
        for x in xs:
            u = p.restrict(x)
            g = p.smooth.grad(u)
            worst = max(worst, abs(p.smooth.value(u) + f_conj(p, g) - float(u @ g)))
        rep.add("Fenchel-Young f(u) + f*(grad f(u)) = <u, grad f(u)>", worst, 1e-9)

    worst = worst_val = 0.0
    for v in vs:
        x, val = p.composite.glmo(v)
        worst = max(worst, _linf(p.conjugate.h_alpha_conj_grad(v), x))
        if p.conjugate.h_alpha_conj is not None:
            worst_val = max(worst_val, abs(p.conjugate.h_alpha_conj(v) + val))
    rep.add("grad (h^a)*(-v) = GLMO argmin", worst, 1e-10)
    if p.conjugate.h_alpha_conj is not None:
        rep.add("(h^a)*(-v) = -GLMO min value", worst_val, 1e-10)

    worst_cons = worst_dom = 0.0
    for v in vs:
        x, val = p.composite.glmo(v)
        worst_cons = max(worst_cons, abs(val - (float(v @ x) + p.h_alpha(x))))
        worst_dom = max(worst_dom, 0.0 if p.contains(x) else math.inf)
    rep.add("GLMO min value = <v, argmin> + h^a(argmin)", worst_cons, 1e-10)
    rep.add("GLMO argmin lies in dom h", worst_dom, 0.0)

    worst = 0.0
    for _ in range(min(samples, 50)):
        u = p.restrict(_sample(p, rng, interior=True))
        g = p.smooth.grad(u)
        fd = np.empty_like(u)
        for i in range(u.size):
            h = 1e-5 * max(1.0, abs(u[i]))
            e = np.zeros_like(u)
            e[i] = h
            fd[i] = (p.smooth.value(u + e) - p.smooth.value(u - e)) / (2 * h)
        worst = max(worst, float(np.linalg.norm(fd - g) / max(1.0, np.linalg.norm(g))))
    rep.add("grad f matches central differences (relative)", worst, 1e-6)

    worst_lo = worst_hi = 0.0
    for i in range(samples):
        x, y = xs[i], xs[(i + 1) % samples]
        breg = p.f(y) - p.f(x) - float(p.grad(x) @ (y - x))
        worst_lo = max(worst_lo, -breg)
        worst_hi = max(worst_hi, breg - 0.5 * p.L * _primal_norm(p, y - x) ** 2)
    rep.add("f Bregman gap >= 0", worst_lo, 1e-12)
    rep.add("f Bregman gap <= L/2 ||y - x||^2", worst_hi, 1e-12)

    # a few MDA steps give a multi-cut model
    state = alg.mda_init(p, p.start)
    for _ in range(5):
        state = alg.mda_step(state, p)
    model = state.acp
    v_min, m = acp_mod.acp_min(model, p)
    worst_minor = worst_sc = 0.0
    for x in xs:
        gx = acp_mod.model_value(model, p, x)
        worst_minor = max(worst_minor, gx - phi_alpha(p, x))
        d = _primal_norm(p, x - v_min)
        worst_sc = max(worst_sc, m + 0.5 * p.alpha * d * d - gx)
    rep.add("model minorizes phi^a", worst_minor, 1e-9)
    rep.add("model >= min + alpha/2 ||x - v||^2", worst_sc, 1e-9)
    if p.has_f_conj:
        cert = acp_mod.certificate_gap(model, p, state.y)
        rep.add("certificate gap >= phi(u) + psi(s)",
                phi_alpha(p, state.y) + psi_alpha(p, model.s_agg) - cert.gap, 1e-9)
        worst = 0.0
        for i in range(samples):
            worst = max(worst, -(phi_alpha(p, xs[i]) + psi_alpha(p, p.response(xs[-1 - i]))))
        rep.add("weak duality phi(x) + psi(z) >= 0", worst, 1e-9)
        rep.extend(check_wolfe_identities(p, gcg_iters))
        if p.conjugate.bregman_prox is not None:
            rep.extend(check_three_points(p, samples=min(samples, 50), seed=seed))
    rep.extend(check_gem_scalars(p.alpha, p.L))
    return rep


def check_wolfe_identities(problem: ProblemOracles, k_max: int = 500,
                           y0: Optional[Vector] = None, tol: float = 1e-9) -> VerificationReport:
    """Along a GCG run: ``S(z) = psi(z) + phi(x)`` and ``S(z) = psi(z) - min Gamma*``."""
    p = problem
    s = alg.gcg_init(p, p.response(_default_y0(p, y0)))
    w1 = w2 = 0.0
    for k in range(k_max + 1):
        S = alg.wolfe_gap(p, s.z)
        psi = psi_alpha(p, s.z)
        w1 = max(w1, abs(S - (psi + phi_alpha(p, s.x))))
        single = acp_mod.acp_init(*acp_mod.dual_cut_at(p, s.z))
        w2 = max(w2, abs(S - (psi - acp_mod.acp_min_dual(single, p)[1])))
        if k < k_max:
            s = alg.gcg_step(s, p)
    rep = VerificationReport("wolfe")
    rep.add(f"S(z_k) = psi(z_k) + phi(x_k), k <= {k_max}", w1, tol)
    rep.add(f"S(z_k) = psi(z_k) - min single-cut dual model, k <= {k_max}", w2, tol)
    return rep


def check_gem_scalars(alpha: float, L: float, k_max: int = 1000,
                      tol: float = 1e-12) -> VerificationReport:
    tau, A = alpha / L, 1.0
    growth = 1.0 + math.sqrt(alpha) / (2.0 * math.sqrt(L))
    w_lin = w_sq = w_grow = 0.0
    for k in range(k_max + 1):
        w_lin = max(w_lin, abs(A * alpha - tau * L) / (A * alpha))
        # log-space comparison avoids overflow of growth**(2k)
        w_grow = max(w_grow, 2 * k * math.log(growth) - math.log(A))
        a, tau_next, A_next = alg.gem_scalars(tau, A, alpha, L)
        w_sq = max(w_sq, abs(a * a - tau * A_next) / (a * a))
        tau, A = tau_next, A_next
    rep = VerificationReport("gem_scalars")
    rep.add(f"A_k alpha = tau_k L (relative), k <= {k_max}", w_lin, tol)
    rep.add(f"a_k^2 = tau_k A_(k+1) (relative), k <= {k_max}", w_sq, tol)
    rep.add(f"log A_k >= 2k log(1 + sqrt(alpha/L)/2), k <= {k_max}", w_grow, tol)
    return rep


def check_three_points(problem: ProblemOracles, samples: int = 50, seed: int = 0,
                       tol: float = 1e-9) -> VerificationReport:
    """Prox optimality inequality with relative strong convexity ``a / L``.

    For ``g+ = prox(w, g_k, a, beta)`` and any ``u``:
    ``Phi(g+) + beta D(g+||g_k) + (beta + a/L) D(u||g+) <= Phi(u) + beta D(u||g_k)``
    where ``Phi = a (<-w, .> + f*)`` and ``D`` is the divergence of ``L f*``.
    """
    p = problem
    prox = p.conjugate.bregman_prox
    if prox is None:
        raise UnsupportedError(f"{p.name}: instance lacks a Bregman prox")
    rng = np.random.default_rng(seed)

    def dual_point():
        return p.response(_sample(p, rng))

    worst = -math.inf
    for _ in range(samples):
        w = p.restrict(_sample(p, rng)) + rng.standard_normal(p.restrict(p.start).size)
        gk, u = dual_point(), dual_point()
        a, beta = float(rng.uniform(0.1, 5.0)), float(rng.uniform(0.1, 5.0))
        gp, _ = prox(w, gk, p.conjugate.f_conj_subgrad(gk), a, beta)

        def Phi(g):
            return a * (-float(w @ g) + f_conj(p, g))

        lhs = (Phi(gp) + beta * bregman_divergence(p, gp, gk)
               + (beta + a / p.L) * bregman_divergence(p, u, gp))
        rhs = Phi(u) + beta * bregman_divergence(p, u, gk)
        worst = max(worst, (lhs - rhs) / (1.0 + abs(rhs)))
    rep = VerificationReport("three_points")
    rep.add(f"three-points inequality over {samples} random triples", worst, tol)
    return rep


# -- complexity sweeps -----------------------------------------------------------------------

def iterations_to_certificate(problem: ProblemOracles, algorithm, epsilons: Iterable[float],
                              max_iters: int = 1_000_000,
                              y0: Optional[Vector] = None) -> "list[int]":
    """Iterations each run needs with ``alpha = epsilon / (2 M)``; -1 if the budget ran out."""
    algorithm = Algorithm(algorithm)

    def one(eps):
        res = run(problem, RunConfig(algorithm, eps, max_iters=max_iters, record_every=max_iters),
                  y0)
        return res.iterations if res.status is not Status.BUDGET_EXHAUSTED else -1

    return parallel_map(one, list(epsilons))


def loglog_slope(epsilons: Sequence[float], iterations: Sequence[int]) -> float:
    """Least-squares slope of ``log k`` against ``log(1/epsilon)``."""
    x = np.log(1.0 / np.asarray(epsilons, dtype=float))
    y = np.log(np.maximum(np.asarray(iterations, dtype=float), 1.0))
    return float(np.polyfit(x, y, 1)[0])


# -- parallelism ----------------------------------------------------------------------------

def thread_cap() -> int:
    raw = os.environ.get("CERTOPT_THREADS")
    if raw is None:
        return min(4, os.cpu_count() or 1)
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"CERTOPT_THREADS must be an integer, got {raw!r}") from None


def parallel_map(fn, items: Sequence, threads: Optional[int] = None) -> list:
    """Order-preserving map; results do not depend on scheduling."""
    items = list(items)
    threads = thread_cap() if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with cf.ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))
