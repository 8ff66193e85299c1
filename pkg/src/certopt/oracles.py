"""Oracle bundle for regularized composite problems.

A problem is ``min_x F(x) + h(x) + alpha * w(x)`` where the smooth part is
``F(x) = f(K^T x)`` for an optional coupling matrix ``K`` (identity when
absent).  Gradients of the outer ``f`` live in the *dual space*; the primal
gradient is ``K @ grad f(K^T x)``.  Keeping the coupling explicit lets the
matrix game expose its conjugate ``f*`` in closed form on the column
player's simplex, and every algorithm keeps its dual averages there.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
from numpy.typing import NDArray

Vector = NDArray[np.float64]

DOMAIN_TOL = 1e-9
# Stand-in for +inf on non-strict evaluations; always paired with a flag.
INFEASIBLE = 1e300


class DomainError(ValueError):
    """A point lies outside the domain of the composite part."""


class UnsupportedError(RuntimeError):
    """The instance lacks an oracle an operation requires (e.g. ``f*``)."""


class NormKind(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    ELL1_WITH_DUAL_ELLINF = "ell1_with_dual_ellinf"


@dataclass(frozen=True, eq=False)
class DomainSpec:
    """Simplex, box, or all of R^n; used for membership, sampling and grids."""

    kind: str  # "simplex" | "box" | "free"
    dim: int
    lo: Optional[Vector] = None
    hi: Optional[Vector] = None

    def contains(self, x: Vector, tol: float = DOMAIN_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,) or not np.all(np.isfinite(x)):
            return False
        if self.kind == "simplex":
            return abs(x.sum() - 1.0) <= tol and x.min() >= -tol
        if self.kind == "box":
            return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))
        return True

    def sample(self, rng: np.random.Generator, interior: bool = False) -> Vector:
        if self.kind == "simplex":
            return rng.dirichlet(np.ones(self.dim))
        if self.kind == "box":
            u = rng.uniform(0.02, 0.98, self.dim) if interior else rng.uniform(0, 1, self.dim)
            return self.lo + u * (self.hi - self.lo)
        return rng.standard_normal(self.dim)

    def center(self) -> Vector:
        if self.kind == "simplex":
            return np.full(self.dim, 1.0 / self.dim)
        if self.kind == "box":
            return 0.5 * (self.lo + self.hi)
        return np.zeros(self.dim)


class GlmoResult(NamedTuple):
    argmin: Vector
    minvalue: float


class Evaluation(NamedTuple):
    value: float
    feasible: bool


@dataclass(frozen=True)
class SmoothOracle:
    """Outer smooth function ``f`` evaluated at ``u = K^T x``.

    ``lipschitz`` is the smoothness constant of the *composed* map
    ``x -> f(K^T x)`` in the instance norm.
    """

    value: Callable[[Vector], float]
    grad: Callable[[Vector], Vector]
    lipschitz: float

    def __post_init__(self):
        if not self.lipschitz > 0:
            raise ValueError(f"lipschitz must be positive, got {self.lipschitz}")


@dataclass(frozen=True)
class CompositeOracle:
    """``h + alpha * w`` with its generalized linear minimization oracle.

    ``glmo(v)`` solves ``min_x <v, x> + h(x) + alpha * w(x)``.  ``h`` and
    ``w`` are evaluated only on points that pass ``contains``.
    """

    alpha: float
    glmo: Callable[[Vector], GlmoResult]
    h: Callable[[Vector], float]
    w: Callable[[Vector], float]
    w_bound: float
    contains: Callable[[Vector, float], bool]
    w_smoothness: float = math.inf  # curvature bound of w, for grid error bounds

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.w_bound < 0:
            raise ValueError("w_bound must be nonnegative")

    def h_alpha(self, x: Vector) -> float:
        return self.h(x) + self.alpha * self.w(x)


# bregman_prox(w, g, subgrad, a, beta) -> (g_new, subgrad_new) solves
#   argmin_g  a * (<-w, g> + f*(g)) + beta * D_{L f*}(g || g_k)
# with the divergence linearized at ``subgrad`` in the subdifferential of f*.
BregmanProx = Callable[[Vector, Vector, Vector, float, float], "tuple[Vector, Vector]"]


@dataclass(frozen=True)
class ConjugateOracle:
    """Conjugate-side callbacks.

    The ``h_alpha_conj*`` callbacks take a primal linear functional ``v``
    (``v = K z`` for a dual point ``z``) and return ``grad (h^alpha)*(-v)``
    and ``(h^alpha)*(-v)``.  ``f_conj`` and ``f_conj_subgrad`` act on dual
    points directly.
    """

    h_alpha_conj_grad: Callable[[Vector], Vector]
    f_conj: Optional[Callable[[Vector], float]] = None
    h_alpha_conj: Optional[Callable[[Vector], float]] = None
    f_conj_subgrad: Optional[Callable[[Vector], Vector]] = None
    bregman_prox: Optional[BregmanProx] = None
    # g0 -> upper bound on D_{L f*}(g* || g0) at the dual optimum g*
    bregman_radius: Optional[Callable[[Vector], float]] = None


@dataclass(frozen=True)
class ProblemOracles:
    """Immutable bundle defining one regularized problem instance."""

    smooth: SmoothOracle
    composite: CompositeOracle
    conjugate: ConjugateOracle
    norm_kind: NormKind = NormKind.EUCLIDEAN
    coupling: Optional[NDArray[np.float64]] = None
    start: Optional[Vector] = None
    domain: Optional[DomainSpec] = None
    dual_domain: Optional[DomainSpec] = None
    name: str = "problem"
    # Rebuilds the same instance at another regularization weight.
    factory: Optional[Callable[[float], "ProblemOracles"]] = field(
        default=None, repr=False, compare=False
    )

    @property
    def alpha(self) -> float:
        return self.composite.alpha

    @property
    def L(self) -> float:
        return self.smooth.lipschitz

    @property
    def M(self) -> float:
        return self.composite.w_bound

    @property
    def has_f_conj(self) -> bool:
        return self.conjugate.f_conj is not None

    def with_alpha(self, alpha: float) -> "ProblemOracles":
        if self.factory is None:
            raise UnsupportedError(f"{self.name}: cannot rebuild with a new alpha")
        return self.factory(alpha)

    # linear maps between primal and dual space
    def lift(self, z: Vector) -> Vector:
        """Dual-space vector to primal linear functional: ``K z``."""
        return z if self.coupling is None else self.coupling @ z

    def restrict(self, x: Vector) -> Vector:
        """Primal point to the argument of ``f``: ``K^T x``."""
        return x if self.coupling is None else self.coupling.T @ x

    def f(self, x: Vector) -> float:
        return self.smooth.value(self.restrict(x))

    def response(self, x: Vector) -> Vector:
        """Dual-space gradient ``grad f(K^T x)``."""
        return self.smooth.grad(self.restrict(x))

    def grad(self, x: Vector) -> Vector:
        return self.lift(self.response(x))

    def cut(self, x: Vector) -> "tuple[Vector, float, Vector]":
        """Linearization data ``(u, f(u), grad f(u))`` at ``u = K^T x``."""
        u = self.restrict(x)
        return u, self.smooth.value(u), self.smooth.grad(u)

    def best_response(self, z: Vector) -> GlmoResult:
        """GLMO at the lifted dual vector; argmin equals ``grad (h^a)*(-K z)``."""
        return self.composite.glmo(self.lift(z))

    def h_alpha(self, x: Vector) -> float:
        return self.composite.h_alpha(x)

    def contains(self, x: Vector, tol: float = DOMAIN_TOL) -> bool:
        return self.composite.contains(np.asarray(x, dtype=float), tol)


def _check_domain(problem: ProblemOracles, x: Vector, tol: float) -> None:
    if not problem.contains(x, tol):
        raise DomainError(f"{problem.name}: point outside dom h (tol={tol:g})")


def phi_alpha(problem: ProblemOracles, x: Vector, *, strict: bool = True,
              tol: float = DOMAIN_TOL) -> float:
    """Regularized primal objective ``f(K^T x) + h(x) + alpha w(x)``.

    With ``strict=False`` an infeasible point returns ``INFEASIBLE`` instead
    of raising; use :func:`evaluate_phi` to also get the validity flag.
    """
    x = np.asarray(x, dtype=float)
    if not problem.contains(x, tol):
        if strict:
            _check_domain(problem, x, tol)
        return INFEASIBLE
    return problem.f(x) + problem.h_alpha(x)


def evaluate_phi(problem: ProblemOracles, x: Vector) -> Evaluation:
    feasible = problem.contains(x)
    return Evaluation(phi_alpha(problem, x, strict=False), feasible)


def phi_original(problem: ProblemOracles, x: Vector) -> float:
    """Unregularized objective ``f(K^T x) + h(x)``."""
    x = np.asarray(x, dtype=float)
    _check_domain(problem, x, DOMAIN_TOL)
    return problem.f(x) + problem.composite.h(x)


def h_alpha_conj_at(problem: ProblemOracles, z: Vector) -> float:
    """``(h^alpha)*(-K z)``, the negated GLMO optimum."""
    return -problem.best_response(z).minvalue


def f_conj(problem: ProblemOracles, z: Vector) -> float:
    if problem.conjugate.f_conj is None:
        raise UnsupportedError(f"{problem.name}: instance lacks f* support")
    return problem.conjugate.f_conj(np.asarray(z, dtype=float))


def psi_alpha(problem: ProblemOracles, z: Vector) -> float:
    """Dual objective ``(h^alpha)*(-K z) + f*(z)``."""
    z = np.asarray(z, dtype=float)
    fc = f_conj(problem, z)
    if not np.isfinite(fc):
        raise DomainError(f"{problem.name}: dual point outside dom f*")
    return h_alpha_conj_at(problem, z) + fc


def bregman_divergence(problem: ProblemOracles, x: Vector, y: Vector) -> float:
    """``D_{L f*}(x || y)`` linearized with ``f_conj_subgrad(y)``."""
    cj = problem.conjugate
    if cj.f_conj is None or cj.f_conj_subgrad is None:
        raise UnsupportedError(f"{problem.name}: instance lacks f* support")
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    lin = float(np.dot(cj.f_conj_subgrad(y), x - y))
    return problem.L * math.fsum([cj.f_conj(x), -cj.f_conj(y), -lin])


def pd_gap(problem: ProblemOracles, x: Vector, z: Vector) -> float:
    """Primal-dual gap ``phi^alpha(x) + psi^alpha(z)``; nonnegative by weak duality."""
    return phi_alpha(problem, x) + psi_alpha(problem, z)
