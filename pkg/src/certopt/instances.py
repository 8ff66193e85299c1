"""Concrete problem families packaged as :class:`ProblemOracles`.

* entropically smoothed zero-sum matrix game on the simplex,
* smoothed Fisher market in log-prices on a box,
* a separable quadratic on a box (closed forms everywhere).

Also: seeded generators, JSON (de)serialization and a grid-search reference
minimizer for tiny instances.
"""

from __future__ import annotations

import itertools
import json
import math
import os
import tempfile
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .oracles import (
    CompositeOracle,
    ConjugateOracle,
    DomainSpec,
    GlmoResult,
    NormKind,
    ProblemOracles,
    SmoothOracle,
    Vector,
    phi_alpha,
    phi_original,
)

# Probability floor used when taking logs of simplex points.
PROB_FLOOR = 1e-300


def _as_array(x, ndim: int, name: str) -> Vector:
    arr = np.array(x, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{name}: expected a {ndim}-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: entries must be finite")
    return arr


def _neg_entropy(x: Vector) -> float:
    """``sum x log x`` with ``0 log 0 = 0``; nonpositive entries contribute 0."""
    pos = x[x > 0]
    return float(np.dot(pos, np.log(pos)))


# Max-shifted kernels; plain numpy is much cheaper than scipy.special for
# the short vectors here.
def logsumexp(t: np.ndarray, axis: Optional[int] = None):
    top = np.max(t, axis=axis, keepdims=True)
    out = np.log(np.sum(np.exp(t - top), axis=axis, keepdims=True)) + top
    return out.item() if axis is None else np.squeeze(out, axis=axis)


def softmax(t: np.ndarray, axis: Optional[int] = None) -> np.ndarray:
    e = np.exp(t - np.max(t, axis=axis, keepdims=True))
    return e / np.sum(e, axis=axis, keepdims=True)


# -- matrix game ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MatrixGameInstance:
    """``min_x max_z <A^T x, z> - H(z)/L + alpha (H(x) + log n)``.

    ``payoff`` is rescaled to unit spectral norm at construction.
    """

    payoff: Vector
    L: float = 1.0
    alpha: float = 0.05
    seed: Optional[int] = None

    def __post_init__(self):
        A = _as_array(self.payoff, 2, "payoff")
        if min(A.shape) < 1:
            raise ValueError("payoff: empty matrix")
        norm = np.linalg.norm(A, 2)
        # already-normalized input (e.g. a reloaded file) is kept bit-for-bit
        if norm > 0 and abs(norm - 1.0) > 1e-12:
            A = A / norm
        object.__setattr__(self, "payoff", A)
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    @property
    def n(self) -> int:
        return self.payoff.shape[0]

    @property
    def m(self) -> int:
        return self.payoff.shape[1]


def simplex_glmo(alpha: float, v: Vector) -> GlmoResult:
    """``min_x <v, x> + alpha (H(x) + log n)`` over the simplex."""
    t = -np.asarray(v, dtype=float) / alpha
    top = t.max()
    e = np.exp(t - top)
    total = e.sum()
    n = t.size
    return GlmoResult(e / total, float(-alpha * (top + math.log(total)) + alpha * math.log(n)))


def _entropic_prox(L: float):
    """KL step for ``nu* = L f* = H`` on the simplex.

    Stationarity gives ``log g_new = (beta log g + a w) / (beta + a/L) + c``.
    """

    def prox(w, g, subgrad, a, beta):
        t = (beta * np.log(np.maximum(g, PROB_FLOOR)) + a * np.asarray(w)) / (beta + a / L)
        g_new = softmax(t)
        return g_new, t / L

    return prox


def game_oracles(inst: MatrixGameInstance, alpha: Optional[float] = None) -> ProblemOracles:
    alpha = inst.alpha if alpha is None else alpha
    A, L = inst.payoff, inst.L
    n, m = A.shape
    primal = DomainSpec("simplex", n)
    dual = DomainSpec("simplex", m)

    def f(u):
        return float(logsumexp(L * u)) / L

    def grad(u):
        return softmax(L * u)

    def w(x):
        return _neg_entropy(np.asarray(x, dtype=float)) + math.log(n)

    def f_conj(z):
        z = np.asarray(z, dtype=float)
        if not dual.contains(z):
            return math.inf
        return _neg_entropy(z) / L

    def h_alpha_conj(v):
        return alpha * float(logsumexp(-np.asarray(v) / alpha)) - alpha * math.log(n)

    return ProblemOracles(
        smooth=SmoothOracle(f, grad, L),
        composite=CompositeOracle(
            alpha=alpha,
            glmo=lambda v: simplex_glmo(alpha, v),
            h=lambda x: 0.0,
            w=w,
            w_bound=math.log(n),
            contains=primal.contains,
        ),
        conjugate=ConjugateOracle(
            h_alpha_conj_grad=lambda v: softmax(-np.asarray(v, dtype=float) / alpha),
            f_conj=f_conj,
            h_alpha_conj=h_alpha_conj,
            f_conj_subgrad=lambda g: np.log(np.maximum(g, PROB_FLOOR)) / L,
            bregman_prox=_entropic_prox(L),
            # KL radius from g0 over the simplex vertices, floored at 1e-12
            bregman_radius=lambda g0: float(np.max(-np.log(np.maximum(g0, 1e-12)))),
        ),
        norm_kind=NormKind.ELL1_WITH_DUAL_ELLINF,
        coupling=A,
        start=np.full(n, 1.0 / n),
        domain=primal,
        dual_domain=dual,
        name=f"game{n}x{m}",
        factory=lambda a: game_oracles(inst, a),
    )


# -- Fisher market ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FisherMarketInstance:
    """Smoothed Fisher market over log-prices ``mu`` in a box.

    ``f(mu) = sum_j exp(mu_j) + delta sum_i B_i lse_j((log b_ij - mu_j)/delta)``,
    regularized by ``alpha/2 ||mu - mu_ref||^2``.
    """

    valuations: Vector
    budgets: Vector
    delta: float = 0.5
    mu_lo: Optional[Vector] = None
    mu_hi: Optional[Vector] = None
    mu_ref: Optional[Vector] = None
    alpha: float = 0.01
    L: Optional[float] = None
    seed: Optional[int] = None

    def __post_init__(self):
        b = _as_array(self.valuations, 2, "valuations")
        B = _as_array(self.budgets, 1, "budgets")
        if np.any(b <= 0):
            raise ValueError("valuations: entries must be positive")
        if np.any(B <= 0):
            raise ValueError("budgets: entries must be positive")
        if B.shape[0] != b.shape[0]:
            raise ValueError("budgets: length must equal the number of buyers")
        n = b.shape[1]
        lo = np.full(n, -2.0) if self.mu_lo is None else _as_array(self.mu_lo, 1, "mu_lo")
        hi = np.full(n, 1.0) if self.mu_hi is None else _as_array(self.mu_hi, 1, "mu_hi")
        ref = np.clip(np.zeros(n), lo, hi) if self.mu_ref is None else _as_array(
            self.mu_ref, 1, "mu_ref")
        for name, vec in (("mu_lo", lo), ("mu_hi", hi), ("mu_ref", ref)):
            if vec.shape != (n,):
                raise ValueError(f"{name}: expected length {n}")
        if not (np.all(lo <= ref) and np.all(ref <= hi)):
            raise ValueError("mu_ref: need mu_lo <= mu_ref <= mu_hi")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.L is not None and not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")
        for name, val in (("valuations", b), ("budgets", B), ("mu_lo", lo),
                          ("mu_hi", hi), ("mu_ref", ref)):
            object.__setattr__(self, name, val)

    @property
    def m(self) -> int:
        return self.valuations.shape[0]

    @property
    def n(self) -> int:
        return self.valuations.shape[1]


def fisher_smoothness(inst: FisherMarketInstance) -> float:
    """Upper bound on the Hessian norm of the market potential over the box.

    The exponential term contributes at most ``max_j exp(mu_hi_j) <= n exp(max mu_hi)``
    and each smoothed buyer term at most ``B_i / delta``.
    """
    return inst.n * math.exp(float(np.max(inst.mu_hi))) + float(np.sum(inst.budgets)) / inst.delta


def box_glmo(alpha: float, ref: Vector, lo: Vector, hi: Vector, v: Vector) -> GlmoResult:
    """``min_x <v, x> + alpha/2 ||x - ref||^2`` over ``[lo, hi]``."""
    v = np.asarray(v, dtype=float)
    x = np.clip(ref - v / alpha, lo, hi)
    d = x - ref
    return GlmoResult(x, float(v @ x) + 0.5 * alpha * float(d @ d))


def fisher_oracles(inst: FisherMarketInstance, alpha: Optional[float] = None) -> ProblemOracles:
    alpha = inst.alpha if alpha is None else alpha
    logb = np.log(inst.valuations)
    B, delta = inst.budgets, inst.delta
    lo, hi, ref = inst.mu_lo, inst.mu_hi, inst.mu_ref
    box = DomainSpec("box", inst.n, lo, hi)
    L = inst.L if inst.L is not None else fisher_smoothness(inst)

    def f(mu):
        T = (logb - mu[None, :]) / delta
        return float(np.sum(np.exp(mu)) + delta * B @ logsumexp(T, axis=1))

    def grad(mu):
        T = (logb - mu[None, :]) / delta
        return np.exp(mu) - B @ softmax(T, axis=1)

    def w(mu):
        d = np.asarray(mu) - ref
        return 0.5 * float(d @ d)

    def h_alpha_conj_grad(v):
        # same minimizer as box_glmo, written as a projection
        return np.minimum(np.maximum(ref - np.asarray(v) / alpha, lo), hi)

    return ProblemOracles(
        smooth=SmoothOracle(f, grad, L),
        composite=CompositeOracle(
            alpha=alpha,
            glmo=lambda v: box_glmo(alpha, ref, lo, hi, v),
            h=lambda x: 0.0,
            w=w,
            w_bound=0.5 * float(np.sum(np.maximum((hi - ref) ** 2, (ref - lo) ** 2))),
            contains=box.contains,
            w_smoothness=1.0,
        ),
        conjugate=ConjugateOracle(h_alpha_conj_grad=h_alpha_conj_grad),
        norm_kind=NormKind.EUCLIDEAN,
        start=ref.copy(),
        domain=box,
        name=f"fisher{inst.m}x{inst.n}",
        factory=lambda a: fisher_oracles(inst, a),
    )


# -- quadratic on a box -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class QuadBoxToy:
    """``f = L/2 ||x||^2`` on ``[lo, hi]^n`` with ``w = 1/2 ||x||^2``."""

    n: int = 1
    alpha: float = 1.0
    L: float = 1.0
    lo: Union[float, Vector] = -1.0
    hi: Union[float, Vector] = 1.0
    seed: Optional[int] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        lo = np.broadcast_to(np.asarray(self.lo, dtype=float), (self.n,)).copy()
        hi = np.broadcast_to(np.asarray(self.hi, dtype=float), (self.n,)).copy()
        if np.any(lo > hi):
            raise ValueError("lo: need lo <= hi")
        if not (self.alpha > 0 and self.L > 0):
            raise ValueError("alpha and L must be positive")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def minimizer(self) -> Vector:
        return np.clip(np.zeros(self.n), self.lo, self.hi)


def _euclidean_prox(L: float):
    """Prox for ``nu* = L f* = 1/2 ||.||^2``."""

    def prox(w, g, subgrad, a, beta):
        g_new = (a * np.asarray(w) + beta * np.asarray(g)) / (a / L + beta)
        return g_new, g_new / L

    return prox


def quadbox_oracles(inst: QuadBoxToy, alpha: Optional[float] = None) -> ProblemOracles:
    alpha = inst.alpha if alpha is None else alpha
    L, lo, hi = inst.L, inst.lo, inst.hi
    box = DomainSpec("box", inst.n, lo, hi)
    zeros = np.zeros(inst.n)

    return ProblemOracles(
        smooth=SmoothOracle(lambda u: 0.5 * L * float(u @ u), lambda u: L * np.asarray(u), L),
        composite=CompositeOracle(
            alpha=alpha,
            glmo=lambda v: box_glmo(alpha, zeros, lo, hi, v),
            h=lambda x: 0.0,
            w=lambda x: 0.5 * float(np.asarray(x) @ np.asarray(x)),
            w_bound=0.5 * float(np.sum(np.maximum(lo ** 2, hi ** 2))),
            contains=box.contains,
            w_smoothness=1.0,
        ),
        conjugate=ConjugateOracle(
            h_alpha_conj_grad=lambda v: np.minimum(np.maximum(-np.asarray(v) / alpha, lo), hi),
            f_conj=lambda z: float(np.asarray(z) @ np.asarray(z)) / (2.0 * L),
            h_alpha_conj=lambda v: -box_glmo(alpha, zeros, lo, hi, v).minvalue,
            f_conj_subgrad=lambda z: np.asarray(z, dtype=float) / L,
            bregman_prox=_euclidean_prox(L),
            # the dual optimum lies in grad f(box) = L * box
            bregman_radius=lambda g0: 0.5 * float(np.sum(np.maximum((L * lo - g0) ** 2,
                                                                    (L * hi - g0) ** 2))),
        ),
        norm_kind=NormKind.EUCLIDEAN,
        start=hi.copy(),
        domain=box,
        dual_domain=DomainSpec("free", inst.n),
        name=f"quadbox{inst.n}",
        factory=lambda a: quadbox_oracles(inst, a),
    )


Instance = Union[MatrixGameInstance, FisherMarketInstance, QuadBoxToy]


def build_oracles(inst: Instance, alpha: Optional[float] = None) -> ProblemOracles:
    if isinstance(inst, MatrixGameInstance):
        return game_oracles(inst, alpha)
    if isinstance(inst, FisherMarketInstance):
        return fisher_oracles(inst, alpha)
    if isinstance(inst, QuadBoxToy):
        return quadbox_oracles(inst, alpha)
    raise TypeError(f"unknown instance type {type(inst).__name__}")


# -- generators and JSON -------------------------------------------------------------

def _rng(seed: int) -> np.random.Generator:
    if not 0 <= int(seed) < 2 ** 64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.default_rng(int(seed))


def generate_game(n: int, seed: int, m: Optional[int] = None, alpha: float = 0.05,
                  L: float = 1.0) -> MatrixGameInstance:
    if n < 1 or (m is not None and m < 1):
        raise ValueError(f"invalid game size n={n}, m={m}")
    payoff = _rng(seed).standard_normal((n, n if m is None else m))
    return MatrixGameInstance(payoff, L=L, alpha=alpha, seed=seed)


def generate_fisher(m: int, n: int, seed: int, delta: float = 0.5, alpha: float = 0.01,
                    **box) -> FisherMarketInstance:
    if m < 1 or n < 1:
        raise ValueError(f"invalid market size m={m}, n={n}")
    rng = _rng(seed)
    valuations = np.exp(rng.uniform(math.log(0.1), math.log(10.0), (m, n)))
    budgets = rng.uniform(0.5, 2.0, m)
    return FisherMarketInstance(valuations, budgets, delta=delta, alpha=alpha, seed=seed, **box)


def _field(d: dict, key: str, kind, default=None, required=False):
    if key not in d or d[key] is None:
        if required:
            raise ValueError(f"instance field '{key}' is required")
        return default
    try:
        return kind(d[key])
    except (TypeError, ValueError) as exc:
        raise ValueError(f"instance field '{key}': {exc}") from None


_FIELDS = frozenset({"kind", "n", "m", "alpha", "L", "delta", "seed", "payoff", "valuations",
                     "budgets", "mu_lo", "mu_hi", "mu_ref", "lo", "hi"})


def instance_from_dict(d: dict) -> Instance:
    if not isinstance(d, dict):
        raise ValueError("instance JSON must be an object")
    kind = d.get("kind")
    seed = _field(d, "seed", int, 0)
    try:
        if kind == "game":
            n = _field(d, "n", int, required="payoff" not in d)
            kw = dict(L=_field(d, "L", float, 1.0), alpha=_field(d, "alpha", float, 0.05))
            if "payoff" in d:
                return MatrixGameInstance(np.array(d["payoff"], dtype=float), seed=seed, **kw)
            return generate_game(n, seed, m=_field(d, "m", int), **kw)
        if kind == "fisher":
            box = {k: np.array(d[k], dtype=float) for k in ("mu_lo", "mu_hi", "mu_ref") if k in d}
            kw = dict(delta=_field(d, "delta", float, 0.5), alpha=_field(d, "alpha", float, 0.01))
            L = _field(d, "L", float)
            if "valuations" in d or "budgets" in d:
                if not ("valuations" in d and "budgets" in d):
                    raise ValueError("instance field 'budgets'/'valuations': give both or neither")
                return FisherMarketInstance(np.array(d["valuations"], dtype=float),
                                            np.array(d["budgets"], dtype=float),
                                            L=L, seed=seed, **kw, **box)
            inst = generate_fisher(_field(d, "m", int, required=True),
                                   _field(d, "n", int, required=True), seed, **kw, **box)
            if L is not None:
                inst = FisherMarketInstance(inst.valuations, inst.budgets, inst.delta, inst.mu_lo,
                                            inst.mu_hi, inst.mu_ref, inst.alpha, L, seed)
            return inst
        if kind == "quadbox":
            return QuadBoxToy(n=_field(d, "n", int, 1), alpha=_field(d, "alpha", float, 1.0),
                              L=_field(d, "L", float, 1.0),
                              lo=np.array(d.get("lo", -1.0), dtype=float),
                              hi=np.array(d.get("hi", 1.0), dtype=float), seed=seed)
    except ValueError as exc:
        msg = str(exc)
        if "field" not in msg:
            head, _, rest = msg.partition(" ")
            key = head.rstrip(":")
            msg = (f"instance field '{key}': {rest}" if key in _FIELDS
                   else f"instance field: {msg}")
        raise ValueError(msg) from None
    raise ValueError(f"instance field 'kind': expected game|fisher|quadbox, got {kind!r}")


def instance_to_dict(inst: Instance, include_alpha: bool = True) -> dict:
    """Explicit-data form; reloading reproduces the same oracles.

    Without ``include_alpha`` the regularization weight is left to the run
    configuration (the quad-box toy always carries its own).
    """
    seed = 0 if inst.seed is None else int(inst.seed)
    if isinstance(inst, MatrixGameInstance):
        d = {"kind": "game", "n": inst.n, "m": inst.m, "L": inst.L, "seed": seed,
             "payoff": inst.payoff.tolist()}
        if include_alpha:
            d["alpha"] = inst.alpha
        return d
    if isinstance(inst, FisherMarketInstance):
        d = {"kind": "fisher", "n": inst.n, "m": inst.m, "delta": inst.delta, "seed": seed}
        if include_alpha:
            d["alpha"] = inst.alpha
        if inst.L is not None:
            d["L"] = inst.L
        d.update(valuations=inst.valuations.tolist(), budgets=inst.budgets.tolist(),
                 mu_lo=inst.mu_lo.tolist(), mu_hi=inst.mu_hi.tolist(), mu_ref=inst.mu_ref.tolist())
        return d
    if isinstance(inst, QuadBoxToy):
        return {"kind": "quadbox", "n": inst.n, "alpha": inst.alpha, "L": inst.L, "seed": seed,
                "lo": inst.lo.tolist(), "hi": inst.hi.tolist()}
    raise TypeError(f"unknown instance type {type(inst).__name__}")


def write_atomic(path: str, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def instance_json(inst: Instance, include_alpha: bool = True) -> str:
    # json emits floats via repr, which round-trips exactly
    return json.dumps(instance_to_dict(inst, include_alpha), indent=1, sort_keys=True) + "\n"


def save_instance(inst: Instance, path: str, include_alpha: bool = True) -> None:
    write_atomic(path, instance_json(inst, include_alpha))


def load_instance(path: str) -> Instance:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"instance file {path}: invalid JSON ({exc})") from None
    return instance_from_dict(data)


# -- grid reference minimizer --------------------------------------------------------------

@dataclass(frozen=True)
class BruteForceResult:
    point: Vector
    value: float
    error_bound: float
    resolution: float

    def __iter__(self):
        return iter((self.point, self.value))


MAX_GRID_DIM = 3
_MAX_POINTS_PER_AXIS = 201


def _grid_axes(starts: Vector, stops: Vector, step: float) -> "list[np.ndarray]":
    axes = []
    for a, b in zip(starts, stops):
        count = int(math.floor((b - a) / step + 1e-9))
        axes.append(a + step * np.arange(count + 1))
        if b - axes[-1][-1] > 1e-12 * max(1.0, abs(b)):
            axes[-1] = np.append(axes[-1], b)
    return axes


def brute_force_min(problem: ProblemOracles, domain_spec: Optional[DomainSpec] = None,
                    resolution: float = 1e-4, objective: str = "regularized") -> BruteForceResult:
    """Grid search for ``min phi^alpha`` (or the unregularized ``f + h``).

    Simplices are parametrized by their first ``n - 1`` coordinates.  Grids
    finer than ~200 points per axis (~50 in three dimensions) are searched
    coarse to fine: each level refines a window of a few coarse cells around the incumbent on the same
    lattice.  The reported error bound is ``(L_total / 2) resolution^2``,
    valid for the convex smooth objectives used here.
    """
    dom = domain_spec or problem.domain
    if dom is None:
        raise ValueError(f"{problem.name}: no domain description for grid search")
    if dom.dim > MAX_GRID_DIM:
        raise ValueError(f"brute_force_min: dimension {dom.dim} exceeds {MAX_GRID_DIM}")
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    if objective == "regularized":
        evaluate = lambda x: phi_alpha(problem, x)  # noqa: E731
        curvature = problem.L + problem.alpha * problem.composite.w_smoothness
    elif objective == "original":
        evaluate = lambda x: phi_original(problem, x)  # noqa: E731
        curvature = problem.L
    else:
        raise ValueError(f"objective must be 'regularized' or 'original', got {objective!r}")

    if dom.kind == "simplex":
        d = dom.dim - 1
        lo, hi = np.zeros(d), np.ones(d)

        def embed(c):
            return np.append(c, max(0.0, 1.0 - c.sum()))

        def feasible(c):
            return c.sum() <= 1.0 + 1e-12
    elif dom.kind == "box":
        d = dom.dim
        lo, hi = dom.lo, dom.hi
        embed = np.asarray

        def feasible(c):
            return True
    else:
        raise ValueError(f"brute_force_min: unsupported domain kind {dom.kind!r}")

    if d == 0:
        x = embed(np.zeros(0))
        return BruteForceResult(x, evaluate(x), 0.0, resolution)

    def search(starts, stops, step):
        best_c, best_v = None, math.inf
        for c in itertools.product(*_grid_axes(starts, stops, step)):
            c = np.array(c)
            if not feasible(c):
                continue
            val = evaluate(embed(c))
            if val < best_v:
                best_c, best_v = c, val
        return best_c, best_v

    span = float(np.max(hi - lo))
    step = resolution
    per_axis = _MAX_POINTS_PER_AXIS if d <= 2 else 51
    while span / step > per_axis - 1:
        step *= 10.0
    best_c, best_v = search(lo, hi, step)
    window = 5 if d <= 2 else 2
    while step > resolution * (1 + 1e-9):
        coarse = step
        step = max(step / 10.0, resolution)
        # snap the window to the fine lattice anchored at lo
        starts = np.maximum(lo, lo + np.floor((best_c - window * coarse - lo) / step) * step)
        stops = np.minimum(hi, best_c + window * coarse)
        best_c, best_v = search(starts, stops, step)
    x = embed(best_c)
    return BruteForceResult(x, best_v, 0.5 * curvature * resolution ** 2, resolution)
