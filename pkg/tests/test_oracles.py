import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from certopt.instances import QuadBoxToy, fisher_oracles, generate_fisher, quadbox_oracles
from certopt.oracles import (
    INFEASIBLE,
    DomainError,
    UnsupportedError,
    evaluate_phi,
    f_conj,
    h_alpha_conj_at,
    pd_gap,
    phi_alpha,
    psi_alpha,
)

LOG2 = math.log(2.0)


def test_phi_game_uniform(game_eye):
    # lse(0.5, 0.5) = 0.5 + log 2 and w vanishes at the uniform point
    assert phi_alpha(game_eye, np.array([0.5, 0.5])) == pytest.approx(0.5 + LOG2, abs=1e-14)


def test_phi_quadbox_values(quadbox):
    assert phi_alpha(quadbox, np.array([0.0])) == 0.0
    assert phi_alpha(quadbox, np.array([0.5])) == pytest.approx(0.25, abs=1e-15)


def test_phi_outside_domain_raises(quadbox, game_eye):
    with pytest.raises(DomainError):
        phi_alpha(quadbox, np.array([1.5]))
    with pytest.raises(DomainError):
        phi_alpha(game_eye, np.array([0.7, 0.7]))


def test_phi_sentinel_with_flag(quadbox):
    ev = evaluate_phi(quadbox, np.array([2.0]))
    assert ev.value == INFEASIBLE and not ev.feasible
    ev = evaluate_phi(quadbox, np.array([0.5]))
    assert ev.feasible and ev.value == pytest.approx(0.25)


def test_phi_tolerates_roundoff_at_boundary(quadbox):
    assert phi_alpha(quadbox, np.array([1.0 + 5e-10])) == pytest.approx(1.0)


def test_psi_game_uniform(game_eye):
    assert psi_alpha(game_eye, np.array([0.5, 0.5])) == pytest.approx(-0.5 - LOG2, abs=1e-14)


def test_psi_quadbox_zero(quadbox):
    assert psi_alpha(quadbox, np.array([0.0])) == 0.0


def test_psi_matches_grid_over_simplex(game_eye):
    # (h^a)*(-z) = -min_x <z, x> + h^a(x), checked by a dense grid on the simplex
    z = np.array([0.3, 0.7])
    t = np.linspace(0.0, 1.0, 100_001)
    xs = np.stack([t, 1.0 - t], axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = np.where(xs > 0, xs * np.log(xs), 0.0).sum(axis=1)
    grid_min = np.min(xs @ z + ent + LOG2)
    expected = -grid_min + (0.3 * math.log(0.3) + 0.7 * math.log(0.7))
    assert psi_alpha(game_eye, z) == pytest.approx(expected, abs=1e-8)


def test_pd_gap_examples(game_eye, quadbox):
    u = np.array([0.5, 0.5])
    assert pd_gap(game_eye, u, u) == pytest.approx(0.0, abs=1e-14)
    assert pd_gap(quadbox, np.array([0.0]), np.array([0.0])) == 0.0
    assert pd_gap(quadbox, np.array([0.5]), np.array([0.0])) == pytest.approx(0.25)


def test_psi_outside_dual_domain(game_eye):
    with pytest.raises(DomainError):
        psi_alpha(game_eye, np.array([0.9, 0.9]))


def test_fisher_has_no_conjugate():
    p = fisher_oracles(generate_fisher(2, 3, 1))
    assert not p.has_f_conj
    with pytest.raises(UnsupportedError, match="f\\* support"):
        psi_alpha(p, np.zeros(3))
    with pytest.raises(UnsupportedError):
        f_conj(p, np.zeros(3))


def test_h_alpha_conj_is_negated_glmo(game10):
    rng = np.random.default_rng(3)
    for _ in range(20):
        z = rng.dirichlet(np.ones(10))
        expected = game10.conjugate.h_alpha_conj(game10.lift(z))
        assert h_alpha_conj_at(game10, z) == pytest.approx(expected, abs=1e-12)


def test_problem_is_immutable(quadbox):
    with pytest.raises(AttributeError):
        quadbox.name = "other"


def test_with_alpha_rebuilds(quadbox):
    q2 = quadbox.with_alpha(0.5)
    assert q2.alpha == 0.5 and quadbox.alpha == 1.0
    assert phi_alpha(q2, np.array([0.5])) == pytest.approx(0.125 + 0.0625)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_weak_duality_game(game10, seed):
    rng = np.random.default_rng(seed)
    x = rng.dirichlet(np.ones(10))
    z = rng.dirichlet(np.ones(10))
    assert pd_gap(game10, x, z) >= -1e-9


@settings(max_examples=100, deadline=None)
@given(st.floats(-1, 1), st.floats(-5, 5))
def test_weak_duality_quadbox(x, z):
    quadbox = quadbox_oracles(QuadBoxToy())
    assert pd_gap(quadbox, np.array([x]), np.array([z])) >= -1e-9
