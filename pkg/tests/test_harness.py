import json
import math

import numpy as np
import pytest

from certopt import harness
from certopt.harness import (
    Algorithm,
    EnvelopeTrace,
    RunConfig,
    Status,
    VerificationReport,
    check_correspondence,
    check_correspondence_one_avg,
    check_correspondence_three_avg,
    check_correspondence_two_avg,
    check_rates,
    check_soundness,
    run,
)
from certopt.instances import MatrixGameInstance, game_oracles
from certopt.oracles import UnsupportedError


# -- run ---------------------------------------------------------------------------------

def test_run_quadbox_mda_halving(quadbox):
    # M = 1/2 on [-1, 1], so epsilon = 1 gives alpha = 1 and contraction 1/2
    eps = 1.0
    res = run(quadbox, RunConfig(Algorithm.MDA, eps))
    assert res.alpha == 1.0 and res.status is Status.CERTIFIED
    t0 = res.traces[0].cert_gap
    assert res.iterations <= math.ceil(math.log(2 * t0 / eps) / math.log(2))
    assert res.iterations <= 60


def test_run_quadbox_mda_fine_epsilon(quadbox):
    res = run(quadbox, RunConfig(Algorithm.MDA, 1e-6, alpha=1.0))
    assert res.status is Status.CERTIFIED and res.iterations <= 60
    assert res.final_gap <= 5e-7


def test_run_singleton_game():
    p = game_oracles(MatrixGameInstance(np.array([[0.4, -1.0]]), alpha=0.1))
    for a in Algorithm:
        res = run(p, RunConfig(a, 1e-3, alpha=0.1))
        assert res.status in (Status.CERTIFIED, Status.PD_CONVERGED)
        assert res.iterations <= 1


def test_run_agg_gcg_never_certified(fisher2):
    res = run(fisher2, RunConfig(Algorithm.AGG_GCG_PRIMAL, 1e-2, max_iters=20_000))
    assert res.status in (Status.PD_CONVERGED, Status.BUDGET_EXHAUSTED)
    assert all(t.psi_at_dual is None and t.pd_gap is None for t in res.traces)


def test_run_dual_algorithm_on_fisher_refused(fisher2):
    for a in (Algorithm.GCG, Algorithm.AGG_GCG_DUAL, Algorithm.GEM):
        with pytest.raises(UnsupportedError, match="lacks f\\* support"):
            run(fisher2, RunConfig(a, 1e-2))


def test_run_budget_exhausted(game10):
    res = run(game10, RunConfig(Algorithm.MDA, 1e-6, max_iters=10))
    assert res.status is Status.BUDGET_EXHAUSTED and res.iterations == 10
    assert res.traces[-1].iter == 10


def test_run_record_every_keeps_terminal_row(game10):
    res = run(game10, RunConfig(Algorithm.TAA, 1e-2, record_every=7))
    iters = [t.iter for t in res.traces]
    assert iters[:-1] == list(range(0, iters[-1], 7))[: len(iters) - 1]
    assert iters[-1] == res.iterations


@pytest.mark.parametrize("a", list(Algorithm))
def test_trace_certificate_dominates_pd_gap(game10, a):
    res = run(game10, RunConfig(a, 1e-2, max_iters=2000))
    for t in res.traces:
        if t.cert_gap is not None and t.pd_gap is not None:
            assert t.cert_gap >= t.pd_gap - 1e-9


def test_run_is_deterministic(game10):
    cfg = RunConfig(Algorithm.GEM, 1e-3)
    a, b = run(game10, cfg), run(game10, cfg)
    strip = lambda r: [(t.iter, t.phi_at_test, t.psi_at_dual, t.cert_gap, t.pd_gap)  # noqa: E731
                       for t in r.traces]
    assert strip(a) == strip(b)


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig(Algorithm.MDA, 0.0)
    with pytest.raises(ValueError):
        RunConfig(Algorithm.MDA, 1e-3, alpha=-1.0)
    with pytest.raises(ValueError):
        RunConfig("nope", 1e-3)
    assert RunConfig("mda", 1e-3).alpha_policy == "from_epsilon"
    assert RunConfig("mda", 1e-3, alpha=0.2).alpha_policy == "explicit"


def test_alpha_from_epsilon(game10, quadbox):
    assert harness.alpha_from_epsilon(game10, 1e-2) == pytest.approx(1e-2 / (2 * math.log(10)))
    assert harness.alpha_from_epsilon(quadbox, 0.3) == pytest.approx(0.3)


# -- correspondences -------------------------------------------------------------------

def test_correspondence_game_identity(game_eye):
    assert check_correspondence_one_avg(game_eye, k_max=100).overall
    assert check_correspondence_two_avg(game_eye, k_max=100).overall
    assert check_correspondence_three_avg(game_eye, k_max=100).overall


def test_correspondence_quadbox(quadbox):
    assert check_correspondence(quadbox, k_max=100).overall


def test_correspondence_game10(game10):
    rep = check_correspondence(game10, k_max=200)
    assert rep.overall, rep.summary()
    assert max(c.violation for c in rep.checks) <= 1e-12


def test_one_avg_negative_control(game10):
    rep = check_correspondence_one_avg(game10, k_max=50, z0_perturbation=1e-3)
    assert not rep.overall
    assert max(c.violation for c in rep.checks) >= 1e-4


def test_two_avg_negative_control(game10):
    rep = check_correspondence_two_avg(game10, z0_equal_s0=False, k_max=50)
    assert not rep.overall
    assert max(c.violation for c in rep.checks) >= 1e-4


def test_three_avg_negative_control(game10):
    lam = harness.alg.schedule_lambda(game10.alpha, game10.L)
    rep = check_correspondence_three_avg(game10, k_max=50, lam=1.5 * lam)
    assert not rep.overall
    assert max(c.violation for c in rep.checks) >= 1e-4


def test_three_avg_symmetric_saddle_fixed(game_eye):
    rep = check_correspondence_three_avg(game_eye, np.array([0.5, 0.5]), k_max=20)
    assert rep.overall and max(c.violation for c in rep.checks) <= 1e-15


def test_three_avg_needs_prox(fisher2):
    with pytest.raises(UnsupportedError):
        check_correspondence_three_avg(fisher2, k_max=5)


# -- rates --------------------------------------------------------------------------------

def test_mda_quadbox_envelope_factor_half(quadbox):
    env = harness.mda_envelope(quadbox, 30)
    ratios = env.bounds[1:] / env.bounds[:-1]
    np.testing.assert_allclose(ratios, 0.5, rtol=1e-15)
    assert env.slack_violation() <= harness.RATE_TOL


@pytest.mark.parametrize("name", ["quadbox", "game10"])
def test_rates_all_supported(name, request):
    p = request.getfixturevalue(name)
    rep = harness.check_all_rates(p, k_max=200)
    assert rep.overall, rep.summary()
    assert {c.desc.split()[0] for c in rep.checks} >= {"mda", "taa", "agg_gcg_primal"}


def test_rates_fisher_primal_only(fisher2):
    algos = harness.supported_algorithms(fisher2)
    assert algos == [Algorithm.MDA, Algorithm.TAA]
    assert harness.check_all_rates(fisher2, k_max=100).overall


def test_envelope_trace_violation_measures():
    env = EnvelopeTrace(np.array([1.0, 0.6, 0.2]), np.array([1.0, 0.5, 0.25]))
    assert env.relative_violation() == pytest.approx(0.2)
    assert env.slack_violation() == pytest.approx(0.1 / 1.5)


def test_rate_envelope_negative_control(game10):
    # an envelope contracting twice as fast as the method must be violated
    env = harness.mda_envelope(game10, 50)
    fast = EnvelopeTrace(env.values, env.values[0] * (env.bounds / env.values[0]) ** 2)
    assert fast.slack_violation() > harness.RATE_TOL


# -- soundness -----------------------------------------------------------------------------

def test_soundness_quadbox(quadbox):
    rep = check_soundness(quadbox, 1e-3, resolution=1e-4)
    assert rep.overall, rep.summary()


def test_soundness_game2(game2):
    rep = check_soundness(game2, 1e-2, resolution=1e-4)
    assert rep.overall, rep.summary()


def test_soundness_reports_missing_certificate(game2):
    rep = check_soundness(game2, 1e-3, resolution=1e-2, max_iters=3)
    assert not rep.overall
    assert all(math.isinf(c.violation) for c in rep.checks)


# -- identities ---------------------------------------------------------------------------

def test_identities_quadbox(quadbox):
    rep = harness.check_identities(quadbox, samples=30)
    assert rep.overall, rep.summary()


def test_wolfe_identities_game(game10):
    assert harness.check_wolfe_identities(game10, k_max=100).overall


def test_gem_scalars_report():
    assert harness.check_gem_scalars(0.05, 1.0, k_max=1000).overall
    assert harness.check_gem_scalars(1.0, 1.0, k_max=1000).overall


# -- reports, sweeps and parallelism --------------------------------------------------------

def test_report_json_shape():
    rep = VerificationReport("demo")
    rep.add("ok", 0.0, 1e-8)
    rep.add("bad", 1.0, 1e-8)
    d = json.loads(rep.to_json())
    assert d == {"suite": "demo", "overall": "fail",
                 "checks": [{"desc": "ok", "violation": 0.0, "tol": 1e-8, "pass": True},
                            {"desc": "bad", "violation": 1.0, "tol": 1e-8, "pass": False}]}
    assert not rep.overall


def test_report_nan_violation_fails():
    rep = VerificationReport("demo")
    rep.add("nan", math.nan, 1.0)
    assert not rep.overall


def test_iterations_to_certificate_budget(game10):
    counts = harness.iterations_to_certificate(game10, Algorithm.MDA, [1e-1, 1e-3], max_iters=50)
    assert counts[1] == -1


def test_loglog_slope():
    assert harness.loglog_slope([1e-1, 1e-2, 1e-3], [10, 100, 1000]) == pytest.approx(1.0)
    assert harness.loglog_slope([1e-2, 1e-4], [10, 100]) == pytest.approx(0.5)


def test_thread_cap_env(monkeypatch):
    monkeypatch.setenv("CERTOPT_THREADS", "3")
    assert harness.thread_cap() == 3
    monkeypatch.setenv("CERTOPT_THREADS", "0")
    assert harness.thread_cap() == 1
    monkeypatch.setenv("CERTOPT_THREADS", "many")
    with pytest.raises(ValueError):
        harness.thread_cap()


def test_parallel_results_independent_of_threads(game10, monkeypatch):
    eps = [1e-1, 3e-2, 1e-2]
    monkeypatch.setenv("CERTOPT_THREADS", "1")
    serial = harness.iterations_to_certificate(game10, Algorithm.TAA, eps)
    monkeypatch.setenv("CERTOPT_THREADS", "4")
    parallel = harness.iterations_to_certificate(game10, Algorithm.TAA, eps)
    assert serial == parallel
    monkeypatch.setenv("CERTOPT_THREADS", "4")
    r4 = harness.check_all_rates(game10, k_max=50).to_json()
    monkeypatch.setenv("CERTOPT_THREADS", "1")
    assert harness.check_all_rates(game10, k_max=50).to_json() == r4
