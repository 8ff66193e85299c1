import csv
import json

import pytest

from certopt.cli import TRACE_HEADER, main


def gen(tmp_path, name, *flags):
    path = tmp_path / name
    assert main(["gen-instance", *flags, "--out", str(path)]) == 0
    return str(path)


@pytest.fixture
def game_json(tmp_path):
    return gen(tmp_path, "game.json", "--kind", "game", "--n", "10", "--seed", "7")


@pytest.fixture
def fisher_json(tmp_path):
    return gen(tmp_path, "fisher.json", "--kind", "fisher", "--m", "3", "--n", "4", "--seed", "7")


@pytest.fixture
def quadbox_json(tmp_path):
    return gen(tmp_path, "quadbox.json", "--kind", "quadbox")


def read_trace(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    assert lines[0].startswith("# algorithm=")
    assert lines[1] == TRACE_HEADER
    return lines[0], list(csv.DictReader(lines[1:]))


def test_run_taa_game(tmp_path, game_json, capsys):
    out = tmp_path / "trace.csv"
    code = main(["run", "--instance", game_json, "--algorithm", "taa", "--epsilon", "1e-3",
                 "--max-iters", "100000", "--out", str(out)])
    assert code == 0
    comment, rows = read_trace(out)
    assert "alpha_policy=from_epsilon" in comment
    iters = [int(r["iter"]) for r in rows]
    assert iters == sorted(iters) and len(set(iters)) == len(iters)
    assert float(rows[-1]["cert_gap"]) <= 5e-4
    assert "status=certified" in capsys.readouterr().out


def test_run_gem_on_fisher_refused(fisher_json, capsys):
    assert main(["run", "--algorithm", "gem", "--instance", fisher_json]) == 1
    assert "instance lacks f* support" in capsys.readouterr().err


def test_run_quadbox_fine_epsilon(tmp_path, quadbox_json):
    out = tmp_path / "q.csv"
    assert main(["run", "--algorithm", "mda", "--instance", quadbox_json, "--epsilon", "1e-6",
                 "--out", str(out)]) == 0
    _, rows = read_trace(out)
    assert float(rows[-1]["cert_gap"]) <= 5e-7


def test_run_fisher_leaves_dual_columns_empty(tmp_path, fisher_json):
    out = tmp_path / "f.csv"
    assert main(["run", "--algorithm", "mda", "--instance", fisher_json, "--epsilon", "1e-1",
                 "--out", str(out)]) == 0
    _, rows = read_trace(out)
    assert all(r["psi"] == "" and r["pd_gap"] == "" and r["cert_gap"] != "" for r in rows)


def test_run_budget_exhausted_exit_code(tmp_path, game_json):
    out = tmp_path / "t.csv"
    assert main(["run", "--algorithm", "mda", "--instance", game_json, "--epsilon", "1e-6",
                 "--max-iters", "5", "--out", str(out)]) == 2


def test_run_traces_byte_identical(tmp_path, game_json):
    outs = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        assert main(["run", "--algorithm", "gem", "--instance", game_json, "--epsilon", "1e-2",
                     "--no-wall-time", "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_run_explicit_alpha_recorded(tmp_path, game_json):
    out = tmp_path / "t.csv"
    assert main(["run", "--algorithm", "mda", "--instance", game_json, "--epsilon", "1e-1",
                 "--alpha", "0.25", "--out", str(out)]) == 0
    comment, _ = read_trace(out)
    assert "alpha_policy=explicit" in comment and "alpha=0.25 " in comment


def test_run_reals_have_17_digits(tmp_path, game_json):
    out = tmp_path / "t.csv"
    main(["run", "--algorithm", "mda", "--instance", game_json, "--epsilon", "1e-1",
          "--out", str(out)])
    _, rows = read_trace(out)
    assert float(repr(float(rows[0]["phi"]))) == float(rows[0]["phi"])
    assert len(rows[0]["phi"].replace(".", "").replace("-", "").lstrip("0")) >= 15


def test_run_bad_instance_names_field(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"kind": "game", "n": 3, "alpha": -2}))
    assert main(["run", "--algorithm", "mda", "--instance", str(bad)]) == 1
    assert "alpha" in capsys.readouterr().err


def test_run_missing_file_and_bad_json(tmp_path):
    assert main(["run", "--algorithm", "mda", "--instance", str(tmp_path / "none.json")]) == 1
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert main(["run", "--algorithm", "mda", "--instance", str(broken)]) == 1


def test_unknown_flag_and_verb_exit_1(game_json):
    assert main(["run", "--algorithm", "mda", "--instance", game_json, "--bogus", "1"]) == 1
    assert main(["frobnicate"]) == 1
    assert main([]) == 1


def test_verify_correspondence(tmp_path, game_json):
    out = tmp_path / "rep.json"
    assert main(["verify", "--suite", "correspondence", "--instance", game_json, "--iters", "100",
                 "--tol", "1e-8", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["suite"] == "correspondence" and rep["overall"] == "pass"
    assert all(set(c) == {"desc", "violation", "tol", "pass"} for c in rep["checks"])


def test_verify_rates(tmp_path, game_json):
    assert main(["verify", "--suite", "rates", "--instance", game_json,
                 "--out", str(tmp_path / "r.json")]) == 0


def test_verify_soundness(tmp_path):
    g2 = gen(tmp_path, "game2x2.json", "--kind", "game", "--n", "2", "--seed", "7")
    assert main(["verify", "--suite", "soundness", "--instance", g2, "--epsilon", "1e-2",
                 "--out", str(tmp_path / "s.json")]) == 0


def test_verify_identities(tmp_path, quadbox_json):
    assert main(["verify", "--suite", "identities", "--instance", quadbox_json,
                 "--out", str(tmp_path / "i.json")]) == 0


def test_verify_unknown_suite(game_json):
    assert main(["verify", "--suite", "nonsense", "--instance", game_json]) == 1


def test_compare_csv(tmp_path, game_json, capsys):
    out = tmp_path / "cmp.csv"
    assert main(["compare", "--instance", game_json, "--algorithms", "mda,taa",
                 "--epsilons", "1e-1,3e-2", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.read_text().splitlines()))
    assert list(rows[0]) == ["epsilon", "alpha", "mda", "taa"]
    assert [float(r["epsilon"]) for r in rows] == [1e-1, 3e-2]
    assert all(int(r["taa"]) <= int(r["mda"]) for r in rows)
    assert "slope mda=" in capsys.readouterr().err


def test_compare_three_algorithms(tmp_path, game_json):
    out = tmp_path / "cmp.csv"
    assert main(["compare", "--instance", game_json, "--algorithms", "mda,taa,gem",
                 "--epsilons", "1e-1", "--out", str(out)]) == 0
    assert out.read_text().splitlines()[0] == "epsilon,alpha,mda,taa,gem"


def test_compare_needs_two_algorithms(game_json):
    assert main(["compare", "--instance", game_json, "--algorithms", "mda"]) == 1
    assert main(["compare", "--instance", game_json, "--algorithms", "mda,nope"]) == 1


def test_compare_budget_exhausted(tmp_path, game_json):
    assert main(["compare", "--instance", game_json, "--algorithms", "mda,taa",
                 "--epsilons", "1e-3", "--max-iters", "10",
                 "--out", str(tmp_path / "c.csv")]) == 2


@pytest.mark.parametrize("flags", [
    ("--kind", "game", "--n", "10", "--seed", "7"),
    ("--kind", "fisher", "--m", "3", "--n", "4", "--seed", "7"),
])
def test_gen_instance_byte_identical(tmp_path, flags):
    a = gen(tmp_path, "a.json", *flags)
    b = gen(tmp_path, "b.json", *flags)
    with open(a, "rb") as fa, open(b, "rb") as fb:
        assert fa.read() == fb.read()


def test_gen_instance_stdout_and_alpha(capsys):
    assert main(["gen-instance", "--kind", "game", "--n", "3", "--seed", "1"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["kind"] == "game" and "alpha" not in d
    assert main(["gen-instance", "--kind", "game", "--n", "3", "--alpha", "0.2"]) == 0
    assert json.loads(capsys.readouterr().out)["alpha"] == 0.2


def test_gen_instance_invalid_sizes():
    assert main(["gen-instance", "--kind", "game", "--n", "0"]) == 1
    assert main(["gen-instance", "--kind", "game"]) == 1
    assert main(["gen-instance", "--kind", "fisher", "--n", "3"]) == 1
    assert main(["gen-instance", "--kind", "game", "--n", "3", "--seed", "-1"]) == 1
