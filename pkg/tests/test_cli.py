import json
import subprocess
import sys
from pathlib import Path

import pytest

from shapsrc.cli import main
from shapsrc.synthetic import write_problem

MOCK = str(Path(__file__).with_name("mock_scorer.py"))


def _toml(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


def _run(capsys, *argv):
    code = main(list(map(str, argv)))
    out, err = capsys.readouterr()
    return code, out, err


GLOVE = """seed = 3
[problem]
game = "glove"
[engine]
nepoch = 400
epsilon = 0.0
[output]
dir = "out"
"""


def test_value_report(tmp_path, capsys):
    cfg = _toml(tmp_path / "g.toml", GLOVE)
    code, out, _ = _run(capsys, "value", "--config", cfg)
    assert code == 0
    report = json.loads((tmp_path / "out" / "value_report.json").read_text())
    assert report["schema_version"] == 1 and report["seed"] == 3
    assert report["epochs_run"] == 400 and len(report["config_hash"]) == 64
    assert report["kernel_backend"] in ("cython", "python")
    assert abs(sum(report["values"][0]) - 1.0) < 1e-9
    assert json.loads(out)["values"] == report["values"]
    assert (tmp_path / "out" / "values.csv").read_text().startswith("target,source,value\n")
    assert len((tmp_path / "out" / "history.csv").read_text().splitlines()) == 1 + 400 * 3


def test_seed_override(tmp_path, capsys):
    cfg = _toml(tmp_path / "g.toml", GLOVE)
    _run(capsys, "value", "--config", cfg, "--seed", 11, "--out", tmp_path / "o")
    assert json.loads((tmp_path / "o" / "value_report.json").read_text())["seed"] == 11


def test_exact_and_baselines(tmp_path, capsys):
    cfg = _toml(tmp_path / "g.toml", GLOVE)
    assert _run(capsys, "exact", "--config", cfg)[0] == 0
    exact = json.loads((tmp_path / "out" / "exact_report.json").read_text())
    assert exact["values"][0] == pytest.approx([2 / 3, 1 / 6, 1 / 6])
    assert _run(capsys, "baselines", "--config", cfg)[0] == 0
    base = json.loads((tmp_path / "out" / "baselines_report.json").read_text())
    assert base["baseline_single"] == [[0.0, 0.0, 0.0]]
    assert base["baseline_loo"] == [[1.0, 0.0, 0.0]]
    assert base["greedy_dfs"] == {"t0": [0, 1, 2]}


def test_exact_refuses_twenty_sources(tmp_path, capsys):
    cfg = _toml(tmp_path / "big.toml", "[problem]\ngame = \"additive\"\nweights = [%s]\n"
                % ", ".join(["0.05"] * 20))
    code, _, err = _run(capsys, "exact", "--config", cfg)
    assert code == 2 and "shapsrc value" in err and "2**20" in err


def test_missing_corpus_exit_2(tmp_path, capsys):
    cfg = _toml(tmp_path / "c.toml", '[[sources]]\nname = "a"\npath = "nope.jsonl"\n'
                '[[targets]]\nname = "t"\npath = "t.jsonl"\n')
    code, _, err = _run(capsys, "value", "--config", cfg)
    assert code == 2 and "nope.jsonl" in err


@pytest.mark.parametrize("text,needle", [
    ("[engine]\nnepoch = 10\n\n[bogus]\nx = 1\n", "c.toml:4"),
    ('[problem]\ngame = "glove"\n[engine]\nnepoch = "ten"\n', "c.toml:4"),
    ('[problem]\ngame = "glove"\n[engine]\nrho = "Sometimes"\n', "rho must be one of"),
    ("[engine\n", "invalid TOML"),
])
def test_config_errors_exit_2(tmp_path, capsys, text, needle):
    cfg = _toml(tmp_path / "c.toml", text)
    code, _, err = _run(capsys, "value", "--config", cfg)
    assert code == 2 and needle in err


def test_resume_reuses_scores(tmp_path, capsys):
    cfg = _toml(tmp_path / "r.toml", '[problem]\ngame = "random"\nm = 6\ngame_seed = 2\n'
                "[engine]\nnepoch = 60\nepsilon = 0.0\n")
    cache = tmp_path / "cache.jsonl"
    _run(capsys, "value", "--config", cfg, "--cache", cache, "--out", tmp_path / "a")
    first = json.loads((tmp_path / "a" / "value_report.json").read_text())
    assert first["cache_misses"] > 0
    _run(capsys, "value", "--config", cfg, "--cache", cache, "--resume", "--out", tmp_path / "b")
    second = json.loads((tmp_path / "b" / "value_report.json").read_text())
    assert second["cache_hits"] > 0 and second["cache_misses"] == 0
    assert second["values"] == first["values"]
    # a different seed is a different problem fingerprint: the cache is refused
    code, _, err = _run(capsys, "value", "--config", cfg, "--seed", 5, "--cache", cache, "--resume",
                        "--out", tmp_path / "c")
    assert code == 2 and "different problem" in err


def test_workers_byte_identical(tmp_path, capsys):
    cfg = _toml(tmp_path / "w.toml", '[problem]\ngame = "random"\nm = 7\nn_targets = 2\n'
                "[engine]\nnepoch = 80\ntolerance = 0.02\n")
    _run(capsys, "value", "--config", cfg, "--workers", 1, "--out", tmp_path / "one")
    _run(capsys, "value", "--config", cfg, "--workers", 8, "--out", tmp_path / "eight")
    assert (tmp_path / "one" / "values.csv").read_bytes() == (tmp_path / "eight" / "values.csv").read_bytes()


@pytest.fixture(scope="module")
def noisy_problem(tmp_path_factory):
    return write_problem(tmp_path_factory.mktemp("noisy"), seed=0, nepoch=40)


def test_select_end_to_end(noisy_problem, tmp_path, capsys):
    code, out, _ = _run(capsys, "select", "--config", noisy_problem, "--out", tmp_path)
    assert code == 0
    report = json.loads((tmp_path / "select_report.json").read_text())
    assert report["selection"]["chosen"] and "retrain" in report
    assert report["chosen_names"] == json.loads(out)["chosen_names"]


def test_select_reads_value_report(noisy_problem, tmp_path, capsys):
    _run(capsys, "value", "--config", noisy_problem, "--out", tmp_path)
    code, _, _ = _run(capsys, "select", "--config", noisy_problem, "--out", tmp_path,
                      "--values", tmp_path / "value_report.json")
    report = json.loads((tmp_path / "select_report.json").read_text())
    value = json.loads((tmp_path / "value_report.json").read_text())
    assert code == 0 and report["values"] == value["values"][0]


def test_external_scorer_matches_builtin(tmp_path, capsys):
    d = write_problem(tmp_path / "p", seed=1, nepoch=10).parent
    base = (f"seed = 1\n[engine]\nnepoch = 10\nsample_rate = 0.5\n"
            + "".join(f'[[sources]]\nname = "src{j}"\npath = "{d}/src{j}.jsonl"\n' for j in range(6))
            + f'[[targets]]\nname = "dev"\npath = "{d}/dev.jsonl"\n')
    srcs = [f"--source=src{j}={d}/src{j}.jsonl" for j in range(6)]
    cmd = json.dumps([sys.executable, "-m", "shapsrc.scorer", *srcs, f"--target=dev={d}/dev.jsonl"])
    builtin = _toml(tmp_path / "b.toml", base + '[oracle]\nkind = "naive-count"\n')
    external = _toml(tmp_path / "e.toml", base + f'[oracle]\nkind = "external"\ncommand = {cmd}\n')
    _run(capsys, "value", "--config", builtin, "--out", tmp_path / "b")
    assert _run(capsys, "value", "--config", external, "--workers", 2, "--out", tmp_path / "e")[0] == 0
    vb = json.loads((tmp_path / "b" / "value_report.json").read_text())
    ve = json.loads((tmp_path / "e" / "value_report.json").read_text())
    assert vb["values"] == ve["values"] and vb["rho"] == ve["rho"]


def test_oracle_failure_exit_3(tmp_path, capsys):
    cmd = json.dumps([sys.executable, MOCK, "short"])
    cfg = _toml(tmp_path / "x.toml", f'[oracle]\nkind = "external"\ncommand = {cmd}\n'
                '[[sources]]\nname = "a"\nsize = 5\n[[targets]]\nname = "t1"\n[[targets]]\nname = "t2"\n')
    code, _, err = _run(capsys, "value", "--config", cfg)
    assert code == 3 and "partial" in err and "payload" in err


RANK = """seed = 0
[problem]
game = "feature-linear"
sources = ["a", "b", "c", "d"]
target = "e"
coef = [1.0, 0.5]
[engine]
nepoch = 20
[rank]
features = "f.csv"
lambda = 0.1
lambdas = [0.01, 1.0]
[output]
dir = "out"
"""


def _features(path, skip=None):
    rows = ["target,source,size,overlap"]
    for i, t in enumerate("abcde"):
        for j, s in enumerate("abcde"):
            if s != t and (t, s) != skip:
                rows.append(f"{t},{s},{(i * 7 + j * 3) % 5 / 5},{(i + 2 * j) % 7 / 7}")
    path.write_text("\n".join(rows) + "\n")


def test_rank_end_to_end(tmp_path, capsys):
    _features(tmp_path / "f.csv")
    cfg = _toml(tmp_path / "r.toml", RANK)
    assert _run(capsys, "rank", "--config", cfg)[0] == 0
    report = json.loads((tmp_path / "out" / "rank_report.json").read_text())
    assert len(report["dataset"]) == 12
    assert report["predicted_topk"] == report["seal_shap_topk"]
    assert set(report["lambda_sweep"]) == {"0.01", "1.0"}
    assert (tmp_path / "out" / "ranker_model.json").exists()


def test_rank_missing_feature_row(tmp_path, capsys):
    _features(tmp_path / "f.csv", skip=("c", "a"))
    code, _, err = _run(capsys, "rank", "--config", _toml(tmp_path / "r.toml", RANK))
    assert code == 2 and "target='c', source='a'" in err


def test_console_entry_point(tmp_path):
    cfg = _toml(tmp_path / "g.toml", GLOVE)
    proc = subprocess.run([sys.executable, "-m", "shapsrc", "exact", "--config", str(cfg)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["command"] == "exact"
