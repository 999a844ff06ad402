import json

import pytest

from qlo.cli import EXIT_CAP, EXIT_FAIL, EXIT_OK, EXIT_PARSE, EXIT_SCHEMA, main
from qlo.experiments import RUNNERS, SCHEMA_VERSION, run, verify_artifact
from qlo.io import dumps

FAST = {
    "dist": {},
    "charfn": {"t_range": [0.0, 0.5, 11]},
    "esseen": {},
    "decoupling": {"instances": 5},
    "eps-indep": {},
    "nondegen": {},
    "lowrank": {"generator": {"n": 20}},
    "closure-set": {},
    "phase-sweep": {"points": 90},
    "ramsey": {},
    "strong-tuples": {},
    "inverse-check": {"samples": 20000},
}


def _run(tmp_path, cmd, cfg=None, *extra):
    args = [cmd, "--out-dir", str(tmp_path)]
    if cfg is not None:
        p = tmp_path / f"{cmd}.config.json"
        p.write_text(json.dumps(cfg))
        args += ["--config", str(p)]
    return main(args + list(extra))


def test_every_subcommand_is_wired():
    assert set(FAST) == set(RUNNERS)


@pytest.mark.parametrize("cmd", sorted(FAST))
def test_subcommand_passes_and_writes_report(tmp_path, cmd):
    assert _run(tmp_path, cmd, FAST[cmd], "--seed", "3") == EXIT_OK
    rep = json.loads((tmp_path / f"{cmd}.json").read_text())
    assert rep["schema_version"] == SCHEMA_VERSION and rep["passed"]
    assert rep["config"]["seed"] == 3
    assert all(c["invariant"] for c in rep["checks"])
    assert (tmp_path / f"{cmd}.csv").read_text().count("\n") >= 2


def test_dist_report_values(tmp_path):
    assert _run(tmp_path, "dist", {"generator": {"kind": "square_of_sum", "n": 10}}) == EXIT_OK
    rep = json.loads((tmp_path / "dist.json").read_text())
    assert rep["results"]["point_probabilities"]["0"] == "63/256"


def test_check_failure_exit_code(tmp_path):
    cfg = {"matrix": [["1", "0"], ["0", "1"]], "epsilon": "2/5", "expect": "refuted"}
    assert _run(tmp_path, "eps-indep", cfg) == EXIT_FAIL


def test_schema_errors(tmp_path):
    assert _run(tmp_path, "dist", {"bogus": 1}) == EXIT_SCHEMA
    assert _run(tmp_path, "dist", {"samples": "many"}) == EXIT_SCHEMA
    assert _run(tmp_path, "dist", {"schema": SCHEMA_VERSION + 1}) == EXIT_SCHEMA
    assert _run(tmp_path, "dist", [1, 2]) == EXIT_SCHEMA


def test_cap_exit_code(tmp_path, monkeypatch):
    # the cap bounds the number of sign variables n (default instance has n = 10)
    assert _run(tmp_path, "dist", None, "--cap", "10") == EXIT_OK
    assert _run(tmp_path, "dist", None, "--cap", "9") == EXIT_CAP
    monkeypatch.setenv("QLO_CAP", "9")
    assert _run(tmp_path, "dist") == EXIT_CAP
    assert _run(tmp_path, "closure-set", {"r": 3, "guard": 100}) == EXIT_CAP


def test_parse_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["dist", "--config", str(bad), "--out-dir", str(tmp_path)]) == EXIT_PARSE
    assert main(["dist", "--config", str(tmp_path / "missing.json")]) == EXIT_PARSE
    assert main(["verify-witness", str(bad)]) == EXIT_PARSE
    (tmp_path / "odd.json").write_text('{"kind": "mystery"}')
    assert main(["verify-witness", str(tmp_path / "odd.json")]) == EXIT_PARSE
    assert main(["verify-trace", str(tmp_path / "odd.json")]) == EXIT_PARSE


@pytest.mark.parametrize("cmd,cfg", [
    ("dist", {"generator": {"kind": "random", "n": 12}}),
    ("ramsey", {"graph": {"kind": "gnp", "n": 20}, "k": 10, "mode": "mc", "samples": 20000}),
    ("decoupling", {"instances": 4}),
    ("lowrank", {"generator": {"n": 20}}),
])
def test_csv_byte_identical_across_reruns_and_workers(tmp_path, cmd, cfg):
    outs = []
    for w in ("1", "3", "1"):
        d = tmp_path / w / str(len(outs))
        main([cmd, "--out-dir", str(d), "--seed", "11", "--workers", w] +
             ["--config", str(_write(tmp_path, cfg))])
        outs.append((d / f"{cmd}.csv").read_bytes())
    assert outs[0] == outs[1] == outs[2]


def _write(tmp_path, cfg):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return p


def test_verify_witness_and_tamper(tmp_path, capsys):
    cfg = {"matrix": [["1"] + ["0"] * 9, ["0", "1"] + ["0"] * 8], "epsilon": "1/2"}
    assert _run(tmp_path, "eps-indep", cfg) == EXIT_OK
    w = tmp_path / "eps-indep.witness.json"
    assert main(["verify-witness", str(w)]) == EXIT_OK
    obj = json.loads(w.read_text())
    obj["kernel"] = ["1", "1"]
    w.write_text(json.dumps(obj))
    assert main(["verify-witness", str(w)]) == EXIT_FAIL
    assert "fail" in capsys.readouterr().out


def test_verify_certificate_artifact(tmp_path):
    cfg = {"matrix": [["1", "0"], ["0", "1"]], "epsilon": "2/5"}
    assert _run(tmp_path, "eps-indep", cfg) == EXIT_OK
    assert main(["verify-witness", str(tmp_path / "eps-indep.witness.json")]) == EXIT_OK


def test_verify_trace_and_tamper(tmp_path):
    assert _run(tmp_path, "lowrank", {"generator": {"n": 30, "rate": 0.03}}) == EXIT_OK
    t = tmp_path / "lowrank.trace.json"
    assert main(["verify-trace", str(t)]) == EXIT_OK
    obj = json.loads(t.read_text())
    obj["H"][0][1] = "7/3"
    obj["H"][1][0] = "7/3"
    t.write_text(json.dumps(obj))
    assert main(["verify-trace", str(t)]) == EXIT_FAIL


def test_emitted_artifacts_round_trip_fuzz():
    kinds = set()
    for seed in range(200):
        if seed % 20 == 0:
            cfg = {"seed": seed, "generator": {"n": 16, "rate": 0.03, "rank": 1 + seed % 40 // 20}}
            rep, _, art = run("lowrank", cfg)
        elif seed % 3 == 0:
            rep, _, art = run("nondegen", {"seed": seed, "delta": 0.45, "delta_refute": 0.45,
                                           "generator": {"r": 2, "n": 12}})
        else:
            q = 1 + seed % 3
            rep, _, art = run("eps-indep", {"seed": seed, "epsilon": "1/4", "generator": {"q": q, "n": 8}})
        for obj in art.values():
            ok, fails = verify_artifact(json.loads(dumps(obj)))
            assert ok, (seed, fails)
            kinds.add(obj["kind"])
    assert {"dependence", "independence-certificate", "pipeline-trace"} <= kinds
