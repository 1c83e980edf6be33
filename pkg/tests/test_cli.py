import json

import pytest

from datri import cli, ledger
from datri.cli import run


def _json(capsys, argv):
    code = run(argv + ["--format", "json"])
    return code, json.loads(capsys.readouterr().out)


def _verdicts(report):
    return {c["name"]: c["verdict"] for c in report["conditions"]}


class TestExamples:
    def test_ledger_flat(self, capsys):
        code, rep = _json(capsys, ["check", "ledger", "flat(3)", "--samples", "4"])
        assert code == 0
        assert {"ledger.L3", "ledger.L5", "ledger.L7"} <= set(_verdicts(rep))
        assert set(_verdicts(rep).values()) == {"pass"}

    def test_kdatri_dr7_fails(self, capsys):
        code, rep = _json(capsys, ["check", "kdatri", "dr7_nonsymmetric", "--k", "3", "--samples", "4"])
        assert code == 1
        v = _verdicts(rep)
        assert v["kdatri.defect_sigma3"] == "fail"
        assert v["kdatri.t7_identity_sigma3"] == "pass"
        assert any("gamma_12" in " ".join(c["notes"]) for c in rep["conditions"] if c["name"] == "kdatri.defect_sigma3")

    def test_flow_rhyp(self, capsys):
        code, rep = _json(capsys, ["check", "flow", "rhyp(4)", "--powers", "1,2,3", "--combo", "--samples", "4"])
        assert code == 0
        assert {"flow.trR", "flow.trR2", "flow.trR3", "flow.combo", "flow.cspace"} == set(_verdicts(rep))


class TestErrors:
    def test_unknown_space(self, capsys):
        assert run(["check", "ledger", "nosuchspace"]) == 2
        err = capsys.readouterr().err
        assert "heisenberg3" in err and "dr7_nonsymmetric" in err

    def test_bad_arguments(self, capsys):
        assert run(["check", "ledger", "flat(3)", "--order", "40"]) == 2
        assert run(["check", "kdatri", "su2", "--k", "5"]) == 2
        assert run(["frobnicate"]) == 2

    def test_missing_file(self, tmp_path):
        assert run(["validate", str(tmp_path / "none.json")]) == 2

    def test_schema_violation(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text(json.dumps({"dim": 3, "brackets": [[1, 0, 2, 1.0]]}))
        assert run(["validate", str(p)]) == 2

    def test_bad_threads(self, monkeypatch):
        monkeypatch.setenv("DATRI_THREADS", "many")
        assert run(["check", "ledger", "flat(3)", "--samples", "2"]) == 2


class TestReports:
    def test_catalog_list(self, capsys):
        assert run(["catalog", "list"]) == 0
        assert "rhyp(n)" in capsys.readouterr().out.split()

    def test_file_space(self, tmp_path, capsys):
        p = tmp_path / "heis.json"
        p.write_text(json.dumps({"name": "heis", "dim": 3, "brackets": [[0, 1, 2, 1.0]]}))
        code, rep = _json(capsys, ["check", "ledger", str(p), "--samples", "2"])
        assert code == 0 and rep["space"] == "heis"

    def test_deterministic_json(self, capsys, tmp_path, monkeypatch):
        argv = ["check", "kdatri", "heisenberg3", "--samples", "3"]
        _, a = _json(capsys, argv)
        monkeypatch.setenv("DATRI_THREADS", "1")
        _, b = _json(capsys, argv)
        a.pop("header"), b.pop("header")
        assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)

    def test_out_file(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        assert run(["validate", "rhyp(3)", "--samples", "2", "--out", str(out)]) == 0
        text = capsys.readouterr().out
        rep = json.loads(out.read_text())
        assert "normalization" in rep and rep["summary"]["fail"] == 0
        assert "pass" in text

    def test_schema_keys(self, capsys):
        _, rep = _json(capsys, ["check", "ledger", "su2", "--samples", "2"])
        assert {"space", "config", "conditions", "summary", "header"} <= set(rep)
        assert set(rep["summary"]) == {"pass", "fail", "not_determined"}
        assert set(rep["header"]) >= {"generated_at", "version", "wall_time_s"}

    def test_degradation_exit(self, monkeypatch, capsys):
        monkeypatch.setattr(ledger, "ASYMMETRY_WARN", -1.0)
        code, rep = _json(capsys, ["check", "ledger", "su2", "--samples", "2"])
        assert code == 3 and rep["diagnostics"]["numerical_warnings"]

    def test_oracle_sphere(self, capsys):
        code, rep = _json(capsys, ["oracle", "sphere", "heisenberg3", "--samples", "2", "--oracle-samples", "1"])
        assert code == 0
        assert {"oracle.defect_sigma1", "oracle.step_halving", "oracle.series_vs_ode_slope"} == set(_verdicts(rep))

    def test_text_render(self, capsys):
        assert run(["check", "ledger", "flat(3)", "--samples", "1"]) == 0
        out = capsys.readouterr().out
        assert "ledger.L3" in out and "normalization: residual" in out

    def test_main_exits(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["catalog", "list"])
        assert exc.value.code == 0
