"""Config parsing, report emission, exit codes and round trips."""

import csv
import io
import json
import math
import os

import pytest

from riccikit import cli, engine
from riccikit.errors import IOFailure, SchemaViolation, UnknownInequalityId


MINIMAL = {
    "inequality": "classical_bl",
    "measure": {"kind": "gaussian"},
    "dims": [2],
    "seed": 1,
    "samples": 5000,
}


class TestParseConfig:
    def test_minimal_valid(self):
        cfg = cli.parse_config(MINIMAL)
        assert cfg.inequality == "classical_bl"
        assert cfg.dims == [2]
        assert cfg.seed == 1

    def test_misspelled_id(self):
        with pytest.raises(UnknownInequalityId):
            cli.parse_config({**MINIMAL, "inequality": "clasical_bl"})

    def test_hardy_dimension_rule(self):
        with pytest.raises(SchemaViolation) as err:
            cli.parse_config(
                {
                    "inequality": "hardy_boundary",
                    "body": {"kind": "ball"},
                    "dims": [3],
                }
            )
        assert err.value.pointer == "/dims/0"
        assert ">= 6" in str(err.value)

    def test_bad_samples(self):
        with pytest.raises(SchemaViolation) as err:
            cli.parse_config({**MINIMAL, "samples": 10})
        assert err.value.pointer == "/samples"

    def test_missing_measure(self):
        with pytest.raises(SchemaViolation) as err:
            cli.parse_config({"inequality": "classical_bl", "dims": [2]})
        assert err.value.pointer == "/measure"

    def test_json_string_accepted(self):
        cfg = cli.parse_config(json.dumps(MINIMAL))
        assert cfg.samples == 5000

    def test_invalid_json(self):
        with pytest.raises(SchemaViolation):
            cli.parse_config("{not json")


@pytest.fixture(scope="module")
def report():
    cfg = cli.parse_config(MINIMAL)
    return cli.run_suite(cfg)


class TestReports:

    def test_csv_columns_exact(self, report):
        text = cli.report_to_csv(report)
        header = text.splitlines()[0]
        assert header == "suite,inequality,dim,function,lhs,lhs_err,rhs,rhs_err,slack,status,seed,n"

    def test_csv_roundtrip_17_digits(self, report):
        text = cli.report_to_csv(report)
        rows = list(csv.DictReader(io.StringIO(text)))
        for row, orig in zip(rows, report.rows):
            assert float(row["lhs"]) == orig.lhs
            assert float(row["slack"]) == orig.slack

    def test_json_roundtrip(self, report):
        text = cli.report_to_json(report)
        doc = json.loads(text)
        assert doc["rows"] == [r.as_dict() for r in report.rows]

    def test_one_row_report(self):
        rep = engine.VerificationReport()
        rep.add(engine.ReportRow(
            suite="s", inequality="classical_bl", dim=1, function="x1",
            lhs=1.0, lhs_err=0.0, rhs=2.0, rhs_err=0.0, slack=1.0,
            status="pass", seed=0, n=100,
        ))
        text = cli.report_to_csv(rep)
        assert len(text.splitlines()) == 2

    def test_empty_report_refused(self, tmp_path):
        with pytest.raises(IOFailure):
            cli.emit_report(engine.VerificationReport(), path=str(tmp_path / "x.csv"))


class TestExitCodes:
    def test_precedence_and_report_only_neutrality(self):
        def row(status):
            return engine.ReportRow(
                suite="s", inequality="i", dim=1, function="f",
                lhs=0.0, lhs_err=0.0, rhs=0.0, rhs_err=0.0, slack=0.0,
                status=status, seed=0, n=100,
            )

        rep = engine.VerificationReport(rows=[row("pass"), row("report-only")])
        assert cli.exit_code_for(rep) == 0
        rep.add(row("error"))
        assert cli.exit_code_for(rep) == 3
        rep.add(row("fail"))
        assert cli.exit_code_for(rep) == 1

    def test_check_ok(self, tmp_path, capsys):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(MINIMAL))
        rc = cli.main(["check", "--config", str(path), "--out",
                       str(tmp_path / "out.csv")])
        assert rc == 0

    def test_config_error_exit_2(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({**MINIMAL, "inequality": "nope"}))
        rc = cli.main(["check", "--config", str(path)])
        assert rc == 2

    def test_runtime_error_rows_exit_3(self, tmp_path):
        # a hypothesis violation at instantiation becomes an error row
        doc = {
            "inequality": "poly_product",
            "measure": {"kind": "gaussian"},  # not an orthant measure
            "dims": [2],
            "samples": 5000,
            "params": {"part": 2},
        }
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(doc))
        rc = cli.main(["check", "--config", str(path), "--out",
                       str(tmp_path / "out.csv")])
        assert rc == 3

    def test_rg_seed_override(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(MINIMAL))
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        cli.main(["check", "--config", str(path), "--out", str(out1)])
        os.environ["RG_SEED"] = "99"
        try:
            cli.main(["check", "--config", str(path), "--out", str(out2)])
        finally:
            del os.environ["RG_SEED"]
        rows1 = list(csv.DictReader(out1.open()))
        rows2 = list(csv.DictReader(out2.open()))
        assert rows1 != rows2
        assert all(r["seed"] == "99" for r in rows2)


class TestSubcommands:
    def test_ricci_agreement(self, capsys):
        rc = cli.main([
            "ricci", "--family", '{"type": "product_power", "p": 0.5}',
            "--measure", '{"kind": "exp_product"}',
            "--point", "1.0", "1.0",
        ])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert out["max_abs_disagreement"] < 1e-4

    def test_spectrum_uniform(self, capsys):
        rc = cli.main([
            "spectrum", "--potential", '{"kind": "uniform"}',
            "--a", "0.0", "--b", "1.0",
        ])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert abs(out["lambda_1"] - math.pi**2) < 1e-4

    def test_transport_diagnostics(self, capsys):
        rc = cli.main([
            "transport", "--mu", '{"kind": "exp_product"}',
            "--nu", '{"kind": "uniform_interval", "a": 0.0, "b": 1.0}',
            "--points", "0.5", "1.0",
        ])
        assert rc == 0
        rows = json.loads(capsys.readouterr().out)
        assert rows[0]["T"] == pytest.approx(1 - math.exp(-0.5), abs=1e-8)
        assert abs(rows[0]["monge_ampere_residual"]) < 1e-6

    def test_manifest(self, capsys):
        assert cli.main(["manifest"]) == 0
        man = json.loads(capsys.readouterr().out)
        assert "classical_bl" in man


class TestDeterminismContract:
    def test_worker_count_bit_identical(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({**MINIMAL, "samples": 20000}))
        outs = []
        for workers in (1, 3):
            out = tmp_path / f"w{workers}.csv"
            cli.main(["check", "--config", str(path), "--workers", str(workers),
                      "--out", str(out)])
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
