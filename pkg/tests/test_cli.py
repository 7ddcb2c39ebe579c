import json
import logging
import math

import numpy as np
import pytest

from latentsearch.cli import main
from latentsearch.core import InvariantError
from latentsearch.reports import read_campaign_csv, read_run_report, read_trace

from conftest import server_command


def _write_json(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def _summary(capsys):
    return json.loads(capsys.readouterr().out.strip().splitlines()[-1])


class TestEvolve:
    def test_flags_only_run_costs_budget_plus_one(self, capsys):
        code = main(["evolve", "--dim", "256", "--alpha", "0", "--budget", "40",
                     "--objective", "sphere", "--seed", "0"])
        assert code == 0
        summary = _summary(capsys)
        assert summary["evaluations"] == 41
        assert summary["config"]["alpha"] == 0.0
        assert summary["config"]["dimension"] == 256

    def test_alpha_inf_pins_every_rate_to_one(self, tmp_path, capsys):
        trace_path = tmp_path / "t.jsonl"
        code = main(["evolve", "--dim", "16", "--alpha", "inf", "--budget", "25",
                     "--objective", "sphere", "--trace-out", str(trace_path)])
        assert code == 0
        _, steps = read_trace(trace_path)
        assert len(steps) == 25
        assert all(s.sampled_rate_r == 1.0 for s in steps)
        assert _summary(capsys)["config"]["alpha"] == "inf"

    def test_flag_overrides_beat_config_values(self, tmp_path, capsys):
        cfg = _write_json(tmp_path / "cfg.json", {
            "dimension": 8, "alpha": 0.0, "budget": 10,
            "objective": {"name": "sphere"}, "seed": 1,
        })
        code = main(["evolve", "--config", cfg, "--alpha", "1", "--budget", "5"])
        assert code == 0
        summary = _summary(capsys)
        assert summary["config"]["alpha"] == 1.0
        assert summary["config"]["budget"] == 5
        assert summary["evaluations"] == 6

    def test_config_alpha_inf_string(self, tmp_path, capsys):
        cfg = _write_json(tmp_path / "cfg.json", {
            "dimension": 4, "alpha": "inf", "budget": 3,
            "objective": {"name": "sphere"},
        })
        assert main(["evolve", "--config", cfg]) == 0
        assert _summary(capsys)["config"]["alpha"] == "inf"

    def test_unknown_config_key_is_a_config_error(self, tmp_path, capsys):
        cfg = _write_json(tmp_path / "cfg.json", {
            "dimension": 4, "alpha": 0.0, "budget": 3,
            "objective": {"name": "sphere"}, "bugdet": 9,
        })
        assert main(["evolve", "--config", cfg]) == 2
        assert "unknown config keys" in capsys.readouterr().err

    def test_missing_required_settings(self, capsys):
        assert main(["evolve", "--dim", "4", "--alpha", "0"]) == 2
        err = capsys.readouterr().err
        assert "budget" in err and "objective" in err

    def test_wrong_dimension_start_point(self, tmp_path, capsys):
        start = _write_json(tmp_path / "z0.json", [0.1, 0.2, 0.3])
        code = main(["evolve", "--dim", "8", "--alpha", "0", "--budget", "5",
                     "--objective", "sphere", "--start-point", start])
        assert code == 2
        assert "length 3, expected 8" in capsys.readouterr().err

    def test_start_point_is_used(self, tmp_path, capsys):
        start = [0.5, -0.5, 0.25, 0.0]
        path = _write_json(tmp_path / "z0.json", start)
        trace_path = tmp_path / "t.jsonl"
        code = main(["evolve", "--dim", "4", "--alpha", "0", "--budget", "5",
                     "--objective", "sphere", "--start-point", path,
                     "--trace-out", str(trace_path)])
        assert code == 0
        header, _ = read_trace(trace_path)
        assert header["start_point"] == start
        assert _summary(capsys)["config"]["start_point"] == path

    def test_reevaluate_incumbent_doubles_loop_cost(self, capsys):
        code = main(["evolve", "--dim", "8", "--alpha", "0", "--budget", "10",
                     "--objective", "sphere", "--reevaluate-incumbent"])
        assert code == 0
        assert _summary(capsys)["evaluations"] == 21

    def test_outputs_are_byte_identical_across_reruns(self, tmp_path, capsys):
        def run(suffix):
            trace = tmp_path / f"t{suffix}.jsonl"
            report = tmp_path / f"r{suffix}.json"
            assert main(["evolve", "--dim", "32", "--alpha", "1", "--budget", "50",
                         "--objective", "rastrigin", "--seed", "9",
                         "--trace-out", str(trace),
                         "--report-out", str(report)]) == 0
            # output paths differ, so compare config-independent bytes
            trace_lines = trace.read_text().splitlines()
            report_doc = read_run_report(report)
            report_doc["config"].pop("trace_out")
            report_doc["config"].pop("report_out")
            return trace_lines[1:], report_doc

        a = run("a")
        b = run("b")
        capsys.readouterr()
        assert a == b

    def test_external_objective_inline_spec(self, capsys):
        spec = json.dumps({
            "name": "external",
            "command": server_command("--dim", "4", "--deterministic"),
        })
        code = main(["evolve", "--dim", "4", "--alpha", "0", "--budget", "5",
                     "--objective", spec, "--seed", "2"])
        assert code == 0
        assert _summary(capsys)["evaluations"] == 6

    def test_external_crash_is_exit_3(self, capsys):
        spec = json.dumps({
            "name": "external",
            "command": server_command("--dim", "4", "--mode", "crash"),
        })
        code = main(["evolve", "--dim", "4", "--alpha", "0", "--budget", "5",
                     "--objective", spec])
        assert code == 3
        assert "objective failure" in capsys.readouterr().err

    def test_invariant_violation_is_exit_4(self, monkeypatch, capsys):
        import latentsearch.cli as cli_module

        def boom(*args, **kwargs):
            raise InvariantError("induced")

        monkeypatch.setattr(cli_module, "evolve", boom)
        code = main(["evolve", "--dim", "4", "--alpha", "0", "--budget", "5",
                     "--objective", "sphere"])
        assert code == 4
        assert "invariant violation" in capsys.readouterr().err

    def test_missing_config_file_is_exit_2(self, capsys):
        assert main(["evolve", "--config", "/nonexistent.json"]) == 2

    def test_bogus_log_level_does_not_break_the_run(self, monkeypatch, capsys):
        monkeypatch.setenv("LATENTSEARCH_LOG", "bogus")
        code = main(["evolve", "--dim", "4", "--alpha", "0", "--budget", "3",
                     "--objective", "sphere"])
        assert code == 0

    def test_artifact_writes_are_logged(self, tmp_path, caplog, capsys):
        caplog.set_level(logging.INFO, logger="latentsearch")
        assert main(["evolve", "--dim", "4", "--alpha", "0", "--budget", "3",
                     "--objective", "sphere",
                     "--trace-out", str(tmp_path / "t.jsonl")]) == 0
        assert "trace written" in caplog.text


def _campaign_doc(**overrides):
    doc = {
        "name": "cli-grid",
        "objective": {"name": "sphere"},
        "distribution": {"kind": "standard-normal"},
        "dimensions": [8],
        "budgets": [40, 320],
        "alphas": [0, 1, "inf"],
        "replicas": 2,
        "base_seed": 5,
    }
    doc.update(overrides)
    return doc


class TestCampaign:
    def test_two_budgets_by_three_alphas_gives_six_csv_rows(self, tmp_path, capsys):
        cfg = _write_json(tmp_path / "c.json", _campaign_doc())
        base = str(tmp_path / "out")
        assert main(["campaign", "--config", cfg, "--report-out", base]) == 0
        rows = read_campaign_csv(base + ".csv")
        assert len(rows) == 6
        assert [(r["budget"], r["alpha"]) for r in rows] == [
            (40, 0.0), (40, 1.0), (40, math.inf),
            (320, 0.0), (320, 1.0), (320, math.inf),
        ]
        doc = json.loads((tmp_path / "out.json").read_text())
        assert doc["name"] == "cli-grid"
        assert "timing" in doc
        summary = _summary(capsys)
        assert summary["cells"] == 6

    def test_empty_grid_is_exit_2(self, tmp_path, capsys):
        cfg = _write_json(tmp_path / "c.json", _campaign_doc(dimensions=[]))
        assert main(["campaign", "--config", cfg,
                     "--report-out", str(tmp_path / "out")]) == 2
        assert "nonempty" in capsys.readouterr().err

    def test_parallel_does_not_change_csv_bytes(self, tmp_path, capsys):
        cfg = _write_json(tmp_path / "c.json", _campaign_doc(replicas=4))
        base1, base4 = str(tmp_path / "p1"), str(tmp_path / "p4")
        assert main(["campaign", "--config", cfg, "--report-out", base1,
                     "--parallel", "1"]) == 0
        assert main(["campaign", "--config", cfg, "--report-out", base4,
                     "--parallel", "4"]) == 0
        capsys.readouterr()
        assert (tmp_path / "p1.csv").read_bytes() == (tmp_path / "p4.csv").read_bytes()

    def test_seed_flag_overrides_base_seed(self, tmp_path, capsys):
        cfg = _write_json(tmp_path / "c.json", _campaign_doc(budgets=[10],
                                                             alphas=[0]))
        a, b = str(tmp_path / "a"), str(tmp_path / "b")
        assert main(["campaign", "--config", cfg, "--report-out", a]) == 0
        assert main(["campaign", "--config", cfg, "--report-out", b,
                     "--seed", "999"]) == 0
        capsys.readouterr()
        assert (tmp_path / "a.csv").read_text() != (tmp_path / "b.csv").read_text()

    def test_requires_config_and_report_out(self, tmp_path, capsys):
        assert main(["campaign", "--report-out", str(tmp_path / "x")]) == 2
        cfg = _write_json(tmp_path / "c.json", _campaign_doc())
        assert main(["campaign", "--config", cfg]) == 2

    def test_report_out_may_come_from_the_config(self, tmp_path, capsys):
        doc = _campaign_doc(budgets=[5], alphas=[0])
        doc["report_out"] = str(tmp_path / "from-config")
        cfg = _write_json(tmp_path / "c.json", doc)
        assert main(["campaign", "--config", cfg]) == 0
        capsys.readouterr()
        assert (tmp_path / "from-config.csv").exists()


class TestDiversity:
    def test_identical_points_mean_zero(self, tmp_path, capsys):
        path = _write_json(tmp_path / "p.json", [[1.0, 2.0], [1.0, 2.0]])
        assert main(["diversity", path]) == 0
        report = _summary(capsys)
        assert report["mean"] == 0.0
        assert report["n"] == 2

    def test_single_point_is_exit_2(self, tmp_path, capsys):
        path = _write_json(tmp_path / "p.json", [[1.0, 2.0]])
        assert main(["diversity", path]) == 2
        assert "at least 2" in capsys.readouterr().err

    def test_large_normal_sample_matches_closed_form(self, tmp_path, capsys):
        rng = np.random.default_rng(21)
        pts = rng.standard_normal((10_000, 2)).tolist()
        path = _write_json(tmp_path / "p.json", pts)
        assert main(["diversity", path, "--seed", "3"]) == 0
        report = _summary(capsys)
        assert abs(report["mean"] - math.sqrt(math.pi)) <= 3.0 * report["stderr"]
        assert report["pairing_seed"] == 3

    def test_reads_campaign_final_point_records(self, tmp_path, capsys):
        path = tmp_path / "pts.jsonl"
        path.write_text(
            '{"replica":0,"point":[0.0,0.0]}\n{"replica":1,"point":[3.0,4.0]}\n'
        )
        assert main(["diversity", str(path)]) == 0
        assert _summary(capsys)["mean"] == 5.0

    def test_metric_flag(self, tmp_path, capsys):
        path = _write_json(tmp_path / "p.json", [[1.0, 2.0], [1.0, 9.0]])
        assert main(["diversity", path,
                     "--metric", "normalized-hamming-latent"]) == 0
        report = _summary(capsys)
        assert report["metric"] == "normalized-hamming-latent"
        assert report["mean"] == 0.5

    def test_malformed_file_is_exit_2(self, tmp_path, capsys):
        path = tmp_path / "p.json"
        path.write_text("not json at all")
        assert main(["diversity", str(path)]) == 2

    def test_ragged_points_rejected(self, tmp_path, capsys):
        path = _write_json(tmp_path / "p.json", [[1.0, 2.0], [1.0]])
        assert main(["diversity", str(path)]) == 2
        assert "dimension" in capsys.readouterr().err
