import json

import pytest

from tvpf.case import case_to_matpower, load_case
from tvpf.cli import main
from tvpf.scenarios import five_bus_ramp


@pytest.fixture
def ramp_csv(tmp_path):
    net, sched = five_bus_ramp()
    path = tmp_path / "ramp.csv"
    path.write_text(sched.to_csv(net))
    return path


class TestSolve:
    def test_json(self, tmp_path):
        assert main(["solve", "--case", "case5", "--format", "json", "--out", str(tmp_path)]) == 0
        data = json.loads((tmp_path / "solution.json").read_text())
        assert len(data["buses"]) == 5 and data["converged"]

    def test_csv(self, tmp_path):
        assert main(["solve", "--case", "case5", "--out", str(tmp_path)]) == 0
        assert (tmp_path / "solution.csv").read_text().startswith("bus,v_real,v_imag,magnitude,angle_deg\n")

    def test_stdout(self, capsys):
        assert main(["solve", "--case", "case5", "--format", "json", "--stdout"]) == 0
        assert json.loads(capsys.readouterr().out)["iterations"] > 0

    def test_missing_file(self, tmp_path, capsys):
        assert main(["solve", "--case", str(tmp_path / "missing.m"), "--out", str(tmp_path)]) == 1
        assert "file not found" in capsys.readouterr().err

    def test_malformed(self, tmp_path, capsys):
        from conftest import FIXTURES

        assert main(["solve", "--case", str(FIXTURES / "syntax_error.m"), "--out", str(tmp_path)]) == 1
        assert "line 13" in capsys.readouterr().err

    def test_divergence(self, tmp_path, capsys):
        heavy = tmp_path / "heavy.m"
        heavy.write_text(case_to_matpower(load_case("case5").scaled(50)))
        assert main(["solve", "--case", str(heavy), "--out", str(tmp_path)]) == 2
        assert "converge" in capsys.readouterr().err


class TestTrajectory:
    def test_schedule_with_validation(self, tmp_path, ramp_csv):
        out = tmp_path / "o"
        code = main(["trajectory", "--case", "case5", "--schedule", str(ramp_csv), "--validate",
                     "--samples", "11", "--out", str(out)])
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["complete"] and manifest["global_max_error"] < 1e-4
        for name in ("trajectory.csv", "branch_flows.csv", "errors.csv", "errors.json"):
            assert (out / name).exists()
        lines = (out / "trajectory.csv").read_text().splitlines()
        # combined, linear and newton blocks, 11 samples x 5 buses each
        assert len(lines) == 1 + 3 * 11 * 5

    def test_needs_one_source(self, tmp_path, ramp_csv, capsys):
        assert main(["trajectory", "--case", "case5", "--out", str(tmp_path)]) == 1
        assert main(["trajectory", "--case", "case5", "--schedule", str(ramp_csv), "--seed", "1",
                     "--out", str(tmp_path)]) == 1
        assert "exactly one" in capsys.readouterr().err

    def test_samples_validated(self, tmp_path, ramp_csv):
        assert main(["trajectory", "--case", "case5", "--schedule", str(ramp_csv), "--samples", "1",
                     "--out", str(tmp_path)]) == 1

    def test_failure_writes_partial_manifest(self, tmp_path):
        net, sched = five_bus_ramp()
        y = sched.targets[0]
        sched.targets[1] = y.replace(p=50 * y.p, q=50 * y.q)
        path = tmp_path / "bad.csv"
        path.write_text(sched.to_csv(net))
        out = tmp_path / "o"
        assert main(["trajectory", "--case", "case5", "--schedule", str(path), "--out", str(out)]) == 2
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["complete"] is False and manifest["failed_breakpoint"] == 1

    def test_constant_schedule_zero_error(self, tmp_path):
        from tvpf.powerflow import InjectionTarget, Network
        from tvpf.trajectory import InjectionSchedule

        net = Network(load_case("case5"))
        path = tmp_path / "flat.csv"
        path.write_text(InjectionSchedule.constant(InjectionTarget.from_case(net), hours=2).to_csv(net))
        out = tmp_path / "o"
        assert main(["trajectory", "--case", "case5", "--schedule", str(path), "--validate", "--out", str(out)]) == 0
        assert json.loads((out / "errors.json").read_text())["global_max"] <= 1e-12


class TestNorms:
    def test_u_curve_columns(self, tmp_path, ramp_csv):
        assert main(["norms", "--case", "case5", "--schedule", str(ramp_csv), "--max-order", "8",
                     "--out", str(tmp_path)]) == 0
        rows = [line.split(",") for line in (tmp_path / "norms.csv").read_text().splitlines()[1:]]
        measured = [float(r[1]) for r in rows]
        k = measured.index(min(measured))
        assert 0 < k < 7
        assert all(a > b for a, b in zip(measured[:k], measured[1:k + 1]))
        assert all(a < b for a, b in zip(measured[k:], measured[k + 1:]))
        assert all(float(r[2]) >= float(r[1]) for r in rows[1:])

    def test_json_and_norm_choice(self, tmp_path, ramp_csv):
        assert main(["norms", "--case", "case5", "--schedule", str(ramp_csv), "--norm", "inf",
                     "--format", "json", "--out", str(tmp_path)]) == 0
        assert json.loads((tmp_path / "norms.json").read_text())["p"] == "inf"

    def test_zero_slope(self, tmp_path):
        from tvpf.powerflow import InjectionTarget, Network
        from tvpf.trajectory import InjectionSchedule

        net = Network(load_case("case5"))
        path = tmp_path / "flat.csv"
        path.write_text(InjectionSchedule.constant(InjectionTarget.from_case(net), hours=1).to_csv(net))
        assert main(["norms", "--case", "case5", "--schedule", str(path), "--out", str(tmp_path)]) == 0
        rows = (tmp_path / "norms.csv").read_text().splitlines()[1:]
        assert all(float(r.split(",")[1]) == 0.0 for r in rows)

    def test_bad_interval(self, tmp_path, ramp_csv):
        assert main(["norms", "--case", "case5", "--schedule", str(ramp_csv), "--interval", "3",
                     "--out", str(tmp_path)]) == 1


class TestScenario:
    def test_byte_identical(self, tmp_path):
        for d in ("a", "b"):
            assert main(["scenario", "--case", "case118", "--seed", "42", "--out", str(tmp_path / d)]) == 0
        for name in ("schedule.csv", "scenario.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_manifest(self, tmp_path):
        assert main(["scenario", "--case", "case118", "--seed", "42", "--variation", "1.0",
                     "--out", str(tmp_path)]) == 0
        m = json.loads((tmp_path / "scenario.json").read_text())
        assert len(m["wind_buses"]) == 20 and len(m["solar_buses"]) == 10
        assert m["vre_share"] == pytest.approx(0.3)

    def test_zero_variation(self, tmp_path):
        assert main(["scenario", "--case", "case118", "--variation", "0", "--out", str(tmp_path)]) == 0
        rows = (tmp_path / "schedule.csv").read_text().splitlines()[1:]
        by_bus = {}
        for r in rows:
            _, bus, p, q = r.split(",")
            by_bus.setdefault(bus, set()).add((p, q))
        assert all(len(v) == 1 for v in by_bus.values())

    def test_schedule_feeds_trajectory(self, tmp_path):
        assert main(["scenario", "--case", "case5", "--seed", "1", "--variation", "1.0",
                     "--out", str(tmp_path)]) == 0
        assert main(["trajectory", "--case", "case5", "--schedule", str(tmp_path / "schedule.csv"),
                     "--out", str(tmp_path / "t")]) == 0

    def test_infeasible_exit(self, tmp_path, capsys):
        assert main(["scenario", "--case", "case5", "--variation", "50", "--out", str(tmp_path)]) == 2
        assert "breakpoint" in capsys.readouterr().err
