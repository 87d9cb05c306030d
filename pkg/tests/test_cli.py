import json
import os

import pytest

from ihse.cli import run
from ihse.jsonio import dumps, loads


@pytest.fixture
def two_body_file(tmp_path):
    path = tmp_path / "two_body.json"
    doc = {
        "d": 2,
        "particles": [
            {"x": [0.0, 0.0], "v": [1.0, 0.0]},
            {"x": [3.0, 0.0], "v": [0.0, 0.0]},
        ],
    }
    path.write_text(dumps(doc))
    return path


def run_to_file(tmp_path, argv):
    out = tmp_path / "out.json"
    status = run(argv + ["--output", str(out)])
    return status, out


class TestFlowCommand:
    def test_inelastic_example(self, tmp_path, two_body_file):
        status, out = run_to_file(
            tmp_path, ["flow", "--config", str(two_body_file), "--tau", "3", "--eps0", "0.1875"]
        )
        assert status == 0
        doc = json.loads(out.read_text())
        assert doc["schema"] == "ihse/1"
        assert doc["classification"]["variant"] == "single_collision"
        assert doc["classification"]["kind"] == "inelastic"
        assert doc["classification"]["t_c"] == 2
        record = doc["collision_record"]
        assert record["outcome"]["kappa"] == 0.25
        assert record["outcome"]["energy_loss"] == 0.1875
        particles = doc["final"]["particles"]
        assert particles[0]["x"] == [2.25, 0] and particles[0]["v"] == [0.25, 0]
        assert particles[1]["x"] == [3.75, 0] and particles[1]["v"] == [0.75, 0]
        assert doc["jacobian"] == {"det": 0.5, "prefactor": -0.5, "det_N": -1}

    def test_byte_identical_reruns(self, tmp_path, two_body_file):
        argv = ["flow", "--config", str(two_body_file), "--tau", "3", "--eps0", "0.1875"]
        _, out1 = run_to_file(tmp_path, argv)
        first = out1.read_bytes()
        _, out2 = run_to_file(tmp_path, argv)
        assert out2.read_bytes() == first

    def test_excluded_is_pathology_exit(self, tmp_path):
        grazing = tmp_path / "grazing.json"
        grazing.write_text(
            dumps(
                {
                    "d": 2,
                    "particles": [
                        {"x": [0.0, 0.0], "v": [1.0, 0.0]},
                        {"x": [3.0, 1.0], "v": [0.0, 0.0]},
                    ],
                }
            )
        )
        status = run(["flow", "--config", str(grazing), "--tau", "5", "--eps0", "0.75"])
        assert status == 3


class TestClassifyCommand:
    def test_predictions_listed(self, tmp_path, two_body_file):
        status, out = run_to_file(
            tmp_path, ["classify", "--config", str(two_body_file), "--tau", "3", "--eps0", "0.75"]
        )
        assert status == 0
        doc = json.loads(out.read_text())
        assert doc["classification"]["kind"] == "elastic"
        (pred,) = doc["predictions"]
        assert pred["pair"] == [1, 2]
        assert pred["delta"] == 1 and pred["tau"] == 2 and pred["grazing"] is False


class TestSimulateCommand:
    def test_config_run_with_events_csv(self, tmp_path, two_body_file):
        csv_path = tmp_path / "events.csv"
        status, out = run_to_file(
            tmp_path,
            [
                "simulate",
                "--config",
                str(two_body_file),
                "--T",
                "3",
                "--eps0",
                "0.1875",
                "--events-csv",
                str(csv_path),
            ],
        )
        assert status == 0
        doc = json.loads(out.read_text())
        assert doc["report"]["n_inelastic"] == 1
        assert doc["final_kinetic_energy"] == 0.3125
        header, row = csv_path.read_text().strip().splitlines()
        assert header == "time,i,j,kind,ke_before,ke_after"
        assert row.split(",") == ["2", "1", "2", "inelastic", "0.5", "0.3125"]

    def test_sampled_initial_conditions(self, tmp_path):
        status, out = run_to_file(
            tmp_path,
            ["simulate", "--T", "5", "--eps0", "0.3", "--seed", "4", "--N", "3", "--R1", "4", "--R2", "1.5"],
        )
        assert status == 0
        doc = json.loads(out.read_text())
        assert doc["config"]["seed"] == 4
        assert len(doc["initial"]["particles"]) == 3

    def test_pathology_exit_code(self, tmp_path):
        grazing = tmp_path / "grazing.json"
        grazing.write_text(
            dumps(
                {
                    "d": 2,
                    "particles": [
                        {"x": [0.0, 0.0], "v": [1.0, 0.0]},
                        {"x": [3.0, 1.0], "v": [0.0, 0.0]},
                    ],
                }
            )
        )
        status, out = run_to_file(tmp_path, ["simulate", "--config", str(grazing), "--T", "5", "--eps0", "0.75"])
        assert status == 3
        doc = json.loads(out.read_text())
        assert doc["report"]["halted"]["reason"] == "grazing"

    def test_missing_sampling_flags_usage_error(self):
        assert run(["simulate", "--T", "5", "--eps0", "0.3"]) == 2


class TestVerificationCommands:
    def test_tensor_lemma_summary(self, tmp_path):
        status, out = run_to_file(tmp_path, ["tensor-lemma", "--samples", "2000", "--seed", "1"])
        assert status == 0
        doc = json.loads(out.read_text())
        assert doc["summary"]["max_abs_diff"] <= 1e-8

    def test_jacobian_summary(self, tmp_path):
        status, out = run_to_file(
            tmp_path, ["jacobian", "--dim", "2", "--samples", "6", "--seed", "7", "--n-particles", "2"]
        )
        assert status == 0
        doc = json.loads(out.read_text())
        assert doc["summary"]["n_samples"] == 6
        assert doc["summary"]["max_residual"] <= 1e-5
        assert len(doc["reports"]) == 6

    def test_scatter_check_lines(self, tmp_path):
        status, out = run_to_file(tmp_path, ["scatter-check", "--samples", "20", "--seed", "3", "--eps0", "0.75"])
        assert status == 0
        doc = json.loads(out.read_text())
        assert doc["summary"]["max_energy_ledger_error"] <= 1e-12
        assert doc["summary"]["max_abs_det_deviation"] <= 1e-6
        sample = doc["samples"][0]
        assert set(sample) == {"kind", "pre_ke", "post_ke", "loss", "fd_det"}


class TestMeasureAndVolume:
    def test_measure_with_csv(self, tmp_path):
        csv_path = tmp_path / "sweep.csv"
        status, out = run_to_file(
            tmp_path,
            [
                "measure", "--family", "E", "--N", "3", "--delta", "0.3",
                "--R1", "3", "--R2", "1", "--eps0", "0.01",
                "--samples", "20000", "--seed", "5", "--csv", str(csv_path),
            ],
        )
        assert status == 0
        doc = json.loads(out.read_text())
        assert doc["estimate"]["n_samples"] == 20000
        assert doc["estimate"]["hits"] > 0
        assert csv_path.read_text().splitlines()[0] == "delta,mu,estimate,ci95"

    def test_volume_chain(self, tmp_path):
        chain = tmp_path / "chain.json"
        chain.write_text(
            dumps(
                {
                    "d": 2,
                    "particles": [
                        {"x": [3.0, 0.0], "v": [0.0, 0.0]},
                        {"x": [0.0, 0.0], "v": [3.0, 0.0]},
                        {"x": [6.0, 0.0], "v": [-1.0, 0.0]},
                    ],
                }
            )
        )
        status, out = run_to_file(
            tmp_path, ["volume", "--config", str(chain), "--radius", "1e-3", "--tau", "1.5", "--eps0", "0.5"]
        )
        assert status == 0
        doc = json.loads(out.read_text())
        assert abs(doc["predicted"] - doc["measured"]) <= 1e-4


class TestFlagResolution:
    def test_run_config_file_defaults(self, tmp_path, two_body_file):
        run_config = tmp_path / "run.json"
        run_config.write_text(dumps({"tau": 3.0, "eps0": 0.1875}))
        status, out = run_to_file(
            tmp_path, ["flow", "--config", str(two_body_file), "--run-config", str(run_config)]
        )
        assert status == 0
        doc = json.loads(out.read_text())
        assert doc["config"]["tau"] == 3 and doc["config"]["eps0"] == 0.1875

    def test_explicit_flag_overrides_file(self, tmp_path, two_body_file):
        run_config = tmp_path / "run.json"
        run_config.write_text(dumps({"tau": 1.0, "eps0": 0.1875}))
        status, out = run_to_file(
            tmp_path,
            ["flow", "--config", str(two_body_file), "--run-config", str(run_config), "--tau", "3"],
        )
        assert status == 0
        doc = json.loads(out.read_text())
        assert doc["config"]["tau"] == 3
        assert doc["classification"]["variant"] == "single_collision"

    def test_missing_required_flag(self, two_body_file):
        assert run(["flow", "--config", str(two_body_file), "--tau", "3"]) == 2

    def test_missing_input_file(self, tmp_path):
        assert run(["flow", "--config", str(tmp_path / "absent.json"), "--tau", "3", "--eps0", "1"]) == 2

    def test_atomic_write_leaves_no_temp(self, tmp_path, two_body_file):
        status, out = run_to_file(
            tmp_path, ["flow", "--config", str(two_body_file), "--tau", "3", "--eps0", "0.1875"]
        )
        assert status == 0
        leftovers = [p for p in os.listdir(tmp_path) if ".tmp" in p]
        assert leftovers == []

    def test_seventeen_digit_floats(self, tmp_path, two_body_file):
        status, out = run_to_file(
            tmp_path, ["flow", "--config", str(two_body_file), "--tau", "3", "--eps0", "0.1875"]
        )
        text = out.read_text()
        assert "9.9999999999999998e-13" in text  # grazing tolerance, full precision
        reparsed = loads(text)
        assert reparsed["config"]["grazing_tol"] == 1e-12
