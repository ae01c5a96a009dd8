import json
import struct
import subprocess

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from risklab.cli import dispatch, load_config
from risklab.datasets import dataset_from_csv
from risklab.errors import ConfigError


def read_rows(path):
    lines = path.read_text().splitlines()
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


class TestDispatchContracts:
    def test_hebbian_row_count(self, tmp_path):
        out = tmp_path / "hebb.csv"
        code = dispatch(["analytic", "hebbian", "--p", "100", "--delta", "2",
                         "--m-grid", "1,10,100", "--out", str(out)])
        assert code == 0
        header, rows = read_rows(out)
        assert header == ["m", "risk"]
        assert len(rows) == 3

    def test_gardner_asymptote_row(self, tmp_path):
        out = tmp_path / "gardner.csv"
        code = dispatch(["analytic", "gardner", "--alpha", "100", "--out", str(out)])
        assert code == 0
        header, rows = read_rows(out)
        assert header == ["alpha", "q", "r", "r_times_alpha"]
        assert 0.60 <= float(rows[0][3]) <= 0.65

    def test_missing_required_flag_exits_one(self, tmp_path):
        out = tmp_path / "never.csv"
        code = dispatch(["analytic", "hebbian", "--p", "100", "--out", str(out)])
        assert code == 1
        assert not out.exists()

    def test_unknown_subcommand_exits_one(self):
        assert dispatch(["analytic", "nonsense"]) == 1
        assert dispatch(["frobnicate"]) == 1
        assert dispatch([]) == 1

    def test_runtime_error_exits_two(self, tmp_path):
        code = dispatch(["analytic", "gibbs-annealed", "--entropy",
                         str(tmp_path / "missing.csv"), "--m", "10",
                         "--out", str(tmp_path / "o.csv")])
        assert code == 2

    def test_numerical_error_exits_two(self, tmp_path):
        entropy = tmp_path / "e.csv"
        entropy.write_text("r,s\n0.9,0\n0.8,-1\n")  # too few points for a quadratic
        code = dispatch(["fit", "quadratic", "--entropy", str(entropy),
                         "--out", str(tmp_path / "fit.json")])
        assert code == 2

    def test_help_exits_zero(self):
        assert dispatch(["--help"]) == 0


class TestLoadConfig:
    def test_empty_object_gives_defaults(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text("{}")
        out = tmp_path / "h.csv"
        code = dispatch(["analytic", "hebbian", "--config", str(cfg), "--p", "50",
                         "--delta", "1", "--m-grid", "5", "--out", str(out)])
        assert code == 0

    def test_flag_overrides_file(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"m_grid": [1, 2, 3, 4], "p": 50, "delta": 1.0}))
        out = tmp_path / "h.csv"
        code = dispatch(["analytic", "hebbian", "--config", str(cfg),
                         "--m-grid", "7", "--out", str(out)])
        assert code == 0
        _, rows = read_rows(out)
        assert len(rows) == 1 and rows[0][0] == "7"
        manifest = json.loads((tmp_path / "h.csv.manifest.json").read_text())
        assert manifest["parameters"]["m_grid"] == [7]

    def test_unknown_key_named_in_rejection(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"betta_grid": [1]}))
        with pytest.raises(ConfigError, match="betta_grid"):
            load_config(cfg, known_keys=["beta_grid"])
        out = tmp_path / "h.csv"
        code = dispatch(["analytic", "hebbian", "--config", str(cfg), "--p", "50",
                         "--delta", "1", "--m-grid", "5", "--out", str(out)])
        assert code == 1
        assert not out.exists()

    def test_malformed_json_exits_one(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text("{not json")
        code = dispatch(["analytic", "hebbian", "--config", str(cfg), "--p", "50",
                         "--delta", "1", "--m-grid", "5", "--out", str(tmp_path / "h.csv")])
        assert code == 1


class TestDeterminismAndManifest:
    def test_reruns_are_byte_identical(self, tmp_path):
        args = ["simulate", "hebbian", "--p", "40", "--delta", "2",
                "--m-grid", "10,100", "--runs", "20", "--seed", "31"]
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert dispatch(args + ["--out", str(out1)]) == 0
        assert dispatch(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_manifest_references_outputs(self, tmp_path):
        out = tmp_path / "g.csv"
        dispatch(["data", "gen-gaussian", "--p", "4", "--delta", "1", "--n", "10",
                  "--seed", "5", "--out", str(out)])
        manifest = json.loads((tmp_path / "g.csv.manifest.json").read_text())
        assert manifest["outputs"][0]["path"] == str(out)
        assert manifest["master_seed"] == 5
        assert len(manifest["outputs"][0]["sha256"]) == 64

    @given(value=st.floats(allow_nan=False, allow_infinity=False))
    def test_seventeen_digits_round_trip(self, value):
        assert float(f"{value:.17g}") == value


class TestDataPipeline:
    def test_gen_load_relabel(self, tmp_path):
        data_csv = tmp_path / "d.csv"
        assert dispatch(["data", "gen-gaussian", "--p", "6", "--delta", "2",
                         "--n", "50", "--seed", "3", "--out", str(data_csv)]) == 0
        teacher_bin = tmp_path / "t.bin"
        relabeled_csv = tmp_path / "r.csv"
        assert dispatch(["data", "relabel", "--data", str(data_csv), "--kind", "mlp",
                         "--layer-sizes", "4,3", "--teacher-seed", "9",
                         "--save-teacher", str(teacher_bin),
                         "--out", str(relabeled_csv)]) == 0
        back = dataset_from_csv(relabeled_csv, class_count=3)
        assert back.n == 50
        assert teacher_bin.exists()
        # teacher reproduces its own labels exactly
        from risklab import PredictorSpec, empirical_risk
        from risklab.predictors import load_weight_vector

        spec = PredictorSpec(kind="mlp", input_dim=6, layer_sizes=(4, 3))
        teacher = load_weight_vector(teacher_bin)
        assert empirical_risk(spec, teacher, back) == 0.0

    def test_idx_loading(self, tmp_path):
        img, lbl = tmp_path / "i.idx", tmp_path / "l.idx"
        img.write_bytes(struct.pack(">IIII", 0x803, 2, 1, 2) + bytes([0, 255, 51, 102]))
        lbl.write_bytes(struct.pack(">II", 0x801, 2) + bytes([3, 1]))
        out = tmp_path / "d.csv"
        assert dispatch(["data", "load-idx", "--images", str(img), "--labels", str(lbl),
                         "--out", str(out)]) == 0
        data = dataset_from_csv(out)
        assert data.features[0].tolist() == [0.0, 1.0]
        assert data.labels.tolist() == [3, 1]
        # bad magic is a runtime failure
        img.write_bytes(struct.pack(">IIII", 0x999, 2, 1, 2) + bytes([0, 255, 51, 102]))
        assert dispatch(["data", "load-idx", "--images", str(img), "--labels", str(lbl),
                         "--out", str(out)]) == 2


class TestSamplingCommands:
    def test_sweep_emits_curve_chains_and_manifest(self, tmp_path):
        out = tmp_path / "curve.csv"
        code = dispatch(["sample", "boltzmann-sweep", "--machine", "perceptron-exact",
                         "--p", "10", "--delta", "2", "--beta-grid", "0,5",
                         "--chains", "2", "--burn-in", "50", "--samples", "40",
                         "--thin", "1", "--proposal-scale", "0.4",
                         "--seed", "21", "--out", str(out)])
        assert code == 0
        header, rows = read_rows(out)
        assert header == ["beta", "risk", "stderr", "acceptance_rate", "ess"]
        assert len(rows) == 2
        chain_files = sorted((tmp_path / "curve.csv.chains").glob("*.csv"))
        assert len(chain_files) == 4  # 2 chains x 2 betas
        chead, crows = read_rows(chain_files[0])
        assert chead == ["step", "risk_acc", "risk_rep", "accepted"]
        assert len(crows) == 40
        manifest = json.loads((tmp_path / "curve.csv.manifest.json").read_text())
        listed = {o["path"] for o in manifest["outputs"]}
        assert str(out) in listed and all(str(f) in listed for f in chain_files)

    def test_sweep_rerun_identical(self, tmp_path):
        args = ["sample", "boltzmann-sweep", "--machine", "perceptron-exact",
                "--p", "8", "--delta", "1", "--beta-grid", "0,3", "--chains", "2",
                "--burn-in", "30", "--samples", "20", "--thin", "1",
                "--proposal-scale", "0.3", "--seed", "22"]
        out1, out2 = tmp_path / "c1.csv", tmp_path / "c2.csv"
        assert dispatch(args + ["--out", str(out1)]) == 0
        assert dispatch(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        for f1, f2 in zip(sorted((tmp_path / "c1.csv.chains").glob("*")),
                          sorted((tmp_path / "c2.csv.chains").glob("*"))):
            assert f1.read_bytes() == f2.read_bytes()

    def test_annealed_command(self, tmp_path):
        data_csv = tmp_path / "d.csv"
        dispatch(["data", "gen-gaussian", "--p", "5", "--delta", "2", "--n", "200",
                  "--seed", "7", "--out", str(data_csv)])
        out = tmp_path / "ann.csv"
        code = dispatch(["sample", "annealed", "--machine", "sphere-linear",
                         "--data", str(data_csv), "--m-grid", "0,8",
                         "--burn-in", "100", "--samples", "50", "--thin", "1",
                         "--proposal-scale", "0.3", "--seed", "23", "--out", str(out)])
        assert code == 0
        header, rows = read_rows(out)
        assert header[0] == "m" and len(rows) == 2

    def test_reconstruct_and_fit(self, tmp_path):
        curve = tmp_path / "curve.csv"
        dispatch(["analytic", "boltzmann-risk", "--p", "20", "--delta", "2",
                  "--beta-grid", "0,5,10,20,40", "--out", str(curve)])
        entropy = tmp_path / "entropy.csv"
        assert dispatch(["reconstruct", "entropy", "--curve", str(curve),
                         "--anchor-s0", "0", "--out", str(entropy)]) == 0
        header, rows = read_rows(entropy)
        assert header == ["r", "s", "pooled_flag"]
        assert len(rows) == 5
        assert float(rows[0][1]) == 0.0
        fit = tmp_path / "fit.json"
        assert dispatch(["fit", "quadratic", "--entropy", str(entropy),
                         "--out", str(fit)]) == 0
        payload = json.loads(fit.read_text())
        assert set(payload) == {"c0", "c1", "c2", "residual_rms"}
        pred = tmp_path / "pred.csv"
        assert dispatch(["analytic", "gibbs-annealed", "--entropy", str(entropy),
                         "--m-grid", "10,100", "--out", str(pred)]) == 0
        _, rows = read_rows(pred)
        assert float(rows[0][1]) >= float(rows[1][1])  # more data, lower risk


class TestConsoleEntryPoint:
    def test_installed_script_runs(self, tmp_path):
        out = tmp_path / "h.csv"
        proc = subprocess.run(
            ["risklab", "analytic", "hebbian", "--p", "50", "--delta", "1",
             "--m-grid", "2,4", "--out", str(out)],
            capture_output=True,
        )
        assert proc.returncode == 0, proc.stderr.decode()
        assert out.exists()
