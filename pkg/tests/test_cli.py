"""Config handling, initial data, driver outputs, CLI subcommands."""

import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from oldroyd.checkpoint import load_checkpoint, save_checkpoint
from oldroyd.cli import main
from oldroyd.config import SolverConfig, combined_norm, make_initial
from oldroyd.fields import divergence_vec, l2_norm, linf_norm
from oldroyd.grid import GridSpec
from oldroyd.leray import PhysicalParams
from oldroyd.picard import FlowState
from oldroyd.runner import run_simulation

BASE_DOC = {
    "grid": {"dim": 2, "n": [32, 32]},
    "params": {"re": 1.0, "we": 1.0, "alpha": 0.9, "a": 0.0},
    "dt": 0.01,
    "t_end": 0.1,
    "initial_condition": "taylor_green",
    "amplitude": 1e-3,
}


def make_config(**overrides):
    doc = json.loads(json.dumps(BASE_DOC))
    doc.update(overrides)
    return SolverConfig.from_dict(doc)


class TestConfig:
    def test_from_dict_roundtrip(self):
        config = make_config()
        doc = config.normalized()
        again = SolverConfig.from_dict(doc)
        assert again.normalized() == doc

    def test_lambda_mapping(self):
        doc = json.loads(json.dumps(BASE_DOC))
        doc["params"] = {"re": 1.0, "we": 1.0, "lambda1": 2.0, "lambda2": 1.0}
        config = SolverConfig.from_dict(doc)
        assert config.params.alpha == pytest.approx(0.5)

    def test_validation(self):
        with pytest.raises(ValueError):
            make_config(dt=-1.0)
        with pytest.raises(ValueError):
            make_config(initial_condition="bogus")
        with pytest.raises(ValueError):
            make_config(initial_condition="from_checkpoint")
        with pytest.raises((ValueError, TypeError)):
            make_config(energy={"kappa6": -1.0})

    def test_energy_weights(self):
        config = make_config(energy={"kappa6": 9.0})
        assert config.energy_constants().kappa6 == 9.0


class TestMakeInitial:
    def test_zero_amplitude(self):
        config = make_config(amplitude=0.0, initial_condition="zero")
        state = make_initial(config)
        assert l2_norm(state.u) == 0.0 and l2_norm(state.tau) == 0.0

    def test_zero_kind_nonzero_amplitude_rejected(self):
        with pytest.raises(ValueError):
            make_initial(make_config(amplitude=1.0, initial_condition="zero"))

    @pytest.mark.parametrize("kind", ["taylor_green", "single_mode",
                                      "random_smooth"])
    def test_amplitude_normalization(self, kind):
        config = make_config(initial_condition=kind, amplitude=2e-3)
        state = make_initial(config)
        assert combined_norm(state.u, state.tau) == pytest.approx(
            2e-3, rel=1e-10)
        assert l2_norm(divergence_vec(state.u)) <= 1e-12

    def test_random_smooth_deterministic(self):
        config = make_config(initial_condition="random_smooth", seed=7)
        s1 = make_initial(config)
        s2 = make_initial(config)
        assert np.array_equal(s1.u.data, s2.u.data)
        assert np.array_equal(s1.tau.data, s2.tau.data)
        s3 = make_initial(make_config(initial_condition="random_smooth",
                                      seed=8))
        assert not np.array_equal(s1.u.data, s3.u.data)


class TestCheckpoint:
    def test_round_trip(self, rng, tmp_path):
        from conftest import random_symtensor, random_vector

        grid = GridSpec.make(2, 32)
        params = PhysicalParams(re=1.5, we=0.5, alpha=0.25, a=-0.5)
        state = FlowState(t=1.25, u=random_vector(rng, grid, div_free=True),
                          tau=random_symtensor(rng, grid))
        path = tmp_path / "state.obck"
        save_checkpoint(path, state, params)
        loaded, lparams = load_checkpoint(path)
        assert loaded.t == state.t
        assert lparams == params
        assert np.array_equal(loaded.u.data, state.u.data)
        assert np.array_equal(loaded.tau.data, state.tau.data)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.obck"
        path.write_bytes(b"NOPE" + b"\0" * 64)
        with pytest.raises(ValueError):
            load_checkpoint(path)


class TestRunSimulation:
    def test_zero_run_certified(self, tmp_path):
        config = make_config(amplitude=0.0, initial_condition="zero")
        code = run_simulation(config, tmp_path)
        assert code == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["certified"] is True
        assert summary["max_F"] == 0.0
        rows = (tmp_path / "timeseries.csv").read_text().strip().split("\n")
        assert len(rows) == 1 + 10 + 1  # header + 10 outputs + t=0

    def test_csv_row_count(self, tmp_path):
        config = make_config(output_every=3, t_end=0.1)  # 10 steps
        run_simulation(config, tmp_path)
        rows = (tmp_path / "timeseries.csv").read_text().strip().split("\n")
        # header + t=0 + floor(10/3) outputs + final partial step row
        assert len(rows) == 1 + 1 + 3 + 1

    def test_determinism_byte_level(self, tmp_path):
        config = make_config(initial_condition="random_smooth", seed=11)
        run_simulation(config, tmp_path / "a")
        run_simulation(config, tmp_path / "b")
        for name in ("timeseries.csv", "monitors.csv"):
            assert (tmp_path / "a" / name).read_bytes() == \
                (tmp_path / "b" / name).read_bytes(), name

    def test_checkpoint_resume_equivalence(self, tmp_path):
        config = make_config(t_end=0.5, checkpoint_every=25)
        run_simulation(config, tmp_path / "full")
        half = make_config(t_end=0.25)
        run_simulation(half, tmp_path / "half")
        resume_doc = json.loads(json.dumps(BASE_DOC))
        resume_doc.update({
            "t_end": 0.5,
            "initial_condition": "from_checkpoint",
            "checkpoint_path": str(tmp_path / "half" / "final.obck"),
        })
        resumed = SolverConfig.from_dict(resume_doc)
        run_simulation(resumed, tmp_path / "resumed")
        full_state, _ = load_checkpoint(tmp_path / "full" / "final.obck")
        res_state, _ = load_checkpoint(tmp_path / "resumed" / "final.obck")
        assert abs(full_state.t - res_state.t) <= 1e-12
        assert linf_norm(full_state.u - res_state.u) <= 1e-12
        assert linf_norm(full_state.tau - res_state.tau) <= 1e-12

    def test_emit_pressure(self, tmp_path):
        config = make_config()
        run_simulation(config, tmp_path, emit_pressure=True)
        assert (tmp_path / "pressure.csv").exists()

    def test_summary_fields(self, tmp_path):
        config = make_config()
        run_simulation(config, tmp_path)
        summary = json.loads((tmp_path / "summary.json").read_text())
        for key in ("certified", "max_F", "delta0", "big_c", "m1", "steps",
                    "final_t", "exit_reason", "iterations_histogram",
                    "kernel_backend", "wall_time_s", "config"):
            assert key in summary
        assert summary["steps"] == 10
        assert summary["final_t"] == pytest.approx(0.1)


class TestCliCommands:
    def _write_config(self, tmp_path, **overrides):
        doc = json.loads(json.dumps(BASE_DOC))
        doc.update(overrides)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(doc))
        return path

    def test_run_and_certify(self, tmp_path, capsys):
        cfg = self._write_config(tmp_path)
        out = tmp_path / "out"
        assert main(["run", "--config", str(cfg),
                     "--output-dir", str(out)]) == 0
        assert (out / "summary.json").exists()
        assert main(["certify", str(out / "timeseries.csv")]) == 0
        result = json.loads(capsys.readouterr().out)
        assert result["status"] in ("Certified", "Uncertified")

    def test_normalize(self, tmp_path, capsys):
        cfg = self._write_config(tmp_path)
        assert main(["normalize", "--config", str(cfg)]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["picard_tol"] == 1e-10
        assert doc["params"]["alpha"] == 0.9
        # normalized output round-trips through the parser unchanged
        assert SolverConfig.from_dict(doc).normalized() == doc

    def test_seed_override(self, tmp_path, capsys):
        cfg = self._write_config(tmp_path, initial_condition="random_smooth")
        main(["normalize", "--config", str(cfg), "--seed", "42"])
        doc = json.loads(capsys.readouterr().out)
        assert doc["seed"] == 42

    def test_sweep(self, tmp_path):
        cfg = self._write_config(tmp_path, t_end=0.02)
        out = tmp_path / "sweep"
        env_threads = os.environ.get("OB_THREADS")
        os.environ["OB_THREADS"] = "1"
        try:
            assert main(["sweep", "--config", str(cfg),
                         "--output-dir", str(out),
                         "--alpha", "0.5,0.9", "--amplitude", "1e-4"]) == 0
        finally:
            if env_threads is None:
                os.environ.pop("OB_THREADS", None)
            else:
                os.environ["OB_THREADS"] = env_threads
        subdirs = sorted(p.name for p in out.iterdir())
        assert subdirs == ["alpha_0.5_amp_0.0001", "alpha_0.9_amp_0.0001"]
        for sub in subdirs:
            assert (out / sub / "summary.json").exists()

    def test_entry_point(self, tmp_path):
        cfg = self._write_config(tmp_path, t_end=0.02)
        proc = subprocess.run(
            [sys.executable, "-m", "oldroyd.cli", "run",
             "--config", str(cfg), "--output-dir", str(tmp_path / "o")],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
