import json
import math
import subprocess
import sys
from dataclasses import replace

import numpy as np
import pytest

from mhd2d.checkpoint import read_checkpoint
from mhd2d.cli import main
from mhd2d.config import parse_config
from mhd2d.runner import (
    EXIT_CONFIG,
    EXIT_FAILED,
    EXIT_IO,
    EXIT_NUMERICS,
    EXIT_OK,
    build_initial_state,
    initial_fields,
    integrate,
    main_run,
    run,
    step_plan,
)
from mhd2d.solver import MhdParams

BASE = "nx=16\nny=16\ndt=0.01\nt_end=0.1\nband_limit=4\n"


def cfg(extra="", base=BASE):
    return parse_config(base + extra)


def write_cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def err_json(capsys):
    line = capsys.readouterr().err.strip().splitlines()[-1]
    return json.loads(line)


class TestStepPlan:
    @pytest.mark.parametrize("dt,t_end,n", [(0.1, 1.0, 10), (0.3, 1.0, 4), (0.5, 0.0, 0), (1e-3, 0.5, 500)])
    def test_reaches_t_end(self, dt, t_end, n):
        sizes = step_plan(dt, t_end)
        assert len(sizes) == n
        assert math.fsum(sizes) == pytest.approx(t_end, abs=1e-12)

    def test_times_exact(self):
        s = build_initial_state(cfg())
        times = [st.t for st in integrate(s, MhdParams(), 0.01, 0.1, 0.03)]
        assert times == [0.0, 0.03, 0.06, 0.09, 0.1]


class TestInitialData:
    def test_random_rms(self):
        w, j = initial_fields(cfg("amplitude=2.5\n"))
        for f in (w, j):
            assert math.sqrt(np.mean(f.values**2)) == pytest.approx(2.5, rel=1e-12)
            assert abs(np.mean(f.values)) < 1e-13

    def test_seed_changes_data(self):
        a, _ = initial_fields(cfg("seed=1\n"))
        b, _ = initial_fields(cfg("seed=2\n"))
        assert not np.allclose(a.values, b.values)

    def test_mollified_has_smaller_norm(self):
        c = cfg()
        raw = build_initial_state(c)
        soft = build_initial_state(c, mollifier_epsilon=0.3)
        assert c.params == MhdParams()
        g = raw.grid
        assert g.l2sq(soft.omega_hat.coeffs) < g.l2sq(raw.omega_hat.coeffs)


class TestRun:
    def test_t_end_zero(self):
        c = cfg("t_end=0\n", base="nx=16\nny=16\ndt=0.01\nband_limit=4\n")
        state, series = run(c)
        assert len(series) == 1 and state.t == 0.0
        s0 = build_initial_state(c)
        assert np.array_equal(state.omega_hat.coeffs, s0.omega_hat.coeffs)

    def test_blowup_marks_series(self):
        c = cfg("initial_data=taylor_green\namplitude=1e7\ncfl_max=1e9\ndt=0.05\nt_end=1\n",
                base="nx=16\nny=16\n")
        state, series = run(c)
        assert series.failed and "blow-up" in series.failure
        assert state.t < 1.0

    def test_main_run_files(self, tmp_path):
        c = cfg("preset=magnetic_only\neta=0.1\ncheckpoint=true\n")
        status, data = main_run(c, str(tmp_path))
        assert status == EXIT_OK and data["passed"]
        assert data["hard_monitors"]["prop33"]["value"] <= 1 + 1e-3
        csv_text = (tmp_path / "series.csv").read_text()
        assert len(csv_text.splitlines()) == 1 + data["n_records"] == 12
        assert json.loads((tmp_path / "summary.json").read_text()) == data
        state, _ = run(c)
        back = read_checkpoint(str(tmp_path / "checkpoint.bin"))
        assert back.t == state.t
        assert np.array_equal(back.omega_hat.coeffs, state.omega_hat.coeffs)
        assert np.array_equal(back.j_hat.coeffs, state.j_hat.coeffs)

    def test_deterministic_csv(self, tmp_path):
        c = cfg("nu1=0.01\neta2=0.02\nseed=9\n")
        for name in ("a", "b"):
            main_run(c, str(tmp_path / name))
        assert (tmp_path / "a" / "series.csv").read_bytes() == (tmp_path / "b" / "series.csv").read_bytes()

    def test_no_hard_monitor_without_isotropic_eta(self, tmp_path):
        _, data = main_run(cfg("preset=mixed_case_A\nnu=0.1\neta=0.1\n"), str(tmp_path))
        assert data["hard_monitors"] == {}


class TestCli:
    def test_run_ok(self, tmp_path, capsys):
        path = write_cfg(tmp_path, BASE)
        assert main(["run", "--config", path, "--output", str(tmp_path / "out"),
                     "--preset", "magnetic_only"]) == EXIT_OK
        out = json.loads(capsys.readouterr().out)
        assert out["status"] == "ok" and out["t_final"] == pytest.approx(0.1)
        assert (tmp_path / "out" / "series.csv").exists()

    def test_seed_override(self, tmp_path, capsys):
        path = write_cfg(tmp_path, BASE)
        for seed in ("1", "2"):
            main(["run", "--config", path, "--output", str(tmp_path / seed), "--seed", seed])
        capsys.readouterr()
        assert (tmp_path / "1" / "series.csv").read_text() != (tmp_path / "2" / "series.csv").read_text()

    def test_config_error(self, tmp_path, capsys):
        path = write_cfg(tmp_path, BASE + "nx2=3\n")
        assert main(["run", "--config", path]) == EXIT_CONFIG
        err = err_json(capsys)
        assert err["error"] == "config" and err["line"] == 6 and err["exit_status"] == 2

    def test_missing_config_file(self, tmp_path, capsys):
        assert main(["run", "--config", str(tmp_path / "nope.cfg")]) == EXIT_IO
        assert err_json(capsys)["error"] == "io"

    def test_unwritable_output(self, tmp_path, capsys):
        path = write_cfg(tmp_path, BASE)
        blocker = tmp_path / "file"
        blocker.write_text("")
        assert main(["run", "--config", path, "--output", str(blocker / "sub")]) == EXIT_IO
        err = err_json(capsys)
        assert err["exit_status"] == EXIT_IO and err["path"]

    def test_cfl_violation(self, tmp_path, capsys):
        path = write_cfg(tmp_path, "nx=32\nny=32\ndt=1\nt_end=1\ninitial_data=taylor_green\n")
        assert main(["run", "--config", path, "--output", str(tmp_path)]) == EXIT_NUMERICS
        err = err_json(capsys)
        assert err["error"] == "cfl" and 0 < err["suggested_dt"] < 1

    def test_blowup_exit(self, tmp_path, capsys):
        path = write_cfg(tmp_path, "nx=16\nny=16\ndt=0.05\nt_end=1\ninitial_data=taylor_green\n"
                                   "amplitude=1e7\ncfl_max=1e9\n")
        assert main(["run", "--config", path, "--output", str(tmp_path / "o")]) == EXIT_FAILED
        err = err_json(capsys)
        assert err["error"] == "blowup" and "blow-up" in err["message"]
        assert (tmp_path / "o" / "series.csv").exists()

    def test_bad_arguments(self, capsys):
        assert main(["run"]) == EXIT_CONFIG
        assert main(["frobnicate", "--config", "x"]) == EXIT_CONFIG
        capsys.readouterr()

    def test_bad_preset_and_seed(self, tmp_path, capsys):
        path = write_cfg(tmp_path, BASE)
        assert main(["run", "--config", path, "--preset", "nope"]) == EXIT_CONFIG
        assert main(["run", "--config", path, "--seed", "x"]) == EXIT_CONFIG
        capsys.readouterr()

    def test_swap_test(self, tmp_path, capsys):
        path = write_cfg(tmp_path, BASE + "preset=mixed_case_B\nnu=0.05\neta=0.05\n")
        assert main(["swap-test", "--config", path, "--output", str(tmp_path)]) == EXIT_OK
        out = json.loads(capsys.readouterr().out)
        assert out["passed"] and out["max_deviation"] <= 1e-10
        assert json.loads((tmp_path / "swap.json").read_text()) == out

    def test_swap_test_non_square(self, tmp_path, capsys):
        path = write_cfg(tmp_path, "nx=16\nny=32\ndt=0.01\nt_end=0.1\nband_limit=4\n")
        assert main(["swap-test", "--config", path]) == EXIT_CONFIG
        assert "square" in err_json(capsys)["message"]

    def test_eps_test(self, tmp_path, capsys):
        path = write_cfg(tmp_path, "nx=32\nny=32\ndt=0.005\nt_end=0.1\nband_limit=5\n"
                                   "preset=magnetic_only\neta=0.1\neps_ladder=0.4,0.2,0.1\n")
        assert main(["eps-test", "--config", path, "--output", str(tmp_path)]) == EXIT_OK
        out = json.loads(capsys.readouterr().out)
        assert [d["epsilon"] for d in out["distances"]] == [0.4, 0.2]
        assert (tmp_path / "eps.json").exists()

    def test_eps_test_wrong_params(self, tmp_path, capsys):
        path = write_cfg(tmp_path, BASE + "preset=ideal\nnu=0.1\n")
        assert main(["eps-test", "--config", path, "--preset", "mixed_case_A"]) == EXIT_CONFIG
        assert "magnetic_only" in err_json(capsys)["message"]

    def test_campaign(self, tmp_path, capsys):
        path = write_cfg(tmp_path, "kind=interp_1d\nn_samples=20\nnx=32\nny=32\nband_limit=4\n")
        assert main(["ineq-campaign", "--config", path, "--output", str(tmp_path), "--seed", "5"]) == EXIT_OK
        out = json.loads(capsys.readouterr().out)
        assert out["kind"] == "interp_1d" and out["n_samples"] == 20 and out["seed"] == 5
        assert out["passed"] and out["max_ratio"] <= 1 + 1e-12
        assert json.loads((tmp_path / "report.json").read_text()) == out

    def test_campaign_bad_config(self, tmp_path, capsys):
        path = write_cfg(tmp_path, "kind=nope\nn_samples=2\n")
        assert main(["ineq-campaign", "--config", path]) == EXIT_CONFIG
        capsys.readouterr()

    def test_console_script(self, tmp_path):
        path = write_cfg(tmp_path, BASE)
        proc = subprocess.run([sys.executable, "-m", "mhd2d.cli", "run", "--config", path,
                               "--output", str(tmp_path)], capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        assert json.loads(proc.stdout)["n_records"] == 11
