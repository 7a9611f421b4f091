import io

import numpy as np
import pytest

from chac import cli
from chac.config import (
    ConfigError,
    config_digest,
    default_config,
    load_config,
    write_config,
)

SMALL_CFG = """\
[grid]
nx = 32
nt = 64
t_final = 0.25

[model]
rho = 1.0
qtilde = 1.0
cutoff_n = 5.0
sigma_form = power
sigma_c0 = 0.5
sigma_beta = 0.5
sigma_q = 0.3
f_enabled = true

[seeds]
master = 42
replicates = 4

[solver]
tol = 1e-8
max_iter = 40

[observation]
x_star = 1.5707963267948966
eps = auto
"""


@pytest.fixture
def small_cfg_file(tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text(SMALL_CFG)
    return str(p)


class TestConfig:
    def test_load(self, small_cfg_file):
        cfg = load_config(small_cfg_file)
        assert cfg.nx == 32 and cfg.nt == 64
        assert cfg.master_seed == 42 and cfg.replicates == 4
        assert cfg.sigma_form == "power"

    def test_roundtrip(self, small_cfg_file, tmp_path):
        cfg = load_config(small_cfg_file)
        buf = io.StringIO()
        write_config(cfg, buf)
        p = tmp_path / "echo.cfg"
        p.write_text(buf.getvalue())
        assert load_config(str(p)) == cfg

    def test_digest_stable_and_sensitive(self, small_cfg_file):
        cfg = load_config(small_cfg_file)
        assert config_digest(cfg) == config_digest(cfg)
        assert config_digest(cfg) != config_digest(default_config())

    def test_q_bound_named(self):
        with pytest.raises(ConfigError, match=r"q ∈ \(0,1/3\)"):
            default_config(sigma_q=0.5)

    def test_other_bounds(self):
        with pytest.raises(ConfigError):
            default_config(sigma_c0=-1.0)
        with pytest.raises(ConfigError):
            default_config(rho=0.0)
        with pytest.raises(ConfigError):
            default_config(qtilde=-1.0)
        with pytest.raises(ConfigError):
            default_config(tol=0.0)
        with pytest.raises(ConfigError):
            default_config(scheme="leapfrog")
        with pytest.raises(ConfigError):
            default_config(num_modes=128)

    def test_unknown_keys_rejected(self, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text("[grid]\nnx = 32\nwidth = 3\n")
        with pytest.raises(ConfigError, match="unknown key"):
            load_config(str(p))
        p.write_text("[universe]\nanswer = 42\n")
        with pytest.raises(ConfigError, match="unknown configuration section"):
            load_config(str(p))

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config("/nonexistent/path.cfg")

    def test_eps_auto(self):
        cfg = default_config()
        eps = cfg.eps_values()
        assert np.allclose(eps, 0.25 * 2.0 ** -np.arange(7, 2, -1, dtype=float))
        cfg2 = default_config(eps_list=(0.01, 0.02))
        assert tuple(cfg2.eps_values()) == (0.01, 0.02)

    def test_initial_file(self, tmp_path):
        grid_vals = np.linspace(-0.5, 0.5, 32)
        p = tmp_path / "u0.csv"
        np.savetxt(p, grid_vals)
        cfg = default_config(nx=32, nt=64, init_kind="file", init_path=str(p))
        assert np.allclose(cfg.initial_field(), grid_vals)

    def test_observation_defaults(self):
        cfg = default_config()
        assert cfg.observation_times() == (0.25,)
        assert abs(cfg.grid().x[cfg.x_star_index()] - np.pi / 2) <= cfg.grid().dx / 2


class TestCli:
    def test_simulate_deterministic(self, small_cfg_file, tmp_path):
        out1 = tmp_path / "a"
        out2 = tmp_path / "b"
        for out in (out1, out2):
            rc = cli.main(["simulate", "--config", small_cfg_file, "--replicates", "1",
                           "--seed", "42", "--out-dir", str(out)])
            assert rc == 0
        assert (out1 / "path.csv").read_bytes() == (out2 / "path.csv").read_bytes()

    def test_artifacts_carry_header(self, small_cfg_file, tmp_path):
        out = tmp_path / "o"
        assert cli.main(["simulate", "--config", small_cfg_file, "--out-dir", str(out)]) == 0
        for name in ("path.csv", "sup_norms.csv", "sup_moment.csv"):
            first = (out / name).read_text().splitlines()[0]
            assert first.startswith("# config=") and "seed=42" in first

    def test_thread_count_does_not_change_artifacts(self, small_cfg_file, tmp_path):
        out1 = tmp_path / "t1"
        out2 = tmp_path / "t2"
        assert cli.main(["simulate", "--config", small_cfg_file, "--out-dir", str(out1),
                         "--threads", "1"]) == 0
        assert cli.main(["simulate", "--config", small_cfg_file, "--out-dir", str(out2),
                         "--threads", "2"]) == 0
        for name in ("path.csv", "sup_norms.csv", "sup_moment.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_malformed_config_exit_code(self, tmp_path, capsys):
        p = tmp_path / "bad.cfg"
        p.write_text("[model]\nsigma_q = 0.5\n")
        rc = cli.main(["simulate", "--config", str(p), "--out-dir", str(tmp_path / "o")])
        assert rc == 1
        assert "q ∈ (0,1/3)" in capsys.readouterr().err

    def test_blow_up_exit_code(self, tmp_path, capsys):
        p = tmp_path / "explode.cfg"
        p.write_text("[grid]\nnx = 32\nnt = 64\nt_final = 0.25\n"
                     "[model]\ncutoff_n = 1e200\nsigma_form = constant\nsigma_c0 = 50\n")
        rc = cli.main(["simulate", "--config", str(p), "--out-dir", str(tmp_path / "o")])
        assert rc == 2
        assert "blow-up" in capsys.readouterr().err

    def test_picard_writes_diffs(self, small_cfg_file, tmp_path):
        out = tmp_path / "p"
        assert cli.main(["picard", "--config", small_cfg_file, "--out-dir", str(out)]) == 0
        lines = (out / "picard_diffs.csv").read_text().splitlines()
        assert lines[1] == "iteration,diff"
        diffs = [float(row.split(",")[1]) for row in lines[2:]]
        assert diffs[-1] < 1e-8

    def test_density_artifacts(self, small_cfg_file, tmp_path):
        out = tmp_path / "d"
        assert cli.main(["density", "--config", small_cfg_file, "--replicates", "12",
                         "--out-dir", str(out)]) == 0
        samples = (out / "samples.csv").read_text().splitlines()
        assert samples[1] == "sample" and len(samples) == 14
        diag = (out / "diagnostics.txt").read_text()
        assert "kde_integral" in diag

    def test_malliavin_artifacts(self, small_cfg_file, tmp_path):
        out = tmp_path / "m"
        assert cli.main(["malliavin", "--config", small_cfg_file, "--out-dir", str(out)]) == 0
        window = (out / "window.csv").read_text().splitlines()
        assert window[1] == "eps,estimate,stderr"
        hnorm = (out / "hnorm.csv").read_text().splitlines()
        assert len(hnorm) == 2 + 4
        assert all(float(r.split(",")[1]) > 0 for r in hnorm[2:])
        positivity = (out / "positivity.csv").read_text().splitlines()
        assert positivity[1] == "eps,a_term_lower_bound,b_term_mean"

    def test_localize_artifacts(self, small_cfg_file, tmp_path):
        out = tmp_path / "l"
        assert cli.main(["localize", "--config", small_cfg_file, "--out-dir", str(out)]) == 0
        cov = (out / "coverage.csv").read_text().splitlines()
        fractions = [float(r.split(",")[1]) for r in cov[2:]]
        assert all(b >= a for a, b in zip(fractions, fractions[1:]))

    def test_verify_failure_exit_code(self, tmp_path, monkeypatch):
        from chac import acceptance

        def failing():
            return acceptance.CriterionResult(1, "stub", False, "forced failure")

        monkeypatch.setattr(acceptance, "ALL_CRITERIA", [failing])
        rc = cli.main(["verify", "--out-dir", str(tmp_path / "v")])
        assert rc == 3
        report = (tmp_path / "v" / "acceptance.csv").read_text()
        assert "forced failure" in report
