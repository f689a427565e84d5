import copy
import json

import pytest

from regimehjb import cli

ACCEPT_MARKET = {"mu": 0.08, "sigma": 0.2, "r": 0.02, "h": 0.02,
                 "horizon_T": 1.0, "w0": 1.0}


def base_config(**over):
    cfg = {
        "market": dict(ACCEPT_MARKET),
        "grid": {"n_x": 101, "n_t": 500},
        "mc": {"n_paths": 20000, "seed": 2026},
    }
    cfg.update(over)
    return cfg


def write_config(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return str(path)


class TestConfigLoading:
    def test_rejects_unknown_top_level_key(self):
        with pytest.raises(cli.ConfigError, match="unknown key"):
            cli.resolve_config(base_config(bogus=1))

    @pytest.mark.parametrize("section,key", [
        ("market", "drift"), ("grid", "nx"), ("mc", "paths"), ("ode", "dt"),
        ("sweep", "grid"),
    ])
    def test_rejects_unknown_nested_key(self, section, key):
        cfg = base_config()
        cfg.setdefault(section, {})[key] = 1
        with pytest.raises(cli.ConfigError, match="unknown key"):
            cli.resolve_config(cfg)

    def test_market_params_are_required(self):
        cfg = base_config()
        del cfg["market"]["sigma"]
        with pytest.raises(cli.ConfigError, match="sigma"):
            cli.resolve_config(cfg)

    def test_market_types_checked(self):
        cfg = base_config()
        cfg["market"]["mu"] = "fast"
        with pytest.raises(cli.ConfigError, match="must be a number"):
            cli.resolve_config(cfg)

    def test_defaults_materialized(self):
        resolved = cli.resolve_config(base_config())
        assert resolved["variant"] == "derived"
        assert resolved["loss_mode"] == "exponential"
        assert resolved["control_bounds"] == [0.0, 3.0]
        assert resolved["ode"] == {"step": 1e-4, "method": "rk4"}
        assert resolved["grid"]["x_min"] == -4.0 and resolved["grid"]["x_max"] == 4.0
        assert resolved["mc"]["antithetic"] is False

    def test_resolved_config_round_trips(self):
        resolved = cli.resolve_config(base_config())
        again = cli.resolve_config(copy.deepcopy(resolved))
        assert again == resolved

    def test_overrides(self):
        resolved = cli.resolve_config(base_config(), seed_override=7,
                                      variant_override="paper")
        assert resolved["mc"]["seed"] == 7
        assert resolved["variant"] == "paper"

    def test_control_nodes_and_step_are_exclusive(self):
        cfg = base_config()
        cfg["grid"]["control_nodes"] = [0.0, 1.0]
        cfg["grid"]["control_step"] = 0.1
        with pytest.raises(cli.ConfigError, match="not both"):
            cli.resolve_config(cfg)

    def test_linear_loss_needs_sub_unit_bounds(self):
        cfg = base_config(loss_mode="linear")
        with pytest.raises(cli.ConfigError, match="u_hi < 1"):
            cli.resolve_config(cfg)
        cfg["control_bounds"] = [0.0, 0.9]
        cli.resolve_config(cfg)


class TestClosedFormCommand:
    def test_no_hazard_weight(self):
        cfg = base_config()
        cfg["market"]["h"] = 0.0
        report = cli.cmd_closed_form(cli.resolve_config(cfg))
        m = cfg["market"]
        assert report["pi_star"] == (m["mu"] - m["r"]) / m["sigma"] ** 2

    def test_zero_excess_drift_weight(self):
        cfg = base_config()
        cfg["market"].update(mu=0.05, r=0.025, h=0.025)
        report = cli.cmd_closed_form(cli.resolve_config(cfg))
        assert report["pi_star"] == 0.0

    def test_acceptance_weight_and_samples(self):
        report = cli.cmd_closed_form(cli.resolve_config(base_config()))
        assert report["pi_star"] == pytest.approx(1.0, abs=1e-14)
        assert len(report["j_after_samples"]) == 11
        terminal = report["f_samples"]["derived"][-1]
        assert terminal["t"] == 1.0 and terminal["value"] == 0.0


class TestCommandLine:
    def test_ode_check_passes(self, tmp_path, capsys):
        path = write_config(tmp_path, base_config())
        assert cli.main(["ode-check", "--config", path]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["gates"][0]["pass"] is True

    def test_verify_all_gates_pass(self, tmp_path):
        path = write_config(tmp_path, base_config())
        out = tmp_path / "report.json"
        assert cli.main(["verify", "--config", path, "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert {g["name"] for g in report["gates"]} == {
            "oracle_argmax", "ode_vs_closed", "hjb_vs_closed",
            "exact_oracle_vs_closed", "mc_vs_exact"}
        assert all(g["pass"] for g in report["gates"])
        for key in ("params", "variant", "pi_star", "f0_closed", "f0_rk4",
                    "f0_hjb", "value_exact", "value_mc", "mc_stderr", "config"):
            assert key in report

    def test_verify_reports_are_byte_identical(self, tmp_path):
        path = write_config(tmp_path, base_config())
        out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
        assert cli.main(["verify", "--config", path, "--out", str(out1)]) == 0
        assert cli.main(["verify", "--config", path, "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_verify_from_embedded_config_reproduces_report(self, tmp_path):
        path = write_config(tmp_path, base_config())
        out1 = tmp_path / "r1.json"
        cli.main(["verify", "--config", path, "--out", str(out1)])
        embedded = json.loads(out1.read_text())["config"]
        path2 = write_config(tmp_path, embedded, name="embedded.json")
        out2 = tmp_path / "r2.json"
        cli.main(["verify", "--config", path2, "--out", str(out2)])
        assert out1.read_bytes() == out2.read_bytes()

    def test_paper_variant_fails_exact_oracle_gate(self, tmp_path):
        path = write_config(tmp_path, base_config())
        out = tmp_path / "paper.json"
        code = cli.main(["verify", "--config", path, "--variant", "paper",
                         "--out", str(out)])
        assert code == 1
        report = json.loads(out.read_text())
        gates = {g["name"]: g for g in report["gates"]}
        assert gates["exact_oracle_vs_closed"]["pass"] is False
        assert gates["exact_oracle_vs_closed"]["deviation"] > 1e-3
        assert gates["ode_vs_closed"]["pass"] is True  # kernel is variant-agnostic

    def test_unit_sigma_makes_variants_identical(self, tmp_path):
        cfg = base_config()
        cfg["market"]["sigma"] = 1.0
        cfg["grid"]["n_t"] = 1500  # unit sigma triples the top control's vol
        path = write_config(tmp_path, cfg)
        outs = {}
        for variant in ("paper", "derived"):
            out = tmp_path / f"{variant}.json"
            code = cli.main(["verify", "--config", path, "--variant", variant,
                             "--out", str(out)])
            assert code == 0
            outs[variant] = json.loads(out.read_text())
        for key in ("f0_closed", "f0_rk4", "f0_hjb", "value_exact", "value_mc"):
            assert outs["paper"][key] == outs["derived"][key]

    def test_seed_override_changes_mc_leg_only(self, tmp_path):
        path = write_config(tmp_path, base_config())
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        cli.main(["verify", "--config", path, "--seed", "1", "--out", str(out1)])
        cli.main(["verify", "--config", path, "--seed", "2", "--out", str(out2)])
        r1, r2 = json.loads(out1.read_text()), json.loads(out2.read_text())
        assert r1["value_mc"] != r2["value_mc"]
        assert r1["value_exact"] == r2["value_exact"]
        assert r1["f0_hjb"] == r2["f0_hjb"]

    def test_missing_config_file_is_config_error(self, capsys):
        assert cli.main(["verify", "--config", "/no/such/file.json"]) == 2
        assert "configuration error" in capsys.readouterr().err

    def test_cfl_violation_is_config_error_naming_n_t(self, tmp_path, capsys):
        cfg = base_config()
        cfg["grid"] = {"n_x": 801, "n_t": 100}
        path = write_config(tmp_path, cfg)
        assert cli.main(["hjb-solve", "--config", path]) == 2
        err = capsys.readouterr().err
        assert "CFL" in err and "n_t" in err

    def test_mc_estimate_defaults_to_optimal_weight(self, tmp_path, capsys):
        path = write_config(tmp_path, base_config())
        assert cli.main(["mc-estimate", "--config", path]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["pi"] == pytest.approx(1.0, abs=1e-14)
        assert abs(report["mc_mean"] - report["exact_value"]) <= 4 * report["mc_stderr"]


class TestSweepCommand:
    def test_three_point_grid_makes_three_rows(self, tmp_path, capsys):
        cfg = base_config(sweep={"pi_lo": 0.5, "pi_hi": 1.5, "pi_step": 0.5})
        path = write_config(tmp_path, cfg)
        out = tmp_path / "sweep.csv"
        assert cli.main(["sweep", "--config", path, "--out", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "pi,mc_mean,mc_stderr,exact_value,is_mc_argmax,is_analytic_argmax"
        assert len(lines) == 4
        summary = json.loads(capsys.readouterr().out)
        assert summary["analytic_argmax_pi"] == 1.0

    def test_argmax_flags_mark_acceptance_optimum(self, tmp_path):
        cfg = base_config()
        cfg["mc"]["n_paths"] = 100_000
        path = write_config(tmp_path, cfg)
        out = tmp_path / "sweep.csv"
        cli.main(["sweep", "--config", path, "--out", str(out)])
        rows = [ln.split(",") for ln in out.read_text().strip().splitlines()[1:]]
        mc_arg = [float(r[0]) for r in rows if r[4] == "1"]
        an_arg = [float(r[0]) for r in rows if r[5] == "1"]
        assert an_arg == [1.0]
        assert abs(mc_arg[0] - 1.0) <= 0.1

    def test_exact_column_is_seed_independent(self, tmp_path):
        cfg = base_config(sweep={"pi_lo": 0.0, "pi_hi": 2.0, "pi_step": 0.25})
        path = write_config(tmp_path, cfg)
        columns = []
        for seed in ("11", "22"):
            out = tmp_path / f"sweep{seed}.csv"
            cli.main(["sweep", "--config", path, "--seed", seed, "--out", str(out)])
            rows = out.read_text().strip().splitlines()[1:]
            columns.append([ln.split(",")[3] for ln in rows])
        assert columns[0] == columns[1]

    def test_sweep_requires_output_path(self, tmp_path, capsys):
        path = write_config(tmp_path, base_config())
        assert cli.main(["sweep", "--config", path]) == 2
        assert "sweep" in capsys.readouterr().err
