import json

import numpy as np
import pytest
from click.testing import CliRunner

from motionprune import (GateConfig, ModelDims, ProjectionWeights, adp_flops,
                         baseline_flops, compare_random, gate_trace,
                         random_retention_probability, run_episode,
                         save_episode, synth_episode, write_embeddings,
                         write_weights)
from motionprune.cli import main
from motionprune.config import ConfigError, parse_config
from motionprune.errors import InvalidArgument

from test_scoring import make_matrix, make_weights

DIMS = ModelDims(hidden=8, mlp=16, layers=2, num_heads=2, head_dim=4,
                 l_vis=12, l_txt=4, l_prop=1, l_act=3)


def small_log(profile="mixed", t=12, seed=3):
    return synth_episode(seed, profile, t, omega=4)


class TestSynthEpisode:
    def test_same_seed_identical(self):
        a = synth_episode(9, "mixed", 6)
        b = synth_episode(9, "mixed", 6)
        assert np.array_equal(a.actions, b.actions)

    def test_coarse_gates_more_than_fine(self):
        cfg = GateConfig()  # extrema rule, the experiment defaults
        gammas = {}
        for profile in ("coarse", "fine"):
            log = synth_episode(5, profile, 30)
            _, gammas[profile] = gate_trace(log.window_deltas(), cfg)
        assert gammas["coarse"] > gammas["fine"]

    def test_two_windows_all_cold(self):
        for profile in ("coarse", "fine", "mixed"):
            log = synth_episode(1, profile, 2)
            _, gamma = gate_trace(log.window_deltas(), GateConfig())
            assert gamma == 0.0

    def test_bad_profile(self):
        with pytest.raises(InvalidArgument):
            synth_episode(0, "wild", 5)


class TestRunEpisode:
    def test_gamma_matches_gate_trace(self):
        log = small_log()
        cfg = GateConfig(omega=4)
        report = run_episode(log, cfg, DIMS, rho=0.5, alpha=(1.0,))
        _, gamma = gate_trace(log.window_deltas(), cfg)
        assert report.gamma == gamma

    def test_conservation(self):
        log = small_log()
        report = run_episode(log, GateConfig(omega=4), DIMS, 0.5, (1.0,))
        assert report.flops_base_total - report.flops_episode == report.savings
        assert report.t == log.num_windows

    def test_window_accounting_and_rho_avg(self):
        log = small_log()
        report = run_episode(log, GateConfig(omega=4), DIMS, 0.5, (1.0,))
        pruned = sum(1 for w in report.windows if w.decision == 1)
        full = sum(1 for w in report.windows if w.decision == 0)
        assert pruned + full == report.t
        assert 0.0 < report.rho_avg <= 1.0
        k = DIMS.kept_tokens(0.5)
        want = (pruned * (k / DIMS.l_vis) + full * 1.0) / report.t
        assert report.rho_avg == pytest.approx(want)

    def test_rho_avg_one_when_never_pruned(self):
        log = small_log(t=2)
        report = run_episode(log, GateConfig(omega=4), DIMS, 0.5, (1.0,))
        assert report.gamma == 0.0
        assert report.rho_avg == 1.0

    def test_zero_motion_log_follows_gate_pattern(self):
        log = small_log()
        log.actions[:] = 0.0
        cfg = GateConfig(rule="mean", omega=4)
        report = run_episode(log, cfg, DIMS, 0.5, (1.0,))
        decisions, gamma = gate_trace([0.0] * log.num_windows, cfg)
        assert [w.decision for w in report.windows] == decisions
        assert report.gamma == gamma

    def test_with_embeddings_full_retention(self):
        rng = np.random.default_rng(60)
        emb = make_matrix(rng, l_vis_views=(6, 6), l_txt=4, l_prop=1, l_act=3, d=8)
        wts = make_weights(rng, d=8, heads=2)
        log = small_log()
        report = run_episode(log, GateConfig(omega=4), DIMS, 1.0, (0.5, 0.5),
                             embeddings=emb, weights=wts)
        pruned_windows = [w for w in report.windows if w.decision == 1]
        base = baseline_flops(DIMS)
        scored = adp_flops(DIMS, 1.0)
        want = (report.t - len(pruned_windows)) * base + len(pruned_windows) * scored
        assert report.flops_episode == want
        for kept in report.kept_indices:
            assert kept == [list(range(6)), list(range(6))]

    def test_dims_mismatch_rejected(self):
        rng = np.random.default_rng(61)
        emb = make_matrix(rng, l_vis_views=(3, 3), d=8)
        wts = make_weights(rng, d=8)
        log = small_log()
        with pytest.raises(InvalidArgument):
            run_episode(log, GateConfig(omega=4), DIMS, 0.5, (0.5, 0.5),
                        embeddings=emb, weights=wts)

    def test_report_json_deterministic(self):
        log = small_log()
        r1 = run_episode(log, GateConfig(omega=4), DIMS, 0.5, (1.0,)).to_json()
        r2 = run_episode(log, GateConfig(omega=4), DIMS, 0.5, (1.0,)).to_json()
        assert r1 == r2


class TestCompareRandom:
    def test_vacuous_target(self):
        log = small_log()
        report = run_episode(log, GateConfig(omega=4), DIMS, 0.5, (1.0,))
        rec = compare_random(report, v=12, m=0, trials=100)
        assert all(e["analytic"] == 1.0 for e in rec["per_k"])

    def test_symmetry_half(self):
        assert random_retention_probability(512, 1, 256, 1) == pytest.approx(0.5)

    def test_analytic_close_to_monte_carlo(self):
        log = small_log()
        report = run_episode(log, GateConfig(omega=4), DIMS, 0.5, (1.0,))
        rec = compare_random(report, v=12, m=3, trials=100_000, seed=1)
        for entry in rec["per_k"]:
            sigma = max(entry["stderr"], 1e-6)
            assert abs(entry["analytic"] - entry["monte_carlo"]) <= 4 * sigma

    def test_deterministic_retention_fraction(self):
        log = small_log()
        report = run_episode(log, GateConfig(omega=4), DIMS, 0.5, (1.0,))
        rec = compare_random(report, v=12, m=2, trials=10,
                             kept_indices=[0, 1, 5], target_indices=[1, 7])
        assert rec["deterministic_retained_fraction"] == 0.5

    def test_m_above_v_rejected(self):
        log = small_log()
        report = run_episode(log, GateConfig(omega=4), DIMS, 0.5, (1.0,))
        with pytest.raises(InvalidArgument):
            compare_random(report, v=4, m=5)


class TestConfig:
    def test_defaults(self):
        cfg = parse_config({})
        assert cfg.gate.rule == "extrema"
        assert cfg.gate.third_case == "force_prune"
        assert cfg.gate.cold_start_windows == 2
        assert cfg.gate.max_consecutive_pruned == 3
        assert cfg.gate.omega == 8
        assert cfg.rho == 0.5
        assert cfg.alpha == (0.4, 0.6)

    def test_bad_rule_names_field(self):
        with pytest.raises(ConfigError) as exc:
            parse_config({"rule": "sometimes"})
        assert exc.value.field == "rule"

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            parse_config({"ruel": "mean"})

    def test_dims_with_preset(self):
        cfg = parse_config({"dims": {"preset": "llama2-7b-oft",
                                     "l_vis": 512, "l_txt": 32}})
        assert cfg.dims.hidden == 4096
        assert cfg.dims.l_vis == 512

    def test_preset_without_lengths_rejected(self):
        with pytest.raises(ConfigError):
            parse_config({"dims-preset": "llama2-7b-oft"})

    def test_round_trip(self):
        src = {"rule": "mean", "tau": 4, "third_case": "inherit",
               "cold_start_windows": 1, "max_consecutive_pruned": 2,
               "omega": 4, "rho": 0.3, "alpha": [1.0], "scoring_layer": 0}
        cfg = parse_config(src)
        assert parse_config(cfg.to_dict()).to_dict() == cfg.to_dict()


class TestCli:
    def _episode(self, tmp_path, t=10, omega=4):
        path = tmp_path / "ep.jsonl"
        save_episode(path, synth_episode(3, "mixed", t, omega=omega))
        return str(path)

    def _dims_flags(self):
        return ["--dims-preset", "llama2-7b-oft", "--l-vis", "512",
                "--l-txt", "32", "--l-prop", "1", "--l-act", "8"]

    def test_simulate_and_determinism(self, tmp_path):
        runner = CliRunner()
        episode = self._episode(tmp_path)
        args = ["simulate", "--episode", episode, "--omega", "4"] + self._dims_flags()
        r1 = runner.invoke(main, args)
        r2 = runner.invoke(main, args)
        assert r1.exit_code == 0, r1.output
        assert r1.output == r2.output
        doc = json.loads(r1.output)
        assert doc["flops_base_total"] - doc["flops_episode"] == doc["savings"]

    def test_gate_subcommand(self, tmp_path):
        runner = CliRunner()
        res = runner.invoke(main, ["gate", "--episode", self._episode(tmp_path),
                                   "--omega", "4"])
        assert res.exit_code == 0, res.output
        doc = json.loads(res.output)
        assert len(doc["decisions"]) == len(doc["deltas"]) == 10

    def test_score_subcommand(self, tmp_path):
        rng = np.random.default_rng(62)
        emb_path, w_path = tmp_path / "e.bin", tmp_path / "w.bin"
        write_embeddings(emb_path, make_matrix(rng))
        write_weights(w_path, make_weights(rng))
        runner = CliRunner()
        res = runner.invoke(main, ["score", "--embeddings", str(emb_path),
                                   "--weights", str(w_path), "--rho", "0.5",
                                   "--alpha", "0.4,0.6"])
        assert res.exit_code == 0, res.output
        doc = json.loads(res.output)
        assert doc["k"] == 6
        assert doc["k_c"] == [2, 4]

    def test_flops_subcommand(self):
        runner = CliRunner()
        res = runner.invoke(main, ["flops", "--rho-grid", "0.5,1.0",
                                   "--gamma", "0.5", "--t", "10"] + self._dims_flags())
        assert res.exit_code == 0, res.output
        rows = json.loads(res.output)["rows"]
        assert len(rows) == 2
        assert rows[0]["flops_adp"] < rows[0]["flops_base"]

    def test_stats_subcommand(self, tmp_path):
        scores = tmp_path / "scores.csv"
        scores.write_text("0,1,1,1,1\n1,1,0,0,0\n")
        runner = CliRunner()
        res = runner.invoke(main, ["stats", "--scores", str(scores)])
        assert res.exit_code == 0, res.output
        lines = res.output.strip().splitlines()
        assert lines[0].startswith("layer,")
        assert lines[1].startswith("0,4,4,")

    def test_compare_random_subcommand(self):
        runner = CliRunner()
        res = runner.invoke(main, ["compare-random", "--v", "512", "--m", "1",
                                   "--k", "256", "--trials", "2000"])
        assert res.exit_code == 0, res.output
        doc = json.loads(res.output)
        assert doc["analytic"] == pytest.approx(0.5)

    def test_synth_subcommand(self, tmp_path):
        out = tmp_path / "synth.jsonl"
        runner = CliRunner()
        res = runner.invoke(main, ["synth", "--seed", "1", "--profile", "coarse",
                                   "--t", "4", "--omega", "2", "--out", str(out)])
        assert res.exit_code == 0, res.output
        assert out.exists()

    def test_validation_error_exits_2(self, tmp_path):
        runner = CliRunner()
        res = runner.invoke(main, ["gate", "--episode", self._episode(tmp_path),
                                   "--tau", "0"])
        assert res.exit_code == 2

    def test_config_file_overrides_flags(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"rule": "mean", "omega": 4}))
        runner = CliRunner()
        episode = self._episode(tmp_path)
        with_flag = runner.invoke(main, ["gate", "--episode", episode,
                                         "--rule", "extrema", "--config", str(cfg)])
        plain = runner.invoke(main, ["gate", "--episode", episode,
                                     "--rule", "mean", "--omega", "4"])
        assert with_flag.exit_code == 0, with_flag.output
        assert with_flag.output == plain.output
