"""Command-line entry point.

Subcommands: simulate, gate, score, flops, stats, compare-random, synth.
Flags mirror the JSON config keys; values from --config override flags.
Exit code 0 on success, 2 on any validation or parse error.
"""

from __future__ import annotations

import csv
import functools
import io
import json
import sys

import click
import numpy as np

from . import __version__
from .calibrate import fit_reported
from .config import parse_config
from .errors import MotionPruneError
from .fileio import read_embeddings, read_weights
from .flops import episode_expected_flops, flops_table
from .gate import gate_trace
from .harness import (compare_random, load_episode, run_episode, save_episode,
                      synth_episode)
from .scoring import prune_pipeline
from .stats import layer_stats_rows, random_retention_probability


def _fail(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(2)


def handled(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except MotionPruneError as exc:
            _fail(str(exc))
        except OSError as exc:
            _fail(str(exc))
    return wrapper


def _emit(text: str, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _parse_alpha(value: str):
    return tuple(float(v) for v in value.split(","))


def config_options(fn):
    opts = [
        click.option("--config", "config_path", type=click.Path(exists=True),
                     help="JSON config file; its values override flags."),
        click.option("--rule", type=click.Choice(["mean", "extrema"]), default=None),
        click.option("--tau", type=int, default=None),
        click.option("--third-case", type=click.Choice(["inherit", "force_prune"]),
                     default=None),
        click.option("--cold-start-windows", type=int, default=None),
        click.option("--max-consecutive-pruned", type=int, default=None),
        click.option("--omega", type=int, default=None),
        click.option("--rho", type=float, default=None),
        click.option("--alpha", type=str, default=None,
                     help="Comma-separated per-view weights, e.g. 0.4,0.6"),
        click.option("--scoring-layer", type=int, default=None),
        click.option("--dims-preset", type=str, default=None),
        click.option("--l-vis", type=int, default=None),
        click.option("--l-txt", type=int, default=None),
        click.option("--l-prop", type=int, default=None),
        click.option("--l-act", type=int, default=None),
        click.option("--no-eos", is_flag=True, default=False,
                     help="Do not count a trailing EOS token in sequence lengths."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def build_config(config_path, rule, tau, third_case, cold_start_windows,
                 max_consecutive_pruned, omega, rho, alpha, scoring_layer,
                 dims_preset, l_vis, l_txt, l_prop, l_act, no_eos):
    obj = {}
    for key, val in (("rule", rule), ("tau", tau), ("third_case", third_case),
                     ("cold_start_windows", cold_start_windows),
                     ("max_consecutive_pruned", max_consecutive_pruned),
                     ("omega", omega), ("rho", rho),
                     ("scoring_layer", scoring_layer)):
        if val is not None:
            obj[key] = val
    if alpha is not None:
        obj["alpha"] = list(_parse_alpha(alpha))
    dims = {}
    for key, val in (("l_vis", l_vis), ("l_txt", l_txt), ("l_prop", l_prop),
                     ("l_act", l_act)):
        if val is not None:
            dims[key] = val
    if no_eos:
        dims["has_eos"] = False
    if dims_preset is not None:
        dims["preset"] = dims_preset
    if dims:
        obj["dims"] = dims
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            try:
                file_obj = json.load(fh)
            except json.JSONDecodeError as exc:
                _fail(f"{config_path}: bad JSON: {exc}")
        if "dims" in file_obj and "dims" in obj:
            merged = dict(obj["dims"])
            merged.update(file_obj["dims"])
            file_obj = dict(file_obj, dims=merged)
        obj.update(file_obj)
    return parse_config(obj)


@click.group()
@click.version_option(__version__)
def main():
    """Motion-gated visual token pruning: replay, scoring, and cost reports."""


@main.command()
@click.option("--episode", "episode_path", type=click.Path(exists=True), required=True)
@click.option("--embeddings", "embeddings_path", type=click.Path(exists=True))
@click.option("--weights", "weights_path", type=click.Path(exists=True))
@click.option("--out", type=click.Path())
@config_options
@handled
def simulate(episode_path, embeddings_path, weights_path, out, **cfg_flags):
    """Run the full pipeline over an episode log and emit a JSON report."""
    cfg = build_config(**cfg_flags)
    if cfg.dims is None:
        _fail("simulate requires model dims (--dims-preset with --l-vis/--l-txt, or --config)")
    if (embeddings_path is None) != (weights_path is None):
        _fail("--embeddings and --weights must be given together")
    emb = read_embeddings(embeddings_path) if embeddings_path else None
    wts = read_weights(weights_path) if weights_path else None
    log = load_episode(episode_path)
    report = run_episode(log, cfg.gate, cfg.dims, cfg.rho, cfg.alpha,
                         embeddings=emb, weights=wts)
    _emit(report.to_json() + "\n", out)


@main.command()
@click.option("--episode", "episode_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path())
@config_options
@handled
def gate(episode_path, out, **cfg_flags):
    """Window distances and gate decisions only; no cost model required."""
    cfg = build_config(**cfg_flags)
    log = load_episode(episode_path)
    if cfg.gate.omega != log.omega:
        log.omega = cfg.gate.omega
    deltas = log.window_deltas()
    decisions, gamma = gate_trace(deltas, cfg.gate)
    doc = {
        "deltas": [float(f"{d:.6g}") for d in deltas],
        "decisions": decisions,
        "gamma": float(f"{gamma:.6g}"),
    }
    _emit(json.dumps(doc, indent=2) + "\n", out)


@main.command()
@click.option("--embeddings", "embeddings_path", type=click.Path(exists=True), required=True)
@click.option("--weights", "weights_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path())
@config_options
@handled
def score(embeddings_path, weights_path, out, **cfg_flags):
    """Importance scores and Top-K selection from embedding/weights files."""
    cfg = build_config(**cfg_flags)
    emb = read_embeddings(embeddings_path)
    wts = read_weights(weights_path)
    _, decision, phi = prune_pipeline(emb, wts, cfg.rho, cfg.alpha)
    doc = {
        "l_vis": int(phi.values.shape[0]),
        "view_lengths": list(phi.view_lengths),
        "phi": [float(f"{v:.6g}") for v in phi.values],
        "k": decision.k,
        "k_c": list(decision.k_c),
        "kept_indices": [idx.tolist() for idx in decision.kept_indices],
    }
    _emit(json.dumps(doc, indent=2) + "\n", out)


@main.command("flops")
@click.option("--rho-grid", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0",
              help="Comma-separated retention ratios.")
@click.option("--gamma", type=float, default=None,
              help="Pruned fraction for the episode expectation.")
@click.option("--t", "t_forwards", type=int, default=None,
              help="Number of forwards for the episode expectation.")
@click.option("--calibrate", is_flag=True, default=False,
              help="Fit sequence lengths and gamma against the reported 7B FLOPs.")
@click.option("--out", type=click.Path())
@config_options
@handled
def flops_cmd(rho_grid, gamma, t_forwards, calibrate, out, **cfg_flags):
    """Cost tables over a retention-ratio grid, optionally plus calibration."""
    if calibrate:
        _emit(json.dumps(fit_reported(), indent=2) + "\n", out)
        return
    cfg = build_config(**cfg_flags)
    if cfg.dims is None:
        _fail("flops requires model dims (--dims-preset with --l-vis/--l-txt, or --config)")
    rhos = [float(v) for v in rho_grid.split(",")]
    rows = flops_table(cfg.dims, rhos)
    for row in rows:
        row["flops_adp_e12"] = f"{row['flops_adp'] / 1e12:.2f}"
        row["flops_base_e12"] = f"{row['flops_base'] / 1e12:.2f}"
        row["ratio"] = float(f"{row['ratio']:.6g}")
        if gamma is not None and t_forwards is not None:
            expected, savings = episode_expected_flops(cfg.dims, row["rho"], gamma, t_forwards)
            row["episode_expected"] = float(f"{float(expected):.6g}")
            row["episode_savings"] = float(f"{float(savings):.6g}")
    _emit(json.dumps({"rows": rows}, indent=2) + "\n", out)


@main.command()
@click.option("--scores", "scores_path", type=click.Path(exists=True), required=True,
              help="CSV with rows: layer, phi_0, phi_1, ...")
@click.option("--out", type=click.Path())
@handled
def stats(scores_path, out):
    """Per-layer participation ratio and entropy, emitted as CSV."""
    layer_scores = {}
    with open(scores_path, "r", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                layer = int(row[0])
                phi = [float(v) for v in row[1:]]
            except ValueError:
                _fail(f"{scores_path}:{lineno}: expected 'layer,phi...' numeric row")
            if not phi:
                _fail(f"{scores_path}:{lineno}: row has no scores")
            layer_scores[layer] = phi
    if not layer_scores:
        _fail(f"{scores_path}: no score rows found")
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["layer", "tokens", "participation_ratio", "entropy_nats",
                     "entropy_bits"])
    for row in layer_stats_rows(layer_scores):
        writer.writerow([row["layer"], row["tokens"],
                         f"{row['participation_ratio']:.6g}",
                         f"{row['entropy_nats']:.6g}",
                         f"{row['entropy_bits']:.6g}"])
    _emit(buf.getvalue(), out)


@main.command("compare-random")
@click.option("--v", "v_tokens", type=int, required=True, help="Total visual tokens.")
@click.option("--m", "m_targets", type=int, required=True, help="Target patch count.")
@click.option("--k", "k_kept", type=int, required=True, help="Tokens kept.")
@click.option("--r", "r_min", type=int, default=None,
              help="Minimum targets retained (default: all m).")
@click.option("--trials", type=int, default=100_000)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path())
@handled
def compare_random_cmd(v_tokens, m_targets, k_kept, r_min, trials, seed, out):
    """Analytic vs Monte-Carlo retention odds under uniform random pruning."""
    r = m_targets if r_min is None else r_min
    analytic = random_retention_probability(v_tokens, m_targets, k_kept, r)
    rng = np.random.default_rng(seed)
    if m_targets == 0:
        mc = 1.0
    else:
        draws = rng.hypergeometric(m_targets, v_tokens - m_targets, k_kept, size=trials)
        mc = float(np.mean(draws >= r))
    doc = {
        "v": v_tokens, "m": m_targets, "k": k_kept, "r": r, "trials": trials,
        "analytic": float(f"{analytic:.6g}"),
        "monte_carlo": float(f"{mc:.6g}"),
    }
    _emit(json.dumps(doc, indent=2) + "\n", out)


@main.command()
@click.option("--seed", type=int, default=42)
@click.option("--profile", type=click.Choice(["coarse", "fine", "mixed"]),
              default="mixed")
@click.option("--t", "t_windows", type=int, default=50)
@click.option("--omega", type=int, default=8)
@click.option("--out", type=click.Path(), required=True)
@handled
def synth(seed, profile, t_windows, omega, out):
    """Generate a deterministic synthetic episode log (JSONL)."""
    log = synth_episode(seed, profile, t_windows, omega=omega)
    save_episode(out, log)
    click.echo(f"wrote {log.actions.shape[0]} steps ({log.num_windows} windows) to {out}")


if __name__ == "__main__":
    main()
