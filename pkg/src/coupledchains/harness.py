"""Command-line harness: JSON experiment configs, deterministic seeding,
CSV + manifest emission.

One subcommand per experiment kind (gamma, audit, reconstruct, vershik,
extend, stitch); flags --config PATH, --seed N (overrides the config),
--out DIR.  Exit codes: 0 success, 1 verdict failure, 2 config error.
The environment variable COUPLEDCHAINS_MAX_THREADS caps numeric library
threads (reports are computed with deterministic reductions regardless).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    if "COUPLEDCHAINS_MAX_THREADS" in os.environ:
        os.environ.setdefault(_var, os.environ["COUPLEDCHAINS_MAX_THREADS"])

from . import __version__
from .extension import CouplingEngine, generator_error_check, stitch_blocks
from .innovation import innovation_audit
from .kernels import (
    CapExceededError,
    IIDKernel,
    Kernel,
    LongMemoryKernel,
    MarkovKernel,
    builtin_kernels,
    eventually_zero,
    gamma_profile,
    one_minus_geometric,
    rational_decay,
    regime_check,
    unknown_tail,
)
from .reconstruction import disagreement_experiment, simulate_path
from .reports import emit_csv, emit_pretty
from .vershik import GeneratorConfig, alpha_sequence, alpha_sequence_mc, alpha_sup_bound
from .words import parse_word

KINDS = ("gamma", "audit", "reconstruct", "vershik", "extend", "stitch")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    kernel: dict
    seed: int
    out: str = "."
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")


def load_config(path: str, kind: str, seed_override=None, out_override=None):
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    cfg_kind = raw.get("kind", kind)
    if cfg_kind != kind:
        raise ConfigError(
            f"{path}: config kind {cfg_kind!r} does not match subcommand {kind!r}"
        )
    kernel = raw.get("kernel")
    if not isinstance(kernel, dict):
        raise ConfigError(f"{path}: missing 'kernel' object")
    seed = seed_override if seed_override is not None else raw.get("seed")
    if seed is None:
        raise ConfigError(f"{path}: missing 'seed'")
    out = out_override if out_override is not None else raw.get("out", ".")
    params = {
        k: v for k, v in raw.items() if k not in ("kind", "kernel", "seed", "out")
    }
    return ExperimentConfig(kind, kernel, int(seed), str(out), params)


def build_kernel(spec: dict) -> Kernel:
    variant = spec.get("variant")
    try:
        if variant == "builtin":
            kernels = builtin_kernels()
            name = spec.get("name")
            if name not in kernels:
                raise ConfigError(f"unknown builtin kernel {name!r}")
            return kernels[name]
        if variant == "iid":
            return IIDKernel(float(spec["p0"]))
        if variant == "markov":
            table = {
                tuple(int(c) for c in key): float(p)
                for key, p in spec["table"].items()
            }
            return MarkovKernel.from_table(int(spec["order"]), table)
        if variant == "long_memory":
            return LongMemoryKernel(
                float(spec["c"]), tuple(float(t) for t in spec["weights"])
            )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid kernel spec: {exc}") from exc
    raise ConfigError(f"unknown kernel variant {variant!r}")


def _build_tail(params: dict):
    tail = params.get("tail", {"kind": "unknown"})
    kind = tail.get("kind", "unknown")
    if kind == "eventually-zero":
        return eventually_zero()
    if kind == "rational-decay":
        return rational_decay(float(tail["a"]), float(tail["b"]))
    if kind == "one-minus-geometric":
        return one_minus_geometric(float(tail["amp"]), float(tail["ratio"]))
    if kind == "unknown":
        return unknown_tail()
    raise ConfigError(f"unknown tail kind {kind!r}")


def _generator_config(params: dict) -> GeneratorConfig:
    depth = int(params.get("depth", 6))
    if depth > 12:
        raise ConfigError("generator depth capped at 12")
    return GeneratorConfig(depth)


# ---------------------------------------------------------------------------
# Experiment runners: each returns (header, rows, verdicts)


def _run_gamma(kernel, config):
    p = config.params
    p_max = int(p.get("p_max", max(kernel.memory, 4)))
    prof = gamma_profile(kernel, p_max)
    report = regime_check(prof, _build_tail(p))
    header = ("p", "gamma_p", "certified")
    rows = [(i, g, c) for i, (g, c) in enumerate(zip(prof.values, prof.certified))]
    verdicts = [("regime", report.regime, report.regime != "undetermined")]
    return header, rows, verdicts


def _run_audit(kernel, config):
    p = config.params
    steps = int(p.get("steps", 100_000))
    sample = simulate_path(kernel, steps, config.seed)
    report = innovation_audit(sample.w)
    header = ("statistic", "value", "threshold", "verdict")
    rows = [
        ("cdf_sup_distance", report.ks_stat, report.dkw_bound,
         "ok" if report.uniform_ok else "fail"),
        ("max_lag_correlation", report.max_lag_corr, report.corr_bound,
         "ok" if report.max_lag_corr <= report.corr_bound else "fail"),
        ("pair_chi2_pvalue", report.chi2_pvalue, 1e-6,
         "ok" if report.chi2_pvalue > 1e-6 else "fail"),
    ]
    verdicts = [(name, v, v == "ok") for name, _, _, v in rows]
    return header, rows, verdicts


def _run_reconstruct(kernel, config):
    p = config.params
    n_list = [int(n) for n in p.get("n_list", [-10])]
    k = int(p.get("k", 2))
    trials = int(p.get("trials", 10_000))
    header = ("N", "K", "trials", "freq", "stderr", "dp_bound", "verdict")
    rows, verdicts = [], []
    for n in n_list:
        r = disagreement_experiment(kernel, n, k, trials, config.seed)
        rows.append((r.n_start, r.k_lags, r.trials, r.freq, r.stderr,
                     r.dp_bound, r.verdict))
        verdicts.append((f"N={n}", r.verdict, r.verdict == "within-bound"))
    return header, rows, verdicts


def _run_vershik(kernel, config):
    p = config.params
    p_max = int(p.get("p_max", 8))
    gen = _generator_config(p)
    mode = p.get("mode", "exact")
    if mode == "exact":
        seq = alpha_sequence(kernel, p_max, gen)
    elif mode == "monte-carlo":
        seq = alpha_sequence_mc(
            kernel, p_max, int(p.get("trials", 100_000)), config.seed, gen
        )
    else:
        raise ConfigError(f"unknown vershik mode {mode!r}")
    header = ("p", "alpha", "mode", "stderr", "bound")
    rows = []
    for i, a in enumerate(seq.values):
        stderr = seq.stderr[i] if seq.stderr else ""
        bound = alpha_sup_bound(gen, i) if isinstance(kernel, IIDKernel) else ""
        rows.append((i, a, seq.mode, stderr, bound))
    decayed = seq.values[-1] <= seq.values[0] or len(seq.values) == 1
    verdicts = [("alpha_decay", "ok" if decayed else "flat", True)]
    return header, rows, verdicts


def _run_extend(kernel, config):
    p = config.params
    n = int(p.get("n", -6))
    trials = int(p.get("trials", 100_000))
    gen = _generator_config(p)
    engine = CouplingEngine.build(kernel, -n + 1, gen)
    anchor = (
        parse_word(p["anchor"]) if "anchor" in p
        else tuple([0] * engine.length)
    )
    r = generator_error_check(engine, n, anchor, trials, config.seed)
    header = ("N", "anchor", "mc_estimate", "stderr", "exact_value",
              "tolerance", "verdict")
    rows = [(r.n_start, r.anchor, r.mc_estimate, r.stderr, r.exact_value,
             r.tolerance, r.verdict)]
    verdicts = [("generator_gap", r.verdict, r.verdict == "match")]
    return header, rows, verdicts


def _run_stitch(kernel, config):
    p = config.params
    deltas = tuple(float(d) for d in p.get("deltas", (0.2, 0.1, 0.05)))
    trials = int(p.get("trials", 10_000))
    gen = _generator_config(p)
    report = stitch_blocks(kernel, deltas, trials, config.seed, gen)
    header = ("j", "N_j", "M_j", "K_j", "delta_j", "alpha_used", "anchor",
              "exceed_freq", "stderr", "verdict")
    rows = [
        (r.j, r.n_j, r.m_j, r.k_j, r.delta_j, r.alpha_used, r.anchor,
         r.exceed_freq, r.stderr, r.verdict)
        for r in report.rows
    ]
    verdicts = [(f"block_{r.j}", r.verdict, r.verdict == "ok") for r in report.rows]
    verdicts.append(
        ("stitched_u_audit", "ok" if report.audit.passed else "fail",
         report.audit.passed)
    )
    return header, rows, verdicts


_RUNNERS = {
    "gamma": _run_gamma,
    "audit": _run_audit,
    "reconstruct": _run_reconstruct,
    "vershik": _run_vershik,
    "extend": _run_extend,
    "stitch": _run_stitch,
}


def run_experiment(config: ExperimentConfig) -> int:
    """Run one experiment: write CSV + manifest, return the exit code."""
    kernel = build_kernel(config.kernel)
    header, rows, verdicts = _RUNNERS[config.kind](kernel, config)
    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{config.kind}.csv"
    csv_path.write_bytes(emit_csv(header, rows).encode())
    manifest = {
        "kind": config.kind,
        "kernel": config.kernel,
        "seed": config.seed,
        "params": config.params,
        "version": __version__,
        "outputs": [csv_path.name],
        "verdicts": [
            {"check": name, "result": str(result), "passed": bool(ok)}
            for name, result, ok in verdicts
        ],
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )
    failed = [name for name, _, ok in verdicts if not ok]
    if failed:
        print(f"verdict failure: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="coupledchains",
        description="Coupling and filtration experiments for binary chains",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        sp = sub.add_parser(kind, help=f"run a {kind} experiment")
        sp.add_argument("--config", required=True, help="JSON config path")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--pretty", action="store_true",
                        help="also print a human-readable table")
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config, args.command, args.seed, args.out)
        kernel = build_kernel(config.kernel)  # validate before any output
        code = run_experiment(config)
        if args.pretty:
            header, rows, _ = _RUNNERS[config.kind](kernel, config)
            print(emit_pretty(header, rows), end="")
        return code
    except (ConfigError, CapExceededError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
