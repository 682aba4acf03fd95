import json

import pytest

from coupledchains.harness import (
    ConfigError,
    ExperimentConfig,
    build_kernel,
    load_config,
    main,
    run_experiment,
)
from coupledchains.kernels import IIDKernel, LongMemoryKernel, MarkovKernel
from coupledchains.reports import emit_csv, emit_pretty


def write_config(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


GAMMA_CFG = {
    "kind": "gamma",
    "kernel": {"variant": "builtin", "name": "markov1-demo"},
    "seed": 11,
    "p_max": 3,
    "tail": {"kind": "eventually-zero"},
}


# ---------------------------------------------------------------------------
# Config parsing and kernel building


def test_build_kernels():
    assert isinstance(build_kernel({"variant": "iid", "p0": 0.5}), IIDKernel)
    mk = build_kernel(
        {"variant": "markov", "order": 1, "table": {"0": 0.7, "1": 0.4}}
    )
    assert isinstance(mk, MarkovKernel)
    assert mk.probs == (0.7, 0.4)
    lm = build_kernel({"variant": "long_memory", "c": 0.3, "weights": [0.2, 0.1]})
    assert isinstance(lm, LongMemoryKernel)


def test_build_kernel_rejects_unknown():
    with pytest.raises(ConfigError):
        build_kernel({"variant": "nope"})
    with pytest.raises(ConfigError):
        build_kernel({"variant": "iid"})  # missing p0


def test_load_config(tmp_path):
    path = write_config(tmp_path, "g.json", GAMMA_CFG)
    cfg = load_config(path, "gamma")
    assert cfg.kind == "gamma" and cfg.seed == 11
    assert cfg.params["p_max"] == 3
    # Seed override wins.
    assert load_config(path, "gamma", seed_override=99).seed == 99
    # Kind mismatch is a config error.
    with pytest.raises(ConfigError):
        load_config(path, "stitch")


def test_load_config_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(str(path), "gamma")


def test_experiment_config_validates():
    with pytest.raises(ConfigError):
        ExperimentConfig("unknown-kind", {}, 1)
    with pytest.raises(ConfigError):
        ExperimentConfig("gamma", {}, -1)


# ---------------------------------------------------------------------------
# Report emission


def test_emit_csv_format():
    text = emit_csv(("a", "b"), [(1, 0.5), (2, 1.0 / 3.0)])
    lines = text.split("\n")
    assert lines[0] == "a,b"
    assert lines[1] == "1,0.5"
    assert lines[2] == "2,0.33333333333333331"  # 17 significant digits
    assert text.endswith("\n") and "\r" not in text


def test_emit_csv_empty():
    assert emit_csv(("a", "b"), []) == "a,b\n"


def test_emit_pretty_aligns():
    text = emit_pretty(("col", "x"), [(1, 2)])
    assert "col" in text and "---" in text


# ---------------------------------------------------------------------------
# End-to-end runs


def test_gamma_run_writes_outputs(tmp_path):
    cfg = ExperimentConfig(
        "gamma", GAMMA_CFG["kernel"], 11, str(tmp_path),
        {"p_max": 3, "tail": {"kind": "eventually-zero"}},
    )
    assert run_experiment(cfg) == 0
    csv = (tmp_path / "gamma.csv").read_text()
    assert csv.splitlines()[0] == "p,gamma_p,certified"
    assert csv.splitlines()[1] == "0,0.5,exact"
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["kind"] == "gamma"
    assert all(v["passed"] for v in manifest["verdicts"])


def test_cli_round_trip(tmp_path):
    path = write_config(tmp_path, "g.json", GAMMA_CFG)
    out = tmp_path / "out"
    assert main(["gamma", "--config", path, "--out", str(out)]) == 0
    assert (out / "gamma.csv").exists()


def test_cli_determinism(tmp_path):
    cfg = {
        "kind": "reconstruct",
        "kernel": {"variant": "builtin", "name": "markov1-demo"},
        "seed": 5,
        "n_list": [-8],
        "k": 2,
        "trials": 2000,
    }
    path = write_config(tmp_path, "r.json", cfg)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["reconstruct", "--config", path, "--out", str(out)]) == 0
        outs.append((out / "reconstruct.csv").read_bytes())
    assert outs[0] == outs[1]


def test_cli_config_error_no_partial_output(tmp_path):
    path = write_config(
        tmp_path, "bad.json",
        {"kind": "gamma", "kernel": {"variant": "nope"}, "seed": 1},
    )
    out = tmp_path / "out"
    assert main(["gamma", "--config", path, "--out", str(out)]) == 2
    assert not out.exists()


def test_cli_csv_headers(tmp_path):
    cases = {
        "vershik": ({"p_max": 2, "depth": 4}, "p,alpha,mode,stderr,bound"),
        "stitch": (
            {"deltas": [0.2, 0.1], "trials": 500, "depth": 5},
            "j,N_j,M_j,K_j,delta_j,alpha_used,anchor,exceed_freq,stderr,verdict",
        ),
        "extend": (
            {"n": -4, "trials": 2000, "depth": 4},
            "N,anchor,mc_estimate,stderr,exact_value,tolerance,verdict",
        ),
    }
    for kind, (params, header) in cases.items():
        cfg = {
            "kind": kind,
            "kernel": {"variant": "builtin", "name": "markov1-demo"},
            "seed": 9,
            **params,
        }
        path = write_config(tmp_path, f"{kind}.json", cfg)
        out = tmp_path / f"out_{kind}"
        assert main([kind, "--config", path, "--out", str(out)]) == 0
        assert (out / f"{kind}.csv").read_text().splitlines()[0] == header
