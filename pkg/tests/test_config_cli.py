import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastgate import __version__
from fastgate.cli import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_OK, EXIT_SEQUENCE, EXIT_SOLVER, main
from fastgate.config import DEFAULTS, ConfigError, RunConfig, validate

SMALL = {
    "seed": 3,
    "trap": {"n_ions": 4},
    "pair": [0, 1],
    "search": {"gate_time_tau0": 0.8, "group_count": 16, "restarts": 1, "eval_budget": 2000, "top_m": 2, "stage2_restarts": 1, "max_nfev": 60},
    "sweep": {"rep_rate_shifts": [-0.05, 0.0, 0.05], "jitter_sigmas_ns": [0.0, 1.0], "jitter_samples": 50,
              "mode_shifts": [-1e-3, 0.0, 1e-3], "temperatures_uK": [0, 30]},
    "mc": {"eps_pi": [0.0, 1e-3], "samples_per_class": 50},
    "simulate": {"samples_per_period": 10},
}


def _write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_defaults_merge_and_echo():
    eff = validate({"trap": {"n_ions": 5}})
    assert eff["search"]["f_rep_MHz"] == DEFAULTS["search"]["f_rep_MHz"]
    assert eff["trap"]["s_min_um"] == 3.0 and eff["trap"]["n_ions"] == 5


@pytest.mark.parametrize(
    "doc, where",
    [
        ({}, "trap"),
        ({"trap": {}}, "n_ions"),
        ({"trap": {"n_ions": 5, "spacing": 3}}, "spacing"),
        ({"trap": {"n_ions": 5}, "search": {"gate_time_tau0": -1}}, "search/gate_time_tau0"),
        ({"trap": {"n_ions": 5}, "pair": [0, 7]}, "pair"),
        ({"trap": {"n_ions": 5}, "pair": [2, 2]}, "pair"),
        ({"trap": {"n_ions": 5}, "search": {"gate_time_tau0": 1}, "sweep": {"gate_times_s": [1e-6]}}, "both"),
        ({"trap": {"n_ions": 5, "kappa2_J_per_m2": 1e-13}}, "kappa"),
        ({"trap": {"n_ions": 5}, "mc": {"offsets": [-1], "probs": [0.4]}}, "sum to 1"),
        ({"trap": {"n_ions": 5, "family": "quartic", "omega_t_rad_per_s": 1e6}}, "harmonic"),
    ],
)
def test_invalid_configs_name_their_location(doc, where):
    with pytest.raises(ConfigError, match=where):
        validate(doc)


@settings(max_examples=30, deadline=None)
@given(key=st.text(st.characters(min_codepoint=97, max_codepoint=122), min_size=1, max_size=12))
def test_unknown_keys_are_rejected(key):
    if key in ("seed", "trap", "beam", "pair", "thermal", "search", "sweep", "mc", "simulate"):
        return
    with pytest.raises(ConfigError):
        validate({"trap": {"n_ions": 3}, key: 1})


def test_explicit_trap_parameters():
    cfg = RunConfig.from_dict({"trap": {"n_ions": 2, "family": "harmonic", "omega_t_rad_per_s": 2e6}})
    m = cfg.chain().modes
    assert m.frequencies[0] == pytest.approx(2e6)
    cfg = RunConfig.from_dict({"trap": {"n_ions": 3, "kappa2_J_per_m2": 9e-13, "kappa4_J_per_m4": 5e-3}})
    assert cfg.trap().kappas == (9e-13, 5e-3)


def test_gate_time_units():
    a = RunConfig.from_dict({"trap": {"n_ions": 3}, "search": {"gate_time_tau0": 2.0}})
    m = a.chain().modes
    assert a.gate_time(m) == pytest.approx(2 * m.com_period)
    b = RunConfig.from_dict({"trap": {"n_ions": 3}, "search": {"gate_time_s": 1e-6}})
    assert b.gate_time(m) == 1e-6
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"trap": {"n_ions": 3}}).gate_time(m)


def _read_csv(path):
    raw = path.read_bytes()
    assert b"\r" not in raw
    return raw.decode().rstrip("\n").split("\n")


def test_cli_end_to_end(tmp_path, capsys):
    cfg = _write(tmp_path, SMALL)
    out = tmp_path / "o"
    assert main(["chain", "--config", cfg, "--out", str(out)]) == EXIT_OK
    chain = json.loads((out / "chain.json").read_text())
    assert chain["version"] == __version__ and chain["seed"] == 3 and "wall_time_s" in chain
    assert chain["config"]["search"]["f_rep_MHz"] == 500.0
    assert _read_csv(out / "positions.csv")[0] == "ion,z_m"

    assert main(["design", "--config", cfg, "--out", str(out)]) == EXIT_OK
    sol = json.loads((out / "solution.json").read_text())
    assert sol["solution"]["seed"] == 3
    assert _read_csv(out / "kicks.csv")[0] == "time_s,sign"

    seqp = str(out / "solution.json")
    for cmd, files in [
        ("evaluate", ["metrics.json"]),
        ("simulate", ["simulate.json", "trajectory.csv"]),
        ("sweep", ["sweep.json", "rep_rate.csv", "jitter.csv", "mode_shift.csv", "temperature.csv"]),
        ("mc", ["mc.json", "mc_summary.csv"]),
    ]:
        assert main([cmd, "--config", cfg, "--out", str(out), "--sequence", seqp]) == EXIT_OK, cmd
        for f in files:
            assert (out / f).exists()
            if f.endswith(".csv"):
                assert len(_read_csv(out / f)) >= 2
            else:
                d = json.loads((out / f).read_text())
                assert {"version", "config", "seed", "wall_time_s"} <= d.keys()
    m = json.loads((out / "metrics.json").read_text())
    assert m["metrics"]["eps_av"] == pytest.approx(sol["solution"]["metrics"]["eps_av"], rel=1e-12)
    assert m["oracle"]["eps_rel_diff"] < 1e-9


def test_design_is_reproducible_and_seed_override(tmp_path):
    cfg = _write(tmp_path, SMALL)
    docs = []
    for name, extra in [("a", []), ("b", []), ("c", ["--seed", "11"])]:
        assert main(["design", "--config", cfg, "--out", str(tmp_path / name)] + extra) == EXIT_OK
        docs.append(json.loads((tmp_path / name / "solution.json").read_text()))
    assert docs[0]["solution"]["sequence"] == docs[1]["solution"]["sequence"]
    assert docs[2]["seed"] == 11 and docs[2]["config"]["seed"] == 11


def test_zero_kick_sequence_evaluates_to_phase_error(tmp_path):
    cfg = _write(tmp_path, SMALL)
    seq = tmp_path / "empty.json"
    seq.write_text(json.dumps({"half_groups": [], "f_rep": 5e8}))
    assert main(["evaluate", "--config", cfg, "--out", str(tmp_path), "--sequence", str(seq)]) == EXIT_OK
    m = json.loads((tmp_path / "metrics.json").read_text())
    assert m["metrics"]["eps_av"] == pytest.approx(2 / 3 * (np.pi / 4) ** 2)


def test_exit_config(tmp_path):
    bad = _write(tmp_path, {"trap": {"n_ions": 1}})
    assert main(["chain", "--config", bad, "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["chain", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == EXIT_CONFIG
    (tmp_path / "junk.json").write_text("{not json")
    assert main(["chain", "--config", str(tmp_path / "junk.json"), "--out", str(tmp_path)]) == EXIT_CONFIG
    good = _write(tmp_path, SMALL, "good.json")
    assert main(["chain", "--config", good, "--out", str(tmp_path), "--threads", "0"]) == EXIT_CONFIG


def test_exit_solver(tmp_path, monkeypatch):
    import fastgate.chain as ch

    monkeypatch.setattr(ch, "_solve_reduced", lambda n, a: (np.linspace(-1, 1, n), 1.0))
    assert main(["chain", "--config", _write(tmp_path, SMALL), "--out", str(tmp_path)]) == EXIT_SOLVER


def test_exit_infeasible(tmp_path):
    doc = json.loads(json.dumps(SMALL))
    doc["search"].update({"group_count": 400, "f_rep_MHz": 25.0})
    assert main(["design", "--config", _write(tmp_path, doc), "--out", str(tmp_path)]) == EXIT_INFEASIBLE


@pytest.mark.parametrize(
    "payload",
    ["[1, 2]", "{\"half_groups\": [[1.5, 1e-6]]}", "{\"half_groups\": [[9, 1e-6]]}", "not json",
     "{\"half_groups\": [[3, 1e-6], [3, 1.001e-6]], \"f_rep\": 5e8}"],
)
def test_exit_malformed_sequence(tmp_path, payload):
    seq = tmp_path / "seq.json"
    seq.write_text(payload)
    assert main(["evaluate", "--config", _write(tmp_path, SMALL), "--out", str(tmp_path), "--sequence", str(seq)]) == EXIT_SEQUENCE


def test_missing_sequence_argument(tmp_path):
    assert main(["mc", "--config", _write(tmp_path, SMALL), "--out", str(tmp_path)]) == EXIT_SEQUENCE
