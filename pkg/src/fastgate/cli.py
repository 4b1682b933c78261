"""Command-line front end.

Exit codes: 0 success, 1 internal error, 2 configuration error, 3 solver
failure, 4 optimization infeasibility, 5 malformed sequence.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .chain import ChainError
from .config import ConfigError, RunConfig
from .kicks import APGSequence, SequenceError, classify_regime, evaluate, expand
from .optimize import GateSolution, InfeasibleError, design_gate, pareto_scan
from .phasespace import ode_gate_error, simulate, two_qubit_phase
from .robustness import (
    ErrorChannels,
    mc_error_distribution,
    mode_shift_scan,
    mode_shift_tolerance,
    population_inversion_bound,
    rep_rate_shift_scan,
    temperature_scan,
    timing_jitter_scan,
)

EXIT_OK, EXIT_INTERNAL, EXIT_CONFIG, EXIT_SOLVER, EXIT_INFEASIBLE, EXIT_SEQUENCE = 0, 1, 2, 3, 4, 5
ORACLE_RTOL = 1e-9


class InternalError(RuntimeError):
    pass


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _document(cfg: RunConfig, seed: int, t0: float, **body) -> dict:
    doc = {"tool": "fastgate", "version": __version__, "config": cfg.doc, "seed": seed}
    doc.update(body)
    doc["wall_time_s"] = time.perf_counter() - t0
    return doc


def _write_json(path: Path, doc: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, default=_jsonable)
        fh.write("\n")


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(f"not serializable: {type(x).__name__}")


def load_sequence(path) -> APGSequence:
    """Read a sequence document, or the sequence inside a solution document."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SequenceError(f"cannot read sequence: {exc}") from None
    if isinstance(doc, dict) and isinstance(doc.get("solution"), dict):
        doc = doc["solution"]
    if isinstance(doc, dict) and "sequence" in doc:
        doc = doc["sequence"]
    if not isinstance(doc, dict):
        raise SequenceError("sequence document must be a JSON object")
    return APGSequence.from_dict(doc)


def chain_report(chain, thermal) -> dict:
    m = chain.modes
    return {
        "positions_m": chain.geometry.positions,
        "min_separation_m": chain.geometry.min_separation,
        "solver_residual": chain.geometry.residual,
        "kappas": list(chain.trap.kappas),
        "frequencies_rad_per_s": m.frequencies,
        "frequency_ratios": m.frequencies / m.frequencies[0],
        "lamb_dicke": m.lamb_dicke,
        "nbar": thermal.occupations,
        "tau0_s": m.com_period,
        "travel_time_s": m.travel_time,
    }


def cmd_chain(cfg: RunConfig, args, out: Path) -> dict:
    t0 = time.perf_counter()
    chain = cfg.chain()
    th = cfg.thermal(chain.modes)
    rep = chain_report(chain, th)
    chain.modes.to_csv(out / "modes.csv")
    _write_csv(out / "positions.csv", ["ion", "z_m"], [[i, repr(float(z))] for i, z in enumerate(chain.geometry.positions)])
    doc = _document(cfg, cfg.seed, t0, chain=rep)
    _write_json(out / "chain.json", doc)
    m = chain.modes
    print(f"{chain.trap.n_ions} ions, min spacing {chain.geometry.min_separation * 1e6:.4f} um")
    print(f"omega_COM {m.frequencies[0]:.6e} rad/s, tau0 {m.com_period:.6e} s, travel {m.travel_time:.6e} s")
    for a in range(m.n_modes):
        print(f"  mode {a:3d}  w/w0 {m.frequencies[a] / m.frequencies[0]:.6f}  eta {m.lamb_dicke[a]:.5f}  nbar {th.occupations[a]:.4f}")
    return doc


def _summary(sol: GateSolution, tau0: float) -> str:
    m = sol.metrics
    return (
        f"eps_av {m.eps_av:.4e}  sdk_cost {m.sdk_cost:.3e}  N {m.kick_count}  "
        f"tau_G {m.gate_time / tau0:.4f} tau0 ({m.gate_time:.4e} s)  {sol.regime}"
    )


def _export_kicks(seq: APGSequence, path: Path) -> None:
    k = expand(seq)
    _write_csv(path, ["time_s", "sign"], [[repr(float(t)), repr(float(c))] for t, c in zip(k.times, k.signs)])


def cmd_design(cfg: RunConfig, args, out: Path) -> dict:
    t0 = time.perf_counter()
    chain = cfg.chain()
    th = cfg.thermal(chain.modes)
    seed = cfg.seed if args.seed is None else args.seed
    scfg = cfg.search(chain.modes, seed, args.threads)
    sol = design_gate(chain.modes, cfg.pair, scfg, th)
    doc = _document(cfg, seed, t0, solution=sol.to_dict(), tau0_s=chain.modes.com_period)
    _write_json(out / "solution.json", doc)
    _export_kicks(sol.sequence, out / "kicks.csv")
    print(_summary(sol, chain.modes.com_period))
    return doc


def _oracle_check(kicks, modes, pair, th, metrics) -> dict:
    traj = simulate(kicks, modes, pair)
    theta = two_qubit_phase(traj)
    eps = ode_gate_error(traj, th)

    def rel(a, b):
        return abs(a - b) / max(abs(a), abs(b), 1e-300)

    d_theta = rel(theta, metrics.theta) if abs(metrics.theta) > 1e-14 else abs(theta - metrics.theta)
    d_eps = rel(eps, metrics.eps_av)
    if d_theta > ORACLE_RTOL or d_eps > ORACLE_RTOL:
        raise InternalError(f"closed form and oracle disagree (theta {d_theta:.2e}, eps {d_eps:.2e})")
    return {"theta_oracle": theta, "eps_av_oracle": eps, "theta_rel_diff": d_theta, "eps_rel_diff": d_eps}


def cmd_evaluate(cfg: RunConfig, args, out: Path) -> dict:
    t0 = time.perf_counter()
    seq = _require_sequence(args)
    chain = cfg.chain()
    th = cfg.thermal(chain.modes)
    kicks = expand(seq)
    metrics = evaluate(kicks, chain.modes, cfg.pair, th, cfg.doc["search"]["eps_pi"])
    oracle = _oracle_check(kicks, chain.modes, cfg.pair, th, metrics)
    regime = classify_regime(metrics.gate_time, chain.modes) if metrics.gate_time > 0 else None
    doc = _document(cfg, cfg.seed, t0, sequence=seq.to_dict(), metrics=metrics.to_dict(), oracle=oracle, regime=regime)
    _write_json(out / "metrics.json", doc)
    print(f"eps_av {metrics.eps_av:.6e}  theta {metrics.theta:.6f}  N {metrics.kick_count}  regime {regime}")
    return doc


def cmd_simulate(cfg: RunConfig, args, out: Path) -> dict:
    t0 = time.perf_counter()
    seq = _require_sequence(args)
    chain = cfg.chain()
    th = cfg.thermal(chain.modes)
    kicks = expand(seq)
    traj = simulate(kicks, chain.modes, cfg.pair)
    spp = cfg.doc["simulate"]["samples_per_period"]
    rows = traj.to_csv(out / "trajectory.csv", spp, chain.modes.com_period)
    doc = _document(
        cfg, cfg.seed, t0,
        sequence=seq.to_dict(), rows=rows, theta=two_qubit_phase(traj), eps_av=ode_gate_error(traj, th),
    )
    _write_json(out / "simulate.json", doc)
    print(f"wrote {rows} trajectory rows; theta {doc['theta']:.6f}, eps_av {doc['eps_av']:.4e}")
    return doc


def _points_csv(path, name, points):
    _write_csv(path, [name, "mean", "std", "error"], [[p.parameter, p.mean, p.std, p.error or ""] for p in points])


def cmd_sweep(cfg: RunConfig, args, out: Path) -> dict:
    t0 = time.perf_counter()
    chain = cfg.chain()
    modes = chain.modes
    th = cfg.thermal(modes)
    sw = cfg.doc["sweep"]
    seed = cfg.seed if args.seed is None else args.seed
    body = {}
    if sw.get("gate_times_tau0") or sw.get("gate_times_s"):
        times = cfg.sweep_gate_times(modes)
        caps = sw.get("kick_caps", [None])
        base = cfg.search(modes, seed, args.threads, gate_time=None if _has_gate_time(cfg) else times[0])
        rows = pareto_scan(modes, cfg.pair, times, caps, base, th)
        table = []
        for r in rows:
            s = r["solution"]
            table.append({
                "gate_time_s": r["gate_time"], "kick_cap": r["kick_cap"], "error": r["error"],
                "solution": None if s is None else s.to_dict(),
            })
        _write_csv(
            out / "pareto.csv",
            ["gate_time_s", "gate_time_tau0", "kick_cap", "eps_av", "kick_count", "regime", "error"],
            [[r["gate_time_s"], r["gate_time_s"] / modes.com_period, "" if r["kick_cap"] is None else r["kick_cap"],
              "" if r["solution"] is None else r["solution"]["metrics"]["eps_av"],
              "" if r["solution"] is None else r["solution"]["metrics"]["kick_count"],
              "" if r["solution"] is None else r["solution"]["regime"], r["error"] or ""] for r in table],
        )
        body["pareto"] = table
    needs_seq = any(k in sw for k in ("rep_rate_shifts", "jitter_sigmas_ns", "mode_shifts", "temperatures_uK"))
    if needs_seq:
        seq = _require_sequence(args)
        base_eps = evaluate(expand(seq), modes, cfg.pair, th).eps_av
        body["base_eps_av"] = base_eps
        if "rep_rate_shifts" in sw:
            pts = rep_rate_shift_scan(seq, modes, cfg.pair, th, sw["rep_rate_shifts"])
            _points_csv(out / "rep_rate.csv", "relative_shift", pts)
            body["rep_rate"] = [p.__dict__ for p in pts]
        if "jitter_sigmas_ns" in sw:
            pts = timing_jitter_scan(seq, modes, cfg.pair, th, [s * 1e-9 for s in sw["jitter_sigmas_ns"]], sw["jitter_samples"], seed)
            _points_csv(out / "jitter.csv", "sigma_s", pts)
            body["jitter"] = [p.__dict__ for p in pts]
        if "mode_shifts" in sw:
            pts = mode_shift_scan(seq, modes, cfg.pair, th, sw["mode_shifts"])
            _points_csv(out / "mode_shift.csv", "relative_shift", pts)
            body["mode_shift"] = [p.__dict__ for p in pts]
            body["mode_shift_tolerance"] = mode_shift_tolerance(seq, modes, cfg.pair, th, sw["mode_shift_threshold"])
        if "temperatures_uK" in sw:
            rows = temperature_scan(seq, modes, cfg.pair, [t * 1e-6 for t in sw["temperatures_uK"]])
            _write_csv(out / "temperature.csv", ["temperature_K", "motional_error", "theta"],
                       [[r["temperature"], r["motional_error"], r["theta"]] for r in rows])
            body["temperature"] = rows
    if not body:
        raise ConfigError("sweep: nothing to do (give gate times or scan lists)")
    doc = _document(cfg, seed, t0, **body)
    _write_json(out / "sweep.json", doc)
    print("sweep written to", out)
    return doc


def _has_gate_time(cfg: RunConfig) -> bool:
    s = cfg.doc["search"]
    return "gate_time_s" in s or "gate_time_tau0" in s


def cmd_mc(cfg: RunConfig, args, out: Path) -> dict:
    t0 = time.perf_counter()
    seq = _require_sequence(args)
    chain = cfg.chain()
    th = cfg.thermal(chain.modes)
    mc = cfg.doc["mc"]
    seed = cfg.seed if args.seed is None else args.seed
    results, summary = [], []
    for eps in mc["eps_pi"]:
        ch = ErrorChannels(eps, tuple(mc["offsets"]), tuple(mc["probs"]))
        pdf = mc_error_distribution(seq, chain.modes, cfg.pair, th, ch, mc["samples_per_class"], mc["m_max"], seed, mc["bins"])
        bound = population_inversion_bound(1.0 - pdf.mean, seq.kick_count, eps)
        results.append({"eps_pi": eps, "pdf": pdf.to_dict(), "inversion_bound_fidelity": bound})
        summary.append([eps, pdf.mean, pdf.std, pdf.ideal, pdf.total_mass, bound])
        tag = f"{eps:.3e}"
        _write_csv(out / f"mc_pdf_{tag}.csv", ["bin_lo", "bin_hi", "mass", "density"],
                   [[lo, hi, m, d] for lo, hi, m, d in zip(pdf.edges[:-1], pdf.edges[1:], pdf.mass, pdf.density)])
    _write_csv(out / "mc_summary.csv", ["eps_pi", "mean", "std", "ideal", "mass", "inversion_bound_fidelity"], summary)
    doc = _document(cfg, seed, t0, sequence=seq.to_dict(), results=results)
    _write_json(out / "mc.json", doc)
    for row in summary:
        print(f"eps_pi {row[0]:.2e}: mean {row[1]:.4e} std {row[2]:.4e} mass {row[4]:.8f}")
    return doc


def _require_sequence(args) -> APGSequence:
    if not args.sequence:
        raise SequenceError("this command needs --sequence <file>")
    return load_sequence(args.sequence)


COMMANDS = {
    "chain": cmd_chain,
    "design": cmd_design,
    "evaluate": cmd_evaluate,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "mc": cmd_mc,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fastgate", description="Design and analyse fast trapped-ion gates.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON run configuration")
        s.add_argument("--out", default=".", help="output directory")
        s.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        s.add_argument("--threads", type=int, default=1, help="worker process cap")
        if name in ("evaluate", "simulate", "sweep", "mc"):
            s.add_argument("--sequence", help="sequence or solution document")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = RunConfig.from_file(args.config)
        if args.seed is not None:
            cfg.doc["seed"] = args.seed
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](cfg, args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ChainError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SequenceError as exc:
        print(f"malformed sequence: {exc}", file=sys.stderr)
        return EXIT_SEQUENCE
    except InternalError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
