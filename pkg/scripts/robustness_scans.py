"""Drift sensitivity of a subsonic and a supersonic 20-ion design:
repetition-rate shift, timing jitter, mode-frequency shift and temperature.

    python scripts/robustness_scans.py --out runs/robustness
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from fastgate.config import RunConfig
from fastgate.optimize import design_gate
from fastgate.robustness import (
    mode_shift_scan,
    mode_shift_tolerance,
    rep_rate_shift_scan,
    temperature_scan,
    timing_jitter_scan,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _dump(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def run(name, cfg_path, out: Path, samples: int):
    cfg = RunConfig.from_file(cfg_path)
    chain = cfg.chain()
    m, th = chain.modes, cfg.thermal(chain.modes)
    sol = design_gate(m, cfg.pair, cfg.search(m), th)
    seq = sol.sequence
    print(f"{name}: eps_av {sol.metrics.eps_av:.3e}  N {sol.metrics.kick_count}  {sol.regime}")

    rep = rep_rate_shift_scan(seq, m, cfg.pair, th, np.linspace(-0.1, 0.1, 11))
    _dump(out / f"{name}_rep_rate.csv", ["shift", "eps_av", "error"], [[p.parameter, p.mean, p.error or ""] for p in rep])

    jit = timing_jitter_scan(seq, m, cfg.pair, th, np.array([0, 0.1, 0.3, 1, 3]) * 1e-9, samples, cfg.seed)
    _dump(out / f"{name}_jitter.csv", ["sigma_s", "mean", "std"], [[p.parameter, p.mean, p.std] for p in jit])
    print(f"  1 ns jitter excess {jit[3].mean - jit[0].mean:.2e}")

    shifts = np.concatenate([-np.logspace(-5, -1, 41)[::-1], [0.0], np.logspace(-5, -1, 41)])
    ms = mode_shift_scan(seq, m, cfg.pair, th, shifts)
    _dump(out / f"{name}_mode_shift.csv", ["shift", "eps_av"], [[p.parameter, p.mean] for p in ms])
    print(f"  mode-shift tolerance at 1e-3: {mode_shift_tolerance(seq, m, cfg.pair, th):.2e}")

    temps = temperature_scan(seq, m, cfg.pair, np.array([0, 10, 30, 100, 300, 1000]) * 1e-6)
    _dump(out / f"{name}_temperature.csv", ["temperature_K", "motional_error"], [[r["temperature"], r["motional_error"]] for r in temps])


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--out", type=Path, default=Path("runs/robustness"))
    p.add_argument("--samples", type=int, default=1000)
    args = p.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    run("subsonic", CONFIGS / "subsonic_20ion.json", args.out, args.samples)
    run("supersonic", CONFIGS / "supersonic_20ion.json", args.out, args.samples)


if __name__ == "__main__":
    main()
