"""Error against gate time and kick cap for the 20-ion edge pair, at a
high and a low repetition rate.

    python scripts/pareto_20ion.py --gate-times 1.5 2 2.5 3 --caps 30 50 100
"""

import argparse
import csv
from pathlib import Path

from fastgate.chain import BA133, Chain, calibrate_min_separation, thermal_occupation
from fastgate.optimize import SearchConfig, pareto_scan


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--ions", type=int, default=20)
    p.add_argument("--pair", type=int, nargs=2, default=[0, 1])
    p.add_argument("--gate-times", type=float, nargs="+", default=[1.5, 2.0, 2.5, 3.0], help="in units of tau0")
    p.add_argument("--caps", type=int, nargs="+", default=[30, 50, 100])
    p.add_argument("--rates", type=float, nargs="+", default=[500.0, 25.0], help="MHz")
    p.add_argument("--groups", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("runs/pareto.csv"))
    args = p.parse_args()

    chain = Chain.build(calibrate_min_separation(BA133, "quartic", args.ions, 3e-6))
    m = chain.modes
    th = thermal_occupation(m, 30e-6)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["f_rep_MHz", "gate_time_tau0", "kick_cap", "eps_av", "kick_count", "regime", "error"])
        for rate in args.rates:
            base = SearchConfig(gate_time=m.com_period, group_count=args.groups, f_rep=rate * 1e6, seed=args.seed)
            rows = pareto_scan(m, tuple(args.pair), [g * m.com_period for g in args.gate_times], args.caps, base, th)
            for r in rows:
                s = r["solution"]
                eps = "" if s is None else s.metrics.eps_av
                n = "" if s is None else s.metrics.kick_count
                w.writerow([rate, r["gate_time"] / m.com_period, r["kick_cap"], eps, n, "" if s is None else s.regime, r["error"] or ""])
                print(f"{rate:6.1f} MHz  {r['gate_time'] / m.com_period:4.2f} tau0  cap {r['kick_cap']}  eps {eps}")


if __name__ == "__main__":
    main()
