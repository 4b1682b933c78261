"""Two-stage design of anti-symmetric kick sequences.

Stage 1 searches integer group sizes on a uniform timing grid with every
group's kicks simultaneous; there the gate error is a quadratic function of
the group-size vector, so single-coordinate moves are evaluated in closed
form. Stage 2 expands the best candidates at the repetition rate and refines
group centres by bounded least squares over the gaps between groups.
"""

from __future__ import annotations

import dataclasses
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize

from .chain import ModeStructure, ThermalState
from .kicks import (
    PAIRED,
    SCHEMES,
    TARGET_PHASE,
    UNPAIRED,
    APGSequence,
    GateMetrics,
    SequenceError,
    _SCHEME_FACTORS,
    _pair,
    classify_regime,
    evaluate,
    expand,
    group_offsets,
    motional_weights,
)

_GAP_PENALTY = 10.0


class InfeasibleError(RuntimeError):
    """No sequence satisfies the timing constraints of the configuration."""


@dataclass(frozen=True)
class SearchConfig:
    gate_time: float
    group_count: int = 30
    z_max: int = 5
    f_rep: float | None = 500e6
    eps_pi: float = 1e-4
    grid_mode: bool = False
    scheme: str = UNPAIRED
    restarts: int = 4
    eval_budget: int = 200_000
    seed: int = 0
    kick_cap: int | None = None
    top_m: int = 8
    stage2_restarts: int = 3
    max_nfev: int = 400
    gate_time_slack: float = 0.05
    workers: int = 1

    def __post_init__(self):
        if self.group_count < 2 or self.group_count % 2:
            raise ValueError("group_count must be even and >= 2")
        if self.z_max < 1:
            raise ValueError("z_max must be >= 1")
        if not self.gate_time > 0:
            raise ValueError("gate_time must be positive")
        if self.restarts < 1 or self.stage2_restarts < 1 or self.top_m < 1:
            raise ValueError("restarts, stage2_restarts and top_m must be >= 1")
        if self.f_rep is not None and not self.f_rep > 0:
            raise ValueError("f_rep must be positive or None")
        if not 0 <= self.eps_pi < 1:
            raise ValueError("eps_pi must lie in [0, 1)")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.kick_cap is not None and self.kick_cap < 2:
            raise ValueError("kick_cap must be >= 2")
        if self.grid_mode and self.f_rep is None:
            raise ValueError("grid_mode needs a finite f_rep")

    @property
    def half(self) -> int:
        return self.group_count // 2

    @property
    def spacing(self) -> float:
        return self.gate_time / self.group_count

    @property
    def centre_cap(self) -> float:
        return 0.5 * self.gate_time * (1 + self.gate_time_slack)

    def uniform_times(self) -> np.ndarray:
        return self.spacing * np.arange(1, self.half + 1)

    def effective_z_max(self) -> int:
        """Largest group size that cannot collide on the uniform grid."""
        if self.f_rep is None:
            return self.z_max
        zm = min(self.z_max, int(math.floor(self.spacing * self.f_rep + 1e-9)))
        if zm < 1:
            raise InfeasibleError(
                f"group spacing {self.spacing:.3e} s is shorter than 1/f_rep; reduce group_count"
            )
        return zm

    def replace(self, **kw) -> "SearchConfig":
        return dataclasses.replace(self, **kw)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


# --- stage 1 --------------------------------------------------------------


class Stage1Model:
    """Quadratic form of the gate error for simultaneous groups at fixed
    centres: theta = z.M.z, displacements = A.z."""

    def __init__(self, modes: ModeStructure, pair, thermal: ThermalState | None, times, scheme=UNPAIRED):
        m, n = _pair(modes, pair)
        f_theta, f_beta = _SCHEME_FACTORS[scheme]
        w = modes.frequencies[:, None, None]
        tj, tk = np.asarray(times)[None, :, None], np.asarray(times)[None, None, :]
        per_mode = np.sin(w * np.abs(tj - tk)) - np.sin(w * (tj + tk))
        coef = 2 * modes.lamb_dicke**2 * modes.couplings[m] * modes.couplings[n]
        self.M = f_theta * np.tensordot(coef, per_mode, axes=1)
        self.A = f_beta * (-2.0 * modes.lamb_dicke[:, None]) * np.sin(modes.frequencies[:, None] * np.asarray(times)[None, :])
        self.w = motional_weights(modes, thermal, pair)
        self.G = self.A.T @ (self.w[:, None] * self.A)

    def parts(self, z) -> tuple[float, float]:
        z = np.asarray(z, float)
        return float(z @ self.M @ z), float(z @ self.G @ z)

    def eps_av(self, z) -> float:
        theta, mot = self.parts(z)
        return 2.0 / 3.0 * (abs(theta) - TARGET_PHASE) ** 2 + mot


def _total(eps, half_sum, eps_pi):
    return eps * (1.0 + 2.0 * eps_pi * half_sum)


@dataclass
class _Walker:
    model: Stage1Model
    z_max: int
    cap_half: int | None
    eps_pi: float
    rng: np.random.Generator
    evals: int = 0

    def __post_init__(self):
        self.values = np.arange(-self.z_max, self.z_max + 1)
        self.dM = np.diag(self.model.M).copy()
        self.dG = np.diag(self.model.G).copy()

    def cost(self, z) -> float:
        self.evals += 1
        return _total(self.model.eps_av(z), np.abs(z).sum(), self.eps_pi)

    def random_start(self, h: int) -> np.ndarray:
        """Rounded local minimum of the continuous relaxation from a random point."""
        m = self.model
        x0 = self.rng.uniform(-self.z_max, self.z_max, h)
        theta0 = x0 @ m.M @ x0
        if theta0 != 0:
            x0 *= min(1.0, math.sqrt(TARGET_PHASE / abs(theta0)))

        def f(x):
            mx, gx = m.M @ x, m.G @ x
            th = x @ mx
            d = abs(th) - TARGET_PHASE
            return 2.0 / 3.0 * d * d + x @ gx, 8.0 / 3.0 * d * np.sign(th) * mx + 2 * gx

        res = minimize(f, x0, jac=True, method="L-BFGS-B", bounds=[(-self.z_max, self.z_max)] * h)
        self.evals += int(res.nfev) * h
        return self.project(np.round(res.x).astype(np.int64))

    def project(self, z) -> np.ndarray:
        z = np.array(z, dtype=np.int64)
        if self.cap_half is not None:
            while np.abs(z).sum() > self.cap_half:
                j = self.rng.choice(np.flatnonzero(z))
                z[j] -= np.sign(z[j])
        return z

    def descend(self, z) -> tuple[np.ndarray, float]:
        """Best-improvement single-coordinate descent."""
        z = np.array(z, dtype=np.int64)
        Mz, Gz = self.model.M @ z, self.model.G @ z
        theta, mot = float(z @ Mz), float(z @ Gz)
        l1 = int(np.abs(z).sum())
        cur = _total(2.0 / 3.0 * (abs(theta) - TARGET_PHASE) ** 2 + mot, l1, self.eps_pi)
        while True:
            delta = self.values[None, :] - z[:, None]
            th = theta + 2 * delta * Mz[:, None] + delta**2 * self.dM[:, None]
            mo = mot + 2 * delta * Gz[:, None] + delta**2 * self.dG[:, None]
            l1n = l1 - np.abs(z)[:, None] + np.abs(self.values)[None, :]
            tot = (2.0 / 3.0 * (np.abs(th) - TARGET_PHASE) ** 2 + mo) * (1 + 2 * self.eps_pi * l1n)
            if self.cap_half is not None:
                tot = np.where(l1n > self.cap_half, np.inf, tot)
            self.evals += tot.size
            j, v = np.unravel_index(np.argmin(tot), tot.shape)
            if not tot[j, v] < cur * (1 - 1e-13):
                return z, cur
            d = self.values[v] - z[j]
            Mz += d * self.model.M[:, j]
            Gz += d * self.model.G[:, j]
            z[j] += d
            theta, mot = float(z @ Mz), float(z @ Gz)
            l1 = int(np.abs(z).sum())
            cur = float(tot[j, v])

    def perturb(self, z) -> np.ndarray:
        z = z.copy()
        k = int(self.rng.integers(1, 4))
        idx = self.rng.choice(len(z), size=min(k, len(z)), replace=False)
        z[idx] = self.rng.integers(-self.z_max, self.z_max + 1, len(idx))
        return self.project(z)


@dataclass
class Stage1Result:
    candidates: list  # of (z vector, total cost), best first
    evals: int
    budget_exhausted: bool


def _rank_key(item):
    z, cost, order = item
    return (cost, int(np.abs(z).sum()), order)


def _stage1_chain(model, cfg: SearchConfig, unit: int) -> tuple[list, int]:
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1, unit]))
    cap_half = None if cfg.kick_cap is None else cfg.kick_cap // 2
    walker = _Walker(model, cfg.effective_z_max(), cap_half, cfg.eps_pi, rng)
    archive: dict[tuple, tuple[float, int]] = {}
    z, cur = walker.descend(walker.random_start(cfg.half))
    archive[tuple(z)] = (cur, 0)
    step = 0
    while walker.evals < cfg.eval_budget:
        step += 1
        frac = min(1.0, walker.evals / cfg.eval_budget)
        temp = 0.5 * (1 - frac) + 0.01
        cand, c = walker.descend(walker.perturb(z))
        key = tuple(cand)
        if key not in archive:
            archive[key] = (c, step)
        if c < cur or rng.random() < math.exp(-(math.log(c) - math.log(cur)) / temp):
            z, cur = cand, c
    items = [(np.array(k), v[0], (unit, v[1])) for k, v in archive.items()]
    items.sort(key=_rank_key)
    return items[: cfg.top_m], walker.evals


def stage1_global(modes: ModeStructure, pair, cfg: SearchConfig, thermal: ThermalState | None = None) -> Stage1Result:
    """Ranked integer group-size vectors (positive half) for the uniform grid."""
    model = Stage1Model(modes, pair, thermal, cfg.uniform_times(), cfg.scheme)
    pooled, evals = [], 0
    for unit in range(cfg.restarts):
        items, n = _stage1_chain(model, cfg, unit)
        pooled.extend(items)
        evals += n
    seen, ranked = set(), []
    for z, cost, order in sorted(pooled, key=_rank_key):
        if tuple(z) in seen:
            continue
        seen.add(tuple(z))
        ranked.append((z, cost))
    return Stage1Result(ranked[: cfg.top_m], evals, evals >= cfg.eval_budget * cfg.restarts)


# --- stage 2 --------------------------------------------------------------


class TimingModel:
    """Gate-error residuals of an APG sequence as a function of group centres.

    Residual vector: sqrt(2/3)(|theta| - pi/4) followed by
    sqrt(w_a) * dbeta_a for every mode, so that |r|^2 is the gate error.
    """

    def __init__(self, modes: ModeStructure, pair, thermal, z, f_rep, scheme=UNPAIRED):
        m, n = _pair(modes, pair)
        self.f_theta, self.f_beta = _SCHEME_FACTORS[scheme]
        self.omega = modes.frequencies
        self.eta = modes.lamb_dicke
        self.coef = 2 * modes.lamb_dicke**2 * modes.couplings[m] * modes.couplings[n]
        self.sqw = np.sqrt(motional_weights(modes, thermal, pair))
        self.z = np.asarray(z, dtype=np.int64)
        self.f_rep = f_rep
        sizes = np.abs(self.z)
        self.offsets = np.concatenate([group_offsets(k, f_rep) for k in sizes])
        self.signs = np.concatenate([np.full(k, float(np.sign(zj))) for k, zj in zip(sizes, self.z)])
        self.owner = np.repeat(np.arange(len(self.z)), sizes)

    def min_gaps(self) -> np.ndarray:
        """Smallest allowed gaps: first centre from 0, then centre to centre."""
        sizes = np.abs(self.z).astype(float)
        if self.f_rep is None:
            return np.zeros(len(sizes))
        first = sizes[0] / (2 * self.f_rep)
        rest = (sizes[1:] + sizes[:-1]) / (2 * self.f_rep)
        return np.concatenate([[first], rest])

    def residuals(self, centres, jac: bool = False):
        tau = centres[self.owner] + self.offsets
        c = self.signs
        ph = self.omega[:, None] * tau[None, :]
        E = np.exp(1j * ph)
        cE = c * E
        A = cE.sum(axis=1)
        P = np.cumsum(cE, axis=1) - cE
        pos = np.sum(np.imag(cE * np.conj(P)), axis=1)
        S = 2 * pos - np.imag(A**2)
        theta = self.f_theta * float(self.coef @ S)
        dbeta = self.f_beta * (-2.0 * self.eta) * np.imag(A)
        r = np.concatenate([[math.sqrt(2.0 / 3.0) * (abs(theta) - TARGET_PHASE)], self.sqw * dbeta])
        if not jac:
            return r, theta
        Q = A[:, None] - P - cE
        w = self.omega[:, None]
        dS = 2 * w * c * (np.real(E * np.conj(P)) - np.real(np.conj(E) * Q)) - 2 * w * c * np.real(A[:, None] * E)
        dtheta = self.f_theta * (self.coef @ dS)
        dbeta_k = self.f_beta * (-2.0 * self.eta[:, None]) * w * np.real(cE)
        J = np.vstack([math.sqrt(2.0 / 3.0) * np.sign(theta) * dtheta, self.sqw[:, None] * dbeta_k])
        # kicks move with their group centre
        Jg = np.zeros((J.shape[0], len(self.z)))
        np.add.at(Jg.T, self.owner, J.T)
        return r, theta, Jg

    def eps_av(self, centres) -> float:
        r, _ = self.residuals(centres)
        return float(r @ r)


def _gaps_to_centres(gaps):
    return np.cumsum(gaps)


def _free_refine(model: TimingModel, centres0, cap: float, unit: float, max_nfev: int):
    lb = model.min_gaps() / unit
    g0 = np.maximum(np.diff(np.concatenate([[0.0], centres0])) / unit, lb)
    capu = cap / unit

    def fun(g):
        r, _ = model.residuals(np.cumsum(g) * unit)
        over = max(0.0, np.sum(g) - capu) / capu
        return np.concatenate([r, [_GAP_PENALTY * over]])

    def jac(g):
        _, _, Jc = model.residuals(np.cumsum(g) * unit, jac=True)
        Jgap = np.cumsum(Jc[:, ::-1], axis=1)[:, ::-1] * unit
        active = np.sum(g) > capu
        pen = np.full((1, len(g)), _GAP_PENALTY / capu if active else 0.0)
        return np.vstack([Jgap, pen])

    # least_squares needs a strictly interior start
    g0 = np.maximum(g0, lb + 1e-12 * np.maximum(1.0, lb))
    res = least_squares(fun, g0, jac=jac, bounds=(lb, np.inf), method="trf", x_scale=1.0,
                        xtol=1e-14, ftol=1e-14, gtol=1e-14, max_nfev=max_nfev)
    g = np.maximum(res.x, lb)
    return np.cumsum(g) * unit


def _grid_refine(model: TimingModel, centres0, cap: float, f_rep: float, max_sweeps: int):
    """Discrete coordinate search with every kick on an integer multiple of 1/f_rep."""
    sizes = np.abs(model.z)
    half_width = (sizes - 1) / 2

    def centres_of(s):
        return (s + half_width) / f_rep

    s = np.round(centres0 * f_rep - half_width).astype(np.int64)
    s[0] = max(s[0], 1)
    for g in range(1, len(s)):
        s[g] = max(s[g], s[g - 1] + sizes[g - 1])

    def feasible(s):
        if s[0] < 1 or np.any(s[1:] < s[:-1] + sizes[:-1]):
            return False
        return centres_of(s)[-1] <= cap * (1 + 1e-12)

    if not feasible(s):
        raise InfeasibleError("groups do not fit on the repetition-rate grid within the gate time")
    best = model.eps_av(centres_of(s))
    n = len(s)
    for _ in range(max_sweeps):
        improved = False
        for g in range(n):
            for d in (-2, -1, 1, 2):
                for block in (False, True):
                    trial = s.copy()
                    if block:
                        trial[g:] += d
                    else:
                        trial[g] += d
                    if not feasible(trial):
                        continue
                    e = model.eps_av(centres_of(trial))
                    if e < best * (1 - 1e-13):
                        best, s, improved = e, trial, True
        if not improved:
            break
    return centres_of(s)


@dataclass
class GateSolution:
    sequence: APGSequence
    metrics: GateMetrics
    regime: str
    config: dict = field(default_factory=dict)
    seed: int = 0
    wall_time: float = 0.0
    stage1_cost: float | None = None
    budget_exhausted: bool = False

    @property
    def cost(self) -> float:
        return self.metrics.cost

    def to_dict(self) -> dict:
        return {
            "sequence": self.sequence.to_dict(),
            "metrics": self.metrics.to_dict(),
            "regime": self.regime,
            "config": self.config,
            "seed": self.seed,
            "wall_time_s": self.wall_time,
            "stage1_cost": self.stage1_cost,
            "budget_exhausted": self.budget_exhausted,
        }


def _solution(seq, modes, pair, thermal, cfg: SearchConfig, **extra) -> GateSolution:
    kicks = expand(seq)
    metrics = evaluate(kicks, modes, pair, thermal, cfg.eps_pi)
    regime = classify_regime(metrics.gate_time, modes) if metrics.gate_time > 0 else "none"
    return GateSolution(seq, metrics, regime, cfg.to_dict(), cfg.seed, **extra)


def _better(a: GateSolution | None, b: GateSolution) -> bool:
    """True when b beats a (cost, then fewer kicks)."""
    if a is None:
        return True
    return (b.cost, b.metrics.kick_count) < (a.cost, a.metrics.kick_count)


def _jitter_centres(centres, lb_gaps, cap, rng, scale=0.1):
    gaps = np.diff(np.concatenate([[0.0], centres]))
    gaps = np.maximum(gaps * np.exp(rng.normal(0, scale, len(gaps))), lb_gaps)
    c = np.cumsum(gaps)
    if c[-1] > cap:
        slack = gaps - lb_gaps
        excess = c[-1] - cap
        if slack.sum() > excess:
            gaps = gaps - slack * (excess / slack.sum())
        c = np.cumsum(gaps)
    return c


def stage2_local(
    z,
    modes: ModeStructure,
    pair,
    cfg: SearchConfig,
    thermal: ThermalState | None = None,
    centres=None,
    unit_index: int = 0,
    extra_starts=(),
) -> GateSolution:
    """Refine group centres of the group-size vector ``z`` at ``cfg.f_rep``.

    ``centres`` defaults to the uniform stage-1 grid. ``extra_starts`` are
    further initial centre vectors (same length as the non-zero groups).
    The returned sequence is never worse than the expanded starting point.
    """
    z = np.asarray(z, dtype=np.int64)
    t0 = cfg.uniform_times() if centres is None else np.asarray(centres, float)
    keep = z != 0
    zk, tk = z[keep], t0[keep]
    if len(zk) == 0:
        seq = APGSequence(np.zeros(0), np.zeros(0), cfg.f_rep, cfg.scheme, cfg.z_max)
        return _solution(seq, modes, pair, thermal, cfg)
    start = APGSequence(zk, tk, cfg.f_rep, cfg.scheme, cfg.z_max)
    try:
        expand(start)
    except SequenceError as exc:
        raise InfeasibleError(str(exc)) from exc
    model = TimingModel(modes, pair, thermal, zk, cfg.f_rep, cfg.scheme)
    cap = max(cfg.centre_cap, tk[-1])
    if cfg.grid_mode:
        # the baseline itself must sit on the grid
        tk = _grid_refine(model, tk, cap + len(tk) / cfg.f_rep, cfg.f_rep, max_sweeps=0)
        cap = max(cap, tk[-1])
        start = APGSequence(zk, tk, cfg.f_rep, cfg.scheme, cfg.z_max)
    best = _solution(start, modes, pair, thermal, cfg)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 2, unit_index]))
    lb = model.min_gaps()
    starts = [tk] + [np.asarray(s, float) for s in extra_starts]
    starts += [_jitter_centres(tk, lb, cap, rng) for _ in range(cfg.stage2_restarts - 1)]
    for s0 in starts:
        if cfg.grid_mode:
            out = _grid_refine(model, s0, cap, cfg.f_rep, max_sweeps=cfg.max_nfev)
        else:
            out = _free_refine(model, s0, cap, cfg.spacing, cfg.max_nfev)
        try:
            cand = _solution(APGSequence(zk, out, cfg.f_rep, cfg.scheme, cfg.z_max), modes, pair, thermal, cfg)
        except SequenceError:
            continue
        if _better(best, cand):
            best = cand
    return best


def _refine_unit(args):
    z, modes, pair, thermal, cfg, idx = args
    return stage2_local(z, modes, pair, cfg, thermal, unit_index=idx)


def _refine_both(args):
    z, modes, pair, thermal, cfg, idx = args
    grid = stage2_local(z, modes, pair, cfg.replace(grid_mode=True), thermal, unit_index=idx)
    seq = grid.sequence
    free = stage2_local(
        seq.z, modes, pair, cfg.replace(grid_mode=False), thermal,
        centres=seq.t, unit_index=idx,
    )
    if _better(free, grid):
        # keep containment exact: the grid optimum is itself free-feasible
        free = dataclasses.replace(grid, config=cfg.replace(grid_mode=False).to_dict())
    return grid, free


def design_gate(
    modes: ModeStructure,
    pair,
    cfg: SearchConfig,
    thermal: ThermalState | None = None,
) -> GateSolution:
    """Stage 1, then stage 2 on each promoted candidate; best by eps_av + sdk cost."""
    t_start = time.perf_counter()
    s1 = stage1_global(modes, pair, cfg, thermal)
    jobs = [(z, modes, pair, thermal, cfg, i) for i, (z, _) in enumerate(s1.candidates)]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_refine_unit, jobs))
    else:
        results = [_refine_unit(j) for j in jobs]
    best, best_s1 = None, None
    for sol, (_, c1) in zip(results, s1.candidates):
        if _better(best, sol):
            best, best_s1 = sol, c1
    if best is None:
        raise InfeasibleError("no feasible candidate")
    best.stage1_cost = best_s1
    best.budget_exhausted = s1.budget_exhausted
    best.wall_time = time.perf_counter() - t_start
    return best


def compare_grid_free(
    modes: ModeStructure,
    pair,
    cfg: SearchConfig,
    thermal: ThermalState | None = None,
) -> tuple[GateSolution, GateSolution]:
    """Grid-constrained and free-timing designs from shared stage-1 candidates.

    Each candidate's free-timing refinement starts from its grid optimum, so
    the free result is never worse than the grid result.
    """
    if cfg.f_rep is None:
        raise ValueError("grid comparison needs a finite f_rep")
    t_start = time.perf_counter()
    s1 = stage1_global(modes, pair, cfg, thermal)
    jobs = [(z, modes, pair, thermal, cfg, i) for i, (z, _) in enumerate(s1.candidates)]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_refine_both, jobs))
    else:
        results = [_refine_both(j) for j in jobs]
    best_grid = best_free = None
    for g, f in results:
        if _better(best_grid, g):
            best_grid = g
        if _better(best_free, f):
            best_free = f
    wall = time.perf_counter() - t_start
    for sol in (best_grid, best_free):
        sol.wall_time = wall
        sol.budget_exhausted = s1.budget_exhausted
    return best_grid, best_free


def pareto_scan(modes: ModeStructure, pair, gate_times, kick_caps, cfg: SearchConfig, thermal=None) -> list[dict]:
    """Best solution per (gate time, kick cap) cell.

    Caps are visited in increasing order (``None`` = uncapped last) and each
    cell also inherits the previous cell's solution, which is feasible for the
    looser cap, so error is non-increasing in the cap.
    """
    if not len(gate_times) or not len(kick_caps):
        raise ValueError("gate_times and kick_caps must be non-empty")
    caps = sorted(kick_caps, key=lambda c: math.inf if c is None else c)
    rows = []
    for tg in gate_times:
        carry = None
        for cap in caps:
            row = {"gate_time": float(tg), "kick_cap": cap, "solution": None, "error": None}
            try:
                sol = design_gate(modes, pair, cfg.replace(gate_time=float(tg), kick_cap=cap), thermal)
                if carry is not None and _better(sol, carry):
                    sol = carry
                carry = sol
                row["solution"] = sol
            except (InfeasibleError, SequenceError, ValueError) as exc:
                row["error"] = str(exc)
                row["solution"] = carry
            rows.append(row)
    return rows
