"""Branch-resolved phase-space trajectories of every axial mode.

Independent of the closed forms in :mod:`fastgate.kicks`: each mode and
each initial two-qubit state is stepped kick by kick, with exact harmonic
rotation between kicks, and the geometric phase is accumulated from the
quadratures just before each kick.

Quadratures follow ``beta = (X + iY) / sqrt(2)``; free motion is
``dX/dt = w Y``, ``dY/dt = -w X`` and a kick adds ``sqrt(2) c eta B`` to Y
where ``B`` is the spin-weighted coupling of the branch.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .chain import ModeStructure, ThermalState
from .kicks import PAIRED, TARGET_PHASE, FlatKicks, SequenceError, _pair

# initial spin signs (s_m, s_n) of the four two-qubit states
BRANCHES = {"uu": (1, 1), "dd": (-1, -1), "ud": (1, -1), "du": (-1, 1)}
_SAME = ("uu", "dd")


def rotate(x, y, omega, dt):
    c, s = np.cos(omega * dt), np.sin(omega * dt)
    return x * c + y * s, -x * s + y * c


@dataclass(frozen=True)
class Trajectory:
    """Kick-boundary states for every (branch, mode).

    ``before[b]`` and ``after[b]`` have shape (n_kicks, n_modes, 2), holding
    (X, Y) just before and just after each kick. ``kicks_dy[b]`` is the Y
    increment of each kick.
    """

    times: np.ndarray
    omegas: np.ndarray
    before: dict
    after: dict
    kicks_dy: dict
    couplings: dict

    def final(self, branch: str) -> np.ndarray:
        if len(self.times) == 0:
            return np.zeros((len(self.omegas), 2))
        return self.after[branch][-1]

    def sample(self, branch: str, t) -> np.ndarray:
        """(X, Y) of every mode at times ``t`` (shape (len(t), n_modes, 2))."""
        t = np.atleast_1d(np.asarray(t, float))
        out = np.zeros((len(t), len(self.omegas), 2))
        if len(self.times) == 0:
            return out
        idx = np.searchsorted(self.times, t, side="right") - 1
        for i, (ti, k) in enumerate(zip(t, idx)):
            if k < 0:
                continue
            x0, y0 = self.after[branch][k].T
            out[i, :, 0], out[i, :, 1] = rotate(x0, y0, self.omegas, ti - self.times[k])
        return out

    def to_csv(self, path, samples_per_period: float = 200.0, com_period: float | None = None) -> int:
        """Dense export with columns (mode, branch, t, X, Y). Returns row count."""
        grid = dense_times(self, samples_per_period, com_period)
        rows = 0
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["mode", "branch", "t", "X", "Y"])
            for b in BRANCHES:
                xy = self.sample(b, grid)
                for a in range(len(self.omegas)):
                    for ti, (x, y) in zip(grid, xy[:, a, :]):
                        w.writerow([a, b, repr(float(ti)), repr(float(x)), repr(float(y))])
                        rows += 1
        return rows


def dense_times(traj: Trajectory, samples_per_period: float = 200.0, com_period: float | None = None) -> np.ndarray:
    if len(traj.times) == 0:
        return np.zeros(1)
    period = com_period or 2 * np.pi / traj.omegas.min()
    t0, t1 = traj.times[0], traj.times[-1]
    n = max(2, int(np.ceil((t1 - t0) / period * samples_per_period)) + 1)
    return np.linspace(t0, t1, n)


def propagate(times, dy, omegas, x0=None, y0=None):
    """Step every mode through kicks ``dy`` (shape (n_kicks, n_modes))."""
    n_modes = len(omegas)
    x = np.zeros(n_modes) if x0 is None else np.array(x0, float)
    y = np.zeros(n_modes) if y0 is None else np.array(y0, float)
    before = np.zeros((len(times), n_modes, 2))
    after = np.zeros_like(before)
    t_prev = times[0] if len(times) else 0.0
    for j, tj in enumerate(times):
        x, y = rotate(x, y, omegas, tj - t_prev)
        before[j, :, 0], before[j, :, 1] = x, y
        y = y + dy[j]
        after[j, :, 0], after[j, :, 1] = x, y
        t_prev = tj
    return before, after


def simulate(kicks: FlatKicks, modes: ModeStructure, pair, scheme: str | None = None) -> Trajectory:
    if np.any(np.diff(kicks.times) < 0):
        raise SequenceError("kick times must be ordered")
    m, n = _pair(modes, pair)
    factor = 2.0 if (scheme or kicks.scheme) == PAIRED else 1.0
    b = modes.couplings
    before, after, dys, coup = {}, {}, {}, {}
    for name, (sm, sn) in BRANCHES.items():
        coupling = sm * b[m] + sn * b[n]
        dy = factor * np.sqrt(2.0) * np.outer(kicks.signs, coupling * modes.lamb_dicke)
        before[name], after[name] = propagate(kicks.times, dy, modes.frequencies)
        dys[name], coup[name] = dy, coupling
    return Trajectory(kicks.times, modes.frequencies, before, after, dys, coup)


def accumulated_phase(traj: Trajectory) -> dict:
    """Per branch, per mode: phase ``sum_j X(t_j^-) dY_j / 2``."""
    return {
        name: 0.5 * np.sum(traj.before[name][:, :, 0] * traj.kicks_dy[name], axis=0)
        if len(traj.times)
        else np.zeros(len(traj.omegas))
        for name in BRANCHES
    }


def two_qubit_phase(traj: Trajectory) -> float:
    th = accumulated_phase(traj)
    return float(0.25 * np.sum(th["dd"] + th["uu"] - th["du"] - th["ud"]))


def final_displacements(traj: Trajectory) -> dict:
    """Per branch, per mode: ``|dbeta|^2 = (X^2 + Y^2) / 2`` at gate end."""
    return {name: 0.5 * np.sum(traj.final(name) ** 2, axis=1) for name in BRANCHES}


def ode_gate_error(traj: Trajectory, thermal: ThermalState | None = None) -> float:
    """Gate error from branch-resolved end states.

    The motional term is (4/3) sum_a (1/2 + nbar_a) times the branch-averaged
    |dbeta|^2, i.e. (1/3) times the four-branch sum. Expanding the branches
    (B_pm^2 summed over the four states gives 4 (b_m^2 + b_n^2)) shows this
    equals the closed-form normalisation exactly.
    """
    theta = two_qubit_phase(traj)
    nbar = np.zeros(len(traj.omegas)) if thermal is None else thermal.occupations
    disp = final_displacements(traj)
    motional = sum(disp.values()) / len(BRANCHES)
    return float(2.0 / 3.0 * (abs(theta) - TARGET_PHASE) ** 2 + 4.0 / 3.0 * (0.5 + nbar) @ motional)
