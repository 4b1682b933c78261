"""State-dependent kick sequences and their closed-form gate metrics.

A gate is a time-ordered list of instantaneous kicks acting identically on
both target ions. Each kick carries an *effective* sign ``c_j``: the beam
direction times the spin-flip parity accumulated so far, i.e. the direction
the kick displaces the initial two-qubit state in phase space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .chain import ModeStructure, ThermalState

UNPAIRED = "unpaired"
PAIRED = "paired"
SCHEMES = (UNPAIRED, PAIRED)
TARGET_PHASE = np.pi / 4

# phase and displacement multipliers of a paired (double) kick
_SCHEME_FACTORS = {UNPAIRED: (1.0, 1.0), PAIRED: (4.0, 2.0)}


class SequenceError(ValueError):
    """Malformed or physically infeasible kick sequence."""


def _check_scheme(scheme: str) -> str:
    if scheme not in SCHEMES:
        raise SequenceError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    return scheme


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class APGSequence:
    """Anti-symmetric pulse groups, stored as the positive-time half.

    Group ``j`` holds ``|z[j]|`` kicks of effective sign ``sign(z[j])`` centred
    on ``t[j] > 0``; the mirrored group ``(-z[j], -t[j])`` is implied.
    ``f_rep=None`` means kicks within a group are simultaneous.
    """

    z: np.ndarray
    t: np.ndarray
    f_rep: float | None = None
    scheme: str = UNPAIRED
    z_max: int = 5

    def __post_init__(self):
        z = np.asarray(self.z)
        t = np.asarray(self.t, dtype=float)
        if z.ndim != 1 or z.shape != t.shape:
            raise SequenceError("z and t must be 1-D arrays of equal length")
        if not np.all(np.equal(np.mod(z, 1), 0)):
            raise SequenceError("group sizes must be integers")
        z = z.astype(np.int64)
        if np.any(np.abs(z) > self.z_max):
            raise SequenceError(f"|z| exceeds z_max={self.z_max}")
        if len(t) and (t[0] <= 0 or np.any(np.diff(t) <= 0)):
            raise SequenceError("group centres must be positive and strictly increasing")
        if self.f_rep is not None and not self.f_rep > 0:
            raise SequenceError("f_rep must be positive or None")
        _check_scheme(self.scheme)
        object.__setattr__(self, "z", _frozen(z, np.int64))
        object.__setattr__(self, "t", _frozen(t, float))
        assert self.kick_count % 2 == 0

    @property
    def half_sum(self) -> int:
        return int(np.abs(self.z).sum())

    @property
    def kick_count(self) -> int:
        return 2 * self.half_sum

    @property
    def pulse_count(self) -> int:
        """Number of pi-pulses; a paired kick uses two."""
        return self.kick_count * (2 if self.scheme == PAIRED else 1)

    @property
    def half_groups(self) -> list[tuple[int, float]]:
        return [(int(a), float(b)) for a, b in zip(self.z, self.t)]

    def nonzero(self) -> "APGSequence":
        keep = self.z != 0
        return APGSequence(self.z[keep], self.t[keep], self.f_rep, self.scheme, self.z_max)

    def replace(self, **kw) -> "APGSequence":
        args = dict(z=self.z, t=self.t, f_rep=self.f_rep, scheme=self.scheme, z_max=self.z_max)
        args.update(kw)
        return APGSequence(**args)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "f_rep": self.f_rep,
            "z_max": self.z_max,
            "half_groups": [[zj, tj] for zj, tj in self.half_groups],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "APGSequence":
        try:
            groups = doc["half_groups"]
            z = [g[0] for g in groups]
            t = [float(g[1]) for g in groups]
            f_rep = doc.get("f_rep")
            return cls(
                np.array(z, dtype=float) if z else np.zeros(0),
                np.array(t),
                None if f_rep is None else float(f_rep),
                doc.get("scheme", UNPAIRED),
                int(doc.get("z_max", 5)),
            )
        except (KeyError, TypeError, IndexError) as exc:
            raise SequenceError(f"malformed sequence document: {exc}") from exc


@dataclass(frozen=True)
class FlatKicks:
    """Individually timed kicks.

    ``signs`` are effective displacement amplitudes; nominally +-1, but any
    real value is allowed (0 = missing kick, used by error models).
    ``group`` maps each kick to a signed group label (+j / -j for the mirror
    of half-group j, 1-based) or 0 for free-form sequences.
    """

    times: np.ndarray
    signs: np.ndarray
    scheme: str = UNPAIRED
    group: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        c = np.asarray(self.signs, dtype=float)
        if t.ndim != 1 or t.shape != c.shape:
            raise SequenceError("times and signs must be 1-D arrays of equal length")
        if np.any(np.diff(t) < 0):
            raise SequenceError("kick times must be non-decreasing")
        _check_scheme(self.scheme)
        object.__setattr__(self, "times", _frozen(t, float))
        object.__setattr__(self, "signs", _frozen(c, float))
        if self.group is not None:
            object.__setattr__(self, "group", _frozen(self.group, np.int64))

    def __len__(self) -> int:
        return len(self.times)

    @property
    def beam_directions(self) -> np.ndarray:
        """Beam direction kappa_j of each pulse (unpaired: c_j (-1)^(j+1))."""
        if self.scheme == PAIRED:
            return np.sign(self.signs)
        parity = np.where(np.arange(len(self)) % 2 == 0, 1.0, -1.0)
        return np.sign(self.signs) * parity

    def with_signs(self, signs) -> "FlatKicks":
        return FlatKicks(self.times, signs, self.scheme, self.group)

    def shifted(self, dt: float) -> "FlatKicks":
        return FlatKicks(self.times + dt, self.signs, self.scheme, self.group)


def group_offsets(n: int, f_rep: float | None) -> np.ndarray:
    """Offsets of ``n`` kicks centred on zero at spacing ``1/f_rep``."""
    if f_rep is None or n == 0:
        return np.zeros(n)
    return (np.arange(n) - (n - 1) / 2) / f_rep


def positive_half(z, t, f_rep) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Kick times, signs and group indices of the positive-time half."""
    times, signs, idx = [], [], []
    for j, (zj, tj) in enumerate(zip(z, t)):
        n = abs(int(zj))
        if n == 0:
            continue
        times.append(tj + group_offsets(n, f_rep))
        signs.append(np.full(n, float(np.sign(zj))))
        idx.append(np.full(n, j))
    if not times:
        return np.zeros(0), np.zeros(0), np.zeros(0, dtype=np.int64)
    return np.concatenate(times), np.concatenate(signs), np.concatenate(idx)


def _group_edges(seq: APGSequence) -> list[tuple[int, float, float]]:
    edges = []
    for j, (zj, tj) in enumerate(zip(seq.z, seq.t)):
        n = abs(int(zj))
        if n:
            off = group_offsets(n, seq.f_rep)
            edges.append((j + 1, tj + off[0], tj + off[-1]))
    return edges


def check_feasible(seq: APGSequence, rtol: float = 1e-9) -> None:
    """Raise SequenceError when expanded groups collide at ``f_rep``."""
    if seq.f_rep is None:
        return
    gap = (1 - rtol) / seq.f_rep
    edges = _group_edges(seq)
    if edges and 2 * edges[0][1] < gap:
        raise SequenceError(
            f"group {edges[0][0]} overlaps its mirror (first kick at {edges[0][1]:.4e} s)"
        )
    for (ja, _, hi), (jb, lo, _) in zip(edges, edges[1:]):
        if lo - hi < gap:
            raise SequenceError(f"groups {ja} and {jb} overlap at f_rep={seq.f_rep:.4g} Hz")


def expand(seq: APGSequence) -> FlatKicks:
    """Flatten an APG sequence into individually timed kicks.

    The mirrored half is the exact time reflection with flipped signs, so
    ``sum_j c_j exp(i w t_j)`` is purely imaginary for every ``w``.
    """
    check_feasible(seq)
    tp, cp, gp = positive_half(seq.z, seq.t, seq.f_rep)
    order = np.argsort(tp, kind="stable")
    tp, cp, gp = tp[order], cp[order], gp[order]
    times = np.concatenate([-tp[::-1], tp])
    signs = np.concatenate([-cp[::-1], cp])
    group = np.concatenate([-(gp[::-1] + 1), gp + 1])
    return FlatKicks(times, signs, seq.scheme, group)


def gate_duration(kicks: FlatKicks) -> float:
    return float(kicks.times[-1] - kicks.times[0]) if len(kicks) else 0.0


# --- closed-form metrics --------------------------------------------------


def _phase_sums(times, signs, omegas) -> np.ndarray:
    """Per mode: sum_{k<j} c_j c_k sin(w (t_j - t_k))."""
    e = signs[None, :] * np.exp(1j * omegas[:, None] * times[None, :])
    prefix = np.cumsum(e, axis=1) - e
    return np.sum(np.imag(e * np.conj(prefix)), axis=1)


def _displacement_sums(times, signs, omegas) -> np.ndarray:
    return np.exp(1j * omegas[:, None] * times[None, :]) @ signs


def _pair(modes: ModeStructure, pair) -> tuple[int, int]:
    m, n = (int(p) for p in pair)
    if m == n or not (0 <= m < modes.n_modes and 0 <= n < modes.n_modes):
        raise ValueError(f"invalid ion pair {pair} for a {modes.n_modes}-ion chain")
    return m, n


def entangling_phase(kicks: FlatKicks, modes: ModeStructure, pair, scheme: str | None = None) -> float:
    """Two-qubit phase accumulated by the sequence."""
    m, n = _pair(modes, pair)
    f_theta, _ = _SCHEME_FACTORS[_check_scheme(scheme or kicks.scheme)]
    coef = 2 * modes.lamb_dicke**2 * modes.couplings[m] * modes.couplings[n]
    return float(f_theta * coef @ _phase_sums(kicks.times, kicks.signs, modes.frequencies))


def residual_displacement(kicks: FlatKicks, modes: ModeStructure, scheme: str | None = None) -> np.ndarray:
    """Per-mode residual displacement ``i eta sum_j c_j exp(i w t_j)``."""
    _, f_beta = _SCHEME_FACTORS[_check_scheme(scheme or kicks.scheme)]
    s = _displacement_sums(kicks.times, kicks.signs, modes.frequencies)
    return f_beta * 1j * modes.lamb_dicke * s


def motional_weights(modes: ModeStructure, thermal: ThermalState | None, pair) -> np.ndarray:
    """Per-mode weight (4/3)(1/2 + nbar)(b_m^2 + b_n^2) on |dbeta|^2."""
    m, n = _pair(modes, pair)
    nbar = np.zeros(modes.n_modes) if thermal is None else thermal.occupations
    return 4.0 / 3.0 * (0.5 + nbar) * (modes.couplings[m] ** 2 + modes.couplings[n] ** 2)


def phase_mismatch(theta: float) -> float:
    return abs(theta) - TARGET_PHASE


def gate_error(theta: float, dbeta, modes: ModeStructure, thermal: ThermalState | None, pair) -> float:
    """State-averaged gate error to second order in the phase and
    displacement errors."""
    w = motional_weights(modes, thermal, pair)
    return float(2.0 / 3.0 * phase_mismatch(theta) ** 2 + w @ np.abs(dbeta) ** 2)


def motional_error(dbeta, modes: ModeStructure, thermal: ThermalState | None, pair) -> float:
    """Displacement part of :func:`gate_error` alone."""
    return float(motional_weights(modes, thermal, pair) @ np.abs(dbeta) ** 2)


def sdk_weighted_cost(eps_av: float, seq: APGSequence, eps_pi: float) -> float:
    """Optimisation penalty ``2 eps_pi (sum |z|) eps_av``."""
    if not 0 <= eps_pi < 1:
        raise ValueError("eps_pi must lie in [0, 1)")
    return 2.0 * eps_pi * seq.half_sum * eps_av


def total_error_with_sdk(eps_av: float, kick_count: int, eps_pi: float) -> float:
    """Gate error once every pulse also fails to invert with probability eps_pi."""
    if not 0 <= eps_pi < 1:
        raise ValueError("eps_pi must lie in [0, 1)")
    return 1.0 - (1.0 - eps_pi) ** (2 * kick_count) * (1.0 - eps_av)


@dataclass(frozen=True)
class PhaseModel:
    """Laser phase ``phi(t) = detuning * t + offset``."""

    detuning: float = 0.0
    offset: float = 0.0

    def __call__(self, t):
        return self.detuning * np.asarray(t, float) + self.offset


def single_qubit_phase(kicks: FlatKicks, phase_model, extra_phases=None) -> float:
    """Single-qubit z rotation ``sum_j c_j phi(t_j)`` left by the laser phase.

    ``extra_phases`` adds per-kick phase offsets (e.g. a pi shift on the
    second half of the gate).
    """
    phi = np.asarray(phase_model(kicks.times), float)
    if extra_phases is not None:
        phi = phi + np.asarray(extra_phases, float)
    return float(kicks.signs @ phi)


def differential_phase(seq: APGSequence, phase_model) -> float:
    """Same quantity for an APG sequence, written as differential phases
    between each kick and its mirror partner."""
    tp, cp, _ = positive_half(seq.z, seq.t, seq.f_rep)
    return float(cp @ (phase_model(tp) - phase_model(-tp)))


def second_half_pi_shift(kicks: FlatKicks) -> np.ndarray:
    return np.where(kicks.times > 0, np.pi, 0.0)


def wrap_single_qubit_phase(phi: float) -> float:
    """Reduce to (-pi/2, pi/2]; exp(i pi sigma_z) = -1 is a global phase."""
    r = math.remainder(phi, np.pi)
    return np.pi / 2 if math.isclose(r, -np.pi / 2) else r


SUPERSONIC = "supersonic"
SUBSONIC = "subsonic"


def classify_regime(gate_time: float, modes: ModeStructure) -> str:
    """Faster than the phonon travel time is supersonic; ties are subsonic."""
    if not gate_time > 0:
        raise ValueError("gate time must be positive")
    return SUPERSONIC if gate_time < modes.travel_time else SUBSONIC


@dataclass(frozen=True)
class GateMetrics:
    theta: float
    residual_displacements: np.ndarray = field(repr=False)
    eps_av: float
    sdk_cost: float
    kick_count: int
    gate_time: float

    @property
    def phase_mismatch(self) -> float:
        return phase_mismatch(self.theta)

    @property
    def cost(self) -> float:
        return self.eps_av + self.sdk_cost

    def to_dict(self) -> dict:
        db = self.residual_displacements
        return {
            "theta_2q": self.theta,
            "phase_mismatch": self.phase_mismatch,
            "eps_av": self.eps_av,
            "sdk_cost": self.sdk_cost,
            "kick_count": self.kick_count,
            "gate_time_s": self.gate_time,
            "residual_displacements": [[float(x.real), float(x.imag)] for x in db],
        }


def evaluate(
    kicks: FlatKicks,
    modes: ModeStructure,
    pair,
    thermal: ThermalState | None = None,
    eps_pi: float = 0.0,
    scheme: str | None = None,
) -> GateMetrics:
    """All closed-form metrics of a flat kick sequence."""
    theta = entangling_phase(kicks, modes, pair, scheme)
    dbeta = residual_displacement(kicks, modes, scheme)
    eps = gate_error(theta, dbeta, modes, thermal, pair)
    n_kicks = int(np.count_nonzero(kicks.signs))
    # sum |z| over the positive half is half the kick count
    sdk = 2.0 * eps_pi * (n_kicks / 2) * eps
    return GateMetrics(theta, dbeta, eps, sdk, n_kicks, gate_duration(kicks))


def evaluate_sequence(seq: APGSequence, modes: ModeStructure, pair, thermal=None, eps_pi=0.0) -> GateMetrics:
    return evaluate(expand(seq), modes, pair, thermal, eps_pi)
