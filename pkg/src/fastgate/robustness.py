"""Sensitivity of designed sequences to pulse errors and drifts.

All Monte-Carlo routines take an explicit seed and draw every random number
from streams derived from it, so results are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import comb, jv

from .chain import ModeStructure, ThermalState, thermal_occupation
from .kicks import (
    TARGET_PHASE,
    APGSequence,
    FlatKicks,
    SequenceError,
    _SCHEME_FACTORS,
    _pair,
    entangling_phase,
    evaluate,
    expand,
    motional_error,
    motional_weights,
    residual_displacement,
)

_CHUNK = 256
_FLOOR = 1e-18


def kd_populations(theta: float, n_max: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Diffraction-order populations ``J_n(theta)^2`` of one resonant pulse.

    Returns orders ``-n_max..n_max``, their populations and the population
    lost to orders beyond ``n_max``.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    n = np.arange(-n_max, n_max + 1)
    p = jv(n, theta) ** 2
    return n, p, float(max(0.0, 1.0 - p.sum()))


@dataclass(frozen=True)
class ErrorChannels:
    """Per-kick error model: with probability ``eps_pi`` a kick's amplitude
    shifts by ``n`` times its nominal sign, ``n`` drawn from ``probs``."""

    eps_pi: float
    offsets: tuple = (-1, -2)
    probs: tuple = (0.5, 0.5)

    def __post_init__(self):
        if not 0 <= self.eps_pi < 1:
            raise ValueError("eps_pi must lie in [0, 1)")
        if len(self.offsets) != len(self.probs) or not self.offsets:
            raise ValueError("offsets and probs must be non-empty and equal length")
        if any(int(n) != n or n == 0 for n in self.offsets):
            raise ValueError("offsets must be non-zero integers")
        p = np.asarray(self.probs, float)
        if np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
            raise ValueError("channel probabilities must be non-negative and sum to 1")

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        return rng.choice(np.asarray(self.offsets, float), size=size, p=np.asarray(self.probs, float))


def apply_errors(signs, index, offsets) -> np.ndarray:
    """Direction-relative error: amplitude ``c`` becomes ``c + n c``."""
    out = np.array(signs, float)
    out[index] = out[index] * (1.0 + np.asarray(offsets, float))
    return out


def perturb_sequence(kicks: FlatKicks, channels: ErrorChannels, rng: np.random.Generator) -> FlatKicks:
    """Each kick errs independently with probability ``eps_pi``."""
    hit = np.flatnonzero(rng.random(len(kicks)) < channels.eps_pi)
    if len(hit) == 0:
        return kicks
    return kicks.with_signs(apply_errors(kicks.signs, hit, channels.draw(rng, len(hit))))


# --- batched closed-form error -------------------------------------------


def batch_gate_error(times, signs, modes: ModeStructure, pair, thermal=None, scheme="unpaired") -> np.ndarray:
    """Gate error of many kick sequences at once.

    ``signs`` has shape (S, K); ``times`` is (K,) or (S, K) and must be
    ordered along the last axis.
    """
    m, n = _pair(modes, pair)
    f_theta, f_beta = _SCHEME_FACTORS[scheme]
    signs = np.atleast_2d(np.asarray(signs, float))
    times = np.asarray(times, float)
    coef = 2 * modes.lamb_dicke**2 * modes.couplings[m] * modes.couplings[n]
    w = motional_weights(modes, thermal, pair)
    out = np.empty(len(signs))
    for lo in range(0, len(signs), _CHUNK):
        c = signs[lo : lo + _CHUNK]
        t = times if times.ndim == 1 else times[lo : lo + _CHUNK]
        ph = np.exp(1j * modes.frequencies[:, None] * t[..., None, :])
        e = c[:, None, :] * ph
        prefix = np.cumsum(e, axis=-1) - e
        s = np.sum(np.imag(e * np.conj(prefix)), axis=-1)
        theta = f_theta * s @ coef
        db2 = (f_beta * modes.lamb_dicke) ** 2 * np.abs(e.sum(axis=-1)) ** 2
        out[lo : lo + _CHUNK] = 2.0 / 3.0 * (np.abs(theta) - TARGET_PHASE) ** 2 + db2 @ w
    return out


# --- Monte-Carlo pulse errors ---------------------------------------------


@dataclass
class ErrorPdf:
    """Gate-error distribution assembled from error classes.

    ``mass`` is the probability per bin (bins equal-width in log10 of the
    error) and sums to one; ``density = mass / width``.
    """

    edges: np.ndarray
    mass: np.ndarray
    mean: float
    std: float
    ideal: float
    weights: np.ndarray  # class m = 0..m_max
    class_means: np.ndarray
    class_pdfs: np.ndarray = field(repr=False)  # (m_max, bins) probabilities per class
    samples_per_class: int = 0
    m_max: int = 0

    @property
    def density(self) -> np.ndarray:
        return self.mass / np.diff(self.edges)

    @property
    def total_mass(self) -> float:
        return float(self.mass.sum())

    def to_dict(self) -> dict:
        return {
            "edges": self.edges.tolist(),
            "mass": self.mass.tolist(),
            "mean": self.mean,
            "std": self.std,
            "ideal": self.ideal,
            "class_weights": self.weights.tolist(),
            "class_means": self.class_means.tolist(),
            "class_pdfs": self.class_pdfs.tolist(),
            "samples_per_class": self.samples_per_class,
            "m_max": self.m_max,
        }


def class_weights(n_kicks: int, eps_pi: float, m_max: int) -> np.ndarray:
    """Binomial probabilities of exactly m errors, m = 0..m_max; the mass of
    more than m_max errors is added to the last class."""
    m = np.arange(m_max + 1)
    w = comb(n_kicks, m) * eps_pi**m * (1 - eps_pi) ** (n_kicks - m)
    w[m > n_kicks] = 0.0
    w[-1] += max(0.0, 1.0 - w.sum())
    return w


def sample_class_errors(kicks: FlatKicks, modes, pair, thermal, channels: ErrorChannels, m: int, samples: int, seed: int):
    """Gate errors of ``samples`` sequences with exactly ``m`` errant kicks."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 3, m]))
    k = len(kicks)
    hit = np.argsort(rng.random((samples, k)), axis=1)[:, :m]
    offs = channels.draw(rng, (samples, m))
    signs = np.repeat(kicks.signs[None, :], samples, axis=0)
    rows = np.arange(samples)[:, None]
    signs[rows, hit] *= 1.0 + offs
    return batch_gate_error(kicks.times, signs, modes, pair, thermal, kicks.scheme)


def mc_error_distribution(
    seq: APGSequence,
    modes: ModeStructure,
    pair,
    thermal: ThermalState | None,
    channels: ErrorChannels,
    samples_per_class: int = 1000,
    m_max: int = 3,
    seed: int = 0,
    bins: int = 60,
) -> ErrorPdf:
    """Error-class Monte Carlo of the gate error under pulse errors.

    The samples of each class depend only on (seed, m), not on ``eps_pi``,
    so distributions at different error rates share random numbers.
    """
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    if samples_per_class < 1:
        raise ValueError("samples_per_class must be >= 1")
    kicks = expand(seq)
    ideal = evaluate(kicks, modes, pair, thermal).eps_av
    weights = class_weights(len(kicks), channels.eps_pi, m_max)
    classes = []
    for m in range(1, m_max + 1):
        if weights[m] > 0 and m <= len(kicks):
            classes.append(sample_class_errors(kicks, modes, pair, thermal, channels, m, samples_per_class, seed))
        else:
            classes.append(np.full(samples_per_class, ideal))
    means = np.array([ideal] + [c.mean() for c in classes])
    second = np.array([ideal**2] + [np.mean(c**2) for c in classes])
    mean = float(weights @ means)
    std = float(math.sqrt(max(0.0, weights @ second - mean**2)))
    logs = [np.log10(np.maximum(c, _FLOOR)) for c in classes]
    lo = min([math.log10(max(ideal, _FLOOR))] + [l.min() for l in logs])
    hi = max([math.log10(max(ideal, _FLOOR))] + [l.max() for l in logs])
    if hi - lo < 1e-9:
        lo, hi = lo - 0.5, hi + 0.5
    edges = 10.0 ** np.linspace(lo, hi, bins + 1)
    pdfs = np.array([np.histogram(np.clip(c, edges[0], edges[-1]), edges)[0] / len(c) for c in classes])
    mass = weights[1:] @ pdfs
    mass[min(np.searchsorted(edges, max(ideal, edges[0]), side="right") - 1, bins - 1)] += weights[0]
    return ErrorPdf(edges, mass, mean, std, ideal, weights, means, pdfs, samples_per_class, m_max)


def population_inversion_bound(f0: float, n_kicks: int, eps_pi: float) -> float:
    """Fidelity after ``n_kicks`` kicks each failing to invert with ``eps_pi``."""
    return (1.0 - eps_pi) ** (2 * n_kicks) * f0


def excess_error_linearity(seq, modes, pair, thermal, eps_values, samples_per_class=1000, m_max=3, seed=0):
    """Mean excess error per eps_pi and a through-origin linear fit.

    Returns (excess, slope, max relative residual).
    """
    x = np.asarray(eps_values, float)
    y = np.array([
        (p := mc_error_distribution(seq, modes, pair, thermal, ErrorChannels(e), samples_per_class, m_max, seed)).mean - p.ideal
        for e in x
    ])
    slope = float(x @ y / (x @ x))
    resid = float(np.max(np.abs(y - slope * x) / np.abs(slope * x)))
    return y, slope, resid


# --- drift scans ----------------------------------------------------------


def _eps(seq, modes, pair, thermal) -> float:
    return evaluate(expand(seq), modes, pair, thermal).eps_av


@dataclass(frozen=True)
class ScanPoint:
    parameter: float
    mean: float
    std: float = 0.0
    error: str | None = None


def rep_rate_shift_scan(seq: APGSequence, modes, pair, thermal, shifts) -> list[ScanPoint]:
    """Re-expand at ``f_rep (1 + delta)`` with group centres fixed."""
    if seq.f_rep is None:
        raise ValueError("sequence has no finite repetition rate")
    out = []
    for d in shifts:
        try:
            e = _eps(seq.replace(f_rep=seq.f_rep * (1 + d)), modes, pair, thermal)
            out.append(ScanPoint(float(d), e))
        except SequenceError as exc:
            out.append(ScanPoint(float(d), math.nan, math.nan, str(exc)))
    return out


def _group_jitter(kicks: FlatKicks, normal: np.ndarray, sigma: float):
    """Kick times when each physical group moves by ``sigma * normal[group]``."""
    labels, inv = np.unique(kicks.group, return_inverse=True)
    t = kicks.times[None, :] + sigma * normal[:, inv]
    order = np.argsort(t, axis=1, kind="stable")
    return np.take_along_axis(t, order, 1), np.take_along_axis(np.broadcast_to(kicks.signs, t.shape), order, 1)


def timing_jitter_scan(seq: APGSequence, modes, pair, thermal, sigmas, samples: int = 1000, seed: int = 0) -> list[ScanPoint]:
    """Mean and std of the gate error with every physical group centre
    (both halves independently) offset by N(0, sigma^2).

    The same standard-normal draws are reused for every sigma.
    """
    kicks = expand(seq)
    n_groups = len(np.unique(kicks.group))
    rng = np.random.default_rng(np.random.SeedSequence([seed, 4]))
    normal = rng.standard_normal((samples, n_groups))
    out = []
    for s in sigmas:
        if s < 0:
            raise ValueError("sigma must be non-negative")
        if s == 0:
            out.append(ScanPoint(0.0, evaluate(kicks, modes, pair, thermal).eps_av, 0.0))
            continue
        t, c = _group_jitter(kicks, normal, float(s))
        e = batch_gate_error(t, c, modes, pair, thermal, kicks.scheme)
        out.append(ScanPoint(float(s), float(e.mean()), float(e.std())))
    return out


def timing_jitter_mc(seq, modes, pair, thermal, sigma: float, samples: int = 1000, seed: int = 0) -> ScanPoint:
    return timing_jitter_scan(seq, modes, pair, thermal, [sigma], samples, seed)[0]


def mode_shift_scan(seq: APGSequence, modes: ModeStructure, pair, thermal, shifts) -> list[ScanPoint]:
    """Every mode frequency scaled by ``1 + delta``; couplings, Lamb-Dicke
    factors and occupations held at their nominal values."""
    kicks = expand(seq)
    return [
        ScanPoint(float(d), evaluate(kicks, modes.with_frequencies(modes.frequencies * (1 + d)), pair, thermal).eps_av)
        for d in shifts
    ]


def mode_shift_tolerance(seq, modes, pair, thermal, threshold: float = 1e-3, lo: float = 1e-6, hi: float = 0.3, points: int = 121) -> float:
    """Largest |delta| on a log grid such that every grid shift up to it, of
    either sign, keeps the error at or below ``threshold``. Zero if even
    ``lo`` fails; ``hi`` if nothing fails."""
    grid = np.logspace(math.log10(lo), math.log10(hi), points)
    ok = 0.0
    for d in grid:
        e = [p.mean for p in mode_shift_scan(seq, modes, pair, thermal, [d, -d])]
        if max(e) > threshold:
            return ok
        ok = float(d)
    return ok


def temperature_scan(seq: APGSequence, modes: ModeStructure, pair, temperatures) -> list[dict]:
    """Displacement part of the gate error per temperature (phase unchanged)."""
    kicks = expand(seq)
    theta = entangling_phase(kicks, modes, pair)
    db = residual_displacement(kicks, modes)
    rows = []
    for T in temperatures:
        th = thermal_occupation(modes, float(T))
        rows.append({"temperature": float(T), "motional_error": motional_error(db, modes, th, pair), "theta": theta})
    return rows
