"""Linear ion chains: trap potentials, equilibrium, axial normal modes.

Everything is SI internally (kg, m, s, rad/s). The axial potential is
``kappa2 z^2 / 2 + kappa4 z^4 / 4`` per ion plus pairwise Coulomb repulsion.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import constants as sc

# e^2 / (4 pi eps0), J m
COULOMB_Q2 = sc.e**2 / (4 * np.pi * sc.epsilon_0)
HBAR = sc.hbar
K_B = sc.k


class ChainError(RuntimeError):
    """Equilibrium or mode solve failed."""


@dataclass(frozen=True)
class IonSpecies:
    mass: float
    label: str = ""

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError(f"ion mass must be positive, got {self.mass}")


BA133 = IonSpecies(mass=132.9060 * sc.atomic_mass, label="133Ba+")
CA40 = IonSpecies(mass=39.9626 * sc.atomic_mass, label="40Ca+")
YB171 = IonSpecies(mass=170.9363 * sc.atomic_mass, label="171Yb+")
SPECIES = {"Ba133": BA133, "Ca40": CA40, "Yb171": YB171}


@dataclass(frozen=True)
class BeamGeometry:
    """Two Raman beams tilted by ``half_angle`` from the trap's RF null."""

    wavelength: float = 532e-9
    half_angle: float = np.pi / 6

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")
        if not 0 < self.half_angle < np.pi / 2:
            raise ValueError("half_angle must lie in (0, pi/2)")

    @property
    def k(self) -> float:
        return 2 * np.pi / self.wavelength

    @property
    def k_eff(self) -> float:
        return 2 * self.k * np.sin(self.half_angle)


@dataclass(frozen=True)
class HarmonicPotential:
    omega_t: float

    def __post_init__(self):
        if not self.omega_t > 0:
            raise ValueError("omega_t must be positive")

    def coefficients(self, mass: float) -> tuple[float, float]:
        return mass * self.omega_t**2, 0.0


@dataclass(frozen=True)
class QuarticPotential:
    kappa2: float
    kappa4: float

    def __post_init__(self):
        if not self.kappa2 > 0 or self.kappa4 < 0:
            raise ValueError("need kappa2 > 0 and kappa4 >= 0")

    def coefficients(self, mass: float) -> tuple[float, float]:
        return self.kappa2, self.kappa4


@dataclass(frozen=True)
class TrapModel:
    species: IonSpecies
    potential: HarmonicPotential | QuarticPotential
    n_ions: int

    def __post_init__(self):
        if self.n_ions < 2:
            raise ValueError("a chain needs at least two ions")

    @property
    def kappas(self) -> tuple[float, float]:
        return self.potential.coefficients(self.species.mass)

    @property
    def family(self) -> str:
        return "harmonic" if isinstance(self.potential, HarmonicPotential) else "quartic"


@dataclass(frozen=True)
class ChainGeometry:
    positions: np.ndarray
    residual: float = 0.0

    @property
    def separations(self) -> np.ndarray:
        return np.diff(self.positions)

    @property
    def min_separation(self) -> float:
        return float(self.separations.min())


@dataclass(frozen=True)
class ModeStructure:
    """Axial modes, ascending in frequency.

    ``couplings[:, a]`` is the unit eigenvector of mode ``a``.
    """

    frequencies: np.ndarray
    couplings: np.ndarray
    lamb_dicke: np.ndarray

    @property
    def n_modes(self) -> int:
        return len(self.frequencies)

    @property
    def com_period(self) -> float:
        return 2 * np.pi / self.frequencies[0]

    @property
    def travel_time(self) -> float:
        ratio = self.frequencies[1] / self.frequencies[0]
        return self.com_period / (ratio - 1)

    def with_frequencies(self, frequencies) -> "ModeStructure":
        """Same couplings and Lamb-Dicke factors, shifted frequencies."""
        return ModeStructure(np.asarray(frequencies, float), self.couplings, self.lamb_dicke)

    def with_lamb_dicke(self, lamb_dicke) -> "ModeStructure":
        return ModeStructure(self.frequencies, self.couplings, np.asarray(lamb_dicke, float))

    def to_csv(self, path) -> None:
        n = self.n_modes
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["mode", "omega_rad_per_s", "eta"] + [f"b{j}" for j in range(n)])
            for a in range(n):
                w.writerow(
                    [a, repr(float(self.frequencies[a])), repr(float(self.lamb_dicke[a]))]
                    + [repr(float(x)) for x in self.couplings[:, a]]
                )


@dataclass(frozen=True)
class ThermalState:
    temperature: float
    occupations: np.ndarray = field(repr=False)


def quartic_coefficients(n_ions: int, d: float) -> tuple[float, float]:
    """Quadratic and quartic coefficients that keep a continuum chain of
    spacing ``d`` uniform, truncated at fourth order."""
    if n_ions < 2:
        raise ValueError("n_ions must be >= 2")
    if not d > 0:
        raise ValueError(f"spacing d must be positive, got {d}")
    q2 = COULOMB_Q2
    return 8 * q2 / (d**3 * n_ions**2), 32 * q2 / (d**5 * n_ions**4)


# --- equilibrium ----------------------------------------------------------
#
# Positions are solved in units of l = (q^2 / kappa2)^(1/3); the potential then
# reads u^2/2 + a u^4/4 + sum 1/|u_i - u_j| with a = kappa4 l^2 / kappa2.


def _reduced_gradient(u: np.ndarray, a: float) -> np.ndarray:
    diff = u[:, None] - u[None, :]
    np.fill_diagonal(diff, np.inf)
    coul = np.sign(diff) / diff**2
    return u + a * u**3 - coul.sum(axis=1)


def _reduced_hessian(u: np.ndarray, a: float) -> np.ndarray:
    dist = np.abs(u[:, None] - u[None, :])
    np.fill_diagonal(dist, np.inf)
    off = -2.0 / dist**3
    h = off.copy()
    h[np.diag_indices_from(h)] = 1 + 3 * a * u**2 - off.sum(axis=1)
    return h


def _reduced_energy(u: np.ndarray, a: float) -> float:
    i, j = np.triu_indices(len(u), 1)
    return float(np.sum(u**2 / 2 + a * u**4 / 4) + np.sum(1 / np.abs(u[i] - u[j])))


def _initial_guess(n: int, a: float) -> np.ndarray:
    # continuum estimate: kappa2 = 8 q^2 / (d^3 N^2) -> d = (8/N^2)^(1/3) in units of l
    d = (8.0 / n**2) ** (1 / 3)
    if a > 0:
        # the quartic term only compresses the chain
        d = min(d, (32.0 / (a * n**4)) ** (1 / 5))
    return (np.arange(n) - (n - 1) / 2) * d


def _solve_reduced(n: int, a: float, tol: float = 1e-13, max_iter: int = 200) -> tuple[np.ndarray, float]:
    u = _initial_guess(n, a)
    for _ in range(max_iter):
        g = _reduced_gradient(u, a)
        res = np.max(np.abs(g))
        if res < tol:
            break
        try:
            step = np.linalg.solve(_reduced_hessian(u, a), -g)
        except np.linalg.LinAlgError:
            step = -g
        e0 = _reduced_energy(u, a)
        lam = 1.0
        while lam > 1e-8:
            trial = u + lam * step
            if np.all(np.diff(trial) > 0) and _reduced_energy(trial, a) <= e0 + 1e-14 * abs(e0):
                break
            lam /= 2
        else:
            # Newton direction unusable: fall back to a gradient step
            trial = u - 1e-3 * g
        u = trial
        # exact mirror symmetry of the symmetric potential
        u = (u - u[::-1]) / 2
    res = float(np.max(np.abs(_reduced_gradient(u, a))))
    return u, res


def equilibrium_positions(trap: TrapModel) -> ChainGeometry:
    """Ascending equilibrium positions of the chain.

    Raises ChainError when the gradient residual is not below 1e-12 of the
    Coulomb force at the minimum separation.
    """
    k2, k4 = trap.kappas
    scale = (COULOMB_Q2 / k2) ** (1 / 3)
    a = k4 * scale**2 / k2
    u, res = _solve_reduced(trap.n_ions, a)
    if not np.all(np.diff(u) > 0):
        raise ChainError("equilibrium solve lost ion ordering")
    # residual is in units of q^2/l^2; compare with q^2/s_min^2
    rel = res * (np.min(np.diff(u))) ** 2
    if rel > 1e-12:
        raise ChainError(f"equilibrium solver did not converge (relative residual {rel:.3e})")
    return ChainGeometry(positions=u * scale, residual=rel)


def potential_gradient(trap: TrapModel, positions) -> np.ndarray:
    """Force-balance residual dV/dz_j in newtons."""
    z = np.asarray(positions, float)
    k2, k4 = trap.kappas
    diff = z[:, None] - z[None, :]
    np.fill_diagonal(diff, np.inf)
    coul = COULOMB_Q2 * np.sign(diff) / diff**2
    return k2 * z + k4 * z**3 - coul.sum(axis=1)


def _sign_convention(b: np.ndarray) -> np.ndarray:
    # first clearly non-zero component of each eigenvector is positive
    for col in range(b.shape[1]):
        v = b[:, col]
        idx = int(np.argmax(np.abs(v) > 1e-8))
        if v[idx] < 0:
            b[:, col] = -v
    return b


def normal_modes(trap: TrapModel, geometry: ChainGeometry, beam: BeamGeometry | None = None) -> ModeStructure:
    beam = beam or BeamGeometry()
    z = geometry.positions
    k2, k4 = trap.kappas
    m = trap.species.mass
    dist = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(dist, np.inf)
    off = -2 * COULOMB_Q2 / dist**3
    hess = off.copy()
    hess[np.diag_indices_from(hess)] = k2 + 3 * k4 * z**2 - off.sum(axis=1)
    w2, b = np.linalg.eigh(hess / m)
    if np.any(w2 <= 0):
        raise ChainError("non-positive Hessian eigenvalue; positions are not an equilibrium")
    omega = np.sqrt(w2)
    b = _sign_convention(b)
    eta = beam.k_eff * np.sqrt(HBAR / (2 * m * omega))
    return ModeStructure(frequencies=omega, couplings=b, lamb_dicke=eta)


def thermal_occupation(modes: ModeStructure, temperature: float) -> ThermalState:
    if temperature < 0:
        raise ValueError("temperature must be non-negative")
    if temperature == 0:
        nbar = np.zeros(modes.n_modes)
    else:
        nbar = 1.0 / np.expm1(HBAR * modes.frequencies / (K_B * temperature))
    return ThermalState(temperature=temperature, occupations=nbar)


def _reduced_min_separation(n: int, a: float) -> float:
    u, _ = _solve_reduced(n, a)
    return float(np.min(np.diff(u)))


def calibrate_min_separation(
    species: IonSpecies,
    family: str,
    n_ions: int,
    s_min: float,
    d_step: float | None = None,
) -> TrapModel:
    """Trap whose equilibrium chain has minimum ion spacing ``s_min``.

    Both families scale exactly: a harmonic chain shrinks as omega_t^(-2/3),
    and along the quartic family of :func:`quartic_coefficients` every length
    scales with ``d`` (the reduced quartic strength is N^(-2/3)). One reduced
    solve therefore fixes the parameter.

    ``d_step`` rounds ``d`` up to a multiple of the step (quartic only), which
    keeps every spacing at or above ``s_min``.
    """
    if not s_min > 0:
        raise ValueError("s_min must be positive")
    if family == "harmonic":
        u_min = _reduced_min_separation(n_ions, 0.0)
        # s = u_min * (q^2 / (m w^2))^(1/3)
        omega_t = math.sqrt(COULOMB_Q2 * u_min**3 / (species.mass * s_min**3))
        trap = TrapModel(species, HarmonicPotential(omega_t), n_ions)
    elif family == "quartic":
        a = n_ions ** (-2 / 3)
        u_min = _reduced_min_separation(n_ions, a)
        # l = d N^(2/3) / 2
        d = s_min / (u_min * n_ions ** (2 / 3) / 2)
        if d_step:
            d = math.ceil(d / d_step - 1e-9) * d_step
        trap = TrapModel(species, QuarticPotential(*quartic_coefficients(n_ions, d)), n_ions)
    else:
        raise ValueError(f"unknown trap family {family!r}")
    geo = equilibrium_positions(trap)
    if d_step is None and abs(geo.min_separation / s_min - 1) > 1e-3:
        raise ChainError(f"calibration missed target spacing ({geo.min_separation:.6e} m)")
    return trap


@dataclass(frozen=True)
class Chain:
    """Trap plus its solved geometry and modes, bundled for convenience."""

    trap: TrapModel
    geometry: ChainGeometry
    modes: ModeStructure
    beam: BeamGeometry

    @classmethod
    def build(cls, trap: TrapModel, beam: BeamGeometry | None = None) -> "Chain":
        beam = beam or BeamGeometry()
        geo = equilibrium_positions(trap)
        return cls(trap, geo, normal_modes(trap, geo, beam), beam)
