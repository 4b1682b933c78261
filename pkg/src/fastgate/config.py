"""Run configuration: JSON documents with unit-suffixed keys.

Every document is validated against :data:`SCHEMA` before use and then
merged with :data:`DEFAULTS`, so the echoed configuration is complete.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path

import jsonschema

from .chain import (
    SPECIES,
    BeamGeometry,
    Chain,
    HarmonicPotential,
    QuarticPotential,
    TrapModel,
    calibrate_min_separation,
    thermal_occupation,
)
from .kicks import SCHEMES
from .optimize import SearchConfig


class ConfigError(ValueError):
    pass


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_int = {"type": "integer"}
_posint = {"type": "integer", "minimum": 1}


def _section(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


def _list(item, min_items=1) -> dict:
    return {"type": "array", "items": item, "minItems": min_items}


SCHEMA = _section(
    {
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "trap": _section(
            {
                "species": {"enum": sorted(SPECIES)},
                "family": {"enum": ["quartic", "harmonic"]},
                "n_ions": {"type": "integer", "minimum": 2},
                "s_min_um": _pos,
                "d_step_um": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "kappa2_J_per_m2": _pos,
                "kappa4_J_per_m4": _nonneg,
                "omega_t_rad_per_s": _pos,
            },
            required=["n_ions"],
        ),
        "beam": _section({"wavelength_nm": _pos, "half_angle_deg": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 90}}),
        "pair": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2, "maxItems": 2},
        "thermal": _section({"temperature_uK": _nonneg}),
        "search": _section(
            {
                "gate_time_tau0": _pos,
                "gate_time_s": _pos,
                "group_count": {"type": "integer", "minimum": 2, "multipleOf": 2},
                "z_max": _posint,
                "f_rep_MHz": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "eps_pi": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "grid_mode": {"type": "boolean"},
                "scheme": {"enum": list(SCHEMES)},
                "restarts": _posint,
                "eval_budget": _posint,
                "kick_cap": {"type": ["integer", "null"], "minimum": 2},
                "top_m": _posint,
                "stage2_restarts": _posint,
                "max_nfev": _posint,
                "gate_time_slack": _nonneg,
            }
        ),
        "sweep": _section(
            {
                "gate_times_tau0": _list(_pos),
                "gate_times_s": _list(_pos),
                "kick_caps": _list({"type": ["integer", "null"], "minimum": 2}),
                "rep_rate_shifts": _list(_num),
                "jitter_sigmas_ns": _list(_nonneg),
                "jitter_samples": _posint,
                "mode_shifts": _list(_num),
                "mode_shift_threshold": _pos,
                "temperatures_uK": _list(_nonneg),
            }
        ),
        "mc": _section(
            {
                "eps_pi": _list({"type": "number", "minimum": 0, "exclusiveMaximum": 1}),
                "samples_per_class": _posint,
                "m_max": _posint,
                "bins": _posint,
                "offsets": _list({"type": "integer", "not": {"const": 0}}),
                "probs": _list(_nonneg),
            }
        ),
        "simulate": _section({"samples_per_period": _pos}),
    },
    required=["trap"],
)

DEFAULTS = {
    "seed": 0,
    "trap": {"species": "Ba133", "family": "quartic", "s_min_um": 3.0, "d_step_um": None},
    "beam": {"wavelength_nm": 532.0, "half_angle_deg": 30.0},
    "pair": [0, 1],
    "thermal": {"temperature_uK": 30.0},
    "search": {
        "group_count": 30,
        "z_max": 5,
        "f_rep_MHz": 500.0,
        "eps_pi": 1e-4,
        "grid_mode": False,
        "scheme": "unpaired",
        "restarts": 4,
        "eval_budget": 200000,
        "kick_cap": None,
        "top_m": 8,
        "stage2_restarts": 3,
        "max_nfev": 400,
        "gate_time_slack": 0.05,
    },
    "sweep": {"jitter_samples": 1000, "mode_shift_threshold": 1e-3},
    "mc": {"eps_pi": [1e-4], "samples_per_class": 1000, "m_max": 3, "bins": 60, "offsets": [-1, -2], "probs": [0.5, 0.5]},
    "simulate": {"samples_per_period": 200.0},
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        out[k] = _merge(out[k], v) if isinstance(v, dict) and isinstance(out.get(k), dict) else copy.deepcopy(v)
    return out


def _keys(doc, prefix=""):
    if isinstance(doc, dict):
        for k, v in doc.items():
            yield f"{prefix}{k}"
            yield from _keys(v, f"{prefix}{k}.")


def validate(doc) -> dict:
    """Schema-check a raw document and return it merged with defaults."""
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    keys = list(_keys(doc))
    tau0 = [k for k in keys if k.endswith("_tau0")]
    secs = [k for k in keys if k.endswith("_s") and ("gate_time" in k)]
    if tau0 and secs:
        raise ConfigError(f"times given in both tau0 units ({tau0[0]}) and seconds ({secs[0]})")
    trap = doc["trap"]
    explicit = [k for k in ("kappa2_J_per_m2", "kappa4_J_per_m4", "omega_t_rad_per_s") if k in trap]
    if "omega_t_rad_per_s" in trap and trap.get("family", "quartic") != "harmonic":
        raise ConfigError("trap/omega_t_rad_per_s: only valid for the harmonic family")
    if ("kappa2_J_per_m2" in trap) != ("kappa4_J_per_m4" in trap):
        raise ConfigError("trap: give both kappa2_J_per_m2 and kappa4_J_per_m4")
    if explicit and trap.get("family", "quartic") == "harmonic" and "kappa2_J_per_m2" in trap:
        raise ConfigError("trap: kappa values are only valid for the quartic family")
    if explicit and "s_min_um" in trap:
        raise ConfigError("trap: give either s_min_um or explicit trap parameters, not both")
    mc = doc.get("mc", {})
    if ("offsets" in mc) != ("probs" in mc) or len(mc.get("offsets", [])) != len(mc.get("probs", [])):
        raise ConfigError("mc: offsets and probs must be given together with equal length")
    if "probs" in mc and abs(sum(mc["probs"]) - 1) > 1e-9:
        raise ConfigError("mc/probs: must sum to 1")
    eff = _merge(DEFAULTS, doc)
    if explicit:
        eff["trap"].pop("s_min_um", None)
        eff["trap"].pop("d_step_um", None)
    n = eff["trap"]["n_ions"]
    if max(eff["pair"]) >= n or eff["pair"][0] == eff["pair"][1]:
        raise ConfigError(f"pair: indices must be distinct and below n_ions={n}")
    return eff


def load(path) -> dict:
    try:
        with open(Path(path)) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return validate(doc)


@dataclass
class RunConfig:
    """Validated configuration with helpers that build model objects."""

    doc: dict

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        return cls(load(path))

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        return cls(validate(doc))

    @property
    def seed(self) -> int:
        return int(self.doc["seed"])

    @property
    def pair(self) -> tuple[int, int]:
        return tuple(self.doc["pair"])

    def beam(self) -> BeamGeometry:
        b = self.doc["beam"]
        return BeamGeometry(b["wavelength_nm"] * 1e-9, math.radians(b["half_angle_deg"]))

    def trap(self) -> TrapModel:
        t = self.doc["trap"]
        species = SPECIES[t["species"]]
        if "kappa2_J_per_m2" in t:
            return TrapModel(species, QuarticPotential(t["kappa2_J_per_m2"], t["kappa4_J_per_m4"]), t["n_ions"])
        if "omega_t_rad_per_s" in t:
            return TrapModel(species, HarmonicPotential(t["omega_t_rad_per_s"]), t["n_ions"])
        step = t.get("d_step_um")
        return calibrate_min_separation(
            species, t["family"], t["n_ions"], t["s_min_um"] * 1e-6, None if step is None else step * 1e-6
        )

    def chain(self) -> Chain:
        return Chain.build(self.trap(), self.beam())

    def thermal(self, modes):
        return thermal_occupation(modes, self.doc["thermal"]["temperature_uK"] * 1e-6)

    def gate_time(self, modes) -> float:
        s = self.doc["search"]
        if "gate_time_s" in s:
            return float(s["gate_time_s"])
        if "gate_time_tau0" in s:
            return float(s["gate_time_tau0"]) * modes.com_period
        raise ConfigError("search: gate_time_tau0 or gate_time_s is required")

    def sweep_gate_times(self, modes) -> list[float]:
        s = self.doc["sweep"]
        if "gate_times_s" in s:
            return [float(x) for x in s["gate_times_s"]]
        return [float(x) * modes.com_period for x in s.get("gate_times_tau0", [])]

    def search(self, modes, seed: int | None = None, workers: int = 1, gate_time: float | None = None) -> SearchConfig:
        s = self.doc["search"]
        f = s["f_rep_MHz"]
        try:
            return SearchConfig(
                gate_time=self.gate_time(modes) if gate_time is None else gate_time,
                group_count=s["group_count"],
                z_max=s["z_max"],
                f_rep=None if f is None else f * 1e6,
                eps_pi=s["eps_pi"],
                grid_mode=s["grid_mode"],
                scheme=s["scheme"],
                restarts=s["restarts"],
                eval_budget=s["eval_budget"],
                seed=self.seed if seed is None else seed,
                kick_cap=s["kick_cap"],
                top_m=s["top_m"],
                stage2_restarts=s["stage2_restarts"],
                max_nfev=s["max_nfev"],
                gate_time_slack=s["gate_time_slack"],
                workers=workers,
            )
        except ValueError as exc:
            raise ConfigError(f"search: {exc}") from None
