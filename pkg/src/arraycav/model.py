"""Domain types, validation and lattice geometry.

All lengths are in units of the optical wavelength and all rates in units of
the single-atom decay rate.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

PARAXIAL_FLOOR = 2.0
_NORM_TOL = 1e-12


class ConfigError(ValueError):
    """Raised when a configuration violates a type invariant."""


class ParaxialityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LatticeSpec:
    spacing_a: float
    nx: int
    ny: int
    polarization: tuple[complex, complex] = (1.0 + 0j, 0j)

    @property
    def n_atoms(self) -> int:
        return self.nx * self.ny

    @property
    def side_lengths(self) -> tuple[float, float]:
        return self.spacing_a * self.nx, self.spacing_a * self.ny

    @property
    def side_length(self) -> float:
        """Array side L_a = a * sqrt(N); only meaningful for square arrays."""
        return self.spacing_a * math.sqrt(self.nx * self.ny)


@dataclass(frozen=True)
class BeamSpec:
    waist_w: float
    input_amplitude: float = 1.0
    side: str = "left"
    paraxial_check: str = "error"


@dataclass(frozen=True)
class CavitySpec:
    finesse: float
    present: bool = True


@dataclass(frozen=True)
class DetuningGrid:
    min: float = -5.0
    max: float = 5.0
    count: int = 81

    def values(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.count)


@dataclass(frozen=True)
class SimulationConfig:
    lattice: LatticeSpec
    beam: BeamSpec
    cavity: CavitySpec | None = None
    gamma_s: float = 0.0
    detuning: DetuningGrid = field(default_factory=DetuningGrid)

    @property
    def has_cavity(self) -> bool:
        return self.cavity is not None and self.cavity.present


def _normalize_polarization(pol) -> tuple[complex, complex]:
    comps = [complex(c) for c in pol]
    if len(comps) == 3:
        if comps[2] != 0:
            raise ConfigError("polarization must be in-plane (z-component must be 0)")
        comps = comps[:2]
    if len(comps) != 2:
        raise ConfigError("polarization must have two in-plane components")
    norm2 = abs(comps[0]) ** 2 + abs(comps[1]) ** 2
    if abs(norm2 - 1.0) > _NORM_TOL:
        raise ConfigError(f"polarization must have unit norm (got |e|^2={norm2!r})")
    return comps[0], comps[1]


def validate_lattice(lattice: LatticeSpec) -> LatticeSpec:
    if not lattice.spacing_a > 0:
        raise ConfigError("spacing_a must be > 0")
    for name in ("nx", "ny"):
        value = getattr(lattice, name)
        if int(value) != value:
            raise ConfigError(f"{name} must be an integer")
        if value < 1:
            raise ConfigError(f"{name} must be ≥ 1")
    pol = _normalize_polarization(lattice.polarization)
    return replace(lattice, spacing_a=float(lattice.spacing_a), nx=int(lattice.nx),
                   ny=int(lattice.ny), polarization=pol)


def validate_beam(beam: BeamSpec) -> BeamSpec:
    if beam.side not in ("left", "right"):
        raise ConfigError("side must be 'left' or 'right'")
    if beam.paraxial_check not in ("error", "warn"):
        raise ConfigError("paraxial_check must be 'error' or 'warn'")
    if beam.input_amplitude != 1.0:
        raise ConfigError("input_amplitude is fixed to 1")
    if not beam.waist_w > 0:
        raise ConfigError("waist_w must be > 0")
    if beam.waist_w < PARAXIAL_FLOOR:
        msg = f"waist_w must be ≥ {PARAXIAL_FLOOR} (paraxial floor), got {beam.waist_w}"
        if beam.paraxial_check == "error":
            raise ConfigError(msg)
        warnings.warn(msg, ParaxialityWarning, stacklevel=3)
    return replace(beam, waist_w=float(beam.waist_w))


def validate_config(config: SimulationConfig) -> SimulationConfig:
    """Check every invariant and return a normalized copy.

    Idempotent: validating an already validated config returns an equal one.
    """
    lattice = validate_lattice(config.lattice)
    beam = validate_beam(config.beam)
    cavity = config.cavity
    if cavity is not None and cavity.present and not cavity.finesse >= 1:
        raise ConfigError("finesse must be ≥ 1")
    if not config.gamma_s >= 0:
        raise ConfigError("gamma_s must be ≥ 0")
    grid = config.detuning
    if int(grid.count) != grid.count or grid.count < 3:
        raise ConfigError("detuning.count must be an integer ≥ 3")
    if not grid.max > grid.min:
        raise ConfigError("detuning.max must exceed detuning.min")
    grid = DetuningGrid(float(grid.min), float(grid.max), int(grid.count))
    return SimulationConfig(lattice=lattice, beam=beam, cavity=cavity,
                            gamma_s=float(config.gamma_s), detuning=grid)


def atom_positions(lattice: LatticeSpec) -> np.ndarray:
    """Return the (nx*ny, 2) array of atom positions centered on the beam axis.

    Row-major: the y index runs fastest.
    """
    a = lattice.spacing_a
    xs = (np.arange(lattice.nx) - (lattice.nx - 1) / 2) * a
    ys = (np.arange(lattice.ny) - (lattice.ny - 1) / 2) * a
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()])


# --- JSON configuration documents -------------------------------------------

_TOP_KEYS = {"lattice", "beam", "cavity", "gamma_s", "detuning"}
_LATTICE_KEYS = {"a", "nx", "ny", "polarization"}
_BEAM_KEYS = {"waist", "side", "paraxial_check"}
_CAVITY_KEYS = {"finesse"}
_DETUNING_KEYS = {"min", "max", "count"}


def _check_keys(section: str, doc: Any, allowed: set[str], required: set[str] = frozenset()):
    if not isinstance(doc, dict):
        raise ConfigError(f"{section} must be an object")
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {', '.join(sorted(unknown))}")
    missing = set(required) - set(doc)
    if missing:
        raise ConfigError(f"missing key(s) in {section}: {', '.join(sorted(missing))}")


def config_from_dict(doc: dict) -> SimulationConfig:
    """Build and validate a config from its JSON document form."""
    _check_keys("config", doc, _TOP_KEYS, {"lattice", "beam"})
    lat = doc["lattice"]
    _check_keys("lattice", lat, _LATTICE_KEYS, {"a", "nx", "ny"})
    pol = (1 + 0j, 0j)
    if "polarization" in lat:
        p = lat["polarization"]
        if not isinstance(p, list) or len(p) != 4:
            raise ConfigError("lattice.polarization must be [re_ex, im_ex, re_ey, im_ey]")
        pol = (complex(p[0], p[1]), complex(p[2], p[3]))
    lattice = LatticeSpec(lat["a"], lat["nx"], lat["ny"], pol)

    b = doc["beam"]
    _check_keys("beam", b, _BEAM_KEYS, {"waist"})
    beam = BeamSpec(b["waist"], side=b.get("side", "left"),
                    paraxial_check=b.get("paraxial_check", "error"))

    cavity = None
    if doc.get("cavity") is not None:
        _check_keys("cavity", doc["cavity"], _CAVITY_KEYS, {"finesse"})
        cavity = CavitySpec(float(doc["cavity"]["finesse"]))

    grid = DetuningGrid()
    if "detuning" in doc:
        _check_keys("detuning", doc["detuning"], _DETUNING_KEYS)
        grid = replace(grid, **doc["detuning"])

    return validate_config(SimulationConfig(lattice, beam, cavity,
                                            doc.get("gamma_s", 0.0), grid))


def config_to_dict(config: SimulationConfig) -> dict:
    lat = config.lattice
    ex, ey = lat.polarization
    doc = {
        "lattice": {"a": lat.spacing_a, "nx": lat.nx, "ny": lat.ny,
                    "polarization": [ex.real, ex.imag, ey.real, ey.imag]},
        "beam": {"waist": config.beam.waist_w, "side": config.beam.side,
                 "paraxial_check": config.beam.paraxial_check},
        "gamma_s": config.gamma_s,
        "detuning": {"min": config.detuning.min, "max": config.detuning.max,
                     "count": config.detuning.count},
    }
    if config.has_cavity:
        doc["cavity"] = {"finesse": config.cavity.finesse}
    return doc


def square_config(a: float, n: int, waist: float, *, finesse: float | None = None,
                  polarization=(1.0, 0.0), gamma_s: float = 0.0,
                  paraxial_check: str = "error") -> SimulationConfig:
    """Shortcut for the square-array configurations used throughout."""
    cavity = CavitySpec(finesse) if finesse is not None else None
    return validate_config(SimulationConfig(
        LatticeSpec(a, n, n, tuple(polarization)),
        BeamSpec(waist, paraxial_check=paraxial_check),
        cavity, gamma_s))


def load_config(path) -> SimulationConfig:
    """Read a JSON config file; syntax errors are reported with line and column."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return config_from_dict(doc)
