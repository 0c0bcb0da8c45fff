"""Parameter sweeps over lattice spacing and beam waist."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import analytics
from .model import DetuningGrid, SimulationConfig, validate_config
from .model import atom_positions
from .scattering import (MODAL_MAX_ATOMS, ArrayResponse, detuning_scan, extract_resonance,
                         interaction_matrix)
from .search import find_maxima, golden_section_max

MAX_NUMERIC_ATOMS = 3600
SWEEP_DETUNING = DetuningGrid(-4.0, 4.0, 41)
RESONANCE_OFFSETS = (1e-1, 3e-2, 1e-2, 3e-3)

COLUMNS = ("eta", "gamma0", "gamma_diff", "C_free_analytic", "C_free_numeric",
           "C_cavity", "r0", "epsilon", "resonant")


class CapacityError(RuntimeError):
    """Numeric solve requested for more atoms than the dense-solver cap."""


@dataclass(frozen=True)
class SweepRow:
    value: float
    eta: float
    gamma0: float
    gamma_diff: float
    C_free_analytic: float
    C_free_numeric: float | None
    C_cavity: float
    r0: float
    epsilon: float
    resonant: bool

    def as_tuple(self) -> tuple:
        return (self.value, self.eta, self.gamma0, self.gamma_diff, self.C_free_analytic,
                self.C_free_numeric, self.C_cavity, self.r0, self.epsilon, self.resonant)


@dataclass
class SweepTable:
    """Rows of one swept parameter.

    ``C_cavity``, ``r0`` and ``epsilon`` describe the configured system (the
    cavity-enhanced one when a cavity is present) and are derived from the
    numeric free-space cooperativity whenever it was computed, otherwise from
    the analytic one.
    """

    parameter: str
    unit: str
    rows: list[SweepRow] = field(default_factory=list)

    @property
    def header(self) -> tuple[str, ...]:
        return (self.parameter,) + COLUMNS

    def column(self, name: str) -> np.ndarray:
        idx = self.header.index(name)
        return np.array([np.nan if r.as_tuple()[idx] is None else r.as_tuple()[idx] for r in self.rows],
                        dtype=float)

    @property
    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.rows])


@dataclass(frozen=True)
class WaistPoint:
    w: float
    C: float


@dataclass(frozen=True)
class WaistOptimum:
    maxima: list[WaistPoint]
    global_: WaistPoint
    w_over_La: float


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get("ARRAYCAV_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def _pmap(fn, items, threads):
    items = list(items)
    threads = resolve_threads(threads)
    if threads == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _check_capacity(config: SimulationConfig, cap: int):
    n = config.lattice.n_atoms
    if n > cap:
        raise CapacityError(f"numeric mode limited to {cap} atoms (requested {n})")


def _row(value: float, config: SimulationConfig, c_numeric: float | None) -> SweepRow:
    free = analytics.free_space_rates(config)
    if c_numeric is None:
        system = analytics.system_rates(config)
        return SweepRow(float(value), free.eta, free.gamma_zero, free.loss_diff, free.cooperativity,
                        None, system.cooperativity, system.efficiency_r0, system.inefficiency_eps,
                        system.resonant_flag)
    scale = analytics.cavity_enhancement(config.cavity.finesse) if config.has_cavity else 1.0
    c_sys = scale * c_numeric
    return SweepRow(float(value), free.eta, free.gamma_zero, free.loss_diff, free.cooperativity,
                    c_numeric, c_sys, c_sys / (1 + c_sys), 1 / (1 + c_sys), False)


def refine_near_resonances(a_grid, a_max: float, *, include_exact: bool = False,
                           offsets=RESONANCE_OFFSETS) -> np.ndarray:
    """Add points approaching each diffraction resonance from below.

    Only resonances inside [min(a_grid), a_max] are refined. With
    ``include_exact`` the resonance spacings themselves are added too.
    """
    grid = np.asarray(a_grid, dtype=float)
    if grid.size == 0:
        return grid
    lo = float(grid.min())
    extra = []
    for res in analytics.resonance_spacings(a_max) if a_max >= 1 else []:
        if res < lo:
            continue
        extra.extend(res - off for off in offsets if res - off >= lo)
        if include_exact:
            extra.append(res)
    out = np.unique(np.concatenate([grid, extra]))
    # merge points closer than floating noise
    keep = np.concatenate([[True], np.diff(out) > 1e-12])
    return out[keep]


def _numeric_c(config: SimulationConfig, detuning: DetuningGrid, matrix=None) -> float:
    resp = ArrayResponse(config.lattice, config.beam, matrix=matrix)
    spec = detuning_scan(config, deltas=detuning.values(), response=resp)
    return extract_resonance(spec).cooperativity_numeric


def spacing_sweep(base: SimulationConfig, a_grid, *, numeric: bool = False,
                  detuning: DetuningGrid = SWEEP_DETUNING, threads: int | None = None,
                  max_atoms: int = MAX_NUMERIC_ATOMS) -> SweepTable:
    """Analytic (and optionally numeric) cooperativity for each lattice spacing."""
    grid = np.asarray(a_grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0):
        raise ValueError("a_grid must be non-empty with positive spacings")
    configs = [validate_config(replace(base, lattice=replace(base.lattice, spacing_a=float(a))))
               for a in grid]
    if numeric:
        _check_capacity(base, max_atoms)
        for cfg in configs:
            if analytics.free_space_rates(cfg).resonant_flag:
                raise ValueError(f"numeric sweep grid contains a diffraction resonance at a={cfg.lattice.spacing_a}")

    def work(cfg):
        c_num = _numeric_c(cfg, detuning) if numeric else None
        return _row(cfg.lattice.spacing_a, cfg, c_num)

    rows = _pmap(work, configs, threads)
    return SweepTable("a", "lambda", sorted(rows, key=lambda r: r.value))


def inefficiency_curve(base: SimulationConfig, a_grid, *, numeric: bool = False,
                       detuning: DetuningGrid = SWEEP_DETUNING, threads: int | None = None,
                       max_atoms: int = MAX_NUMERIC_ATOMS) -> SweepTable:
    """Cavity inefficiency 1/(1+C) versus spacing."""
    if not base.has_cavity:
        raise ValueError("inefficiency_curve requires a cavity")
    return spacing_sweep(base, a_grid, numeric=numeric, detuning=detuning,
                         threads=threads, max_atoms=max_atoms)


def _with_waist(base: SimulationConfig, w: float) -> SimulationConfig:
    return replace(base, beam=replace(base.beam, waist_w=float(w)))


def _shared_matrix(base: SimulationConfig):
    """Coupling matrix for the base lattice, decomposed up front when the modal route applies."""
    matrix = interaction_matrix(atom_positions(base.lattice), base.lattice.polarization)
    if matrix.n <= MODAL_MAX_ATOMS:
        matrix.modes  # noqa: B018  (compute once before worker threads share it)
    return matrix


def waist_sweep(base: SimulationConfig, w_grid, *, numeric: bool = False,
                detuning: DetuningGrid = SWEEP_DETUNING, threads: int | None = None,
                max_atoms: int = MAX_NUMERIC_ATOMS, matrix=None) -> SweepTable:
    """Cooperativity versus beam waist at fixed lattice.

    Analytic C only improves as the overlap grows, so its optimum is always
    the smallest waist; the finite-size optimum needs ``numeric=True``.
    """
    grid = np.asarray(w_grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0):
        raise ValueError("w_grid must be non-empty with positive waists")
    configs = [validate_config(_with_waist(base, w)) for w in grid]
    if numeric:
        _check_capacity(base, max_atoms)
        if matrix is None:
            matrix = _shared_matrix(base)

    def work(cfg):
        c_num = _numeric_c(cfg, detuning, matrix) if numeric else None
        return _row(cfg.beam.waist_w, cfg, c_num)

    rows = _pmap(work, configs, threads)
    return SweepTable("w", "lambda", sorted(rows, key=lambda r: r.value))


def optimal_waist(base: SimulationConfig, w_range: tuple[float, float] | None = None, *,
                  coarse: int = 24, rel_tol: float = 1e-3, max_maxima: int = 2,
                  rel_prominence: float = 0.02, detuning: DetuningGrid = SWEEP_DETUNING,
                  threads: int | None = None, max_atoms: int = MAX_NUMERIC_ATOMS) -> WaistOptimum:
    """Waist(s) maximizing the numeric cooperativity.

    A coarse grid locates candidate maxima (prominence filtered, endpoints
    included); each interior one is refined by golden-section search in w.
    """
    side = base.lattice.side_length
    if w_range is None:
        w_range = (2.0, 0.75 * side)
    w_lo, w_hi = w_range
    if not w_hi > w_lo > 0:
        raise ValueError("invalid waist range")
    _check_capacity(base, max_atoms)
    grid = np.linspace(w_lo, w_hi, coarse)
    matrix = _shared_matrix(base)
    table = waist_sweep(base, grid, numeric=True, detuning=detuning, threads=threads,
                        max_atoms=max_atoms, matrix=matrix)
    cs = table.column("C_free_numeric")
    idx = find_maxima(cs, rel_prominence=rel_prominence, include_edges=True)
    interior = [i for i in idx if 0 < i < len(grid) - 1]
    if not interior:
        raise ValueError("all cooperativity maxima lie on the waist-range boundary; extend waist range")

    def c_of_w(w):
        return _numeric_c(validate_config(_with_waist(base, w)), detuning, matrix)

    def refine(i):
        if i in interior:
            w, c = golden_section_max(c_of_w, grid[i - 1], grid[i + 1], rel_tol=rel_tol)
            if c >= cs[i]:
                return WaistPoint(float(w), float(c))
        return WaistPoint(float(grid[i]), float(cs[i]))

    points = _pmap(refine, idx, threads)
    points = sorted(points, key=lambda p: p.C, reverse=True)[:max_maxima]
    points.sort(key=lambda p: p.w)
    best = max(points, key=lambda p: p.C)
    return WaistOptimum(points, best, best.w / side)
