"""Coupled-dipole scattering of a Gaussian beam by a finite atomic array.

Dipole amplitudes obey the weak-drive steady-state equations

    0 = (i*delta - 1/2) beta_n + i * sum_{m != n} g_nm beta_m + i * Omega_n

with ``g`` the free-space dipole kernel projected on the dipole polarization.
The reflection into the target mode follows from projecting the dipoles onto
the beam profile; transmission is ``t = 1 + r``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla
from scipy.linalg.lapack import zgecon

from . import analytics
from .model import BeamSpec, LatticeSpec, SimulationConfig, atom_positions
from .search import golden_section_max, parabolic_vertex

RESIDUAL_TOL = 1e-10
MAX_CONDITION = 1e12
MODAL_MAX_ATOMS = 1600


class SolverError(RuntimeError):
    """Steady-state system is singular, ill-conditioned or inaccurately solved."""


class GridError(RuntimeError):
    """The resonance peak lies on the edge of the detuning grid."""


def green_kernel(r, polarization=(1, 0)):
    """Projected dipole-dipole kernel in units of gamma.

    ``r`` is a separation (or array of separations along the last axis) in
    wavelengths, 2D in-plane or 3D. Im g tends to 1/2 as r -> 0.
    """
    r = np.asarray(r, dtype=float)
    pol = np.array([complex(c) for c in polarization], dtype=complex)
    if r.shape[-1] == 2 and pol.size == 2:
        pass
    elif r.shape[-1] == 3 and pol.size == 2:
        pol = np.append(pol, 0)
    elif r.shape[-1] == 2 and pol.size == 3:
        r = np.concatenate([r, np.zeros(r.shape[:-1] + (1,))], axis=-1)
    dist = np.linalg.norm(r, axis=-1)
    if np.any(dist == 0):
        raise ValueError("green_kernel is undefined at zero separation")
    proj = np.tensordot(r, pol.conj(), axes=([-1], [0])) / dist
    c2 = np.abs(proj) ** 2
    rho = 2 * np.pi * dist
    return 0.75 * np.exp(1j * rho) * ((1 - c2) / rho + (1 - 3 * c2) * (1j / rho**2 - 1 / rho**3))


class InteractionMatrix:
    """Dense off-diagonal coupling matrix for a set of atoms.

    The diagonal (single-atom decay -1/2) is kept out of ``g`` and added by
    the solver; the elastic self-shift is absorbed into the detuning.
    """

    def __init__(self, positions: np.ndarray, polarization, g: np.ndarray):
        self.positions = positions
        self.polarization = polarization
        self.g = g

    @property
    def n(self) -> int:
        return self.g.shape[0]

    def decay_matrix(self) -> np.ndarray:
        """Collective decay matrix Gamma_nm = 2 Im g_nm, Gamma_nn = 1."""
        gam = 2 * self.g.imag
        np.fill_diagonal(gam, 1.0)
        return gam

    def system(self, delta: float) -> np.ndarray:
        a = 1j * self.g
        a[np.diag_indices_from(a)] += 1j * delta - 0.5
        return a

    @cached_property
    def modes(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigen-decomposition (eigenvalues, right eigenvectors) of ``g``."""
        return np.linalg.eig(self.g)


def interaction_matrix(positions, polarization=(1, 0)) -> InteractionMatrix:
    pos = np.asarray(positions, dtype=float)
    n = len(pos)
    g = np.zeros((n, n), dtype=complex)
    if n > 1:
        iu = np.triu_indices(n, k=1)
        sep = pos[iu[0]] - pos[iu[1]]
        if np.any(np.linalg.norm(sep, axis=-1) == 0):
            raise ValueError("duplicate atom positions")
        vals = green_kernel(sep, polarization)
        g[iu] = vals
        g[iu[1], iu[0]] = vals
    return InteractionMatrix(pos, tuple(polarization), g)


def _target_weights(positions, beam: BeamSpec, lattice: LatticeSpec) -> np.ndarray:
    # sqrt(Gamma0) * a * u(r_n) / sqrt(2); sqrt(Gamma0)*a is independent of a
    a = lattice.spacing_a
    return math.sqrt(analytics.gamma_zero(a)) * a * analytics.mode_profile(positions, beam.waist_w) / math.sqrt(2)


def drive_vector(positions, beam: BeamSpec, lattice: LatticeSpec) -> np.ndarray:
    """Per-atom Rabi drive from a unit-amplitude beam incident from one side."""
    return beam.input_amplitude * _target_weights(positions, beam, lattice).astype(complex)


def solve_steady_state(matrix: InteractionMatrix, drive, delta: float, *,
                       check: bool = True) -> np.ndarray:
    """Solve the steady-state dipole amplitudes by dense LU factorization."""
    drive = np.asarray(drive, dtype=complex)
    a = matrix.system(delta)
    with warnings.catch_warnings():
        # singularity is reported through the condition estimate below
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(a, check_finite=False)
    if check:
        anorm = np.abs(a).sum(axis=0).max()
        rcond, info = zgecon(lu, anorm, norm="1")
        if info != 0 or rcond * MAX_CONDITION < 1:
            raise SolverError(f"ill-conditioned system at delta={delta} (near-dark mode?)")
    beta = sla.lu_solve((lu, piv), -1j * drive, check_finite=False)
    if check:
        res = np.linalg.norm(a @ beta + 1j * drive)
        if res > RESIDUAL_TOL * max(np.linalg.norm(drive), 1e-300):
            raise SolverError(f"solver residual {res:.3e} exceeds tolerance")
    return beta


def project_reflection(amplitudes, positions, beam: BeamSpec, lattice: LatticeSpec) -> complex:
    """Reflection amplitude into the target mode; transmission is 1 + r."""
    w = _target_weights(positions, beam, lattice)
    return complex(1j * np.dot(w, np.asarray(amplitudes)))


@dataclass(frozen=True)
class DipoleSolution:
    delta: float
    amplitudes: np.ndarray
    r: complex

    @property
    def t(self) -> complex:
        return 1 + self.r

    @property
    def balance(self) -> float:
        return 1 - abs(self.r) ** 2 - abs(self.t) ** 2


class ArrayResponse:
    """Reflection of one lattice/beam pair as a function of detuning.

    ``method="lu"`` factorizes the full system at every detuning;
    ``method="modal"`` reuses an eigen-decomposition of the coupling matrix,
    which makes repeated evaluations (detuning scans, waist sweeps over the
    same lattice) cheap. ``"auto"`` picks modal up to MODAL_MAX_ATOMS atoms.
    """

    def __init__(self, lattice: LatticeSpec, beam: BeamSpec, matrix: InteractionMatrix | None = None,
                 method: str = "auto"):
        if method not in ("auto", "lu", "modal"):
            raise ValueError(f"unknown method {method!r}")
        self.lattice = lattice
        self.beam = beam
        self.positions = atom_positions(lattice) if matrix is None else matrix.positions
        self.matrix = matrix if matrix is not None else interaction_matrix(self.positions, lattice.polarization)
        if method == "auto":
            method = "modal" if self.matrix.n <= MODAL_MAX_ATOMS else "lu"
        self.method = method
        self.drive = drive_vector(self.positions, beam, lattice)
        self._weights = _target_weights(self.positions, beam, lattice)

    @cached_property
    def _modal(self):
        lam, vecs = self.matrix.modes
        coeff = np.linalg.solve(vecs, -1j * self.drive)
        out = self._weights @ vecs
        return lam, coeff * out

    def solve(self, delta: float) -> DipoleSolution:
        beta = solve_steady_state(self.matrix, self.drive, delta)
        return DipoleSolution(float(delta), beta, project_reflection(beta, self.positions, self.beam, self.lattice))

    def reflection(self, delta) -> np.ndarray | complex:
        """r(delta); vectorized over ``delta`` for the modal method."""
        if self.method == "lu":
            if np.ndim(delta) == 0:
                return self.solve(delta).r
            return np.array([self.solve(d).r for d in np.ravel(delta)])
        lam, weights = self._modal
        d = np.asarray(delta, dtype=float)
        denom = 1j * d[..., None] - 0.5 + 1j * lam
        r = 1j * np.sum(weights / denom, axis=-1)
        return complex(r) if r.ndim == 0 else r


@dataclass(frozen=True)
class Spectrum:
    deltas: np.ndarray
    r: np.ndarray
    response: ArrayResponse | None = None

    @property
    def t(self) -> np.ndarray:
        return 1 + self.r

    @property
    def balance(self) -> np.ndarray:
        return 1 - np.abs(self.r) ** 2 - np.abs(self.t) ** 2

    def rows(self):
        """(delta, re_r, im_r, |r|^2, |t|^2, balance) tuples."""
        for d, r in zip(self.deltas, self.r):
            t = 1 + r
            yield (float(d), r.real, r.imag, abs(r) ** 2, abs(t) ** 2, 1 - abs(r) ** 2 - abs(t) ** 2)


@dataclass(frozen=True)
class ResonanceSummary:
    r0: float
    delta_peak: float
    linewidth_fwhm: float
    cooperativity_numeric: float

    def to_dict(self) -> dict:
        return {"r0": self.r0, "delta_peak": self.delta_peak,
                "linewidth_fwhm": self.linewidth_fwhm,
                "cooperativity_numeric": self.cooperativity_numeric}


def detuning_scan(config: SimulationConfig, *, deltas=None, response: ArrayResponse | None = None,
                  method: str = "lu") -> Spectrum:
    """Reflection spectrum over the config's detuning grid (or explicit ``deltas``)."""
    if response is None:
        response = ArrayResponse(config.lattice, config.beam, method=method)
    if deltas is None:
        deltas = config.detuning.values()
    deltas = np.asarray(deltas, dtype=float)
    r = np.asarray(response.reflection(deltas), dtype=complex).reshape(deltas.shape)
    return Spectrum(deltas, r, response)


def _bisect(f, lo, hi, iters=60):
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def extract_resonance(spectrum: Spectrum, *, rel_tol: float = 1e-4, max_iter: int = 20) -> ResonanceSummary:
    """Peak reflectivity, its detuning and FWHM of |r|^2.

    The grid maximum is refined with a parabola through its neighbours and
    then golden-section search; the reported r0 comes from a direct LU solve
    at the refined detuning.
    """
    d = spectrum.deltas
    mag = np.abs(spectrum.r)
    i = int(np.argmax(mag))
    if i == 0 or i == len(d) - 1:
        raise GridError("resonance peak at detuning grid boundary; widen detuning grid")
    resp = spectrum.response
    if resp is None:
        x0 = parabolic_vertex(d[i - 1:i + 2], mag[i - 1:i + 2])
        return _summary(float(np.clip(x0, d[i - 1], d[i + 1])), float(mag[i]), spectrum, None)

    def absr(x):
        return abs(resp.reflection(x))

    x0 = parabolic_vertex(d[i - 1:i + 2], mag[i - 1:i + 2])
    best_x, best_v = float(d[i]), float(mag[i])
    if d[i - 1] < x0 < d[i + 1]:
        v0 = absr(x0)
        if v0 > best_v:
            best_x, best_v = x0, v0
    x, v = golden_section_max(absr, d[i - 1], d[i + 1], rel_tol=rel_tol, max_iter=max_iter)
    if v > best_v:
        best_x, best_v = x, v
    if resp.method != "lu":
        best_v = abs(resp.solve(best_x).r)
    return _summary(best_x, best_v, spectrum, resp)


def _grid_crossing(d, mag2, i, half, direction):
    j = i
    while 0 < j < len(d) - 1 and mag2[j + direction] > half:
        j += direction
    k = j + direction
    if not 0 <= k < len(d):
        return math.nan
    # linear interpolation between the last point above and the first below
    return float(d[j] + (half - mag2[j]) * (d[k] - d[j]) / (mag2[k] - mag2[j]))


def _summary(x_peak, r0, spectrum, resp) -> ResonanceSummary:
    r0 = min(r0, 1.0)
    half = 0.5 * r0 * r0
    d = spectrum.deltas
    step = d[1] - d[0]
    edges = []
    if resp is None:
        mag2 = np.abs(spectrum.r) ** 2
        i = int(np.argmax(mag2))
        edges = [_grid_crossing(d, mag2, i, half, -1), _grid_crossing(d, mag2, i, half, 1)]
    else:
        def f(x):
            return abs(resp.reflection(x)) ** 2 - half

        for direction in (-1, 1):
            # step outwards (doubling) until |r|^2 falls below half maximum
            inner, outer = x_peak, x_peak + direction * step
            k = 0
            while f(outer) > 0 and k < 40:
                inner, outer = outer, x_peak + direction * step * 2 ** (k + 1)
                k += 1
            edges.append(_bisect(f, inner, outer) if f(outer) <= 0 else math.nan)
    fwhm = abs(edges[1] - edges[0])
    coop = r0 / (1 - r0) if r0 < 1 else math.inf
    return ResonanceSummary(float(r0), float(x_peak), float(fwhm), float(coop))


def numeric_cooperativity(config: SimulationConfig, *, deltas=None, response: ArrayResponse | None = None,
                          method: str = "auto") -> ResonanceSummary:
    """Free-space cooperativity from the refined peak reflectivity."""
    spec = detuning_scan(config, deltas=deltas, response=response, method=method)
    return extract_resonance(spec)


def collective_mode_rate(positions, polarization=(1, 0), k_perp=(0.0, 0.0)) -> float:
    """Decay rate of the collective mode with transverse wavevector ``k_perp``.

    Evaluated at the atom closest to the array center; ``k_perp`` is in units
    of 2*pi/lambda.
    """
    pos = np.asarray(positions, dtype=float)
    if len(pos) == 1:
        return 1.0
    n0 = int(np.argmin(np.sum(pos * pos, axis=1)))
    sep = np.delete(pos[n0] - pos, n0, axis=0)
    phase = np.exp(2j * np.pi * (sep @ np.asarray(k_perp, dtype=float)))
    return float(1 + 2 * np.sum(green_kernel(sep, polarization) * phase).imag)
