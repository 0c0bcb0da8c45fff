"""Closed-form rate engine for a square atomic array, free space or in a cavity.

Rates are in units of the single-atom decay rate and lengths in wavelengths.
Wavevectors passed as ``k_perp`` are in units of 2*pi/lambda, so a transverse
component of magnitude 1 is grazing.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import erf

from .model import BeamSpec, CavitySpec, SimulationConfig

#: Orders with |1 - |q|^2| below this are treated as grazing, i.e. divergent.
DIVERGENCE_GUARD = 1e-9


@dataclass(frozen=True)
class RateBreakdown:
    gamma_zero: float
    eta: float
    gamma_target: float
    loss_s: float
    loss_overlap: float
    loss_diff: float
    cooperativity: float
    efficiency_r0: float
    inefficiency_eps: float
    resonant_flag: bool
    loss_individual: float = 0.0

    @property
    def gamma_loss(self) -> float:
        return self.loss_s + self.loss_overlap + self.loss_diff + self.loss_individual

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> RateBreakdown:
        return cls(**{k: (float(v) if k != "resonant_flag" else bool(v)) for k, v in doc.items()})


@dataclass(frozen=True)
class DiffractionOrder:
    m_x: int
    m_y: int
    rate: float  # in units of gamma_zero


@dataclass(frozen=True)
class ReferenceEnsembleSpec:
    density_rho: float
    length_Lz: float

    def __post_init__(self):
        if not (self.density_rho > 0 and self.length_Lz > 0):
            raise ValueError("density_rho and length_Lz must be positive")

    @property
    def a_ref(self) -> float:
        return math.sqrt(1.0 / (self.density_rho * self.length_Lz))

    @classmethod
    def matching_spacing(cls, a: float, length_Lz: float = 1.0) -> ReferenceEnsembleSpec:
        """Ensemble whose mean transverse distance equals ``a``."""
        return cls(1.0 / (a * a * length_Lz), length_Lz)


def mode_profile(r_perp, w: float):
    """Gaussian target-mode amplitude sqrt(2/(pi w^2)) exp(-|r|^2/w^2).

    ``r_perp`` may be a single (x, y) pair or an (N, 2) array.
    """
    r = np.asarray(r_perp, dtype=float)
    r2 = np.sum(r * r, axis=-1)
    return math.sqrt(2.0 / math.pi) / w * np.exp(-r2 / (w * w))


def overlap_eta(w: float, side_x: float, side_y: float | None = None) -> float:
    """Fraction of target-mode power on a centered side_x by side_y array footprint."""
    if side_y is None:
        side_y = side_x
    s = math.sqrt(2.0) * w
    return float(erf(side_x / s) * erf(side_y / s))


def lattice_eta(lattice, w: float) -> float:
    lx, ly = lattice.side_lengths
    return overlap_eta(w, lx, ly)


def gamma_zero(a: float) -> float:
    """Collective emission rate of the uniformly excited infinite array."""
    return 3.0 / (4.0 * math.pi) / (a * a)


def _order_grid(a: float):
    bound = math.ceil(a) + 1
    ms = range(-bound, bound + 1)
    return [(mx, my) for mx in ms for my in ms if (mx, my) != (0, 0)]


def _order_key(o):
    return (o[0] ** 2 + o[1] ** 2, o[0], o[1])


def propagating_orders(a: float) -> list[tuple[int, int]]:
    """Nonzero diffraction orders with m_x^2 + m_y^2 < a^2."""
    return sorted((o for o in _order_grid(a) if o[0] ** 2 + o[1] ** 2 < a * a), key=_order_key)


def _order_terms(a: float, polarization, k_perp=(0.0, 0.0)):
    """Per-order rates (units of gamma_zero) for orders with |q| < 1, plus divergence flag."""
    ex, ey = (complex(c) for c in polarization)
    kx, ky = float(k_perp[0]), float(k_perp[1])
    # shifted wavevectors can reach one extra order beyond the unshifted bound
    bound = math.ceil(a * (1 + math.hypot(kx, ky))) + 1
    ms = range(-bound, bound + 1)
    terms = []
    divergent = False
    for mx in ms:
        for my in ms:
            if mx == 0 and my == 0:
                continue
            qx, qy = mx / a + kx, my / a + ky
            den = 1.0 - (qx * qx + qy * qy)
            if abs(den) < DIVERGENCE_GUARD:
                divergent = True
                continue
            if den <= 0:
                continue
            num = 1.0 - abs(qx * ex + qy * ey) ** 2
            terms.append(DiffractionOrder(mx, my, num / math.sqrt(den)))
    terms.sort(key=lambda d: _order_key((d.m_x, d.m_y)))
    return terms, divergent


def diffraction_orders(a: float, polarization=(1, 0), k_perp=(0.0, 0.0)) -> list[DiffractionOrder]:
    """Contributing orders with their individual rates in units of gamma_zero."""
    return _order_terms(a, polarization, k_perp)[0]


def gamma_diff_shifted(a: float, polarization, k_perp) -> float:
    """Diffraction loss for a transverse-momentum component ``k_perp``.

    Returns ``inf`` when some order sits on the propagation threshold.
    """
    if math.hypot(*k_perp) >= 1:
        raise ValueError("|k_perp| must be < 1")
    terms, divergent = _order_terms(a, polarization, k_perp)
    if divergent:
        return math.inf
    return gamma_zero(a) * math.fsum(t.rate for t in terms)


def gamma_diff(a: float, polarization=(1, 0)) -> float:
    """Collective scattering rate into all nonzero propagating diffraction orders."""
    return gamma_diff_shifted(a, polarization, (0.0, 0.0))


def resonance_spacings(a_max: float) -> list[float]:
    """Spacings sqrt(m_x^2 + m_y^2) <= a_max where a new diffraction order opens."""
    bound = math.ceil(a_max)
    norms = {mx * mx + my * my for mx in range(0, bound + 1) for my in range(0, bound + 1)}
    norms.discard(0)
    return [math.sqrt(n) for n in sorted(norms) if n <= a_max * a_max * (1 + 1e-15)]


def combine_rates(gamma0: float, eta: float, gamma_target: float, *, loss_s: float = 0.0,
                  loss_overlap: float = 0.0, loss_diff: float = 0.0,
                  loss_individual: float = 0.0) -> RateBreakdown:
    """Assemble C, r0 and eps from the individual rates."""
    if math.isinf(loss_diff):
        return RateBreakdown(gamma0, eta, gamma_target, loss_s, loss_overlap, loss_diff,
                             0.0, 0.0, 1.0, True, loss_individual)
    loss = loss_s + loss_overlap + loss_diff + loss_individual
    if loss == 0:
        coop = math.inf
        r0, eps = 1.0, 0.0
    else:
        coop = gamma_target / loss
        r0 = coop / (1 + coop)
        eps = 1 / (1 + coop)
    return RateBreakdown(gamma0, eta, gamma_target, loss_s, loss_overlap, loss_diff,
                         coop, r0, eps, False, loss_individual)


def cavity_enhancement(finesse: float) -> float:
    return 4.0 * finesse / math.pi


def free_space_rates(config: SimulationConfig) -> RateBreakdown:
    lat = config.lattice
    g0 = gamma_zero(lat.spacing_a)
    eta = lattice_eta(lat, config.beam.waist_w)
    return combine_rates(g0, eta, eta * g0, loss_s=config.gamma_s,
                         loss_overlap=(1 - eta) * g0,
                         loss_diff=gamma_diff(lat.spacing_a, lat.polarization))


def cavity_rates(config: SimulationConfig) -> RateBreakdown:
    """Rates with the target-mode coupling enhanced by the cavity; losses unchanged."""
    if not config.has_cavity:
        raise ValueError("config has no cavity; use free_space_rates")
    free = free_space_rates(config)
    return combine_rates(free.gamma_zero, free.eta,
                         cavity_enhancement(config.cavity.finesse) * free.gamma_target,
                         loss_s=free.loss_s, loss_overlap=free.loss_overlap,
                         loss_diff=free.loss_diff)


def system_rates(config: SimulationConfig) -> RateBreakdown:
    return cavity_rates(config) if config.has_cavity else free_space_rates(config)


def reference_rates(ref: ReferenceEnsembleSpec, beam: BeamSpec,
                    cavity: CavitySpec | None = None,
                    side_length: float | None = None) -> RateBreakdown:
    """Dilute-ensemble reference: individual decay as the only loss.

    ``side_length`` sets the transverse extent used for the overlap fraction;
    without it the ensemble is taken to cover the whole mode.
    """
    g0 = gamma_zero(ref.a_ref)
    eta = 1.0 if side_length is None else overlap_eta(beam.waist_w, side_length)
    gamma = eta * g0
    if cavity is not None and cavity.present:
        gamma *= cavity_enhancement(cavity.finesse)
    return combine_rates(g0, eta, gamma, loss_individual=1.0)
