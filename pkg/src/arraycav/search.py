"""One-dimensional maximum search helpers."""

from __future__ import annotations

import math

import numpy as np
from scipy.signal import find_peaks

INV_PHI = (math.sqrt(5) - 1) / 2


def parabolic_vertex(x, y) -> float:
    """Abscissa of the vertex of the parabola through three points."""
    x0, x1, x2 = (float(v) for v in x)
    y0, y1, y2 = (float(v) for v in y)
    den = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / den
    b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / den
    if a == 0:
        return x1
    return -b / (2 * a)


def golden_section_max(f, lo: float, hi: float, *, rel_tol: float = 1e-4,
                       max_iter: int = 100) -> tuple[float, float]:
    """Maximize a unimodal ``f`` on [lo, hi]; returns (x, f(x)) of the best point seen.

    Stops once the bracket width is below ``rel_tol * max(|x|, 1)`` or after
    ``max_iter`` iterations.
    """
    a, b = float(lo), float(hi)
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    best = (c, fc) if fc >= fd else (d, fd)
    for _ in range(max_iter):
        if b - a <= rel_tol * max(abs(0.5 * (a + b)), 1.0):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
            if fc > best[1]:
                best = (c, fc)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
            if fd > best[1]:
                best = (d, fd)
    return best


def find_maxima(values, *, rel_prominence: float = 0.02, include_edges: bool = True) -> list[int]:
    """Indices of local maxima whose prominence is at least ``rel_prominence`` of the peak value.

    With ``include_edges`` an endpoint counts as a maximum when it exceeds its
    only neighbour (a maximum of the function restricted to the sampled
    interval); its prominence is measured on the interior side.
    """
    y = np.asarray(values, dtype=float)
    if y.size == 0:
        return []
    if y.size == 1:
        return [0] if include_edges else []
    threshold = rel_prominence * float(np.max(np.abs(y)))
    if include_edges:
        floor = float(np.min(y)) - 1.0
        padded = np.concatenate([[floor], y, [floor]])
        peaks, _ = find_peaks(padded, prominence=threshold)
        return [int(p - 1) for p in peaks]
    peaks, _ = find_peaks(y, prominence=threshold)
    return [int(p) for p in peaks]
