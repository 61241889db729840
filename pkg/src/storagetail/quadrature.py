"""Adaptive quadrature helpers on log-transformed axes.

Integrals of the form  int_0^inf f(s) ds/s  are computed as  int f(e^w) dw
over expanding dyadic windows around a caller-supplied center; each window
is handled by QUADPACK's adaptive Gauss-Kronrod rule.  A log-domain variant
integrates exp(log_f(w)) with the peak factored out, so integrands far below
the double-precision floor (stretched-exponential tails at large levels)
stay computable.

Divergence is declared after ``max_levels`` dyadic expansions per side; the
error then carries the partial value.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad

from .errors import NumericalError

__all__ = ["dyadic_log_axis", "dyadic_log_domain", "gauss_segments_to_zero"]

REL_TOL = 1e-6
ABS_TOL = 1e-10
MAX_LEVELS = 30
_SEG_EPS = dict(epsabs=1e-13, epsrel=1e-10, limit=200)


def dyadic_log_axis(
    integrand_w,
    center: float = 0.0,
    lo: float = -math.inf,
    hi: float = math.inf,
    rel_tol: float = REL_TOL,
    abs_tol: float = ABS_TOL,
    max_levels: int = MAX_LEVELS,
) -> tuple[float, float]:
    """Integrate ``integrand_w`` over w in (lo, hi) with windows around center.

    Returns (value, error_estimate).  Raises ``NumericalError`` with the
    partial value if either side keeps contributing past the level budget.
    """
    center = min(max(center, lo), hi)
    a0, b0 = max(lo, center - 1.0), min(hi, center + 1.0)
    total, err = 0.0, 0.0
    if a0 < b0:
        pts = [center] if a0 < center < b0 else None
        val, e = quad(integrand_w, a0, b0, points=pts, **_SEG_EPS)
        total += val
        err += abs(e)

    def extend(edge: float, bound: float, direction: int) -> None:
        nonlocal total, err
        quiet = 0
        for k in range(max_levels + 1):
            if direction > 0 and edge >= bound:
                return
            if direction < 0 and edge <= bound:
                return
            width = 2.0 ** k
            nxt = min(bound, edge + width) if direction > 0 else max(bound, edge - width)
            a, b = (edge, nxt) if direction > 0 else (nxt, edge)
            val, e = quad(integrand_w, a, b, **_SEG_EPS)
            total += val
            err += abs(e)
            edge = nxt
            tol = max(abs_tol, rel_tol * abs(total)) * 1e-2
            quiet = quiet + 1 if abs(val) <= tol else 0
            if quiet >= 2:
                return
        raise NumericalError(
            "log-axis quadrature did not converge within the level budget",
            partial=total,
        )

    extend(b0, hi, +1)
    extend(a0, lo, -1)
    return total, err


def dyadic_log_domain(
    log_integrand_w,
    center: float = 0.0,
    lo: float = -math.inf,
    hi: float = math.inf,
    rel_tol: float = REL_TOL,
    abs_tol: float = ABS_TOL,
) -> tuple[float, float]:
    """Compute log of int exp(log_integrand_w(w)) dw over (lo, hi).

    The peak is located by probing around the center and factored out, so the
    scaled integrand is O(1).  Returns (log_value, relative_error); the log
    value is -inf for an identically-zero integrand.
    """
    probe_lo = max(lo, center - 4.0)
    probe_hi = min(hi, center + 4.0)
    if probe_hi <= probe_lo:
        probe_lo = probe_hi - 1.0
    probes = np.linspace(probe_lo, probe_hi, 65)
    vals = np.array([log_integrand_w(w) for w in probes], dtype=float)
    peak = float(np.max(vals))
    if math.isnan(peak) or peak == math.inf:
        raise NumericalError("log integrand produced a non-finite peak")
    if peak == -math.inf:
        return -math.inf, 0.0
    peak_w = float(probes[int(np.argmax(vals))])

    for _attempt in range(2):
        seen = {"max": peak}

        def scaled(w: float) -> float:
            lv = log_integrand_w(w)
            if lv > seen["max"]:
                seen["max"] = lv
            return math.exp(min(lv - peak, 700.0))

        val, err = dyadic_log_axis(
            scaled, center=peak_w, lo=lo, hi=hi, rel_tol=rel_tol, abs_tol=abs_tol
        )
        if seen["max"] <= peak + 1.0:
            break
        peak = seen["max"]  # probe missed the true peak; rescale and retry
    if val <= 0:
        return -math.inf, 0.0
    return peak + math.log(val), err / val


_GL_NODES: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gl(n: int):
    if n not in _GL_NODES:
        x, w = np.polynomial.legendre.leggauss(n)
        _GL_NODES[n] = (x, w)
    return _GL_NODES[n]


def gauss_segments_to_zero(f_vec, b: float, n_halvings: int = 52, order: int = 40) -> float:
    """int_0^b f(x) dx for a vectorized integrand, by Gauss-Legendre on
    geometrically shrinking segments toward 0 (handles mild endpoint
    steepness without adaptive machinery)."""
    if b <= 0:
        return 0.0
    x, w = _gl(order)
    total = 0.0
    hi = b
    for _ in range(n_halvings):
        lo = hi * 0.5
        mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
        total += half * float(np.dot(w, f_vec(mid + half * x)))
        hi = lo
    mid = half = 0.5 * hi  # final sliver [0, hi]
    total += half * float(np.dot(w, f_vec(mid + half * x)))
    return total
