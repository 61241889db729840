"""Heavy-tail function families and numeric class diagnostics.

A tail function r is a nonincreasing positive function on [0, inf) with
r(x) -> 0.  Four families are provided:

* ``PowerTail``      r(x) = K (1+x)^(-rho), regularly varying with index -rho
* ``WeibullTail``    r(x) = G x^rho_g exp(-A x^alpha_w), stretched-exponential
* ``LogTail``        r(x) = K / log(e + x), slowly varying
* ``TabulatedTail``  monotone interpolation of (x_i, r_i) pairs

The diagnostics below probe membership in the classical heavy-tail classes
by evaluating the defining ratio limits on a finite grid:

* PD (positive decrease):   limsup r(lam*u)/r(u) < 1 for some lam > 1
* OR (O-regular variation): liminf r(lam*u)/r(u) > 0 for some lam > 1
* L  (long-tailed):         r(u + shift)/r(u) -> 1
* S  (subexponential):      two-fold convolution tail / single tail -> 2

These are numeric diagnostics with documented thresholds, not proofs.
All operations are pure functions; objects are immutable after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ExtrapolationError, InvariantViolation

__all__ = [
    "PowerTail",
    "WeibullTail",
    "LogTail",
    "TabulatedTail",
    "zero_tail",
    "tail_from_json",
    "tail_to_json",
    "DiagnosticThresholds",
    "ClassVerdict",
    "class_diagnostic",
    "TailIndexEstimate",
    "tail_index_estimate",
    "subexp_convolution_diagnostic",
]


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerTail:
    """r(x) = K (1+x)^(-rho) for x >= 0, with K > 0 and rho > 0."""

    K: float
    rho: float

    def __post_init__(self):
        if not (self.K > 0):
            raise InvariantViolation(f"PowerTail K must be > 0, got {self.K}")
        if not (self.rho > 0):
            raise InvariantViolation(f"PowerTail rho must be > 0, got {self.rho}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore"):
            out = self.K * np.power(1.0 + x, -self.rho)
        return out if out.ndim else float(out)

    def log_eval(self, x):
        x = np.asarray(x, dtype=float)
        out = math.log(self.K) - self.rho * np.log1p(x)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class WeibullTail:
    """r(x) = G x^rho_g exp(-A x^alpha_w) for x > 0.

    alpha_w must lie strictly inside (0, 1) and A > 0.  For rho_g < 0 the
    value is capped at r(1) on (0, 1] so the tail stays bounded near the
    origin; ``cap_x`` records the cap point (None when no cap applies).
    """

    G: float
    rho_g: float
    A: float
    alpha_w: float

    def __post_init__(self):
        if not (self.G > 0):
            raise InvariantViolation(f"WeibullTail G must be > 0, got {self.G}")
        if not (0.0 < self.alpha_w < 1.0):
            raise InvariantViolation(
                f"WeibullTail alpha_w must be in (0,1), got {self.alpha_w}"
            )
        if not (self.A > 0):
            raise InvariantViolation(f"WeibullTail A must be > 0, got {self.A}")

    @property
    def cap_x(self) -> float | None:
        return 1.0 if self.rho_g < 0 else None

    def __call__(self, x):
        out = self.log_eval(x)
        out = np.exp(out)
        return out if np.ndim(out) else float(out)

    def log_eval(self, x):
        x = np.asarray(x, dtype=float)
        if self.rho_g < 0:
            x = np.maximum(x, 1.0)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            if self.rho_g == 0:
                poly = 0.0
            else:
                poly = self.rho_g * np.log(x)
            out = math.log(self.G) + poly - self.A * np.power(x, self.alpha_w)
        # x = 0 with rho_g > 0: the formula gives r = 0, i.e. log r = -inf
        out = np.where(np.isnan(out), -np.inf, out)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class LogTail:
    """r(x) = K / log(e + x); slowly varying, not a valid jump-tail input."""

    K: float

    def __post_init__(self):
        if not (self.K > 0):
            raise InvariantViolation(f"LogTail K must be > 0, got {self.K}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = self.K / np.log(math.e + x)
        return out if out.ndim else float(out)

    def log_eval(self, x):
        x = np.asarray(x, dtype=float)
        out = math.log(self.K) - np.log(np.log(math.e + x))
        return out if out.ndim else float(out)


class TabulatedTail:
    """Tail given by (x_i, r_i) pairs, interpolated linearly in log-log.

    Log-log interpolation preserves monotonicity and is exact on pure power
    laws.  Queries outside [x_0, x_n] raise ``ExtrapolationError`` unless an
    extrapolation rule is configured:

    * ``"clamp"``     hold the end values constant
    * ``"loglinear"`` extend the end slopes in log-log coordinates

    The special all-zero table represents the zero tail (no jumps); mixed
    zero/positive values are rejected.
    """

    def __init__(self, x, r, extrapolation: str = "error"):
        x = np.asarray(x, dtype=float)
        r = np.asarray(r, dtype=float)
        if x.ndim != 1 or x.shape != r.shape or x.size < 2:
            raise InvariantViolation("TabulatedTail needs matching 1-d arrays, size >= 2")
        if not np.all(np.diff(x) > 0) or x[0] <= 0:
            raise InvariantViolation("TabulatedTail x grid must be positive and strictly increasing")
        if extrapolation not in ("error", "clamp", "loglinear"):
            raise InvariantViolation(f"unknown extrapolation rule {extrapolation!r}")
        self.is_zero = bool(np.all(r == 0.0))
        if not self.is_zero:
            if not np.all(r > 0):
                raise InvariantViolation("TabulatedTail values must be strictly positive (or all zero)")
            if np.any(np.diff(r) > 0):
                raise InvariantViolation("TabulatedTail values must be nonincreasing")
        self.x = x
        self.r = r
        self.extrapolation = extrapolation
        if not self.is_zero:
            self._lx = np.log(x)
            self._lr = np.log(r)

    def __call__(self, q):
        out = np.exp(self.log_eval(q))
        return out if np.ndim(out) else float(out)

    def log_eval(self, q):
        q = np.asarray(q, dtype=float)
        scalar = q.ndim == 0
        q = np.atleast_1d(q)
        if self.is_zero:
            out = np.full(q.shape, -np.inf)
            return out[0] if scalar else out
        below = q < self.x[0]
        above = q > self.x[-1]
        if self.extrapolation == "error" and (below.any() or above.any()):
            bad = q[below | above][0]
            raise ExtrapolationError(
                f"query x={bad!r} outside tabulated hull [{self.x[0]}, {self.x[-1]}]"
            )
        with np.errstate(divide="ignore"):
            lq = np.log(np.maximum(q, np.finfo(float).tiny))
        if self.extrapolation == "loglinear":
            lo_slope = (self._lr[1] - self._lr[0]) / (self._lx[1] - self._lx[0])
            hi_slope = (self._lr[-1] - self._lr[-2]) / (self._lx[-1] - self._lx[-2])
            out = np.interp(lq, self._lx, self._lr)
            out = np.where(below, self._lr[0] + lo_slope * (lq - self._lx[0]), out)
            out = np.where(above, self._lr[-1] + hi_slope * (lq - self._lx[-1]), out)
        else:  # clamp (and in-hull part of "error")
            out = np.interp(lq, self._lx, self._lr)
        out = np.where(np.isinf(q), -np.inf, out)
        return out[0] if scalar else out

    def __repr__(self):
        return (
            f"TabulatedTail(n={self.x.size}, hull=[{self.x[0]:g}, {self.x[-1]:g}], "
            f"extrapolation={self.extrapolation!r}, zero={self.is_zero})"
        )


def zero_tail() -> TabulatedTail:
    """The identically-zero tail (a jump measure with no jumps)."""
    return TabulatedTail([1.0, 2.0], [0.0, 0.0], extrapolation="clamp")


TailFunction = PowerTail | WeibullTail | LogTail | TabulatedTail


# ---------------------------------------------------------------------------
# JSON (the CLI wire format; family names are part of the config schema)
# ---------------------------------------------------------------------------

def tail_to_json(tail: TailFunction) -> dict:
    if isinstance(tail, PowerTail):
        return {"family": "power", "K": tail.K, "rho": tail.rho}
    if isinstance(tail, WeibullTail):
        return {
            "family": "weibull",
            "G": tail.G,
            "rho_g": tail.rho_g,
            "A": tail.A,
            "alpha_w": tail.alpha_w,
        }
    if isinstance(tail, LogTail):
        return {"family": "log", "K": tail.K}
    if isinstance(tail, TabulatedTail):
        return {
            "family": "tabulated",
            "x": [float(v) for v in tail.x],
            "r": [float(v) for v in tail.r],
            "extrapolation": tail.extrapolation,
        }
    raise TypeError(f"not a tail function: {tail!r}")


def tail_from_json(obj: dict) -> TailFunction:
    from .errors import SchemaError

    if not isinstance(obj, dict):
        raise SchemaError("tail must be an object", key="tail")
    family = obj.get("family")
    allowed = {
        "power": {"family", "K", "rho"},
        "weibull": {"family", "G", "rho_g", "A", "alpha_w"},
        "log": {"family", "K"},
        "tabulated": {"family", "x", "r", "extrapolation"},
    }
    if family not in allowed:
        raise SchemaError(f"unknown tail family {family!r}", key="family")
    for k in obj:
        if k not in allowed[family]:
            raise SchemaError(f"unknown key {k!r} in tail object", key=k)
    try:
        if family == "power":
            return PowerTail(K=float(obj["K"]), rho=float(obj["rho"]))
        if family == "weibull":
            return WeibullTail(
                G=float(obj["G"]),
                rho_g=float(obj["rho_g"]),
                A=float(obj["A"]),
                alpha_w=float(obj["alpha_w"]),
            )
        if family == "log":
            return LogTail(K=float(obj["K"]))
        return TabulatedTail(
            obj["x"], obj["r"], extrapolation=obj.get("extrapolation", "error")
        )
    except KeyError as exc:
        raise SchemaError(f"missing tail key {exc.args[0]!r}", key=exc.args[0]) from None


# ---------------------------------------------------------------------------
# Class diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiagnosticThresholds:
    """Decision thresholds for the ratio diagnostics.

    Defaults are deliberate configuration, not estimates: the diagnostics
    report numeric evidence at finite u, and the thresholds say how much
    slack that evidence is given.
    """

    delta_pd: float = 0.05
    delta_or: float = 0.05
    delta_l: float = 0.02
    delta_s: float = 0.05
    s_fail_band: tuple[float, float] = (1.5, 3.0)
    s_mesh_tol: float = 0.02
    matuszewska_floor: float = -50.0
    tail_fraction: float = 0.25  # "tail end" of a grid = last 25% of points
    min_decades: float = 3.0
    min_points: int = 8


DEFAULT_THRESHOLDS = DiagnosticThresholds()


@dataclass
class ClassVerdict:
    class_id: str
    verdict: str  # "pass" | "fail" | "inconclusive"
    ratio_curve: list[tuple[float, float]]
    estimated_index: float | None
    diagnostics: str
    details: dict = field(default_factory=dict)


def _tail_end(values: np.ndarray, fraction: float) -> np.ndarray:
    n = len(values)
    k = max(2, int(math.ceil(fraction * n)))
    return values[n - k :]


def class_diagnostic(
    tail: TailFunction,
    class_id: str,
    lam: float,
    u_grid,
    thresholds: DiagnosticThresholds = DEFAULT_THRESHOLDS,
) -> ClassVerdict:
    """Ratio diagnostic for class PD, OR or L.

    For PD and OR, ``lam`` is the scaling factor (> 1); for L it is the
    additive shift (> 0).  The verdict looks only at the tail end of the
    grid, since the defining limits live at infinity.
    """
    u = np.asarray(u_grid, dtype=float)
    if class_id not in ("PD", "OR", "L"):
        raise ValueError(f"class_id must be PD, OR or L, got {class_id!r}")
    if class_id in ("PD", "OR") and not lam > 1:
        raise ValueError("PD/OR diagnostics need lam > 1")
    if class_id == "L" and not lam > 0:
        raise ValueError("L diagnostic needs a positive shift")
    if u.size < 2 or np.any(np.diff(u) <= 0) or u[0] <= 0:
        raise ValueError("u_grid must be positive and strictly increasing")

    arg = u * lam if class_id in ("PD", "OR") else u + lam
    ratios = np.asarray(tail(arg), dtype=float) / np.asarray(tail(u), dtype=float)
    curve = list(zip(u.tolist(), ratios.tolist()))

    decades = math.log10(u[-1] / u[0])
    if decades < thresholds.min_decades or u.size < thresholds.min_points:
        return ClassVerdict(
            class_id,
            "inconclusive",
            curve,
            None,
            f"grid spans {decades:.2f} decades with {u.size} points; too short",
        )

    te = _tail_end(ratios, thresholds.tail_fraction)
    est = None
    if class_id in ("PD", "OR"):
        with np.errstate(divide="ignore"):
            est = float(np.median(np.log(te) / math.log(lam)))
    if class_id == "PD":
        sup = float(np.max(te))
        ok = sup <= 1.0 - thresholds.delta_pd
        text = f"tail-end sup ratio {sup:.6g} vs threshold {1 - thresholds.delta_pd}"
    elif class_id == "OR":
        inf = float(np.min(te))
        ok = inf >= thresholds.delta_or
        text = f"tail-end inf ratio {inf:.6g} vs threshold {thresholds.delta_or}"
    else:
        dev = float(np.max(np.abs(te - 1.0)))
        ok = dev <= thresholds.delta_l
        text = f"tail-end max |ratio-1| = {dev:.6g} vs threshold {thresholds.delta_l}"
    return ClassVerdict(class_id, "pass" if ok else "fail", curve, est, text)


@dataclass(frozen=True)
class TailIndexEstimate:
    rv_index: float
    matuszewska_upper: float  # -inf sentinel when below the configured floor


def tail_index_estimate(
    tail: TailFunction,
    u_grid,
    thresholds: DiagnosticThresholds = DEFAULT_THRESHOLDS,
) -> TailIndexEstimate:
    """Least-squares slope of log r vs log u, plus an upper Matuszewska probe.

    The slope is fit over the tail half of the grid.  The Matuszewska probe
    takes the supremum of log(r(lam u)/r(u))/log lam over lam in {2, 4, 8}
    at the three largest grid points; values below the floor are reported as
    the -inf sentinel (decay faster than any power).
    """
    u = np.asarray(u_grid, dtype=float)
    if u.size < thresholds.min_points or math.log10(u[-1] / u[0]) < thresholds.min_decades:
        raise ValueError("u_grid must span at least 3 decades with several points")
    r = np.asarray(tail(u), dtype=float)
    if np.any(r <= 0) or not np.all(np.isfinite(r)):
        raise InvariantViolation("tail evaluations must be positive and finite")

    half = u.size // 2
    lx, ly = np.log(u[half:]), np.log(r[half:])
    slope = float(np.polyfit(lx, ly, 1)[0])

    top = u[-3:]
    probes = []
    for lam in (2.0, 4.0, 8.0):
        num = np.asarray(tail.log_eval(lam * top), dtype=float)
        den = np.asarray(tail.log_eval(top), dtype=float)
        probes.append((num - den) / math.log(lam))
    mat = float(np.max(probes))
    if mat < thresholds.matuszewska_floor:
        mat = -math.inf
    return TailIndexEstimate(rv_index=slope, matuszewska_upper=mat)


def subexp_convolution_diagnostic(
    tail: TailFunction,
    u_max: float,
    mesh_n: int = 100_000,
    thresholds: DiagnosticThresholds = DEFAULT_THRESHOLDS,
    n_curve: int = 48,
) -> ClassVerdict:
    """Subexponentiality probe via a discrete two-fold convolution.

    Interprets Fbar(u) = min(1, r(u)) as a survival function on [0, inf) and
    computes T(u) = P(xi + eta > u) / P(xi > u) for iid xi, eta by
    left-endpoint Stieltjes sums on a uniform mesh.  Discretization error is
    self-estimated by mesh halving; if the estimate at u_max exceeds the
    tolerance the verdict is inconclusive.  Passes when T(u_max) is within
    delta_s of 2; fails when T(u_max) leaves the configured band.
    """
    if mesh_n < 1000:
        raise ValueError("mesh_n must be at least 1000")
    mesh_n += mesh_n % 2  # halving needs an even mesh
    h = u_max / mesh_n
    x = np.arange(mesh_n + 1) * h
    fbar = np.minimum(1.0, np.asarray(tail(x), dtype=float))
    if np.any(fbar < 0):
        raise InvariantViolation("survival values must be nonnegative")

    # curve points on even mesh indices so fine and halved meshes align
    ks = np.unique((np.geomspace(2, mesh_n, n_curve) / 2).astype(int) * 2)
    ks = np.concatenate([[0], ks])

    def t_curve(fb: np.ndarray, step: int) -> np.ndarray:
        sub = fb[::step]
        cdf = 1.0 - sub
        mass = np.diff(cdf)
        atom0 = cdf[0]
        out = np.empty(ks.size)
        for j, k in enumerate(ks):
            m = k // step
            if m == 0:
                out[j] = 1.0
                continue
            conv = sub[m] * (1.0 + atom0) + float(np.dot(sub[m:0:-1], mass[:m]))
            out[j] = conv / sub[m]
        return out

    t_fine = t_curve(fbar, 1)
    t_half = t_curve(fbar, 2)
    mesh_err = float(np.max(np.abs(t_fine - t_half)))
    u_pts = (ks * h).tolist()
    curve = list(zip(u_pts, t_fine.tolist()))
    t_end = float(t_fine[-1])

    details = {"mesh_err": mesh_err, "t_umax": t_end, "mesh_n": mesh_n}
    lo, hi = thresholds.s_fail_band
    if mesh_err > thresholds.s_mesh_tol:
        verdict = "inconclusive"
        text = f"mesh self-estimate {mesh_err:.3g} exceeds tolerance {thresholds.s_mesh_tol}"
    elif abs(t_end - 2.0) <= thresholds.delta_s:
        verdict = "pass"
        text = f"T(u_max) = {t_end:.6g} within {thresholds.delta_s} of 2"
    elif not (lo <= t_end <= hi):
        verdict = "fail"
        text = f"T(u_max) = {t_end:.6g} outside band [{lo}, {hi}]"
    else:
        verdict = "inconclusive"
        text = f"T(u_max) = {t_end:.6g} inside band but not within {thresholds.delta_s} of 2"
    return ClassVerdict("S", verdict, curve, None, text, details)
