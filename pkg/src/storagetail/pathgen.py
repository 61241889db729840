"""Sample-path generation for the catalog input processes.

Stable Levy motion is simulated exactly on its time grid via
Chambers-Mallows-Stuck variates; the self-similar additive process is
simulated by drawing its macroscopic jumps (physical size above a floor
``eps``) from the local intensity rho(s, (x, inf)) = H s^(-1) r(s^(-H) x)
and replacing the discarded small jumps by their exact mean as an absolutely
continuous drift.  Truncation bias is therefore a pure variance effect whose
mean is accounted for, and the discarded mass is reported on the path.

Randomness is counter-based (Philox) with per-path keys derived by a
splitmix64 hash of (root_seed, path_index), so any path is reproducible in
isolation and batches can be generated concurrently with results identical
to sequential execution.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, InvariantViolation, NumericalError, UnsupportedModelError
from .models import (
    ProcessModel,
    SelfSimilarAdditive,
    StableLevyMotion,
    stable_unit_scale,
)
from .quadrature import dyadic_log_axis, gauss_segments_to_zero

__all__ = [
    "splitmix64",
    "derive_path_seed",
    "make_generator",
    "sample_stable",
    "GridSpec",
    "SamplePath",
    "TruncationInfo",
    "stable_levy_path",
    "additive_ss_path",
    "truncation_bound",
    "dump_path",
]

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One round of the splitmix64 mixing function on a 64-bit integer."""
    x = (x + _GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_path_seed(root_seed: int, path_index: int) -> int:
    """Per-path 64-bit key: hash of the root seed and the path index."""
    return splitmix64((root_seed & _MASK64) ^ splitmix64(path_index & _MASK64))


def make_generator(seed: int) -> np.random.Generator:
    """Counter-based generator keyed by a 64-bit seed."""
    # explicit counter avoids an entropy syscall in the constructor
    return np.random.Generator(np.random.Philox(key=seed & _MASK64, counter=0))


# ---------------------------------------------------------------------------
# Stable variates (Chambers-Mallows-Stuck)
# ---------------------------------------------------------------------------


def cms_transform(u: np.ndarray, w: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    """Map uniforms u in (0,1) and unit exponentials w to strictly stable
    variates of unit scale, in the parameterization whose characteristic
    function is exp(-|th|^alpha (1 - i beta tan(pi alpha/2) sgn th))."""
    phi = math.pi * (u - 0.5)
    if alpha == 1.0:
        if beta != 0.0:
            raise UnsupportedModelError("alpha = 1 supported only with beta = 0")
        return np.tan(phi)
    if beta == 0.0:
        t1 = np.sin(alpha * phi) / np.cos(phi) ** (1.0 / alpha)
        t2 = (np.cos((1.0 - alpha) * phi) / w) ** ((1.0 - alpha) / alpha)
        return t1 * t2
    bt = beta * math.tan(math.pi * alpha / 2.0)
    theta0 = math.atan(bt) / alpha
    s = (1.0 + bt * bt) ** (1.0 / (2.0 * alpha))
    t1 = np.sin(alpha * (phi + theta0)) / np.cos(phi) ** (1.0 / alpha)
    t2 = (np.cos(phi - alpha * (phi + theta0)) / w) ** ((1.0 - alpha) / alpha)
    return s * t1 * t2


def sample_stable(alpha: float, beta: float, scale: float, n: int, seed: int) -> np.ndarray:
    """n iid strictly stable variates; deterministic given the seed."""
    if not (0.0 < alpha < 2.0):
        raise InvariantViolation(f"alpha must be in (0,2), got {alpha}")
    if alpha == 1.0 and beta != 0.0:
        raise UnsupportedModelError("alpha = 1 supported only with beta = 0")
    if not scale > 0:
        raise InvariantViolation("scale must be positive")
    rng = make_generator(seed)
    u = rng.random(n)
    w = rng.standard_exponential(n)
    return scale * cms_transform(u, w, alpha, beta)


# ---------------------------------------------------------------------------
# Paths
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TruncationInfo:
    eps: float
    discarded_mass: float  # exact mean of the jumps below the floor


@dataclass
class SamplePath:
    """Discretized realization: strictly increasing times starting at 0,
    values with X(0) = 0.  ``segment_slopes``, when present, give the linear
    drift rate on each inter-sample segment (additive paths)."""

    times: np.ndarray
    values: np.ndarray
    monotone: bool
    seed: int
    truncation: TruncationInfo | None = None
    segment_slopes: np.ndarray | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.ndim != 1 or self.times.shape != self.values.shape:
            raise InvariantViolation("times/values must be matching 1-d arrays")
        if self.times[0] != 0.0 or self.values[0] != 0.0:
            raise InvariantViolation("paths start at (t=0, X=0)")
        if np.any(np.diff(self.times) <= 0):
            raise InvariantViolation("times must be strictly increasing")


@dataclass(frozen=True)
class GridSpec:
    """Time grid for stable Levy paths: geometric refinement near 0 (where
    self-similar detail concentrates) plus a uniform coarse tail.  ``times``
    overrides the built grid entirely."""

    horizon: float
    n: int = 512
    split: float = 0.1
    first: float = 1e-6
    times: np.ndarray | None = None

    def build(self) -> np.ndarray:
        if self.times is not None:
            t = np.asarray(self.times, dtype=float)
            if t[0] != 0.0 or np.any(np.diff(t) <= 0):
                raise InvariantViolation("explicit grid must start at 0 and increase")
            return t
        if not (self.horizon > 0 and self.n >= 8):
            raise InvariantViolation("grid needs horizon > 0 and n >= 8")
        n_geo = self.n // 2
        n_uni = self.n - n_geo
        geo = np.geomspace(self.first * self.horizon, self.split * self.horizon, n_geo)
        uni = np.linspace(self.split * self.horizon, self.horizon, n_uni + 1)
        return np.unique(np.concatenate([[0.0], geo, uni]))


def stable_levy_path(model: StableLevyMotion, grid: GridSpec, seed: int) -> SamplePath:
    """Exact skeleton of stable Levy motion on the grid.

    Increments are dt^(1/alpha) * sigma_1 * S with S unit-scale stable and
    sigma_1 chosen so the jump-intensity tail of X(1) matches the model
    normalization ((1+beta)/2) x^(-alpha).
    """
    times = grid.build()
    dt = np.diff(times)
    rng = make_generator(seed)
    u = rng.random(dt.size)
    w = rng.standard_exponential(dt.size)
    s = cms_transform(u, w, model.alpha, model.beta)
    sigma1 = stable_unit_scale(model.alpha)
    values = np.concatenate([[0.0], np.cumsum(sigma1 * dt ** (1.0 / model.alpha) * s)])
    monotone = model.alpha < 1.0 and model.beta == 1.0
    return SamplePath(times=times, values=values, monotone=monotone, seed=seed)


# ---------------------------------------------------------------------------
# Additive self-similar paths via the macroscopic-jump point process
# ---------------------------------------------------------------------------


def _tail_integral_table(tail, b_lo: float, b_hi: float, n: int = 4096):
    """Cumulative integral IR(b) = int_0^b r(z) dz on a log grid."""
    b = np.geomspace(b_lo, b_hi, n)
    base = gauss_segments_to_zero(lambda z: np.asarray(tail(z)), b_lo)
    r = np.asarray(tail(b), dtype=float)
    # trapezoid in linear coordinates on the log-spaced grid
    inc = np.concatenate([[0.0], np.cumsum(0.5 * (r[1:] + r[:-1]) * np.diff(b))])
    return b, base + inc


class _JumpLaw:
    """Sampling tables for jumps (location s, physical size x > eps) of one
    (model, horizon, eps) combination, plus the exact compensating drift."""

    def __init__(self, model: SelfSimilarAdditive, horizon: float, eps: float,
                 budget: float = 1e6):
        if not model.nonnegative:
            raise UnsupportedModelError(
                "two-sided additive models are not supported by the path "
                "generator (small-jump compensation is one-sided)"
            )
        if not (eps > 0 and horizon > 0):
            raise InvariantViolation("need eps > 0 and horizon > 0")
        self.model = model
        self.horizon = horizon
        self.eps = eps
        tail = model.tail_pos
        H = model.H
        self.zero = getattr(tail, "is_zero", False)
        if self.zero:
            self.lam = 0.0
            self.discarded = 0.0
            return

        v0 = eps * horizon ** -H

        # expected jump count: int_{v0}^inf r(v)/v dv (integrand in w = log v)
        def count_integrand(w: float) -> float:
            return float(tail(math.exp(w)))

        lam_quick, _ = dyadic_log_axis(
            count_integrand, center=math.log(v0) + 1.0, lo=math.log(v0)
        )
        if lam_quick > budget:
            raise BudgetError(
                f"expected jump count {lam_quick:.3g} exceeds the budget "
                f"{budget:.3g}; raise eps or the budget"
            )

        # location law in the v = eps * s^(-H) coordinate: density r(v)/v on
        # [v0, inf); tabulate the upper integral and invert.  The Poisson
        # mean uses the same table so sampling stays self-consistent.
        v_hi = v0
        while float(tail(v_hi)) / max(lam_quick, 1e-300) > 1e-14 and v_hi < v0 * 1e60:
            v_hi *= 10.0
        grid = np.geomspace(v0, v_hi, 8192)
        rv = np.asarray(tail(grid), dtype=float) / grid
        inner = np.concatenate([[0.0], np.cumsum(0.5 * (rv[1:] + rv[:-1]) * np.diff(grid))])
        tail_rest, _ = dyadic_log_axis(count_integrand, center=math.log(v_hi) + 1.0,
                                       lo=math.log(v_hi))
        self.lam = float(inner[-1] + tail_rest)
        upper = self.lam - inner  # int_v^inf r/w dw
        self._v_upper = upper[::-1]  # increasing in reversed grid order
        self._v_rev = grid[::-1]

        # size law: conditional tail r(z)/r(v_loc) on [v_loc, inf); invert r
        z_hi = v_hi
        r0 = float(tail(v0))
        while float(tail(z_hi)) / r0 > 1e-14 and z_hi < v0 * 1e80:
            z_hi *= 10.0
        zg = np.geomspace(v0 * (1.0 - 1e-12), z_hi, 8192)
        lr = np.asarray(tail.log_eval(zg), dtype=float)
        lr = np.minimum.accumulate(lr)  # enforce monotone for inversion
        self._z_log_r = lr[::-1]
        self._z_rev = zg[::-1]

        # compensating drift: d(s) = H s^(H-1) * m1(eps s^(-H)),
        # m1(b) = int_0^b r - b r(b); cumulative over (0, t]
        b_lo = eps * horizon ** -H * 1e-6
        b_hi = eps * (horizon * 1e-12) ** -H
        bt, ir = _tail_integral_table(tail, b_lo, b_hi)
        log_bt = np.log(bt)
        ir_at = lambda b: np.interp(np.log(np.clip(b, bt[0], bt[-1])), log_bt, ir)

        def drift_rate(s):
            s = np.asarray(s, dtype=float)
            b = eps * s ** -H
            m1 = ir_at(b) - b * np.asarray(tail(b), dtype=float)
            return H * s ** (H - 1.0) * m1

        sg = np.geomspace(horizon * 1e-12, horizon, 4096)
        dr = drift_rate(sg)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (dr[1:] + dr[:-1]) * np.diff(sg))])
        # mass below the first grid point: rate ~ H s^(H-1) m1(inf)-ish; the
        # integral over (0, s_min] is bounded by rate(s_min) * s_min / H
        head = float(dr[0]) * sg[0] / max(model.H, 1e-12)
        self._s_grid = sg
        self._cum_drift = cum + head
        self.discarded = float(self._cum_drift[-1])

    def drift_at(self, t):
        if self.zero:
            return np.zeros_like(np.asarray(t, dtype=float))
        t = np.asarray(t, dtype=float)
        out = np.interp(t, self._s_grid, self._cum_drift)
        return np.where(t <= 0, 0.0, out)

    def sample(self, rng: np.random.Generator):
        """(locations s, sizes x) of the macroscopic jumps on one path."""
        if self.zero:
            return np.empty(0), np.empty(0)
        n = rng.poisson(self.lam)
        if n == 0:
            return np.empty(0), np.empty(0)
        # location via the upper integral of r(v)/v
        targets = rng.random(n) * self.lam
        v_loc = np.interp(targets, self._v_upper, self._v_rev)
        s = (self.eps / v_loc) ** (1.0 / self.model.H)
        # size z >= v_loc via the inverse of log r
        log_targets = np.log(rng.random(n)) + np.asarray(
            self.model.tail_pos.log_eval(v_loc), dtype=float
        )
        z = np.interp(log_targets, self._z_log_r, self._z_rev)
        z = np.maximum(z, v_loc)
        x = s ** self.model.H * z
        return s, x


_LAW_CACHE: dict[tuple, _JumpLaw] = {}


def _jump_law(model, horizon, eps, budget) -> _JumpLaw:
    key = (id(model), float(horizon), float(eps), float(budget))
    law = _LAW_CACHE.get(key)
    if law is None or law.model is not model:
        law = _JumpLaw(model, horizon, eps, budget)
        _LAW_CACHE[key] = law
    return law


def additive_ss_path(
    model: SelfSimilarAdditive,
    horizon: float,
    eps: float,
    seed: int,
    include_times=None,
    budget: float = 1e6,
) -> SamplePath:
    """One path of the additive model on (0, horizon].

    The path is the sum of sampled jumps with physical size above ``eps``
    plus the exact mean of the discarded small jumps as a drift.  Extra
    sample times can be merged in (values interpolate the drift exactly).
    """
    law = _jump_law(model, horizon, eps, budget)
    rng = make_generator(seed)
    s, x = law.sample(rng)

    pts = [np.array([0.0, horizon])]
    if include_times is not None:
        pts.append(np.asarray(include_times, dtype=float))
    if s.size:
        pts.append(s)
    times = np.unique(np.concatenate(pts))
    times = times[(times >= 0.0) & (times <= horizon)]
    if times[0] != 0.0:
        times = np.concatenate([[0.0], times])

    jump_cum = np.zeros_like(times)
    if s.size:
        order = np.argsort(s, kind="stable")
        s_sorted, x_sorted = s[order], x[order]
        csum = np.cumsum(x_sorted)
        idx = np.searchsorted(s_sorted, times, side="right")
        jump_cum = np.where(idx > 0, csum[np.maximum(idx - 1, 0)], 0.0)
    drift = law.drift_at(times)
    values = jump_cum + drift
    values[0] = 0.0
    slopes = np.diff(drift) / np.diff(times)
    return SamplePath(
        times=times,
        values=values,
        monotone=True,
        seed=seed,
        truncation=TruncationInfo(eps=eps, discarded_mass=law.discarded),
        segment_slopes=slopes,
    )


def truncation_bound(model: SelfSimilarAdditive, eps: float, horizon: float) -> float:
    """Exact expected discarded jump mass D(eps, horizon), by quadrature
    independent of the sampling tables.  Zero floor discards nothing."""
    if eps < 0:
        raise InvariantViolation("eps must be nonnegative")
    if eps == 0.0 or getattr(model.tail_pos, "is_zero", False):
        return 0.0
    if not model.nonnegative:
        raise UnsupportedModelError("two-sided additive models are out of scope")
    tail, H = model.tail_pos, model.H

    def rate(w: float) -> float:
        s = math.exp(w)
        b = eps * s ** -H
        ir = gauss_segments_to_zero(lambda z: np.asarray(tail(z)), b)
        m1 = ir - b * float(tail(b))
        return H * s ** H * m1  # extra factor s from ds = s dw

    val, _ = dyadic_log_axis(rate, center=math.log(horizon) - 1.0, hi=math.log(horizon))
    return val


def dump_path(path: SamplePath, csv_path: str) -> None:
    """CSV dump (time,value) with a JSON sidecar carrying provenance."""
    with open(csv_path, "w") as fh:
        fh.write("time,value\n")
        for t, v in zip(path.times, path.values):
            fh.write(f"{float(t)!r},{float(v)!r}\n")
    sidecar = {
        "seed": int(path.seed),
        "monotone": bool(path.monotone),
        "eps": None if path.truncation is None else path.truncation.eps,
        "discarded_mass": None
        if path.truncation is None
        else path.truncation.discarded_mass,
    }
    with open(csv_path + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
