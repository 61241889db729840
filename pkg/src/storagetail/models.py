"""Input-process models and their overload scale profiles.

Two catalog inputs X are supported, both self-similar with index H and
infinitely divisible, fed into the storage functional

    Y(t) = sup_{s >= t} ( X(s) - X(t) - c (s-t)^gamma ),   gamma > H.

* ``StableLevyMotion``: strictly alpha-stable Levy motion (H = 1/alpha),
  normalized so the jump-intensity tail of X(1) is ((1+beta)/2) x^(-alpha)
  above x and ((1-beta)/2) x^(-alpha) below -x.
* ``SelfSimilarAdditive``: the independent-increment self-similar process
  built from a jump measure mu with tails (r_plus, r_minus) via the local
  intensity rho(s, dx) = H s^(-1) mu(s^(-H) dx) and the unit-window kernel.

The scale profile sigma_plus(s) = (1 + c s^gamma) s^(-H) gives the factor by
which a jump at location s must exceed the level u to trigger overload; its
minimizer s_hat and curvature drive the saddle-point asymptotics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


from .errors import (
    DegenerateProfileError,
    InvariantViolation,
    SchemaError,
    UnsupportedModelError,
)
from .quadrature import _gl
from .tails import (
    LogTail,
    PowerTail,
    TabulatedTail,
    TailFunction,
    WeibullTail,
    tail_from_json,
    tail_to_json,
)

__all__ = [
    "StableLevyMotion",
    "SelfSimilarAdditive",
    "ProcessModel",
    "stable_tail_constant",
    "stable_unit_scale",
    "SigmaProfile",
    "sigma_profile",
    "curvature_central_diff",
    "model_from_json",
    "model_to_json",
]


def stable_tail_constant(alpha: float) -> float:
    """C(alpha) with P{S > x} ~ C(alpha) (1+beta)/2 sigma^alpha x^(-alpha)
    for a strictly alpha-stable variable of scale sigma and skew beta."""
    if alpha == 1.0:
        return 2.0 / math.pi
    return (1.0 - alpha) / (math.gamma(2.0 - alpha) * math.cos(math.pi * alpha / 2.0))


def stable_unit_scale(alpha: float) -> float:
    """Scale sigma_1 such that a stable(alpha, beta) variable of scale
    sigma_1 has jump-intensity tail ((1+beta)/2) x^(-alpha)."""
    return stable_tail_constant(alpha) ** (-1.0 / alpha)


def _is_zero_tail(tail: TailFunction | None) -> bool:
    return tail is None or (isinstance(tail, TabulatedTail) and tail.is_zero)


@dataclass(frozen=True)
class StableLevyMotion:
    """Strictly alpha-stable Levy motion input with service (c, gamma)."""

    alpha: float
    beta: float
    c: float
    gamma: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 2.0):
            raise InvariantViolation(f"alpha must be in (0,2), got {self.alpha}")
        if not (-1.0 <= self.beta <= 1.0):
            raise InvariantViolation(f"beta must be in [-1,1], got {self.beta}")
        if self.alpha == 1.0 and self.beta != 0.0:
            raise UnsupportedModelError("alpha = 1 requires beta = 0 (symmetric case only)")
        if not (self.c > 0):
            raise InvariantViolation(f"c must be > 0, got {self.c}")
        if not (self.gamma > self.H):
            raise InvariantViolation(
                f"gamma must exceed H = 1/alpha = {self.H:.6g}, got {self.gamma}"
            )

    @property
    def H(self) -> float:
        return 1.0 / self.alpha

    @property
    def overload_degenerate(self) -> bool:
        """beta = -1 kills the positive jump tail: the overload functional is
        identically zero and the tail theory does not apply."""
        return self.beta <= -1.0


def _decade_integral(f, lo: float, hi: float) -> float:
    """int_lo^hi f on a log axis with one 32-point panel (screening only)."""
    x, w = _gl(32)
    a, b = math.log(lo), math.log(hi)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    s = np.exp(mid + half * x)
    return half * float(np.dot(w, np.asarray(f(s), dtype=float) * s))


def _check_jump_tail_integrability(tail: TailFunction, name: str) -> None:
    """Screen int_0^1 r(x) dx < inf and int_1^inf r(v)/v dv < inf.

    Both are required for the additive construction: the first for the
    process to be well defined, the second for the count of macroscopic
    jumps over a finite window to be finite.  Divergence is detected from
    non-shrinking decade contributions.
    """
    if _is_zero_tail(tail):
        return
    small = [_decade_integral(tail, 10.0 ** -(k + 1), 10.0 ** -k) for k in range(14)]
    if small[-1] > 0.5 * small[-2] and small[-1] > 1e-12 * (sum(small) + 1e-300):
        raise InvariantViolation(
            f"{name}: int_0^1 r diverges (decade contributions not shrinking near 0)"
        )
    big = [
        _decade_integral(lambda v: np.asarray(tail(v)) / v, 10.0 ** k, 10.0 ** (k + 1))
        for k in range(14)
    ]
    if big[-1] > 0.7 * big[-2] and big[-1] > 1e-12 * (sum(big) + 1e-300):
        raise InvariantViolation(
            f"{name}: int_1^inf r(v)/v dv diverges (tail too slow for a "
            "locally bounded self-similar additive input)"
        )


@dataclass(frozen=True, eq=False)
class SelfSimilarAdditive:
    """Self-similar independent-increment input built from jump tails.

    ``tail_pos`` gives mu((x, inf)) and ``tail_neg`` gives mu((-inf, -x));
    a missing/zero ``tail_neg`` makes the process nonnegative and
    nondecreasing.  The drift convention absorbs the small-jump compensator,
    so the process is the plain sum of its jumps in law.
    """

    H: float
    c: float
    gamma: float
    tail_pos: TailFunction
    tail_neg: TailFunction | None = None

    def __post_init__(self):
        if not (self.H > 0):
            raise InvariantViolation(f"H must be > 0, got {self.H}")
        if not (self.c > 0):
            raise InvariantViolation(f"c must be > 0, got {self.c}")
        if not (self.gamma > self.H):
            raise InvariantViolation(f"gamma must exceed H = {self.H}, got {self.gamma}")
        _check_jump_tail_integrability(self.tail_pos, "tail_pos")
        if self.tail_neg is not None:
            _check_jump_tail_integrability(self.tail_neg, "tail_neg")

    @property
    def nonnegative(self) -> bool:
        return _is_zero_tail(self.tail_neg)


ProcessModel = StableLevyMotion | SelfSimilarAdditive


# ---------------------------------------------------------------------------
# Scale profile
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SigmaProfile:
    """sigma_plus(s) = (1 + c s^gamma) s^(-H) with minimizer data.

    ``sigma_minus`` is the +inf sentinel everywhere: the catalog kernels are
    nonnegative, so negative jumps never contribute to overload.
    """

    H: float
    c: float
    gamma: float
    s_hat: float
    sigma_min: float
    curvature: float
    closed_form: bool = True

    def sigma_plus(self, s):
        s = np.asarray(s, dtype=float)
        with np.errstate(over="ignore"):
            out = (1.0 + self.c * np.power(s, self.gamma)) * np.power(s, -self.H)
        return out if out.ndim else float(out)

    def sigma_minus(self, s):
        s = np.asarray(s, dtype=float)
        out = np.full(s.shape, math.inf)
        return out if out.ndim else math.inf


def _assert_unique_minimum(fn, lo: float = 1e-6, hi: float = 1e6, rel_tol: float = 1e-9):
    """Degeneracy scan: a near-minimal set spanning a wide log-range means
    there is no usable unique minimizer."""
    w = np.linspace(math.log(lo), math.log(hi), 2048)
    vals = np.asarray(fn(np.exp(w)), dtype=float)
    vmin = float(np.min(vals))
    near = w[vals <= vmin * (1.0 + rel_tol)]
    # points symmetric about the true minimizer tie to machine precision, so
    # the flatness threshold must sit well above one grid spacing
    span_tol = 4.0 * (w[1] - w[0])
    if near.size and (near.max() - near.min()) > span_tol:
        raise DegenerateProfileError(
            f"flat valley: near-minimal set spans log-range {near.max() - near.min():.3g}"
        )


def _golden_minimizer(fn, lo: float = 1e-6, hi: float = 1e6) -> float:
    """Golden-section minimum of fn over s on a log axis (cross-check route).

    Ties are broken toward the smaller minimizer by the argmin of the
    localizing scan."""
    w = np.linspace(math.log(lo), math.log(hi), 4096)
    vals = np.asarray(fn(np.exp(w)), dtype=float)
    i = int(np.argmin(vals))
    a = w[max(i - 2, 0)]
    b = w[min(i + 2, w.size - 1)]
    g = fn
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = g(math.exp(c)), g(math.exp(d))
    while b - a > 1e-12:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = g(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = g(math.exp(d))
    return math.exp(0.5 * (a + b))


def curvature_central_diff(profile: SigmaProfile, step_rel: float = 1e-4) -> float:
    """Second derivative at s_hat by central differences with one Richardson
    extrapolation step (independent check on the closed form)."""
    s0, f = profile.s_hat, profile.sigma_plus
    h = s0 * step_rel

    def d2(hh: float) -> float:
        return (f(s0 + hh) - 2.0 * f(s0) + f(s0 - hh)) / (hh * hh)

    c1, c2 = d2(h), d2(h / 2.0)
    return (4.0 * c2 - c1) / 3.0


def sigma_profile(model: ProcessModel) -> SigmaProfile:
    """Scale profile of a catalog model (closed form for the unit-window
    kernel, with a degeneracy scan).

    s_hat solves c (gamma - H) s^gamma = H; the minimum is
    (gamma/(gamma-H)) s_hat^(-H) and the curvature is
    c gamma (gamma - H) s_hat^(gamma - H - 2).
    """
    H, c, g = model.H, model.c, model.gamma
    s_hat = (H / (c * (g - H))) ** (1.0 / g)
    sigma_min = (g / (g - H)) * s_hat ** (-H)
    curvature = c * g * (g - H) * s_hat ** (g - H - 2.0)
    prof = SigmaProfile(H=H, c=c, gamma=g, s_hat=s_hat, sigma_min=sigma_min,
                        curvature=curvature, closed_form=True)
    _assert_unique_minimum(prof.sigma_plus)
    return prof


def numeric_s_hat(model: ProcessModel) -> float:
    """Golden-section minimizer of sigma_plus (cross-check for s_hat)."""
    prof = sigma_profile(model)
    return _golden_minimizer(prof.sigma_plus)


# ---------------------------------------------------------------------------
# JSON wire format (documented keys: kind, alpha, beta, H, gamma, c, tail)
# ---------------------------------------------------------------------------

def model_to_json(model: ProcessModel) -> dict:
    if isinstance(model, StableLevyMotion):
        return {
            "kind": "stable",
            "alpha": model.alpha,
            "beta": model.beta,
            "c": model.c,
            "gamma": model.gamma,
        }
    out = {
        "kind": "additive",
        "H": model.H,
        "c": model.c,
        "gamma": model.gamma,
        "tail": tail_to_json(model.tail_pos),
    }
    if model.tail_neg is not None:
        out["tail_neg"] = tail_to_json(model.tail_neg)
    return out


_MODEL_KEYS = {
    "stable": {"kind", "alpha", "beta", "c", "gamma"},
    "additive": {"kind", "H", "c", "gamma", "tail", "tail_neg"},
}


def model_from_json(obj: dict) -> ProcessModel:
    if not isinstance(obj, dict):
        raise SchemaError("model must be an object", key="model")
    kind = obj.get("kind")
    if kind not in _MODEL_KEYS:
        raise SchemaError(f"unknown model kind {kind!r}", key="kind")
    for k in obj:
        if k not in _MODEL_KEYS[kind]:
            raise SchemaError(f"unknown key {k!r} in model object", key=k)
    try:
        if kind == "stable":
            return StableLevyMotion(
                alpha=float(obj["alpha"]),
                beta=float(obj["beta"]),
                c=float(obj["c"]),
                gamma=float(obj["gamma"]),
            )
        tail_neg = obj.get("tail_neg")
        return SelfSimilarAdditive(
            H=float(obj["H"]),
            c=float(obj["c"]),
            gamma=float(obj["gamma"]),
            tail_pos=tail_from_json(obj["tail"]),
            tail_neg=tail_from_json(tail_neg) if tail_neg is not None else None,
        )
    except KeyError as exc:
        raise SchemaError(f"missing model key {exc.args[0]!r}", key=exc.args[0]) from None
    except InvariantViolation as exc:
        raise SchemaError(str(exc), key="model") from exc
