"""Piterbarg-regime classification from model parameters.

The classifier turns the asymptotic theory into a decision table over three
thresholds on the service exponent gamma:

    gamma1 = H + (H ^ 1)            always inside the property region
    gamma2 = H + (H ^ 1) / alpha_w  supremal bound from the level-shift
                                    criterion R(u - u^b)/R(u) -> 1, b < 1 - alpha_w
    gamma3 = H + 1 / alpha_w        counterexample bound for independent-
                                    increment inputs

Power jump tails (and stable motion with beta > -1) satisfy the level-shift
criterion for every b < 1, so every admissible gamma > H carries the
property; stretched-exponential (Weibull-type) tails give the three-zone
table.  The zone [gamma2, gamma3) is reported as unresolved rather than
guessed: neither direction is established there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateModelError, UnsupportedModelError
from .models import ProcessModel, SelfSimilarAdditive, StableLevyMotion
from .tails import PowerTail, WeibullTail

__all__ = ["RegimeVerdict", "regime_classifier", "RegimeRow", "regime_table"]


@dataclass(frozen=True)
class RegimeVerdict:
    gamma1: float
    gamma2: float | None
    gamma3: float | None
    verdict: str  # "holds" | "absent" | "unresolved" | "all-gamma-hold"
    window_exponent: float | None
    description: str


def _window_exponent_weibull(H: float, gamma: float, alpha_w: float) -> float:
    """Supremal growth exponent e such that the strong property holds for
    window widths o(u^e') for every e' < e (approached as the level-shift
    exponent tends to its bound)."""
    return 1.0 / gamma - alpha_w * (1.0 - H / gamma) / min(H, 1.0)


def regime_classifier(model: ProcessModel) -> RegimeVerdict:
    """Classify whether the Piterbarg property holds for the model.

    Windows: for all-gamma-hold models the strong property applies to
    windows t(u) = o(u^(1/gamma)); in the Weibull "holds" zone the supremal
    window exponent is reported (open at the endpoint).
    """
    H = model.H
    g = model.gamma
    gamma1 = H + min(H, 1.0)

    if isinstance(model, StableLevyMotion):
        if model.overload_degenerate:
            raise DegenerateModelError(
                "beta = -1: overload tail identically zero; no regime to classify"
            )
        return RegimeVerdict(
            gamma1=gamma1,
            gamma2=None,
            gamma3=None,
            verdict="all-gamma-hold",
            window_exponent=1.0 / g,
            description=(
                "power-law overload tail: property holds for every gamma > H; "
                "strong property for windows o(u^(1/gamma))"
            ),
        )

    tail = model.tail_pos
    if isinstance(tail, PowerTail):
        return RegimeVerdict(
            gamma1=gamma1,
            gamma2=None,
            gamma3=None,
            verdict="all-gamma-hold",
            window_exponent=1.0 / g,
            description=(
                "regularly varying jump tail: property holds for every gamma > H; "
                "strong property for windows o(u^(1/gamma))"
            ),
        )
    if not isinstance(tail, WeibullTail):
        raise UnsupportedModelError(
            f"no regime rule for jump-tail family {type(tail).__name__}"
        )

    aw = tail.alpha_w
    gamma2 = H + min(H, 1.0) / aw
    gamma3 = H + 1.0 / aw
    if g < gamma2:
        return RegimeVerdict(
            gamma1=gamma1,
            gamma2=gamma2,
            gamma3=gamma3,
            verdict="holds",
            window_exponent=_window_exponent_weibull(H, g, aw),
            description=(
                f"gamma < {gamma2:.6g}: level-shift criterion met; strong "
                "property for windows below the reported exponent"
            ),
        )
    if isinstance(model, SelfSimilarAdditive) and g >= gamma3:
        return RegimeVerdict(
            gamma1=gamma1,
            gamma2=gamma2,
            gamma3=gamma3,
            verdict="absent",
            window_exponent=None,
            description=(
                f"gamma >= {gamma3:.6g} with independent increments: "
                "window-shifted tail mass stays a constant factor above the "
                "point mass, so the property fails"
            ),
        )
    return RegimeVerdict(
        gamma1=gamma1,
        gamma2=gamma2,
        gamma3=gamma3,
        verdict="unresolved",
        window_exponent=None,
        description=(
            f"gamma in [{gamma2:.6g}, {gamma3:.6g}): neither the criterion "
            "nor the counterexample applies"
        ),
    )


@dataclass(frozen=True)
class RegimeRow:
    family: str
    H: float
    gamma: float
    gamma1: float | None
    gamma2: float | None
    gamma3: float | None
    verdict: str
    window_exponent: float | None
    boundary: bool
    note: str


def _make_model(family: str, H: float, gamma: float, params: dict) -> ProcessModel:
    if family == "stable":
        alpha = params.get("alpha", 1.0 / H)
        return StableLevyMotion(alpha=alpha, beta=params.get("beta", 0.0),
                                c=params.get("c", 1.0), gamma=gamma)
    if family == "power":
        return SelfSimilarAdditive(H=H, c=params.get("c", 1.0), gamma=gamma,
                                   tail_pos=PowerTail(K=params.get("K", 1.0),
                                                      rho=params.get("rho", 2.0)))
    if family == "weibull":
        return SelfSimilarAdditive(
            H=H, c=params.get("c", 1.0), gamma=gamma,
            tail_pos=WeibullTail(G=params.get("G", 1.0), rho_g=params.get("rho_g", 0.0),
                                 A=params.get("A", 1.0), alpha_w=params.get("alpha_w", 0.5)),
        )
    raise UnsupportedModelError(f"unknown regime family {family!r}")


def regime_table(family: str, h_values, gamma_values, params: dict | None = None,
                 boundary_tol: float = 1e-9) -> list[RegimeRow]:
    """Grid of verdicts over (H, gamma); invalid combinations are kept as
    rows with a validation note, and rows sitting on a threshold are marked."""
    params = params or {}
    rows = []
    for H in h_values:
        for g in gamma_values:
            try:
                model = _make_model(family, float(H), float(g), params)
                v = regime_classifier(model)
            except Exception as exc:  # invalid cell: record, do not abort the table
                rows.append(RegimeRow(family, float(H), float(g), None, None, None,
                                      "invalid", None, False, str(exc)))
                continue
            thresholds = [v.gamma1, v.gamma2, v.gamma3]
            boundary = any(
                t is not None and abs(g - t) <= boundary_tol * max(1.0, abs(t))
                for t in thresholds
            )
            rows.append(RegimeRow(family, float(H), float(g), v.gamma1, v.gamma2,
                                  v.gamma3, v.verdict, v.window_exponent, boundary,
                                  v.description))
    return rows
