"""Effect scales on a 2x2 table of outcome probabilities.

The four cells are ``p11, p10, p01, p00`` with ``p_ge = P(Y=1 | G=g, E=e)``.
Homogeneity (no G-by-E interaction) on a scale pins the fourth cell once the
other three are fixed, so each scale defines a 3-dimensional surface in the
4-cube.  This module holds the interaction contrasts, the map solving for the
fourth cell and the domains of the free coordinates ``(x, y, z) =
(p11, p10, p01)`` for which the solved cell stays inside ``(0, p)``.

Array-valued helpers (``fourth_cell``, ``domain_mask``) are what the
integrators use; the scalar functions wrap them for single tables.
"""

from __future__ import annotations

import enum
from dataclasses import astuple, dataclass

import numpy as np

# Absolute slack used when comparing against domain boundaries.
BOUNDARY_SLACK = 1e-14


class DomainError(ValueError):
    """An argument lies outside the domain where an operation is defined."""


class EffectScale(enum.Enum):
    RISK_DIFFERENCE = "rd"
    RISK_RATIO = "rr"
    ODDS_RATIO = "or"

    @classmethod
    def parse(cls, name: str | EffectScale) -> EffectScale:
        """Accept an enum member, its short code or its member name."""
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        for member in cls:
            if key in (member.value, member.name.lower()):
                return member
        raise ValueError(f"unknown effect scale {name!r}; expected one of rd, rr, or")


RD = EffectScale.RISK_DIFFERENCE
RR = EffectScale.RISK_RATIO
OR = EffectScale.ODDS_RATIO


def _check_open_unit(name: str, value: float) -> None:
    if not (0.0 < value < 1.0):
        raise DomainError(f"{name}={value!r} must lie strictly inside (0, 1)")


@dataclass(frozen=True)
class OutcomeQuad:
    """Cell probabilities ``(p11, p10, p01, p00)``, each strictly in (0, 1)."""

    p11: float
    p10: float
    p01: float
    p00: float

    def __post_init__(self):
        for name, value in zip(("p11", "p10", "p01", "p00"), astuple(self)):
            _check_open_unit(name, value)

    def __iter__(self):
        return iter(astuple(self))


@dataclass(frozen=True)
class CellTriple:
    """Free coordinates ``(x, y, z) = (p11, p10, p01)`` of a homogeneity surface."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for name, value in zip("xyz", astuple(self)):
            _check_open_unit(name, value)

    def __iter__(self):
        return iter(astuple(self))

    def complete(self, scale: EffectScale) -> OutcomeQuad:
        """The homogeneous table through this triple (raises if w leaves (0, 1))."""
        return OutcomeQuad(self.x, self.y, self.z, solve_fourth(self, scale))


def check_bound(p: float) -> float:
    """Validate an upper bound on the cell probabilities, ``0 < p <= 1``."""
    p = float(p)
    if not (0.0 < p <= 1.0):
        raise DomainError(f"probability bound p={p!r} must lie in (0, 1]")
    return p


def odds(u):
    """``u / (1 - u)`` for ``u`` in (0, 1)."""
    arr = np.asarray(u, dtype=float)
    if np.any(~((arr > 0.0) & (arr < 1.0))):
        raise DomainError(f"odds is defined on (0, 1), got {u!r}")
    out = arr / (1.0 - arr)
    return float(out) if out.ndim == 0 else out


def inverse_odds(c):
    """``c / (1 + c)`` for ``c > 0``; inverse of :func:`odds`."""
    arr = np.asarray(c, dtype=float)
    if np.any(~(arr > 0.0)) or np.any(~np.isfinite(arr)):
        raise DomainError(f"inverse_odds is defined on (0, inf), got {c!r}")
    out = arr / (1.0 + arr)
    return float(out) if out.ndim == 0 else out


def null_value(scale: EffectScale) -> float:
    return 0.0 if scale is RD else 1.0


def interaction_measure(quad: OutcomeQuad, scale: EffectScale) -> float:
    """Interaction contrast of a table; equals :func:`null_value` under homogeneity."""
    p11, p10, p01, p00 = quad
    if scale is RD:
        return p11 - p10 - p01 + p00
    if scale is RR:
        return (p11 * p00) / (p10 * p01)
    return (odds(p11) * odds(p00)) / (odds(p10) * odds(p01))


def is_homogeneous(quad: OutcomeQuad, scale: EffectScale, tol: float = 1e-12) -> bool:
    if tol <= 0:
        raise ValueError("tol must be positive")
    return abs(interaction_measure(quad, scale) - null_value(scale)) <= tol


def fourth_cell(x, y, z, scale: EffectScale):
    """Array form of :func:`solve_fourth`; no range checking on ``w``."""
    x, y, z = (np.asarray(a, dtype=float) for a in (x, y, z))
    if scale is RD:
        return -x + y + z
    if scale is RR:
        return y * z / x
    # g(h(y) h(z) / h(x)) simplified to avoid the two inner divisions.
    num = (1.0 - x) * y * z
    return num / (num + x * (1.0 - y) * (1.0 - z))


def solve_fourth(triple: CellTriple, scale: EffectScale) -> float:
    """The ``w = p00`` that makes ``(x, y, z, w)`` homogeneous on ``scale``.

    For the risk difference and risk ratio the result may fall outside
    (0, 1); that signals the triple is outside the domain and is returned
    as is.
    """
    return float(fourth_cell(triple.x, triple.y, triple.z, scale))


def or_lower_bound(y, z, p: float):
    """Infimum of admissible ``p11`` on the odds-ratio scale under bound ``p``.

    ``(1-p) y z / {(1-p) y z + p (1-y)(1-z)}``; zero when ``p = 1``.
    """
    y, z = np.asarray(y, dtype=float), np.asarray(z, dtype=float)
    num = (1.0 - p) * y * z
    out = num / (num + p * (1.0 - y) * (1.0 - z))
    return float(out) if out.ndim == 0 else out


def domain_mask(x, y, z, p: float, scale: EffectScale, slack: float = 0.0):
    """Boolean mask of points of ``(0, p)^3`` in the domain of ``scale``.

    Uses the explicit inequalities on the free coordinates rather than
    solving for the fourth cell; ``slack`` widens the strict comparisons.
    """
    x, y, z = (np.asarray(a, dtype=float) for a in (x, y, z))
    inside = (x > 0) & (x < p) & (y > 0) & (y < p) & (z > 0) & (z < p)
    if scale is RD:
        cond = (x > np.maximum(y + z - p, 0.0) - slack) & (x < y + z + slack)
    elif scale is RR:
        cond = y * z < x * p + slack
    else:
        cond = x > or_lower_bound(y, z, p) - slack
    return inside & cond


def in_domain(triple: CellTriple, p: float, scale: EffectScale) -> bool:
    """Whether the triple lies in the homogeneity domain for bound ``p``."""
    return bool(domain_mask(triple.x, triple.y, triple.z, check_bound(p), scale))
