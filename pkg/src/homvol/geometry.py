"""Volume elements and closed-form volumes of the homogeneity surfaces.

Each homogeneity surface is the graph ``w = f(x, y, z)`` over its domain, so
its tangent frame is the 4x3 Jacobian ``[I; grad f]`` and the 3-volume
element is ``sqrt(det(J^T J)) = sqrt(1 + |grad f|^2)``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import NamedTuple, Optional

import numpy as np

from .scales import OR, RD, RR, EffectScale, check_bound

# {sqrt(2) + log(1 + sqrt(2))}^2, shared by the risk-ratio surface volume
# and its ratio to the domain volume.
_RR_BASE = (math.sqrt(2.0) + math.log1p(math.sqrt(2.0))) ** 2
RR_SURFACE_CONSTANT = _RR_BASE / 3.0
RR_RATIO_CONSTANT = 4.0 * _RR_BASE / 9.0


def _det3(g):
    return (
        g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1])
        - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
        + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0])
    )


def gram_volume(jac) -> float:
    """m-volume of the parallelepiped spanned by the columns of an n x m matrix.

    Computed as ``sqrt(det(J^T J))``.  For up to three columns the Gram
    matrix and its determinant are formed in exact rational arithmetic from
    the float entries, so the only rounding is the final square root.
    Rank-deficient input gives 0 up to rounding.
    """
    jac = np.asarray(jac, dtype=float)
    if jac.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {jac.shape}")
    n, m = jac.shape
    if m > n:
        raise ValueError(f"need at most as many columns as rows, got {n}x{m}")
    if m <= 3:
        cols = [[Fraction(float(v)) for v in jac[:, j]] for j in range(m)]
        gram = [[sum((a * b for a, b in zip(ci, cj)), Fraction(0)) for cj in cols] for ci in cols]
    else:
        gram = jac.T @ jac
    if m == 1:
        det = gram[0][0]
    elif m == 2:
        det = gram[0][0] * gram[1][1] - gram[0][1] * gram[1][0]
    elif m == 3:
        det = _det3(gram)
    else:
        det = np.linalg.det(gram)
    return math.sqrt(max(float(det), 0.0))


class GramFactor(NamedTuple):
    """Derivative factors of the odds-ratio map ``w = g(h(y) h(z) / h(x))``."""

    k: np.ndarray
    lx: np.ndarray
    ly: np.ndarray
    lz: np.ndarray


def odds_gram_factor(x, y, z) -> GramFactor:
    """``k = hx hy hz / (hx + hy hz)^2`` and ``l(u) = 1 / (u (1 - u))``."""
    x, y, z = (np.asarray(a, dtype=float) for a in (x, y, z))
    hx, hy, hz = x / (1 - x), y / (1 - y), z / (1 - z)
    k = hx * hy * hz / (hx + hy * hz) ** 2
    return GramFactor(k, 1 / (x * (1 - x)), 1 / (y * (1 - y)), 1 / (z * (1 - z)))


def gradient(scale: EffectScale, x, y, z):
    """Partial derivatives ``(dw/dx, dw/dy, dw/dz)`` of the solved fourth cell."""
    x, y, z = (np.asarray(a, dtype=float) for a in (x, y, z))
    if scale is RD:
        one = np.ones(np.broadcast(x, y, z).shape)
        return -one, one, one
    if scale is RR:
        return -y * z / x**2, z / x, y / x
    k, lx, ly, lz = odds_gram_factor(x, y, z)
    return -k * lx, k * ly, k * lz


def jacobian(scale: EffectScale, x: float, y: float, z: float) -> np.ndarray:
    """4x3 tangent frame of the surface at ``(x, y, z)``."""
    jac = np.zeros((4, 3))
    jac[:3, :3] = np.eye(3)
    jac[3] = [float(d) for d in gradient(scale, x, y, z)]
    return jac


def volume_element(scale: EffectScale, x, y, z):
    """Closed-form ``sqrt(det(J^T J))`` at ``(x, y, z)``; broadcasts over arrays."""
    x, y, z = (np.asarray(a, dtype=float) for a in (x, y, z))
    if scale is RD:
        out = np.full(np.broadcast(x, y, z).shape, 2.0)
    elif scale is RR:
        out = np.sqrt((1 + (y / x) ** 2) * (1 + (z / x) ** 2))
    else:
        # Rational form: no overflow from the intermediate odds near 0 or 1.
        a, b, c = x * (1 - x), y * (1 - y), z * (1 - z)
        d = x * (1 - y) * (1 - z) + (1 - x) * y * z
        out = np.sqrt(1 + ((a * b) ** 2 + (b * c) ** 2 + (a * c) ** 2) / d**4)
    return float(out) if out.ndim == 0 else out


def closed_domain_volume(scale: EffectScale, p: float = 1.0) -> Optional[float]:
    """Exact domain volume, or ``None`` where no closed form is known."""
    p = check_bound(p)
    if scale is RD:
        return 2.0 / 3.0 * p**3
    if scale is RR:
        return 0.75 * p**3
    return 1.0 if p == 1.0 else None


def closed_surface_volume(scale: EffectScale, p: float = 1.0) -> Optional[float]:
    """Exact surface volume, or ``None`` for the odds ratio."""
    p = check_bound(p)
    if scale is RD:
        return 4.0 / 3.0 * p**3
    if scale is RR:
        return RR_SURFACE_CONSTANT * p**3
    return None


def ratio_v_over_f(scale: EffectScale, p: float = 1.0, surface=None, domain=None) -> float:
    """Surface volume over domain volume.

    Closed forms are used where they exist; otherwise ``surface`` and
    ``domain`` (numbers or objects with a ``value`` attribute) must be given.
    """
    if scale is RD:
        return 2.0
    if scale is RR:
        return RR_RATIO_CONSTANT
    v = closed_surface_volume(scale, p) if surface is None else getattr(surface, "value", surface)
    f = closed_domain_volume(scale, p) if domain is None else getattr(domain, "value", domain)
    if v is None or f is None:
        raise ValueError(f"no closed form for {scale.value} at p={p}; pass numeric estimates")
    if f <= 0:
        raise ArithmeticError(f"domain volume estimate is {f}; cannot form the ratio")
    return float(v) / float(f)
