"""Wald tests of homogeneity and the volumes of their acceptance regions.

For estimated cell proportions ``P_hat`` in the open 4-cube, each scale's
Wald statistic is a squared interaction contrast over its delta-method
variance.  The acceptance region is where the statistic stays at or below
``C_alpha = Phi^{-1}(alpha/2)^2``; its volume is estimated by Monte Carlo
over the uniform 4-cube.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .integrate import MONTE_CARLO, McConfig, VolumeEstimate, chunk_sizes, open_uniform_draw, run_chunks, substream
from .scales import OR, RD, RR, DomainError, EffectScale, OutcomeQuad

DEFAULT_N_GRID = (100, 500, 2000, 5000, 10000)
DEFAULT_ALPHA = 0.05
SCALES = (RD, RR, OR)

# Rational approximation to the normal quantile (P. J. Acklam), relative
# error about 1.15e-9 before refinement.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _poly(coefs, x):
    acc = 0.0
    for c in coefs:
        acc = acc * x + c
    return acc


def _lower_quantile(q: float) -> float:
    # q <= 0.5; the upper half follows by symmetry so 1 - q never loses digits.
    if q < _P_LOW:
        t = math.sqrt(-2.0 * math.log(q))
        x = _poly(_C, t) / (_poly(_D, t) * t + 1.0)
    else:
        r = q - 0.5
        s = r * r
        x = _poly(_A, s) * r / (_poly(_B, s) * s + 1.0)
    # One Halley step against the erfc-based CDF.
    e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - q
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def normal_quantile(q: float) -> float:
    """Standard normal quantile ``Phi^{-1}(q)`` for ``0 < q < 1``."""
    q = float(q)
    if not (0.0 < q < 1.0):
        raise DomainError(f"normal_quantile needs 0 < q < 1, got {q!r}")
    if q == 0.5:
        return 0.0
    if q > 0.5:
        return -_lower_quantile(1.0 - q)
    return _lower_quantile(q)


def critical_value(alpha: float) -> float:
    """Two-sided Wald critical value ``Phi^{-1}(alpha/2)^2``."""
    return normal_quantile(alpha / 2.0) ** 2


@dataclass(frozen=True)
class WaldConfig:
    n11: int
    n10: int
    n01: int
    n00: int
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if min(self.n11, self.n10, self.n01, self.n00) < 1:
            raise ValueError("cell sample sizes must be at least 1")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")

    @classmethod
    def equal(cls, n: int, alpha: float = DEFAULT_ALPHA) -> WaldConfig:
        return cls(n, n, n, n, alpha)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([self.n11, self.n10, self.n01, self.n00], dtype=float)

    @property
    def critical(self) -> float:
        return critical_value(self.alpha)


class EstimateQuad(OutcomeQuad):
    """Sample proportions ``(p11_hat, p10_hat, p01_hat, p00_hat)``, each in (0, 1)."""


# Signs of the interaction contrast in cell order 11, 10, 01, 00.
_SIGNS = np.array([1.0, -1.0, -1.0, 1.0])


def wald_statistics(phat: np.ndarray, sizes, scale: EffectScale) -> np.ndarray:
    """Vectorised Wald statistic over rows of an ``(m, 4)`` array of proportions."""
    phat = np.asarray(phat, dtype=float)
    n = np.asarray(sizes, dtype=float)
    q = 1.0 - phat
    if scale is RD:
        contrast = phat @ _SIGNS
        var = (phat * q / n).sum(axis=-1)
    elif scale is RR:
        contrast = np.log(phat) @ _SIGNS
        var = (q / (n * phat)).sum(axis=-1)
    else:
        contrast = (np.log(phat) - np.log(q)) @ _SIGNS
        var = (1.0 / (n * phat * q)).sum(axis=-1)
    return contrast * contrast / var


def wald_statistic(quad_hat: OutcomeQuad, scale: EffectScale, cfg: WaldConfig) -> float:
    """Wald statistic for homogeneity of one table of sample proportions."""
    phat = np.array(list(quad_hat), dtype=float)
    if np.any((phat <= 0.0) | (phat >= 1.0)):
        raise DomainError("Wald variance is degenerate at proportions of exactly 0 or 1")
    return float(wald_statistics(phat, cfg.sizes, scale))


def _acceptance_moments(cfg: WaldConfig, mc: McConfig):
    crit, sizes = cfg.critical, cfg.sizes

    def evaluate(u):
        return np.stack([wald_statistics(u, sizes, s) <= crit for s in SCALES], axis=1).astype(float)

    return run_chunks(evaluate, 4, mc, draw=open_uniform_draw)


def _binomial_estimate(mean: float, mc: McConfig) -> VolumeEstimate:
    se = math.sqrt(max(mean * (1.0 - mean), 0.0) / mc.samples)
    return VolumeEstimate(mean, MONTE_CARLO, mc.samples, se, mc.seed)


def acceptance_volume(scale: EffectScale, cfg: WaldConfig, mc: McConfig = McConfig()) -> VolumeEstimate:
    """Monte Carlo volume of the acceptance region in the unit 4-cube."""
    crit, sizes = cfg.critical, cfg.sizes

    def evaluate(u):
        return (wald_statistics(u, sizes, scale) <= crit).astype(float)[:, None]

    mom = run_chunks(evaluate, 4, mc, draw=open_uniform_draw)
    return _binomial_estimate(float(mom.mean[0]), mc)


@dataclass(frozen=True)
class WaldRow:
    """Acceptance volumes for one sample size, from one shared set of draws."""

    n: int
    alpha: float
    volumes: Mapping[EffectScale, VolumeEstimate]
    ratios: Mapping[EffectScale, float]
    ratio_std_errors: Mapping[EffectScale, float]


def table_wald(
    ns: Sequence[int] = DEFAULT_N_GRID,
    alpha: float = DEFAULT_ALPHA,
    mc: McConfig = McConfig(samples=10**7),
) -> list[WaldRow]:
    """Acceptance volumes for all three scales at each ``n`` (equal cell sizes).

    Every scale and every ``n`` sees the same draws, so ratios between
    scales are low-variance and volumes are exactly non-increasing in ``n``.
    Ratio standard errors use the delta method with the sample covariance.
    """
    if not ns:
        raise ValueError("need at least one sample size")
    rows = []
    for n in ns:
        mom = _acceptance_moments(WaldConfig.equal(int(n), alpha), mc)
        mean, cov = mom.mean, mom.cov
        volumes = {s: _binomial_estimate(float(mean[j]), mc) for j, s in enumerate(SCALES)}
        ratios, ses = {}, {}
        a = mean[0]
        for j, s in enumerate(SCALES[1:], start=1):
            r = mean[j] / a
            var = (cov[j, j] - 2 * r * cov[0, j] + r * r * cov[0, 0]) / (a * a * mom.count)
            ratios[s], ses[s] = float(r), math.sqrt(max(var, 0.0))
        rows.append(WaldRow(int(n), alpha, volumes, ratios, ses))
    return rows


# Table of acceptance volumes as printed in the literature this package
# reproduces; used by the acceptance suite and by fit_alpha's default.
REFERENCE_WALD = {
    RD: (0.214, 0.097, 0.049, 0.031, 0.022),
    RR: (0.246, 0.107, 0.053, 0.034, 0.024),
    OR: (0.253, 0.111, 0.055, 0.035, 0.025),
}


def acceptance_curve(
    ns: Sequence[int], alphas: Sequence[float], mc: McConfig = McConfig()
) -> np.ndarray:
    """Acceptance volumes on a grid, shape ``(3 scales, len(ns), len(alphas))``.

    Draws are shared across every cell.  Statistics scale linearly in ``n``
    for equal cell sizes, so one pass over the per-unit statistic serves
    every ``(n, alpha)``.
    """
    thresholds = np.array([[critical_value(a) / n for a in alphas] for n in ns])
    counts = np.zeros((len(SCALES),) + thresholds.shape)
    ones = np.ones(4)
    for index, size in enumerate(chunk_sizes(mc.samples, mc.chunks)):
        rng = substream(mc.seed, index)
        left = size
        while left > 0:
            m = min(left, 1 << 18)
            u = open_uniform_draw(rng, m, 4)
            for j, s in enumerate(SCALES):
                base = np.sort(wald_statistics(u, ones, s))
                counts[j] += np.searchsorted(base, thresholds, side="right")
            left -= m
    return counts / mc.samples


def fit_alpha(
    target: Optional[Mapping[EffectScale, Sequence[float]]] = None,
    ns: Sequence[int] = DEFAULT_N_GRID,
    alphas: Optional[Sequence[float]] = None,
    mc: McConfig = McConfig(),
) -> tuple[float, float]:
    """Significance level whose acceptance volumes best match ``target``.

    Returns ``(alpha, max_abs_error)`` over a grid search.
    """
    target = REFERENCE_WALD if target is None else target
    alphas = np.linspace(0.005, 0.2, 391) if alphas is None else np.asarray(alphas)
    curve = acceptance_curve(ns, alphas, mc)
    goal = np.array([target[s] for s in SCALES], dtype=float)[..., None]
    err = np.abs(curve - goal).max(axis=(0, 1))
    best = int(np.argmin(err))
    return float(alphas[best]), float(err[best])
