"""Monte Carlo and cubature estimates of domain and surface volumes.

Monte Carlo draws triples uniformly on ``(0, p)^3`` and averages the domain
indicator, optionally weighted by the volume element.  Work is split into
``chunks`` substreams seeded from ``SeedSequence(seed, spawn_key=(i,))``;
partial moments are merged in chunk order, so a result depends only on
``(seed, samples, chunks)`` and never on how many workers ran it.

Cubature reduces each volume to an iterated integral with the innermost
coordinate ``x = p11`` handled analytically (domain volumes) or on a
log/logit substitution (surface volumes), and applies tensor Gauss-Legendre
rules on panels graded dyadically toward the edges of ``(0, p)^2``.  The
odds-ratio volume element blows up like 1/distance along edges where
``x(1-y)(1-z) + (1-x)yz`` vanishes; the grading is what keeps the rule
accurate there.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import geometry
from .scales import OR, RD, RR, EffectScale, check_bound, domain_mask, or_lower_bound

DEFAULT_SEED = 20170707
DEFAULT_P_GRID = tuple(round(0.1 * i, 1) for i in range(1, 11))

CLOSED = "closed"
MONTE_CARLO = "monte_carlo"
CUBATURE = "cubature"
_METHODS = (CLOSED, MONTE_CARLO, CUBATURE)

# Rows of draws generated per batch inside one chunk; bounds peak memory.
_BATCH = 1 << 18


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    method: str
    samples_or_nodes: int
    std_error: Optional[float] = None
    seed: Optional[int] = None

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if (self.std_error is not None) != (self.method == MONTE_CARLO):
            raise ValueError("std_error is required for, and only for, Monte Carlo estimates")
        if self.std_error is not None and self.std_error < 0:
            raise ValueError("std_error must be non-negative")
        if self.samples_or_nodes < 1:
            raise ValueError("samples_or_nodes must be at least 1")

    def scaled(self, factor: float) -> VolumeEstimate:
        """The same estimate multiplied by a positive constant."""
        se = None if self.std_error is None else self.std_error * factor
        return VolumeEstimate(self.value * factor, self.method, self.samples_or_nodes, se, self.seed)


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo settings.  ``workers`` changes speed only, never results."""

    samples: int = 10**6
    seed: int = DEFAULT_SEED
    chunks: int = 8
    workers: int = 1

    def __post_init__(self):
        if self.samples < 1 or self.chunks < 1 or self.workers < 1:
            raise ValueError("samples, chunks and workers must be positive")
        if self.chunks > self.samples:
            raise ValueError("chunks cannot exceed samples")


@dataclass(frozen=True)
class QuadConfig:
    """Gauss-Legendre order per panel and number of dyadic grading levels.

    Each outer axis is cut at ``p/2, p/4, ..., p/2^refinement`` and the mirror
    points near ``p``; every panel carries ``nodes_per_axis`` nodes.
    """

    nodes_per_axis: int = 12
    refinement: int = 14
    inner_nodes: int = 10

    def __post_init__(self):
        if self.nodes_per_axis < 2 or self.inner_nodes < 2:
            raise ValueError("need at least 2 Gauss-Legendre nodes per panel")
        if self.refinement < 0:
            raise ValueError("refinement must be non-negative")


# ---------------------------------------------------------------------------
# Monte Carlo machinery
# ---------------------------------------------------------------------------


def substream(seed: int, index: int) -> np.random.Generator:
    """Generator for chunk ``index`` of a run seeded with ``seed``."""
    seq = np.random.SeedSequence(int(seed) & 0xFFFF_FFFF_FFFF_FFFF, spawn_key=(index,))
    return np.random.Generator(np.random.PCG64(seq))


def chunk_sizes(samples: int, chunks: int) -> list[int]:
    base, extra = divmod(samples, chunks)
    return [base + (i < extra) for i in range(chunks)]


@dataclass
class Moments:
    """Running count, sums and cross-product sums of vector-valued samples."""

    count: int = 0
    sums: np.ndarray = field(default_factory=lambda: np.zeros(0))
    cross: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def add(self, values: np.ndarray) -> None:
        if self.count == 0 and self.sums.size == 0:
            q = values.shape[1]
            self.sums, self.cross = np.zeros(q), np.zeros((q, q))
        self.count += values.shape[0]
        self.sums += values.sum(axis=0)
        self.cross += values.T @ values

    def merge(self, other: Moments) -> None:
        if other.count == 0:
            return
        if self.count == 0:
            self.count, self.sums, self.cross = other.count, other.sums.copy(), other.cross.copy()
            return
        self.count += other.count
        self.sums += other.sums
        self.cross += other.cross

    @property
    def mean(self) -> np.ndarray:
        return self.sums / self.count

    @property
    def cov(self) -> np.ndarray:
        """Sample covariance (n - 1 denominator) of the per-draw values."""
        m = self.mean
        c = (self.cross - self.count * np.outer(m, m)) / max(self.count - 1, 1)
        # Rounding can leave tiny negative variances for constant columns.
        idx = np.diag_indices_from(c)
        c[idx] = np.maximum(c[idx], 0.0)
        return c

    def std_error(self, j: int = 0) -> float:
        return math.sqrt(self.cov[j, j] / self.count)


def uniform_draw(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    """Uniform draws on ``[0, 1)^dim``; exact zeros count as domain misses."""
    return rng.random((count, dim))


def open_uniform_draw(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    """Uniform draws on ``(0, 1)^dim``; exact zeros are redrawn."""
    u = rng.random((count, dim))
    bad = u == 0.0
    while bad.any():
        u[bad] = rng.random(int(bad.sum()))
        bad = u == 0.0
    return u


def run_chunks(
    evaluate: Callable[[np.ndarray], np.ndarray],
    dim: int,
    cfg: McConfig,
    draw: Callable[[np.random.Generator, int, int], np.ndarray] = uniform_draw,
) -> Moments:
    """Evaluate ``evaluate`` on ``cfg.samples`` uniform draws, chunk by chunk.

    ``evaluate`` maps an ``(n, dim)`` array of draws to an ``(n, q)`` array.
    """

    def one_chunk(index: int, size: int) -> Moments:
        rng = substream(cfg.seed, index)
        mom = Moments()
        left = size
        while left > 0:
            n = min(left, _BATCH)
            mom.add(np.asarray(evaluate(draw(rng, n, dim)), dtype=float).reshape(n, -1))
            left -= n
        return mom

    sizes = chunk_sizes(cfg.samples, cfg.chunks)
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(one_chunk, range(cfg.chunks), sizes))
    else:
        parts = [one_chunk(i, n) for i, n in enumerate(sizes)]
    total = Moments()
    for part in parts:
        total.merge(part)
    return total


def _check_kind(kind: str) -> str:
    if kind not in ("domain", "surface"):
        raise ValueError(f"kind must be 'domain' or 'surface', got {kind!r}")
    return kind


def mc_volume(kind: str, scale: EffectScale, p: float = 1.0, cfg: McConfig = McConfig()) -> VolumeEstimate:
    """Hit-or-miss estimate of a domain volume or surface volume.

    For ``kind="surface"`` the hits are weighted by the volume element.  The
    odds-ratio surface integrand has a log-divergent second moment, so its
    reported standard error is optimistic; use :func:`quad_surface_volume`
    for that quantity.
    """
    _check_kind(kind)
    p = check_bound(p)

    def evaluate(u: np.ndarray) -> np.ndarray:
        x, y, z = (p * u).T
        hit = domain_mask(x, y, z, p, scale)
        if kind == "domain":
            return hit.astype(float)[:, None]
        out = np.zeros(len(x))
        out[hit] = geometry.volume_element(scale, x[hit], y[hit], z[hit])
        return out[:, None]

    mom = run_chunks(evaluate, 3, cfg)
    vol = p**3
    return VolumeEstimate(
        value=float(mom.mean[0]) * vol,
        method=MONTE_CARLO,
        samples_or_nodes=cfg.samples,
        std_error=mom.std_error(0) * vol,
        seed=cfg.seed,
    )


# ---------------------------------------------------------------------------
# Cubature machinery
# ---------------------------------------------------------------------------

# Breakpoint offsets placed around each feature of an inner integrand.
_INNER_OFFSETS = np.array([0.0, 0.5, -0.5, 1, -1, 2, -2, 4, -4, 8, -8, 16, -16, 32, -32, 64, -64])
# Inner integrands decay at least like exp(-|s|) this far past their features.
_INNER_REACH = 45.0
# Outer points processed per block.
_BLOCK = 2048


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    t, w = np.polynomial.legendre.leggauss(n)
    return (t + 1) / 2, w / 2


def graded_rule(a: float, b: float, n: int, refinement: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on [a, b], graded dyadically toward both ends."""
    cuts = [0.5 * 2.0**-k for k in range(refinement, -1, -1)]
    t = np.unique(np.array([0.0] + cuts + [1.0 - c for c in cuts] + [1.0]))
    lo, width = t[:-1], np.diff(t)
    s, w = gauss_legendre(n)
    nodes = (lo[:, None] + width[:, None] * s).ravel()
    weights = (width[:, None] * w).ravel()
    return a + (b - a) * nodes, (b - a) * weights


def _outer_grid(p: float, cfg: QuadConfig):
    nodes, weights = graded_rule(0.0, p, cfg.nodes_per_axis, cfg.refinement)
    y, z = np.meshgrid(nodes, nodes, indexing="ij")
    return y.ravel(), z.ravel(), np.outer(weights, weights).ravel()


def _inner_integral(lo, hi, centers, n, integrand) -> np.ndarray:
    """Integrate ``integrand(s, rows)`` over ``s`` in ``[lo, hi]`` row by row.

    Panels break at ``centers + offsets`` so that each panel sees a smooth,
    slowly varying piece of the integrand.
    """
    m = len(lo)
    cuts = (centers[:, :, None] + _INNER_OFFSETS).reshape(m, -1)
    bp = np.concatenate([lo[:, None], hi[:, None], cuts], axis=1)
    bp = np.sort(np.clip(bp, lo[:, None], hi[:, None]), axis=1)
    a, width = bp[:, :-1], np.diff(bp, axis=1)
    t, w = gauss_legendre(n)
    s = a[..., None] + width[..., None] * t
    vals = integrand(s)
    return (vals * (width[..., None] * w)).reshape(m, -1).sum(axis=1)


def _blocked(total: int):
    for start in range(0, total, _BLOCK):
        yield slice(start, min(start + _BLOCK, total))


def _rd_domain(p: float, cfg: QuadConfig) -> tuple[float, int]:
    # Inner x-length min(y+z, p) - max(y+z-p, 0) is linear on each side of
    # y + z = p, so split z there and the rule is exact.
    yn, yw = graded_rule(0.0, p, cfg.nodes_per_axis, cfg.refinement)
    t, w = gauss_legendre(cfg.nodes_per_axis)
    total = 0.0
    for lo, hi in ((np.zeros_like(yn), p - yn), (p - yn, np.full_like(yn, p))):
        z = lo[:, None] + (hi - lo)[:, None] * t
        zw = (hi - lo)[:, None] * w
        length = np.minimum(yn[:, None] + z, p) - np.maximum(yn[:, None] + z - p, 0.0)
        total += float((yw[:, None] * zw * length).sum())
    return total, 2 * yn.size * t.size


def quad_domain_volume(scale: EffectScale, p: float = 1.0, cfg: QuadConfig = QuadConfig()) -> VolumeEstimate:
    """Domain volume by exact inner reduction over ``x`` and 2-d cubature."""
    p = check_bound(p)
    if scale is RD:
        value, nodes = _rd_domain(p, cfg)
        return VolumeEstimate(value, CUBATURE, nodes)
    y, z, w = _outer_grid(p, cfg)
    if scale is RR:
        # yz/p < x < p; the lower limit is always below p inside the square.
        length = p - y * z / p
    else:
        length = p - or_lower_bound(y, z, p)
    return VolumeEstimate(float((w * length).sum()), CUBATURE, y.size)


def _logit(u):
    return np.log(u) - np.log1p(-u)


def _rr_surface(p: float, cfg: QuadConfig) -> tuple[float, int]:
    # Substitute x = exp(s): v_m dx = sqrt((x^2 + y^2)(x^2 + z^2)) / x ds,
    # smooth in s with transitions near s = log y and s = log z.
    y, z, w = _outer_grid(p, cfg)
    total = 0.0
    for sl in _blocked(y.size):
        yb, zb = y[sl, None, None], z[sl, None, None]
        lo = np.log(y[sl]) + np.log(z[sl]) - math.log(p)
        hi = np.full_like(lo, math.log(p))
        centers = np.stack([np.log(y[sl]), np.log(z[sl])], axis=1)

        def integrand(s):
            x = np.exp(s)
            return np.sqrt((x * x + yb * yb) * (x * x + zb * zb)) / x

        total += float((w[sl] * _inner_integral(lo, hi, centers, cfg.inner_nodes, integrand)).sum())
    nodes = y.size * (2 * _INNER_OFFSETS.size + 1) * cfg.inner_nodes
    return total, nodes


def _or_surface(p: float, cfg: QuadConfig) -> tuple[float, int]:
    # Substitute x = logistic(s): v_o dx = v_o x(1-x) ds.  In s the
    # x-derivative term is a logistic bump centred at log(hy hz), and the
    # remaining terms decay like exp(-|s|) away from it and from s = 0.
    y, z, w = _outer_grid(p, cfg)
    s_top = _logit(p) if p < 1.0 else math.inf
    total = 0.0
    for sl in _blocked(y.size):
        yb, zb = y[sl, None, None], z[sl, None, None]
        log_c = _logit(y[sl]) + _logit(z[sl])
        lb = or_lower_bound(y[sl], z[sl], p)
        with np.errstate(divide="ignore"):
            lo = np.where(lb > 0, _logit(np.where(lb > 0, lb, 0.5)), -np.inf)
        lo = np.maximum(lo, np.minimum(log_c, 0.0) - _INNER_REACH)
        hi = np.minimum(s_top, np.maximum(log_c, 0.0) + _INNER_REACH)
        centers = np.stack([log_c, np.zeros_like(log_c)], axis=1)

        def integrand(s):
            x = 1.0 / (1.0 + np.exp(-s))
            return geometry.volume_element(OR, x, yb, zb) * x * (1.0 - x)

        total += float((w[sl] * _inner_integral(lo, hi, centers, cfg.inner_nodes, integrand)).sum())
    nodes = y.size * (2 * _INNER_OFFSETS.size + 1) * cfg.inner_nodes
    return total, nodes


def quad_surface_volume(scale: EffectScale, p: float = 1.0, cfg: QuadConfig = QuadConfig()) -> VolumeEstimate:
    """Surface volume: cubature of the volume element over the domain."""
    p = check_bound(p)
    if scale is RD:
        value, nodes = _rd_domain(p, cfg)
        return VolumeEstimate(2.0 * value, CUBATURE, nodes)
    value, nodes = (_rr_surface if scale is RR else _or_surface)(p, cfg)
    return VolumeEstimate(value, CUBATURE, nodes)


# ---------------------------------------------------------------------------
# Tables for the odds-ratio scale
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DomainRow:
    p: float
    domain: VolumeEstimate

    @property
    def normalized(self) -> float:
        return self.domain.value / self.p**3


@dataclass(frozen=True)
class SurfaceRow:
    p: float
    surface: VolumeEstimate
    domain: VolumeEstimate

    @property
    def normalized(self) -> float:
        return self.surface.value / self.p**3

    @property
    def ratio(self) -> float:
        return geometry.ratio_v_over_f(OR, self.p, self.surface, self.domain)

    @property
    def ratio_std_error(self) -> Optional[float]:
        """Delta-method standard error, treating the two estimates as independent."""
        if self.surface.std_error is None or self.domain.std_error is None:
            return None
        r = self.ratio
        rel = (self.surface.std_error / self.surface.value) ** 2 + (self.domain.std_error / self.domain.value) ** 2
        return r * math.sqrt(rel)


def _estimate(kind: str, p: float, cfg) -> VolumeEstimate:
    if isinstance(cfg, McConfig):
        return mc_volume(kind, OR, p, cfg)
    fn = quad_domain_volume if kind == "domain" else quad_surface_volume
    return fn(OR, p, cfg)


def table_thm1(ps: Sequence[float] = DEFAULT_P_GRID, cfg=QuadConfig()) -> list[DomainRow]:
    """Odds-ratio domain volumes ``F_o(p)`` for each bound in ``ps``.

    ``cfg`` selects the method: a :class:`QuadConfig` for cubature, a
    :class:`McConfig` for Monte Carlo.
    """
    if not ps:
        raise ValueError("need at least one p")
    return [DomainRow(p, _estimate("domain", check_bound(p), cfg)) for p in ps]


def table_thm2(ps: Sequence[float] = DEFAULT_P_GRID, cfg=QuadConfig()) -> list[SurfaceRow]:
    """Odds-ratio surface volumes with the matching domain volumes and ratios."""
    if not ps:
        raise ValueError("need at least one p")
    return [
        SurfaceRow(p, _estimate("surface", check_bound(p), cfg), _estimate("domain", p, cfg))
        for p in ps
    ]
