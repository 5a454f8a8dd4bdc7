"""Self-check suite run by ``homvol check``.

Every check compares a production code path against an independent route:
closed-form volume elements against the Gram determinant, Monte Carlo and
cubature against closed-form volumes, and the normal quantile against the
erfc-based CDF.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry, inference, integrate
from .scales import OR, RD, RR, fourth_cell


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_gram(points: int, seed: int = 1) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    xyz = rng.uniform(0.01, 0.99, size=(points, 3))
    out = []
    for scale in (RD, RR, OR):
        worst = 0.0
        for x, y, z in xyz:
            closed = geometry.volume_element(scale, x, y, z)
            gram = geometry.gram_volume(geometry.jacobian(scale, x, y, z))
            worst = max(worst, abs(closed - gram))
        out.append(CheckResult(f"gram/{scale.value}", worst <= 1e-10, f"max |v - sqrt(det JtJ)| = {worst:.3e}"))
    return out


def check_round_trip(points: int, seed: int = 2) -> list[CheckResult]:
    # Bounded away from the faces: odds(w) of a rounded w near 1 carries a
    # relative error of about eps / (1 - w), whatever computed w.
    rng = np.random.default_rng(seed)
    x, y, z = rng.uniform(0.1, 0.9, size=(3, points))
    out = []
    for scale in (RD, RR, OR):
        w = fourth_cell(x, y, z, scale)
        ok = (w > 0) & (w < 1)
        xs, ys, zs, ws = x[ok], y[ok], z[ok], w[ok]
        if scale is RD:
            err = np.abs(xs - ys - zs + ws)
        elif scale is RR:
            err = np.abs(xs * ws / (ys * zs) - 1)
        else:
            h = lambda u: u / (1 - u)  # noqa: E731
            err = np.abs(h(xs) * h(ws) / (h(ys) * h(zs)) - 1)
        worst = float(err.max(initial=0.0))
        out.append(CheckResult(f"round-trip/{scale.value}", worst <= 1e-12, f"max contrast error = {worst:.3e}"))
    return out


def check_quantile(points: int) -> list[CheckResult]:
    grid = np.linspace(1e-6, 1 - 1e-6, points)
    worst = max(abs(0.5 * math.erfc(-inference.normal_quantile(q) / math.sqrt(2)) - q) for q in grid)
    return [CheckResult("quantile/cdf", worst <= 1e-8, f"max |Phi(Phi^-1(q)) - q| = {worst:.3e}")]


def check_monte_carlo(samples: int, seed: int = 3) -> list[CheckResult]:
    cfg = integrate.McConfig(samples=samples, seed=seed)
    out = []
    for kind, closed in (("domain", geometry.closed_domain_volume), ("surface", geometry.closed_surface_volume)):
        for scale in (RD, RR):
            est = integrate.mc_volume(kind, scale, 1.0, cfg)
            exact = closed(scale, 1.0)
            z = abs(est.value - exact) / est.std_error if est.std_error else 0.0
            out.append(
                CheckResult(
                    f"mc/{kind}/{scale.value}",
                    z <= 4.0,
                    f"{est.value:.6f} vs {exact:.6f} ({z:.2f} SE)",
                )
            )
    return out


def check_cubature(cfg: integrate.QuadConfig) -> list[CheckResult]:
    out = []
    for scale, tol in ((RD, 1e-8), (RR, 1e-4)):
        est = integrate.quad_surface_volume(scale, 1.0, cfg).value
        exact = geometry.closed_surface_volume(scale, 1.0)
        err = abs(est - exact)
        out.append(CheckResult(f"quad/surface/{scale.value}", err <= tol, f"{est:.9f} vs {exact:.9f} (|d| = {err:.2e})"))
    for scale in (RD, RR):
        est = integrate.quad_domain_volume(scale, 1.0, cfg).value
        exact = geometry.closed_domain_volume(scale, 1.0)
        err = abs(est - exact)
        out.append(CheckResult(f"quad/domain/{scale.value}", err <= 1e-10, f"{est:.12f} vs {exact:.12f}"))
    return out


def run_checks(fast: bool = False) -> list[CheckResult]:
    if fast:
        quad = integrate.QuadConfig(nodes_per_axis=8, refinement=8, inner_nodes=8)
        return (
            check_gram(200)
            + check_round_trip(10**4)
            + check_quantile(200)
            + check_monte_carlo(2 * 10**5)
            + check_cubature(quad)
        )
    return (
        check_gram(1000)
        + check_round_trip(10**5)
        + check_quantile(1000)
        + check_monte_carlo(10**6)
        + check_cubature(integrate.QuadConfig())
    )
