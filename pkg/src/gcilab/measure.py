"""Gaussian measure of convex bodies.

Band bodies reduce exactly to rectangle probabilities of their model, so the
QMC engine carries them in any dimension. Polygons and H-polytopes get Monte
Carlo membership estimates, and 2-D bodies additionally expose the fiber
measure f(s), the Gaussian mass of the vertical slice at s, used by the
slab-lifting arguments.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad

from .convexgeom import HPolytope, Polygon2D, SymmetricBand, minkowski_contains
from .errors import BudgetTooSmall, DimensionMismatch
from .mvnprob import (
    METHOD_MC,
    METHOD_ORACLE,
    ProbabilityEstimate,
    QUAD_CLIP,
    _as_seed_sequence,
    _interval_from_constraints,
    _phi_density,
    symmetric_rect_prob,
)

MC_MIN_BUDGET = 10_000
MC_CHUNK = 1 << 18
FIBER_TOL = 1e-10
SCREEN_SLACK = 1e-9


def gauss_measure_band(band: SymmetricBand, budget: int = 1 << 16,
                       seed=0, replicates: int = 12) -> ProbabilityEstimate:
    """gamma_d of a band body, via Pr(|X_i| <= c_i) on the band's model."""
    return symmetric_rect_prob(band.model, band.c, budget, seed, replicates)


def _body_dim(body) -> int:
    return 2 if isinstance(body, Polygon2D) else body.dim


def gauss_measure_mc(body, dim: int, budget: int, seed) -> ProbabilityEstimate:
    """Fraction of standard Gaussian samples inside the body (binomial stderr)."""
    if budget < MC_MIN_BUDGET:
        raise BudgetTooSmall(f"Monte Carlo budget {budget} < {MC_MIN_BUDGET}")
    if _body_dim(body) != dim:
        raise DimensionMismatch(f"body lives in R^{_body_dim(body)}, not R^{dim}")
    seed_seq, seed_int = _as_seed_sequence(seed)
    rng = np.random.default_rng(seed_seq)
    hits = 0
    remaining = budget
    while remaining > 0:
        m = min(remaining, MC_CHUNK)
        pts = rng.standard_normal((m, dim))
        hits += int(np.count_nonzero(body.contains_many(pts)))
        remaining -= m
    p = hits / budget
    stderr = math.sqrt(max(p * (1.0 - p), 0.0) / budget)
    return ProbabilityEstimate(p, stderr, budget, METHOD_MC, seed_int)


def minkowski_measure_mc(k: HPolytope, t: HPolytope, dim: int,
                         budget: int, seed) -> ProbabilityEstimate:
    """gamma_d(K + T) by Monte Carlo with simplex-feasibility membership.

    Two screens implied by the membership semantics skip redundant solves:
    points inside K or T are inside K + T with a constructive witness, and a
    point beyond h_K(u) + h_T(u) along any facet normal u is separated from
    the sum. Remaining shell points go through ``minkowski_contains``.
    """
    if budget < MC_MIN_BUDGET:
        raise BudgetTooSmall(f"Monte Carlo budget {budget} < {MC_MIN_BUDGET}")
    if k.dim != dim or t.dim != dim:
        raise DimensionMismatch("summands must live in the requested dimension")
    seed_seq, seed_int = _as_seed_sequence(seed)
    rng = np.random.default_rng(seed_seq)
    dirs = np.vstack([k.normals, t.normals])
    hsum = np.array([k.support(u) + t.support(u) for u in dirs])
    hits = 0
    remaining = budget
    while remaining > 0:
        m = min(remaining, MC_CHUNK)
        pts = rng.standard_normal((m, dim))
        inside = k.contains_many(pts) | t.contains_many(pts)
        outside = np.any(pts @ dirs.T > hsum + SCREEN_SLACK, axis=1)
        hits += int(np.count_nonzero(inside))
        shell = np.flatnonzero(~inside & ~outside)
        for idx in shell:
            if minkowski_contains(k, t, pts[idx]):
                hits += 1
        remaining -= m
    p = hits / budget
    stderr = math.sqrt(max(p * (1.0 - p), 0.0) / budget)
    return ProbabilityEstimate(p, stderr, budget, METHOD_MC, seed_int)


def _band_slice(band: SymmetricBand, s: float) -> tuple[float, float] | None:
    rows = band.model.factor_rows
    c = band.c.as_array
    lo, hi = _interval_from_constraints(rows[:, 1], -c - rows[:, 0] * s, c - rows[:, 0] * s)
    if hi <= lo:
        return None
    return lo, hi


def fiber_measure(body, s: float, budget=None, seed=None) -> ProbabilityEstimate:
    """gamma_1 of the slice {y : (s, y) in body} for 2-D bodies.

    Slice endpoints come exactly from the polygon edges or band constraints;
    the 1-D mass is integrated by adaptive quadrature. An empty slice returns
    measure 0 rather than an error. ``budget`` and ``seed`` are accepted for
    interface parity; the evaluation is deterministic.
    """
    if isinstance(body, Polygon2D):
        interval = body.slice_vertical(float(s))
    elif isinstance(body, SymmetricBand):
        if body.dim != 2:
            raise DimensionMismatch("fiber measure is defined for 2-D bands")
        interval = _band_slice(body, float(s))
    else:
        raise DimensionMismatch("fiber measure expects a Polygon2D or 2-D band")
    if interval is None:
        return ProbabilityEstimate(0.0, FIBER_TOL, 0, METHOD_ORACLE, None)
    lo, hi = max(interval[0], -QUAD_CLIP), min(interval[1], QUAD_CLIP)
    if hi <= lo:
        return ProbabilityEstimate(0.0, FIBER_TOL, 0, METHOD_ORACLE, None)
    val, _ = quad(_phi_density, lo, hi, epsabs=FIBER_TOL * 1e-2, limit=200)
    return ProbabilityEstimate(min(max(val, 0.0), 1.0), FIBER_TOL, 0, METHOD_ORACLE, None)


def product_band(band: SymmetricBand, copies: int) -> SymmetricBand:
    """N-fold product body K^N as a band over the block-diagonal model."""
    from .gaussmodel import product_model

    return SymmetricBand(product_model(band.model, copies), band.c.tiled(copies))
