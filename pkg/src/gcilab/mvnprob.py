"""Univariate normal primitives and multivariate rectangle probabilities.

The rectangle engine estimates Pr(a_i <= X_i <= b_i for all i) for a centered
Gaussian vector by sequential conditioning through a greedily ordered
semidefinite Cholesky factorization: each coordinate is mapped through the
normal CDF and its inverse onto the unit cube, and the cube integral is
evaluated on randomly shifted rank-1 lattices with tent periodization.
Replicated randomizations supply a standard error. Infinite bounds are exact
(the CDF is evaluated symbolically at +-inf, never truncated), and
rank-deficient covariances are handled without regularization.

A deterministic adaptive tensor quadrature oracle covers factor dimension
d <= 3 and is the independent cross-check for the sampling engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.fft import fft, ifft
from scipy.integrate import quad
from scipy.special import ndtr, ndtri

from .errors import (
    BudgetTooSmall,
    DimensionMismatch,
    DimensionTooLarge,
    InvalidBounds,
    InvalidParameters,
    OutOfRange,
)
from .gaussmodel import CorrelationModel, ThresholdVector

CDF_TOL = 1e-12          # absolute error of std_normal_cdf over finite x
ORACLE_TOL = 1e-7        # absolute tolerance of the tensor quadrature oracle
CDF_FLOOR = 1e-300       # lower clamp for deep-tail CDF values
MIN_BUDGET = 1000
QMC_STDERR_FLOOR = 1e-15  # accumulated representation rounding of the estimate
QUAD_CLIP = 9.0          # |x| > 9 carries mass < 2e-19, below every tolerance
DEGENERATE_SLACK = 1e-9  # membership slack for rank-deficient coordinates
ZERO_COEF = 1e-13

METHOD_CLOSED = "closed-form"
METHOD_ORACLE = "quadrature-oracle"
METHOD_QMC = "qmc"
METHOD_MC = "mc"
_METHODS = (METHOD_CLOSED, METHOD_ORACLE, METHOD_QMC, METHOD_MC)


@dataclass(frozen=True)
class ProbabilityEstimate:
    """A probability in [0, 1] with its standard error and provenance tag."""

    value: float
    stderr: float
    samples: int
    method: str
    seed: int | None = None

    def __post_init__(self):
        if not (-1e-9 <= self.value <= 1 + 1e-9):
            raise OutOfRange(f"probability {self.value} outside [0, 1]")
        object.__setattr__(self, "value", float(min(max(self.value, 0.0), 1.0)))
        if self.stderr < 0:
            raise OutOfRange("stderr must be nonnegative")
        if self.method not in _METHODS:
            raise InvalidParameters(f"unknown method tag {self.method!r}")


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF, absolute error <= 1e-12 for finite x, exact at +-inf.

    Deep-tail values are clamped at 1e-300 so downstream logarithms stay finite.
    """
    x = float(x)
    if math.isnan(x):
        raise OutOfRange("CDF argument must not be NaN")
    if math.isinf(x):
        return 0.0 if x < 0 else 1.0
    p = float(ndtr(x))
    return max(p, CDF_FLOOR)


def inv_std_normal_cdf(p: float) -> float:
    """Inverse standard normal CDF on (0, 1)."""
    p = float(p)
    if not (0.0 < p < 1.0):
        raise OutOfRange(f"quantile argument {p} outside (0, 1)")
    return float(ndtri(p))


def sym_interval_prob(c: float) -> float:
    """Pr(|Z| <= c) for standard normal Z; c may be +inf."""
    if c <= 0:
        return 0.0
    if math.isinf(c):
        return 1.0
    return float(ndtr(c) - ndtr(-c))


def _as_seed_sequence(seed) -> tuple[np.random.SeedSequence, int | None]:
    if isinstance(seed, np.random.SeedSequence):
        return seed, None
    if seed is None:
        raise InvalidParameters("an integer seed is required for reproducibility")
    return np.random.SeedSequence(int(seed)), int(seed)


def _conditioning_system(sigma, lower, upper, tol: float = 1e-10):
    """Greedy conditioning order and factor for the sequential transform.

    At every step the remaining coordinate with the smallest estimated
    conditional interval probability is processed next (narrowest first,
    conditionally, ranking with truncated-normal means); near-singular
    directions are therefore eliminated while their conditional variance is
    still large, which keeps the transformed integrand smooth. Coordinates
    whose residual variance falls below `tol` are dependent: they get a zero
    diagonal and their value is an exact linear function of earlier ones.

    Returns the reordered factor with unit diagonal on free rows plus the
    correspondingly scaled bounds.
    """
    sigma = np.asarray(sigma, dtype=float)
    n = sigma.shape[0]
    sd = np.sqrt(np.clip(np.diag(sigma), 0.0, None))
    scale = np.where(sd > 0, sd, 1.0)
    resid = sigma / scale / scale[:, None]
    lo = np.asarray(lower, dtype=float) / scale
    hi = np.asarray(upper, dtype=float) / scale

    coef = np.zeros((n, n))     # coef[i, j]: loading of coordinate i on y_j
    pivot_sd = np.zeros(n)
    y_rank = np.zeros(n)        # truncated means, used only to rank pivots
    order: list[int] = []
    remaining = list(range(n))
    sqtp = math.sqrt(2.0 * math.pi)
    for step in range(n):
        best, best_de, best_stats = -1, 2.0, (0.0, 0.0, 0.0)
        for i in remaining:
            res = resid[i, i]
            if res > tol:
                ci = math.sqrt(res)
                s = coef[i, :step] @ y_rank[:step] if step else 0.0
                lo_i = (lo[i] - s) / ci
                hi_i = (hi[i] - s) / ci
                de = float(ndtr(hi_i) - ndtr(lo_i))
                if de <= best_de:
                    best, best_de, best_stats = i, de, (ci, lo_i, hi_i)
        if best < 0:
            break
        ci, lo_b, hi_b = best_stats
        order.append(best)
        remaining.remove(best)
        pivot_sd[len(order) - 1] = ci
        if remaining:
            idx = np.asarray(remaining)
            load = resid[idx, best] / ci
            coef[idx, step] = load
            resid[np.ix_(idx, idx)] -= np.outer(load, load)
        if best_de > tol:
            lo_d = math.exp(-0.5 * lo_b * lo_b) if abs(lo_b) < 40 else 0.0
            hi_d = math.exp(-0.5 * hi_b * hi_b) if abs(hi_b) < 40 else 0.0
            y_rank[step] = (lo_d - hi_d) / (sqtp * best_de)
        else:
            y_rank[step] = 0.5 * (max(lo_b, -10.0) + min(hi_b, 10.0))

    free = len(order)
    rows = order + remaining  # dependent coordinates go last
    ell = np.zeros((n, n))
    new_lo = np.empty(n)
    new_hi = np.empty(n)
    for k, i in enumerate(rows):
        if k < free:
            ell[k, :k] = coef[i, :k] / pivot_sd[k]
            ell[k, k] = 1.0
            new_lo[k] = lo[i] / pivot_sd[k]
            new_hi[k] = hi[i] / pivot_sd[k]
        else:
            ell[k, :free] = coef[i, :free]
            new_lo[k] = lo[i]
            new_hi[k] = hi[i]
    return ell, new_lo, new_hi


def _transform_plan(ell):
    """Static plan for the sequential transform.

    Dependent rows (zero diagonal) are exact linear constraints on earlier
    free variables; each is folded into the conditional interval of the last
    free variable it involves, so the integrand stays continuous instead of
    acquiring 0/1 indicator jumps. Rows with no free loading at all reduce to
    constant feasibility checks.
    """
    n = ell.shape[0]
    free = np.diag(ell) > 0.0
    folds: dict[int, list[int]] = {}
    constant_rows = []
    for r in np.flatnonzero(~free):
        nz = np.flatnonzero(np.abs(ell[r, :r]) > ZERO_COEF)
        if nz.size == 0:
            constant_rows.append(int(r))
        else:
            folds.setdefault(int(nz[-1]), []).append(int(r))
    needs_y = np.zeros(n, dtype=bool)
    for j in np.flatnonzero(free):
        later_free = np.abs(ell[j + 1:, j]).max() > ZERO_COEF if j + 1 < n else False
        later_fold = any(abs(ell[r, j]) > ZERO_COEF and last > j
                         for last, rows in folds.items() for r in rows)
        needs_y[j] = bool(later_free or later_fold)
    return free, folds, constant_rows, needs_y


def _genz_product(ell, a, b, w):
    """Sequential-conditioning integrand over uniforms w of shape (m, npts)."""
    n = ell.shape[0]
    npts = w.shape[1] if w.size else 1
    free, folds, constant_rows, needs_y = _transform_plan(ell)
    f = np.ones(npts)
    for r in constant_rows:
        # Zero-variance coordinate: its value is exactly 0.
        if not (a[r] <= DEGENERATE_SLACK and b[r] >= -DEGENERATE_SLACK):
            return np.zeros(npts)
    y = np.zeros((n, npts))
    col = 0
    for i in range(n):
        if not free[i]:
            continue
        s = ell[i, :i] @ y[:i] if i else np.zeros(npts)
        lo_bound = a[i] - s
        hi_bound = b[i] - s
        for r in folds.get(i, ()):
            sr = ell[r, :i] @ y[:i] if i else np.zeros(npts)
            cr = ell[r, i]
            if cr > 0:
                lo_bound = np.maximum(lo_bound, (a[r] - sr) / cr)
                hi_bound = np.minimum(hi_bound, (b[r] - sr) / cr)
            else:
                lo_bound = np.maximum(lo_bound, (b[r] - sr) / cr)
                hi_bound = np.minimum(hi_bound, (a[r] - sr) / cr)
        lo = ndtr(lo_bound)
        hi = ndtr(hi_bound)
        diff = np.clip(hi - lo, 0.0, None)
        f = f * diff
        if needs_y[i]:
            u = np.clip(lo + w[col] * diff, CDF_FLOOR, 1.0 - 1e-16)
            y[i] = ndtri(u)
            col += 1
    return f


def _qmc_dimension(ell) -> int:
    return int(_transform_plan(ell)[3].sum())


def _primes_up_to(n: int) -> np.ndarray:
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(math.isqrt(n)) + 1):
        if sieve[p]:
            sieve[p * p::p] = False
    return np.flatnonzero(sieve)


def _primitive_root(p: int) -> int:
    factors = set()
    m = p - 1
    for q in _primes_up_to(int(math.isqrt(m)) + 1):
        while m % q == 0:
            factors.add(int(q))
            m //= q
    if m > 1:
        factors.add(int(m))
    for r in range(2, p):
        if all(pow(r, (p - 1) // q, p) != 1 for q in factors):
            return r
    raise RuntimeError(f"no primitive root found for {p}")  # pragma: no cover


@lru_cache(maxsize=128)
def _cbc_lattice(n_dim: int, n_target: int) -> tuple[tuple[float, ...], int]:
    """Rank-1 lattice generator by fast component-by-component construction.

    The point count is rounded down to the largest prime <= n_target; the
    returned generator q lies in (0, 1)^n_dim. Standard Korobov-kernel CBC
    with product weights, evaluated through FFT convolutions.
    """
    primes = _primes_up_to(max(n_target, 3))
    n = int(primes[-1])
    if n_dim == 1:
        return (1.0 / n,), n
    gamma = np.hstack([1.0, 0.8 ** np.arange(n_dim - 1)])
    z = np.ones(n_dim, dtype=int)
    m = (n - 1) // 2
    g = _primitive_root(n)
    perm = np.ones(m, dtype=int)
    for j in range(m - 1):
        perm[j + 1] = (g * perm[j]) % n
    perm = np.minimum(n - perm, perm)
    pn = perm / n
    kernel = pn * pn - pn + 1.0 / 6.0
    fft_kernel = fft(kernel)
    q = 1.0
    w = 0
    for s in range(1, n_dim):
        reordered = np.hstack([kernel[:w + 1][::-1], kernel[w + 1:m][::-1]])
        q = q * (1.0 + gamma[s - 1] * reordered)
        w = int(np.argmin(ifft(fft_kernel * fft(q)).real))
        z[s] = perm[w]
    return tuple(z / n), n


def rect_prob(
    model: CorrelationModel,
    lower,
    upper,
    budget: int = 1 << 16,
    seed: int | np.random.SeedSequence = 0,
    replicates: int = 12,
) -> ProbabilityEstimate:
    """Estimate Pr(lower_i <= X_i <= upper_i for all i) by randomized QMC.

    The budget is a total sample target split over `replicates` independently
    shifted copies of a rank-1 lattice (point count rounded down to a prime
    so the fast CBC construction applies; a tent transform periodizes the
    integrand). The standard error is the replicate spread divided by
    sqrt(replicates). Results are reproducible from (seed, budget, replicates)
    alone and independent of evaluation order.
    """
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    n = model.size
    if lower.shape != (n,) or upper.shape != (n,):
        raise DimensionMismatch("bounds must match the model size")
    if np.any(np.isnan(lower)) or np.any(np.isnan(upper)) or np.any(lower > upper):
        raise InvalidBounds("need lower_i <= upper_i for all i")
    if budget < MIN_BUDGET:
        raise BudgetTooSmall(f"budget {budget} < {MIN_BUDGET}")
    if replicates < 2:
        raise InvalidParameters("at least 2 randomization replicates are required")

    ell, a, b = _conditioning_system(model.sigma, lower, upper)
    m = _qmc_dimension(ell)
    seed_seq, seed_int = _as_seed_sequence(seed)

    if m == 0:
        # Product-form or fully degenerate system: the integrand is constant
        # and the value is exact up to representation rounding.
        value = float(_genz_product(ell, a, b, np.zeros((0, 1)))[0])
        return ProbabilityEstimate(min(max(value, 0.0), 1.0), QMC_STDERR_FLOOR,
                                   0, METHOD_QMC, seed_int)

    q, per_replicate = _cbc_lattice(m, max(budget // replicates, 3))
    base = np.outer(np.asarray(q), np.arange(1, per_replicate + 1))
    values = np.empty(replicates)
    for r, child in enumerate(seed_seq.spawn(replicates)):
        shift = np.random.default_rng(child).random(m)
        z = base + shift[:, None]
        z -= np.floor(z)
        w = np.abs(2.0 * z - 1.0)  # tent periodization
        values[r] = float(np.mean(_genz_product(ell, a, b, w)))
    value = float(np.mean(values))
    stderr = max(float(np.std(values, ddof=1) / math.sqrt(replicates)), QMC_STDERR_FLOOR)
    return ProbabilityEstimate(
        min(max(value, 0.0), 1.0), stderr, per_replicate * replicates, METHOD_QMC, seed_int
    )


def symmetric_rect_prob(
    model: CorrelationModel,
    c: ThresholdVector,
    budget: int = 1 << 16,
    seed: int | np.random.SeedSequence = 0,
    replicates: int = 12,
) -> ProbabilityEstimate:
    """Pr(|X_i| <= c_i for all i); equals rect_prob on [-c, c]."""
    bounds = c.as_array
    return rect_prob(model, -bounds, bounds, budget, seed, replicates)


def _interval_from_constraints(coefs, res_lo, res_hi):
    """Solve res_lo_i <= coefs_i * t <= res_hi_i for t; returns (lo, hi)."""
    lo, hi = -np.inf, np.inf
    for c, a, b in zip(coefs, res_lo, res_hi):
        if abs(c) <= ZERO_COEF:
            if a > 0 or b < 0:
                return 1.0, 0.0
        elif c > 0:
            lo = max(lo, a / c)
            hi = min(hi, b / c)
        else:
            lo = max(lo, b / c)
            hi = min(hi, a / c)
    return lo, hi


def _phi_density(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def _slice_prob(lo: float, hi: float) -> float:
    if hi <= lo:
        return 0.0
    return float(ndtr(hi) - ndtr(lo))


def _pair_breakpoints(u, res_lo, res_hi):
    """x-coordinates of pairwise constraint-line crossings (2-D regions)."""
    pts = []
    n = u.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            mat = np.array([u[i], u[j]])
            det = mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0]
            if abs(det) < 1e-12:
                continue
            for ri in (res_lo[i], res_hi[i]):
                for rj in (res_lo[j], res_hi[j]):
                    if math.isinf(ri) or math.isinf(rj):
                        continue
                    x = (ri * mat[1, 1] - rj * mat[0, 1]) / det
                    if abs(x) < QUAD_CLIP:
                        pts.append(x)
    return sorted(set(round(p, 12) for p in pts))


def oracle_region_prob(rows, lower, upper, tol: float = ORACLE_TOL) -> float:
    """Standard Gaussian mass of {y in R^d : lower <= rows @ y <= upper}, d <= 3.

    Deterministic adaptive tensor quadrature: the innermost axis uses exact
    CDF differences of the slice interval, outer axes use adaptive quadrature
    clipped to |x| <= 9 (truncation far below `tol`).
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    d = rows.shape[1]
    if d > 3:
        raise DimensionTooLarge("quadrature oracle supports d <= 3")
    if np.any(lower > upper):
        raise InvalidBounds("need lower_i <= upper_i")

    # Constraints with an all-zero row are pure feasibility conditions.
    zero = np.all(np.abs(rows) <= ZERO_COEF, axis=1)
    if np.any((lower[zero] > 0) | (upper[zero] < 0)):
        return 0.0
    rows, lower, upper = rows[~zero], lower[~zero], upper[~zero]
    if rows.shape[0] == 0:
        return 1.0

    if d == 1:
        lo, hi = _interval_from_constraints(rows[:, 0], lower, upper)
        lo, hi = max(lo, -QUAD_CLIP), min(hi, QUAD_CLIP)
        if hi <= lo:
            return 0.0
        val, _ = quad(_phi_density, lo, hi, epsabs=tol * 1e-3, limit=200)
        return float(min(max(val, 0.0), 1.0))

    if d == 2:
        pure = np.abs(rows[:, 1]) <= ZERO_COEF
        xlo, xhi = _interval_from_constraints(rows[pure, 0], lower[pure], upper[pure])
        xlo, xhi = max(xlo, -QUAD_CLIP), min(xhi, QUAD_CLIP)
        if xhi <= xlo:
            return 0.0
        u, alo, ahi = rows[~pure], lower[~pure], upper[~pure]

        def integrand(x):
            lo, hi = _interval_from_constraints(u[:, 1], alo - u[:, 0] * x, ahi - u[:, 0] * x)
            return _phi_density(x) * _slice_prob(lo, hi)

        pts = [p for p in _pair_breakpoints(u, alo, ahi) if xlo < p < xhi]
        val, _ = quad(integrand, xlo, xhi, points=pts or None, epsabs=tol * 0.3, limit=500)
        return float(min(max(val, 0.0), 1.0))

    # d == 3: adaptive quadrature over x1, exact piecewise-analytic inner layer.
    pure1 = (np.abs(rows[:, 1]) <= ZERO_COEF) & (np.abs(rows[:, 2]) <= ZERO_COEF)
    x1lo, x1hi = _interval_from_constraints(rows[pure1, 0], lower[pure1], upper[pure1])
    x1lo, x1hi = max(x1lo, -QUAD_CLIP), min(x1hi, QUAD_CLIP)
    if x1hi <= x1lo:
        return 0.0
    mid = (~pure1) & (np.abs(rows[:, 2]) <= ZERO_COEF)
    um, mlo, mhi = rows[mid], lower[mid], upper[mid]
    inner = ~pure1 & ~mid
    ui, ilo, ihi = rows[inner], lower[inner], upper[inner]

    def middle(x1):
        x2lo, x2hi = _interval_from_constraints(um[:, 1], mlo - um[:, 0] * x1, mhi - um[:, 0] * x1)
        x2lo, x2hi = max(x2lo, -QUAD_CLIP), min(x2hi, QUAD_CLIP)
        if x2hi <= x2lo:
            return 0.0
        return _slab_layer_mass(ui, ilo, ihi, x1, x2lo, x2hi)

    outer, _ = quad(lambda x1: _phi_density(x1) * middle(x1), x1lo, x1hi,
                    epsabs=tol * 0.3, limit=400)
    return float(min(max(outer, 0.0), 1.0))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
_PANEL_MAX_LEN = 0.5


def _slab_layer_mass(ui, ilo, ihi, x1, x2lo, x2hi) -> float:
    """integral over [x2lo, x2hi] of phi(x2) * Pr_y(slice(x1, x2)) dx2.

    The slice bounds are envelopes of affine functions of x2, so the
    integrand is analytic between pairwise crossing points; Gauss-Legendre
    panels between crossings give near machine precision.
    """
    if ui.shape[0] == 0:
        return float(ndtr(x2hi) - ndtr(x2lo))
    u1, u2, u3 = ui[:, 0], ui[:, 1], ui[:, 2]
    pos = u3 > 0
    with np.errstate(invalid="ignore"):
        p_hi = np.concatenate([(ihi[pos] - u1[pos] * x1) / u3[pos],
                               (ilo[~pos] - u1[~pos] * x1) / u3[~pos]])
        p_lo = np.concatenate([(ilo[pos] - u1[pos] * x1) / u3[pos],
                               (ihi[~pos] - u1[~pos] * x1) / u3[~pos]])
    q = np.concatenate([-u2[pos] / u3[pos], -u2[~pos] / u3[~pos]])

    # Panel boundaries: pairwise crossings of all affine bound functions.
    cuts = {x2lo, x2hi}
    p_all = np.concatenate([p_hi, p_lo])
    q_all = np.concatenate([q, q])
    finite = np.isfinite(p_all)
    for i in np.flatnonzero(finite):
        for j in np.flatnonzero(finite):
            if j <= i or abs(q_all[i] - q_all[j]) <= ZERO_COEF:
                continue
            x = (p_all[j] - p_all[i]) / (q_all[i] - q_all[j])
            if x2lo < x < x2hi:
                cuts.add(float(x))
    edges = np.array(sorted(cuts))
    # Subdivide long panels so a fixed-order rule stays accurate.
    refined = [edges[0]]
    for right in edges[1:]:
        left = refined[-1]
        pieces = max(int(math.ceil((right - left) / _PANEL_MAX_LEN)), 1)
        refined.extend(left + (right - left) * np.arange(1, pieces + 1) / pieces)
    edges = np.asarray(refined)

    lefts, rights = edges[:-1], edges[1:]
    half = 0.5 * (rights - lefts)
    centers = 0.5 * (rights + lefts)
    nodes = centers[:, None] + half[:, None] * _GL_NODES[None, :]
    weights = half[:, None] * _GL_WEIGHTS[None, :]
    flat = nodes.ravel()
    with np.errstate(invalid="ignore"):
        hi_vals = np.min(p_hi[:, None] + q[:, None] * flat[None, :], axis=0)
        lo_vals = np.max(p_lo[:, None] + q[:, None] * flat[None, :], axis=0)
    probs = np.clip(ndtr(hi_vals) - ndtr(lo_vals), 0.0, None)
    dens = np.exp(-0.5 * flat * flat) / math.sqrt(2.0 * math.pi)
    return float(np.sum(weights.ravel() * probs * dens))


def oracle_rect_prob(model: CorrelationModel, lower, upper) -> ProbabilityEstimate:
    """Deterministic rectangle probability for models of factor dimension <= 3."""
    if model.dim > 3:
        raise DimensionTooLarge(f"oracle supports d <= 3, model has d={model.dim}")
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    if lower.shape != (model.size,) or upper.shape != (model.size,):
        raise DimensionMismatch("bounds must match the model size")
    if np.any(lower > upper):
        raise InvalidBounds("need lower_i <= upper_i")
    value = oracle_region_prob(model.factor_rows, lower, upper)
    return ProbabilityEstimate(value, ORACLE_TOL, 0, METHOD_ORACLE, None)
