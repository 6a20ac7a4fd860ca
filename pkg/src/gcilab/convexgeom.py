"""Origin-symmetric convex bodies and their operations.

Three representations share one toolbox:

* ``SymmetricBand``: {y : |<y, u_i>| <= c_i} over a covariance model, in any
  dimension. Intersections and outer Minkowski bounds act on thresholds
  (min / sum), mirroring the support-function identities on shared normals.
* ``Polygon2D``: exact centrally symmetric convex polygons with edge-merge
  Minkowski sums, convex hulls of unions, and halfplane clipping.
* ``HPolytope``: general bounded halfspace intersections; Minkowski-sum
  membership is decided by phase-1 simplex feasibility.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as _iterproduct

import numpy as np
from scipy.optimize import linprog

from .errors import (
    DegenerateInput,
    DimensionMismatch,
    MalformedInput,
    ModelMismatch,
    NotSymmetric,
    SolverFailure,
    ZeroDirection,
)
from .gaussmodel import CorrelationModel, ThresholdVector, _read_csv_rows

GEOM_TOL = 1e-12        # vertex dedup / collinearity / membership tolerance
SYMMETRY_MATCH_TOL = 1e-9
LP_TOL = 1e-9           # simplex feasibility tolerance
SIMPLEX_ITER_CAP = 10_000


# ---------------------------------------------------------------------------
# 2-D polygon machinery
# ---------------------------------------------------------------------------

def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _dedup_points(pts: np.ndarray, tol: float = GEOM_TOL) -> np.ndarray:
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]
    keep = [pts[0]]
    for p in pts[1:]:
        if np.max(np.abs(p - keep[-1])) > tol:
            keep.append(p)
    return np.asarray(keep)


def _hull_ccw(points: np.ndarray) -> np.ndarray:
    """Strictly convex CCW hull by monotone chain; collinear points dropped."""
    pts = _dedup_points(np.asarray(points, dtype=float))
    if pts.shape[0] < 3:
        raise DegenerateInput("hull needs at least 3 distinct points")
    lower: list[np.ndarray] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= GEOM_TOL:
            lower.pop()
        lower.append(p)
    upper: list[np.ndarray] = []
    for p in pts[::-1]:
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= GEOM_TOL:
            upper.pop()
        upper.append(p)
    hull = np.asarray(lower[:-1] + upper[:-1])
    if hull.shape[0] < 3:
        raise DegenerateInput("points are collinear within tolerance")
    return hull


@dataclass(frozen=True, eq=False)
class Polygon2D:
    """Centrally symmetric, strictly convex polygon; CCW vertices, canonical start."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        v.flags.writeable = False
        object.__setattr__(self, "vertices", v)

    @classmethod
    def from_points(cls, points, require_symmetry: bool = True) -> "Polygon2D":
        hull = _hull_ccw(points)
        if require_symmetry:
            # Every vertex must have its antipode in the hull.
            gaps = np.linalg.norm(hull[:, None, :] + hull[None, :, :], axis=2)
            if np.max(gaps.min(axis=1)) > SYMMETRY_MATCH_TOL:
                raise NotSymmetric("vertex set is not closed under negation")
        if hull.shape[0] < 4:
            raise DegenerateInput("symmetric polygon needs at least 4 vertices")
        start = np.lexsort((hull[:, 1], hull[:, 0]))[0]
        return cls(np.roll(hull, -start, axis=0))

    @classmethod
    def box(cls, hx: float, hy: float) -> "Polygon2D":
        return cls.from_points([[hx, hy], [-hx, hy], [-hx, -hy], [hx, -hy]])

    @classmethod
    def diamond(cls, r: float) -> "Polygon2D":
        return cls.from_points([[r, 0.0], [0.0, r], [-r, 0.0], [0.0, -r]])

    @classmethod
    def regular(cls, sides: int, radius: float, phase: float = 0.0) -> "Polygon2D":
        if sides % 2:
            raise NotSymmetric("a centrally symmetric regular polygon needs even sides")
        ang = phase + 2.0 * np.pi * np.arange(sides) / sides
        return cls.from_points(radius * np.column_stack([np.cos(ang), np.sin(ang)]))

    def __len__(self) -> int:
        return self.vertices.shape[0]

    def transformed(self, matrix) -> "Polygon2D":
        """Image under an invertible linear map."""
        m = np.asarray(matrix, dtype=float)
        return Polygon2D.from_points(self.vertices @ m.T)

    def area(self) -> float:
        v = self.vertices
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))

    def edge_normals(self) -> tuple[np.ndarray, np.ndarray]:
        """Outward unit edge normals A and offsets b with polygon = {x : A x <= b}."""
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        normals = np.column_stack([e[:, 1], -e[:, 0]])
        normals /= np.linalg.norm(normals, axis=1)[:, None]
        offsets = np.einsum("ij,ij->i", normals, v)
        return normals, offsets

    def contains_point(self, point, tol: float = GEOM_TOL) -> bool:
        p = np.asarray(point, dtype=float)
        v = self.vertices
        nxt = np.roll(v, -1, axis=0)
        cr = (nxt[:, 0] - v[:, 0]) * (p[1] - v[:, 1]) - (nxt[:, 1] - v[:, 1]) * (p[0] - v[:, 0])
        return bool(np.all(cr >= -tol))

    def contains_many(self, points: np.ndarray, tol: float = GEOM_TOL) -> np.ndarray:
        normals, offsets = self.edge_normals()
        return np.all(points @ normals.T <= offsets + tol, axis=1)

    def support(self, direction) -> float:
        u = np.asarray(direction, dtype=float)
        return float(np.max(self.vertices @ u))

    def slice_vertical(self, s: float) -> tuple[float, float] | None:
        """y-interval of the slice {y : (s, y) in polygon}; None when empty."""
        v = self.vertices
        nxt = np.roll(v, -1, axis=0)
        ys: list[float] = []
        for (x1, y1), (x2, y2) in zip(v, nxt):
            if abs(x1 - s) <= GEOM_TOL:
                ys.append(y1)
            if (x1 - s) * (x2 - s) < 0:
                ys.append(y1 + (s - x1) * (y2 - y1) / (x2 - x1))
        if not ys:
            return None
        return float(min(ys)), float(max(ys))


def polygon_minkowski_sum(p: Polygon2D, q: Polygon2D) -> Polygon2D:
    """Exact Minkowski sum by merging edge vectors in angular order."""
    a = _rotate_to_bottom(p.vertices)
    b = _rotate_to_bottom(q.vertices)
    la, lb = len(a), len(b)
    out = []
    i = j = 0
    while i < la or j < lb:
        out.append(a[i % la] + b[j % lb])
        ea = a[(i + 1) % la] - a[i % la]
        eb = b[(j + 1) % lb] - b[j % lb]
        if i >= la:
            j += 1
        elif j >= lb:
            i += 1
        else:
            cr = ea[0] * eb[1] - ea[1] * eb[0]
            if cr > GEOM_TOL:
                i += 1
            elif cr < -GEOM_TOL:
                j += 1
            else:
                i += 1
                j += 1
    return Polygon2D.from_points(out)


def _rotate_to_bottom(v: np.ndarray) -> np.ndarray:
    start = np.lexsort((v[:, 0], v[:, 1]))[0]
    return np.roll(v, -start, axis=0)


def convex_hull_union(p: Polygon2D, q: Polygon2D) -> Polygon2D:
    """conv(P union Q); every hull vertex is a vertex of P or of Q."""
    return Polygon2D.from_points(np.vstack([p.vertices, q.vertices]))


def clip_halfplane(vertices: np.ndarray, normal, offset: float) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex polygon by {x : <x, normal> <= offset}."""
    n = np.asarray(normal, dtype=float)
    out: list[np.ndarray] = []
    m = len(vertices)
    for k in range(m):
        cur, nxt = vertices[k], vertices[(k + 1) % m]
        dc, dn = float(cur @ n - offset), float(nxt @ n - offset)
        if dc <= GEOM_TOL:
            out.append(cur)
        if (dc > GEOM_TOL) != (dn > GEOM_TOL) and abs(dc - dn) > GEOM_TOL:
            t = dc / (dc - dn)
            out.append(cur + t * (nxt - cur))
    return np.asarray(out) if out else np.zeros((0, 2))


def intersect_polygons(p: Polygon2D, q: Polygon2D) -> Polygon2D:
    """P intersect Q by successive halfplane clipping against Q's edges."""
    normals, offsets = q.edge_normals()
    verts = p.vertices
    for n, c in zip(normals, offsets):
        verts = clip_halfplane(verts, n, c)
        if verts.shape[0] < 3:
            raise DegenerateInput("polygon intersection is degenerate")
    return Polygon2D.from_points(verts)


def random_symmetric_polygon(rng, points: int = 5, scale: float = 1.2) -> Polygon2D:
    """Convex hull of +-(random Gaussian points); retries on degenerate draws."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    for _ in range(64):
        pts = rng.standard_normal((points, 2)) * scale
        try:
            return Polygon2D.from_points(np.vstack([pts, -pts]))
        except DegenerateInput:
            continue
    raise DegenerateInput("could not draw a nondegenerate symmetric polygon")


# ---------------------------------------------------------------------------
# Band bodies
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SymmetricBand:
    """{y in R^d : |<y, u_i>| <= c_i for all i} over a covariance model."""

    model: CorrelationModel
    c: ThresholdVector

    def __post_init__(self):
        if len(self.c) != self.model.size:
            raise DimensionMismatch("one threshold per factor row is required")

    @property
    def dim(self) -> int:
        return self.model.dim

    def finite_halfspaces(self) -> tuple[np.ndarray, np.ndarray]:
        """Halfspace form A y <= b of the finitely thresholded constraints."""
        c = self.c.as_array
        finite = np.isfinite(c)
        u = self.model.factor_rows[finite]
        b = c[finite]
        return np.vstack([u, -u]), np.concatenate([b, b])

    def contains_point(self, point, tol: float = GEOM_TOL) -> bool:
        p = np.asarray(point, dtype=float)
        if p.shape != (self.dim,):
            raise DimensionMismatch("point dimension must match the band")
        proj = np.abs(self.model.factor_rows @ p)
        return bool(np.all(proj <= self.c.as_array + tol))

    def contains_many(self, points: np.ndarray, tol: float = GEOM_TOL) -> np.ndarray:
        proj = np.abs(points @ self.model.factor_rows.T)
        return np.all(proj <= self.c.as_array + tol, axis=1)

    def support(self, direction) -> float:
        u = np.asarray(direction, dtype=float)
        a, b = self.finite_halfspaces()
        if a.shape[0] == 0:
            return np.inf
        return _support_lp(a, b, u)


def band_intersect(k: SymmetricBand, t: SymmetricBand) -> SymmetricBand:
    """Intersection: componentwise minimum of thresholds on the shared model."""
    _require_same_model(k, t)
    return SymmetricBand(k.model, k.c.minimum(t.c))


def band_sum_outer(k: SymmetricBand, t: SymmetricBand) -> SymmetricBand:
    """Outer bound of K + T: componentwise threshold sums (inf absorbs).

    Contains the Minkowski sum; exact whenever the band normals exhaust the
    sum's facet normals.
    """
    _require_same_model(k, t)
    return SymmetricBand(k.model, k.c.plus(t.c))


def _require_same_model(k: SymmetricBand, t: SymmetricBand) -> None:
    if k.model is t.model:
        return
    same = (
        k.model.sigma.shape == t.model.sigma.shape
        and np.allclose(k.model.sigma, t.model.sigma, atol=GEOM_TOL)
        and k.model.factor_rows.shape == t.model.factor_rows.shape
        and np.allclose(k.model.factor_rows, t.model.factor_rows, atol=GEOM_TOL)
    )
    if not same:
        raise ModelMismatch("band operands must share the same model")


# ---------------------------------------------------------------------------
# H-polytopes
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HPolytope:
    """Bounded {y : normals @ y <= offsets} with unit normals, closed under negation."""

    normals: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        a = np.array(self.normals, dtype=float)
        b = np.array(self.offsets, dtype=float)
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "normals", a)
        object.__setattr__(self, "offsets", b)

    @classmethod
    def from_halfspaces(cls, normals, offsets, check_bounded: bool = True) -> "HPolytope":
        a = np.atleast_2d(np.asarray(normals, dtype=float))
        b = np.atleast_1d(np.asarray(offsets, dtype=float))
        if a.shape[0] != b.shape[0]:
            raise DimensionMismatch("one offset per normal is required")
        norms = np.linalg.norm(a, axis=1)
        if np.any(norms <= GEOM_TOL):
            raise DegenerateInput("zero normal in halfspace list")
        a = a / norms[:, None]
        b = b / norms
        if np.any(b <= 0):
            raise DegenerateInput("offsets must be positive (origin interior)")
        body = cls(a, b)
        if not body._negation_closed():
            raise NotSymmetric("halfspace list is not closed under negation")
        if check_bounded and not body.is_bounded():
            raise DegenerateInput("halfspace intersection is unbounded")
        return body

    @classmethod
    def symmetric(cls, normals, offsets, check_bounded: bool = True) -> "HPolytope":
        """Stack each constraint with its negation: {|<y, u_i>| <= c_i}."""
        a = np.atleast_2d(np.asarray(normals, dtype=float))
        b = np.atleast_1d(np.asarray(offsets, dtype=float))
        return cls.from_halfspaces(np.vstack([a, -a]), np.concatenate([b, b]),
                                   check_bounded=check_bounded)

    @classmethod
    def axis_box(cls, half_widths) -> "HPolytope":
        hw = np.atleast_1d(np.asarray(half_widths, dtype=float))
        d = hw.shape[0]
        return cls.symmetric(np.eye(d), hw, check_bounded=False)

    @classmethod
    def weighted_l1_ball(cls, weights, radius: float) -> "HPolytope":
        """{y : sum_i w_i |y_i| <= radius} via all sign patterns of the weights."""
        w = np.atleast_1d(np.asarray(weights, dtype=float))
        d = w.shape[0]
        rows = [np.asarray(signs) * w for signs in _iterproduct((1.0, -1.0), repeat=d)]
        return cls.from_halfspaces(rows, np.full(len(rows), float(radius)))

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    def _negation_closed(self, tol: float = SYMMETRY_MATCH_TOL) -> bool:
        for u, c in zip(self.normals, self.offsets):
            match = (np.linalg.norm(self.normals + u, axis=1) <= tol) & \
                    (np.abs(self.offsets - c) <= tol)
            if not match.any():
                return False
        return True

    def is_bounded(self) -> bool:
        """Support finiteness along +-e_j for every axis j."""
        for j in range(self.dim):
            e = np.zeros(self.dim)
            e[j] = 1.0
            if not np.isfinite(self.support(e)) or not np.isfinite(self.support(-e)):
                return False
        return True

    def is_unconditional(self, tol: float = SYMMETRY_MATCH_TOL) -> bool:
        """Every coordinate sign flip of every normal is present with equal offset."""
        for u, c in zip(self.normals, self.offsets):
            for signs in _iterproduct((1.0, -1.0), repeat=self.dim):
                v = np.asarray(signs) * u
                match = (np.linalg.norm(self.normals - v, axis=1) <= tol) & \
                        (np.abs(self.offsets - c) <= tol)
                if not match.any():
                    return False
        return True

    def contains_point(self, point, tol: float = GEOM_TOL) -> bool:
        p = np.asarray(point, dtype=float)
        if p.shape != (self.dim,):
            raise DimensionMismatch("point dimension must match the polytope")
        return bool(np.all(self.normals @ p <= self.offsets + tol))

    def contains_many(self, points: np.ndarray, tol: float = GEOM_TOL) -> np.ndarray:
        return np.all(points @ self.normals.T <= self.offsets + tol, axis=1)

    def support(self, direction) -> float:
        return _support_lp(self.normals, self.offsets, np.asarray(direction, dtype=float))

    def intersect(self, other: "HPolytope") -> "HPolytope":
        if self.dim != other.dim:
            raise DimensionMismatch("polytopes live in different dimensions")
        return HPolytope(np.vstack([self.normals, other.normals]),
                         np.concatenate([self.offsets, other.offsets]))

    def to_polygon(self) -> Polygon2D:
        """Vertex form in 2-D: pairwise facet intersections kept if feasible."""
        if self.dim != 2:
            raise DimensionMismatch("vertex conversion is only available in 2-D")
        pts = []
        m = self.normals.shape[0]
        for i in range(m):
            for j in range(i + 1, m):
                mat = np.vstack([self.normals[i], self.normals[j]])
                if abs(np.linalg.det(mat)) < 1e-12:
                    continue
                v = np.linalg.solve(mat, np.array([self.offsets[i], self.offsets[j]]))
                if self.contains_point(v, tol=1e-9):
                    pts.append(v)
        return Polygon2D.from_points(np.asarray(pts))


def _support_lp(a: np.ndarray, b: np.ndarray, direction: np.ndarray) -> float:
    res = linprog(-direction, A_ub=a, b_ub=b,
                  bounds=[(None, None)] * a.shape[1], method="highs")
    if res.status == 3:
        return np.inf
    if res.status != 0:
        raise SolverFailure(f"support LP failed with status {res.status}")
    return float(-res.fun)


def random_unconditional_hpolytope(rng, dim: int = 2, extra: int = 2) -> HPolytope:
    """Axis box plus random unconditional constraints (all sign patterns)."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))
    normals = [np.eye(dim), -np.eye(dim)]
    hw = rng.uniform(0.6, 2.2, size=dim)
    offsets = [hw, hw]
    for _ in range(extra):
        u = rng.uniform(0.25, 1.0, size=dim)
        c = rng.uniform(0.8, 2.5)
        for signs in _iterproduct((1.0, -1.0), repeat=dim):
            normals.append((np.asarray(signs) * u)[None, :])
            offsets.append(np.array([c]))
    return HPolytope.from_halfspaces(np.vstack(normals), np.concatenate(offsets),
                                     check_bounded=False)


# ---------------------------------------------------------------------------
# Shared operations
# ---------------------------------------------------------------------------

def support_function(body, direction) -> float:
    """sup over the body of <x, direction>; +inf for unbounded bands."""
    u = np.asarray(direction, dtype=float)
    if np.linalg.norm(u) <= GEOM_TOL:
        raise ZeroDirection("support direction must be nonzero")
    return body.support(u)


def contains(body, point) -> bool:
    """Membership with tolerance 1e-12 on every constraint."""
    p = np.asarray(point, dtype=float)
    expected = 2 if isinstance(body, Polygon2D) else body.dim
    if p.shape != (expected,):
        raise DimensionMismatch(f"point must live in R^{expected}")
    return body.contains_point(p)


def minkowski_contains(k: HPolytope, t: HPolytope, point) -> bool:
    """point in K + T, decided by phase-1 simplex feasibility.

    Feasibility of {y : A_K y <= b_K, A_T (point - y) <= b_T} is equivalent to
    membership; Bland's rule guards against cycling and the iteration cap
    raises ``SolverFailure``.
    """
    if k.dim != t.dim:
        raise DimensionMismatch("summands live in different dimensions")
    p = np.asarray(point, dtype=float)
    if p.shape != (k.dim,):
        raise DimensionMismatch("point dimension must match the summands")
    g = np.vstack([k.normals, -t.normals])
    h = np.concatenate([k.offsets, t.offsets - t.normals @ p])
    return phase1_feasible(g, h)


def phase1_feasible(g: np.ndarray, h: np.ndarray,
                    tol: float = LP_TOL, max_iters: int = SIMPLEX_ITER_CAP) -> bool:
    """Is {x : g x <= h} nonempty? Phase-1 simplex with Bland's rule.

    Free variables are split into positive parts, slacks complete the rows,
    and artificials cover rows with negative right-hand sides; the system is
    feasible iff the artificial sum can be driven to <= tol.
    """
    g = np.atleast_2d(np.asarray(g, dtype=float))
    h = np.atleast_1d(np.asarray(h, dtype=float)).copy()
    m, p = g.shape
    a = np.hstack([g, -g, np.eye(m)])
    flip = h < 0
    if not flip.any():
        return True  # x = 0 with slack h is already feasible
    a[flip] *= -1.0
    h[flip] *= -1.0
    ncols = a.shape[1]
    art_rows = np.flatnonzero(flip)
    nart = art_rows.size
    tableau = np.zeros((m + 1, ncols + nart + 1))
    tableau[:m, :ncols] = a
    tableau[:m, -1] = h
    art_cols = ncols + np.arange(nart)
    tableau[art_rows, art_cols] = 1.0
    basis = np.empty(m, dtype=int)
    basis[~flip] = 2 * p + np.flatnonzero(~flip)
    basis[flip] = art_cols
    # Canonical phase-1 cost row: unit cost on artificials, reduced.
    tableau[m, art_cols] = 1.0
    tableau[m] -= tableau[art_rows].sum(axis=0)

    for _ in range(max_iters):
        reduced = tableau[m, :ncols]  # artificials never re-enter
        improving = np.flatnonzero(reduced < -tol)
        if improving.size == 0:
            break
        enter = int(improving[0])  # Bland: smallest improving index
        col = tableau[:m, enter]
        positive = col > tol
        if not positive.any():
            raise SolverFailure("phase-1 column with no positive pivot")
        ratios = np.full(m, np.inf)
        ratios[positive] = tableau[:m, -1][positive] / col[positive]
        rmin = ratios.min()
        ties = np.flatnonzero(ratios <= rmin + 1e-12)
        leave = int(ties[np.argmin(basis[ties])])  # Bland tie-break
        pivot = tableau[leave, enter]
        tableau[leave] /= pivot
        rows = np.arange(m + 1) != leave
        tableau[rows] -= np.outer(tableau[rows, enter], tableau[leave])
        basis[leave] = enter
    else:
        raise SolverFailure(f"simplex iteration cap {max_iters} exceeded")
    return bool(-tableau[m, -1] <= tol)


# ---------------------------------------------------------------------------
# CSV literals
# ---------------------------------------------------------------------------

def load_polygon_csv(path) -> Polygon2D:
    """Polygon from CSV rows of x,y vertices."""
    rows = np.asarray(_read_csv_rows(path), dtype=float)
    if rows.shape[1] != 2:
        raise MalformedInput("polygon CSV needs exactly two columns per row")
    return Polygon2D.from_points(rows)


def load_hpolytope_csv(path) -> HPolytope:
    """H-polytope from CSV rows of d normal components followed by the offset."""
    rows = np.asarray(_read_csv_rows(path), dtype=float)
    if rows.shape[1] < 2:
        raise MalformedInput("halfspace CSV needs normal components plus an offset")
    return HPolytope.from_halfspaces(rows[:, :-1], rows[:, -1])
