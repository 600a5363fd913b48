"""Polyhedral outer approximation of univariate C^1 functions.

Given y = g(x) on [a, b] with all curvature break points known, the domain
is partitioned so that g is convex or concave on each piece.  On each piece
the graph is enclosed by the triangle formed by the two endpoint tangents
and the secant, and the relaxation is the convex hull of all triangles.
That hull is spanned by the two domain endpoints plus one tangent-crossing
vertex per piece, so the constraint y = g(x) relaxes to membership in the
convex combination (lambda-form) of this small vertex set.  Refining the
partition tightens the hull monotonically toward conv(graph g).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

# Tangents are treated as parallel when their slopes agree to this
# relative tolerance; intersecting them would be ill-conditioned.
SLOPE_TOL = 1e-10


class DegenerateIntervalError(ValueError):
    """Raised when endpoint tangents of an interval are parallel."""


@dataclass(frozen=True)
class UnivariateSpec:
    """A scalar function with derivative, bounded domain and break points.

    `break_points` must list every x where curvature changes sign, sorted
    and strictly inside (lo, hi).  g and g' must be finite on the domain.
    """

    fn: Callable[[float], float]
    deriv: Callable[[float], float]
    lo: float
    hi: float
    break_points: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValueError("domain needs lo <= hi")
        pts = tuple(self.break_points)
        if list(pts) != sorted(pts):
            raise ValueError("break points must be sorted")
        for b in pts:
            if not (self.lo < b < self.hi):
                raise ValueError("break points must lie strictly inside the domain")
        import math
        for x in (self.lo, self.hi, *pts):
            if not (math.isfinite(self.fn(x)) and math.isfinite(self.deriv(x))):
                raise ValueError(f"function or derivative not finite at {x}")


@dataclass(frozen=True)
class PartitionRelaxation:
    """Partition points plus the extreme-vertex set of the hull.

    `vertices` is ordered by x and contains the domain endpoint vertices
    and, per non-degenerate interval, the tangent intersection point.
    Degenerate (linear) intervals contribute their secant endpoints
    instead.  `degenerate` flags each interval of `partition`.
    """

    partition: tuple[float, ...]
    vertices: tuple[tuple[float, float], ...]
    degenerate: tuple[bool, ...]

    @property
    def is_point(self) -> bool:
        return len(self.partition) == 1


def signed_square_spec(lo: float, hi: float) -> UnivariateSpec:
    """x|x| on [lo, hi]; curvature flips at 0."""
    breaks = (0.0,) if lo < 0.0 < hi else ()
    return UnivariateSpec(lambda x: x * abs(x), lambda x: 2.0 * abs(x),
                          lo, hi, breaks)


def cubic_potential_spec(b1n: float, b2n: float, lo: float, hi: float) -> UnivariateSpec:
    """b1n/2 x^2 + b2n/3 x^3 on [lo, hi]; convex for x >= 0, b1n,b2n >= 0."""
    return UnivariateSpec(
        lambda x: 0.5 * b1n * x * x + b2n / 3.0 * x**3,
        lambda x: b1n * x + b2n * x * x,
        lo, hi,
    )


def base_partition(spec: UnivariateSpec) -> tuple[float, ...]:
    """Minimal partition: domain endpoints plus every break point."""
    pts = [spec.lo]
    for b in spec.break_points:
        if b > pts[-1]:
            pts.append(b)
    if spec.hi > pts[-1]:
        pts.append(spec.hi)
    return tuple(pts)


def _slopes_parallel(d0: float, d1: float) -> bool:
    return abs(d0 - d1) <= SLOPE_TOL * max(1.0, abs(d0))


def tangent_intersection(spec: UnivariateSpec, x0: float, x1: float) -> tuple[float, float]:
    """Crossing point of the tangents to g at x0 and x1.

    Raises DegenerateIntervalError for parallel tangents and ValueError
    when the crossing escapes [x0, x1], which indicates a curvature break
    missing from the spec.
    """
    g0, g1 = spec.fn(x0), spec.fn(x1)
    d0, d1 = spec.deriv(x0), spec.deriv(x1)
    if _slopes_parallel(d0, d1):
        raise DegenerateIntervalError(
            f"parallel tangents on [{x0}, {x1}] (slope {d0})")
    x = (g1 - g0 + d0 * x0 - d1 * x1) / (d0 - d1)
    pad = 1e-9 * max(1.0, abs(x0), abs(x1))
    if not (x0 - pad <= x <= x1 + pad):
        raise ValueError(
            f"tangent crossing {x} outside [{x0}, {x1}]; "
            "the interval is not convex or concave (missing break point?)")
    x = min(max(x, x0), x1)
    y = g0 + d0 * (x - x0)
    return x, y


def build_relaxation(spec: UnivariateSpec,
                     partition: tuple[float, ...] | None = None) -> PartitionRelaxation:
    """Vertex set of the hull of the per-interval tangent/secant triangles.

    `partition` defaults to the base partition and must contain it.  On a
    collapsed domain (lo == hi) the relaxation is the single graph point.
    """
    base = base_partition(spec)
    if partition is None:
        partition = base
    else:
        partition = tuple(sorted(set(partition)))
        missing = [p for p in base if p not in partition]
        if missing:
            raise ValueError(f"partition must contain the base partition; missing {missing}")
        if partition[0] != spec.lo or partition[-1] != spec.hi:
            raise ValueError("partition must start and end at the domain bounds")

    if spec.lo == spec.hi:
        pt = (spec.lo, spec.fn(spec.lo))
        return PartitionRelaxation((spec.lo,), (pt,), ())

    verts: list[tuple[float, float]] = [(partition[0], spec.fn(partition[0]))]
    degen: list[bool] = []
    for x0, x1 in zip(partition, partition[1:]):
        try:
            verts.append(tangent_intersection(spec, x0, x1))
            degen.append(False)
        except DegenerateIntervalError:
            # linear piece: the secant endpoints already bound it exactly
            for pt in ((x0, spec.fn(x0)), (x1, spec.fn(x1))):
                if pt != verts[-1]:
                    verts.append(pt)
            degen.append(True)
    end = (partition[-1], spec.fn(partition[-1]))
    if verts[-1] != end:
        verts.append(end)
    return PartitionRelaxation(tuple(partition), tuple(verts), tuple(degen))


def _max_gap_point(spec: UnivariateSpec, relax: PartitionRelaxation,
                   grid: int = 129) -> float | None:
    """Abscissa with the largest vertical triangle thickness.

    Scans a fixed grid per interval; returns None when the relaxation is
    already exact everywhere (all intervals degenerate or collapsed).
    """
    best_gap, best_x = 0.0, None
    for k, (x0, x1) in enumerate(zip(relax.partition, relax.partition[1:])):
        if relax.degenerate[k] or x1 - x0 <= 0:
            continue
        xv, yv = tangent_intersection(spec, x0, x1)
        g0, g1 = spec.fn(x0), spec.fn(x1)
        d0, d1 = spec.deriv(x0), spec.deriv(x1)
        for i in range(1, grid - 1):
            x = x0 + (x1 - x0) * i / (grid - 1)
            secant = g0 + (g1 - g0) * (x - x0) / (x1 - x0)
            side = g0 + d0 * (x - x0) if x <= xv else g1 + d1 * (x - x1)
            gap = abs(secant - side)
            if gap > best_gap:
                best_gap, best_x = gap, x
    return best_x


def refine(spec: UnivariateSpec, relax: PartitionRelaxation,
           scheme: str = "bisect-all", rounds: int = 1) -> PartitionRelaxation:
    """Grow the partition `rounds` times and rebuild the relaxation.

    Schemes: "bisect-all" halves every interval, "bisect-longest" only the
    widest one, "max-error-point" adds the single point under the largest
    vertical hull gap.  Each refinement shrinks the hull (never enlarges).
    """
    if rounds < 0:
        raise ValueError("rounds must be nonnegative")
    if scheme not in ("bisect-all", "bisect-longest", "max-error-point"):
        raise ValueError(f"unknown refinement scheme {scheme!r}")
    if relax.is_point:
        return relax
    for _ in range(rounds):
        pts = list(relax.partition)
        if scheme == "bisect-all":
            new = [0.5 * (a + b) for a, b in zip(pts, pts[1:])]
        elif scheme == "bisect-longest":
            widths = [b - a for a, b in zip(pts, pts[1:])]
            k = widths.index(max(widths))
            new = [0.5 * (pts[k] + pts[k + 1])]
        else:
            x = _max_gap_point(spec, relax)
            new = [x] if x is not None else []
        added = [x for x in new if x not in pts]
        if not added:
            break
        relax = build_relaxation(spec, tuple(sorted(pts + added)))
    return relax


def hull_vertices(points: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Extreme points of a 2-D point set, counter-clockwise (monotone chain)."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[tuple[float, float]] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[tuple[float, float]] = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def prune(relax: PartitionRelaxation) -> PartitionRelaxation:
    """Drop vertices interior to the hull (mixed-curvature case).

    The emitted vertex set is always valid but may be non-minimal when
    curvature changes sign; this pass keeps extreme points only.
    """
    if len(relax.vertices) <= 3:
        return relax
    keep = set(hull_vertices(list(relax.vertices)))
    kept = tuple(v for v in relax.vertices if v in keep)
    return PartitionRelaxation(relax.partition, kept, relax.degenerate)


__all__ = [
    "UnivariateSpec", "PartitionRelaxation", "DegenerateIntervalError",
    "signed_square_spec", "cubic_potential_spec", "base_partition",
    "tangent_intersection", "build_relaxation", "refine", "hull_vertices",
    "prune",
]
