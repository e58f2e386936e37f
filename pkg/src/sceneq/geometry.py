"""Oriented-box geometry and the spatial predicate evaluators.

Image coordinate convention throughout: x grows rightward, y grows downward,
so "above" means smaller cy. Box angles are radians of the w-axis measured
from the image x-axis, wrapped to [-pi, pi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import MissingGsdError, NonPositiveInputError

Point = tuple[float, float]

_AREA_EPS_FACTOR = 1e-9  # intersection below this fraction of the smaller box counts as none

RCC_NAMES = ("dc", "ec", "po", "tpp", "ntpp", "eq", "tppi", "ntppi")
_RCC_ALIASES = {"is_on": "ntpp", "externally_connected": "ec"}


@dataclass(frozen=True)
class OrientedBox:
    """Rotated rectangle: center (cx, cy), size (w, h), rotation theta."""

    cx: float
    cy: float
    w: float
    h: float
    theta: float = 0.0

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise NonPositiveInputError(f"box sides must be positive, got w={self.w}, h={self.h}")
        if not all(math.isfinite(v) for v in (self.cx, self.cy, self.w, self.h, self.theta)):
            raise NonPositiveInputError("box fields must be finite")
        theta = math.remainder(self.theta, math.tau)
        if theta >= math.pi:
            theta -= math.tau
        object.__setattr__(self, "theta", theta)

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def diagonal(self) -> float:
        return math.hypot(self.w, self.h)

    def corners(self) -> tuple[Point, Point, Point, Point]:
        """Corner points in counter-clockwise order (positive shoelace area)."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        hw, hh = self.w / 2.0, self.h / 2.0
        local = ((hw, hh), (-hw, hh), (-hw, -hh), (hw, -hh))
        return tuple((self.cx + x * c - y * s, self.cy + x * s + y * c) for x, y in local)

    def translated(self, dx: float, dy: float) -> "OrientedBox":
        return replace(self, cx=self.cx + dx, cy=self.cy + dy)


# ---------------------------------------------------------------------------
# Convex polygon machinery
# ---------------------------------------------------------------------------


def polygon_area(points: tuple[Point, ...] | list[Point]) -> float:
    """Absolute shoelace area of a simple polygon."""
    n = len(points)
    if n < 3:
        return 0.0
    acc = 0.0
    for i in range(n):
        x1, y1 = points[i]
        x2, y2 = points[(i + 1) % n]
        acc += x1 * y2 - x2 * y1
    return abs(acc) / 2.0


def _cross(ox: float, oy: float, ax: float, ay: float, bx: float, by: float) -> float:
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def clip_convex(subject: list[Point], clip: list[Point]) -> list[Point]:
    """Sutherland-Hodgman clip of a convex subject against a CCW convex clip polygon."""
    output = list(subject)
    n = len(clip)
    for i in range(n):
        if not output:
            break
        ax, ay = clip[i]
        bx, by = clip[(i + 1) % n]
        input_pts, output = output, []
        for j, cur in enumerate(input_pts):
            prev = input_pts[j - 1]
            cur_in = _cross(ax, ay, bx, by, cur[0], cur[1]) >= 0.0
            prev_in = _cross(ax, ay, bx, by, prev[0], prev[1]) >= 0.0
            if cur_in:
                if not prev_in:
                    output.append(_edge_intersect(prev, cur, (ax, ay), (bx, by)))
                output.append(cur)
            elif prev_in:
                output.append(_edge_intersect(prev, cur, (ax, ay), (bx, by)))
    return output


def _edge_intersect(p1: Point, p2: Point, a: Point, b: Point) -> Point:
    # Intersection of segment p1-p2 with the infinite line through a-b.
    dx, dy = b[0] - a[0], b[1] - a[1]
    ex, ey = p2[0] - p1[0], p2[1] - p1[1]
    denom = dx * ey - dy * ex
    if denom == 0.0:
        return p2
    t = (dx * (a[1] - p1[1]) - dy * (a[0] - p1[0])) / denom
    return (p1[0] + t * ex, p1[1] + t * ey)


def polygon_intersection_area(a: OrientedBox, b: OrientedBox) -> float:
    """Overlap area of two oriented boxes via convex clipping; 0 when disjoint."""
    return polygon_area(clip_convex(list(a.corners()), list(b.corners())))


def _point_segment_dist(p: Point, a: Point, b: Point) -> float:
    ax, ay = a
    bx, by = b
    px, py = p
    dx, dy = bx - ax, by - ay
    denom = dx * dx + dy * dy
    if denom == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / denom
    t = min(1.0, max(0.0, t))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def _on_segment(p: Point, a: Point, b: Point) -> bool:
    # Assumes p is collinear with segment a-b.
    return (
        min(a[0], b[0]) - 1e-12 <= p[0] <= max(a[0], b[0]) + 1e-12
        and min(a[1], b[1]) - 1e-12 <= p[1] <= max(a[1], b[1]) + 1e-12
    )


def _segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool:
    d1 = _cross(q1[0], q1[1], q2[0], q2[1], p1[0], p1[1])
    d2 = _cross(q1[0], q1[1], q2[0], q2[1], p2[0], p2[1])
    d3 = _cross(p1[0], p1[1], p2[0], p2[1], q1[0], q1[1])
    d4 = _cross(p1[0], p1[1], p2[0], p2[1], q2[0], q2[1])
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return True
    if d1 == 0 and _on_segment(p1, q1, q2):
        return True
    if d2 == 0 and _on_segment(p2, q1, q2):
        return True
    if d3 == 0 and _on_segment(q1, p1, p2):
        return True
    return d4 == 0 and _on_segment(q2, p1, p2)


def _segment_segment_dist(p1: Point, p2: Point, q1: Point, q2: Point) -> float:
    if _segments_intersect(p1, p2, q1, q2):
        return 0.0
    return min(
        _point_segment_dist(p1, q1, q2),
        _point_segment_dist(p2, q1, q2),
        _point_segment_dist(q1, p1, p2),
        _point_segment_dist(q2, p1, p2),
    )


def min_boundary_gap(a: OrientedBox, b: OrientedBox) -> float:
    """Minimum distance between the two box boundaries (0 when they touch or cross)."""
    ca, cb = a.corners(), b.corners()
    best = math.inf
    for i in range(4):
        p1, p2 = ca[i], ca[(i + 1) % 4]
        for j in range(4):
            d = _segment_segment_dist(p1, p2, cb[j], cb[(j + 1) % 4])
            if d < best:
                best = d
                if best == 0.0:
                    return 0.0
    return best


# ---------------------------------------------------------------------------
# GSD metadata
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GsdMetadata:
    """Acquisition metadata: either a direct GSD pair or camera parameters."""

    flight_altitude_m: float | None = None
    sensor_width_mm: float | None = None
    sensor_height_mm: float | None = None
    focal_length_mm: float | None = None
    image_width_px: float | None = None
    image_height_px: float | None = None
    gsd_w_m_per_px: float | None = None
    gsd_h_m_per_px: float | None = None

    def __post_init__(self):
        direct = (self.gsd_w_m_per_px, self.gsd_h_m_per_px)
        camera = (
            self.flight_altitude_m,
            self.sensor_width_mm,
            self.sensor_height_mm,
            self.focal_length_mm,
            self.image_width_px,
            self.image_height_px,
        )
        if all(v is not None for v in direct):
            fields = direct
        elif all(v is not None for v in camera):
            fields = camera
        else:
            raise NonPositiveInputError(
                "GSD metadata needs either gsd_w/gsd_h or the full camera parameter set"
            )
        for v in fields:
            if not (math.isfinite(v) and v > 0):
                raise NonPositiveInputError(f"GSD metadata fields must be positive, got {v!r}")


def compute_gsd(meta: GsdMetadata) -> tuple[float, float]:
    """Ground sample distance (m/px) along width and height."""
    if meta.gsd_w_m_per_px is not None and meta.gsd_h_m_per_px is not None:
        return meta.gsd_w_m_per_px, meta.gsd_h_m_per_px
    gsd_w = (meta.flight_altitude_m * meta.sensor_width_mm) / (
        meta.focal_length_mm * meta.image_width_px
    )
    gsd_h = (meta.flight_altitude_m * meta.sensor_height_mm) / (
        meta.focal_length_mm * meta.image_height_px
    )
    return gsd_w, gsd_h


def area_m2(box: OrientedBox, meta: GsdMetadata) -> float:
    """Physical footprint of a box in square meters."""
    gsd_w, gsd_h = compute_gsd(meta)
    return box.w * gsd_w * box.h * gsd_h


# ---------------------------------------------------------------------------
# Predicate context and evaluators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PredicateContext:
    """Tolerances for topological predicates plus optional acquisition metadata."""

    eps_boundary_px: float = 2.0
    eq_iou: float = 0.95
    containment_ratio: float = 0.95
    closeness_scale_mode: str = "mean-diagonal"
    gsd: GsdMetadata | None = None

    def __post_init__(self):
        if self.eps_boundary_px <= 0:
            raise NonPositiveInputError("eps_boundary_px must be positive")
        if not (0 < self.eq_iou <= 1) or not (0 < self.containment_ratio <= 1):
            raise NonPositiveInputError("eq_iou and containment_ratio must lie in (0, 1]")
        if self.closeness_scale_mode != "mean-diagonal":
            raise ValueError(f"unknown closeness scale mode {self.closeness_scale_mode!r}")

    def with_gsd(self, meta: GsdMetadata | None) -> "PredicateContext":
        return replace(self, gsd=meta) if meta is not None else self


def eval_directional(rel: str, a: OrientedBox, b: OrientedBox) -> float:
    """Crisp center comparison; ties yield 0 for both directions."""
    if rel == "left_of":
        return 1.0 if a.cx < b.cx else 0.0
    if rel == "right_of":
        return 1.0 if a.cx > b.cx else 0.0
    if rel == "is_above":
        return 1.0 if a.cy < b.cy else 0.0
    if rel == "is_below":
        return 1.0 if a.cy > b.cy else 0.0
    raise ValueError(f"unknown directional relation {rel!r}")


def eval_is_close(a: OrientedBox, b: OrientedBox, ctx: PredicateContext | None = None) -> float:
    """Normalized inverse distance: 1/(1 + d/s) with s the mean box diagonal."""
    d = math.hypot(a.cx - b.cx, a.cy - b.cy)
    s = (a.diagonal + b.diagonal) / 2.0
    return 1.0 / (1.0 + d / s)


def eval_facing(rel: str, a: OrientedBox, b: OrientedBox) -> float:
    """Clamped cosine similarity of the two orientation vectors."""
    c = math.cos(a.theta - b.theta)
    if rel == "facing_same":
        return max(0.0, c)
    if rel == "facing_opposite":
        return max(0.0, -c)
    raise ValueError(f"unknown facing relation {rel!r}")


def rcc_classify(a: OrientedBox, b: OrientedBox, ctx: PredicateContext) -> str:
    """The single topological relation holding between the ordered pair (a, b)."""
    inter = polygon_intersection_area(a, b)
    if inter <= _AREA_EPS_FACTOR * min(a.area, b.area):
        gap = min_boundary_gap(a, b)
        return "ec" if gap <= ctx.eps_boundary_px else "dc"
    iou = inter / (a.area + b.area - inter)
    if iou >= ctx.eq_iou:
        return "eq"
    if inter / a.area >= ctx.containment_ratio:
        gap = min_boundary_gap(a, b)
        return "ntpp" if gap > ctx.eps_boundary_px else "tpp"
    if inter / b.area >= ctx.containment_ratio:
        gap = min_boundary_gap(a, b)
        return "ntppi" if gap > ctx.eps_boundary_px else "tppi"
    return "po"


def eval_rcc(rel: str, a: OrientedBox, b: OrientedBox, ctx: PredicateContext) -> float:
    """1.0 iff the queried topological relation is the one that holds."""
    rel = _RCC_ALIASES.get(rel, rel)
    if rel not in RCC_NAMES:
        raise ValueError(f"unknown topological relation {rel!r}")
    return 1.0 if rcc_classify(a, b, ctx) == rel else 0.0


def eval_is_different(a_index: int, b_index: int) -> float:
    return 1.0 if a_index != b_index else 0.0


def eval_metric_predicate(
    pred: str,
    boxes: tuple[OrientedBox, ...],
    threshold: float,
    ctx: PredicateContext,
) -> float:
    """GSD-based threshold predicates: physical closeness and physical footprint."""
    if ctx.gsd is None:
        raise MissingGsdError(f"{pred} requires GSD metadata on the context or scene")
    gsd_w, gsd_h = compute_gsd(ctx.gsd)
    if pred == "is_close_meters":
        a, b = boxes
        dist_m = math.hypot(a.cx - b.cx, a.cy - b.cy) * ((gsd_w + gsd_h) / 2.0)
        return 1.0 if dist_m <= threshold else 0.0
    if pred == "is_square_meters":
        (box,) = boxes
        return 1.0 if box.w * gsd_w * box.h * gsd_h >= threshold else 0.0
    raise ValueError(f"unknown metric predicate {pred!r}")
