"""Spatial domains (plane or flat torus), distances and center grids."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PLANE = "plane"
TORUS = "torus"


@dataclass(frozen=True)
class Domain:
    """The plane R^2 or the flat torus [0, side)^2.

    Torus coordinates are canonically reduced to the fundamental cell;
    distances on the torus are geodesic (nearest periodic image).
    """

    kind: str
    side: float = 0.0

    def __post_init__(self):
        if self.kind not in (PLANE, TORUS):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind == TORUS and not self.side > 0.0:
            raise ValueError("torus side length must be positive")

    @staticmethod
    def plane() -> "Domain":
        return Domain(PLANE)

    @staticmethod
    def torus(side: float) -> "Domain":
        return Domain(TORUS, float(side))

    @property
    def is_torus(self) -> bool:
        return self.kind == TORUS

    def wrap(self, points):
        """Reduce coordinates to the fundamental cell (identity on the plane)."""
        pts = np.asarray(points, dtype=float)
        if self.kind == PLANE:
            return pts
        return np.mod(pts, self.side)

    def displacement(self, a, b):
        """a - b, using the nearest periodic image per coordinate on the torus."""
        d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        if self.kind == PLANE:
            return d
        L = self.side
        return d - L * np.round(d / L)

    def distance(self, a, b):
        """Euclidean distance on the plane, geodesic distance on the torus."""
        d = self.displacement(a, b)
        return np.sqrt(np.sum(d * d, axis=-1))

    def to_json(self) -> dict:
        if self.kind == PLANE:
            return {"kind": PLANE}
        return {"kind": TORUS, "side": self.side}

    @staticmethod
    def from_json(obj: dict) -> "Domain":
        if obj["kind"] == PLANE:
            return Domain.plane()
        return Domain.torus(obj["side"])


def ball_center_grid(domain: Domain, bbox, spacing: float) -> np.ndarray:
    """Deterministic axis-aligned grid of ball centers covering ``bbox``.

    ``bbox`` is (xmin, xmax, ymin, ymax).  The grid step along each axis is
    at most ``spacing``.  On the torus the bbox must be the fundamental cell
    and the (periodically redundant) right/top edges are not duplicated.
    """
    if not spacing > 0.0:
        raise ValueError("spacing must be positive")
    xmin, xmax, ymin, ymax = (float(v) for v in bbox)
    if xmax < xmin or ymax < ymin:
        raise ValueError("empty bounding box")

    def axis(lo, hi):
        extent = hi - lo
        if domain.is_torus:
            n = max(1, int(np.ceil(extent / spacing)))
            return lo + extent * np.arange(n) / n
        n = max(1, int(np.ceil(extent / spacing))) + 1
        return np.linspace(lo, hi, n)

    xs = axis(xmin, xmax)
    ys = axis(ymin, ymax)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def bounding_box(points: np.ndarray, pad: float = 0.0):
    """Axis-aligned bounding box (xmin, xmax, ymin, ymax) of a point cloud."""
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return (-pad, pad, -pad, pad)
    return (
        float(pts[:, 0].min() - pad),
        float(pts[:, 0].max() + pad),
        float(pts[:, 1].min() - pad),
        float(pts[:, 1].max() + pad),
    )
