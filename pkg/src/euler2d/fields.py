"""Discrete vorticity fields and the localized norm machinery.

A :class:`ParticleField` is a Lagrangian vorticity cloud: positions, fixed
quadrature weights (cell areas) and vorticity values.  Norms are discrete
quadratures; the uniformly-localized norms scan a deterministic grid of ball
centers, so the reported suprema are certified lower bounds that converge as
the center spacing shrinks.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from .geometry import Domain, ball_center_grid, bounding_box
from .growth import GrowthFunction

DEFAULT_P_GRID = (1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0, 48.0, 64.0)


@dataclass(frozen=True)
class ParticleField:
    """Vorticity cloud: positions (N,2), positive weights (N,), values (N,)."""

    domain: Domain
    positions: np.ndarray
    weights: np.ndarray
    values: np.ndarray
    time_stamp: float = 0.0

    def __post_init__(self):
        pos = np.atleast_2d(np.array(self.positions, dtype=float, copy=True))
        if pos.size == 0:
            pos = pos.reshape(0, 2)
        w = np.array(self.weights, dtype=float, copy=True).ravel()
        v = np.array(self.values, dtype=float, copy=True).ravel()
        if pos.shape[0] != w.shape[0] or pos.shape[0] != v.shape[0]:
            raise ValueError("positions, weights and values must have equal length")
        if pos.shape[0] and pos.shape[1] != 2:
            raise ValueError("positions must be (N, 2)")
        if np.any(~np.isfinite(pos)) or np.any(~np.isfinite(w)) or np.any(~np.isfinite(v)):
            raise ValueError("field entries must be finite")
        if np.any(w <= 0.0):
            raise ValueError("weights must be positive")
        pos = self.domain.wrap(pos)
        for arr, name in ((pos, "positions"), (w, "weights"), (v, "values")):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def count(self) -> int:
        return self.positions.shape[0]

    def with_positions(self, positions, time_stamp=None) -> "ParticleField":
        t = self.time_stamp if time_stamp is None else time_stamp
        return ParticleField(self.domain, positions, self.weights, self.values, t)

    def with_values(self, values) -> "ParticleField":
        return replace(self, values=values)

    def with_weights(self, weights) -> "ParticleField":
        return replace(self, weights=weights)

    def scaled(self, factor: float) -> "ParticleField":
        return replace(self, values=factor * self.values)


def lp_norm(f: ParticleField, p) -> float:
    """Discrete L^p norm (sum w |omega|^p)^{1/p}; max |omega| for p = inf."""
    if f.count == 0:
        return 0.0
    if p == np.inf:
        return float(np.max(np.abs(f.values)))
    p = float(p)
    if p < 1.0:
        raise ValueError("p must be >= 1")
    return float(np.sum(f.weights * np.abs(f.values) ** p) ** (1.0 / p))


def _scan_centers(f: ParticleField, radius: float, spacing: float) -> np.ndarray:
    if f.domain.is_torus:
        L = f.domain.side
        return ball_center_grid(f.domain, (0.0, L, 0.0, L), spacing)
    bbox = bounding_box(f.positions, pad=radius)
    return ball_center_grid(f.domain, bbox, spacing)


def lp_ul_norm(f: ParticleField, p, radius: float = 1.0, center_spacing: float | None = None) -> float:
    """Uniformly-localized L^p norm: max local norm over a grid of ball centers.

    The scan grid covers the field support padded by the window radius; the
    result is a lower bound for the continuum supremum over all centers.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    spacing = radius / 2.0 if center_spacing is None else float(center_spacing)
    if spacing > radius / 2.0:
        raise ValueError("center_spacing must be at most radius/2")
    if f.count == 0:
        return 0.0
    if p != np.inf and float(p) < 1.0:
        raise ValueError("p must be >= 1")
    centers = _scan_centers(f, radius, spacing)
    best = 0.0
    absvals = np.abs(f.values)
    contrib = f.weights * absvals ** float(p) if p != np.inf else None
    chunk = max(1, int(2e7 // max(f.count, 1)))
    for start in range(0, centers.shape[0], chunk):
        cc = centers[start : start + chunk]
        if f.domain.is_torus:
            d = f.domain.distance(cc[:, None, :], f.positions[None, :, :])
            inside = d < radius
        else:
            inside = cdist(cc, f.positions, "sqeuclidean") < radius * radius
        if p == np.inf:
            local = np.where(inside, absvals[None, :], 0.0).max(axis=1, initial=0.0)
            best = max(best, float(local.max(initial=0.0)))
        else:
            local = inside @ contrib
            best = max(best, float(local.max(initial=0.0)))
    return best if p == np.inf else best ** (1.0 / float(p))


@dataclass(frozen=True)
class WindowRescaleReport:
    p: float
    radius_small: float
    radius_large: float
    norm_small: float
    norm_large: float
    ratio: float
    covering_bound: float
    applicable: bool

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "radius_small": self.radius_small,
            "radius_large": self.radius_large,
            "norm_small": self.norm_small,
            "norm_large": self.norm_large,
            "ratio": self.ratio,
            "covering_bound": self.covering_bound,
            "applicable": self.applicable,
        }


def rescale_window_check(
    f: ParticleField, p, r: float, R: float, center_spacing: float | None = None
) -> WindowRescaleReport:
    """Compare the R-window norm against (R/r)^{2/p} times the r-window norm.

    The reported ratio should not exceed the covering bound N^{1/p}, with N
    the number of r-balls needed to cover an R-ball (grid estimate (2R/r)^2).
    """
    if not (0 < r <= R):
        raise ValueError("need 0 < r <= R")
    p = float(p)
    spacing = r / 2.0 if center_spacing is None else float(center_spacing)
    norm_r = lp_ul_norm(f, p, r, spacing)
    norm_R = lp_ul_norm(f, p, R, spacing)
    covering = float(np.ceil(2.0 * R / r) ** 2) ** (1.0 / p)
    if norm_r == 0.0:
        return WindowRescaleReport(p, r, R, norm_r, norm_R, float("nan"), covering, False)
    ratio = norm_R / ((R / r) ** (2.0 / p) * norm_r)
    return WindowRescaleReport(p, r, R, norm_r, norm_R, float(ratio), covering, True)


def y_theta_ul_norm(
    f: ParticleField,
    theta: GrowthFunction,
    p_grid=DEFAULT_P_GRID,
    radius: float = 1.0,
    center_spacing: float | None = None,
) -> float:
    """Localized Yudovich norm: max over the p-grid of L^p_ul / Theta(p)."""
    p_arr = [float(p) for p in p_grid]
    if not p_arr:
        raise ValueError("p_grid must be nonempty")
    return max(lp_ul_norm(f, p, radius, center_spacing) / theta(p) for p in p_arr)


def clamp(f: ParticleField, n: float) -> ParticleField:
    """Truncate values to [-n, n]; positions and weights unchanged."""
    if not n > 0:
        raise ValueError("clamp level must be positive")
    return f.with_values(np.clip(f.values, -n, n))


def pairing(f: ParticleField, phi) -> float:
    """Discrete spatial pairing sum_i w_i omega_i phi(x_i).

    ``phi`` is called with the (N, 2) position array and must return (N,)
    values (scalar results broadcast).
    """
    if f.count == 0:
        return 0.0
    phi_vals = np.broadcast_to(np.asarray(phi(f.positions), dtype=float), (f.count,))
    return float(np.sum(f.weights * f.values * phi_vals))


@dataclass(frozen=True)
class NormReport:
    l1: float
    linf: float
    lp_ul: dict
    window_radius: float
    center_spacing: float
    p_grid: tuple
    y_theta_ul: float | None = None
    theta: GrowthFunction | None = None

    def to_json(self) -> dict:
        obj = {
            "l1": self.l1,
            "linf": self.linf,
            "lp_ul": {str(p): v for p, v in self.lp_ul.items()},
            "window_radius": self.window_radius,
            "center_spacing": self.center_spacing,
            "p_grid": list(self.p_grid),
        }
        if self.y_theta_ul is not None:
            obj["y_theta_ul"] = self.y_theta_ul
            obj["theta"] = self.theta.to_json()
        return obj


def norm_report(
    f: ParticleField,
    p_grid=DEFAULT_P_GRID,
    radius: float = 1.0,
    center_spacing: float | None = None,
    theta: GrowthFunction | None = None,
) -> NormReport:
    spacing = radius / 2.0 if center_spacing is None else float(center_spacing)
    lp_ul = {float(p): lp_ul_norm(f, p, radius, spacing) for p in p_grid}
    y_norm = None
    if theta is not None:
        y_norm = max(v / theta(p) for p, v in lp_ul.items())
    return NormReport(
        l1=lp_norm(f, 1.0),
        linf=lp_norm(f, np.inf),
        lp_ul=lp_ul,
        window_radius=radius,
        center_spacing=spacing,
        p_grid=tuple(float(p) for p in p_grid),
        y_theta_ul=y_norm,
        theta=theta,
    )


# ---------------------------------------------------------------------------
# field I/O: CSV of x1,x2,weight,value plus a JSON sidecar


def _sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def save_field(f: ParticleField, csv_path) -> None:
    csv_path = Path(csv_path)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x1", "x2", "weight", "value"])
        for i in range(f.count):
            writer.writerow(
                [
                    repr(float(f.positions[i, 0])),
                    repr(float(f.positions[i, 1])),
                    repr(float(f.weights[i])),
                    repr(float(f.values[i])),
                ]
            )
    sidecar = {"domain": f.domain.to_json(), "time_stamp": f.time_stamp}
    with open(_sidecar_path(csv_path), "w") as fh:
        json.dump(sidecar, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_field(csv_path) -> ParticleField:
    import warnings

    csv_path = Path(csv_path)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)  # empty-file notice
        data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        data = data.reshape(0, 4)
    with open(_sidecar_path(csv_path)) as fh:
        sidecar = json.load(fh)
    return ParticleField(
        Domain.from_json(sidecar["domain"]),
        data[:, 0:2],
        data[:, 2],
        data[:, 3],
        float(sidecar.get("time_stamp", 0.0)),
    )


# ---------------------------------------------------------------------------
# initial-condition builders


def lattice_field(fn, bbox, spacing: float, domain: Domain | None = None) -> ParticleField:
    """Uniform lattice over ``bbox``; cells where fn is nonzero are kept.

    ``fn`` receives the (M, 2) array of cell centers and returns values;
    weights are the cell area spacing^2.
    """
    domain = Domain.plane() if domain is None else domain
    xmin, xmax, ymin, ymax = bbox
    nx = max(1, int(round((xmax - xmin) / spacing)))
    ny = max(1, int(round((ymax - ymin) / spacing)))
    xs = xmin + (np.arange(nx) + 0.5) * (xmax - xmin) / nx
    ys = ymin + (np.arange(ny) + 0.5) * (ymax - ymin) / ny
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    centers = np.column_stack([gx.ravel(), gy.ravel()])
    vals = np.asarray(fn(centers), dtype=float)
    keep = vals != 0.0
    hx = (xmax - xmin) / nx
    hy = (ymax - ymin) / ny
    weights = np.full(keep.sum(), hx * hy)
    return ParticleField(domain, centers[keep], weights, vals[keep])


def disc_patch(radius: float = 1.0, value: float = 1.0, n_target: int = 10000) -> ParticleField:
    """Uniform vortex patch value * 1_{B_radius} on a square lattice."""
    spacing = radius * np.sqrt(np.pi / n_target)
    half = radius + spacing

    def fn(pts):
        r2 = pts[:, 0] ** 2 + pts[:, 1] ** 2
        return np.where(r2 <= radius**2, value, 0.0)

    return lattice_field(fn, (-half, half, -half, half), spacing)


def ellipse_patch(a: float, b: float, value: float = 1.0, n_target: int = 10000) -> ParticleField:
    """Uniform elliptical patch with semi-axes a, b."""
    spacing = np.sqrt(np.pi * a * b / n_target)

    def fn(pts):
        q = (pts[:, 0] / a) ** 2 + (pts[:, 1] / b) ** 2
        return np.where(q <= 1.0, value, 0.0)

    return lattice_field(fn, (-a - spacing, a + spacing, -b - spacing, b + spacing), spacing)


def log_singularity_rings(
    alpha: float = 0.5,
    clamp_level: float | None = None,
    log_r_min: float = -24.0,
    rings_per_decade: float = 4.0,
    points_per_ring: int = 64,
    amplitude: float = 1.0,
) -> ParticleField:
    """Radially graded discretization of  omega(x) = amplitude * |log |x||^alpha  on B_1.

    Geometric rings reach radius exp(log_r_min), so the discrete field
    resolves the singular values up to |log_r_min|^alpha; optional clamping
    caps the values at ``clamp_level``.  Ring quadrature weights are the band
    areas divided by the points per ring.
    """
    step = np.log(10.0) / rings_per_decade
    n_rings = int(np.ceil(-log_r_min / step))
    edges = -step * np.arange(n_rings + 1)  # log radii, 0 down to ~log_r_min
    positions = []
    weights = []
    values = []
    angles = 2.0 * np.pi * (np.arange(points_per_ring) + 0.5) / points_per_ring
    ca, sa = np.cos(angles), np.sin(angles)
    for k in range(n_rings):
        log_hi, log_lo = edges[k], edges[k + 1]
        r_mid = np.exp(0.5 * (log_hi + log_lo))
        band_area = np.pi * (np.exp(2.0 * log_hi) - np.exp(2.0 * log_lo))
        val = amplitude * (-0.5 * (log_hi + log_lo)) ** alpha
        if clamp_level is not None:
            val = min(val, clamp_level)
        if val == 0.0:
            continue
        positions.append(np.column_stack([r_mid * ca, r_mid * sa]))
        weights.append(np.full(points_per_ring, band_area / points_per_ring))
        values.append(np.full(points_per_ring, val))
    return ParticleField(
        Domain.plane(),
        np.concatenate(positions),
        np.concatenate(weights),
        np.concatenate(values),
    )
