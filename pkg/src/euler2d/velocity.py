"""Velocity evaluation v = K(omega) and modulus-of-continuity reports.

Velocities are direct blob-quadrature sums over the source particles with a
fixed summation order, so results are deterministic for a fixed field.  The
modulus reports sample point pairs at log-uniform separations and track the
empirical quotients |v(x)-v(y)| / bound(d(x,y)); pair differences are
evaluated in a cancellation-free difference form of the kernel, which keeps
relative accuracy at separations far below sqrt(machine epsilon).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import summation
from .fields import ParticleField, lp_norm, lp_ul_norm
from .geometry import bounding_box
from .growth import GrowthFunction, phi_theta
from .kernels import (
    BIOT_SAVART_PLANE,
    BIOT_SAVART_TORUS,
    KernelSpec,
    eval_kernel,
    torus_modes,
)


@dataclass(frozen=True)
class VelocityField:
    kernel: KernelSpec
    source: ParticleField

    def __post_init__(self):
        if self.kernel.domain != self.source.domain:
            raise ValueError("kernel and source field must share a domain")

    @property
    def charge(self) -> np.ndarray:
        return self.source.weights * self.source.values


def eval_velocity(v: VelocityField, x) -> np.ndarray:
    """Sum_j w_j omega_j k(x, x_j), fixed particle order."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    squeeze = np.asarray(x).ndim == 1
    if v.source.count == 0:
        out = np.zeros_like(pts)
        return out[0] if squeeze else out
    if v.kernel.kind == BIOT_SAVART_PLANE:
        out = summation.plane_velocity(pts, v.source.positions, v.charge, v.kernel.blob_delta)
    elif v.kernel.kind == BIOT_SAVART_TORUS:
        modes, coef = torus_modes(v.kernel)
        out = summation.torus_velocity(
            v.kernel.domain.wrap(pts), v.source.positions, v.charge, modes, coef
        )
    else:
        out = np.zeros_like(pts)
        chunk = max(1, int(2e6 // max(v.source.count, 1)))
        for start in range(0, pts.shape[0], chunk):
            kv = eval_kernel(
                v.kernel, pts[start : start + chunk, None, :], v.source.positions[None, :, :]
            )
            out[start : start + chunk] = np.tensordot(kv, v.charge, axes=([1], [0]))
    return out[0] if squeeze else out


def velocity_difference(v: VelocityField, x, y) -> np.ndarray:
    """v(x_i) - v(y_i) per pair, accurate for arbitrarily small separations."""
    xa = np.atleast_2d(np.asarray(x, dtype=float))
    xb = np.atleast_2d(np.asarray(y, dtype=float))
    if v.source.count == 0:
        return np.zeros_like(xa)
    if v.kernel.kind == BIOT_SAVART_PLANE:
        return summation.plane_velocity_diff(
            xa, xb, v.source.positions, v.charge, v.kernel.blob_delta
        )
    return eval_velocity(v, xa) - eval_velocity(v, xb)


def sup_velocity(v: VelocityField, probes) -> float:
    vals = eval_velocity(v, probes)
    if vals.size == 0:
        return 0.0
    return float(np.max(np.sqrt(np.sum(vals * vals, axis=-1))))


@dataclass(frozen=True)
class SupNormCheck:
    sup: float
    bound: float
    ratio: float
    q: float
    p: float

    def to_json(self) -> dict:
        return {"sup": self.sup, "bound": self.bound, "ratio": self.ratio, "q": self.q, "p": self.p}


def sup_norm_check(v: VelocityField, q: float, p: float, probes) -> SupNormCheck:
    """Empirical sup |v| against the bound shape max{1, 1/(p-2)}(||w||_q + ||w||_p_ul).

    The implicit constant of the bound is unknown; the ratio is tracked for
    regression, not asserted against an absolute value.
    """
    if not (1.0 <= q < 2.0 < p):
        raise ValueError("need 1 <= q < 2 < p")
    sup = sup_velocity(v, probes)
    bound = max(1.0, 1.0 / (p - 2.0)) * (lp_norm(v.source, q) + lp_ul_norm(v.source, p))
    ratio = sup / bound if bound > 0 else 0.0
    return SupNormCheck(sup, bound, ratio, q, p)


HOLDER = "holder"
PHI_THETA = "phi_theta"
ELL = "ell"


@dataclass(frozen=True)
class ModulusReport:
    bound_kind: str
    pairs_sampled: int
    distances: np.ndarray
    deltas: np.ndarray  # |v(x) - v(y)| per pair
    bounds: np.ndarray  # modulus value at each distance
    quotients: np.ndarray
    empirical_constant: float
    parameter: object  # exponent p, GrowthFunction, or None
    seed: int

    def to_json(self) -> dict:
        param = self.parameter
        if isinstance(param, GrowthFunction):
            param = param.to_json()
        return {
            "bound_kind": self.bound_kind,
            "pairs_sampled": self.pairs_sampled,
            "empirical_constant": self.empirical_constant,
            "parameter": param,
            "seed": self.seed,
        }

    def curve_rows(self):
        """(distance, |dv|, bound, quotient) rows sorted by distance."""
        order = np.argsort(self.distances)
        return np.column_stack(
            [
                self.distances[order],
                self.deltas[order],
                self.bounds[order],
                self.quotients[order],
            ]
        )


def sample_pairs(
    domain,
    n: int,
    seed: int = 0,
    d_range: tuple = (1e-4, 1.0),
    box=None,
):
    """Point pairs with log-uniform separations in ``d_range``.

    Base points are uniform over ``box`` (or the torus cell); the partner is
    offset by a uniformly random direction.  Log-uniform distances populate
    the small-separation regime where the moduli differ.
    """
    rng = np.random.default_rng(seed)
    if domain.is_torus:
        L = domain.side
        base = rng.uniform(0.0, L, size=(n, 2))
    else:
        xmin, xmax, ymin, ymax = box or (-1.5, 1.5, -1.5, 1.5)
        base = np.column_stack(
            [rng.uniform(xmin, xmax, size=n), rng.uniform(ymin, ymax, size=n)]
        )
    dist = np.exp(rng.uniform(np.log(d_range[0]), np.log(d_range[1]), size=n))
    ang = rng.uniform(0.0, 2.0 * np.pi, size=n)
    other = base + dist[:, None] * np.column_stack([np.cos(ang), np.sin(ang)])
    return base, domain.wrap(other)


def _pair_report(v, x, y, bound_fn, kind, parameter, seed) -> ModulusReport:
    d = v.kernel.domain.distance(x, y)
    keep = d > 0
    x, y, d = x[keep], y[keep], d[keep]
    dv = velocity_difference(v, x, y)
    mags = np.sqrt(np.sum(dv * dv, axis=-1))
    denom = np.asarray(bound_fn(d), dtype=float)
    quot = np.where(denom > 0, mags / np.where(denom > 0, denom, 1.0), 0.0)
    const = float(quot.max()) if quot.size else 0.0
    return ModulusReport(kind, int(d.size), d, mags, denom, quot, const, parameter, seed)


def holder_modulus_report(
    v: VelocityField,
    p: float,
    n_pairs: int = 2000,
    seed: int = 0,
    d_range: tuple = (1e-4, 1.0),
    box=None,
) -> ModulusReport:
    """Empirical constant of |v(x)-v(y)| <= c p d(x,y)^{1-2/p}."""
    if not p > 2.0:
        raise ValueError("holder report needs p > 2")
    if box is None and not v.kernel.domain.is_torus:
        box = bounding_box(v.source.positions, pad=0.5)
    x, y = sample_pairs(v.kernel.domain, n_pairs, seed, d_range, box)
    return _pair_report(
        v, x, y, lambda d: p * d ** (1.0 - 2.0 / p), HOLDER, float(p), seed
    )


def phi_theta_modulus_report(
    v: VelocityField,
    theta: GrowthFunction,
    n_pairs: int = 2000,
    seed: int = 0,
    d_range: tuple = (1e-4, 1.0),
    box=None,
) -> ModulusReport:
    """Empirical constant of |v(x)-v(y)| <= c phi_theta(d(x,y))."""
    if box is None and not v.kernel.domain.is_torus:
        box = bounding_box(v.source.positions, pad=0.5)
    x, y = sample_pairs(v.kernel.domain, n_pairs, seed, d_range, box)
    return _pair_report(v, x, y, lambda d: phi_theta(theta, d), PHI_THETA, theta, seed)


def lipschitz_modulus_report(
    v: VelocityField,
    n_pairs: int = 2000,
    seed: int = 0,
    d_range: tuple = (1e-4, 1.0),
    box=None,
) -> ModulusReport:
    """Empirical constant of the plain Lipschitz quotient |v(x)-v(y)| / d."""
    if box is None and not v.kernel.domain.is_torus:
        box = bounding_box(v.source.positions, pad=0.5)
    x, y = sample_pairs(v.kernel.domain, n_pairs, seed, d_range, box)
    return _pair_report(v, x, y, lambda d: d, ELL, None, seed)
