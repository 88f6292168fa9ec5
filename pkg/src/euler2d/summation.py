"""Direct pair summation for Biot-Savart velocities.

The plane kernels run under numba with a fixed source order per target, so
results are deterministic regardless of the worker count.  The torus kernel
is a truncated Fourier synthesis and factorizes into per-mode source sums,
evaluated with chunked numpy.

``plane_velocity_diff`` computes v(x) - v(y) pairwise in a difference form
of the kernel that never subtracts two near-equal O(1) velocities, so the
result keeps full relative accuracy down to separations near the underflow
threshold.  Each term is rescaled by the local distance scale to avoid
overflow/underflow of intermediates.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange, set_num_threads  # noqa: F401  (re-exported)

INV_2PI = 1.0 / (2.0 * np.pi)
# exp(-r^2/d^2) is below double precision once r^2 > 45 d^2
_BLOB_FAR = 45.0


@njit(parallel=True, cache=True)
def _plane_velocity(targets, sources, charge, delta):
    m = targets.shape[0]
    n = sources.shape[0]
    out = np.zeros((m, 2))
    n_singular = 0
    d2 = delta * delta
    far = _BLOB_FAR * d2
    for i in prange(m):
        ax = 0.0
        ay = 0.0
        for j in range(n):
            dx = targets[i, 0] - sources[j, 0]
            dy = targets[i, 1] - sources[j, 1]
            r2 = dx * dx + dy * dy
            if r2 == 0.0:
                if delta == 0.0 and charge[j] != 0.0:
                    n_singular += 1
                continue
            f = charge[j] / r2
            if delta > 0.0 and r2 < far:
                f *= -np.expm1(-r2 / d2)
            ax -= dy * f
            ay += dx * f
        out[i, 0] = ax * INV_2PI
        out[i, 1] = ay * INV_2PI
    return out, n_singular


@njit(parallel=True, cache=True)
def _plane_velocity_diff(xa, xb, sources, charge, delta):
    m = xa.shape[0]
    n = sources.shape[0]
    out = np.zeros((m, 2))
    n_singular = 0
    for i in prange(m):
        ex = xa[i, 0] - xb[i, 0]
        ey = xa[i, 1] - xb[i, 1]
        accx = 0.0
        accy = 0.0
        for j in range(n):
            a1 = xa[i, 0] - sources[j, 0]
            a2c = xa[i, 1] - sources[j, 1]
            b1 = xb[i, 0] - sources[j, 0]
            b2c = xb[i, 1] - sources[j, 1]
            s = max(max(abs(a1), abs(a2c)), max(abs(b1), abs(b2c)))
            if s == 0.0:
                if delta == 0.0 and charge[j] != 0.0:
                    n_singular += 1
                continue
            inv_s = 1.0 / s
            ah1 = a1 * inv_s
            ah2 = a2c * inv_s
            bh1 = b1 * inv_s
            bh2 = b2c * inv_s
            eh1 = ex * inv_s
            eh2 = ey * inv_s
            a2 = ah1 * ah1 + ah2 * ah2
            b2 = bh1 * bh1 + bh2 * bh2
            if a2 == 0.0 or b2 == 0.0:
                # one endpoint sits on the source
                if delta == 0.0:
                    if charge[j] != 0.0:
                        n_singular += 1
                    continue
                dh2 = (delta * inv_s) * (delta * inv_s)
                if a2 == 0.0:
                    gb = -np.expm1(-b2 / dh2)
                    accx -= charge[j] * (-bh2) * gb / b2 * inv_s
                    accy -= charge[j] * bh1 * gb / b2 * inv_s
                else:
                    ga = -np.expm1(-a2 / dh2)
                    accx += charge[j] * (-ah2) * ga / a2 * inv_s
                    accy += charge[j] * ah1 * ga / a2 * inv_s
                continue
            # b2 - a2 without cancellation, from the pair separation
            dnum = eh1 * eh1 + eh2 * eh2 - 2.0 * (ah1 * eh1 + ah2 * eh2)
            # numerator of k(a)-k(b) for the singular kernel, times a2*b2
            nx = -ah2 * dnum - eh2 * a2
            ny = ah1 * dnum + eh1 * a2
            inv_ab = 1.0 / (a2 * b2)
            sx = nx * inv_ab
            sy = ny * inv_ab
            if delta == 0.0:
                accx += charge[j] * sx * inv_s
                accy += charge[j] * sy * inv_s
            else:
                dh2 = (delta * inv_s) * (delta * inv_s)
                at = a2 / dh2
                dt = dnum / dh2
                gb = -np.expm1(-(at + dt))
                if dt >= 0.0:
                    gdiff = np.exp(-at) * np.expm1(-dt)
                else:
                    gdiff = -np.exp(-(at + dt)) * np.expm1(dt)
                tx = sx * gb + (-ah2 / a2) * gdiff
                ty = sy * gb + (ah1 / a2) * gdiff
                accx += charge[j] * tx * inv_s
                accy += charge[j] * ty * inv_s
        out[i, 0] = accx * INV_2PI
        out[i, 1] = accy * INV_2PI
    return out, n_singular


class SingularEvaluationError(ValueError):
    """Singular kernel evaluated at a source point with blob_delta = 0."""


def plane_velocity(targets, sources, charge, delta: float) -> np.ndarray:
    targets = np.ascontiguousarray(targets, dtype=float)
    sources = np.ascontiguousarray(sources, dtype=float)
    charge = np.ascontiguousarray(charge, dtype=float)
    out, n_singular = _plane_velocity(targets, sources, charge, float(delta))
    if n_singular:
        raise SingularEvaluationError(
            f"{n_singular} singular evaluations at source points (blob_delta = 0)"
        )
    return out


def plane_velocity_diff(xa, xb, sources, charge, delta: float) -> np.ndarray:
    """v(xa_i) - v(xb_i) for each pair, accurate at tiny separations."""
    xa = np.ascontiguousarray(xa, dtype=float)
    xb = np.ascontiguousarray(xb, dtype=float)
    sources = np.ascontiguousarray(sources, dtype=float)
    charge = np.ascontiguousarray(charge, dtype=float)
    out, n_singular = _plane_velocity_diff(xa, xb, sources, charge, float(delta))
    if n_singular:
        raise SingularEvaluationError(
            f"{n_singular} singular evaluations at source points (blob_delta = 0)"
        )
    return out


# ---------------------------------------------------------------------------
# torus: truncated Fourier synthesis of the zero-mean Biot-Savart kernel


def torus_mode_table(side: float, cutoff: int, delta: float = 0.0):
    """Wave vectors and kernel coefficients of the truncated torus kernel.

    Modes are kappa = (2 pi / L)(m, n) over the square |m|,|n| <= cutoff with
    the zero mode dropped.  Coefficients are kappa-perp / |kappa|^2 / L^2,
    damped by exp(-|kappa|^2 delta^2 / 4) when a blob width is set (Gaussian
    mollification acts diagonally in Fourier space).
    """
    if cutoff < 1:
        raise ValueError("fourier_cutoff must be at least 1")
    idx = np.arange(-cutoff, cutoff + 1)
    mm, nn = np.meshgrid(idx, idx, indexing="ij")
    sel = (mm != 0) | (nn != 0)
    k = (2.0 * np.pi / side) * np.column_stack([mm[sel], nn[sel]]).astype(float)
    k2 = np.sum(k * k, axis=1)
    perp = np.column_stack([-k[:, 1], k[:, 0]])
    coef = perp / k2[:, None] / side**2
    if delta > 0.0:
        coef = coef * np.exp(-k2 * delta**2 / 4.0)[:, None]
    return k, coef


def torus_kernel_values(displacements, modes, coef) -> np.ndarray:
    """k_T(z) = sum_kappa coef_kappa sin(kappa . z), chunked over modes."""
    z = np.atleast_2d(np.asarray(displacements, dtype=float))
    out = np.zeros((z.shape[0], 2))
    block = max(1, int(5e6 // max(z.shape[0], 1)))
    for start in range(0, modes.shape[0], block):
        k = modes[start : start + block]
        c = coef[start : start + block]
        out += np.sin(z @ k.T) @ c
    return out


def torus_velocity(targets, sources, charge, modes, coef) -> np.ndarray:
    """Factorized synthesis: per-mode source sums, then per-target evaluation."""
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    sources = np.atleast_2d(np.asarray(sources, dtype=float))
    charge = np.asarray(charge, dtype=float)
    out = np.zeros((targets.shape[0], 2))
    n_modes = modes.shape[0]
    block = max(1, int(5e6 // max(max(targets.shape[0], sources.shape[0]), 1)))
    for start in range(0, n_modes, block):
        k = modes[start : start + block]
        c = coef[start : start + block]
        sk = sources @ k.T
        a = charge @ np.cos(sk)  # per-mode sum of c_j cos(kappa . y_j)
        b = charge @ np.sin(sk)
        tk = targets @ k.T
        out += (np.sin(tk) * a - np.cos(tk) * b) @ c
    return out
