"""Growth functions and the derived moduli of continuity / Osgood machinery.

A growth function Theta is a non-decreasing map [1, inf) -> (0, inf),
normalized at construction so that Theta(3) >= 1.  From it we derive

    phi_theta(r) = r (1 - log r) Theta(1 - log r)   capped above r = e^{-2},
    ell(r)       = r (1 - log r)                    capped above r = 1,

the inf-form moduli ``psi_theta`` / ``psi_tilde_theta``, a divergence verdict
for the integral  int dp / (p Theta(p)),  and the maximal solution of the
comparison ODE  E' = C phi_theta(E).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

E_M2 = float(np.exp(-2.0))  # junction point of the phi branches

CONSTANT = "constant"
POWER = "power"
ITERATED_LOG = "iterated_log"
LOG1P = "log1p"

_FAMILIES = (CONSTANT, POWER, ITERATED_LOG, LOG1P)


def _raw_eval(family: str, param: float, p: np.ndarray) -> np.ndarray:
    if family == CONSTANT:
        return np.full_like(p, param)
    if family == POWER:
        return p**param
    if family == ITERATED_LOG:
        # product of iterated logs, each factor floored at 1 so the function
        # stays positive and non-decreasing down to p = 1
        out = np.ones_like(p)
        cur = np.array(p, dtype=float)
        for _ in range(int(param)):
            cur = np.log(np.maximum(cur, 1.0))
            out = out * np.maximum(cur, 1.0)
        return out
    if family == LOG1P:
        return np.log(np.e + p)
    raise ValueError(f"unknown growth family {family!r}")


@dataclass(frozen=True)
class GrowthFunction:
    """A named growth family with its normalization factor.

    ``scale`` multiplies the raw family so that Theta(3) >= 1; it is computed
    at construction and recorded here.
    """

    family: str
    param: float = 0.0
    scale: float = field(default=0.0)

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown growth family {self.family!r}")
        if self.family == CONSTANT and not self.param > 0:
            raise ValueError("constant growth requires a positive value")
        if self.family == POWER and not self.param > 0:
            raise ValueError("power growth requires a positive exponent")
        if self.family == ITERATED_LOG and (self.param < 1 or self.param != int(self.param)):
            raise ValueError("iterated_log requires a positive integer depth")
        if self.scale == 0.0:
            raw3 = float(_raw_eval(self.family, self.param, np.array(3.0)))
            object.__setattr__(self, "scale", max(1.0, 1.0 / raw3))

    @staticmethod
    def constant(c: float) -> "GrowthFunction":
        return GrowthFunction(CONSTANT, float(c))

    @staticmethod
    def power(alpha: float) -> "GrowthFunction":
        return GrowthFunction(POWER, float(alpha))

    @staticmethod
    def iterated_log(m: int) -> "GrowthFunction":
        return GrowthFunction(ITERATED_LOG, int(m))

    @staticmethod
    def log1p() -> "GrowthFunction":
        return GrowthFunction(LOG1P)

    def __call__(self, p):
        p_arr = np.asarray(p, dtype=float)
        if np.any(p_arr < 1.0):
            raise ValueError("growth functions are defined on [1, inf)")
        out = self.scale * _raw_eval(self.family, self.param, p_arr)
        return out if out.shape else float(out)

    def to_json(self) -> dict:
        obj = {"family": self.family}
        if self.family != LOG1P:
            obj["param"] = self.param
        return obj

    @staticmethod
    def from_json(obj: dict) -> "GrowthFunction":
        return GrowthFunction(obj["family"], obj.get("param", 0.0))


def phi_theta(theta: GrowthFunction, r):
    """Modulus r(1 - log r) Theta(1 - log r), constant above r = e^{-2}."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ValueError("phi_theta requires r >= 0")
    cap = E_M2 * 3.0 * theta(3.0)
    out = np.full(r_arr.shape, cap)
    small = (r_arr > 0) & (r_arr <= E_M2)
    if np.any(small):
        rs = r_arr[small]
        one_m_log = 1.0 - np.log(rs)
        out[small] = rs * one_m_log * theta(one_m_log)
    out[r_arr == 0.0] = 0.0
    return out if out.shape else float(out)


def ell(r):
    """Log-Lipschitz modulus r(1 - log r) on (0, 1], capped at 1."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ValueError("ell requires r >= 0")
    out = np.ones(r_arr.shape)
    small = (r_arr > 0) & (r_arr <= 1.0)
    out[small] = r_arr[small] * (1.0 - np.log(r_arr[small]))
    out[r_arr == 0.0] = 0.0
    return out if out.shape else float(out)


def default_eps_grid(n: int = 64) -> np.ndarray:
    """Log-spaced grid in (0, 1/3) used to approximate the inf-form moduli."""
    return np.geomspace(1e-4, 1.0 / 3.0 - 1e-6, n)


def _check_eps_grid(eps_grid) -> np.ndarray:
    eps = np.asarray(eps_grid, dtype=float)
    if eps.size == 0:
        raise ValueError("epsilon grid must be nonempty")
    if np.any(eps <= 0) or np.any(eps >= 1.0 / 3.0):
        raise ValueError("epsilon grid must lie in (0, 1/3)")
    return eps


def psi_theta(theta: GrowthFunction, r: float, eps_grid=None) -> float:
    """Grid infimum of (1/eps) Theta(1/eps) r^eps (r^eps only for r >= 1).

    A finite grid gives an upper bound for the true infimum; refining the
    grid can only lower the value.
    """
    eps = _check_eps_grid(default_eps_grid() if eps_grid is None else eps_grid)
    r = float(r)
    if r < 0:
        raise ValueError("psi_theta requires r >= 0")
    vals = (1.0 / eps) * theta(1.0 / eps)
    if r >= 1.0:
        vals = vals * r**eps
    return float(np.min(vals))


def psi_tilde_theta(theta: GrowthFunction, d: float, eps_grid=None) -> float:
    """Grid infimum of Theta(1/eps) (1 - log d)^{1-eps} d^{1-2eps}."""
    eps = _check_eps_grid(default_eps_grid() if eps_grid is None else eps_grid)
    d = float(d)
    if not 0.0 < d <= E_M2:
        raise ValueError("psi_tilde_theta requires d in (0, e^-2]")
    one_m_log = 1.0 - np.log(d)
    logvals = np.log(theta(1.0 / eps)) + (1.0 - eps) * np.log(one_m_log) + (1.0 - 2.0 * eps) * np.log(d)
    return float(np.exp(np.min(logvals)))


DIVERGES = "diverges"
CONVERGES = "converges"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class OsgoodVerdict:
    verdict: str
    partial_integral: float
    p_max: float
    trace_p: np.ndarray
    trace_integral: np.ndarray

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "partial_integral": self.partial_integral,
            "p_max": self.p_max,
            "trace": [
                {"p": float(p), "integral": float(v)}
                for p, v in zip(self.trace_p, self.trace_integral)
            ],
        }


def osgood_diverges(theta: GrowthFunction, p_max: float = 1e6, tol: float = 1e-10) -> OsgoodVerdict:
    """Classify  int_3^inf dp / (p Theta(p))  and report the partial integral.

    Divergence cannot be certified by a finite computation, so the verdict is
    analytic per family (constant / iterated_log / log1p diverge, power
    converges); the numeric trace up to ``p_max`` is attached for inspection.
    """
    p_max = float(p_max)
    if p_max < 3.0:
        raise ValueError("p_max must be at least 3")
    checkpoints = np.geomspace(3.0, p_max, 24)
    partial = np.zeros_like(checkpoints)
    total = 0.0
    lo = 3.0
    for i, hi in enumerate(checkpoints):
        if hi > lo:
            # integrate in u = log p: dp/(p Theta(p)) = du / Theta(e^u)
            val, _ = quad(lambda u: 1.0 / theta(np.exp(u)), np.log(lo), np.log(hi), epsabs=tol)
            total += val
        partial[i] = total
        lo = hi
    if theta.family in (CONSTANT, ITERATED_LOG, LOG1P):
        verdict = DIVERGES
    elif theta.family == POWER:
        verdict = CONVERGES
    else:
        verdict = INCONCLUSIVE
    return OsgoodVerdict(verdict, total, p_max, checkpoints, partial)


def _phi_cap(theta: GrowthFunction) -> float:
    return E_M2 * 3.0 * theta(3.0)


def _osgood_time(theta: GrowthFunction, delta0: float, e_val: float) -> float:
    """G(E) = int_{delta0}^{E} dr / phi_theta(r), in log coordinates below e^-2."""
    if e_val <= delta0:
        return 0.0
    cap = _phi_cap(theta)
    total = 0.0
    lo = delta0
    if delta0 < E_M2:
        hi = min(e_val, E_M2)
        # substitute r = e^u: dr/phi(r) = du / ((1-u) Theta(1-u)), smooth in u
        val, _ = quad(
            lambda u: 1.0 / ((1.0 - u) * theta(1.0 - u)),
            np.log(lo),
            np.log(hi),
            epsabs=1e-12,
            limit=200,
        )
        total += val
        lo = hi
    if e_val > lo:
        total += (e_val - lo) / cap
    return total


def osgood_envelope(theta: GrowthFunction, c: float, delta0: float, t_grid) -> np.ndarray:
    """Maximal solution of E' = c phi_theta(E), E(0) = delta0, on ``t_grid``.

    Computed by inverting  int_{delta0}^{E} dr/phi_theta(r) = c t  with
    bracketed root-finding; identically zero when delta0 = 0 (the uniqueness
    envelope).  Above the phi cap the inversion is exact (phi is constant).
    """
    t = np.asarray(t_grid, dtype=float)
    if t.size and (t[0] < 0 or np.any(np.diff(t) < 0)):
        raise ValueError("t_grid must be non-decreasing and start at t >= 0")
    if not c > 0:
        raise ValueError("comparison constant must be positive")
    if delta0 < 0:
        raise ValueError("delta0 must be nonnegative")
    if delta0 == 0.0:
        return np.zeros_like(t)

    cap = _phi_cap(theta)
    # time at which the envelope reaches the constant-phi branch
    t_star = _osgood_time(theta, delta0, E_M2) / c if delta0 < E_M2 else 0.0
    out = np.empty_like(t)
    for i, ti in enumerate(t):
        target = c * ti
        if ti >= t_star:
            start = max(delta0, E_M2)
            out[i] = start + cap * (target - c * t_star)
            continue
        # root of G(E) - target on [delta0, e^-2], monotone in E
        f = lambda e_val: _osgood_time(theta, delta0, e_val) - target
        if target == 0.0:
            out[i] = delta0
            continue
        out[i] = brentq(f, delta0, E_M2, xtol=1e-300, rtol=1e-13)
    return out


def phi_concavity_check(theta: GrowthFunction, n: int = 1000) -> tuple[bool, float]:
    """Midpoint-concavity probe of phi_theta on a log grid.

    Returns (passed, worst_violation) where the violation is the largest
    positive value of  phi((a+b)/2) - (phi(a)+phi(b))/2  deficit, relative.
    Families failing the probe are flagged, not rejected.
    """
    r = np.geomspace(1e-8, 1.0, n)
    a, b = r[:-1], r[1:]
    mid = 0.5 * (a + b)
    lhs = phi_theta(theta, mid)
    rhs = 0.5 * (phi_theta(theta, a) + phi_theta(theta, b))
    violation = float(np.max((rhs - lhs) / np.maximum(lhs, 1e-300)))
    return violation <= 1e-9, violation
