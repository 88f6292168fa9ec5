"""2D incompressible Euler vortex solver and estimate-verification toolkit.

Submodules:
    geometry    -- plane / flat-torus domains, distances, center grids
    growth      -- growth functions, moduli of continuity, Osgood machinery
    kernels     -- Biot-Savart-type kernels and structural-constant estimators
    fields      -- particle vorticity fields and localized norms
    velocity    -- velocity evaluation and modulus-of-continuity reports
    solver      -- frozen-velocity time stepping and truncation cascades
    uniqueness  -- averaged flow-separation diagnostics vs. Osgood envelopes
    cli         -- command-line interface
"""

__version__ = "0.1.0"

from .geometry import Domain, ball_center_grid
from .growth import GrowthFunction, phi_theta, ell, psi_theta, psi_tilde_theta
from .fields import ParticleField, clamp, lp_norm, lp_ul_norm, pairing
from .kernels import KernelSpec
from .velocity import VelocityField, eval_velocity
from .solver import SimConfig, run

__all__ = [
    "Domain",
    "ball_center_grid",
    "GrowthFunction",
    "phi_theta",
    "ell",
    "psi_theta",
    "psi_tilde_theta",
    "ParticleField",
    "clamp",
    "lp_norm",
    "lp_ul_norm",
    "pairing",
    "KernelSpec",
    "VelocityField",
    "eval_velocity",
    "SimConfig",
    "run",
    "__version__",
]
