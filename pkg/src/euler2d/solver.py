"""Frozen-velocity time stepping for the 2D Euler vorticity equation.

The horizon [0, T] is split into n equal intervals.  On each interval the
velocity field is frozen at the field computed from the entering vorticity,
and every particle is advanced through that static field by RK4 substeps;
vorticity values are carried unchanged (Lagrangian transport).  Monitors
record discrete L1 / Linf / localized norms and the running integral
R(t) of the frozen-field sup speed.

The truncation cascade reruns the solver from value-clamped copies of the
initial datum and reports the pairing gaps between consecutive clamp levels,
the computable stand-in for weak convergence of the cascade.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import ParticleField, clamp, lp_norm, lp_ul_norm, pairing
from .geometry import ball_center_grid, bounding_box
from .kernels import BIOT_SAVART_PLANE, BIOT_SAVART_TORUS, KernelSpec
from .velocity import VelocityField, eval_velocity


class NumericalBlowupError(RuntimeError):
    """Particle positions left the finite range during a step."""

    def __init__(self, step_index: int, substep: int):
        super().__init__(f"non-finite positions at step {step_index}, substep {substep}")
        self.step_index = step_index
        self.substep = substep


@dataclass(frozen=True)
class SimConfig:
    """Time-stepping parameters.

    ``blob_delta`` overrides the kernel mollification length; None selects
    twice the interparticle spacing estimated from the quadrature weights.
    """

    kernel: KernelSpec
    t_final: float
    n_steps: int
    substeps: int = 4
    blob_delta: float | None = None
    track_jacobian: bool = False
    monitor_p_grid: tuple = (2.0, 4.0, 8.0)
    window_radius: float = 1.0
    center_spacing: float | None = None
    probe_grid_n: int = 12
    jacobian_fd_step: float = 1e-4

    def __post_init__(self):
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")
        if self.n_steps < 1 or self.substeps < 1:
            raise ValueError("n_steps and substeps must be at least 1")
        if self.blob_delta is not None and self.blob_delta < 0:
            raise ValueError("blob_delta must be nonnegative")

    def to_json(self) -> dict:
        return {
            "kernel": self.kernel.to_json(),
            "t_final": self.t_final,
            "n_steps": self.n_steps,
            "substeps": self.substeps,
            "blob_delta": self.blob_delta,
            "track_jacobian": self.track_jacobian,
            "monitor_p_grid": list(self.monitor_p_grid),
            "window_radius": self.window_radius,
            "center_spacing": self.center_spacing,
            "probe_grid_n": self.probe_grid_n,
        }

    @staticmethod
    def from_json(obj: dict) -> "SimConfig":
        return SimConfig(
            kernel=KernelSpec.from_json(obj["kernel"]),
            t_final=float(obj["t_final"]),
            n_steps=int(obj["n_steps"]),
            substeps=int(obj.get("substeps", 4)),
            blob_delta=obj.get("blob_delta"),
            track_jacobian=bool(obj.get("track_jacobian", False)),
            monitor_p_grid=tuple(obj.get("monitor_p_grid", (2.0, 4.0, 8.0))),
            window_radius=float(obj.get("window_radius", 1.0)),
            center_spacing=obj.get("center_spacing"),
            probe_grid_n=int(obj.get("probe_grid_n", 12)),
        )


def effective_kernel(cfg: SimConfig, omega0: ParticleField) -> KernelSpec:
    if cfg.blob_delta is not None:
        return cfg.kernel.with_blob(cfg.blob_delta)
    if cfg.kernel.blob_delta > 0 or omega0.count == 0:
        return cfg.kernel
    spacing = float(np.sqrt(np.median(omega0.weights)))
    return cfg.kernel.with_blob(2.0 * spacing)


@dataclass(frozen=True)
class SimState:
    field: ParticleField
    flow_displacement: np.ndarray  # X(t, x0) - x0 per particle, unwrapped
    r_integral: float
    step_index: int

    @property
    def time(self) -> float:
        return self.field.time_stamp


def _rk4_advance(vf: VelocityField, positions, weights, h, n_sub, cfg, step_index):
    """RK4 substeps through the frozen field; optionally evolve weights.

    Weight evolution integrates dw/dt = div v(X) w; the shipped Biot-Savart
    kinds have identically zero divergence, so their weights stay constant
    and only user kernels pay for the finite-difference divergence.
    """
    track = cfg.track_jacobian and vf.kernel.kind not in (BIOT_SAVART_PLANE, BIOT_SAVART_TORUS)
    pos = positions.copy()
    w = weights.copy()

    def div_at(pts):
        fd = cfg.jacobian_fd_step
        ex = np.array([fd, 0.0])
        ey = np.array([0.0, fd])
        return (
            eval_velocity(vf, pts + ex)[:, 0]
            - eval_velocity(vf, pts - ex)[:, 0]
            + eval_velocity(vf, pts + ey)[:, 1]
            - eval_velocity(vf, pts - ey)[:, 1]
        ) / (2.0 * fd)

    first_velocity = None
    for s in range(n_sub):
        k1 = eval_velocity(vf, pos)
        if s == 0:
            first_velocity = k1
        if track:
            w1 = div_at(pos) * w
            k2 = eval_velocity(vf, pos + 0.5 * h * k1)
            w2 = div_at(pos + 0.5 * h * k1) * (w + 0.5 * h * w1)
            k3 = eval_velocity(vf, pos + 0.5 * h * k2)
            w3 = div_at(pos + 0.5 * h * k2) * (w + 0.5 * h * w2)
            k4 = eval_velocity(vf, pos + h * k3)
            w4 = div_at(pos + h * k3) * (w + h * w3)
            w = w + (h / 6.0) * (w1 + 2.0 * w2 + 2.0 * w3 + w4)
        else:
            k2 = eval_velocity(vf, pos + 0.5 * h * k1)
            k3 = eval_velocity(vf, pos + 0.5 * h * k2)
            k4 = eval_velocity(vf, pos + h * k3)
        pos = pos + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(pos)):
            raise NumericalBlowupError(step_index, s)
    return pos, w, first_velocity


def step_frozen(state: SimState, cfg: SimConfig, kernel: KernelSpec, probes: np.ndarray) -> SimState:
    """Advance one frozen-velocity interval [j T/n, (j+1) T/n]."""
    j = state.step_index
    dt = cfg.t_final / cfg.n_steps
    h = dt / cfg.substeps
    frozen = VelocityField(kernel, state.field)
    # integration runs unwrapped within the interval (the torus kernel is
    # exactly periodic); ParticleField re-wraps when the snapshot is built
    start = state.field.positions
    new_pos, new_w, v0 = _rk4_advance(
        frozen, start, state.field.weights, h, cfg.substeps, cfg, j
    )
    speeds = [float(np.max(np.sqrt(np.sum(v0 * v0, axis=-1)))) if v0 is not None and v0.size else 0.0]
    if probes.size:
        vp = eval_velocity(frozen, probes)
        speeds.append(float(np.max(np.sqrt(np.sum(vp * vp, axis=-1)))))
    sup_speed = max(speeds)
    new_field = ParticleField(
        state.field.domain, new_pos, new_w, state.field.values, state.time + dt
    )
    return SimState(
        field=new_field,
        flow_displacement=state.flow_displacement + (new_pos - start),
        r_integral=state.r_integral + dt * sup_speed,
        step_index=j + 1,
    )


@dataclass
class Trajectory:
    config: SimConfig
    kernel: KernelSpec  # effective kernel (blob resolved)
    times: np.ndarray
    snapshots: list  # ParticleField per step boundary
    displacements: list  # unwrapped flow displacement per snapshot
    r_series: np.ndarray
    monitors: dict  # column name -> array

    def monitor_columns(self):
        cols = ["t", "l1", "linf"]
        cols += [f"lp_ul_p{_fmt_p(p)}" for p in self.config.monitor_p_grid]
        cols += ["R"]
        return cols

    def monitor_rows(self):
        cols = self.monitor_columns()
        return np.column_stack([self.monitors[c] for c in cols])


def _fmt_p(p) -> str:
    p = float(p)
    return str(int(p)) if p == int(p) else str(p).replace(".", "_")


def _monitor_row(f: ParticleField, cfg: SimConfig, r_val: float) -> dict:
    row = {
        "t": f.time_stamp,
        "l1": lp_norm(f, 1.0),
        "linf": lp_norm(f, np.inf),
        "R": r_val,
    }
    for p in cfg.monitor_p_grid:
        row[f"lp_ul_p{_fmt_p(p)}"] = lp_ul_norm(
            f, p, cfg.window_radius, cfg.center_spacing
        )
    return row


TORUS_MEAN_REJECT = 1e-6


def prepare_initial_field(omega0: ParticleField, cfg: SimConfig) -> ParticleField:
    """Validate the initial datum; enforce the zero-mean condition on the torus."""
    if cfg.kernel.domain != omega0.domain:
        raise ValueError("config kernel domain does not match the field domain")
    if omega0.domain.is_torus and omega0.count:
        area = omega0.domain.side ** 2
        integral = float(np.sum(omega0.weights * omega0.values))
        if abs(integral) / area > TORUS_MEAN_REJECT:
            raise ValueError(
                f"torus vorticity must have zero mean (got {integral / area:.3e}); "
                "the Poisson problem is only solvable for zero-average data"
            )
        if integral != 0.0:
            shift = integral / float(np.sum(omega0.weights))
            omega0 = omega0.with_values(omega0.values - shift)
    return omega0


def run(omega0: ParticleField, cfg: SimConfig) -> Trajectory:
    """Run the frozen-velocity scheme; snapshots at every step boundary."""
    omega0 = prepare_initial_field(omega0, cfg)
    kernel = effective_kernel(cfg, omega0)
    if omega0.domain.is_torus:
        L = omega0.domain.side
        probes = ball_center_grid(omega0.domain, (0.0, L, 0.0, L), L / max(cfg.probe_grid_n, 1))
    else:
        bbox = bounding_box(omega0.positions, pad=1.0)
        span = max(bbox[1] - bbox[0], bbox[3] - bbox[2], 1e-9)
        probes = ball_center_grid(omega0.domain, bbox, span / max(cfg.probe_grid_n, 1))

    state = SimState(
        field=omega0,
        flow_displacement=np.zeros((omega0.count, 2)),
        r_integral=0.0,
        step_index=0,
    )
    snapshots = [state.field]
    displacements = [state.flow_displacement]
    rows = [_monitor_row(state.field, cfg, 0.0)]
    for _ in range(cfg.n_steps):
        state = step_frozen(state, cfg, kernel, probes)
        snapshots.append(state.field)
        displacements.append(state.flow_displacement)
        rows.append(_monitor_row(state.field, cfg, state.r_integral))
    times = np.array([f.time_stamp for f in snapshots])
    monitors = {key: np.array([r[key] for r in rows]) for key in rows[0]}
    return Trajectory(cfg, kernel, times, snapshots, displacements,
                      monitors["R"], monitors)


def reversibility_probe(traj: Trajectory) -> float:
    """Integrate back through the forward run's frozen fields in reverse order.

    Each interval reuses the exact static field the forward pass froze, so
    the return gap isolates the RK4 integration error from the splitting
    error.  Returns the max distance between the returned and the initial
    particle positions.
    """
    cfg = traj.config
    dt = cfg.t_final / cfg.n_steps
    h = -dt / cfg.substeps
    pos = traj.snapshots[-1].positions.copy()
    for j in range(cfg.n_steps - 1, -1, -1):
        frozen = VelocityField(traj.kernel, traj.snapshots[j])
        pos, _, _ = _rk4_advance(frozen, pos, traj.snapshots[j].weights, h, cfg.substeps, cfg, j)
    gap = traj.snapshots[0].domain.distance(pos, traj.snapshots[0].positions)
    return float(np.max(gap)) if gap.size else 0.0


# ---------------------------------------------------------------------------
# run persistence: snapshot CSVs with time-indexed names plus one monitor CSV


@dataclass
class RunRecord:
    """Snapshots reloaded from a run directory; enough for flow comparisons."""

    times: np.ndarray
    snapshots: list


def save_run(traj: Trajectory, out_dir) -> list:
    from pathlib import Path

    from .fields import save_field
    from .output import write_csv

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    for i, snap in enumerate(traj.snapshots):
        path = out_dir / f"field_{i:04d}.csv"
        save_field(snap, path)
        outputs += [path, path.with_suffix(".json")]
    outputs.append(write_csv(out_dir / "monitor.csv", traj.monitor_columns(), traj.monitor_rows()))
    return outputs


def load_run(run_dir) -> RunRecord:
    from pathlib import Path

    from .fields import load_field

    run_dir = Path(run_dir)
    paths = sorted(run_dir.glob("field_*.csv"))
    if not paths:
        raise ValueError(f"no field snapshots found in {run_dir}")
    snapshots = [load_field(p) for p in paths]
    return RunRecord(np.array([f.time_stamp for f in snapshots]), snapshots)


# ---------------------------------------------------------------------------
# growth control of R(t) against the comparison ODE


@dataclass(frozen=True)
class RGrowthReport:
    times: np.ndarray
    r_values: np.ndarray
    envelope: np.ndarray
    fitted_c: float
    mode: str  # "p" or "theta"
    norm_used: float
    ok: bool

    def to_json(self) -> dict:
        return {
            "fitted_c": self.fitted_c,
            "mode": self.mode,
            "norm_used": self.norm_used,
            "ok": self.ok,
            "series": [
                {"t": float(t), "R": float(r), "envelope": float(e)}
                for t, r, e in zip(self.times, self.r_values, self.envelope)
            ],
        }


def r_growth_check(traj: Trajectory, p: float | None = None, theta=None) -> RGrowthReport:
    """Check R(t) against the comparison ODE R' = c (1 + S (1+R)^gamma).

    gamma = 2/p with S the localized L^p norm of the initial datum, or
    gamma = 1 with S its localized Yudovich norm.  The constant c is fitted
    so the comparison solution matches the empirical initial slope, then the
    comparison ODE is integrated and R must stay below it.
    """
    from .fields import y_theta_ul_norm

    omega0 = traj.snapshots[0]
    cfg = traj.config
    if (p is None) == (theta is None):
        raise ValueError("pass exactly one of p or theta")
    if p is not None:
        gamma = 2.0 / float(p)
        s_norm = lp_ul_norm(omega0, float(p), cfg.window_radius, cfg.center_spacing)
        mode = "p"
    else:
        gamma = 1.0
        s_norm = y_theta_ul_norm(
            omega0, theta, radius=cfg.window_radius, center_spacing=cfg.center_spacing
        )
        mode = "theta"
    times = traj.times
    r_vals = traj.r_series
    if len(times) < 2:
        raise ValueError("trajectory too short")
    slope0 = (r_vals[1] - r_vals[0]) / (times[1] - times[0])
    c = slope0 / (1.0 + s_norm) if (1.0 + s_norm) > 0 else 0.0

    def rhs(r):
        return c * (1.0 + s_norm * (1.0 + r) ** gamma)

    env = np.empty_like(r_vals)
    env[0] = 0.0
    n_sub = 16
    for i in range(len(times) - 1):
        h = (times[i + 1] - times[i]) / n_sub
        val = env[i]
        for _ in range(n_sub):
            k1 = rhs(val)
            k2 = rhs(val + 0.5 * h * k1)
            k3 = rhs(val + 0.5 * h * k2)
            k4 = rhs(val + h * k3)
            val += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        env[i + 1] = val
    ok = bool(np.all(r_vals <= env * (1.0 + 1e-9) + 1e-12))
    return RGrowthReport(times, r_vals, env, float(c), mode, float(s_norm), ok)


# ---------------------------------------------------------------------------
# truncation cascade


@dataclass(frozen=True)
class CascadeReport:
    levels: tuple
    pairings: np.ndarray  # len(levels) x len(test functions)
    gaps: np.ndarray  # successive |pairing differences|

    def to_json(self) -> dict:
        return {
            "levels": list(self.levels),
            "pairings": [[float(v) for v in row] for row in self.pairings],
            "gaps": [[float(v) for v in row] for row in self.gaps],
        }


def truncation_cascade(omega0: ParticleField, levels, cfg: SimConfig, test_functions) -> CascadeReport:
    """Run the solver from each clamp level; report final-time pairing gaps."""
    levels = tuple(float(v) for v in levels)
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("clamp levels must be strictly increasing")
    test_functions = list(test_functions)
    if not test_functions:
        raise ValueError("need at least one test function")
    pairings = np.empty((len(levels), len(test_functions)))
    for i, lev in enumerate(levels):
        traj = run(clamp(omega0, lev), cfg)
        final = traj.snapshots[-1]
        for k, phi in enumerate(test_functions):
            pairings[i, k] = pairing(final, phi)
    gaps = np.abs(np.diff(pairings, axis=0))
    return CascadeReport(levels, pairings, gaps)
