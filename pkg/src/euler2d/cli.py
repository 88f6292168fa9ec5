"""Command-line interface.

Commands: simulate, norms, verify-kernel, modulus, uniqueness, cascade,
osgood.  Reports are JSON, series are CSV, and each report path also renders
a PNG figure unless --no-figures is given.  Every command writes a
manifest.json (config snapshot, seed, input digests, outputs, wall time),
even on failure.

Exit codes: 0 success, 1 input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import figures, fields, growth, kernels, solver, uniqueness
from .geometry import bounding_box, ball_center_grid
from .output import write_csv, write_json, write_manifest
from .solver import NumericalBlowupError
from .summation import SingularEvaluationError
from . import velocity as velocity_mod

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2


class _Parser(argparse.ArgumentParser):
    # argparse defaults to exit code 2 on bad usage; 2 is reserved for
    # numerical failures here, so remap usage errors to the input code
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _parse_theta(text: str) -> growth.GrowthFunction:
    if Path(text).is_file():
        with open(text) as fh:
            return growth.GrowthFunction.from_json(json.load(fh))
    return growth.GrowthFunction.from_json(json.loads(text))


def _parse_float_list(text: str):
    return [float(v) for v in text.split(",") if v.strip()]


def _kernel_for_field(field, blob_delta, cutoff: int) -> kernels.KernelSpec:
    if field.domain.is_torus:
        spec = kernels.KernelSpec.biot_savart_torus(field.domain.side, cutoff)
    else:
        spec = kernels.KernelSpec.biot_savart_plane()
    if blob_delta is None:
        if field.count:
            spacing = float(np.sqrt(np.median(field.weights)))
            return spec.with_blob(2.0 * spacing)
        return spec
    return spec.with_blob(blob_delta)


# ---------------------------------------------------------------------------
# commands; each returns a list of output paths


def cmd_simulate(args, out: Path):
    with open(args.config) as fh:
        cfg = solver.SimConfig.from_json(json.load(fh))
    omega0 = fields.load_field(args.field)
    traj = solver.run(omega0, cfg)
    outputs = solver.save_run(traj, out)
    if args.figures:
        outputs.append(figures.render_monitors(traj, out / "monitors.png"))
        outputs.append(figures.render_field(traj.snapshots[-1], out / "field_final.png"))
    return outputs


def cmd_norms(args, out: Path):
    field = fields.load_field(args.field)
    theta = _parse_theta(args.theta) if args.theta else None
    p_grid = _parse_float_list(args.p_grid) if args.p_grid else fields.DEFAULT_P_GRID
    report = fields.norm_report(field, p_grid, args.radius, args.spacing, theta)
    obj = report.to_json()
    obj["seed"] = args.seed
    outputs = [write_json(out / "norms.json", obj)]
    if args.figures:
        outputs.append(figures.render_norms(report, out / "norms.png"))
    return outputs


def _default_probes(field):
    bbox = bounding_box(field.positions, pad=1.0)
    span = max(bbox[1] - bbox[0], bbox[3] - bbox[2])
    return ball_center_grid(field.domain, bbox, span / 12)


def cmd_verify_kernel(args, out: Path):
    if args.kernel == "plane":
        spec = kernels.KernelSpec.biot_savart_plane(args.blob_delta or 0.0)
    elif args.kernel == "torus":
        spec = kernels.KernelSpec.biot_savart_torus(
            args.side, args.cutoff, args.blob_delta or 0.0
        )
    else:
        table = kernels.load_tabulated_kernel(args.kernel)
        spec = kernels.KernelSpec.user_tabulated(table)
    c1, samples = kernels.estimate_C1(spec, args.n, args.r_min, args.seed)
    c2 = kernels.estimate_C2(spec, args.n, args.r_min, args.seed + 1)
    c3 = 0.0
    if args.field:
        field = fields.load_field(args.field)
        c3 = kernels.estimate_C3_divergence(spec, field, _default_probes(field), args.fd_step)
    constants = kernels.KernelConstants(c1, c2, c3, args.n, args.r_min)
    obj = constants.to_json()
    obj["seed"] = args.seed
    obj["kernel"] = spec.to_json()
    outputs = [write_json(out / "kernel_constants.json", obj)]
    if args.figures:
        outputs.append(figures.render_kernel_samples(samples, c1, out / "kernel.png"))
    return outputs


def cmd_modulus(args, out: Path):
    field = fields.load_field(args.field)
    spec = _kernel_for_field(field, args.blob_delta, args.cutoff)
    vf = velocity_mod.VelocityField(spec, field)
    d_range = (args.d_min, args.d_max)
    if args.kind == "holder":
        report = velocity_mod.holder_modulus_report(vf, args.p, args.pairs, args.seed, d_range)
    elif args.kind == "phi-theta":
        if args.theta is None:
            raise ValueError("--theta is required for the phi-theta modulus")
        theta = _parse_theta(args.theta)
        report = velocity_mod.phi_theta_modulus_report(vf, theta, args.pairs, args.seed, d_range)
    else:
        report = velocity_mod.lipschitz_modulus_report(vf, args.pairs, args.seed, d_range)
    obj = report.to_json()
    obj["kernel"] = spec.to_json()
    outputs = [
        write_json(out / "modulus.json", obj),
        write_csv(out / "modulus.csv", ["d", "dv", "bound", "quotient"], report.curve_rows()),
    ]
    if args.figures:
        outputs.append(figures.render_modulus(report, out / "modulus.png"))
    return outputs


def cmd_uniqueness(args, out: Path):
    run_a = solver.load_run(Path(args.run_a))
    run_b = solver.load_run(Path(args.run_b))
    weight = None
    if args.eta_amplitude is not None:
        width = args.eta_width if args.eta_width is not None else 1.0
        weight = uniqueness.ComparisonWeight("gaussian", args.eta_amplitude, width)
    report = uniqueness.flow_distance(run_a, run_b, weight)
    theta = _parse_theta(args.theta)
    c_source = "fitted" if args.c_source == "fitted" else float(args.c_source)
    report = uniqueness.envelope_verdict(report, theta, c_source)
    obj = report.to_json()
    obj["seed"] = args.seed
    rows = np.column_stack([report.times, report.d_values, report.envelope])
    outputs = [
        write_json(out / "uniqueness.json", obj),
        write_csv(out / "uniqueness.csv", ["t", "D", "envelope"], rows),
    ]
    if args.figures:
        outputs.append(figures.render_uniqueness(report, out / "uniqueness.png"))
    return outputs


def _default_test_functions(field):
    scale = 1.0
    if field.count:
        scale = max(1.0, float(np.max(np.abs(field.positions))))
    centers = [(0.0, 0.0), (0.5 * scale, 0.0), (0.0, -0.5 * scale)]
    width = 0.5 * scale

    def make(cx, cy):
        def phi(pts):
            r2 = (pts[:, 0] - cx) ** 2 + (pts[:, 1] - cy) ** 2
            return np.exp(-r2 / (2.0 * width**2))

        return phi

    return [make(cx, cy) for cx, cy in centers]


def cmd_cascade(args, out: Path):
    with open(args.config) as fh:
        cfg = solver.SimConfig.from_json(json.load(fh))
    omega0 = fields.load_field(args.field)
    levels = _parse_float_list(args.levels)
    report = solver.truncation_cascade(omega0, levels, cfg, _default_test_functions(omega0))
    obj = report.to_json()
    obj["seed"] = args.seed
    outputs = [write_json(out / "cascade.json", obj)]
    if args.figures:
        outputs.append(figures.render_cascade(report, out / "cascade.png"))
    return outputs


def cmd_osgood(args, out: Path):
    theta = _parse_theta(args.theta)
    verdict = growth.osgood_diverges(theta, args.p_max, args.tol)
    obj = verdict.to_json()
    obj["seed"] = args.seed
    obj["theta"] = theta.to_json()
    outputs = [write_json(out / "osgood.json", obj)]
    if args.figures:
        outputs.append(figures.render_osgood(verdict, out / "osgood.png"))
    return outputs


# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--out", type=Path, required=True, help="output directory")
    common.add_argument("--seed", type=int, default=0, help="seed for all randomness")
    common.add_argument("--threads", type=int, default=None, help="cap worker threads")
    common.add_argument(
        "--no-figures", dest="figures", action="store_false", help="skip PNG rendering"
    )

    parser = _Parser(prog="euler2d", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="run the frozen-velocity solver")
    p.add_argument("--config", required=True, help="SimConfig JSON file")
    p.add_argument("--field", required=True, help="initial vorticity CSV")

    p = sub.add_parser("norms", parents=[common], help="norm report for a field file")
    p.add_argument("--field", required=True)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--spacing", type=float, default=None)
    p.add_argument("--p-grid", default=None, help="comma-separated exponents")
    p.add_argument("--theta", default=None, help="growth function JSON (string or file)")

    p = sub.add_parser("verify-kernel", parents=[common], help="estimate kernel constants")
    p.add_argument("--kernel", default="plane", help="plane, torus, or a kernel table CSV")
    p.add_argument("--side", type=float, default=1.0)
    p.add_argument("--cutoff", type=int, default=64)
    p.add_argument("--blob-delta", type=float, default=None)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--r-min", type=float, default=1e-3)
    p.add_argument("--field", default=None, help="field CSV for the divergence constant")
    p.add_argument("--fd-step", type=float, default=1e-3)

    p = sub.add_parser("modulus", parents=[common], help="velocity modulus-of-continuity report")
    p.add_argument("--field", required=True)
    p.add_argument("--kind", choices=["holder", "phi-theta", "lipschitz"], default="holder")
    p.add_argument("--p", type=float, default=4.0)
    p.add_argument("--theta", default=None)
    p.add_argument("--pairs", type=int, default=2000)
    p.add_argument("--d-min", type=float, default=1e-4)
    p.add_argument("--d-max", type=float, default=1.0)
    p.add_argument("--blob-delta", type=float, default=None)
    p.add_argument("--cutoff", type=int, default=64)

    p = sub.add_parser("uniqueness", parents=[common], help="flow-distance vs Osgood envelope")
    p.add_argument("--run-a", required=True, help="simulate output directory")
    p.add_argument("--run-b", required=True)
    p.add_argument("--theta", required=True)
    p.add_argument("--c-source", default="fitted", help="'fitted' or a numeric constant")
    p.add_argument("--eta-amplitude", type=float, default=None)
    p.add_argument("--eta-width", type=float, default=None)

    p = sub.add_parser("cascade", parents=[common], help="truncation cascade report")
    p.add_argument("--config", required=True)
    p.add_argument("--field", required=True)
    p.add_argument("--levels", default="2,4,8,16")

    p = sub.add_parser("osgood", parents=[common], help="Osgood divergence verdict")
    p.add_argument("--theta", required=True)
    p.add_argument("--p-max", type=float, default=1e6)
    p.add_argument("--tol", type=float, default=1e-10)

    return parser


_COMMANDS = {
    "simulate": (cmd_simulate, ("config", "field")),
    "norms": (cmd_norms, ("field",)),
    "verify-kernel": (cmd_verify_kernel, ("field",)),
    "modulus": (cmd_modulus, ("field",)),
    "uniqueness": (cmd_uniqueness, ()),
    "cascade": (cmd_cascade, ("config", "field")),
    "osgood": (cmd_osgood, ()),
}


def _input_paths(args, names):
    paths = []
    for name in names:
        value = getattr(args, name, None)
        if value and Path(str(value)).is_file():
            paths.append(Path(str(value)))
            sidecar = Path(str(value)).with_suffix(".json")
            if sidecar.is_file() and sidecar != Path(str(value)):
                paths.append(sidecar)
    return paths


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        import numba

        from .summation import set_num_threads

        set_num_threads(max(1, min(args.threads, numba.config.NUMBA_NUM_THREADS)))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fn, input_names = _COMMANDS[args.command]
    inputs = _input_paths(args, input_names)
    config_snapshot = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in vars(args).items()
        if k not in ("command",) and not callable(v)
    }
    started = time.perf_counter()
    outputs: list = []
    status, error, code = "ok", None, EXIT_OK
    try:
        outputs = fn(args, out)
    except (NumericalBlowupError, SingularEvaluationError, FloatingPointError) as exc:
        status, error, code = "numerical-failure", str(exc), EXIT_NUMERICAL
    except (uniqueness.IncompatibleRunsError, ValueError, KeyError, OSError,
            json.JSONDecodeError) as exc:
        status, error, code = "input-error", str(exc), EXIT_INPUT
    wall = time.perf_counter() - started
    write_manifest(out, args.command, config_snapshot, args.seed, inputs, outputs, wall, status, error)
    if error is not None:
        print(f"euler2d {args.command}: {status}: {error}", file=sys.stderr)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
