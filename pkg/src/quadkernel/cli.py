"""``qk`` command line: one subcommand per analysis.

Exit codes: 0 success, 1 numerical failure, 2 configuration error.
Every run writes ``<command>.manifest.json`` into ``--out``; every other
output file names that manifest (JSON key ``manifest``, CSV comment line).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, ModelInvalidError, QuadKernelError, UnsupportedReflectionError
from .model import ContinuousModel, DiscreteModel, load_model, validate_continuous, validate_discrete

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG = 0, 1, 2


def fmt(x) -> str:
    return "%.17g" % x


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float printed as ``%.17g`` (non-finite floats become null)."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, complex):
        return dumps([obj.real, obj.imag], indent, _level)
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent, _level)
    if obj is None:
        return "null"
    return json.dumps(str(obj))


@dataclass
class RunManifest:
    command: str
    config_path: str | None
    parameters: dict
    seeds: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    version: str = __version__

    @property
    def filename(self) -> str:
        return f"{self.command}.manifest.json"

    def to_dict(self) -> dict:
        return {"command": self.command, "config_path": self.config_path, "parameters": self.parameters,
                "tool_version": self.version, "seeds": self.seeds, "outputs": self.outputs}


class Writer:
    def __init__(self, out: Path, manifest: RunManifest, fmt_: str):
        self.out = out
        self.manifest = manifest
        self.format = fmt_
        out.mkdir(parents=True, exist_ok=True)

    def json(self, name: str, payload: dict) -> Path:
        path = self.out / name
        path.write_text(dumps({"manifest": self.manifest.filename, **payload}) + "\n")
        self.manifest.outputs.append(name)
        return path

    def table(self, stem: str, header: list[str], rows: list[list]) -> Path:
        if self.format == "json":
            return self.json(stem + ".json", {"columns": header, "rows": rows})
        name = stem + ".csv"
        lines = [f"# manifest={self.manifest.filename}", ",".join(header)]
        for row in rows:
            lines.append(",".join(fmt(v) if isinstance(v, (float, np.floating)) else str(v) for v in row))
        (self.out / name).write_text("\n".join(lines) + "\n")
        self.manifest.outputs.append(name)
        return self.out / name

    def finish(self):
        (self.out / self.manifest.filename).write_text(dumps(self.manifest.to_dict()) + "\n")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _need(model, kind):
    if not isinstance(model, kind):
        want = "continuous" if kind is ContinuousModel else "discrete"
        raise ConfigError(f"this command needs a {want} model", path="type")
    return model


def cmd_analyze(model, args, w: Writer):
    if isinstance(model, DiscreteModel):
        from .discrete import discriminant_roots, sample_curve_M, walk_group_order
        rep = validate_discrete(model)
        roots = discriminant_roots(model)
        grp = walk_group_order(model, max_iter=args.max_iter)
        curve = sample_curve_M(model, args.samples)
        w.table("curve_M", ["y", "re_x", "im_x", "branch"],
                [[float(t), float(z.real), float(z.imag), int(b)]
                 for t, z, b in zip(curve.param_values, curve.points, curve.branch)])
        w.json("analyze.json", {"type": "discrete", "drift": list(rep.drift), "simple": rep.simple,
                                "inside_roots": list(roots.inside), "outside_roots": list(roots.outside),
                                "x_inside_roots": list(roots.x_inside), "x_outside_roots": list(roots.x_outside),
                                "group": grp.verdict, "group_order": grp.order})
        return
    from .kernel import branch_points, curve_vertex, sample_curve_R
    from .sphere import beta, group_order
    rep = validate_continuous(model)
    b1, b2 = branch_points(model, 1), branch_points(model, 2)
    grp = group_order(model, max_denominator=args.max_denominator)
    curve = sample_curve_R(model, args.samples)
    w.table("curve_R", ["theta1", "re_theta2", "im_theta2", "branch"],
            [[float(t), float(z.real), float(z.imag), int(b)]
             for t, z, b in zip(curve.param_values, curve.points, curve.branch)])
    w.json("analyze.json", {"type": "continuous", "stable": rep.stable,
                            "stability_values": list(rep.condition_values),
                            "theta1_pm": [b1.low, b1.high], "theta2_pm": [b2.low, b2.high],
                            "vertex": curve_vertex(model), "beta": beta(model), "group": grp.verdict,
                            "group_order": grp.order})


def _parse_points(spec: str) -> list[complex]:
    pts = []
    for tok in spec.replace(";", " ").split():
        try:
            pts.append(complex(tok.replace("i", "j")))
        except ValueError as exc:
            raise ConfigError(f"cannot parse point {tok!r}", path="points") from exc
    return pts


def cmd_transform(model, args, w: Writer):
    from .transforms import BoundaryTransform, TransformValue, continue_phi1
    model = _need(model, ContinuousModel)
    pts = _parse_points(args.points)
    rows = []
    if args.kind == "phi1-continued":
        vals = [continue_phi1(model, p) for p in pts]
    else:
        bt = BoundaryTransform(model if args.kind == "phi1" else model.swapped())
        vals = [TransformValue(complex(bt(p)), p, args.kind, "direct-formula") for p in pts]
    for v in vals:
        rows.append([v.at.real, v.at.imag, v.value.real, v.value.imag, v.kind, v.via])
    w.table("transform", ["re_arg", "im_arg", "re_val", "im_val", "kind", "via"], rows)


def cmd_density(model, args, w: Writer):
    from .density import DensityEvaluator, _gauss_legendre
    model = _need(model, ContinuousModel)
    if not model.orthogonal:
        raise UnsupportedReflectionError("density needs identity reflection")
    xg, wg = _gauss_legendre(args.grid)
    x = 0.5 * args.T * (xg + 1)
    wt = 0.5 * args.T * wg
    vals, errs = DensityEvaluator(model).grid(x, x)
    rows = [[float(a), float(b), float(vals[i, j]), float(errs[i, j])]
            for i, a in enumerate(x) for j, b in enumerate(x)]
    w.table("density", ["x1", "x2", "density", "error_estimate"], rows)
    w.json("density_summary.json", {"grid": args.grid, "T": args.T, "rule": "gauss-legendre tensor",
                                    "normalization": float(wt @ vals @ wt)})


def _alphas(args):
    if args.alpha:
        return [float(a) for a in args.alpha.split(",")]
    n = args.n_alphas
    return list(np.pi / 2 * np.arange(1, n + 1) / (n + 1))


def cmd_asymptotics(model, args, w: Writer):
    from .asymptotics import classify_regime
    model = _need(model, ContinuousModel)
    rows = []
    for a in _alphas(args):
        r = classify_regime(model, a)
        rows.append([a, r.label, ";".join(fmt(e) for e in r.exponents), float(r.prefactor_power),
                     float(r.saddle[0]), float(r.saddle[1])])
    w.table("asymptotics", ["alpha", "label", "exponents", "prefactor_power", "saddle_theta1", "saddle_theta2"], rows)


def cmd_group(model, args, w: Writer):
    if isinstance(model, DiscreteModel):
        from .discrete import walk_group_order
        g = walk_group_order(model, max_iter=args.max_iter)
        w.json("group.json", {"verdict": g.verdict, "order": g.order, "orbit_residuals": g.orbit_residuals})
        return
    from .sphere import group_order
    w.json("group.json", group_order(model, max_denominator=args.max_denominator).to_dict())


def cmd_simulate(model, args, w: Writer):
    from .oracle import SimConfig, empirical_laplace, simulate_srbm
    model = _need(model, ContinuousModel)
    thetas = tuple((complex(a), complex(b)) for a, b in
                   (pair.split(",") for pair in args.theta.split(";") if pair)) if args.theta else ()
    cfg = SimConfig(dt=args.dt, horizon=args.horizon, burn_in=args.burn_in, replicas=args.replicas,
                    seed=args.seed, thetas=thetas, scheme=args.scheme)
    w.manifest.parameters["simulation"] = cfg.to_dict()
    w.manifest.seeds.append(args.seed)
    acc = simulate_srbm(model, cfg)
    npz, side = acc.save(w.out / "accumulators")
    sidecar = json.loads(side.read_text())
    sidecar["manifest"] = w.manifest.filename
    side.write_text(dumps(sidecar) + "\n")
    w.manifest.outputs += [npz.name, side.name]
    lrate, lse = acc.local_time_rate()
    est = []
    for t in thetas:
        m, se = empirical_laplace(acc, t)
        est.append({"theta": [t[0], t[1]], "mean": m, "stderr": se})
    w.json("simulate.json", {"scheme": acc.scheme, "steps": acc.steps.tolist(),
                             "rejected_steps": acc.rejected.tolist(),
                             "local_time_rate": lrate, "local_time_rate_stderr": lse, "laplace": est})


def cmd_discrete(model, args, w: Writer):
    from .discrete import discrete_regime
    model = _need(model, DiscreteModel)
    validate_discrete(model)
    rows = []
    for a in _alphas(args):
        r = discrete_regime(model, a, ordering=args.ordering)
        rows.append([a, r.saddle[0], r.saddle[1], r.label, ";".join(fmt(v) for v in r.rates)])
    w.table("discrete", ["alpha", "x_alpha", "y_alpha", "label", "rates"], rows)
    if args.lattice:
        from .oracle import lattice_stationary
        sol = lattice_stationary(model, args.lattice)
        w.json("lattice.json", {"N": sol.N, "residual": sol.residual, "wall_mass": sol.wall_mass,
                                "diagonal": sol.diagonal().tolist()})


COMMANDS = {"analyze": cmd_analyze, "transform": cmd_transform, "density": cmd_density,
            "asymptotics": cmd_asymptotics, "group": cmd_group, "simulate": cmd_simulate,
            "discrete": cmd_discrete}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qk", description="Kernel-method analyses of quadrant models.")
    p.add_argument("--version", action="version", version=f"qk {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="model JSON file")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    sub = p.add_subparsers(dest="command", required=True)
    a = sub.add_parser("analyze", parents=[common], help="branch points, curve, beta, group")
    a.add_argument("--samples", type=int, default=100)
    a.add_argument("--max-denominator", type=int, default=1000)
    a.add_argument("--max-iter", type=int, default=64)
    t = sub.add_parser("transform", parents=[common], help="boundary transforms at complex points")
    t.add_argument("--points", required=True, help="complex points, e.g. '-1;1+2j'")
    t.add_argument("--kind", choices=("phi1", "phi2", "phi1-continued"), default="phi1")
    d = sub.add_parser("density", parents=[common], help="density on a tensor grid")
    d.add_argument("--grid", type=int, default=20)
    d.add_argument("--T", type=float, default=4.0)
    s = sub.add_parser("asymptotics", parents=[common], help="regime sweep over angles")
    s.add_argument("--n-alphas", type=int, default=9)
    s.add_argument("--alpha", default="", help="comma-separated angles (overrides --n-alphas)")
    g = sub.add_parser("group", parents=[common], help="group of the model")
    g.add_argument("--max-denominator", type=int, default=1000)
    g.add_argument("--max-iter", type=int, default=64)
    m = sub.add_parser("simulate", parents=[common], help="Monte Carlo accumulators")
    m.add_argument("--dt", type=float, default=1e-3)
    m.add_argument("--horizon", type=float, default=2e4)
    m.add_argument("--burn-in", type=float, default=1e3)
    m.add_argument("--replicas", type=int, default=8)
    m.add_argument("--theta", default="", help="declared thetas, e.g. '-1,-1;-0.5,-1'")
    m.add_argument("--scheme", choices=("auto", "euler", "bridge"), default="auto")
    q = sub.add_parser("discrete", parents=[common], help="discrete saddle and regime sweep")
    q.add_argument("--n-alphas", type=int, default=9)
    q.add_argument("--alpha", default="")
    q.add_argument("--ordering", choices=("zeta-eta", "eta-zeta"), default="zeta-eta")
    q.add_argument("--lattice", type=int, default=0, help="also solve the truncated lattice of this size")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        print(f"qk: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    params = {k: v for k, v in vars(args).items() if k not in ("command", "config", "out", "format")}
    manifest = RunManifest(args.command, str(args.config), params)
    try:
        model = load_model(text)
        manifest.parameters["model"] = model.to_dict()
        writer = Writer(Path(args.out), manifest, args.format)
        COMMANDS[args.command](model, args, writer)
        writer.finish()
    except (ConfigError, ModelInvalidError, UnsupportedReflectionError) as exc:
        print(f"qk: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QuadKernelError as exc:
        print(f"qk: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
