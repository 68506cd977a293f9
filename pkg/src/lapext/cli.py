"""Command-line front end.

Exit codes: 0 success, 1 configuration or input error (or a failed check
in ``verify``), 2 unitary without a gap at -1, 3 eigensolver failure.
"""

from __future__ import annotations

import argparse
import ast
import csv
import io
import json
import math
import operator
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import oracles, robin_1d
from .boundary_unitary import (
    DELTA_MIN,
    BoundaryMesh,
    admissibility_norm,
    decompose,
    gap_report,
    matrix_from_json,
    partial_cayley,
    random_phases,
    random_unitary,
)
from .errors import ConfigError, LapextError, NoGap, SolverFailure
from .form_assembly import (
    DENSE_LIMIT,
    SOLVER_TOL,
    assemble,
    extension_consistency,
    solve,
    unitary_fingerprint,
    verify_lower_bound,
)
from .gallery import parse_preset, preset_unitary
from .isotropy import property_report, subspace_from_json
from .mesh import Mesh

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK, EXIT_CONFIG, EXIT_NOGAP, EXIT_SOLVER = 0, 1, 2, 3


# --- real-number expressions ------------------------------------------------

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv, ast.Pow: operator.pow}


def parse_real(text) -> float:
    """Numbers like ``2pi``, ``pi/2``, ``-1.5e-3`` or ``2*pi + 1``."""
    if isinstance(text, (int, float)):
        return float(text)
    src = str(text).strip().replace("π", "pi")
    src = _implicit_multiplication(src)
    try:
        tree = ast.parse(src, mode="eval")
        return float(_eval(tree.body))
    except (SyntaxError, ValueError, TypeError, ZeroDivisionError) as exc:
        raise ConfigError(f"cannot read {text!r} as a real number") from exc


def _implicit_multiplication(s: str) -> str:
    out = []
    for i, ch in enumerate(s):
        if ch == "p" and s[i : i + 2] == "pi" and i > 0 and (s[i - 1].isdigit() or s[i - 1] == "."):
            out.append("*")
        out.append(ch)
    return "".join(out)


def _eval(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return node.value
    if isinstance(node, ast.Name) and node.id == "pi":
        return math.pi
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_eval(node.left), _eval(node.right))
    raise ValueError("unsupported expression")


# --- configuration ----------------------------------------------------------


@dataclass
class DomainSpec:
    kind: str = "interval"
    lengths: tuple = (math.pi,)
    n_per_axis: tuple = (200,)
    metric_distortion: float = 0.0

    def mesh(self, n_per_axis=None) -> Mesh:
        n = self.n_per_axis if n_per_axis is None else n_per_axis
        if self.kind == "interval":
            return Mesh.interval(self.lengths[0], n[0], self.metric_distortion)
        return Mesh.rectangle(self.lengths[0], self.lengths[1], n[0], n[-1], self.metric_distortion)


@dataclass
class RunConfig:
    domain: DomainSpec = field(default_factory=DomainSpec)
    preset: str | None = None
    unitary_path: Path | None = None
    k: int = 5
    solver_tol: float = SOLVER_TOL
    dense_limit: int = DENSE_LIMIT
    delta_min: float = DELTA_MIN
    levels: tuple = ()
    sweep: dict = field(default_factory=dict)
    output: Path | None = None
    fmt: str = "csv"
    domain_given: bool = False

    def validate(self):
        d = self.domain
        if d.kind not in ("interval", "rectangle"):
            raise ConfigError(f"domain.kind: expected 'interval' or 'rectangle', got {d.kind!r}")
        dim = 1 if d.kind == "interval" else 2
        if len(d.lengths) != dim:
            raise ConfigError(f"domain.lengths: {d.kind} needs {dim} value(s), got {len(d.lengths)}")
        if any(n < 3 for n in d.n_per_axis):
            raise ConfigError(f"domain.n_per_axis: every entry must be >= 3, got {list(d.n_per_axis)}")
        if not 0 <= d.metric_distortion < 1:
            raise ConfigError(f"domain.metric_distortion: must lie in [0, 1), got {d.metric_distortion}")
        if self.k < 1:
            raise ConfigError(f"solver.k: must be >= 1, got {self.k}")
        if self.unitary_path is not None and not self.unitary_path.exists():
            raise ConfigError(f"boundary.unitary: file {str(self.unitary_path)!r} does not exist")
        if self.preset is not None and self.unitary_path is not None:
            raise ConfigError("boundary: give either a preset or a unitary file, not both")
        return self


def parse_domain(text: str) -> tuple[str, tuple]:
    """``interval:2pi`` or ``rectangle:2pi,pi``."""
    kind, _, rest = text.partition(":")
    kind = kind.strip()
    if kind not in ("interval", "rectangle"):
        raise ConfigError(f"--domain: unknown kind {kind!r}; use interval:<L> or rectangle:<Lx>,<Ly>")
    if not rest:
        return kind, (math.pi,) if kind == "interval" else (2 * math.pi, math.pi)
    return kind, tuple(parse_real(v) for v in rest.split(","))


def _int_list(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    if isinstance(text, int):
        return (text,)
    return tuple(int(v) for v in str(text).replace("x", ",").split(",") if v.strip())


_CONFIG_KEYS = {
    "domain": {"kind", "lengths", "n_per_axis", "metric_distortion"},
    "boundary": {"preset", "unitary", "delta_min"},
    "solver": {"k", "solver_tol", "dense_limit", "levels"},
    "output": {"path", "format"},
    "sweep": {"parameter", "values", "random", "seed", "gap", "max_norm", "dim"},
}


def load_config_file(path: Path) -> dict:
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {str(path)!r}: {exc.strerror}") from exc
    try:
        if path.suffix.lower() == ".json":
            doc = json.loads(raw)
        else:
            doc = tomllib.loads(raw.decode())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a table")
    for section, body in doc.items():
        if section not in _CONFIG_KEYS:
            raise ConfigError(f"{path}: unknown section {section!r}; expected one of {sorted(_CONFIG_KEYS)}")
        if not isinstance(body, dict):
            raise ConfigError(f"{path}: section {section!r} must be a table")
        unknown = set(body) - _CONFIG_KEYS[section]
        if unknown:
            raise ConfigError(f"{path}: unknown field(s) {section}.{sorted(unknown)[0]}")
    return doc


def config_from_dict(doc: dict, base_dir: Path) -> RunConfig:
    cfg = RunConfig()
    d = doc.get("domain", {})
    try:
        if "kind" in d:
            cfg.domain.kind = str(d["kind"])
            if "lengths" not in d:
                cfg.domain.lengths = (math.pi,) if cfg.domain.kind == "interval" else (2 * math.pi, math.pi)
        if "lengths" in d:
            vals = d["lengths"] if isinstance(d["lengths"], list) else [d["lengths"]]
            cfg.domain.lengths = tuple(parse_real(v) for v in vals)
        if "n_per_axis" in d:
            cfg.domain.n_per_axis = _int_list(d["n_per_axis"])
        if "metric_distortion" in d:
            cfg.domain.metric_distortion = parse_real(d["metric_distortion"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"domain: {exc}") from exc
    b = doc.get("boundary", {})
    if "preset" in b:
        cfg.preset = str(b["preset"])
    if "unitary" in b:
        cfg.unitary_path = (base_dir / str(b["unitary"])).resolve()
    if "delta_min" in b:
        cfg.delta_min = parse_real(b["delta_min"])
    s = doc.get("solver", {})
    for key, conv in (("k", int), ("solver_tol", parse_real), ("dense_limit", int)):
        if key in s:
            try:
                setattr(cfg, key, conv(s[key]))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"solver.{key}: {exc}") from exc
    if "levels" in s:
        cfg.levels = _int_list(s["levels"])
    o = doc.get("output", {})
    if "path" in o:
        cfg.output = base_dir / str(o["path"])
    if "format" in o:
        cfg.fmt = str(o["format"])
    cfg.sweep = dict(doc.get("sweep", {}))
    return cfg


def build_config(args: argparse.Namespace) -> RunConfig:
    if getattr(args, "config", None):
        path = Path(args.config)
        cfg = config_from_dict(load_config_file(path), path.parent)
    else:
        cfg = RunConfig()
    if getattr(args, "domain", None):
        cfg.domain.kind, cfg.domain.lengths = parse_domain(args.domain)
    if getattr(args, "n", None):
        cfg.domain.n_per_axis = _int_list(args.n)
    if getattr(args, "delta", None) is not None:
        cfg.domain.metric_distortion = args.delta
    if getattr(args, "preset", None):
        cfg.preset, cfg.unitary_path = args.preset, None
    if getattr(args, "unitary", None):
        cfg.unitary_path, cfg.preset = Path(args.unitary), None
    for name in ("k", "solver_tol", "dense_limit", "delta_min"):
        if getattr(args, name, None) is not None:
            setattr(cfg, name, getattr(args, name))
    if getattr(args, "levels", None):
        cfg.levels = _int_list(args.levels)
    if getattr(args, "output", None):
        cfg.output = Path(args.output)
    if getattr(args, "format", None):
        cfg.fmt = args.format
    if cfg.preset is None and cfg.unitary_path is None and not cfg.sweep.get("random"):
        cfg.preset = "dirichlet"
    return cfg.validate()


# --- helpers ----------------------------------------------------------------


def fmt(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".17g")


def worker_count(n_tasks: int) -> int:
    env = os.environ.get("LAPEXT_THREADS")
    try:
        cap = int(env) if env else (os.cpu_count() or 1)
    except ValueError:
        raise ConfigError(f"LAPEXT_THREADS={env!r} is not an integer")
    return max(1, min(cap, n_tasks))


def parallel_map(fn, items: list) -> list:
    """Ordered map over a bounded thread pool."""
    if len(items) <= 1 or worker_count(len(items)) == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=worker_count(len(items))) as pool:
        return list(pool.map(fn, items))


def load_unitary_json(path: Path):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        return decompose(matrix_from_json(doc.get("matrix", doc)))
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"{path}: not a unitary matrix document ({exc})") from exc


def build_unitary(cfg: RunConfig, mesh: Mesh, preset: str | None = None):
    if preset is not None or cfg.preset is not None:
        return preset_unitary(mesh, preset or cfg.preset, float_parser=parse_real)
    return load_unitary_json(cfg.unitary_path)


def write_text(cfg: RunConfig, text: str, suffix: str | None = None):
    if cfg.output is None:
        sys.stdout.write(text)
        return
    path = cfg.output if suffix is None else cfg.output.with_suffix(suffix)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def csv_text(header: list, rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _dump(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# --- subcommands -----------------------------------------------------------


def _solve_case(cfg: RunConfig, mesh: Mesh, preset: str | None = None, U=None):
    U = build_unitary(cfg, mesh, preset) if U is None else U
    system = assemble(mesh, U, cfg.delta_min)
    k = min(cfg.k, system.constrained_dim)
    spec = solve(system, k, dense_limit=cfg.dense_limit, solver_tol=cfg.solver_tol)
    return system, spec


def cmd_spectrum(args, cfg: RunConfig) -> int:
    mesh = cfg.domain.mesh()
    system, spec = _solve_case(cfg, mesh)
    cons = extension_consistency(spec, mesh, cfg.solver_tol)
    meta = dict(spec.metadata)
    meta.update(
        preset=cfg.preset,
        unitary_file=str(cfg.unitary_path) if cfg.unitary_path else None,
        k=spec.k,
        constrained_dim=system.constrained_dim,
        cayley_norm=system.cayley.norm,
        bound=verify_lower_bound(system, spec).to_json(),
        interior_residual_max=float(np.max(cons.residuals)),
        eigenvalues=[float(v) for v in spec.eigenvalues],
    )
    if args.compare and cfg.preset:
        exact = oracles.preset_spectrum(mesh, cfg.preset, spec.k, float_parser=parse_real)
        meta["analytic"] = None if exact is None else [float(v) for v in exact]
    rows = [(i, fmt(v), fmt(r)) for i, (v, r) in enumerate(zip(spec.eigenvalues, spec.residuals))]
    text = csv_text(["index", "eigenvalue", "residual"], rows)
    if cfg.output is None:
        sys.stdout.write(_dump(meta) if cfg.fmt == "json" else text)
    else:
        write_text(cfg, text)
        write_text(cfg, _dump(meta), ".json")
    return EXIT_OK


@dataclass(frozen=True)
class SweepPoint:
    label: str
    preset: str | None = None
    matrix: object = None


def sweep_points(cfg: RunConfig, mesh: Mesh) -> list[SweepPoint]:
    sw = cfg.sweep
    if sw.get("random"):
        rng = np.random.default_rng(int(sw.get("seed", 0)))
        gap = parse_real(sw.get("gap", 0.1))
        max_norm = parse_real(sw.get("max_norm", 5.0))
        n = mesh.n_boundary
        pts = []
        for i in range(int(sw["random"])):
            phases = random_phases(rng, n, gap=gap, max_cayley_norm=max_norm, n_minus_one=int(rng.integers(0, n // 2 + 1)))
            pts.append(SweepPoint(f"random[{i}]", matrix=random_unitary(rng, n, phases)))
        return pts
    if "parameter" in sw:
        if cfg.preset is None:
            raise ConfigError("sweep.parameter needs a boundary preset")
        name, params = parse_preset(cfg.preset)
        pts = []
        for v in sw.get("values", []):
            p = dict(params, **{sw["parameter"]: str(v)})
            body = ",".join(f"{k}=[{','.join(x)}]" if isinstance(x, list) else f"{k}={x}" for k, x in p.items())
            preset = f"{name}:{body}"
            pts.append(SweepPoint(f"{sw['parameter']}={v}", preset=preset))
        return pts
    return [SweepPoint(cfg.preset or str(cfg.unitary_path), preset=cfg.preset)]


def cmd_verify(args, cfg: RunConfig) -> int:
    if args.sweep:
        key, _, values = args.sweep.partition("=")
        cfg.sweep = {"parameter": key.strip(), "values": [v.strip() for v in values.split(",") if v.strip()]}
    if args.random:
        cfg.sweep = {"random": args.random, "seed": args.seed, "gap": args.gap, "max_norm": args.max_norm}
        cfg.preset = None
    mesh = cfg.domain.mesh()
    points = sweep_points(cfg, mesh)

    def run(pt: SweepPoint):
        U = decompose(pt.matrix) if pt.matrix is not None else build_unitary(cfg, mesh, pt.preset)
        system, spec = _solve_case(cfg, mesh, U=U)
        rep = verify_lower_bound(system, spec)
        cons = extension_consistency(spec, mesh, cfg.solver_tol)
        return pt, rep, spec, cons

    results = parallel_map(run, points)
    rows = []
    all_pass = True
    for pt, rep, spec, cons in results:
        ok = rep.passes and cons.passes
        all_pass &= ok
        neg = int(np.sum(spec.eigenvalues < -rep.slack))
        rows.append((pt.label, fmt(rep.min_eigenvalue), fmt(rep.bound), fmt(rep.slack), fmt(rep.c_eff), neg, int(rep.passes), int(cons.passes)))
    header = ["point", "min_eigenvalue", "bound", "slack", "c_eff", "negative_count", "bound_pass", "consistency_pass"]
    if cfg.fmt == "json":
        text = _dump([dict(zip(header, r)) for r in rows])
    else:
        text = csv_text(header, rows)
    write_text(cfg, text)
    if not all_pass:
        print(f"verify: {sum(1 for r in rows if not (r[6] and r[7]))} of {len(rows)} points failed", file=sys.stderr)
    return EXIT_OK if all_pass else EXIT_CONFIG


def richardson_orders(values: np.ndarray) -> np.ndarray:
    """Empirical order from the last three levels: ``log2 |v0 - v1| / |v1 - v2|``."""
    d1 = np.abs(values[-3] - values[-2])
    d2 = np.abs(values[-2] - values[-1])
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.log2(d1 / d2)
    return np.where(_resolved(d1, values[-1]) & _resolved(d2, values[-1]), p, np.nan)


def _resolved(diff, scale, tol: float = 1e-10) -> np.ndarray:
    """Differences above roundoff, so a ratio of them carries an order."""
    return diff > tol * np.maximum(1.0, np.abs(scale))


def cmd_convergence(args, cfg: RunConfig) -> int:
    levels = cfg.levels
    if len(levels) < 3:
        raise ConfigError(f"solver.levels: need at least 3 refinement levels, got {list(levels)}")
    dim = 1 if cfg.domain.kind == "interval" else 2
    meshes = [cfg.domain.mesh((n,) * dim) for n in levels]
    spectra = parallel_map(lambda m: _solve_case(cfg, m)[1], meshes)
    k = min(s.k for s in spectra)
    V = np.array([s.eigenvalues[:k] for s in spectra])
    orders = richardson_orders(V)
    exact = oracles.preset_spectrum(meshes[-1], cfg.preset, k, float_parser=parse_real) if cfg.preset else None
    header = ["index"] + [f"eigenvalue_n{n}" for n in levels] + ["order"]
    if exact is not None:
        header += ["analytic", "order_vs_analytic"]
        err = np.abs(V - exact[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            order_exact = np.where(_resolved(err[-2], exact) & _resolved(err[-1], exact), np.log2(err[-2] / err[-1]) / np.log2(levels[-1] / levels[-2]), np.nan)
    rows = []
    for i in range(k):
        row = [i] + [fmt(v) for v in V[:, i]] + [fmt(orders[i])]
        if exact is not None:
            row += [fmt(exact[i]), fmt(order_exact[i])]
        rows.append(row)
    write_text(cfg, csv_text(header, rows) if cfg.fmt == "csv" else _dump([dict(zip(header, r)) for r in rows]))
    return EXIT_OK


def cmd_robin1d(args, cfg: RunConfig) -> int:
    params = robin_1d.RobinParams(args.c, args.length)
    s = robin_1d.spectrum(params, args.count)
    rows = []
    res = list(s.residuals)
    if s.negative_eigenvalue is not None:
        mu = math.sqrt(-s.negative_eigenvalue)
        rows.append([fmt(mu), fmt(s.negative_eigenvalue), fmt(res.pop(0))])
    for lam2, r in zip(s.positive_eigenvalues, res):
        rows.append([fmt(math.sqrt(lam2)), fmt(lam2), fmt(r)])
    rows = [[i] + r for i, r in enumerate(rows[: args.count])]
    write_text(cfg, csv_text(["index", "lambda_or_mu", "Lambda", "residual"], rows))
    return EXIT_OK


def _unitary_and_mesh(cfg: RunConfig):
    if cfg.unitary_path is not None and not cfg.domain_given:
        U = load_unitary_json(cfg.unitary_path)
        return U, BoundaryMesh.circle(U.dim)
    mesh = cfg.domain.mesh()
    return build_unitary(cfg, mesh), mesh.boundary_mesh()


def cmd_gap(args, cfg: RunConfig) -> int:
    U, _ = _unitary_and_mesh(cfg)
    rep = gap_report(U, cfg.delta_min)
    doc = rep.to_json()
    doc.update(delta_min=cfg.delta_min, dim=U.dim, unitarity_defect=U.unitarity_defect(), fingerprint=unitary_fingerprint(U))
    write_text(cfg, _dump(doc))
    return EXIT_OK if rep.passes else EXIT_NOGAP


def cmd_cayley(args, cfg: RunConfig) -> int:
    U, bmesh = _unitary_and_mesh(cfg)
    A = partial_cayley(U, cfg.delta_min)
    evals = np.linalg.eigvalsh(A.matrix)
    doc = {
        "dim": U.dim,
        "rank_P": int(round(np.real(np.trace(A.projector_P)))),
        "norm": A.norm,
        "eigenvalues": [float(v) for v in evals],
        "admissibility_norm_global": admissibility_norm(A, bmesh),
        "admissibility_norm_per_element": admissibility_norm(A, bmesh, per_element=True) if bmesh.elements else None,
        "fingerprint": unitary_fingerprint(U),
    }
    write_text(cfg, _dump(doc))
    return EXIT_OK


def cmd_unitary(args, cfg: RunConfig) -> int:
    U = build_unitary(cfg, cfg.domain.mesh())
    write_text(cfg, _dump(U.to_json()))
    return EXIT_OK


def cmd_isotropy_check(args, cfg: RunConfig) -> int:
    path = Path(args.file)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {str(path)!r}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        W = subspace_from_json(doc)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{path}: not a subspace document (missing {exc})") from exc
    write_text(cfg, _dump(property_report(W)))
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, boundary: bool = True):
    p.add_argument("--config", help="TOML or JSON run configuration")
    p.add_argument("--domain", help="interval:<L> or rectangle:<Lx>,<Ly> (e.g. rectangle:2pi,pi)")
    p.add_argument("--n", help="cells per axis: 800, or 128,64 for a rectangle")
    p.add_argument("--delta", type=float, help="piecewise-constant metric distortion in [0, 1)")
    if boundary:
        g = p.add_mutually_exclusive_group()
        g.add_argument("--preset", help="periodic, quasiperiodic:alpha=1, robin:c=1, zaremba:dirichlet=left, ...")
        g.add_argument("--unitary", help="path to a unitary matrix JSON document")
        p.add_argument("--delta-min", type=float, dest="delta_min", help="minimum gap width at -1")
    p.add_argument("--output", "-o", help="output path (stdout when absent)")
    p.add_argument("--format", choices=["csv", "json"])


def _add_solver(p: argparse.ArgumentParser):
    p.add_argument("--k", type=int, help="number of eigenvalues")
    p.add_argument("--solver-tol", type=float, dest="solver_tol")
    p.add_argument("--dense-limit", type=int, dest="dense_limit")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lapext", description="Self-adjoint extensions of the Laplacian from boundary unitaries.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="lowest eigenvalues of Q_U on a mesh")
    _add_common(p)
    _add_solver(p)
    p.add_argument("--compare", action="store_true", help="include analytic eigenvalues in the JSON metadata")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("verify", help="semi-boundedness reports over a sweep")
    _add_common(p)
    _add_solver(p)
    p.add_argument("--sweep", help="preset parameter sweep, e.g. c=-2,-1,0,1,2")
    p.add_argument("--random", type=int, help="number of random admissible unitaries")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gap", type=float, default=0.1)
    p.add_argument("--max-norm", type=float, default=5.0, dest="max_norm")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("convergence", help="empirical order of convergence under refinement")
    _add_common(p)
    _add_solver(p)
    p.add_argument("--levels", help="cells per axis at each level, e.g. 200,400,800")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("robin1d", help="transcendental spectrum of the reference Robin interval")
    p.add_argument("--c", type=parse_real, required=True)
    p.add_argument("--length", type=parse_real, default=2 * math.pi)
    p.add_argument("--count", type=int, default=5)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_robin1d)

    p = sub.add_parser("gap", help="gap-at-minus-one report")
    _add_common(p)
    p.set_defaults(func=cmd_gap)

    p = sub.add_parser("cayley", help="partial Cayley transform and admissibility norms")
    _add_common(p)
    p.set_defaults(func=cmd_cayley)

    p = sub.add_parser("unitary", help="expand a preset into a unitary JSON document")
    _add_common(p)
    p.set_defaults(func=cmd_unitary)

    p = sub.add_parser("isotropy", help="isotropy tools")
    isub = p.add_subparsers(dest="isotropy_command", required=True)
    q = isub.add_parser("check", help="property report for a JSON subspace")
    q.add_argument("file")
    q.add_argument("--output", "-o")
    q.set_defaults(func=cmd_isotropy_check)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in ("robin1d", "isotropy"):
            cfg = RunConfig(output=Path(args.output) if args.output else None)
            if args.command == "robin1d" and args.count < 1:
                raise ConfigError(f"--count must be >= 1, got {args.count}")
        else:
            cfg = build_config(args)
            cfg.domain_given = bool(args.domain or args.config)
        return args.func(args, cfg)
    except NoGap as exc:
        print(f"lapext: no gap at -1: {exc}", file=sys.stderr)
        return EXIT_NOGAP
    except SolverFailure as exc:
        print(f"lapext: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigError, LapextError, ValueError) as exc:
        print(f"lapext: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
