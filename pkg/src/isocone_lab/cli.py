"""Command-line entry point: ``isocone-lab <command> [options]``.

Every command writes its files into ``--out`` and echoes the seed into each
output. Exit status is 0 for success or a valid object, 1 for a validation
failure (the report is still written) and 2 for unusable input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .carrier import LhcError, LocalIsoconeMap, build_selection, check_lhc, is_selection, mesh_size
from .isocone_fd import (
    AlgebraElement,
    ElementSet,
    LexIsocone,
    SitedPureState,
    empirical_order,
    induced_order,
    lex_membership,
    sample_elements,
)
from .hermitian import HermitianMatrix, PureStateVector
from .lorentz import LorentzPatch, euclidean_distances, lambda_boundary_mask, lambda_order, lambda_order_from_table
from .multicomponent import MAX_ENUM_K, LambdaSystem, enumerate_valid_tables, validate_rules
from .order_core import (
    CycleError,
    MetricPointCloud,
    epsilon_cutoff,
    incomparability_balls,
    levin_utility,
    transitive_closure,
    validate_order,
)
from .qubit_geometry import CapRegion, MAX_MESH_DEG, TIE_TOL, order_margins, qubit_order, uniform_sphere

EXIT_OK, EXIT_INVALID, EXIT_USAGE = 0, 1, 2
THREADS_ENV = "ISOCONE_LAB_THREADS"
DEFAULT_BOX = "0,4;-2,2"


class UsageError(Exception):
    """Bad input or arguments; maps to exit status 2."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    input_paths: tuple[Path, ...]
    seed: int
    tolerances: dict[str, float] = field(default_factory=dict)
    output_dir: Path = Path(".")
    mesh_deg: float = 1.0

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise UsageError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        for name, v in self.tolerances.items():
            if not (v >= 0 and math.isfinite(v)):
                raise UsageError(f"tolerance {name} must be finite and >= 0, got {v}")
        if not (0 < self.mesh_deg <= MAX_MESH_DEG):
            raise UsageError(f"--mesh-deg must lie in (0, {MAX_MESH_DEG}]")

    def tol(self, default: float) -> float:
        return self.tolerances.get("tol", default)

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def path(self, name: str) -> Path:
        return self.output_dir / name


def worker_count(jobs: int) -> int:
    cap = os.environ.get(THREADS_ENV)
    limit = os.cpu_count() or 1
    if cap:
        try:
            limit = max(1, int(cap))
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be a positive integer, got {cap!r}") from None
    return max(1, min(jobs, limit))


# ---------------------------------------------------------------- io helpers


def _read_text(path: Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None


def _read_json(path: Path):
    text = _read_text(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None


def _dump_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


def _write_csv(path: Path, config: RunConfig, columns: list[str], rows: list[list], notes: list[str] = ()) -> None:
    buf = io.StringIO()
    buf.write(f"# isocone-lab {config.command} seed={config.seed}\n")
    for note in notes:
        buf.write(f"# {note}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def _header(config: RunConfig) -> dict:
    return {"command": config.command, "seed": config.seed, "version": __version__}


def _vector(text: str, n: int = 3) -> np.ndarray:
    try:
        v = np.array([float(s) for s in text.split(",")])
    except ValueError:
        raise UsageError(f"expected {n} comma-separated numbers, got {text!r}") from None
    if v.shape != (n,):
        raise UsageError(f"expected {n} comma-separated numbers, got {text!r}")
    return v


def _box(text: str) -> np.ndarray:
    try:
        box = np.array([[float(s) for s in part.split(",")] for part in text.split(";")])
    except ValueError:
        raise UsageError(f"bad box {text!r}; expected 't0,t1;x0,x1;...'") from None
    if box.ndim != 2 or box.shape[1] != 2 or box.shape[0] < 2 or np.any(box[:, 1] <= box[:, 0]):
        raise UsageError(f"bad box {text!r}; expected 't0,t1;x0,x1;...' with low < high")
    return box


# ---------------------------------------------------------------- commands


def cmd_validate_order(config: RunConfig, args) -> int:
    data = _read_json(config.input_paths[0])
    out = _header(config)
    if isinstance(data, dict) and "partition" in data:
        try:
            system = LambdaSystem.from_json(data)
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"malformed Lambda system: {exc}") from None
        report = validate_rules(system)
        out.update(kind="lambda-system", system=system.to_json(), report=report.to_json())
        text = f"seed={config.seed}\nLambda system, profile {list(system.profile)}\n"
        text += system.format_tables() + "\n\n" + report.summary() + "\n"
        text += "result: " + ("valid" if report.passed else "INVALID") + "\n"
        ok = report.passed
    else:
        try:
            size = int(data["size"])
            pairs = [tuple(int(v) for v in p) for p in data["strict"]]
            if size < 0 or any(len(p) != 2 for p in pairs):
                raise ValueError("pairs must have two entries and size must be >= 0")
            report = validate_order(pairs, size)
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise UsageError(f"malformed order: {exc}") from None
        out.update(kind="order", report=report.to_json())
        text = f"seed={config.seed}\n{report.summary()}\n"
        try:
            transitive_closure(pairs, size)
        except CycleError as exc:
            out["cycle"] = exc.cycle
            text += "cycle witness: " + " -> ".join(map(str, exc.cycle)) + "\n"
        ok = report.valid
    _dump_json(config.path("validate-order.json"), out)
    config.path("validate-order.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_INVALID


def _load_cap(data) -> CapRegion:
    try:
        return CapRegion.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed cap region: {exc}") from None


def cmd_qubit_order(config: RunConfig, args) -> int:
    data = _read_json(config.input_paths[0])
    if not isinstance(data, dict) or "cap" not in data:
        raise UsageError("qubit-order input needs a 'cap' entry")
    cap = _load_cap(data["cap"])
    try:
        pairs = [(np.asarray(p, dtype=float), np.asarray(q, dtype=float)) for p, q in data.get("pairs", [])]
    except (TypeError, ValueError) as exc:
        raise UsageError(f"malformed pairs: {exc}") from None
    for p, q in pairs:
        for v in (p, q):
            if v.shape != (3,) or abs(np.linalg.norm(v) - 1) > 1e-9:
                raise UsageError(f"pair entries must be unit Bloch vectors, got {v.tolist()}")
    if args.random_pairs:
        pts = uniform_sphere(2 * args.random_pairs, config.rng())
        pairs += [(pts[2 * i], pts[2 * i + 1]) for i in range(args.random_pairs)]
    tol = config.tol(TIE_TOL)
    rows = []
    for i, (p, q) in enumerate(pairs):
        rel = qubit_order(cap, p, q, config.mesh_deg, tol)
        le, ge = order_margins(cap, p, q, config.mesh_deg)
        rows.append([i, *p, *q, rel.value, le, ge])
    cols = ["pair", "p_x", "p_y", "p_z", "q_x", "q_y", "q_z", "relation", "le_margin", "ge_margin"]
    notes = [
        f"mesh_deg={config.mesh_deg!r} tie_tol={tol!r}",
        "relation compares p with q; le_margin = min over the cap mesh of <u, q - p>, ge_margin = min of <u, p - q>",
    ]
    _write_csv(config.path("qubit-order.csv"), config, cols, rows, notes)
    counts = {}
    for r in rows:
        counts[r[7]] = counts.get(r[7], 0) + 1
    print(f"seed={config.seed} pairs={len(rows)} " + " ".join(f"{k}={counts[k]}" for k in sorted(counts)))
    return EXIT_OK


def _load_lex(data) -> LexIsocone:
    try:
        return LexIsocone.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed isocone: {exc}") from None


def _random_state(rng: np.random.Generator, lex: LexIsocone) -> SitedPureState:
    site = int(rng.integers(lex.sites))
    return SitedPureState(site, PureStateVector.random(lex.profile[site], rng))


def cmd_lex_check(config: RunConfig, args) -> int:
    data = _read_json(config.input_paths[0])
    if not isinstance(data, dict) or "isocone" not in data:
        raise UsageError("lex-check input needs an 'isocone' entry")
    lex = _load_lex(data["isocone"])
    tol = config.tol(1e-9)
    try:
        given = [AlgebraElement(tuple(HermitianMatrix.from_json(b) for b in e)) for e in data.get("elements", [])]
        memberships = [lex_membership(a, lex, tol) for a in given]
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed element: {exc}") from None
    rows = [[i, bool(m), "" if m.witness is None else ":".join(map(str, m.witness))] for i, m in enumerate(memberships)]
    _write_csv(
        config.path("lex-check.csv"),
        config,
        ["element", "member", "witness"],
        rows,
        [f"tol={tol!r}", "witness is block:x (local cone) or gap:x:y (spectral gap on a strict pair)"],
    )
    out = _header(config)
    out.update(isocone=lex.to_json(), elements=len(given), members=sum(bool(m) for m in memberships))
    if args.pairs:
        rng = config.rng()
        elems = ElementSet(sample_elements(lex, args.samples, seed=int(rng.integers(2**63)), mesh_deg=config.mesh_deg))
        agree = 0
        mismatches = []
        for _ in range(args.pairs):
            s, t = _random_state(rng, lex), _random_state(rng, lex)
            emp = empirical_order(elems, s, t, tol)
            ind = induced_order(lex, s, t, config.mesh_deg)
            if emp == ind:
                agree += 1
            elif len(mismatches) < 10:
                mismatches.append({"sites": [s.site, t.site], "empirical": emp.value, "induced": ind.value})
        out["agreement"] = {"sampled_elements": len(elems), "pairs": args.pairs, "agree": agree, "mismatches": mismatches}
    _dump_json(config.path("lex-check.json"), out)
    ok = all(memberships) and ("agreement" not in out or out["agreement"]["agree"] == args.pairs)
    line = f"seed={config.seed} members={out['members']}/{len(given)}"
    if "agreement" in out:
        line += f" agreement={out['agreement']['agree']}/{args.pairs}"
    print(line)
    return EXIT_OK if ok else EXIT_INVALID


def _experiment_row(patch: LorentzPatch, lam: float, tol: float, table: np.ndarray | None):
    if table is None:
        order = lambda_order(patch, lam)
    else:
        order = lambda_order_from_table(table, patch.points[:, 0], lam)
    cloud = MetricPointCloud(patch.points, euclidean_distances(patch))
    eps = epsilon_cutoff(cloud, order)
    balls = incomparability_balls(cloud, order)
    n = patch.size
    total = n * (n - 1) // 2
    strict = order.pair_count
    boundary = int(np.count_nonzero(lambda_boundary_mask(patch, lam, tol))) // 2 if table is None else 0
    return order, balls, [n, patch.dim, lam, strict, total, strict / total if total else 0.0, eps, bool(eps >= lam), boundary]


def cmd_lambda_experiment(config: RunConfig, args) -> int:
    lams = []
    for s in args.lam.split(","):
        try:
            lams.append(float(s))
        except ValueError:
            raise UsageError(f"bad Lambda value {s!r}") from None
    if not lams or any(not (v > 0 and math.isfinite(v)) for v in lams):
        raise UsageError("Lambda must be > 0")
    if args.repeats < 1:
        raise UsageError("--repeats must be >= 1")
    tol = config.tol(1e-9)
    table = None
    if config.input_paths:
        path = config.input_paths[0]
        text = _read_text(path)
        try:
            base = LorentzPatch.from_json(json.loads(text)) if path.suffix == ".json" else LorentzPatch.from_csv(text)
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"malformed patch {path}: {exc}") from None
        patches = [base] * args.repeats
        if args.distance_table:
            try:
                table = np.loadtxt(args.distance_table, delimiter=",", ndmin=2)
            except (OSError, ValueError) as exc:
                raise UsageError(f"cannot load distance table: {exc}") from None
            if table.shape != (base.size, base.size):
                raise UsageError(f"distance table shape {table.shape} does not match {base.size} points")
    else:
        if args.n < 2:
            raise UsageError("--n must be >= 2")
        box = _box(args.box)
        seeds = config.rng().integers(2**63, size=args.repeats)
        patches = [LorentzPatch.sprinkle(args.n, box, int(s)) for s in seeds]
    jobs = [(r, lam) for r in range(args.repeats) for lam in lams]
    with ThreadPoolExecutor(max_workers=worker_count(len(jobs))) as pool:
        results = list(pool.map(lambda j: _experiment_row(patches[j[0]], j[1], tol, table), jobs))
    rows = [[r, *res[2]] for (r, _), res in zip(jobs, results)]
    cols = [
        "replicate", "n", "dim", "lambda", "strict_pairs", "total_pairs",
        "comparability_fraction", "epsilon0", "epsilon0_ge_lambda", "boundary_pairs",
    ]
    notes = [
        "replicate: patch index (sprinkled from a child seed of the run seed, or the input patch)",
        "strict_pairs: pairs x<y of the Lambda order; total_pairs: N(N-1)/2; comparability_fraction = strict/total",
        "epsilon0: min Euclidean distance over strictly related pairs (inf if none)",
        f"boundary_pairs: unordered pairs within {tol!r} of the cone boundary",
    ]
    _write_csv(config.path("lambda-experiment.csv"), config, cols, rows, notes)

    from .plotting import epsilon_histogram, order_scatter

    order, balls, first = results[0]
    title = f"N={first[0]}, Λ={first[2]:g}, seed={config.seed}"
    order_scatter(patches[0].points, levin_utility(order).values, config.path("lambda-order.svg"), title)
    epsilon_histogram(balls, first[2], config.path("lambda-epsilon.svg"), title)
    for row in rows:
        print(f"replicate={row[0]} lambda={row[3]:g} strict={row[4]} eps0={_fmt(row[7])}")
    return EXIT_OK


def _format_enumeration(systems: list[LambdaSystem], config: RunConfig, profile) -> str:
    blocks = [f"seed={config.seed} profile={list(profile)} valid tables={len(systems)}"]
    for i, s in enumerate(systems):
        blocks.append(f"[{i}] nonzero Λ: {int(np.count_nonzero(s.lam))}\n{s.format_tables()}")
    return "\n\n".join(blocks) + "\n"


def cmd_enumerate_tables(config: RunConfig, args) -> int:
    try:
        profile = tuple(int(v) for v in args.profile.split(","))
    except ValueError:
        raise UsageError(f"bad profile {args.profile!r}") from None
    if len(profile) > MAX_ENUM_K:
        raise UsageError(f"K={len(profile)} exceeds the enumeration limit K <= {MAX_ENUM_K}")
    if any(n < 1 for n in profile) or not (args.level > 0):
        raise UsageError("profile entries and --level must be positive")
    systems = enumerate_valid_tables(profile, args.level)
    out = _header(config)
    out.update(profile=list(profile), level=args.level, count=len(systems), tables=[s.to_json() for s in systems])
    _dump_json(config.path("enumerate-tables.json"), out)
    config.path("enumerate-tables.txt").write_text(_format_enumeration(systems, config, profile), encoding="utf-8")
    print(f"seed={config.seed} profile={list(profile)} count={len(systems)}")
    return EXIT_OK


def _load_map(path: Path) -> LocalIsoconeMap:
    data = _read_json(path)
    try:
        return LocalIsoconeMap.from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed local isocone map: {exc}") from None


def _radius(args, lmap: LocalIsoconeMap) -> float:
    default = mesh_size(lmap.cloud) * (1 + 1e-6)
    r = default if args.radius is None else args.radius
    if r < mesh_size(lmap.cloud):
        raise UsageError(f"--radius {r} is below the cloud mesh size {mesh_size(lmap.cloud)}")
    return r


def cmd_check_lhc(config: RunConfig, args) -> int:
    lmap = _load_map(config.input_paths[0])
    radius = _radius(args, lmap)
    result = check_lhc(lmap, radius, config.mesh_deg)
    out = _header(config)
    out.update(radius=radius, direction_mesh_deg=config.mesh_deg, **result.to_json())
    _dump_json(config.path("check-lhc.json"), out)
    caps = lmap.caps
    if lmap.cloud.points.shape[1] == 1 and all(c.whole or c.is_single_cap for c in caps):
        from .plotting import cap_map_plot

        radii = np.array([180.0 if c.whole else math.degrees(math.acos(float(c.offsets[0]))) for c in caps])
        cap_map_plot(lmap.cloud.points[:, 0], radii, config.path("check-lhc.svg"), result.point, f"seed={config.seed}")
    msg = "Pass" if result else f"Fail at point {result.point} (neighbour {result.neighbor}, gap {result.gap_deg:.3f} deg)"
    print(f"seed={config.seed} {msg}")
    return EXIT_OK if result else EXIT_INVALID


def cmd_build_selection(config: RunConfig, args) -> int:
    lmap = _load_map(config.input_paths[0])
    direction = _vector(args.direction)
    if np.linalg.norm(direction) == 0:
        raise UsageError("--direction must be non-zero")
    out = _header(config)
    try:
        sel = build_selection(lmap, direction, config.mesh_deg)
    except LhcError as exc:
        out.update(error=str(exc), lhc=exc.result.to_json())
        _dump_json(config.path("build-selection.json"), out)
        print(f"seed={config.seed} {exc}")
        return EXIT_INVALID
    member = is_selection(lmap, sel, config.tol(1e-9))
    out.update(radius=sel.radius, lipschitz=sel.lipschitz, pointwise_member=member, values=sel.to_json())
    _dump_json(config.path("build-selection.json"), out)
    print(f"seed={config.seed} points={len(sel.values)} lipschitz={sel.lipschitz!r} member={member}")
    return EXIT_OK if member else EXIT_INVALID


COMMANDS = {
    "validate-order": cmd_validate_order,
    "qubit-order": cmd_qubit_order,
    "lex-check": cmd_lex_check,
    "lambda-experiment": cmd_lambda_experiment,
    "enumerate-tables": cmd_enumerate_tables,
    "check-lhc": cmd_check_lhc,
    "build-selection": cmd_build_selection,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed of the run's random generator (default 0)")
    common.add_argument("--tol", type=float, default=None, help="override the command's tie/membership tolerance (>= 0)")
    common.add_argument("--mesh-deg", type=float, default=1.0, help="angular mesh in degrees for Bloch-sphere tests (<= 2)")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory (created if missing)")

    parser = argparse.ArgumentParser(prog="isocone-lab", description="Causal orders from isocones: construction and checks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate-order", parents=[common], help="check a strict order or a Lambda system")
    p.add_argument("input", type=Path, help='order JSON {"size","strict"} or system JSON {"profile","partition","lambda"}')

    p = sub.add_parser("qubit-order", parents=[common], help="compare Bloch points under a cap order")
    p.add_argument("input", type=Path, help='JSON {"cap": ..., "pairs": [[p, q], ...]}')
    p.add_argument("--random-pairs", type=int, default=0, help="also compare this many seeded random pairs")

    p = sub.add_parser("lex-check", parents=[common], help="membership in a lexicographic isocone")
    p.add_argument("input", type=Path, help='JSON {"isocone": ..., "elements": [...]}')
    p.add_argument("--pairs", type=int, default=0, help="random state pairs for the empirical-vs-induced order check")
    p.add_argument("--samples", type=int, default=200, help="random elements drawn for the order check")

    p = sub.add_parser("lambda-experiment", parents=[common], help="Lambda-order statistics on sprinkled patches")
    p.add_argument("input", type=Path, nargs="?", help="patch CSV or JSON (default: sprinkle)")
    p.add_argument("--lam", default="0.5", help="comma-separated Lambda values (> 0)")
    p.add_argument("--n", type=int, default=2000, help="points per sprinkled patch")
    p.add_argument("--box", default=DEFAULT_BOX, help="bounding box 't0,t1;x0,x1;...'")
    p.add_argument("--repeats", type=int, default=1, help="number of sprinkled patches")
    p.add_argument("--distance-table", type=Path, default=None, help="CSV table of Lorentzian distances for the input patch")

    p = sub.add_parser("enumerate-tables", parents=[common], help="all valid two-level Lambda systems for a profile")
    p.add_argument("--profile", required=True, help="comma-separated block sizes, K <= 4")
    p.add_argument("--level", type=float, default=1.0, help="non-zero Lambda level")

    p = sub.add_parser("check-lhc", parents=[common], help="finite lower hemi-continuity of a map of caps")
    p.add_argument("input", type=Path, help="local isocone map JSON")
    p.add_argument("--radius", type=float, default=None, help="neighbourhood radius (default: cloud mesh size)")

    p = sub.add_parser("build-selection", parents=[common], help="selection through a map of caps")
    p.add_argument("input", type=Path, help="local isocone map JSON")
    p.add_argument("--direction", default="0,0,1", help="seed Bloch direction 'x,y,z'")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    inputs = tuple(p for p in [getattr(args, "input", None)] if p is not None)
    try:
        config = RunConfig(
            command=args.command,
            input_paths=inputs,
            seed=args.seed,
            tolerances={} if args.tol is None else {"tol": args.tol},
            output_dir=args.out,
            mesh_deg=args.mesh_deg,
        )
        config.output_dir.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](config, args)
    except UsageError as exc:
        print(f"isocone-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
