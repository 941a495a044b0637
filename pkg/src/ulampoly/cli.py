"""Command-line driver.

Every command prints (or writes) a JSON document with a top-level
``"schema": 1`` key and sorted keys, so identical arguments give
byte-identical output.  Exit codes: 0 all checks passed, 1 a numeric
check failed, 2 path tracking failed, 3 inadmissible input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import BACKEND
from .dynamics import InadmissibleEquilibrium, check_admissible, integrate, random_perturbations, stability_probe
from .homotopy import (
    CLUSTER_RADIUS,
    TrackingError,
    intersection_records,
    record_to_dict,
    solve_system,
)
from .hypergeometric import RigidityGrid, recurrence_coeffs, HyperParams, eigen_residual, ulam_rigidity_check
from .ulam_map import (
    IDENTITY_TOL,
    ResidualSystem,
    pad_check,
    residual,
    ulam_map,
    verify_equivalent_system,
    verify_identities,
    zero_tail_ok,
)

SCHEMA = 1
OUT_DIR_ENV = "ULAMPOLY_OUT_DIR"
EXPECTED_COUNTS = {1: 1, 2: 2, 3: 6, 4: 23, 5: 119}
EXPECTED_TILDE = {2: 1, 3: 4, 4: 18, 5: 96}
EXPECTED_INTERSECTIONS = {2: 0, 3: 0, 4: 1, 5: 0}

EXIT_OK, EXIT_CHECK, EXIT_TRACKING, EXIT_INADMISSIBLE = 0, 1, 2, 3


@dataclass
class RunConfig:
    command: str
    n: int | None = None
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    output_path: str | None = None
    format: str = "json"

    def __post_init__(self):
        for name, v in self.tolerances.items():
            if not v > 0:
                raise ValueError(f"tolerance {name} must be positive")


def _dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _default_path(cfg: RunConfig, suffix: str) -> Path | None:
    if cfg.output_path:
        return Path(cfg.output_path)
    out_dir = os.environ.get(OUT_DIR_ENV)
    if not out_dir:
        return None
    stem = cfg.command if cfg.n is None else f"{cfg.command}_n{cfg.n}"
    return Path(out_dir) / f"{stem}_seed{cfg.seed}.{suffix}"


def _emit(cfg: RunConfig, text: str, suffix: str = "json"):
    path = _default_path(cfg, suffix)
    if path is None:
        sys.stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")


def _envelope(cfg: RunConfig, body: dict, ok: bool) -> dict:
    return {"schema": SCHEMA, "command": cfg.command, "backend": BACKEND,
            "version": __version__, "config": asdict(cfg), "ok": ok, **body}


def _cpairs(v):
    return [[float(z.real), float(z.imag)] for z in v]


def records_csv(sols) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n = sols.n
    w.writerow(["index", "cluster_size", "residual", "zero_tail", "is_real"]
               + [f"{part}_{k}" for k in range(1, n + 1) for part in ("re", "im")])
    for i, r in enumerate(sols.records):
        w.writerow([i, r.cluster_size, repr(r.residual), r.zero_tail, int(r.is_real)]
                   + [repr(float(v)) for z in r.point for v in (z.real, z.imag)])
    return buf.getvalue()


def cmd_enumerate(cfg: RunConfig) -> int:
    try:
        sols = solve_system(cfg.n, ResidualSystem.FULL, cfg.seed,
                            cluster_radius=cfg.tolerances.get("cluster", CLUSTER_RADIUS))
    except TrackingError as exc:
        _emit(cfg, _dumps(_envelope(cfg, {"error": str(exc)}, False)))
        return EXIT_TRACKING
    if cfg.format == "csv":
        _emit(cfg, records_csv(sols), "csv")
    else:
        _emit(cfg, _dumps(_envelope(cfg, {"solution_set": sols.to_dict()}, True)))
    return EXIT_OK


def _solve_pair(n, seed, cluster):
    full = solve_system(n, ResidualSystem.FULL, seed, cluster_radius=cluster)
    tilde = solve_system(n, ResidualSystem.TILDE, seed, cluster_radius=cluster) if n >= 2 else None
    return full, tilde


def _count_table(max_n, seed, cluster):
    """Per-N counts from direct FULL solves and from the inclusion-exclusion recursion."""
    rows = []
    u_prev = None
    for n in range(1, max_n + 1):
        full, tilde = _solve_pair(n, seed, cluster)
        row = {"n": n, "u_direct": len(full), "at_infinity": full.at_infinity_count,
               "multiplicity_pattern": full.multiplicity_pattern,
               "paths": full.path_count, "accounted": full.accounted_paths() == full.path_count}
        if tilde is None:
            row.update(u_n=1, v_tilde=None, v_zero=None, intersection=None)
        else:
            inter = intersection_records(tilde)
            row.update(u_n=u_prev + len(tilde) - len(inter), v_tilde=len(tilde), v_zero=u_prev,
                       intersection=len(inter), tilde_paths=tilde.path_count,
                       tilde_at_infinity=tilde.at_infinity_count,
                       intersection_points=[_cpairs(r.point) for r in inter])
            row["accounted"] = row["accounted"] and tilde.accounted_paths() == tilde.path_count
        row["consistent"] = row["u_n"] == row["u_direct"]
        u_prev = row["u_n"]
        rows.append(row)
    return rows


def cmd_count(cfg: RunConfig) -> int:
    try:
        rows = _count_table(cfg.n, cfg.seed, cfg.tolerances.get("cluster", CLUSTER_RADIUS))
    except TrackingError as exc:
        _emit(cfg, _dumps(_envelope(cfg, {"error": str(exc)}, False)))
        return EXIT_TRACKING
    last = rows[-1]
    counts = {k: last[k] for k in ("n", "u_n", "v_tilde", "v_zero", "intersection")}
    counts["direct_full"] = last["u_direct"]
    ok = all(r["consistent"] and r["accounted"] and r["at_infinity"] == 0 for r in rows)
    sys.stderr.write(f"N={cfg.n}: inclusion-exclusion {last['u_n']} vs direct enumeration "
                     f"{last['u_direct']} -> {'match' if last['consistent'] else 'MISMATCH'}\n")
    if cfg.format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(counts), lineterminator="\n")
        w.writeheader()
        w.writerow(counts)
        _emit(cfg, buf.getvalue(), "csv")
    else:
        _emit(cfg, _dumps(_envelope(cfg, {"counts": counts, "recursion": rows}, ok)))
    return EXIT_OK if ok else EXIT_CHECK


def verify_solution_set(sols, seed: int, tol: float = IDENTITY_TOL) -> dict:
    """Identity, equivalence, padding and zero-tail checks over every record."""
    rng = np.random.default_rng(seed)
    n = sols.n
    per_record = []
    all_ok = True
    for r in sols.records:
        g = r.point
        idem = float(np.max(np.abs(ulam_map(g) - g)))
        ident = verify_identities(g, tol)
        nodes = rng.uniform(-1, 1, n) + 1j * rng.uniform(-1, 1, n)
        eq1 = verify_equivalent_system(g, nodes, 1, tol)
        eq2 = verify_equivalent_system(g, nodes, 2, tol)
        pad = pad_check(g, 1)
        tail = zero_tail_ok(g)
        ok = idem <= 1e-9 and ident.passed(tol) and eq1 and eq2 and pad and tail
        all_ok &= ok
        per_record.append({"point": _cpairs(g), "idempotence": idem,
                           "identities": ident.to_dict(), "syst1": eq1, "syst2": eq2,
                           "pad": pad, "zero_tail_ok": tail, "ok": ok})
    stein = None
    if n >= 5:
        stein = not any(r.is_real and r.all_nonzero() for r in sols.records)
        all_ok &= stein
    skipped = sum(1 for p in per_record if p["identities"]["skipped"])
    return {"n": n, "record_count": len(sols.records), "all_passed": bool(all_ok),
            "repeated_entry_skips": skipped, "stein_property": stein,
            "at_infinity_count": sols.at_infinity_count, "records": per_record}


def cmd_verify(cfg: RunConfig) -> int:
    try:
        sols = solve_system(cfg.n, ResidualSystem.FULL, cfg.seed,
                            cluster_radius=cfg.tolerances.get("cluster", CLUSTER_RADIUS))
    except TrackingError as exc:
        _emit(cfg, _dumps(_envelope(cfg, {"error": str(exc)}, False)))
        return EXIT_TRACKING
    body = verify_solution_set(sols, cfg.seed, cfg.tolerances.get("residual", IDENTITY_TOL))
    ok = body["all_passed"] and sols.at_infinity_count == 0
    _emit(cfg, _dumps(_envelope(cfg, {"verification": body}, ok)))
    return EXIT_OK if ok else EXIT_CHECK


def cmd_eigencheck(cfg: RunConfig, grid_name: str) -> int:
    grid = RigidityGrid.preset(grid_name)
    grid.seed = cfg.seed
    report = ulam_rigidity_check(grid, tol=cfg.tolerances.get("residual", 1e-8))
    trivial = max(eigen_residual(recurrence_coeffs(HyperParams(a), n), HyperParams(a),
                                 np.exp(2j * np.pi * np.arange(20) / 20) * 0.9)
                  for a in grid.alphas for n in range(0, 11)
                  if HyperParams(a).eigenvalues_injective(n))
    body = {"grid": grid_name, "rigidity": report.to_dict(), "trivial_family_residual": trivial}
    ok = report.passed and trivial <= 1e-12
    _emit(cfg, _dumps(_envelope(cfg, body, ok)))
    return EXIT_OK if ok else EXIT_CHECK


def cmd_flow(cfg: RunConfig, point: int, radius: float, trials: int, T: float, dt: float,
             record_every: int) -> int:
    try:
        sols = solve_system(cfg.n, ResidualSystem.FULL, cfg.seed)
    except TrackingError as exc:
        _emit(cfg, _dumps(_envelope(cfg, {"error": str(exc)}, False)))
        return EXIT_TRACKING
    if not 0 <= point < len(sols.records):
        sys.stderr.write(f"point index {point} out of range 0..{len(sols.records) - 1}\n")
        return EXIT_INADMISSIBLE
    gamma = sols.records[point].point
    try:
        check_admissible(gamma)
    except InadmissibleEquilibrium as exc:
        sys.stderr.write(f"point {point} is inadmissible: {exc}\n")
        _emit(cfg, _dumps(_envelope(cfg, {"error": str(exc), "point": _cpairs(gamma)}, False)))
        return EXIT_INADMISSIBLE
    start = gamma + random_perturbations(len(gamma), radius, 1, cfg.seed)[0]
    traj = integrate(start, gamma, T=T, dt=dt, record_every=record_every)
    probe = stability_probe(gamma, radius, trials=trials, seed=cfg.seed, T=T, dt=dt)
    ok = (not traj.collision_flag) and probe.converged == probe.trials

    prefix = _default_path(cfg, "json")
    if prefix is None:
        prefix = Path(f"flow_n{cfg.n}_p{point}_seed{cfg.seed}.json")
    base = prefix.with_suffix("")
    base.parent.mkdir(parents=True, exist_ok=True)
    csv_path = base.with_name(base.name + "_trajectory.csv")
    json_path = base.with_name(base.name + "_stability.json")
    csv_path.write_text(traj.to_csv(), encoding="utf-8")
    body = {"point_index": point, "gamma": _cpairs(gamma), "start": _cpairs(start),
            "final_state": _cpairs(traj.final), "collision_flag": traj.collision_flag,
            "trajectory_csv": csv_path.name, "stability": probe.to_dict()}
    text = _dumps(_envelope(cfg, body, ok))
    json_path.write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    if traj.collision_flag:
        return EXIT_CHECK
    return EXIT_OK if ok else EXIT_CHECK


def _markdown(rows, tilde: bool, inter: bool) -> str:
    head = ["N", "#U_N", "direct", "expected"]
    if tilde:
        head.append("#V(tilde I_N)")
    if inter:
        head.append("intersection")
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for r in rows:
        cells = [str(r["n"]), str(r["u_n"]), str(r["u_direct"]), str(EXPECTED_COUNTS.get(r["n"], "?"))]
        if tilde:
            cells.append("-" if r["v_tilde"] is None else str(r["v_tilde"]))
        if inter:
            cells.append("-" if r["intersection"] is None else str(r["intersection"]))
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def cmd_report(cfg: RunConfig, max_n: int, tilde: bool, inter: bool) -> int:
    try:
        rows = _count_table(max_n, cfg.seed, cfg.tolerances.get("cluster", CLUSTER_RADIUS))
    except TrackingError as exc:
        _emit(cfg, _dumps(_envelope(cfg, {"error": str(exc)}, False)))
        return EXIT_TRACKING
    checks = {
        "inclusion_exclusion_matches_direct": all(r["consistent"] for r in rows),
        "bezout_accounting": all(r["accounted"] for r in rows),
        "no_paths_at_infinity": all(r["at_infinity"] == 0 and r.get("tilde_at_infinity", 0) == 0
                                    for r in rows),
        "matches_expected_counts": all(r["u_n"] == EXPECTED_COUNTS[r["n"]] for r in rows
                                    if r["n"] in EXPECTED_COUNTS),
    }
    if tilde:
        checks["matches_expected_tilde"] = all(r["v_tilde"] == EXPECTED_TILDE[r["n"]] for r in rows
                                            if r["n"] in EXPECTED_TILDE)
    if inter:
        checks["matches_expected_intersections"] = all(
            r["intersection"] == EXPECTED_INTERSECTIONS[r["n"]] for r in rows
            if r["n"] in EXPECTED_INTERSECTIONS)
    ok = all(checks.values())
    if cfg.format == "md":
        _emit(cfg, _markdown(rows, tilde, inter), "md")
    else:
        table = {"u_n": [r["u_n"] for r in rows]}
        if tilde:
            table["v_tilde"] = [r["v_tilde"] for r in rows]
        if inter:
            table["intersection"] = [r["intersection"] for r in rows]
        _emit(cfg, _dumps(_envelope(cfg, {"table": table, "rows": rows, "checks": checks}, ok)))
    return EXIT_OK if ok else EXIT_CHECK


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ulampoly", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_n=True, n_default=None, formats=("json",)):
        if with_n:
            p.add_argument("--n", type=int, default=n_default, required=n_default is None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol-residual", type=_positive_float, default=None)
        p.add_argument("--tol-cluster", type=_positive_float, default=None)
        p.add_argument("--format", choices=formats, default=formats[0])
        p.add_argument("--out", default=None, help=f"output file (default: stdout or ${OUT_DIR_ENV})")

    common(sub.add_parser("enumerate", help="all fixed points of degree N"), formats=("json", "csv"))
    common(sub.add_parser("count", help="|U_N| by inclusion-exclusion, cross-checked"),
           formats=("json", "csv"))
    common(sub.add_parser("verify", help="identity and structure checks on every fixed point"))
    p = sub.add_parser("eigencheck", help="hypergeometric rigidity check")
    common(p, with_n=False)
    p.add_argument("--grid", choices=("default", "wide", "fine"), default="default")
    p = sub.add_parser("flow", help="simulate the zero flow around a fixed point")
    common(p)
    p.add_argument("--point", type=int, default=0, help="record index from `enumerate`")
    p.add_argument("--radius", type=float, default=0.05)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--T", type=float, default=25.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--record-every", type=int, default=10)
    p = sub.add_parser("report", help="count table for N = 1..max-n")
    common(p, with_n=False, formats=("json", "md"))
    p.add_argument("--max-n", type=int, default=5)
    p.add_argument("--tilde", action="store_true")
    p.add_argument("--intersections", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    tolerances = {}
    if args.tol_residual is not None:
        tolerances["residual"] = args.tol_residual
    if args.tol_cluster is not None:
        tolerances["cluster"] = args.tol_cluster
    n = getattr(args, "n", None)
    if n is not None and not 1 <= n <= 8:
        sys.stderr.write("--n must be between 1 and 8\n")
        return EXIT_INADMISSIBLE
    cfg = RunConfig(command=args.command, n=n, seed=args.seed, tolerances=tolerances,
                    output_path=args.out, format=args.format)
    if args.command == "enumerate":
        return cmd_enumerate(cfg)
    if args.command == "count":
        return cmd_count(cfg)
    if args.command == "verify":
        return cmd_verify(cfg)
    if args.command == "eigencheck":
        return cmd_eigencheck(cfg, args.grid)
    if args.command == "flow":
        return cmd_flow(cfg, args.point, args.radius, args.trials, args.T, args.dt,
                        args.record_every)
    return cmd_report(cfg, args.max_n, args.tilde, args.intersections)


if __name__ == "__main__":
    sys.exit(main())
