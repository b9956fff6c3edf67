"""Command-line front end: instance tooling, solvers, model export, reports."""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import time
from pathlib import Path

from . import baseline, exact, grasp, instancegen
from .model import (
    ObjectiveMismatch,
    TwoEchoError,
    Variant,
    build_time_matrices,
    check_feasibility,
    evaluate,
    load_instance,
    load_solution,
    save_instance,
    save_report,
    save_solution,
)

CSV_HEADER = ["Data", "vt", "vd", "u", "TSP", "Vt", "Obj", "Td", "Tt", "Gap", "Time"]


def _default_threads() -> int:
    return int(os.environ.get("TWOECHO_THREADS", "1"))


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twoecho",
        description="Two-echelon truck-and-drone routing: generate, solve, verify, compare.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random instance")
    p.add_argument("--d", type=float, required=True, help="square dimension in km")
    p.add_argument("--n", type=int, required=True, help="truck node count (total nodes with --coincident)")
    p.add_argument("--m", type=int, default=0, help="customer count (ignored with --coincident)")
    p.add_argument("--truck-speed", type=float, default=40.0)
    p.add_argument("--drone-speed", type=float, default=40.0)
    p.add_argument("--endurance", type=float, default=0.5)
    p.add_argument("--num-drones", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--coincident", action="store_true", help="every non-depot node is also a customer")
    p.add_argument("--out", required=True)

    p = sub.add_parser("solve", help="run the randomized multi-start solver")
    p.add_argument("instance")
    p.add_argument("--variant", default="m", help="s (one flight per drone per stop) or m (repeated flights)")
    p.add_argument("--iters", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--trace", action="store_true", help="log every accepted local-search move")
    p.add_argument("--out", help="solution JSON path")
    p.add_argument("--report", help="report JSON path")

    p = sub.add_parser("exact", help="exhaustive search, small instances only")
    p.add_argument("instance")
    p.add_argument("--variant", default="m")
    p.add_argument("--max-nodes", type=int, default=8)
    p.add_argument("--max-customers", type=int, default=8)
    p.add_argument("--max-drones", type=int, default=4)
    p.add_argument("--out", help="solution JSON path")

    p = sub.add_parser("export-milp", help="write the MILP in CPLEX LP format")
    p.add_argument("instance")
    p.add_argument("--model", default="s", help="s, m, or umin (minimum fleet size)")
    p.add_argument("--big-m", type=float, default=None, help="objective upper bound; defaults to a quick heuristic bound")
    p.add_argument("--literal-eq13", action="store_true", help="emit the summed single-trip wait constraint")
    p.add_argument("--out", required=True)

    p = sub.add_parser("import-milp-solution", help="rebuild a solution from solver variable values")
    p.add_argument("instance")
    p.add_argument("values", help="text file with one 'name value' per line")
    p.add_argument("--variant", default=None)
    p.add_argument("--out", help="solution JSON path")

    p = sub.add_parser("compare-tsp", help="drone mode versus truck-only tour on a coincident instance")
    p.add_argument("instance")
    p.add_argument("--speeds", type=_float_list, default=[40, 50, 60, 70, 80])
    p.add_argument("--fleet", type=_int_list, default=[2, 3, 4, 5])
    p.add_argument("--iters", type=int, default=50000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", required=True, help="CSV path")

    p = sub.add_parser("bench", help="grid of runs over instances x fleet sizes x drone speeds")
    p.add_argument("instances", nargs="+", help="instance JSON files or directories")
    p.add_argument("--iters", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--speeds", type=_float_list, default=[40, 50, 60, 70, 80])
    p.add_argument("--u-offsets", type=_int_list, default=[0, 1, 2, 3], help="added to the computed minimum fleet size")
    p.add_argument("--skip-exact", action="store_true")
    p.add_argument("--out", required=True, help="CSV path")

    p = sub.add_parser("verify", help="check a solution file against its instance")
    p.add_argument("instance")
    p.add_argument("solution")
    return parser


def _cmd_gen(args) -> int:
    if args.coincident:
        inst = instancegen.generate_coincident(
            d=args.d,
            n_total=args.n,
            seed=args.seed,
            truck_speed=args.truck_speed,
            drone_speed=args.drone_speed,
            endurance=args.endurance,
            num_drones=args.num_drones,
        )
    else:
        cfg = instancegen.GenConfig(
            d=args.d,
            n_truck=args.n,
            m_customers=args.m,
            truck_speed=args.truck_speed,
            drone_speed=args.drone_speed,
            endurance=args.endurance,
            seed=args.seed,
        )
        inst = instancegen.generate(cfg)
        if args.num_drones != 1:
            inst = inst.replaced(num_drones=args.num_drones)
    save_instance(inst, args.out)
    print(f"wrote {inst.name}: {inst.n} truck nodes, {inst.m} customers -> {args.out}")
    return 0


def _trace_hook(name: str, delta: float):
    print(f"move {name} delta={delta:+.9f}", file=sys.stderr)


def _cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    cfg = grasp.GraspConfig(
        variant=Variant.parse(args.variant),
        n_max=args.iters,
        seed=args.seed,
        time_limit=args.time_limit,
        threads=args.threads if args.threads is not None else _default_threads(),
    )
    best, report = grasp.run(inst, cfg, on_move=_trace_hook if args.trace else None)
    print(
        f"{inst.name} [{cfg.variant.value}] obj={report.objective:.6f} h "
        f"(travel {report.travel_time:.6f} + wait {report.wait_time:.6f}), "
        f"stops={report.visited}, iters={report.iterations}, {report.wall_time:.2f}s"
    )
    if args.out:
        save_solution(best, args.out)
    if args.report:
        save_report(report, args.report)
    return 0


def _cmd_exact(args) -> int:
    inst = load_instance(args.instance)
    mats = build_time_matrices(inst)
    limits = exact.ExactLimits(args.max_nodes, args.max_customers, args.max_drones)
    result = exact.solve_exact(inst, mats, Variant.parse(args.variant), limits)
    print(
        f"{inst.name} optimum {result.objective:.6f} h "
        f"({result.proof.subsets} subsets, {result.proof.assignments} improving leaves)"
    )
    if args.out:
        save_solution(result.solution, args.out)
    return 0


def _cmd_export_milp(args) -> int:
    inst = load_instance(args.instance)
    mats = build_time_matrices(inst)
    if args.model == "umin":
        exact.export_umin_milp(inst, mats, args.out)
        print(f"wrote minimum-fleet model -> {args.out}")
        return 0
    variant = Variant.parse(args.model)
    big_m = args.big_m
    if big_m is None:
        cfg = grasp.GraspConfig(variant=variant, n_max=200, seed=0)
        _, report = grasp.run(inst, cfg, mats=mats)
        big_m = report.objective
        print(f"big-M from heuristic bound: {big_m:.6f} h")
    exact.export_milp(inst, mats, variant, big_m, args.out, literal_eq13=args.literal_eq13)
    print(f"wrote {variant.value}-trip model -> {args.out}")
    return 0


def _cmd_import_milp(args) -> int:
    inst = load_instance(args.instance)
    variant = None if args.variant is None else Variant.parse(args.variant)
    sol = exact.import_milp_solution(args.values, inst, variant=variant)
    print(f"imported solution: objective {sol.objective:.6f} h, stops {len(sol.tour)}")
    if args.out:
        save_solution(sol, args.out)
    return 0


def _report_row(report, tsp_obj: float, tsp_exact: bool) -> list:
    return [
        report.instance,
        40,
        f"{report.drone_speed:g}",
        report.num_drones,
        f"{tsp_obj:.6f}",
        report.visited,
        f"{report.objective:.6f}",
        f"{report.wait_time:.6f}",
        f"{report.travel_time:.6f}",
        f"{report.gap:.2f}",
        f"{report.wall_time:.2f}",
        "exact" if tsp_exact else "approx",
    ]


def _cmd_compare_tsp(args) -> int:
    inst = load_instance(args.instance)
    cfg = grasp.GraspConfig(
        variant=Variant.MULTI,
        n_max=args.iters,
        seed=args.seed,
        threads=args.threads if args.threads is not None else _default_threads(),
    )
    tsp = baseline.solve_tsp(inst.truck_nodes, inst.truck_speed)
    rows = baseline.compare_mode(inst, args.speeds, args.fleet, cfg)
    with open(args.out, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow([*CSV_HEADER, "TSP_mode"])
        for report in rows:
            writer.writerow(_report_row(report, tsp.objective, tsp.exact))
    label = "exact" if tsp.exact else "approximate"
    print(f"TSP tour ({label}): {tsp.objective:.6f} h; wrote {len(rows)} rows -> {args.out}")
    return 0


def _collect_instances(paths) -> list[Path]:
    files: list[Path] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            files.extend(sorted(p.glob("*.json")))
        else:
            files.append(p)
    return files


def _cmd_bench(args) -> int:
    files = _collect_instances(args.instances)
    if not files:
        print("no instance files found", file=sys.stderr)
        return 1
    header = ["Data", "vd", "u"]
    for method in ("exact_s", "grasp_s", "exact_m", "grasp_m"):
        header += [f"{method}_Time", f"{method}_Obj_h", f"{method}_Obj_min"]
    rows = []
    for path in files:
        inst = load_instance(path)
        ref_speed = max(40.0, inst.truck_speed)
        ref = inst.replaced(drone_speed=max(ref_speed, inst.drone_speed))
        u_min = instancegen.compute_u_min(ref, build_time_matrices(ref))
        for offset in args.u_offsets:
            u = u_min + offset
            for vd in args.speeds:
                trial = inst.replaced(drone_speed=float(vd), num_drones=int(u))
                mats = build_time_matrices(trial)
                row = [trial.name, f"{vd:g}", u]
                for variant in (Variant.SINGLE, Variant.MULTI):
                    exact_cells = ["", "", ""]
                    if not args.skip_exact:
                        try:
                            t0 = time.perf_counter()
                            result = exact.solve_exact(trial, mats, variant)
                            dt = time.perf_counter() - t0
                            exact_cells = [
                                f"{dt:.2f}",
                                f"{result.objective:.6f}",
                                f"{60 * result.objective:.3f}",
                            ]
                        except exact.SizeLimitError:
                            pass
                    cfg = grasp.GraspConfig(variant=variant, n_max=args.iters, seed=args.seed)
                    _, report = grasp.run(trial, cfg, mats=mats)
                    grasp_cells = [
                        f"{report.wall_time:.2f}",
                        f"{report.objective:.6f}",
                        f"{60 * report.objective:.3f}",
                    ]
                    row += exact_cells + grasp_cells
                rows.append(row)
    with open(args.out, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows -> {args.out}")
    return 0


def _cmd_verify(args) -> int:
    inst = load_instance(args.instance)
    mats = build_time_matrices(inst)
    sol = load_solution(args.solution)
    violations = list(check_feasibility(sol, inst, mats))
    if not violations and not math.isnan(sol.objective):
        recomputed = evaluate(sol.copy(), inst, mats).objective
        if abs(recomputed - sol.objective) > 1e-6:
            violations.append(ObjectiveMismatch(sol.objective, recomputed))
    if violations:
        for v in violations:
            print(f"violation: {v}")
        return 1
    print(f"ok: feasible, objective {sol.objective:.6f} h")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {
        "gen": _cmd_gen,
        "solve": _cmd_solve,
        "exact": _cmd_exact,
        "export-milp": _cmd_export_milp,
        "import-milp-solution": _cmd_import_milp,
        "compare-tsp": _cmd_compare_tsp,
        "bench": _cmd_bench,
        "verify": _cmd_verify,
    }
    try:
        return handlers[args.command](args)
    except TwoEchoError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
