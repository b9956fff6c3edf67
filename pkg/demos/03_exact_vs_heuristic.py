"""Certify the heuristic against the exhaustive solver on a desk-scale instance."""

from twoecho import (
    GenConfig,
    GraspConfig,
    Variant,
    build_time_matrices,
    compute_u_min,
    generate,
    run,
    solve_exact,
)

inst = generate(GenConfig(d=20, n_truck=5, m_customers=6, seed=31))
mats = build_time_matrices(inst)
inst = inst.replaced(num_drones=compute_u_min(inst, mats))
mats = build_time_matrices(inst)
print(f"{inst.name} with {inst.num_drones} drones\n")

print(f"{'variant':<12} {'exact':>8} {'heuristic':>10} {'subsets':>8}")
for variant in (Variant.SINGLE, Variant.MULTI):
    res = solve_exact(inst, mats, variant)
    _, report = run(inst, GraspConfig(variant=variant, n_max=2000, seed=4), mats=mats)
    print(
        f"{variant.value:<12} {res.objective:>8.4f} {report.objective:>10.4f} "
        f"{res.proof.subsets:>8}"
    )

print("\ncompletion time as the fleet grows (multi-trip optimum):")
for extra in range(3):
    trial = inst.replaced(num_drones=inst.num_drones + extra)
    obj = solve_exact(trial, build_time_matrices(trial), Variant.MULTI).objective
    print(f"  {trial.num_drones} drones: {obj:.4f} h")

print("\ncompletion time as drones get faster (multi-trip optimum):")
for speed in (40, 60, 80):
    trial = inst.replaced(drone_speed=float(speed))
    obj = solve_exact(trial, build_time_matrices(trial), Variant.MULTI).objective
    print(f"  {speed} km/h: {obj:.4f} h")
