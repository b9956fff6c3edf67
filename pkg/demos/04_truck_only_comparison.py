"""Does handing deliveries to drones beat driving to every customer?

Every node doubles as a customer, so the truck-only plan is a plain TSP tour
while the drone mode may skip stops and serve clusters from one launch point.
"""

from twoecho import (
    GraspConfig,
    Variant,
    compare_mode,
    generate_coincident,
    solve_tsp,
)

inst = generate_coincident(d=25, n_total=12, seed=9)
tsp = solve_tsp(inst.truck_nodes, inst.truck_speed)
label = "optimal" if tsp.exact else "approximate"
print(f"{inst.name}: truck-only tour ({label}) takes {tsp.objective:.4f} h\n")

cfg = GraspConfig(variant=Variant.MULTI, n_max=1500, seed=5)
rows = compare_mode(inst, speeds=[40, 60, 80], fleet_sizes=[2, 4], cfg=cfg)

print(f"{'drone km/h':>10} {'drones':>7} {'stops':>6} {'obj h':>8} "
      f"{'wait h':>8} {'drive h':>8} {'saved %':>8}")
for r in rows:
    print(
        f"{r.drone_speed:>10.0f} {r.num_drones:>7} {r.visited:>6} "
        f"{r.objective:>8.4f} {r.wait_time:>8.4f} {r.travel_time:>8.4f} {r.gap:>8.2f}"
    )

print("\nfaster or more drones widen the saving; slow small fleets can even lose")
