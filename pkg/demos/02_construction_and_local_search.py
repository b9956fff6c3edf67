"""Watch one randomized construction and every local-search move that improves it."""

import numpy as np

from twoecho import (
    GenConfig,
    Variant,
    build_time_matrices,
    construct_solution,
    generate,
    local_search,
)

inst = generate(GenConfig(d=20, n_truck=6, m_customers=10, seed=7)).replaced(num_drones=2)
mats = build_time_matrices(inst)
rng = np.random.default_rng(123)

sol = construct_solution(inst, mats, Variant.MULTI, rng)
print(f"constructed: objective {sol.objective:.4f} h, stops {sol.tour}")
print(f"assignment: {sol.assign}")
print(f"drone per customer: {sol.drone_of}")

print("\naccepted moves:")
moves = []


def trace(name, delta):
    moves.append(name)
    print(f"  {name:<28s} {delta:+.6f} h")


improved = local_search(sol, inst, mats, on_move=trace)
print(f"\nafter {len(moves)} moves: objective {improved.objective:.4f} h, "
      f"stops {improved.tour}")
print("waits per stop:", {i: round(w, 4) for i, w in improved.waits.items()})

share = 100 * (sol.objective - improved.objective) / sol.objective
print(f"local search shaved {share:.1f}% off this start; "
      "a full run restarts thousands of times and keeps the best")
