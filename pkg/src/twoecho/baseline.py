"""Truck-only baseline: TSP tours over all nodes and the saving statistic."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .model import Instance, Point, RunReport, Variant, manhattan, euclidean

EXACT_TSP_LIMIT = 16


@dataclass(frozen=True)
class TspResult:
    tour: tuple[int, ...]
    objective: float
    exact: bool


def tsp_time_matrix(points, speed: float, metric: str = "manhattan"):
    dist = manhattan if metric == "manhattan" else euclidean
    pts = [Point(*p) for p in points]
    return [[dist(a, b) / speed for b in pts] for a in pts]


def _held_karp_closed(t) -> tuple[float, list[int]]:
    n = len(t)
    if n == 1:
        return 0.0, [0]
    m = n - 1
    full = 1 << m
    inf = float("inf")
    dp = [[inf] * m for _ in range(full)]
    parent = [[-1] * m for _ in range(full)]
    t0 = t[0]
    for b in range(m):
        dp[1 << b][b] = t0[b + 1]
    for mask in range(1, full):
        row = dp[mask]
        rest = (full - 1) & ~mask
        for b in range(m):
            if not (mask >> b) & 1:
                continue
            cur = row[b]
            if cur == inf:
                continue
            trow = t[b + 1]
            sub = rest
            while sub:
                bit = sub & -sub
                sub ^= bit
                nb = bit.bit_length() - 1
                cand = cur + trow[nb + 1]
                nm = mask | bit
                if cand < dp[nm][nb]:
                    dp[nm][nb] = cand
                    parent[nm][nb] = b
    goal = full - 1
    best, last = inf, -1
    for b in range(m):
        cand = dp[goal][b] + t[b + 1][0]
        if cand < best:
            best, last = cand, b
    order = []
    mask = goal
    while last != -1:
        order.append(last + 1)
        nxt = parent[mask][last]
        mask ^= 1 << last
        last = nxt
    order.reverse()
    return best, [0] + order


def _tour_length(tour, t) -> float:
    total = 0.0
    for a, b in zip(tour, tour[1:]):
        total += t[a][b]
    return total + t[tour[-1]][tour[0]]


def _nearest_neighbor(t) -> list[int]:
    n = len(t)
    tour = [0]
    left = set(range(1, n))
    cur = 0
    while left:
        nxt = min(left, key=lambda j: (t[cur][j], j))
        tour.append(nxt)
        left.remove(nxt)
        cur = nxt
    return tour


def _two_opt_pass(tour, t) -> bool:
    n = len(tour)
    improved = False
    for a in range(n - 1):
        A, A1 = tour[a], tour[a + 1]
        for b in range(a + 2, n):
            B = tour[b]
            B1 = tour[(b + 1) % n]
            delta = t[A][B] + t[A1][B1] - t[A][A1] - t[B][B1]
            if delta < -1e-12:
                tour[a + 1 : b + 1] = reversed(tour[a + 1 : b + 1])
                return True
    return improved


def _or_opt_pass(tour, t) -> bool:
    n = len(tour)
    for seg in (1, 2, 3):
        for a in range(1, n - seg + 1):
            chunk = tour[a : a + seg]
            rest = tour[:a] + tour[a + seg :]
            p, q = tour[a - 1], tour[(a + seg) % n]
            gain = t[p][q] - t[p][chunk[0]] - t[chunk[-1]][q]
            for b in range(1, len(rest) + 1):
                c = rest[b - 1]
                d = rest[b % len(rest)]
                delta = gain + t[c][chunk[0]] + t[chunk[-1]][d] - t[c][d]
                if delta < -1e-12:
                    tour[:] = rest[:b] + chunk + rest[b:]
                    return True
    return False


def solve_tsp(points, speed: float, metric: str = "manhattan") -> TspResult:
    """Closed tour over all points starting at index 0, in hours.

    Exact dynamic programming up to ``EXACT_TSP_LIMIT`` points; beyond that a
    nearest-neighbor start improved by 2-opt and segment relocation, flagged
    as approximate.
    """
    if len(points) == 0:
        raise ValueError("need at least one point")
    t = tsp_time_matrix(points, speed, metric)
    if len(points) <= EXACT_TSP_LIMIT:
        cost, tour = _held_karp_closed(t)
        return TspResult(tuple(tour), cost, True)
    tour = _nearest_neighbor(t)
    while _two_opt_pass(tour, t) or _or_opt_pass(tour, t):
        pass
    return TspResult(tuple(tour), _tour_length(tour, t), False)


def gap_percent(tsp_obj: float, obj: float) -> float:
    """Percentage of the truck-only completion time saved by using drones."""
    if tsp_obj <= 0:
        raise ValueError("TSP objective must be positive")
    return 100.0 * (tsp_obj - obj) / tsp_obj


def compare_mode(inst: Instance, speeds, fleet_sizes, cfg) -> list[RunReport]:
    """One multi-trip run per (drone speed, fleet size) against the TSP tour.

    ``inst`` must be a coincident instance: every non-depot node doubles as a
    customer at the same coordinates, so a stop can serve its own customer
    with a zero-length flight.
    """
    from .grasp import run as grasp_run

    for k, c in enumerate(inst.customers):
        node = inst.truck_nodes[k + 1]
        if euclidean(node, c) > 1e-12:
            raise ValueError(f"customer {k} does not coincide with truck node {k + 1}")

    tsp = solve_tsp(inst.truck_nodes, inst.truck_speed)
    rows: list[RunReport] = []
    for vd in speeds:
        for u in fleet_sizes:
            trial = inst.replaced(drone_speed=float(vd), num_drones=int(u))
            _, report = grasp_run(trial, replace(cfg, variant=Variant.MULTI))
            report.gap = gap_percent(tsp.objective, report.objective)
            report.tsp_objective = tsp.objective
            rows.append(report)
    return rows
