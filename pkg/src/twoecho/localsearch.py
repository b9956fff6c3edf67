"""First-improvement local search over truck tours and customer assignments.

All operators compute their move's objective change from cached per-node
data (longest / second-longest round trip for single-trip mode, per-drone
workloads for multi-trip mode) and from edge times for tour changes, so a
candidate is costed without re-evaluating the whole solution. Any accepted
move strictly improves the objective by more than ``IMPROVE_EPS``.

Scan order inside every operator is fixed (tour position, then customer
index, then drone index), so the search is deterministic given its input.
"""

from __future__ import annotations

from bisect import insort

from .model import Instance, Solution, TimeMatrices, Variant, evaluate

IMPROVE_EPS = 1e-9

SINGLE_TRIP_OPERATORS = (
    "relocate_truck_node",
    "swap_truck_node",
    "two_opt",
    "swap_assignment1",
    "re_assignment1",
)

MULTI_TRIP_OPERATORS = (
    "relocate_truck_node",
    "swap_truck_node",
    "two_opt",
    "relocate_drone_assignment1",
    "swap_drone_assignment1",
    "relocate_drone_assignment2",
    "swap_drone_assignment2",
    "triangle_drone_assignment",
    "greedy_repack",
    "re_assignment1",
    "re_assignment2",
    "swap_assignment1",
    "zigzag_assignment",
)


class DeltaCache:
    """Mutable search state with the caches needed for constant-time deltas.

    Single-trip mode keeps, per visited node, the longest (``tf``) and
    second-longest (``ts``, counted with multiplicity) assigned round trip.
    Multi-trip mode keeps per-drone workloads and the customers on each
    drone. Unvisited nodes get a lazily cached best insertion position that
    is invalidated by any tour change.
    """

    def __init__(self, sol: Solution, inst: Instance, mats: TimeMatrices, on_move=None):
        self.inst = inst
        self.mats = mats
        self.variant = sol.variant
        self.u = inst.num_drones
        self.on_move = on_move
        self.t = mats.t_rows
        self.trip = mats.trip_rows
        self.reach = mats.reach_rows

        self.tour = list(sol.tour)
        self.assign = dict(sol.assign)
        self.cust_at: dict[int, list[int]] = {i: [] for i in self.tour}
        for k in sorted(self.assign):
            self.cust_at[self.assign[k]].append(k)

        self.tf: dict[int, float] = {}
        self.ts: dict[int, float] = {}
        self.drone_of: dict[int, int] = {}
        self.drones: dict[int, list[list[int]]] = {}
        self.loads: dict[int, list[float]] = {}
        self.min_load: dict[int, float] = {}
        self.min_drone: dict[int, int] = {}
        self.wait: dict[int, float] = {}
        if self.variant is Variant.SINGLE:
            for i in self.tour:
                self._refresh_single(i)
        else:
            self.drone_of = dict(sol.drone_of or {})
            for i in self.tour:
                self.drones[i] = [[] for _ in range(self.u)]
                for k in self.cust_at[i]:
                    self.drones[i][self.drone_of[k]].append(k)
                self._refresh_loads(i)
                self._refresh_multi(i)
        self.wait_total = sum(self.wait.values())
        self.travel_time = self._legs_sum(self.tour)
        self._position: dict[int, int] = {}
        self._tour_version = 0
        self._ins_cache: dict[int, tuple[int, float, int]] = {}
        self._bump_tour()

    # --- bookkeeping ---------------------------------------------------------

    @property
    def objective(self) -> float:
        return self.travel_time + self.wait_total

    def _legs_sum(self, tour) -> float:
        t = self.t
        total = 0.0
        prev = tour[0]
        for i in tour[1:]:
            total += t[prev][i]
            prev = i
        return total + t[prev][0]

    def _bump_tour(self):
        self._tour_version += 1
        self._position = {node: idx for idx, node in enumerate(self.tour)}

    def _refresh_single(self, i):
        best = second = 0.0
        row = self.trip[i]
        for k in self.cust_at[i]:
            v = row[k]
            if v > best:
                second = best
                best = v
            elif v > second:
                second = v
        self.tf[i] = best
        self.ts[i] = second
        self.wait[i] = best

    def _refresh_loads(self, i):
        row = self.trip[i]
        loads = [sum(row[k] for k in dr) for dr in self.drones[i]]
        self.loads[i] = loads
        best = 0
        for l in range(1, self.u):
            if loads[l] < loads[best]:
                best = l
        self.min_load[i] = loads[best]
        self.min_drone[i] = best

    def _refresh_multi(self, i):
        self.wait[i] = max(self.loads[i]) if self.cust_at[i] else 0.0

    def _set_wait(self, i, value):
        self.wait_total += value - self.wait[i]
        self.wait[i] = value

    def _refresh_node(self, i):
        old = self.wait[i]
        if self.variant is Variant.SINGLE:
            self._refresh_single(i)
        else:
            self._refresh_loads(i)
            self._refresh_multi(i)
        self.wait_total += self.wait[i] - old

    def best_insertion(self, j) -> tuple[float, int]:
        """Cheapest position to splice unvisited node ``j`` into the tour."""
        hit = self._ins_cache.get(j)
        if hit is not None and hit[0] == self._tour_version:
            return hit[1], hit[2]
        t = self.t
        tour = self.tour
        best_cost, best_pos = float("inf"), 1
        for a in range(len(tour)):
            p = tour[a]
            q = tour[a + 1] if a + 1 < len(tour) else 0
            cost = t[p][j] + t[j][q] - t[p][q]
            if cost < best_cost - 1e-15:
                best_cost, best_pos = cost, a + 1
        best_cost = max(best_cost, 0.0)
        self._ins_cache[j] = (self._tour_version, best_cost, best_pos)
        return best_cost, best_pos

    def _accept(self, name, delta):
        if self.on_move is not None:
            self.on_move(name, delta)

    # --- shared node mutations -------------------------------------------------

    def _insert_node(self, j, pos):
        self.tour.insert(pos, j)
        self.cust_at[j] = []
        self.wait[j] = 0.0
        if self.variant is Variant.SINGLE:
            self.tf[j] = 0.0
            self.ts[j] = 0.0
        else:
            self.drones[j] = [[] for _ in range(self.u)]
            self.loads[j] = [0.0] * self.u
            self.min_load[j] = 0.0
            self.min_drone[j] = 0
        self._bump_tour()

    def _drop_node(self, i):
        self.tour.remove(i)
        del self.cust_at[i]
        self.wait_total -= self.wait.pop(i)
        if self.variant is Variant.SINGLE:
            del self.tf[i], self.ts[i]
        else:
            del self.drones[i], self.loads[i], self.min_load[i], self.min_drone[i]
        self._bump_tour()

    def _remove_node_tour_delta(self, i) -> float:
        pos = self._position[i]
        p = self.tour[pos - 1]
        q = self.tour[pos + 1] if pos + 1 < len(self.tour) else 0
        t = self.t
        return t[p][q] - t[p][i] - t[i][q]

    def _remove_customer(self, k):
        i = self.assign.pop(k)
        self.cust_at[i].remove(k)
        if self.variant is Variant.MULTI:
            l = self.drone_of.pop(k)
            self.drones[i][l].remove(k)
        return i

    def _add_customer(self, k, i, drone=None):
        self.assign[k] = i
        insort(self.cust_at[i], k)
        if self.variant is Variant.MULTI:
            self.drone_of[k] = drone
            insort(self.drones[i][drone], k)

    def _least_drone(self, i) -> int:
        return self.min_drone[i]

    def _single_replace_delta(self, i, k_out, k_in) -> float:
        row = self.trip[i]
        base = self.ts[i] if row[k_out] >= self.tf[i] else self.tf[i]
        return max(base, row[k_in]) - self.wait[i]

    def _multi_wait_minus(self, i, k) -> float:
        """Node wait after removing customer ``k`` (0 if it was the last one)."""
        if len(self.cust_at[i]) == 1:
            return 0.0
        loads = list(self.loads[i])
        loads[self.drone_of[k]] -= self.trip[i][k]
        return max(loads)

    def _multi_replace(self, i, k_out, k_in):
        """Least-loaded placement of ``k_in`` after ``k_out`` leaves node ``i``."""
        loads = list(self.loads[i])
        loads[self.drone_of[k_out]] -= self.trip[i][k_out]
        l_in = loads.index(min(loads))
        loads[l_in] += self.trip[i][k_in]
        return max(loads) - self.wait[i], l_in

    # --- truck-tour operators ----------------------------------------------------

    def relocate_truck_node(self) -> bool:
        """Move one visited node to a different tour position."""
        improved = False
        while self._scan_relocate():
            improved = True
        return improved

    def _scan_relocate(self) -> bool:
        t = self.t
        tour = self.tour
        L = len(tour)
        if L < 3:
            return False
        for a in range(1, L):
            x = tour[a]
            p = tour[a - 1]
            q = tour[a + 1] if a + 1 < L else 0
            gain = t[p][q] - t[p][x] - t[x][q]
            rest = tour[:a] + tour[a + 1:]
            for b in range(1, len(rest) + 1):
                c = rest[b - 1]
                nx = rest[b] if b < len(rest) else 0
                delta = gain + t[c][x] + t[x][nx] - t[c][nx]
                if delta < -IMPROVE_EPS:
                    self.tour = rest[:b] + [x] + rest[b:]
                    self.travel_time += delta
                    self._bump_tour()
                    self._accept("relocate_truck_node", delta)
                    return True
        return False

    def swap_truck_node(self) -> bool:
        """Exchange the tour positions of two visited nodes."""
        improved = False
        while self._scan_swap_nodes():
            improved = True
        return improved

    def _scan_swap_nodes(self) -> bool:
        t = self.t
        tour = self.tour
        L = len(tour)
        for a in range(1, L - 1):
            x = tour[a]
            p = tour[a - 1]
            qa = tour[a + 1]
            for b in range(a + 1, L):
                y = tour[b]
                qb = tour[b + 1] if b + 1 < L else 0
                if b == a + 1:
                    delta = t[p][y] + t[x][qb] - t[p][x] - t[y][qb]
                else:
                    pb = tour[b - 1]
                    delta = (
                        t[p][y] + t[y][qa] - t[p][x] - t[x][qa]
                        + t[pb][x] + t[x][qb] - t[pb][y] - t[y][qb]
                    )
                if delta < -IMPROVE_EPS:
                    tour[a], tour[b] = y, x
                    self.travel_time += delta
                    self._bump_tour()
                    self._accept("swap_truck_node", delta)
                    return True
        return False

    def two_opt(self) -> bool:
        """Remove two tour edges and reconnect with the segment reversed."""
        improved = False
        while self._scan_two_opt():
            improved = True
        return improved

    def _scan_two_opt(self) -> bool:
        t = self.t
        tour = self.tour
        L = len(tour)
        for a in range(L - 1):
            A = tour[a]
            A1 = tour[a + 1]
            base = t[A][A1]
            for b in range(a + 2, L):
                B = tour[b]
                B1 = tour[b + 1] if b + 1 < L else 0
                delta = t[A][B] + t[A1][B1] - base - t[B][B1]
                if delta < -IMPROVE_EPS:
                    tour[a + 1:b + 1] = reversed(tour[a + 1:b + 1])
                    self.travel_time += delta
                    self._bump_tour()
                    self._accept("two_opt", delta)
                    return True
        return False

    # --- customer re-assignment (both variants) -----------------------------------

    def swap_assignment1(self) -> bool:
        """Exchange the serving nodes of two customers."""
        improved = False
        while self._scan_swap_assignment1():
            improved = True
        return improved

    def _scan_swap_assignment1(self) -> bool:
        single = self.variant is Variant.SINGLE
        reach = self.reach
        m = self.inst.m
        for k1 in range(m):
            i1 = self.assign[k1]
            for k2 in range(k1 + 1, m):
                i2 = self.assign[k2]
                if i1 == i2:
                    continue
                if not (reach[i1][k2] and reach[i2][k1]):
                    continue
                if single:
                    delta = self._single_replace_delta(i1, k1, k2) + self._single_replace_delta(i2, k2, k1)
                    drones = (None, None)
                else:
                    d1, l1 = self._multi_replace(i1, k1, k2)
                    d2, l2 = self._multi_replace(i2, k2, k1)
                    delta = d1 + d2
                    drones = (l1, l2)
                if delta < -IMPROVE_EPS:
                    self._remove_customer(k1)
                    self._remove_customer(k2)
                    self._add_customer(k2, i1, drones[0])
                    self._add_customer(k1, i2, drones[1])
                    self._refresh_node(i1)
                    self._refresh_node(i2)
                    self._accept("swap_assignment1", delta)
                    return True
        return False

    def re_assignment1(self) -> bool:
        """Move one customer to another node; insert or drop stops as needed."""
        improved = False
        while self._scan_re_assignment1():
            improved = True
        return improved

    def re_assignment2(self) -> bool:
        """Move two customers of one node together to another node (multi-trip)."""
        if self.variant is Variant.SINGLE:
            return False
        improved = False
        while self._scan_re_assignment2():
            improved = True
        return improved

    def _composite_tour_delta(self, insert_j, ins_pos, drop_i) -> float:
        cand = self.tour[:ins_pos] + [insert_j] + self.tour[ins_pos:]
        cand.remove(drop_i)
        return self._legs_sum(cand) - self.travel_time

    def _scan_re_assignment1(self) -> bool:
        single = self.variant is Variant.SINGLE
        u = self.u
        trip = self.trip
        wait = self.wait
        cust_at = self.cust_at
        serve = self.mats.v_serve
        for k in range(self.inst.m):
            i = self.assign[k]
            drop = len(cust_at[i]) == 1
            if drop:
                rem = -wait[i]
                rem_tour = self._remove_node_tour_delta(i)
            else:
                rem_tour = 0.0
                if single:
                    rem = self.ts[i] - self.tf[i] if trip[i][k] >= self.tf[i] else 0.0
                else:
                    loads = list(self.loads[i])
                    loads[self.drone_of[k]] -= trip[i][k]
                    rem = max(loads) - wait[i]
            for j in serve[k]:
                if j == i:
                    continue
                here = cust_at.get(j)
                if here is not None:
                    if single:
                        if len(here) >= u:
                            continue
                        grow = trip[j][k] - self.tf[j]
                    else:
                        grow = self.min_load[j] + trip[j][k] - wait[j]
                    add = grow if grow > 0.0 else 0.0
                    delta = rem + add + rem_tour
                    if delta < -IMPROVE_EPS:
                        self._apply_re_assignment(i, j, (k,), True, drop, rem_tour)
                        self._accept("re_assignment1", delta)
                        return True
                else:
                    ins_cost, ins_pos = self.best_insertion(j)
                    if drop:
                        tour_delta = self._composite_tour_delta(j, ins_pos, i)
                    else:
                        tour_delta = ins_cost
                    delta = rem + trip[j][k] + tour_delta
                    if delta < -IMPROVE_EPS:
                        self._apply_re_assignment(i, j, (k,), False, drop, tour_delta)
                        self._accept("re_assignment1", delta)
                        return True
        return False

    def _scan_re_assignment2(self) -> bool:
        trip = self.trip
        wait = self.wait
        reach = self.reach
        cust_at = self.cust_at
        serve = self.mats.v_serve
        for i in self.tour[1:]:
            custs = cust_at[i]
            if len(custs) < 2:
                continue
            drop = len(custs) == 2
            for a in range(len(custs)):
                k1 = custs[a]
                for b in range(a + 1, len(custs)):
                    k2 = custs[b]
                    if drop:
                        rem = -wait[i]
                        rem_tour = self._remove_node_tour_delta(i)
                    else:
                        loads = list(self.loads[i])
                        loads[self.drone_of[k1]] -= trip[i][k1]
                        loads[self.drone_of[k2]] -= trip[i][k2]
                        rem = max(loads) - wait[i]
                        rem_tour = 0.0
                    for j in serve[k1]:
                        if j == i or not reach[j][k2]:
                            continue
                        tj1 = trip[j][k1]
                        tj2 = trip[j][k2]
                        visited = j in cust_at
                        if visited:
                            # growth is at least the bigger trip on the idlest drone
                            lb = self.min_load[j] + (tj1 if tj1 > tj2 else tj2) - wait[j]
                        else:
                            lb = tj1 if tj1 > tj2 else tj2
                        if lb < 0.0:
                            lb = 0.0
                        # a tour only gets longer when a node is added, so rem_tour
                        # bounds the composite insert-plus-drop change from below
                        if rem + lb + rem_tour >= -IMPROVE_EPS:
                            continue
                        loads = list(self.loads[j]) if visited else [0.0] * self.u
                        before = wait[j] if visited else 0.0
                        l = loads.index(min(loads))
                        loads[l] += tj1
                        l = loads.index(min(loads))
                        loads[l] += tj2
                        grow = max(loads) - before
                        add = grow if grow > 0.0 else 0.0
                        if visited:
                            tour_delta = rem_tour
                        elif drop:
                            _, ins_pos = self.best_insertion(j)
                            tour_delta = self._composite_tour_delta(j, ins_pos, i)
                        else:
                            tour_delta = self.best_insertion(j)[0]
                        delta = rem + add + tour_delta
                        if delta < -IMPROVE_EPS:
                            self._apply_re_assignment(i, j, (k1, k2), visited, drop, tour_delta)
                            self._accept("re_assignment2", delta)
                            return True
        return False

    def _apply_re_assignment(self, i, j, ks, visited, drop, tour_delta):
        if not visited:
            _, pos = self.best_insertion(j)
            self._insert_node(j, pos)
        for k in ks:
            self._remove_customer(k)
            if self.variant is Variant.SINGLE:
                self._add_customer(k, j)
            else:
                self._add_customer(k, j, self._least_drone(j))
                self._refresh_loads(j)
        self._refresh_node(j)
        if drop:
            self._drop_node(i)
        else:
            self._refresh_node(i)
        self.travel_time += tour_delta

    # --- multi-trip drone operators -----------------------------------------------

    def _node_delta(self, i, changes) -> float:
        loads = list(self.loads[i])
        for l, dv in changes:
            loads[l] += dv
        return max(loads) - self.wait[i]

    def _move_drones(self, i, moves):
        """Each move is (customer, new_drone) within node ``i``."""
        for k, l in moves:
            old = self.drone_of[k]
            self.drones[i][old].remove(k)
            insort(self.drones[i][l], k)
            self.drone_of[k] = l
        self._refresh_loads(i)
        old_wait = self.wait[i]
        self._refresh_multi(i)
        self.wait_total += self.wait[i] - old_wait

    def _apply_drone_moves(self, i, moves, name, delta):
        self._move_drones(i, moves)
        self._accept(name, delta)

    def relocate_drone_assignment1(self) -> bool:
        """Hand one customer to a different drone at the same stop."""
        improved = False
        while self._scan_relocate_drone1():
            improved = True
        return improved

    def _scan_relocate_drone1(self) -> bool:
        for i in self.tour[1:]:
            trip = self.trip[i]
            for k in self.cust_at[i]:
                l = self.drone_of[k]
                for l2 in range(self.u):
                    if l2 == l:
                        continue
                    delta = self._node_delta(i, ((l, -trip[k]), (l2, trip[k])))
                    if delta < -IMPROVE_EPS:
                        self._apply_drone_moves(i, [(k, l2)], "relocate_drone_assignment1", delta)
                        return True
        return False

    def swap_drone_assignment1(self) -> bool:
        """Exchange the drones of two customers at the same stop."""
        improved = False
        while self._scan_swap_drone1():
            improved = True
        return improved

    def _scan_swap_drone1(self) -> bool:
        for i in self.tour[1:]:
            trip = self.trip[i]
            custs = self.cust_at[i]
            for a in range(len(custs)):
                k1 = custs[a]
                l1 = self.drone_of[k1]
                for b in range(a + 1, len(custs)):
                    k2 = custs[b]
                    l2 = self.drone_of[k2]
                    if l1 == l2:
                        continue
                    dv = trip[k2] - trip[k1]
                    delta = self._node_delta(i, ((l1, dv), (l2, -dv)))
                    if delta < -IMPROVE_EPS:
                        self._apply_drone_moves(i, [(k1, l2), (k2, l1)], "swap_drone_assignment1", delta)
                        return True
        return False

    def relocate_drone_assignment2(self) -> bool:
        """Hand two customers of one drone to a different drone at the same stop."""
        improved = False
        while self._scan_relocate_drone2():
            improved = True
        return improved

    def _scan_relocate_drone2(self) -> bool:
        for i in self.tour[1:]:
            trip = self.trip[i]
            for l in range(self.u):
                mine = self.drones[i][l]
                for a in range(len(mine)):
                    for b in range(a + 1, len(mine)):
                        k1, k2 = mine[a], mine[b]
                        pair = trip[k1] + trip[k2]
                        for l2 in range(self.u):
                            if l2 == l:
                                continue
                            delta = self._node_delta(i, ((l, -pair), (l2, pair)))
                            if delta < -IMPROVE_EPS:
                                self._apply_drone_moves(
                                    i, [(k1, l2), (k2, l2)], "relocate_drone_assignment2", delta
                                )
                                return True
        return False

    def swap_drone_assignment2(self) -> bool:
        """Trade two same-drone customers against one customer of another drone."""
        improved = False
        while self._scan_swap_drone2():
            improved = True
        return improved

    def _scan_swap_drone2(self) -> bool:
        for i in self.tour[1:]:
            trip = self.trip[i]
            for l in range(self.u):
                mine = self.drones[i][l]
                if len(mine) < 2:
                    continue
                for a in range(len(mine)):
                    for b in range(a + 1, len(mine)):
                        k1, k2 = mine[a], mine[b]
                        pair = trip[k1] + trip[k2]
                        for l2 in range(self.u):
                            if l2 == l:
                                continue
                            for k3 in self.drones[i][l2]:
                                dv = pair - trip[k3]
                                delta = self._node_delta(i, ((l, -dv), (l2, dv)))
                                if delta < -IMPROVE_EPS:
                                    self._apply_drone_moves(
                                        i,
                                        [(k1, l2), (k2, l2), (k3, l)],
                                        "swap_drone_assignment2",
                                        delta,
                                    )
                                    return True
        return False

    def triangle_drone_assignment(self) -> bool:
        """Rotate three customers around three different drones at one stop."""
        improved = False
        while self._scan_triangle():
            improved = True
        return improved

    def _scan_triangle(self) -> bool:
        if self.u < 3:
            return False
        for i in self.tour[1:]:
            trip = self.trip[i]
            busy = [l for l in range(self.u) if self.drones[i][l]]
            if len(busy) < 3:
                continue
            for a in range(len(busy)):
                for b in range(a + 1, len(busy)):
                    for c in range(b + 1, len(busy)):
                        for l1, l2, l3 in ((busy[a], busy[b], busy[c]), (busy[a], busy[c], busy[b])):
                            for k1 in self.drones[i][l1]:
                                for k2 in self.drones[i][l2]:
                                    for k3 in self.drones[i][l3]:
                                        delta = self._node_delta(
                                            i,
                                            (
                                                (l1, trip[k2] - trip[k1]),
                                                (l2, trip[k3] - trip[k2]),
                                                (l3, trip[k1] - trip[k3]),
                                            ),
                                        )
                                        if delta < -IMPROVE_EPS:
                                            self._apply_drone_moves(
                                                i,
                                                [(k2, l1), (k3, l2), (k1, l3)],
                                                "triangle_drone_assignment",
                                                delta,
                                            )
                                            return True
        return False

    def greedy_repack(self) -> bool:
        """Re-pack each stop: shortest trips first, each onto the idlest drone."""
        improved = False
        for i in list(self.tour[1:]):
            trip = self.trip[i]
            custs = self.cust_at[i]
            if len(custs) < 2:
                continue
            order = sorted(custs, key=lambda k: (trip[k], k))
            loads = [0.0] * self.u
            placement = {}
            for k in order:
                l = loads.index(min(loads))
                placement[k] = l
                loads[l] += trip[k]
            new_wait = max(loads)
            if new_wait < self.wait[i] - IMPROVE_EPS:
                delta = new_wait - self.wait[i]
                self._apply_drone_moves(
                    i, [(k, l) for k, l in placement.items()], "greedy_repack", delta
                )
                improved = True
        return improved

    def zigzag_assignment(self) -> bool:
        """Move a customer to another stop while a stop-mate takes over its drone."""
        improved = False
        while self._scan_zigzag():
            improved = True
        return improved

    def _scan_zigzag(self) -> bool:
        reach = self.reach
        for i in self.tour[1:]:
            trip = self.trip[i]
            custs = self.cust_at[i]
            if len(custs) < 2:
                continue
            for k in custs:
                l = self.drone_of[k]
                for k2 in custs:
                    if k2 == k or self.drone_of[k2] == l:
                        continue
                    l2 = self.drone_of[k2]
                    di = self._node_delta(
                        i, ((l, trip[k2] - trip[k]), (l2, -trip[k2]))
                    )
                    if di >= -IMPROVE_EPS:
                        continue  # the target's wait never drops, so di must pay
                    for i2 in self.tour[1:]:
                        if i2 == i or not reach[i2][k]:
                            continue
                        lstar = self.min_drone[i2]
                        dj = max(0.0, self.min_load[i2] + self.trip[i2][k] - self.wait[i2])
                        delta = di + dj
                        if delta < -IMPROVE_EPS:
                            self._move_drones(i, [(k2, l)])
                            self._remove_customer(k)
                            self._add_customer(k, i2, lstar)
                            self._refresh_node(i)
                            self._refresh_node(i2)
                            self._accept("zigzag_assignment", delta)
                            return True
        return False

    # --- orchestration --------------------------------------------------------------

    def run(self) -> None:
        """Apply every operator in its fixed order until none improves."""
        single = self.variant is Variant.SINGLE
        improved = True
        while improved:
            improved = False
            improved |= self.relocate_truck_node()
            improved |= self.swap_truck_node()
            improved |= self.two_opt()
            if single:
                improved |= self.swap_assignment1()
                improved |= self.re_assignment1()
            else:
                improved |= self.relocate_drone_assignment1()
                improved |= self.swap_drone_assignment1()
                improved |= self.relocate_drone_assignment2()
                improved |= self.swap_drone_assignment2()
                improved |= self.triangle_drone_assignment()
                improved |= self.greedy_repack()
                improved |= self.re_assignment1()
                improved |= self.re_assignment2()
                improved |= self.swap_assignment1()
                improved |= self.zigzag_assignment()

    def export_solution(self) -> Solution:
        sol = Solution(
            variant=self.variant,
            tour=list(self.tour),
            assign=dict(self.assign),
            drone_of=dict(self.drone_of) if self.variant is Variant.MULTI else None,
        )
        evaluate(sol, self.inst, self.mats)
        return sol

    def coherence_errors(self) -> list[str]:
        """Compare every cache against a from-scratch recomputation (test aid)."""
        errors = []
        if abs(self.travel_time - self._legs_sum(self.tour)) > 1e-9:
            errors.append("travel_time drifted")
        if abs(self.wait_total - sum(self.wait.values())) > 1e-9:
            errors.append("wait_total drifted")
        for i in self.tour:
            if self.variant is Variant.SINGLE:
                trips = sorted((self.trip[i][k] for k in self.cust_at[i]), reverse=True)
                tf = trips[0] if trips else 0.0
                ts = trips[1] if len(trips) > 1 else 0.0
                if abs(self.tf[i] - tf) > 1e-9 or abs(self.ts[i] - ts) > 1e-9:
                    errors.append(f"tf/ts stale at node {i}")
                if abs(self.wait[i] - tf) > 1e-9:
                    errors.append(f"wait stale at node {i}")
            else:
                for l in range(self.u):
                    exact = sum(self.trip[i][k] for k in self.drones[i][l])
                    if abs(self.loads[i][l] - exact) > 1e-9:
                        errors.append(f"load stale at node {i} drone {l}")
                expected = max(self.loads[i]) if self.cust_at[i] else 0.0
                if abs(self.wait[i] - expected) > 1e-9:
                    errors.append(f"wait stale at node {i}")
        if self._position != {node: idx for idx, node in enumerate(self.tour)}:
            errors.append("position map stale")
        return errors


def delta_add_customer_single(i: int, k: int, cache: DeltaCache) -> float:
    """Wait increase at node ``i`` from adding customer ``k`` (single-trip)."""
    return max(0.0, cache.trip[i][k] - cache.tf.get(i, 0.0))


def delta_remove_customer_single(i: int, k: int, cache: DeltaCache) -> float:
    """Wait decrease at node ``i`` from removing customer ``k`` (single-trip)."""
    if cache.trip[i][k] < cache.tf[i]:
        return 0.0
    return cache.tf[i] - cache.ts[i]


def local_search(sol: Solution, inst: Instance, mats: TimeMatrices, on_move=None) -> Solution:
    """Improve ``sol`` to a combined fixpoint of all operators for its variant."""
    cache = DeltaCache(sol, inst, mats, on_move=on_move)
    cache.run()
    return cache.export_solution()
