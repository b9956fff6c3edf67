"""Greedy randomized construction: cheapest insertion with roulette-wheel choice.

A solution grows one customer per round. Each round makes three chained
roulette decisions: an insertion position for every still-unvisited truck
node, a serving node for every unserved customer, and finally the customer
to commit. Cheaper options win proportionally to the inverse of their cost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    Instance,
    InfeasibleInstanceError,
    Solution,
    TimeMatrices,
    TwoEchoError,
    Variant,
    evaluate,
)

EPSILON = 1e-6  # hours; keeps zero-cost candidates off the division by zero


class ConstructionFailed(TwoEchoError):
    """Single-trip capacity ran out before every customer found a serving node."""


@dataclass(frozen=True)
class CandidateOp:
    """One randomizable decision: what it does, what it costs, and its target."""

    kind: str
    cost: float
    payload: tuple

    def __post_init__(self):
        if self.cost < 0:
            raise ValueError(f"candidate cost must be non-negative, got {self.cost}")


def roulette_probabilities(costs) -> np.ndarray:
    """Selection probabilities proportional to 1/(cost + epsilon)."""
    w = 1.0 / (np.asarray(costs, dtype=float) + EPSILON)
    return w / w.sum()


def roulette_pick(candidates, rng) -> CandidateOp:
    """Pick one candidate with probability inverse to its cost."""
    if not candidates:
        raise ValueError("roulette_pick needs at least one candidate")
    weights = 1.0 / (np.array([c.cost for c in candidates]) + EPSILON)
    cum = np.cumsum(weights)
    r = cum[-1] * (1.0 - rng.random())  # in (0, total]
    return candidates[int((cum < r).sum())]


def truck_insertion_cost(j: int, arc: tuple[int, int], mats: TimeMatrices) -> float:
    """Extra travel time from inserting node ``j`` into the arc ``(p, q)``.

    ``q == 0`` denotes the closing leg back to the depot copy.
    """
    p, q = arc
    t = mats.t
    return max(float(t[p, j] + t[j, q] - t[p, q]), 0.0)


class ConstructionState:
    """Partial solution while customers are being added."""

    def __init__(self, inst: Instance, mats: TimeMatrices, variant: Variant):
        self.inst = inst
        self.mats = mats
        self.variant = variant
        n, m, u = inst.n, inst.m, inst.num_drones
        self.tour = [0]
        self.visited = np.zeros(n, dtype=bool)
        self.visited[0] = True
        self.wait = np.zeros(n)
        self.count = np.zeros(n, dtype=int)
        self.loads = np.zeros((n, u))
        self.assign: dict[int, int] = {}
        self.drone_of: dict[int, int] = {}
        self.unserved = np.ones(m, dtype=bool)
        self.step_pos = np.zeros(n, dtype=int)
        self.step_ic = np.zeros(n)
        self.tour_dirty = True
        self._launch_ok = mats.reach.copy()
        self._launch_ok[0, :] = False

    def refresh_insertions(self, rng) -> None:
        """Step 1: roulette-choose an insertion position for every unvisited node.

        Positions stay cached until a commit actually extends the tour.
        """
        if not self.tour_dirty:
            return
        self.tour_dirty = False
        unvis = np.flatnonzero(~self.visited)
        if unvis.size == 0:
            return
        t = self.mats.t
        tour = np.asarray(self.tour)
        nxt = np.empty_like(tour)
        nxt[:-1] = tour[1:]
        nxt[-1] = 0
        legs = t[tour, nxt]
        costs = np.maximum(
            t[unvis[:, None], tour[None, :]] + t[unvis[:, None], nxt[None, :]] - legs[None, :],
            0.0,
        )
        cum = np.cumsum(1.0 / (costs + EPSILON), axis=1)
        r = cum[:, -1] * (1.0 - rng.random(unvis.size))
        arc = (cum < r[:, None]).sum(axis=1)
        self.step_pos[unvis] = arc + 1
        self.step_ic[unvis] = costs[np.arange(unvis.size), arc]

    def wait_increase(self, pending: np.ndarray) -> np.ndarray:
        """Wait growth at each node if it served one of the pending customers."""
        trip = self.mats.trip[:, pending]
        if self.variant is Variant.SINGLE:
            return np.maximum(trip - self.wait[:, None], 0.0)
        ft_min = self.loads.min(axis=1)
        return np.maximum(ft_min[:, None] + trip - self.wait[:, None], 0.0)

    def candidate_mask(self, pending: np.ndarray) -> np.ndarray:
        """Nodes allowed to take one more customer (range, no depot, capacity)."""
        mask = self._launch_ok[:, pending].copy()
        if self.variant is Variant.SINGLE:
            saturated = self.visited & (self.count >= self.inst.num_drones)
            mask[saturated, :] = False
        return mask

    def commit(self, k: int, i: int) -> None:
        """Assign customer ``k`` to node ``i``, visiting ``i`` first if needed."""
        if not self.visited[i]:
            self.tour.insert(int(self.step_pos[i]), i)
            self.visited[i] = True
            self.tour_dirty = True
        trip = float(self.mats.trip[i, k])
        if self.variant is Variant.SINGLE:
            self.count[i] += 1
            self.wait[i] = max(self.wait[i], trip)
        else:
            l = int(np.argmin(self.loads[i]))
            self.loads[i, l] += trip
            self.wait[i] = max(self.wait[i], self.loads[i, l])
            self.drone_of[k] = l
        self.assign[k] = i
        self.unserved[k] = False


def assignment_cost(k: int, i: int, state: ConstructionState) -> float:
    """Cost of serving customer ``k`` from node ``i`` in the current state.

    The wait increase at ``i``, plus the node's chosen insertion cost when
    the truck does not stop there yet.
    """
    trip = float(state.mats.trip[i, k])
    if state.variant is Variant.SINGLE:
        delta = max(trip - state.wait[i], 0.0)
    else:
        delta = max(float(state.loads[i].min()) + trip - state.wait[i], 0.0)
    if not state.visited[i]:
        delta += float(state.step_ic[i])
    return delta


def construct_solution(inst: Instance, mats: TimeMatrices, variant: Variant, rng) -> Solution:
    """Build a feasible solution, or raise :class:`ConstructionFailed`.

    Multi-trip construction cannot fail once every customer has a
    launch-capable node in range; single-trip construction fails when all
    reachable nodes are already serving a full load of drones.
    """
    for k, sites in enumerate(mats.v_serve):
        if not sites:
            raise InfeasibleInstanceError(
                f"customer {k} has no launch-capable truck node within drone range"
            )
    state = ConstructionState(inst, mats, variant)
    while state.unserved.any():
        state.refresh_insertions(rng)

        pending = np.flatnonzero(state.unserved)
        cost = state.wait_increase(pending)
        cost += np.where(state.visited, 0.0, state.step_ic)[:, None]
        weights = np.where(state.candidate_mask(pending), 1.0 / (cost + EPSILON), 0.0)

        cum = np.cumsum(weights, axis=0)
        total = cum[-1, :]
        if np.any(total <= 0.0):
            raise ConstructionFailed(
                f"no serving node left for customers {pending[total <= 0.0].tolist()}"
            )
        r = total * (1.0 - rng.random(pending.size))
        nodes = (cum < r[None, :]).sum(axis=0)
        ic_prime = cost[nodes, np.arange(pending.size)]

        cum3 = np.cumsum(1.0 / (ic_prime + EPSILON))
        r3 = cum3[-1] * (1.0 - rng.random())
        j = int((cum3 < r3).sum())
        state.commit(int(pending[j]), int(nodes[j]))

    sol = Solution(
        variant=variant,
        tour=list(state.tour),
        assign=dict(state.assign),
        drone_of=dict(state.drone_of) if variant is Variant.MULTI else None,
    )
    evaluate(sol, inst, mats)
    return sol
