"""Comparison schedulers.

The cloud-only, edge-only, round-robin and epsilon-greedy policies respect
the hard resource constraints but never look at deadlines: they lack the
constraint filter the bandit uses.  ``oracle_greedy`` is a reference that
knows the cost model exactly and picks the cheapest deadline-feasible server.
"""

from __future__ import annotations

import enum
import math
from typing import Sequence

import numpy as np

from .bandit import (ArmId, ArmTable, BanditConfig, CSUCBScheduler, service_weighted_energy,
                     shared_idle_energy, update_arms)
from .constraints import feasible_servers, fits_resources
from .cost_models import predicted_cost
from .domain import AssignmentPlan, ServerState, ServiceRequest
from .scheduling import PlanBuilder, SlotContext, arrival_order, urgency_order


class SchedulerKind(str, enum.Enum):
    CS_UCB = "cs_ucb"
    CLOUD_ONLY = "cloud_only"
    EDGE_ONLY = "edge_only"
    ROUND_ROBIN = "round_robin"
    EPSILON_GREEDY = "epsilon_greedy"
    ORACLE_GREEDY = "oracle_greedy"


def cloud_only_select(requests: Sequence[ServiceRequest], states: Sequence[ServerState],
                      ctx: SlotContext) -> AssignmentPlan:
    b = PlanBuilder(ctx.slot, states)
    cloud = ctx.fleet.cloud_id
    for r in arrival_order(requests):
        if fits_resources(r, b.states[cloud]):
            b.assign(r, cloud)
        else:
            b.defer(r)
    return b.build()


def edge_only_select(requests: Sequence[ServiceRequest], states: Sequence[ServerState],
                     ctx: SlotContext) -> AssignmentPlan:
    """Least-loaded edge (highest residual compute fraction, lowest id on ties)."""
    b = PlanBuilder(ctx.slot, states)
    fleet = ctx.fleet
    for r in arrival_order(requests):
        best, best_free = None, -1.0
        for j in fleet.edge_ids:
            if fits_resources(r, b.states[j]):
                free = b.states[j].residual_compute / fleet[j].compute_capacity
                if free > best_free:
                    best, best_free = j, free
        if best is None:
            b.defer(r)
        else:
            b.assign(r, best)
    return b.build()


def resource_feasible(req: ServiceRequest, states: Sequence[ServerState]) -> list[int]:
    return [j for j, st in enumerate(states) if fits_resources(req, st)]


def epsilon_greedy_select(requests: Sequence[ServiceRequest], states: Sequence[ServerState],
                          table: ArmTable, epsilon: float, rng: np.random.Generator,
                          ctx: SlotContext) -> AssignmentPlan:
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must be in [0, 1]")
    b = PlanBuilder(ctx.slot, states)
    for r in arrival_order(requests):
        cand = resource_feasible(r, b.states)
        if not cand:
            b.defer(r)
            continue
        # draw for every decision so the stream does not depend on epsilon
        explore = rng.random() < epsilon
        pick = int(rng.integers(len(cand)))
        if explore:
            j = cand[pick]
        else:
            j, best = cand[0], -math.inf
            for k in cand:
                st = table.stats(ArmId(r.service_class, k))
                v = math.inf if st.play_count == 0 else st.mean_reward
                if v > best:
                    j, best = k, v
        b.assign(r, j)
    return b.build()


class CloudOnly:
    def select(self, requests, states, ctx):
        return cloud_only_select(requests, states, ctx)

    def observe(self, *args):
        pass


class EdgeOnly(CloudOnly):
    def select(self, requests, states, ctx):
        return edge_only_select(requests, states, ctx)


class RoundRobin(CloudOnly):
    """Cycles through servers in ``order``, skipping those without room."""

    def __init__(self, order: Sequence[int]):
        self.order = list(order)
        self.pos = 0

    def select(self, requests, states, ctx):
        b = PlanBuilder(ctx.slot, states)
        n = len(self.order)
        for r in arrival_order(requests):
            for k in range(n):
                j = self.order[(self.pos + k) % n]
                if fits_resources(r, b.states[j]):
                    b.assign(r, j)
                    self.pos = (self.pos + k + 1) % n
                    break
            else:
                b.defer(r)
        return b.build()


class EpsilonGreedy:
    def __init__(self, n_servers: int, epsilon: float, rng: np.random.Generator,
                 cfg: BanditConfig | None = None):
        self.table = ArmTable(n_servers)
        self.epsilon = epsilon
        self.rng = rng
        self.cfg = cfg or BanditConfig()

    def select(self, requests, states, ctx):
        return epsilon_greedy_select(requests, states, self.table, self.epsilon, self.rng, ctx)

    def observe(self, plan, outcome, f_value, requests, ctx):
        update_arms(self.table, plan, service_weighted_energy(outcome, ctx), f_value,
                    requests, self.cfg, ctx.e_ref, shared_idle_energy(outcome, ctx))


class OracleGreedy(CloudOnly):
    """Known-model greedy: cheapest deadline-feasible server, cloud/defer fallback."""

    def select(self, requests, states, ctx):
        b = PlanBuilder(ctx.slot, states)
        fleet = ctx.fleet
        for r in urgency_order(requests, ctx):
            feas = feasible_servers(r, b.states, fleet, ctx.elapsed(r))
            if feas:
                j = min(feas, key=lambda k: (predicted_cost(r, fleet[k], ctx.weights).weighted_total, k))
                b.assign(r, j)
            elif fits_resources(r, b.states[fleet.cloud_id]):
                b.assign(r, fleet.cloud_id)
            else:
                b.defer(r)
        return b.build()


def make_scheduler(kind: SchedulerKind | str, n_servers: int, rng: np.random.Generator,
                   bandit: BanditConfig | None = None, epsilon: float = 0.1):
    kind = SchedulerKind(kind)
    if kind is SchedulerKind.CS_UCB:
        return CSUCBScheduler(n_servers, bandit)
    if kind is SchedulerKind.CLOUD_ONLY:
        return CloudOnly()
    if kind is SchedulerKind.EDGE_ONLY:
        return EdgeOnly()
    if kind is SchedulerKind.ROUND_ROBIN:
        return RoundRobin(range(n_servers))
    if kind is SchedulerKind.EPSILON_GREEDY:
        return EpsilonGreedy(n_servers, epsilon, rng, bandit)
    return OracleGreedy()
