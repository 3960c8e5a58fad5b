"""Exhaustive super-arm search for small instances.

Every service is assigned to one of the N servers or deferred (choice N).
Deferral costs nothing in resources this slot but the service is charged
as if it re-arrives next slot: the cheapest server's energy and one extra
slot of waiting on the fastest server's processing time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .bandit import BanditConfig
from .constraints import FeasibilityReport, make_report, predicted_processing_time, time_slack
from .cost_models import idle_energy, predicted_cost
from .domain import CAPACITY_TOL, AssignmentPlan, PlanEntry, ServerState, ServiceRequest
from .scheduling import SlotContext

MAX_CANDIDATES = 10**6
_TIE = 1e-12


class InstanceTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class PlanValue:
    reward: float
    weighted_energy: float
    report: FeasibilityReport
    idle_energy: float = 0.0  # weighted share of weighted_energy


@dataclass(frozen=True)
class OracleSolution:
    plan: AssignmentPlan
    reward: float
    enumerated_count: int
    report: FeasibilityReport
    runner_up: float = float("-inf")  # best reward among the other candidate plans

    @property
    def margin(self) -> float:
        return self.reward - self.runner_up


class _Costs:
    """Per (service, server) predicted energies and times, computed once."""

    def __init__(self, requests: Sequence[ServiceRequest], ctx: SlotContext):
        fleet, w = ctx.fleet, ctx.weights
        self.energy = [[predicted_cost(r, s, w).weighted_total for s in fleet] for r in requests]
        self.time = [[predicted_processing_time(r, s) for s in fleet] for r in requests]
        self.elapsed = [ctx.elapsed(r) for r in requests]
        self.defer_energy = [min(row) for row in self.energy]
        self.defer_time = [min(row) + ctx.slot_length for row in self.time]


def _vector_value(vec: Sequence[int], requests: Sequence[ServiceRequest],
                  states: Sequence[ServerState], ctx: SlotContext, cfg: BanditConfig,
                  costs: _Costs) -> PlanValue:
    fleet = ctx.fleet
    n = len(fleet)
    cu = [s.compute_capacity - st.residual_compute for s, st in zip(fleet, states)]
    bw = [s.bandwidth_capacity - st.residual_bandwidth for s, st in zip(fleet, states)]
    busy = [min(st.queue_backlog, ctx.slot_length) for st in states]
    energy = 0.0
    slacks_t = []
    for i, (r, j) in enumerate(zip(requests, vec)):
        if j == n:
            energy += costs.defer_energy[i]
            slacks_t.append(time_slack(r.deadline, costs.elapsed[i] + costs.defer_time[i]))
            continue
        energy += costs.energy[i][j]
        slacks_t.append(time_slack(r.deadline, costs.elapsed[i] + costs.time[i][j]))
        cu[j] += r.compute_demand
        bw[j] += r.bandwidth_demand
        busy[j] = max(busy[j], min(costs.time[i][j], ctx.slot_length))
    idle = ctx.weights.w_idle * sum(idle_energy(s, ctx.slot_length, busy[j])
                                    for j, s in enumerate(fleet))
    energy += idle
    report = make_report(
        slacks_t,
        ((fleet[j].compute_capacity - cu[j]) / fleet[j].compute_capacity for j in range(n)),
        ((fleet[j].bandwidth_capacity - bw[j]) / fleet[j].bandwidth_capacity for j in range(n)),
    )
    return PlanValue(-energy / ctx.e_ref + cfg.lam * report.f_value, energy, report, idle)


def plan_value(plan: AssignmentPlan, requests: Sequence[ServiceRequest],
               states: Sequence[ServerState], ctx: SlotContext,
               cfg: BanditConfig | None = None) -> PlanValue:
    """Predicted slot reward of ``plan`` (the oracle's objective)."""
    cfg = cfg or BanditConfig()
    vec = plan.assignment_vector([r.id for r in requests], len(ctx.fleet))
    return _vector_value(vec, requests, states, ctx, cfg, _Costs(requests, ctx))


def _tight(demand: float, residual: float) -> bool:
    return demand > residual + CAPACITY_TOL


def solve_exact(requests: Sequence[ServiceRequest], states: Sequence[ServerState],
                ctx: SlotContext, cfg: BanditConfig | None = None,
                policy_space: bool = False) -> OracleSolution:
    """Best hard-feasible super arm; ties go to the lexicographically smallest vector.

    With ``policy_space`` the search is limited to plans the bandit could
    emit: a service goes to a deadline-feasible server or the cloud, and is
    deferred only when, against the plan's final residuals, neither the cloud
    nor any deadline-feasible server has room for it.
    """
    cfg = cfg or BanditConfig()
    requests = sorted(requests, key=lambda r: r.id)
    n, m = len(ctx.fleet), len(requests)
    if (n + 1) ** m > MAX_CANDIDATES:
        raise InstanceTooLarge(f"{n + 1}^{m} candidate plans exceed {MAX_CANDIDATES}")
    costs = _Costs(requests, ctx)
    rc = [st.residual_compute for st in states]
    rb = [st.residual_bandwidth for st in states]
    cloud = ctx.fleet.cloud_id
    on_time = [[costs.elapsed[i] + costs.time[i][j] <= r.deadline for j in range(n)]
               for i, r in enumerate(requests)]
    vec = [0] * m
    best: list = [None, None, float("-inf")]  # (vector, value, runner-up reward)
    count = 0

    def forced(i: int) -> bool:
        r = requests[i]
        return all(_tight(r.compute_demand, rc[j]) or _tight(r.bandwidth_demand, rb[j])
                   for j in range(n) if j == cloud or on_time[i][j])

    def dfs(i: int) -> None:
        nonlocal count
        if i == m:
            if policy_space and not all(forced(k) for k in range(m) if vec[k] == n):
                return
            count += 1
            val = _vector_value(vec, requests, states, ctx, cfg, costs)
            if best[1] is None or val.reward > best[1].reward + _TIE:
                if best[1] is not None:
                    best[2] = best[1].reward
                best[0], best[1] = tuple(vec), val
            else:
                best[2] = max(best[2], val.reward)
            return
        r = requests[i]
        for j in range(n + 1):
            if j < n:
                if _tight(r.compute_demand, rc[j]) or _tight(r.bandwidth_demand, rb[j]):
                    continue
                if policy_space and j != cloud and not on_time[i][j]:
                    continue
                rc[j] -= r.compute_demand
                rb[j] -= r.bandwidth_demand
            vec[i] = j
            dfs(i + 1)
            if j < n:
                rc[j] += r.compute_demand
                rb[j] += r.bandwidth_demand

    dfs(0)
    best_vec, value, runner_up = best
    entries = [PlanEntry(r.id, j, r.bandwidth_demand, r.compute_demand)
               for r, j in zip(requests, best_vec) if j < n]
    deferred = [r.id for r, j in zip(requests, best_vec) if j == n]
    plan = AssignmentPlan(ctx.slot, tuple(entries), tuple(deferred), states,
                          [r.id for r in requests])
    return OracleSolution(plan, value.reward, count, value.report, runner_up)
