"""Plumbing shared by every scheduler: slot context, residual tracking, ordering."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence

from .constraints import predicted_processing_time
from .cost_models import EnergyWeights
from .domain import AssignmentPlan, Fleet, PlanEntry, ServerState, ServiceRequest


@dataclass(frozen=True)
class SlotContext:
    slot: int
    fleet: Fleet
    slot_length: float = 1.0
    weights: EnergyWeights = field(default_factory=EnergyWeights)
    e_ref: float = 1.0

    def elapsed(self, req: ServiceRequest) -> float:
        return (self.slot - req.arrival_slot) * self.slot_length


class Scheduler(Protocol):
    def select(self, requests: Sequence[ServiceRequest], states: Sequence[ServerState],
               ctx: SlotContext) -> AssignmentPlan: ...

    def observe(self, plan: AssignmentPlan, outcome, f_value: float,
                requests: dict[int, ServiceRequest], ctx: SlotContext) -> None: ...


class PlanBuilder:
    """Tracks residuals while a plan is assembled one service at a time."""

    def __init__(self, slot: int, states: Sequence[ServerState]):
        self.slot = slot
        self.base = tuple(states)
        self.states = list(states)
        self.entries: list[PlanEntry] = []
        self.deferred: list[int] = []
        self._ids: list[int] = []

    def assign(self, req: ServiceRequest, server_id: int) -> None:
        st = self.states[server_id]
        self.states[server_id] = ServerState(st.residual_compute - req.compute_demand,
                                             st.residual_bandwidth - req.bandwidth_demand,
                                             st.queue_backlog)
        self.entries.append(PlanEntry(req.id, server_id, req.bandwidth_demand, req.compute_demand))
        self._ids.append(req.id)

    def defer(self, req: ServiceRequest) -> None:
        self.deferred.append(req.id)
        self._ids.append(req.id)

    def build(self) -> AssignmentPlan:
        return AssignmentPlan(self.slot, tuple(self.entries), tuple(self.deferred),
                              self.base, self._ids)


def urgency_order(requests: Sequence[ServiceRequest], ctx: SlotContext) -> list[ServiceRequest]:
    """Ascending slack: deadline minus elapsed minus the fastest predicted processing time."""
    def slack(r):
        best = min(predicted_processing_time(r, s) for s in ctx.fleet)
        return (r.deadline - ctx.elapsed(r) - best, r.id)
    return sorted(requests, key=slack)


def arrival_order(requests: Sequence[ServiceRequest]) -> list[ServiceRequest]:
    return sorted(requests, key=lambda r: (r.arrival_slot, r.id))
