"""Constraint-satisfaction UCB over (service class, server) base arms.

Each slot the policy plays one super arm: services are taken in urgency
order, the constraint filter keeps only servers that fit the residual
resources and the deadline, and among those the base arm with the highest
UCB score wins.  Services with no feasible server fall back to the cloud
when it still has room, otherwise they are deferred to the next slot.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .constraints import FeasibilityReport, feasible_servers, fits_resources
from .domain import N_CLASSES, AssignmentPlan, ServerState, ServiceRequest, SlotOutcome
from .scheduling import PlanBuilder, SlotContext, urgency_order


class OracleUnavailable(RuntimeError):
    pass


@dataclass(frozen=True)
class ArmId:
    service_class: int
    server_id: int


@dataclass(frozen=True)
class ArmStats:
    play_count: int = 0
    mean_reward: float = 0.0
    last_update_slot: int = -1


@dataclass(frozen=True)
class BanditConfig:
    lam: float = 2.0
    delta: float = 1.0
    theta: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be > 0")
        if self.lam < 0 or self.theta < 0:
            raise ValueError("lam and theta must be >= 0")
        if not (0 < self.alpha <= 1 and 0 < self.beta <= 1):
            raise ValueError("alpha and beta must lie in (0, 1]")


class ArmTable:
    """Play counts and running mean rewards, one row per service class."""

    def __init__(self, n_servers: int, n_classes: int = N_CLASSES):
        self.counts = np.zeros((n_classes, n_servers), dtype=np.int64)
        self.means = np.zeros((n_classes, n_servers), dtype=np.float64)
        self.last_update = np.full((n_classes, n_servers), -1, dtype=np.int64)

    @property
    def n_servers(self) -> int:
        return self.counts.shape[1]

    def stats(self, arm: ArmId) -> ArmStats:
        c, j = arm.service_class, arm.server_id
        return ArmStats(int(self.counts[c, j]), float(self.means[c, j]), int(self.last_update[c, j]))

    def record(self, arm: ArmId, reward: float, slot: int) -> None:
        c, j = arm.service_class, arm.server_id
        n = self.counts[c, j] + 1
        self.counts[c, j] = n
        self.means[c, j] += (reward - self.means[c, j]) / n
        self.last_update[c, j] = slot

    def snapshot(self) -> str:
        """Arm table as comma-separated records: class,server,count,mean."""
        buf = io.StringIO()
        buf.write("class,server,count,mean\n")
        for c in range(self.counts.shape[0]):
            for j in range(self.n_servers):
                buf.write(f"{c},{j},{self.counts[c, j]},{self.means[c, j]:.12g}\n")
        return buf.getvalue()


def ucb_score(stats: ArmStats, t: int, cfg: BanditConfig, penalty: float = 0.0) -> float:
    if t < 1:
        raise ValueError("t must be >= 1")
    if stats.play_count == 0:
        return math.inf
    return (stats.mean_reward + cfg.delta * math.sqrt(math.log(t) / stats.play_count)
            + cfg.theta * penalty)


def penalty(report: FeasibilityReport) -> float:
    return max(0.0, -report.f_value)


def _fallback(req: ServiceRequest, builder: PlanBuilder, ctx: SlotContext) -> None:
    cloud = ctx.fleet.cloud_id
    if fits_resources(req, builder.states[cloud]):
        builder.assign(req, cloud)
    else:
        builder.defer(req)


def select_super_arm(requests: Sequence[ServiceRequest], states: Sequence[ServerState],
                     table: ArmTable, cfg: BanditConfig, ctx: SlotContext) -> AssignmentPlan:
    t = ctx.slot + 1
    builder = PlanBuilder(ctx.slot, states)
    for req in urgency_order(requests, ctx):
        feas = feasible_servers(req, builder.states, ctx.fleet, ctx.elapsed(req))
        if not feas:
            _fallback(req, builder, ctx)
            continue
        best, best_score = feas[0], -math.inf
        # every scored candidate is feasible, so P(t) = 0 on this path
        for j in feas:
            s = ucb_score(table.stats(ArmId(req.service_class, j)), t, cfg, 0.0)
            if s > best_score:
                best, best_score = j, s
        builder.assign(req, best)
    return builder.build()


def service_weighted_energy(outcome: SlotOutcome, ctx: SlotContext) -> dict[int, float]:
    w = ctx.weights
    return {s.service_id: w.w_tran * s.e_tran + w.w_infer * s.e_infer for s in outcome.services}


def shared_idle_energy(outcome: SlotOutcome, ctx: SlotContext) -> float:
    return ctx.weights.w_idle * sum(s.e_idle for s in outcome.servers)


def slot_reward(outcome: SlotOutcome, f_value: float, cfg: BanditConfig, e_ref: float) -> float:
    """Super-arm reward: negative normalized weighted energy plus lam * f."""
    if not e_ref > 0:
        raise ValueError("e_ref must be > 0")
    return -outcome.weighted_energy / e_ref + cfg.lam * f_value


def update_arms(table: ArmTable, plan: AssignmentPlan, service_energy: Mapping[int, float],
                f_value: float, requests: Mapping[int, ServiceRequest], cfg: BanditConfig,
                e_ref: float, shared_energy: float = 0.0) -> None:
    """Credit each played base arm with its service's own energy plus the shared terms.

    ``shared_energy`` (the slot's weighted idle energy) is split evenly over
    the played arms; the f term is common to all of them.
    """
    if not plan.entries:
        return
    split = shared_energy / len(plan.entries)
    for e in plan.entries:
        share = -(service_energy[e.service_id] + split) / e_ref + cfg.lam * f_value
        table.record(ArmId(requests[e.service_id].service_class, e.server_id), share, plan.slot)


@dataclass
class RegretLedger:
    mode: str = "best_observed"  # or "exact"
    cumulative_regret: list[float] = field(default_factory=list)
    oracle_reward_per_slot: list[float] = field(default_factory=list)
    best_observed: float = -math.inf

    @property
    def final(self) -> float:
        return self.cumulative_regret[-1] if self.cumulative_regret else 0.0


def record_regret(ledger: RegretLedger, reward: float, cfg: BanditConfig,
                  oracle_reward: float | None = None) -> RegretLedger:
    if ledger.mode == "exact":
        if oracle_reward is None:
            raise OracleUnavailable("exact regret needs the oracle reward for this slot")
        ref = oracle_reward
    else:
        ledger.best_observed = max(ledger.best_observed, reward)
        ref = ledger.best_observed if oracle_reward is None else oracle_reward
    prev = ledger.final
    ledger.oracle_reward_per_slot.append(ref)
    ledger.cumulative_regret.append(prev + cfg.alpha * cfg.beta * ref - reward)
    return ledger


class CSUCBScheduler:
    def __init__(self, n_servers: int, cfg: BanditConfig | None = None):
        self.cfg = cfg or BanditConfig()
        self.table = ArmTable(n_servers)

    def select(self, requests, states, ctx):
        return select_super_arm(requests, states, self.table, self.cfg, ctx)

    def observe(self, plan, outcome, f_value, requests, ctx):
        update_arms(self.table, plan, service_weighted_energy(outcome, ctx), f_value,
                    requests, self.cfg, ctx.e_ref, shared_idle_energy(outcome, ctx))
