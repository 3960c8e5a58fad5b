"""Slot-driven edge-cloud simulator.

Each slot: arrivals and deferred services are revealed, per-server link
capacity is drawn, the scheduler emits a plan, uploads progress as a fluid
with proportional sharing on each link, and inference starts when the upload
finishes.  Compute stays reserved until the service finishes; bandwidth is
released when the upload ends.  A plan's outcome is resolved, and fed back to
the scheduler, once every service in it has a known finish time.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import baselines
from .bandit import ArmId, BanditConfig, RegretLedger, record_regret, select_super_arm, update_arms, ArmTable
from .constraints import make_report, time_slack
from .cost_models import (EnergyWeights, congestion_share, energy_normalizer, idle_energy,
                          inference_time, load_factor, predicted_cost)
from .domain import (CLOUD, EDGE, AssignmentPlan, ClassBounds, Fleet, ServerEnergy, ServerSpec,
                     ServerState, ServiceOutcome, ServiceRequest, SlotOutcome, classify_service,
                     idle_states, validate_fleet)
from .oracle import plan_value, solve_exact
from .scheduling import SlotContext

STABLE, FLUCTUATING = "stable", "fluctuating"
_EPS = 1e-12


class InvalidRate(ValueError):
    pass


class HorizonExhausted(RuntimeError):
    def __init__(self, metrics: "RunMetrics"):
        super().__init__(f"horizon of {metrics.n_slots} slots reached with work outstanding")
        self.metrics = metrics


def edge_server(j: int = 0) -> ServerSpec:
    return ServerSpec(j, EDGE, compute_capacity=1800.0, bandwidth_capacity=100.0,
                      power_active=100.0, power_transmit=20.0, power_idle=30.0,
                      tokens_per_second=50.0)


def cloud_server(j: int = 5) -> ServerSpec:
    return ServerSpec(j, CLOUD, compute_capacity=2400.0, bandwidth_capacity=300.0,
                      power_active=400.0, power_transmit=50.0, power_idle=80.0,
                      tokens_per_second=100.0)


def reference_fleet(n_edges: int = 5) -> Fleet:
    return validate_fleet([edge_server(j) for j in range(n_edges)] + [cloud_server(n_edges)])


@dataclass(frozen=True)
class ScenarioConfig:
    fleet: Fleet = field(default_factory=reference_fleet)
    slot_length: float = 1.0
    total_requests: int = 10_000
    arrival_rate: float | None = None  # mean arrivals per slot; None -> target_load of capacity
    target_load: float = 0.8
    deadline_range: tuple[float, float] = (2.0, 6.0)
    prompt_tokens: tuple[int, int] = (20, 40)
    output_tokens: tuple[int, int] = (60, 150)
    bandwidth_demand: tuple[int, int] = (8, 40)  # Mbps, integer draws
    upload_window: float = 0.25  # s; payload = demand * window
    kappa: float = 1.0  # compute units/s per token
    bandwidth_mode: str = STABLE
    fluctuation_fraction: float = 0.2
    seed: int = 0
    scheduler: str = "cs_ucb"
    horizon: int = 100_000
    weights: EnergyWeights = field(default_factory=EnergyWeights)
    bandit: BanditConfig = field(default_factory=BanditConfig)
    epsilon: float = 0.1

    def __post_init__(self):
        lo, hi = self.deadline_range
        if not 0 < lo <= hi:
            raise ValueError("deadline_range lo>hi" if lo > hi else "deadline_range must be positive")
        if self.bandwidth_mode not in (STABLE, FLUCTUATING):
            raise ValueError(f"bandwidth_mode must be {STABLE!r} or {FLUCTUATING!r}")
        if not 0 <= self.fluctuation_fraction < 1:
            raise ValueError("fluctuation_fraction must be in [0, 1)")
        for name in ("prompt_tokens", "output_tokens", "bandwidth_demand"):
            a, b = getattr(self, name)
            if not 0 < a <= b:
                raise ValueError(f"{name} must satisfy 0 < lo <= hi")
        if self.total_requests < 0 or (self.arrival_rate is not None and self.arrival_rate < 0):
            raise ValueError("total_requests and arrival_rate must be >= 0")
        if not self.target_load > 0:
            raise ValueError("target_load must be > 0")
        if self.slot_length <= 0 or self.upload_window <= 0 or self.kappa <= 0:
            raise ValueError("slot_length, upload_window and kappa must be > 0")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        baselines.SchedulerKind(self.scheduler)

    @property
    def e_ref(self) -> float:
        return energy_normalizer(self.fleet.cloud, self.prompt_tokens[1] + self.output_tokens[1],
                                 self.bandwidth_demand[1] * self.upload_window,
                                 self.bandwidth_demand[1], self.weights)

    @property
    def rate(self) -> float:
        if self.arrival_rate is not None:
            return self.arrival_rate
        return self.target_load * fleet_capacity(self)

    def class_bounds(self) -> ClassBounds:
        """Deadline quartiles of the uniform range; size quartiles from a fixed pilot sample."""
        lo, hi = self.deadline_range
        d = tuple(lo + (hi - lo) * q for q in (0.25, 0.5, 0.75))
        rng = np.random.default_rng(0x5EED)
        sizes = (rng.integers(self.prompt_tokens[0], self.prompt_tokens[1] + 1, 20_000)
                 + rng.integers(self.output_tokens[0], self.output_tokens[1] + 1, 20_000)
                 + rng.integers(self.bandwidth_demand[0], self.bandwidth_demand[1] + 1, 20_000)
                 * self.upload_window)
        s = tuple(float(x) for x in np.quantile(sizes, [0.25, 0.5, 0.75]))
        return ClassBounds(s, d)


def fleet_capacity(cfg: ScenarioConfig) -> float:
    """Sustainable services per slot when every service gets its full reservation.

    Per server this is the smaller of the bandwidth-limited admission rate
    and the compute-limited rate; compute is held until the first slot
    boundary after the service finishes.  Expectations are exact over the
    uniform token and bandwidth supports.
    """
    p = np.arange(cfg.prompt_tokens[0], cfg.prompt_tokens[1] + 1)
    o = np.arange(cfg.output_tokens[0], cfg.output_tokens[1] + 1)
    tokens = (p[:, None] + o[None, :]).ravel()
    mean_bw = (cfg.bandwidth_demand[0] + cfg.bandwidth_demand[1]) / 2
    total = 0.0
    for s in cfg.fleet:
        hold = np.ceil((cfg.upload_window + tokens / s.tokens_per_second) / cfg.slot_length)
        by_compute = s.compute_capacity / np.mean(cfg.kappa * tokens * hold)
        by_bandwidth = s.bandwidth_capacity / mean_bw
        total += min(by_compute, by_bandwidth)
    return float(total)


@dataclass
class RunMetrics:
    scheduler: str
    seed: int
    bandwidth_mode: str
    total_requests: int
    success_rate: float = 1.0
    avg_processing_time: float = 0.0
    avg_response_time: float = 0.0
    throughput: float = 0.0  # tokens of deadline-meeting services per second
    raw_throughput: float = 0.0  # tokens of all completed services per second
    energy_weighted: float = 0.0
    energy_total: float = 0.0
    energy_tran: float = 0.0
    energy_infer: float = 0.0
    energy_idle: float = 0.0
    completed: int = 0
    met_deadline: int = 0
    tokens_generated: int = 0
    tokens_completed: int = 0
    n_slots: int = 0
    sim_time: float = 0.0
    busy_time: float = 0.0
    idle_time: float = 0.0
    hard_violations: int = 0
    plans: int = 0
    horizon_exhausted: bool = False
    regret: list[float] = field(default_factory=list)
    slot_trace: list[dict] = field(default_factory=list)
    service_trace: list[dict] = field(default_factory=list)

    @property
    def regret_final(self) -> float:
        return self.regret[-1] if self.regret else 0.0

    def summary(self) -> dict:
        return {
            "scheduler": self.scheduler, "seed": self.seed, "bandwidth_mode": self.bandwidth_mode,
            "total_requests": self.total_requests, "success_rate": self.success_rate,
            "avg_processing_time_s": self.avg_processing_time,
            "avg_response_time_s": self.avg_response_time,
            "throughput_tok_s": self.throughput, "raw_throughput_tok_s": self.raw_throughput,
            "energy_weighted_j": self.energy_weighted, "energy_total_j": self.energy_total,
            "energy_tran_j": self.energy_tran, "energy_infer_j": self.energy_infer,
            "energy_idle_j": self.energy_idle, "completed": self.completed,
            "met_deadline": self.met_deadline, "n_slots": self.n_slots, "sim_time_s": self.sim_time,
            "hard_violations": self.hard_violations, "horizon_exhausted": self.horizon_exhausted,
            "regret_final": self.regret_final,
        }


def rng_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    """Independent workload, bandwidth and scheduler streams derived from one seed."""
    ss = np.random.SeedSequence(seed)
    return tuple(np.random.default_rng(s) for s in ss.spawn(3))


def generate_workload(cfg: ScenarioConfig, rng: np.random.Generator) -> list[list[ServiceRequest]]:
    """Poisson arrivals per slot until ``total_requests`` services exist."""
    if cfg.total_requests == 0:
        return []
    rate = cfg.rate
    if rate <= 0:
        raise InvalidRate("arrival_rate must be > 0 when total_requests > 0")
    bounds = cfg.class_bounds()
    batches: list[list[ServiceRequest]] = []
    made = 0
    while made < cfg.total_requests:
        k = min(int(rng.poisson(rate)), cfg.total_requests - made)
        p = rng.integers(cfg.prompt_tokens[0], cfg.prompt_tokens[1] + 1, k)
        o = rng.integers(cfg.output_tokens[0], cfg.output_tokens[1] + 1, k)
        b = rng.integers(cfg.bandwidth_demand[0], cfg.bandwidth_demand[1] + 1, k)
        d = rng.uniform(cfg.deadline_range[0], cfg.deadline_range[1], k)
        slot = len(batches)
        batch = []
        for i in range(k):
            r = ServiceRequest(
                id=made + i, arrival_slot=slot, input_bits=float(b[i]) * cfg.upload_window,
                prompt_tokens=int(p[i]), output_tokens=int(o[i]), deadline=float(d[i]),
                compute_demand=cfg.kappa * int(p[i] + o[i]), bandwidth_demand=float(b[i]))
            batch.append(replace(r, service_class=classify_service(r, bounds)))
        batches.append(batch)
        made += k
    return batches


def fluctuate_bandwidth(nominal: float, mode: str, fraction: float, rng: np.random.Generator) -> float:
    if not 0 <= fraction < 1:
        raise ValueError("fraction must be in [0, 1)")
    u = rng.uniform(-fraction, fraction)  # drawn in both modes to keep streams aligned
    if mode == STABLE:
        return nominal
    return nominal * (1.0 + u)


@dataclass
class _Job:
    req: ServiceRequest
    server: int
    plan_slot: int
    start: float
    remaining: float
    bw: float
    compute: float
    tran_end: float | None = None
    finish: float | None = None


@dataclass
class _PlanRecord:
    plan: AssignmentPlan
    ctx: SlotContext
    compute_slacks: list[float]
    bandwidth_slacks: list[float]
    outstanding: set
    outcomes: list = field(default_factory=list)
    idle: list[float] | None = None


def advance_uploads(flows: list[_Job], capacity: float, t0: float, t1: float) -> list[_Job]:
    """Progress uploads on one link over [t0, t1]; returns jobs that finished."""
    done = []
    active = [f for f in flows if f.tran_end is None]
    t = t0
    while active and t < t1:
        alloc = congestion_share([f.bw for f in active], capacity)
        dts = [f.remaining / a for f, a in zip(active, alloc)]
        dt = min(dts)
        if t + dt > t1:
            span = t1 - t
            for f, a in zip(active, alloc):
                f.remaining -= a * span
            break
        t = t + dt
        still = []
        for f, a, d in zip(active, alloc, dts):
            if d <= dt * (1 + _EPS):
                f.remaining = 0.0
                f.tran_end = t
                done.append(f)
            else:
                f.remaining -= a * dt
                still.append(f)
        active = still
    return done


def _job_energy(job: _Job, srv: ServerSpec, weights: EnergyWeights):
    t_tran = job.tran_end - job.start
    t_inf = job.finish - job.tran_end
    e_tran = srv.power_transmit * t_tran
    e_inf = srv.power_active * t_inf
    return t_tran, t_inf, e_tran, e_inf


def run(cfg: ScenarioConfig, strict: bool = False, keep_trace: bool = False) -> RunMetrics:
    """Simulate one scenario with one scheduler; deterministic in ``cfg.seed``."""
    fleet = cfg.fleet
    n = len(fleet)
    L = cfg.slot_length
    w = cfg.weights
    e_ref = cfg.e_ref
    rng_w, rng_b, rng_s = rng_streams(cfg.seed)
    batches = generate_workload(cfg, rng_w)
    sched = baselines.make_scheduler(cfg.scheduler, n, rng_s, cfg.bandit, cfg.epsilon)
    requests = {r.id: r for b in batches for r in b}

    m = RunMetrics(cfg.scheduler, cfg.seed, cfg.bandwidth_mode, cfg.total_requests)
    m.tokens_generated = sum(r.tokens for r in requests.values())
    ledger = RegretLedger()
    pending: list[ServiceRequest] = []
    active: list[list[_Job]] = [[] for _ in range(n)]
    records: deque[_PlanRecord] = deque()
    by_slot: dict[int, _PlanRecord] = {}
    resp_sum = proc_sum = 0.0

    t = 0
    while True:
        now, end = t * L, (t + 1) * L
        if t < len(batches):
            pending.extend(batches[t])
        for j in range(n):
            active[j] = [jb for jb in active[j] if jb.finish is None or jb.finish > now]
        states = []
        for j, s in enumerate(fleet):
            used_c = sum(jb.compute for jb in active[j])
            used_b = sum(jb.bw for jb in active[j] if jb.tran_end is None)
            backlog = 0.0
            for jb in active[j]:
                fin = jb.finish if jb.finish is not None else (
                    jb.start + jb.req.input_bits / jb.bw + jb.req.tokens / s.tokens_per_second)
                backlog = max(backlog, fin - now)
            states.append(ServerState(s.compute_capacity - used_c, s.bandwidth_capacity - used_b, backlog))
        eff = [fluctuate_bandwidth(s.bandwidth_capacity, cfg.bandwidth_mode,
                                   cfg.fluctuation_fraction, rng_b) for s in fleet]
        ctx = SlotContext(t, fleet, L, w, e_ref)

        if pending:
            plan = sched.select(pending, states, ctx)
            m.plans += 1
            m.hard_violations += count_violations(plan, states, [r.id for r in pending])
            placed = {e.service_id for e in plan.entries}
            for e in plan.entries:
                r = requests[e.service_id]
                active[e.server_id].append(_Job(r, e.server_id, t, now, r.input_bits,
                                                e.reserved_bandwidth, e.reserved_compute))
            pending = [r for r in pending if r.id not in placed]
            if plan.entries:
                cu, bw = _loads(plan, states, fleet)
                bsl = []
                for j in range(n):
                    demand = sum(jb.bw for jb in active[j] if jb.tran_end is None)
                    bsl.append((eff[j] - min(demand, eff[j])) / eff[j])
                rec = _PlanRecord(plan, ctx,
                                  [(fleet[j].compute_capacity - cu[j]) / fleet[j].compute_capacity
                                   for j in range(n)],
                                  bsl, placed)
                records.append(rec)
                by_slot[t] = rec

        busy_slot = []
        for j, s in enumerate(fleet):
            for jb in advance_uploads(active[j], eff[j], now, end):
                lf = load_factor(jb.compute, jb.req.compute_demand)
                jb.finish = jb.tran_end + inference_time(jb.req, s, lf)
                t_tran, t_inf, e_tran, e_inf = _job_energy(jb, s, w)
                wait = (jb.plan_slot - jb.req.arrival_slot) * L
                resp = wait + t_tran + t_inf
                met = resp <= jb.req.deadline
                out = ServiceOutcome(jb.req.id, j, wait, t_tran, t_inf, t_tran + t_inf, met,
                                     e_tran, e_inf, jb.req.tokens)
                rec = by_slot[jb.plan_slot]
                rec.outcomes.append(out)
                rec.outstanding.discard(jb.req.id)
                m.completed += 1
                m.tokens_completed += jb.req.tokens
                m.met_deadline += met
                if met:
                    m.throughput += jb.req.tokens  # normalized by time at the end
                m.energy_tran += e_tran
                m.energy_infer += e_inf
                m.energy_weighted += w.w_tran * e_tran + w.w_infer * e_inf
                proc_sum += t_tran + t_inf
                resp_sum += resp
                m.sim_time = max(m.sim_time, jb.finish)
                if keep_trace:
                    m.service_trace.append({
                        "id": jb.req.id, "server": j, "arrival_slot": jb.req.arrival_slot,
                        "assigned_slot": jb.plan_slot, "waiting_time_s": wait,
                        "transmission_time_s": t_tran, "inference_time_s": t_inf,
                        "processing_time_s": t_tran + t_inf, "deadline_s": jb.req.deadline,
                        "deadline_met": bool(met), "e_tran_j": e_tran, "e_infer_j": e_inf})
            busy = 0.0
            for jb in active[j]:
                fin = end if jb.finish is None else min(jb.finish, end)
                busy = max(busy, fin - now)
            busy_slot.append(busy)
            e_idle = idle_energy(s, L, busy)
            m.energy_idle += e_idle
            m.energy_weighted += w.w_idle * e_idle
            m.busy_time += busy
            m.idle_time += L - busy
        if t in by_slot:
            by_slot[t].idle = [idle_energy(s, L, b) for s, b in zip(fleet, busy_slot)]

        while records and records[0].idle is not None and not records[0].outstanding:
            rec = records.popleft()
            del by_slot[rec.plan.slot]
            _resolve(rec, sched, requests, cfg, ledger, m, keep_trace)

        t += 1
        done = (t >= len(batches) and not pending and not records
                and all(jb.finish is not None and jb.finish <= end for a in active for jb in a))
        if done or t >= cfg.horizon:
            m.horizon_exhausted = not done
            break

    m.n_slots = t
    m.sim_time = t * L
    m.energy_total = m.energy_tran + m.energy_infer + m.energy_idle
    m.success_rate = m.met_deadline / cfg.total_requests if cfg.total_requests else 1.0
    if m.completed:
        m.avg_processing_time = proc_sum / m.completed
        m.avg_response_time = resp_sum / m.completed
    m.throughput = m.throughput / m.sim_time
    m.raw_throughput = m.tokens_completed / m.sim_time
    m.regret = ledger.cumulative_regret
    if m.horizon_exhausted and strict:
        raise HorizonExhausted(m)
    return m


def _loads(plan: AssignmentPlan, states: Sequence[ServerState], fleet: Fleet):
    cu = [s.compute_capacity - st.residual_compute for s, st in zip(fleet, states)]
    bw = [s.bandwidth_capacity - st.residual_bandwidth for s, st in zip(fleet, states)]
    for e in plan.entries:
        cu[e.server_id] += e.reserved_compute
        bw[e.server_id] += e.reserved_bandwidth
    return cu, bw


def count_violations(plan: AssignmentPlan, states: Sequence[ServerState],
                     request_ids: Sequence[int]) -> int:
    """Exact C2/C3/C4 re-check of an emitted plan (no tolerance)."""
    bad = 0
    placed = [e.service_id for e in plan.entries] + list(plan.deferred)
    if sorted(placed) != sorted(request_ids):
        bad += 1
    cu = [0.0] * len(states)
    bw = [0.0] * len(states)
    for e in plan.entries:
        cu[e.server_id] += e.reserved_compute
        bw[e.server_id] += e.reserved_bandwidth
    for j, st in enumerate(states):
        bad += cu[j] > st.residual_compute
        bad += bw[j] > st.residual_bandwidth
    return bad


def _resolve(rec: _PlanRecord, sched, requests, cfg: ScenarioConfig, ledger: RegretLedger,
             m: RunMetrics, keep_trace: bool) -> None:
    w = cfg.weights
    fleet = cfg.fleet
    report = make_report(
        (time_slack(requests[o.service_id].deadline, o.waiting_time + o.processing_time)
         for o in rec.outcomes),
        rec.compute_slacks, rec.bandwidth_slacks)
    per_server = []
    for j in range(len(fleet)):
        et = sum(o.e_tran for o in rec.outcomes if o.server_id == j)
        ei = sum(o.e_infer for o in rec.outcomes if o.server_id == j)
        per_server.append(ServerEnergy(j, et, ei, rec.idle[j]))
    weighted = sum(w.combine(s.e_tran, s.e_infer, s.e_idle) for s in per_server)
    reward = -weighted / cfg.e_ref + cfg.bandit.lam * report.f_value
    outcome = SlotOutcome(rec.plan.slot, tuple(sorted(rec.outcomes, key=lambda o: o.service_id)),
                          tuple(per_server), reward, report.f_value, weighted)
    sched.observe(rec.plan, outcome, report.f_value, requests, rec.ctx)
    record_regret(ledger, reward, cfg.bandit)
    if keep_trace:
        m.slot_trace.append({"slot": rec.plan.slot, "assigned": len(rec.plan.entries),
                             "deferred": len(rec.plan.deferred), "reward": reward,
                             "f": report.f_value, "weighted_energy_j": weighted})


# ---------------------------------------------------------------- calibration

@dataclass(frozen=True)
class CalibrationRow:
    batch_size: int
    cloud_time: float  # mean per-service processing time, s
    cloud_energy: float  # mean per-service energy, J
    edge_time: float
    edge_energy: float

    @property
    def cloud_total_time(self) -> float:
        return self.cloud_time * self.batch_size

    @property
    def edge_total_time(self) -> float:
        return self.edge_time * self.batch_size


def _simultaneous(req: ServiceRequest, srv: ServerSpec, k: int) -> tuple[float, float]:
    """k copies of req uploaded at once to srv, sharing link and compute."""
    jobs = [_Job(req, srv.id, 0, 0.0, req.input_bits, req.bandwidth_demand, req.compute_demand)
            for _ in range(k)]
    advance_uploads(jobs, srv.bandwidth_capacity, 0.0, math.inf)
    lf = load_factor(srv.compute_capacity / k, req.compute_demand)
    t_inf = inference_time(req, srv, lf)
    t_tran = jobs[-1].tran_end
    return t_tran + t_inf, srv.power_transmit * t_tran + srv.power_active * t_inf


def calibration_sweep(fleet: Fleet, req: ServiceRequest, batch_sizes: Sequence[int]) -> list[CalibrationRow]:
    """Per-service time/energy when ``n`` services arrive simultaneously at the
    cloud alone versus spread round-robin across the edges."""
    rows = []
    edges = [fleet[j] for j in fleet.edge_ids]
    for nb in batch_sizes:
        ct, ce = _simultaneous(req, fleet.cloud, nb)
        et = ee = 0.0
        for k, srv in enumerate(edges):
            share = nb // len(edges) + (1 if k < nb % len(edges) else 0)
            if share:
                tt, en = _simultaneous(req, srv, share)
                et += tt * share
                ee += en * share
        rows.append(CalibrationRow(nb, ct, ce, et / nb, ee / nb))
    return rows


def default_template(cfg: ScenarioConfig | None = None) -> ServiceRequest:
    cfg = cfg or ScenarioConfig()
    bw = float(sum(cfg.bandwidth_demand) // 2)
    p, o = sum(cfg.prompt_tokens) // 2, sum(cfg.output_tokens) // 2
    return ServiceRequest(0, 0, bw * cfg.upload_window, p, o, cfg.deadline_range[1],
                          cfg.kappa * (p + o), bw)


# ---------------------------------------------------------------- stationary small instances

@dataclass(frozen=True)
class SmallInstance:
    fleet: Fleet
    requests: tuple[ServiceRequest, ...]
    slot_length: float = 1.0
    weights: EnergyWeights = field(default_factory=EnergyWeights)
    e_ref: float = 1.0


def random_small_instance(rng: np.random.Generator, max_services: int = 5, max_servers: int = 3,
                          cfg: ScenarioConfig | None = None) -> SmallInstance:
    """Random fleet of 2..max_servers servers and 1..max_services services."""
    cfg = cfg or ScenarioConfig()
    n = int(rng.integers(2, max_servers + 1))
    m = int(rng.integers(1, max_services + 1))
    specs = []
    for j in range(n - 1):
        specs.append(ServerSpec(j, EDGE, float(rng.integers(150, 501)), float(rng.integers(40, 101)),
                                float(rng.integers(80, 121)), float(rng.integers(15, 26)),
                                float(rng.integers(20, 41)), float(rng.integers(30, 61))))
    specs.append(ServerSpec(n - 1, CLOUD, float(rng.integers(600, 1201)), float(rng.integers(100, 301)),
                            float(rng.integers(320, 481)), float(rng.integers(40, 61)),
                            float(rng.integers(60, 101)), float(rng.integers(80, 121))))
    fleet = validate_fleet(specs)
    bounds = cfg.class_bounds()
    reqs = []
    for i in range(m):
        p = int(rng.integers(cfg.prompt_tokens[0], cfg.prompt_tokens[1] + 1))
        o = int(rng.integers(cfg.output_tokens[0], cfg.output_tokens[1] + 1))
        b = float(rng.integers(cfg.bandwidth_demand[0], cfg.bandwidth_demand[1] + 1))
        d = float(rng.uniform(*cfg.deadline_range))
        r = ServiceRequest(i, 0, b * cfg.upload_window, p, o, d, cfg.kappa * (p + o), b)
        reqs.append(replace(r, service_class=classify_service(r, bounds)))
    e_ref = energy_normalizer(fleet.cloud, cfg.prompt_tokens[1] + cfg.output_tokens[1],
                              cfg.bandwidth_demand[1] * cfg.upload_window, cfg.bandwidth_demand[1],
                              cfg.weights)
    return SmallInstance(fleet, tuple(reqs), cfg.slot_length, cfg.weights, e_ref)


@dataclass
class StationaryResult:
    vectors: list[tuple[int, ...]]
    rewards: list[float]
    oracle_vector: tuple[int, ...]
    oracle_reward: float
    oracle_margin: float
    regret: list[float]
    hard_violations: int
    table: ArmTable


def run_stationary(inst: SmallInstance, n_slots: int, cfg: BanditConfig | None = None) -> StationaryResult:
    """CS-UCB on the same batch every slot, servers reset between slots.

    Realized rewards equal the predicted ones, so the oracle reward is exact.
    """
    cfg = cfg or BanditConfig()
    fleet = inst.fleet
    n = len(fleet)
    states = idle_states(fleet)
    ids = [r.id for r in inst.requests]
    ctx0 = SlotContext(0, fleet, inst.slot_length, inst.weights, inst.e_ref)
    oracle = solve_exact(inst.requests, states, ctx0, cfg, policy_space=True)
    o_vec = oracle.plan.assignment_vector(ids, n)
    energy = {(r.id, j): predicted_cost(r, fleet[j], inst.weights).weighted_total
              for r in inst.requests for j in range(n)}
    table = ArmTable(n)
    ledger = RegretLedger(mode="exact")
    vectors, rewards = [], []
    bad = 0
    by_id = {r.id: r for r in inst.requests}
    cache: dict = {}
    for t in range(n_slots):
        reqs = [replace(r, arrival_slot=t) for r in inst.requests]
        ctx = SlotContext(t, fleet, inst.slot_length, inst.weights, inst.e_ref)
        plan = select_super_arm(reqs, states, table, cfg, ctx)
        bad += count_violations(plan, states, ids)
        vec = plan.assignment_vector(ids, n)
        if vec not in cache:
            cache[vec] = plan_value(plan, reqs, states, ctx, cfg)
        pv = cache[vec]
        update_arms(table, plan, {e.service_id: energy[(e.service_id, e.server_id)] for e in plan.entries},
                    pv.report.f_value, by_id, cfg, inst.e_ref, pv.idle_energy)
        val = pv.reward
        record_regret(ledger, val, cfg, oracle.reward)
        vectors.append(vec)
        rewards.append(val)
    return StationaryResult(vectors, rewards, o_vec, oracle.reward, oracle.margin,
                            ledger.cumulative_regret, bad, table)
