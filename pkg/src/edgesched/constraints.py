"""Constraint-satisfaction value f(y) and hard feasibility filtering.

f is the minimum normalized slack over three dimensions: per-service
deadline slack, and per-server compute and bandwidth slack.  A scheme
satisfies every constraint iff ``f >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .cost_models import inference_time, transmission_time
from .domain import CAPACITY_TOL, AssignmentPlan, Fleet, ServerSpec, ServerState, ServiceRequest

TIME, COMPUTE, BANDWIDTH = "time", "compute", "bandwidth"


@dataclass(frozen=True)
class FeasibilityReport:
    f_value: float
    slack_time: float
    slack_compute: float
    slack_bandwidth: float
    violated: bool
    worst_dimension: str


def make_report(time_slacks: Iterable[float], compute_slacks: Iterable[float],
                bandwidth_slacks: Iterable[float]) -> FeasibilityReport:
    # an empty dimension contributes its maximum slack, 1
    st = min(time_slacks, default=1.0)
    sc = min(compute_slacks, default=1.0)
    sb = min(bandwidth_slacks, default=1.0)
    f = min(st, sc, sb)
    worst = TIME if st == f else COMPUTE if sc == f else BANDWIDTH
    return FeasibilityReport(f, st, sc, sb, f < 0, worst)


def time_slack(deadline: float, processing_time: float) -> float:
    return (deadline - processing_time) / deadline


def evaluate_f(plan: AssignmentPlan, states: Sequence[ServerState], fleet: Fleet,
               predicted: Mapping[int, tuple[float, float]],
               bandwidth_limits: Sequence[float] | None = None) -> FeasibilityReport:
    """f(y) of ``plan`` placed on top of the load already reflected in ``states``.

    ``predicted`` maps service id to ``(processing_time, deadline)``, both
    measured from the service's arrival.  ``bandwidth_limits`` replaces the
    nominal link capacities (e.g. with the realized, fluctuated ones).
    """
    n = len(fleet)
    cu = [s.compute_capacity - st.residual_compute for s, st in zip(fleet, states)]
    bw = [s.bandwidth_capacity - st.residual_bandwidth for s, st in zip(fleet, states)]
    for e in plan.entries:
        cu[e.server_id] += e.reserved_compute
        bw[e.server_id] += e.reserved_bandwidth
    caps_b = list(bandwidth_limits) if bandwidth_limits is not None else [s.bandwidth_capacity for s in fleet]
    return make_report(
        (time_slack(d, p) for p, d in predicted.values()),
        ((fleet[j].compute_capacity - cu[j]) / fleet[j].compute_capacity for j in range(n)),
        ((caps_b[j] - bw[j]) / caps_b[j] for j in range(n)),
    )


def predicted_processing_time(req: ServiceRequest, server: ServerSpec) -> float:
    """Transmission at the requested rate plus full-speed inference."""
    return transmission_time(req.input_bits, req.bandwidth_demand) + inference_time(req, server, 1.0)


def fits_resources(req: ServiceRequest, state: ServerState) -> bool:
    return (req.compute_demand <= state.residual_compute + CAPACITY_TOL
            and req.bandwidth_demand <= state.residual_bandwidth + CAPACITY_TOL)


def feasible_servers(req: ServiceRequest, states: Sequence[ServerState], fleet: Fleet,
                     elapsed: float = 0.0) -> list[int]:
    """Servers that can take ``req`` now and still meet its deadline.

    ``elapsed`` is the time the service has already waited since arrival.
    """
    return [j for j, (srv, st) in enumerate(zip(fleet, states))
            if fits_resources(req, st)
            and elapsed + predicted_processing_time(req, srv) <= req.deadline]
