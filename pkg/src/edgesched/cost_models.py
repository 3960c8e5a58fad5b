"""Transmission/inference timing, energy terms and link congestion."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .domain import ServerSpec, ServiceRequest


class ZeroBandwidth(ValueError):
    pass


@dataclass(frozen=True)
class EnergyWeights:
    w_tran: float = 1.0
    w_infer: float = 1.0
    w_idle: float = 1.0

    def __post_init__(self):
        if min(self.w_tran, self.w_infer, self.w_idle) < 0:
            raise ValueError("energy weights must be >= 0")

    def combine(self, e_tran: float, e_infer: float, e_idle: float = 0.0) -> float:
        return self.w_tran * e_tran + self.w_infer * e_infer + self.w_idle * e_idle


@dataclass(frozen=True)
class CostBreakdown:
    t_tran: float
    t_infer: float
    e_tran: float
    e_infer: float
    e_idle: float
    weighted_total: float


def transmission_time(input_bits: float, allocated_bandwidth: float) -> float:
    if not allocated_bandwidth > 0:
        raise ZeroBandwidth(f"allocated bandwidth must be > 0, got {allocated_bandwidth}")
    return input_bits / allocated_bandwidth


def load_factor(reserved_compute: float, compute_demand: float) -> float:
    return min(1.0, reserved_compute / compute_demand)


def inference_time(req: ServiceRequest, server: ServerSpec, load_factor: float = 1.0) -> float:
    if not 0.0 < load_factor <= 1.0:
        raise ValueError(f"load_factor must be in (0, 1], got {load_factor}")
    return req.tokens / (server.tokens_per_second * load_factor)


def energy_of_assignment(req: ServiceRequest, server: ServerSpec, t_tran: float,
                         t_infer: float, weights: EnergyWeights) -> CostBreakdown:
    """Per-service energy. Idle energy is a per-server, per-slot quantity
    (see :func:`idle_energy`), so ``e_idle`` is always 0 here."""
    if t_tran < 0 or t_infer < 0:
        raise ValueError("times must be >= 0")
    e_tran = server.power_transmit * t_tran
    e_infer = server.power_active * t_infer
    return CostBreakdown(t_tran, t_infer, e_tran, e_infer, 0.0,
                         weights.combine(e_tran, e_infer, 0.0))


def idle_energy(server: ServerSpec, slot_length: float, busy_time: float) -> float:
    return server.power_idle * max(0.0, slot_length - busy_time)


def congestion_share(demands: Sequence[float], capacity: float) -> list[float]:
    """Proportional fair share of ``capacity`` when demand exceeds it."""
    total = sum(demands)
    if total <= capacity:
        return [float(d) for d in demands]
    return [capacity * d / total for d in demands]


def predicted_cost(req: ServiceRequest, server: ServerSpec, weights: EnergyWeights) -> CostBreakdown:
    """Nominal cost of serving ``req`` on ``server`` with its full reservation
    (``bandwidth_demand`` Mbps, ``compute_demand`` units/s)."""
    t_tran = transmission_time(req.input_bits, req.bandwidth_demand)
    t_infer = inference_time(req, server, 1.0)
    return energy_of_assignment(req, server, t_tran, t_infer, weights)


def energy_normalizer(cloud: ServerSpec, max_tokens: int, max_input_bits: float,
                      max_bandwidth_demand: float, weights: EnergyWeights) -> float:
    """Weighted energy of one maximum-size service on the cloud at nominal bandwidth."""
    t_tran = transmission_time(max_input_bits, max_bandwidth_demand)
    t_infer = max_tokens / cloud.tokens_per_second
    return weights.combine(cloud.power_transmit * t_tran, cloud.power_active * t_infer)
