"""Core value types shared by the scheduler, cost models and simulator.

Server ids are 0-based and contiguous; after :func:`validate_fleet` the cloud
server is always the last one (id ``N - 1``).
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import InitVar, dataclass, field, replace
from typing import Sequence

EDGE = "edge"
CLOUD = "cloud"

N_SIZE_BUCKETS = 4
N_DEADLINE_BUCKETS = 4
N_CLASSES = N_SIZE_BUCKETS * N_DEADLINE_BUCKETS

# absolute slack for float round-off in capacity sums
CAPACITY_TOL = 1e-9


class FleetError(ValueError):
    """Base class for fleet validation failures."""


class NoCloud(FleetError):
    pass


class MultipleClouds(FleetError):
    pass


class NonPositiveCapacity(FleetError):
    pass


class CloudNotDominant(FleetError):
    pass


class PlanViolation(ValueError):
    """Raised when an AssignmentPlan would break C2, C3 or C4."""

    def __init__(self, constraint: str, message: str):
        super().__init__(f"{constraint}: {message}")
        self.constraint = constraint


@dataclass(frozen=True)
class ServerSpec:
    id: int
    kind: str
    compute_capacity: float  # compute units / s
    bandwidth_capacity: float  # Mbps, nominal
    power_active: float  # W
    power_transmit: float  # W
    power_idle: float  # W
    tokens_per_second: float

    @property
    def is_cloud(self) -> bool:
        return self.kind == CLOUD


@dataclass(frozen=True)
class Fleet:
    servers: tuple[ServerSpec, ...]

    def __len__(self) -> int:
        return len(self.servers)

    def __iter__(self):
        return iter(self.servers)

    def __getitem__(self, j: int) -> ServerSpec:
        return self.servers[j]

    @property
    def cloud_id(self) -> int:
        return len(self.servers) - 1

    @property
    def cloud(self) -> ServerSpec:
        return self.servers[-1]

    @property
    def edge_ids(self) -> tuple[int, ...]:
        return tuple(range(len(self.servers) - 1))


@dataclass(frozen=True)
class ServerState:
    residual_compute: float
    residual_bandwidth: float
    queue_backlog: float = 0.0


@dataclass(frozen=True)
class ServiceRequest:
    id: int
    arrival_slot: int
    input_bits: float  # Mb
    prompt_tokens: int
    output_tokens: int
    deadline: float  # s, measured from arrival
    compute_demand: float  # compute units / s for full-speed inference
    bandwidth_demand: float  # Mbps requested for the upload
    service_class: int = 0

    @property
    def tokens(self) -> int:
        return self.prompt_tokens + self.output_tokens

    @property
    def size_key(self) -> float:
        return self.input_bits + self.tokens


@dataclass(frozen=True)
class ClassBounds:
    """Ascending quartile boundaries for the size key and the deadline."""

    size: tuple[float, float, float]
    deadline: tuple[float, float, float] = (3.0, 4.0, 5.0)

    def __post_init__(self):
        for name in ("size", "deadline"):
            b = getattr(self, name)
            if len(b) != 3 or list(b) != sorted(b):
                raise ValueError(f"{name} bounds must be three ascending values, got {b}")


@dataclass(frozen=True)
class PlanEntry:
    service_id: int
    server_id: int
    reserved_bandwidth: float
    reserved_compute: float


@dataclass(frozen=True)
class AssignmentPlan:
    """One slot's super arm.

    Construction validates the hard constraints against ``states``: every
    service is placed at most once (and, when ``request_ids`` is given,
    exactly once across entries/deferred) and per-server reservations fit
    the residual compute and bandwidth.
    """

    slot: int
    entries: tuple[PlanEntry, ...]
    deferred: tuple[int, ...]
    states: InitVar[Sequence[ServerState]]
    request_ids: InitVar[Sequence[int] | None] = None

    def __post_init__(self, states, request_ids):
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "deferred", tuple(self.deferred))
        placed = [e.service_id for e in self.entries] + list(self.deferred)
        if len(set(placed)) != len(placed):
            raise PlanViolation("C4", "a service appears more than once in the plan")
        if request_ids is not None and sorted(placed) != sorted(request_ids):
            raise PlanViolation("C4", "plan does not cover the slot's requests exactly once")
        bw = [0.0] * len(states)
        cu = [0.0] * len(states)
        for e in self.entries:
            if not 0 <= e.server_id < len(states):
                raise PlanViolation("C4", f"unknown server {e.server_id}")
            if e.reserved_bandwidth <= 0 or e.reserved_compute <= 0:
                raise PlanViolation("C2", f"service {e.service_id} reserves nothing")
            bw[e.server_id] += e.reserved_bandwidth
            cu[e.server_id] += e.reserved_compute
        for j, st in enumerate(states):
            if cu[j] > st.residual_compute + CAPACITY_TOL:
                raise PlanViolation("C2", f"server {j} compute {cu[j]} > residual {st.residual_compute}")
            if bw[j] > st.residual_bandwidth + CAPACITY_TOL:
                raise PlanViolation("C3", f"server {j} bandwidth {bw[j]} > residual {st.residual_bandwidth}")

    def server_of(self, service_id: int) -> int | None:
        for e in self.entries:
            if e.service_id == service_id:
                return e.server_id
        return None

    def assignment_vector(self, service_ids: Sequence[int], n_servers: int) -> tuple[int, ...]:
        """Server per service in ``service_ids`` order; ``n_servers`` marks deferral."""
        where = {e.service_id: e.server_id for e in self.entries}
        return tuple(where.get(i, n_servers) for i in service_ids)


@dataclass(frozen=True)
class ServiceOutcome:
    service_id: int
    server_id: int
    waiting_time: float
    transmission_time: float
    inference_time: float
    processing_time: float
    met_deadline: bool
    e_tran: float
    e_infer: float
    tokens: int


@dataclass(frozen=True)
class ServerEnergy:
    server_id: int
    e_tran: float = 0.0
    e_infer: float = 0.0
    e_idle: float = 0.0


@dataclass(frozen=True)
class SlotOutcome:
    slot: int
    services: tuple[ServiceOutcome, ...]
    servers: tuple[ServerEnergy, ...]
    slot_reward: float = 0.0
    slot_feasibility: float = 1.0
    weighted_energy: float = 0.0
    extra: dict = field(default_factory=dict, compare=False)


def validate_fleet(specs: Sequence[ServerSpec]) -> Fleet:
    """Check fleet invariants and renumber so edges come first, cloud last."""
    specs = list(specs)
    clouds = [s for s in specs if s.kind == CLOUD]
    if not clouds:
        raise NoCloud("fleet has no cloud server")
    if len(clouds) > 1:
        raise MultipleClouds(f"servers {[s.id for s in clouds]} are all kind=cloud")
    for s in specs:
        if s.kind not in (EDGE, CLOUD):
            raise FleetError(f"server {s.id}: unknown kind {s.kind!r}")
        for attr in ("compute_capacity", "bandwidth_capacity", "power_active",
                     "power_transmit", "power_idle", "tokens_per_second"):
            if not getattr(s, attr) > 0:
                raise NonPositiveCapacity(f"server {s.id}: {attr} must be > 0")
    cloud = clouds[0]
    edges = [s for s in specs if s.kind == EDGE]
    for e in edges:
        if e.compute_capacity >= cloud.compute_capacity or e.tokens_per_second >= cloud.tokens_per_second:
            raise CloudNotDominant(
                f"server {e.id}: edge capacity/speed must be below the cloud's")
    ordered = edges + [cloud]
    return Fleet(tuple(replace(s, id=j) for j, s in enumerate(ordered)))


def idle_states(fleet: Fleet) -> tuple[ServerState, ...]:
    return tuple(ServerState(s.compute_capacity, s.bandwidth_capacity, 0.0) for s in fleet)


def classify_service(req: ServiceRequest, class_bounds: ClassBounds) -> int:
    """Bandit context key: ``size_bucket * 4 + deadline_bucket``.

    Values equal to a boundary fall into the lower bucket.
    """
    size_bucket = bisect_left(class_bounds.size, req.size_key)
    deadline_bucket = bisect_left(class_bounds.deadline, req.deadline)
    return size_bucket * N_DEADLINE_BUCKETS + deadline_bucket
