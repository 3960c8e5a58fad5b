import pytest
from hypothesis import given, strategies as st

from edgesched.domain import (CLOUD, EDGE, AssignmentPlan, ClassBounds, CloudNotDominant,
                              MultipleClouds, NoCloud, NonPositiveCapacity, PlanEntry, PlanViolation,
                              ServerState, classify_service, idle_states, validate_fleet)
from edgesched.simulator import cloud_server, edge_server, reference_fleet

from conftest import request, server


def test_reference_fleet_validates():
    # five CPU edge servers plus one GPU cloud
    fleet = reference_fleet()
    assert len(fleet) == 6
    assert [s.kind for s in fleet] == [EDGE] * 5 + [CLOUD]
    assert fleet.cloud_id == 5 and fleet.cloud.bandwidth_capacity == 300.0
    assert all(fleet[j].bandwidth_capacity == 100.0 for j in fleet.edge_ids)
    assert [s.id for s in fleet] == list(range(6))


def test_empty_fleet_has_no_cloud():
    with pytest.raises(NoCloud):
        validate_fleet([])


def test_two_clouds_rejected():
    with pytest.raises(MultipleClouds, match="0, 1"):
        validate_fleet([server(0, CLOUD), server(1, CLOUD)])


def test_nonpositive_capacity_names_server():
    with pytest.raises(NonPositiveCapacity, match="server 3: bandwidth_capacity"):
        validate_fleet([server(3, bw=0.0), cloud_server(4)])


def test_cloud_must_dominate():
    with pytest.raises(CloudNotDominant):
        validate_fleet([server(0, compute=5000.0), cloud_server(1)])


def test_cloud_moves_last_and_ids_renumber():
    fleet = validate_fleet([cloud_server(7), edge_server(3), edge_server(9)])
    assert [s.kind for s in fleet] == [EDGE, EDGE, CLOUD]
    assert [s.id for s in fleet] == [0, 1, 2]


BOUNDS = ClassBounds(size=(100.0, 120.0, 140.0), deadline=(3.0, 4.0, 5.0))


def test_smallest_everything_is_class_zero():
    r = request(prompt=1, output=1, bw=1.0, deadline=0.5)
    assert classify_service(r, BOUNDS) == 0


def test_boundary_goes_to_lower_bucket():
    # size_key = input_bits + tokens = 0 + 100 sits exactly on the first boundary
    r = request(prompt=40, output=60, bw=0.0, deadline=3.0)
    assert r.size_key == 100.0
    assert classify_service(r, BOUNDS) == 0
    bumped = request(prompt=40, output=61, bw=0.0, deadline=3.0)
    assert classify_service(bumped, BOUNDS) == 4


@pytest.mark.derived
def test_median_size_long_deadline_class():
    # size key 119 + 5 = 124 sits between the 2nd and 3rd size boundaries -> bucket 2;
    # deadline 6 > 5 -> bucket 3; class by hand: 2 * 4 + 3
    r = request(prompt=40, output=79, bw=20.0, deadline=6.0)
    size_bucket = sum(1 for b in BOUNDS.size if r.size_key > b)
    deadline_bucket = sum(1 for b in BOUNDS.deadline if r.deadline > b)
    assert (size_bucket, deadline_bucket) == (2, 3)
    assert classify_service(r, BOUNDS) == size_bucket * 4 + deadline_bucket == 11


def test_class_bounds_must_ascend():
    with pytest.raises(ValueError):
        ClassBounds(size=(3.0, 2.0, 1.0))


@given(p=st.integers(1, 500), o=st.integers(1, 500), bw=st.integers(1, 80),
       d=st.floats(0.1, 20.0, allow_nan=False))
def test_classify_is_pure_and_in_range(p, o, bw, d):
    r = request(prompt=p, output=o, bw=float(bw), deadline=d)
    c = classify_service(r, BOUNDS)
    assert 0 <= c < 16
    assert classify_service(r, BOUNDS) == c


def _states():
    return idle_states(validate_fleet([server(0, compute=100.0, bw=50.0),
                                       server(1, CLOUD, 200.0, 100.0, tps=100.0)]))


def test_plan_rejects_duplicate_service():
    with pytest.raises(PlanViolation) as e:
        AssignmentPlan(0, (PlanEntry(1, 0, 10, 10),), (1,), _states())
    assert e.value.constraint == "C4"


def test_plan_rejects_missing_service():
    with pytest.raises(PlanViolation, match="C4"):
        AssignmentPlan(0, (PlanEntry(1, 0, 10, 10),), (), _states(), request_ids=[1, 2])


def test_plan_exactly_at_capacity_is_fine():
    plan = AssignmentPlan(0, (PlanEntry(1, 0, 25, 60), PlanEntry(2, 0, 25, 40)), (3,), _states(),
                          request_ids=[1, 2, 3])
    assert plan.assignment_vector([1, 2, 3], 2) == (0, 0, 2)
    assert plan.server_of(3) is None


@given(demands=st.lists(st.tuples(st.integers(1, 120), st.integers(1, 60)), min_size=1, max_size=6),
       server_id=st.integers(0, 1))
def test_oversubscribed_plans_are_rejected(demands, server_id):
    states = _states()
    entries = tuple(PlanEntry(i, server_id, float(b), float(c)) for i, (c, b) in enumerate(demands))
    cu = sum(c for c, _ in demands)
    bw = sum(b for _, b in demands)
    over = cu > states[server_id].residual_compute or bw > states[server_id].residual_bandwidth
    if over:
        with pytest.raises(PlanViolation) as e:
            AssignmentPlan(0, entries, (), states)
        assert e.value.constraint in ("C2", "C3")
    else:
        AssignmentPlan(0, entries, (), states)


def test_residuals_below_zero_reject_everything():
    states = (ServerState(0.0, 0.0), ServerState(10.0, 10.0))
    with pytest.raises(PlanViolation):
        AssignmentPlan(0, (PlanEntry(0, 0, 1.0, 1.0),), (), states)
