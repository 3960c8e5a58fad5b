from __future__ import annotations

from dataclasses import replace

import pytest
from hypothesis import HealthCheck, settings

from edgesched.domain import CLOUD, EDGE, ServerSpec, ServiceRequest, classify_service, validate_fleet
from edgesched.simulator import ScenarioConfig, SmallInstance, cloud_server, edge_server

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def pytest_configure(config):
    config.addinivalue_line("markers", "derived: spec example whose value is derived independently")
    config.addinivalue_line("markers", "acceptance: top-level acceptance criterion")
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def report_line(request):
    """Record one acceptance line; printed in the terminal summary."""
    def record(number: int, ok: bool, detail: str):
        request.config.acceptance_lines.append(
            f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
    return record


def server(j, kind=EDGE, compute=1000.0, bw=100.0, pa=100.0, pt=20.0, pi=30.0, tps=50.0):
    return ServerSpec(j, kind, compute, bw, pa, pt, pi, tps)


def small_fleet(n_edges=1, edge_compute=1000.0, edge_bw=100.0, cloud_compute=2000.0, cloud_bw=300.0):
    specs = [server(j, compute=edge_compute, bw=edge_bw) for j in range(n_edges)]
    specs.append(server(n_edges, CLOUD, cloud_compute, cloud_bw, 400.0, 50.0, 80.0, 100.0))
    return validate_fleet(specs)


def request(i=0, prompt=30, output=70, deadline=4.0, bw=20.0, compute=None, arrival=0,
            window=0.25, cls=0):
    return ServiceRequest(i, arrival, bw * window, prompt, output, deadline,
                          float(prompt + output) if compute is None else compute, bw, cls)


def two_class_instance() -> SmallInstance:
    """Fixed 3-server / 2-class stationary instance: default edge, a slower
    but more frugal edge, the default cloud; a tight-deadline mid-size
    service and a loose-deadline large one."""
    cfg = ScenarioConfig()
    fleet = validate_fleet([edge_server(0),
                            replace(edge_server(1), power_active=60.0, tokens_per_second=40.0),
                            cloud_server(2)])
    bounds = cfg.class_bounds()
    reqs = []
    for i, (p, o, d) in enumerate([(30, 100, 3.0), (40, 140, 5.5)]):
        r = ServiceRequest(i, 0, 20.0 * cfg.upload_window, p, o, d, cfg.kappa * (p + o), 20.0)
        reqs.append(replace(r, service_class=classify_service(r, bounds)))
    return SmallInstance(fleet, tuple(reqs), cfg.slot_length, cfg.weights, cfg.e_ref)
