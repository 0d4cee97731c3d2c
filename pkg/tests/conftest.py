import numpy as np
import pytest

from airground.scenario import load_bundled_scenario
from airground.ugv import build_ugv_route, decode_params
from airground.vrp import build_routing_graph
from airground.vrp.model import RoutingGraph, uav_power


@pytest.fixture(scope="session")
def scenario1():
    return load_bundled_scenario("scenario1")


@pytest.fixture(scope="session")
def scenario2():
    return load_bundled_scenario("scenario2")


@pytest.fixture(scope="session")
def scenario3():
    return load_bundled_scenario("scenario3")


@pytest.fixture(scope="session")
def graph1(scenario1):
    """Depot-1 route, stop 1 at its region start, stop 2 at its end."""
    params = decode_params((0.5 / 3, 0.0, 0.5, 1.0, 0.5, 0.5, 0.2),
                           n_depots=len(scenario1.depots))
    route = build_ugv_route(scenario1, params)
    return build_routing_graph(scenario1, route)


def make_graph(seed: int, n_targets: int, n_interior_d: int = 2,
               box_km: float = 4.0, capacity_j: float = 287.7e3,
               horizon: float = 28800.0, stop_window: bool = True):
    """Small synthetic flight instance with sane geometry."""
    rng = np.random.default_rng(seed)
    box = box_km * 1000.0
    home = rng.uniform(0.2 * box, 0.8 * box, 2)
    pts = [home]
    kinds = ["start"]
    lo = [0.0]
    hi = [horizon]
    depot_ref = [1]
    for j in range(n_interior_d):
        pts.append(rng.uniform(0.0, box, 2))
        if stop_window and j == 0:
            kinds.append("stop1")
            depot_ref.append(0)
            a = float(rng.uniform(0.0, horizon / 3))
            lo.append(a)
            hi.append(a + float(rng.uniform(1200.0, horizon / 2)))
        else:
            kinds.append("depot")
            depot_ref.append(j + 2)
            lo.append(0.0)
            hi.append(horizon)
    pts.append(home)
    kinds.append("end")
    depot_ref.append(1)
    lo.append(0.0)
    hi.append(horizon)
    d_count = len(pts)
    for _ in range(n_targets):
        pts.append(rng.uniform(0.0, box, 2))
        kinds.append("target")
        depot_ref.append(0)
        lo.append(0.0)
        hi.append(horizon)
    xy = np.asarray(pts, dtype=float)
    diff = xy[:, None, :] - xy[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    speed = 10.0
    return RoutingGraph(xy=xy, d_count=d_count, kinds=tuple(kinds),
                        depot_ref=tuple(depot_ref),
                        target_ref=tuple(range(n_targets)),
                        win_lo=tuple(lo), win_hi=tuple(hi),
                        cost=dist / speed, speed=speed,
                        power=uav_power(speed), fuel_capacity=capacity_j,
                        horizon=horizon)


# --- acceptance criteria summary ------------------------------------------

def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(label): checked acceptance criterion")


def pytest_sessionstart(session):
    session.acceptance_rows = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    label = marker.args[0]
    rows = item.session.acceptance_rows
    if rep.when == "call":
        rows.append((label, rep.passed))
    elif rep.when == "setup" and rep.failed:
        rows.append((label, False))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    session = getattr(terminalreporter, "_session", None)
    rows = getattr(session, "acceptance_rows", None)
    if not rows:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for label, ok in rows:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}")
