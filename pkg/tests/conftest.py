"""Shared grids, bodies and (expensive) flow runs, computed once per session."""

import numpy as np
import pytest

from gcflab import convex_body as cb
from gcflab import flow_engine as fe
from gcflab import sphere_grid as sg

N_DESK = 256
S2_DESK = (32, 64)


@pytest.fixture(scope="session")
def circle256():
    return sg.make_grid(2, N_DESK)


@pytest.fixture(scope="session")
def sphere32():
    return sg.make_grid(3, S2_DESK)


@pytest.fixture(scope="session")
def ellipse256(circle256):
    return cb.ellipsoid(circle256, [2.0, 1.0])


@pytest.fixture(scope="session")
def perturbed256(circle256):
    return cb.perturbed_ball(circle256, [(3, 0.1)])


def _run(n, resolution, body, flow="primal", snapshot_every=200, **kw):
    config = fe.FlowConfig(n=n, resolution=list(resolution), flow=flow, snapshot_every=snapshot_every, **kw)
    return fe.run_flow(config, body)


@pytest.fixture(scope="session")
def disc_run(circle256):
    return _run(2, [N_DESK], cb.ball(circle256), snapshot_every=1000)


@pytest.fixture(scope="session")
def ball3_run(sphere32):
    return _run(3, S2_DESK, cb.ball(sphere32), snapshot_every=200)


@pytest.fixture(scope="session")
def ellipsoid3_run(sphere32):
    return _run(3, S2_DESK, cb.ellipsoid(sphere32, [1.5, 1.0, 0.8]), snapshot_every=200)


@pytest.fixture(scope="session")
def ellipse_run(ellipse256):
    return _run(2, [N_DESK], ellipse256, snapshot_every=200)


@pytest.fixture(scope="session")
def ellipse_dual_run(ellipse256):
    return _run(2, [N_DESK], ellipse256, flow="dual", snapshot_every=200)


@pytest.fixture(scope="session")
def perturbed_dual_run(perturbed256):
    return _run(2, [N_DESK], perturbed256, flow="dual", snapshot_every=200)


@pytest.fixture(scope="session")
def ellipse_flows_at_0p1(ellipse256):
    """Primal, dual and radial flows of the (2, 1) ellipse integrated to t = 0.1."""
    return {
        kind: fe.integrate_to(fe.FlowState(0.0, fe.initial_field(kind, ellipse256)), 0.1, kind)
        for kind in fe.FLOW_KINDS
    }


def sup(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
