"""Gauss curvature flow of convex bodies and of their polar bodies.

Submodules
----------
sphere_grid
    Direction grids on S^1 and S^2, covariant derivatives, quadrature and
    interpolation.
convex_body
    Support and radial descriptions of convex bodies, curvature, volume,
    polar bodies and analytic seeds.
flow_engine
    RK4 integration of the primal, radial and dual flows, normalization and
    extinction-time estimation.
monitors
    Duality identity, gamma/lambda/chi monitor, scaling bands and roundness.
io
    Body/config JSON, diagnostics CSV, SVG snapshots and run manifests.
cli
    The ``gcf`` command line.
"""

from importlib.metadata import PackageNotFoundError, version

from . import convex_body, flow_engine, monitors, sphere_grid
from .convex_body import ConvexityLost, GeometryError, OriginNotInterior, RadialField, SupportField
from .flow_engine import FlowConfig, FlowState, Trajectory, run_flow
from .sphere_grid import SphereGrid, make_grid

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0.0.0"

__all__ = [
    "ConvexityLost",
    "FlowConfig",
    "FlowState",
    "GeometryError",
    "OriginNotInterior",
    "RadialField",
    "SphereGrid",
    "SupportField",
    "Trajectory",
    "convex_body",
    "flow_engine",
    "make_grid",
    "monitors",
    "run_flow",
    "sphere_grid",
]
