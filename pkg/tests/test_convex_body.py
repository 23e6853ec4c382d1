import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from conftest import sup
from gcflab import convex_body as cb
from gcflab import sphere_grid as sg


def ellipse_support(theta, a, b):
    return np.sqrt((a * np.cos(theta)) ** 2 + (b * np.sin(theta)) ** 2)


def ellipse_curvature_radius(theta, a, b):
    return (a * b) ** 2 / ((a * np.cos(theta)) ** 2 + (b * np.sin(theta)) ** 2) ** 1.5


# -- curvature -------------------------------------------------------------------


@pytest.mark.parametrize("n,res", [(2, 64), (3, (16, 32))])
@pytest.mark.parametrize("R", [0.5, 1.0, 2.5])
def test_ball_sigma(n, res, R):
    g = sg.make_grid(n, res)
    assert sup(cb.sigma_from_support(cb.ball(g, R)), R ** (n - 1)) < 1e-10 * R ** (n - 1)


@pytest.mark.parametrize("scheme,tol", [("spectral", 1e-6), ("fd4", 1e-6)])
def test_ellipse_sigma_at_zero(scheme, tol):
    g = sg.make_grid(2, 256, scheme)
    sigma = cb.sigma_from_support(cb.ellipsoid(g, [2, 1]))
    assert abs(sigma[0] - 0.5) < tol
    assert sup(sigma, ellipse_curvature_radius(g.coords[0], 2, 1)) < 1e-5


def test_translated_ball_sigma_is_one(circle256):
    v = np.array([0.5, 0.0])
    body = cb.SupportField(circle256, 1 + circle256.nodes @ v)
    assert sup(cb.sigma_from_support(body), 1.0) < 2e-11


def test_translation_invariance_of_sigma(circle256, perturbed256):
    moved = cb.translate(perturbed256, [0.2, -0.35])
    # spectral differentiation: round-off grows like N^2 eps
    assert sup(cb.sigma_from_support(moved), cb.sigma_from_support(perturbed256)) < 2e-11


def test_translation_invariance_of_sigma_sphere_second_order():
    # second order in the quadrature-weighted L2 norm; the sup norm is
    # first order on the rows next to the poles
    l2, linf = [], []
    for m in (16, 32, 64):
        g = sg.make_grid(3, m)
        E = cb.ellipsoid(g, [1.5, 1, 0.8])
        d = cb.sigma_from_support(cb.translate(E, [0.2, -0.1, 0.15])) - cb.sigma_from_support(E)
        l2.append(np.sqrt(sg.integrate(g, d * d)))
        linf.append(np.max(np.abs(d)))
    assert np.all(np.log2(np.array(l2[:-1]) / np.array(l2[1:])) > 1.7)
    assert np.all(np.log2(np.array(linf[:-1]) / np.array(linf[1:])) > 0.9)


def test_convexity_lost_reports_node_and_eigenvalue():
    g = sg.make_grid(2, 64)
    th = g.coords[0]
    body = cb.SupportField(g, 1 + 0.5 * np.cos(2 * th))  # s'' + s = 1 - 1.5 cos 2theta
    with pytest.raises(cb.ConvexityLost) as info:
        cb.sigma_from_support(body)
    assert info.value.min_eigenvalue == pytest.approx(-0.5, abs=1e-10)
    assert info.value.node in {(0,), (32,)}
    assert "node" in str(info.value)


def test_geometry_invariants(ellipse256, perturbed256):
    for body in (ellipse256, perturbed256, cb.ellipsoid(sg.make_grid(3, 16), [1.2, 1, 0.9])):
        geo = cb.geometry(body)
        u = body.grid.nodes
        assert sup(np.sum(geo.points * u, axis=-1), body.values) < 1e-10
        assert np.all(body.values <= geo.point_norm + 1e-12)
        assert geo.convex and np.all(geo.sigma > 0)
        assert sup(geo.gauss_curvature * geo.sigma, 1.0) < 1e-12


def test_ellipse_boundary_points_lie_on_ellipse(ellipse256):
    p = cb.geometry(ellipse256).points
    assert sup((p[:, 0] / 2) ** 2 + p[:, 1] ** 2, 1.0) < 1e-12


# -- volume ------------------------------------------------------------------------


def test_volumes():
    g2 = sg.make_grid(2, 256)
    assert abs(cb.volume(cb.ball(g2)) - np.pi) < 1e-10
    assert abs(cb.volume(cb.ellipsoid(g2, [2, 1])) - 2 * np.pi) < 1e-6
    g3 = sg.make_grid(3, (32, 64))
    assert abs(cb.volume(cb.ball(g3)) - 4 * np.pi / 3) < 1e-8
    assert abs(cb.volume(cb.ellipsoid(g3, [1.5, 1, 0.8])) / (4 * np.pi / 3 * 1.2) - 1) < 5e-3


@settings(max_examples=20, deadline=None)
@given(c=st.floats(0.2, 5.0), n=st.sampled_from([2, 3]))
def test_scaling_laws(c, n):
    g = sg.make_grid(n, 32 if n == 2 else 12)
    body = cb.ellipsoid(g, [1.3, 1.0, 0.9][:n])
    scaled = body.with_values(c * body.values)
    assert cb.volume(scaled) == pytest.approx(c**n * cb.volume(body), rel=1e-12)
    assert sup(cb.sigma_from_support(scaled), c ** (n - 1) * cb.sigma_from_support(body)) < 1e-12 * c ** (n - 1) * 10


# -- Steiner point -------------------------------------------------------------------


@pytest.mark.parametrize("n,res", [(2, 64), (3, (16, 32))])
def test_steiner_point_of_centred_ball(n, res):
    g = sg.make_grid(n, res)
    assert np.max(np.abs(cb.steiner_point(cb.ball(g, 1.7)))) < 1e-12


@settings(max_examples=25, deadline=None)
@given(
    v=st.lists(st.floats(-0.6, 0.6), min_size=3, max_size=3),
    n=st.sampled_from([2, 3]),
)
def test_steiner_point_translated_ball(v, n):
    g = sg.make_grid(n, 64 if n == 2 else (16, 32))
    v = np.array(v[:n])
    body = cb.SupportField(g, 1 + g.nodes @ v)
    assert np.max(np.abs(cb.steiner_point(body) - v)) < 1e-10


def test_steiner_point_translated_ellipse(circle256):
    E = cb.ellipsoid(circle256, [2, 1], center=[0.3, 0.0])
    assert np.max(np.abs(cb.steiner_point(E) - [0.3, 0.0])) < 1e-6
    assert np.max(np.abs(cb.steiner_point(cb.recentre(E)))) < 1e-12


# -- radial description --------------------------------------------------------------


@pytest.mark.parametrize("n,res", [(2, 64), (3, (16, 32))])
def test_radial_geometry_of_ball(n, res):
    g = sg.make_grid(n, res)
    R = 1.7
    geo = cb.geometry_from_radial(cb.RadialField(g, np.full(g.shape, R)))
    assert sup(geo.metric, R**2 * g.metric) < 1e-12
    assert sup(geo.normal, g.nodes) < 1e-12
    assert sup(geo.support, R) < 1e-12
    assert sup(geo.second_form, R * g.metric) < 1e-12
    assert sup(geo.gauss_curvature, R ** (1 - n)) < 1e-12


def test_radial_geometry_of_ellipse(circle256):
    th = circle256.coords[0]
    rad = cb.RadialField(circle256, cb.ellipse_radial(th, 2, 1))
    geo = cb.geometry_from_radial(rad)
    assert sup(np.linalg.norm(geo.normal, axis=-1), 1.0) < 1e-10
    nu_angle = np.arctan2(geo.normal[:, 1], geo.normal[:, 0])
    # support value at the normal against the analytic support function
    assert sup(geo.support, ellipse_support(nu_angle, 2, 1)) < 1e-6
    # Gauss curvature against 1/sigma at the same normal
    assert sup(geo.gauss_curvature, 1 / ellipse_curvature_radius(nu_angle, 2, 1)) < 1e-6
    # and against the support-side curvature resampled at the normal
    K_support = 1 / sg.resample(circle256, cb.sigma_from_support(cb.ellipsoid(circle256, [2, 1])), geo.normal)
    assert sup(geo.gauss_curvature, K_support) < 1e-6


def test_radial_geometry_support_matches_support_from_radial(circle256):
    rad = cb.RadialField(circle256, cb.ellipse_radial(circle256.coords[0], 2, 1))
    geo = cb.geometry_from_radial(rad)
    s = cb.support_from_radial(rad)
    assert sup(sg.resample(circle256, s.values, geo.normal), geo.support) < 1e-6


def test_support_from_radial(circle256):
    g = circle256
    assert sup(cb.support_from_radial(cb.RadialField(g, np.full(g.shape, 1.3))).values, 1.3) < 1e-12
    s = cb.support_from_radial(cb.RadialField(g, cb.ellipse_radial(g.coords[0], 2, 1)))
    assert abs(s.values[0] - 2) < 1e-4
    assert sup(s.values, ellipse_support(g.coords[0], 2, 1)) < 1e-10


def test_support_from_radial_rejects_degenerate(circle256):
    r = cb.ellipse_radial(circle256.coords[0], 2, 1)
    r[10] = 0.0
    with pytest.raises(cb.GeometryError):
        cb.support_from_radial(cb.RadialField(circle256, r))


def test_radial_from_support(circle256, ellipse256, perturbed256):
    r = cb.radial_from_support(ellipse256).values
    assert abs(r[0] - 2) < 1e-4 and abs(r[64] - 1) < 1e-4
    assert sup(r, cb.ellipse_radial(circle256.coords[0], 2, 1)) < 1e-10
    assert sup(cb.radial_from_support(cb.ball(circle256, 0.7)).values, 0.7) < 1e-12
    back = cb.support_from_radial(cb.radial_from_support(perturbed256))
    assert sup(back.values, perturbed256.values) < 1e-4


def _brute_force_radial(grid, s, z):
    """min over u with <z,u> > 0 of s(u)/<z,u>, densely sampled and then
    polished by a bounded scalar minimization on the interpolant."""
    interp = sg.SphereInterpolant(grid, s)
    dense = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
    sd = interp(dense[:, None])
    zt = np.arctan2(z[1], z[0])
    ratio = np.where(np.cos(dense - zt) > 1e-9, sd / np.maximum(np.cos(dense - zt), 1e-300), np.inf)
    t0 = dense[np.argmin(ratio)]
    h = 2 * np.pi / 4096
    res = minimize_scalar(
        lambda t: interp(np.array([[t]]))[0] / np.cos(t - zt),
        bounds=(t0 - 2 * h, t0 + 2 * h),
        method="bounded",
        options={"xatol": 1e-13},
    )
    return res.fun


@pytest.mark.parametrize("N", [48, 64])
def test_radial_fast_path_matches_brute_force(N):
    g = sg.make_grid(2, N)
    body = cb.perturbed_ball(g, [(3, 0.08), (2, 0.05)])
    fast = cb.radial_from_support(body).values
    brute = np.array([_brute_force_radial(g, body.values, z) for z in g.nodes])
    assert sup(fast, brute) < 1e-8


# -- polar ---------------------------------------------------------------------------


@pytest.mark.parametrize("n,res", [(2, 64), (3, (16, 32))])
def test_polar_of_ball(n, res):
    g = sg.make_grid(n, res)
    assert sup(cb.polar(cb.ball(g, 2.0)).values, 0.5) < 1e-12


def test_polar_of_ellipse(circle256, ellipse256):
    star = cb.polar(ellipse256)
    assert abs(star.values[64] - 1) < 1e-4
    assert sup(star.values, ellipse_support(circle256.coords[0], 0.5, 1.0)) < 1e-10


def test_polar_of_ellipsoid_sphere():
    g = sg.make_grid(3, (32, 64))
    star = cb.polar(cb.ellipsoid(g, [1.5, 1, 0.8]))
    assert sup(star.values, cb.ellipsoid(g, [1 / 1.5, 1, 1 / 0.8]).values) < 1e-3


def test_polar_involution(perturbed256):
    assert sup(cb.polar(cb.polar(perturbed256)).values, perturbed256.values) < 1e-4
    g3 = sg.make_grid(3, (32, 64))
    P = cb.perturbed_ball(g3, [(2, 0.1)])
    assert sup(cb.polar(cb.polar(P)).values, P.values) < 1e-4


def test_polar_requires_origin_inside(circle256):
    off = cb.ball(circle256, 1.0, center=[1.5, 0.0])
    with pytest.raises(cb.OriginNotInterior):
        cb.polar(off)
    edge = cb.ball(circle256, 1.0, center=[1.0, 0.0])
    with pytest.raises(cb.OriginNotInterior):
        cb.polar(edge)


# -- seeds -----------------------------------------------------------------------------


def test_seed_validation(circle256):
    with pytest.raises(ValueError):
        cb.ellipsoid(circle256, [1, 2, 3])
    with pytest.raises(ValueError):
        cb.ellipsoid(circle256, [1, -2])


def test_perturbed_ball_sphere_is_zonal():
    g = sg.make_grid(3, 16)
    P = cb.perturbed_ball(g, [(2, 0.1)])
    z = g.nodes[..., 2]
    assert sup(P.values, 1 + 0.1 * (3 * z * z - 1) / 2) < 1e-14


def test_upsample_preserves_body(ellipse256):
    fine = cb.upsample(ellipse256, 2)
    assert fine.grid.shape == (512,)
    assert sup(fine.values, ellipse_support(fine.grid.coords[0], 2, 1)) < 1e-10
