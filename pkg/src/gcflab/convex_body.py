"""Convex bodies sampled by support and radial functions on a sphere grid.

A body ``K`` with the origin inside is stored as its support function
``s(u) = max_{x in K} <x, u>``. Its curvature function is
``sigma = det(Hess s + s g) / det g``, the reciprocal of the Gauss curvature
at the boundary point with outer normal ``u``, which is
``phi(u) = s(u) u + grad s(u)``.

The polar body ``K* = {x : <x, y> <= 1 for all y in K}`` has radial function
``1/s_K``; its support function is obtained by maximizing ``<x, u>`` over the
boundary points ``x = z / s_K(z)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import sphere_grid as sg

EPS_ORIGIN = 1e-8
EPS_CONVEX = 1e-10


class GeometryError(ValueError):
    """Base class for violations of the body invariants."""


class ConvexityLost(GeometryError):
    """Raised when the support data stops describing a strictly convex body."""

    def __init__(self, node, min_eigenvalue, message=None):
        self.node = node
        self.min_eigenvalue = float(min_eigenvalue)
        if message is None:
            message = (
                f"strict convexity lost at node {node}: smallest eigenvalue "
                f"{self.min_eigenvalue:.3e} (reduce the time step or refine the grid)"
            )
        super().__init__(message)


class OriginNotInterior(GeometryError):
    """Raised when the origin is not strictly inside the body."""


@dataclass(frozen=True, eq=False)
class SupportField:
    """Support function sampled at the nodes of ``grid``."""

    grid: sg.SphereGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", self.grid.check(self.values))

    @property
    def n(self):
        return self.grid.n

    @cached_property
    def derivatives(self):
        return sg.gradient_and_hessian(self.grid, self.values)

    @property
    def gradient(self):
        return self.derivatives[0]

    @property
    def hessian(self):
        return self.derivatives[1]

    @cached_property
    def curvature_form(self):
        """Hess s + s g per node, in chart components."""
        return self.hessian + self.grid.metric * self.values[..., None, None]

    def with_values(self, values):
        return SupportField(self.grid, values)


@dataclass(frozen=True, eq=False)
class RadialField:
    """Radial function ``r(z) = max{t : t z in K}`` sampled at grid nodes."""

    grid: sg.SphereGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", self.grid.check(self.values))

    @property
    def n(self):
        return self.grid.n

    def with_values(self, values):
        return RadialField(self.grid, values)


@dataclass(frozen=True)
class BodyGeometry:
    sigma: np.ndarray
    gauss_curvature: np.ndarray
    points: np.ndarray
    point_norm: np.ndarray
    volume: float
    convex: bool
    min_eigenvalue: float


@dataclass(frozen=True)
class RadialGeometry:
    """Boundary data computed from a radial function, per direction ``z``.

    ``metric`` and ``second_form`` are in chart components; ``support`` is
    the support value at the normal of the boundary point ``r(z) z``.
    """

    metric: np.ndarray
    normal: np.ndarray
    support: np.ndarray
    second_form: np.ndarray
    gauss_curvature: np.ndarray
    points: np.ndarray
    slope: np.ndarray


# -- curvature ---------------------------------------------------------------


def _convexity(body):
    eig = sg.eigvals_sym2(sg.orthonormal(body.grid, body.curvature_form))[..., 0]
    return eig


def check_convex(body):
    """Raise :class:`ConvexityLost` unless ``Hess s + s g`` is positive definite."""
    eig = _convexity(body)
    tol = EPS_CONVEX * float(np.max(np.abs(body.values)))
    if not np.all(eig > tol):
        node = np.unravel_index(int(np.argmin(eig)), eig.shape)
        raise ConvexityLost(tuple(int(i) for i in node), float(np.min(eig)))
    return eig


def sigma_from_support(body):
    """Curvature function sigma_{n-1} = det(Hess s + s g)/det g.

    On the circle this is ``s'' + s``, the radius of curvature.
    """
    check_convex(body)
    return sg.det_over_metric(body.grid, body.curvature_form)


def boundary_points(body):
    """phi(u) = s(u) u + grad s(u), the boundary point with outer normal u."""
    return body.values[..., None] * body.grid.nodes + sg.tangent_vector(
        body.grid, body.gradient
    )


def point_norm_sq(body):
    """|phi(u)|^2 = s^2 + |grad s|^2."""
    return body.values**2 + sg.grad_norm_sq(body.grid, body.gradient)


def geometry(body, check=True):
    """Per-node curvature data and volume of ``body``."""
    eig = _convexity(body)
    tol = EPS_CONVEX * float(np.max(np.abs(body.values)))
    convex = bool(np.all(eig > tol))
    if check and not convex:
        check_convex(body)
    sigma = sg.det_over_metric(body.grid, body.curvature_form)
    with np.errstate(divide="ignore"):
        K = 1.0 / sigma
    pts = boundary_points(body)
    vol = sg.integrate(body.grid, body.values * sigma) / body.n
    return BodyGeometry(
        sigma=sigma,
        gauss_curvature=K,
        points=pts,
        point_norm=np.linalg.norm(pts, axis=-1),
        volume=vol,
        convex=convex,
        min_eigenvalue=float(eig.min()),
    )


def volume(body):
    """V = (1/n) * integral of s * sigma over the sphere."""
    sigma = sigma_from_support(body)
    return sg.integrate(body.grid, body.values * sigma) / body.n


def steiner_point(body):
    """Steiner point (n/|S^{n-1}|) * integral of s(u) u.

    The factor n/|S^{n-1}| I is the inverse of the second moment
    integral of u u^T; the discrete moment matrix is used in its place so
    that translating the body by v moves the point by exactly v.
    """
    g = body.grid
    if "moment" not in g._cache:
        u = g.nodes.reshape(-1, g.n)
        g._cache["moment"] = np.linalg.inv((u * g.weights.reshape(-1, 1)).T @ u)
    wf = (body.values * g.weights).reshape(-1)
    return g._cache["moment"] @ (wf @ g.nodes.reshape(-1, g.n))


def translate(body, v):
    """Support function of ``K + v``."""
    return body.with_values(body.values + body.grid.nodes @ np.asarray(v, dtype=float))


def recentre(body):
    """Translate ``body`` so its Steiner point sits at the origin."""
    return translate(body, -steiner_point(body))


def dual_speed(polar_body):
    """Normal speed of the polar flow,
    s*^{n+2} sigma* / (s*^2 + |grad s*|^2)^{n/2}.

    Equivalently <phi*, nu*>^{n+2} / (|phi*|^n K*).
    """
    n = polar_body.n
    sigma = sigma_from_support(polar_body)
    s = polar_body.values
    return s ** (n + 2) * sigma / point_norm_sq(polar_body) ** (n / 2)


# -- radial description ---------------------------------------------------------


def geometry_from_radial(rad):
    """Metric, unit normal, support value and second fundamental form of
    the boundary parametrized by ``z -> r(z) z``.

    With ``w = sqrt(r^2 + |grad r|^2)``::

        g_ij = r^2 g0_ij + r_i r_j
        nu   = (r z - grad r) / w
        s    = r^2 / w
        h_ij = (-r Hess_ij r + 2 r_i r_j + r^2 g0_ij) / w
    """
    grid = rad.grid
    r = rad.values
    if np.any(r <= 0):
        raise OriginNotInterior("radial function must be positive")
    dr, H = sg.gradient_and_hessian(grid, r)
    outer = dr[..., :, None] * dr[..., None, :]
    g0 = grid.metric
    w = np.sqrt(r**2 + sg.grad_norm_sq(grid, dr))
    metric = r[..., None, None] ** 2 * g0 + outer
    normal = (r[..., None] * grid.nodes - sg.tangent_vector(grid, dr)) / w[..., None]
    support = r**2 / w
    h = (-r[..., None, None] * H + 2 * outer + r[..., None, None] ** 2 * g0) / w[
        ..., None, None
    ]
    if grid.n == 2:
        K = h[..., 0, 0] / metric[..., 0, 0]
    else:
        K = (h[..., 0, 0] * h[..., 1, 1] - h[..., 0, 1] ** 2) / (
            metric[..., 0, 0] * metric[..., 1, 1] - metric[..., 0, 1] ** 2
        )
    return RadialGeometry(
        metric=metric,
        normal=normal,
        support=support,
        second_form=h,
        gauss_curvature=K,
        points=r[..., None] * grid.nodes,
        slope=w,
    )


def principal_curvatures(rad, geom=None):
    """Ascending principal curvatures (eigenvalues of g^{-1} h) per node."""
    geom = geometry_from_radial(rad) if geom is None else geom
    g, h = geom.metric, geom.second_form
    if rad.n == 2:
        return (h / g)[..., 0, :]
    # symmetric square root free route: eigenvalues of g^{-1} h are real
    tr = np.einsum("...ij,...ji->...", np.linalg.inv(g), h)
    det = geom.gauss_curvature
    disc = np.sqrt(np.maximum(tr**2 / 4 - det, 0.0))
    return np.stack([tr / 2 - disc, tr / 2 + disc], axis=-1)


# -- support maximization -----------------------------------------------------


def _support_of_curve(grid, r, targets, iterations=12):
    """max over the boundary ``r(z) z`` of <x, u> for each target ``u``.

    Discrete argmax over the grid directions, then safeguarded Newton
    iterations on a smooth interpolant of ``r``.
    """
    n = grid.n
    flat_r = r.reshape(-1)
    flat_z = grid.nodes.reshape(-1, n)
    tgt = targets.reshape(-1, n)
    pts = flat_r[:, None] * flat_z
    best = np.empty(len(tgt))
    arg = np.empty(len(tgt), dtype=int)
    chunk = max(1, 2_000_000 // len(pts))
    for lo in range(0, len(tgt), chunk):
        scores = tgt[lo : lo + chunk] @ pts.T
        j = np.argmax(scores, axis=1)
        arg[lo : lo + chunk] = j
        best[lo : lo + chunk] = scores[np.arange(len(j)), j]

    interp = sg.SphereInterpolant(grid, r)
    coords = np.stack([c.reshape(-1)[arg] for c in grid.coords], axis=-1)
    max_step = np.asarray(grid.spacing)

    def objective(c, rows=slice(None)):
        parts = interp.partials(c)
        z, dz, ddz = sg.chart_point(n, c)
        u = tgt[rows]
        a = np.einsum("ka,ka->k", z, u)
        da = np.einsum("kia,ka->ki", dz, u)
        dda = np.einsum("kija,ka->kij", ddz, u)
        if n == 2:
            f, f_t, f_tt = parts
            df = f_t[:, None]
            ddf = f_tt[:, None, None]
        else:
            f, f_t, f_p, f_tt, f_tp, f_pp = parts
            df = np.stack([f_t, f_p], axis=-1)
            ddf = np.stack(
                [np.stack([f_tt, f_tp], -1), np.stack([f_tp, f_pp], -1)], axis=-2
            )
        val = f * a
        grad = df * a[:, None] + f[:, None] * da
        hess = (
            ddf * a[:, None, None]
            + df[:, :, None] * da[:, None, :]
            + da[:, :, None] * df[:, None, :]
            + f[:, None, None] * dda
        )
        return val, grad, hess

    val, grad, hess = objective(coords)
    val = np.maximum(val, best)
    active = np.arange(len(tgt))
    for _ in range(iterations):
        g_a, h_a, v_a = grad[active], hess[active], val[active]
        if n == 2:
            H = h_a[:, 0, 0]
            step = np.where(H < 0, -g_a[:, 0] / np.where(H < 0, H, -1.0), g_a[:, 0])
            step = step[:, None]
        else:
            # shift the Hessian to negative definite before the Newton solve
            ev = np.linalg.eigvalsh(h_a)[:, -1]
            shift = np.where(ev > -1e-12 * np.abs(v_a), ev + 1e-6 * np.abs(v_a) + 1e-14, 0.0)
            Hs = h_a - shift[:, None, None] * np.eye(2)
            step = -np.linalg.solve(Hs, g_a[..., None])[..., 0]
        scale = np.max(np.abs(step) / max_step, axis=-1)
        step = step / np.maximum(1.0, scale)[:, None]
        new = coords[active] + step
        nval, ngrad, nhess = objective(new, active)
        ok = nval >= v_a
        idx = active[ok]
        coords[idx] = new[ok]
        val[idx] = nval[ok]
        grad[idx] = ngrad[ok]
        hess[idx] = nhess[ok]
        active = active[ok & (np.max(np.abs(step), axis=-1) > 1e-13)]
        if active.size == 0:
            break
    return val.reshape(targets.shape[:-1])


def support_from_radial(rad, check=True):
    """Support function of the body whose radial function is ``rad``."""
    r = rad.values
    if np.any(~np.isfinite(r)) or np.any(r <= 0):
        raise OriginNotInterior("radial function must be finite and positive")
    s = _support_of_curve(rad.grid, r, rad.grid.nodes)
    body = SupportField(rad.grid, s)
    if check:
        check_convex(body)
    return body


def _require_origin_inside(body):
    smax = float(np.max(body.values))
    if not float(np.min(body.values)) > EPS_ORIGIN * max(smax, 0.0):
        raise OriginNotInterior(
            f"min support {float(np.min(body.values)):.3e} does not clear "
            f"{EPS_ORIGIN:g} * max support"
        )


def polar(body):
    """Support function of the polar body, via its radial function 1/s."""
    _require_origin_inside(body)
    check_convex(body)
    return support_from_radial(RadialField(body.grid, 1.0 / body.values))


def radial_from_support(body):
    """Radial function r_K = 1 / s_{K*}."""
    return RadialField(body.grid, 1.0 / polar(body).values)


def upsample(body, factor):
    """The same body sampled on a grid ``factor`` times finer per direction."""
    if factor == 1:
        return body
    grid = body.grid
    fine = sg.make_grid(grid.n, [m * factor for m in grid.shape], grid.scheme)
    values = sg.resample(grid, body.values, fine.nodes)
    return type(body)(fine, values)


# -- analytic seeds -------------------------------------------------------------


def ball(grid, radius=1.0, center=None):
    s = np.full(grid.shape, float(radius))
    body = SupportField(grid, s)
    return body if center is None else translate(body, center)


def ellipsoid(grid, semi_axes, center=None):
    """Axis-aligned ellipsoid, s(u) = sqrt(sum a_i^2 u_i^2) + <c, u>."""
    a = np.asarray(semi_axes, dtype=float)
    if a.shape != (grid.n,) or np.any(a <= 0):
        raise ValueError(f"need {grid.n} positive semi-axes, got {semi_axes}")
    s = np.sqrt(np.sum((a * grid.nodes) ** 2, axis=-1))
    body = SupportField(grid, s)
    return body if center is None else translate(body, center)


def perturbed_ball(grid, modes, radius=1.0):
    """radius + sum amp * mode_k, with cos(k theta) on the circle and the
    zonal Legendre polynomial P_k(cos colat) on the sphere."""
    s = np.full(grid.shape, float(radius))
    for k, amp in modes:
        if grid.n == 2:
            s = s + amp * np.cos(k * grid.coords[0])
        else:
            coef = np.zeros(int(k) + 1)
            coef[-1] = 1.0
            s = s + amp * np.polynomial.legendre.legval(grid.nodes[..., 2], coef)
    return SupportField(grid, s)


def ellipse_radial(theta, a, b):
    """Radial function of the centered ellipse with semi-axes a, b."""
    return a * b / np.sqrt((b * np.cos(theta)) ** 2 + (a * np.sin(theta)) ** 2)
