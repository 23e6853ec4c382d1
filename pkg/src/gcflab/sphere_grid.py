"""Discretizations of the unit circle and the unit 2-sphere.

The circle uses ``N`` equispaced angles with Fourier (spectral)
differentiation by default, or 4th-order periodic central differences with
``scheme="fd4"``. The 2-sphere uses a colatitude/longitude chart whose
latitude rows are offset half a cell from the poles; derivative stencils
reach across a pole through ghost rows, i.e. the row next to the pole
rotated by half a turn in longitude.

Fields are plain numpy arrays shaped like ``grid.shape``. Gradients carry
one trailing axis of ``n - 1`` chart components and symmetric tensors two.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RectBivariateSpline

MIN_RESOLUTION = 4

# Real-axis stability interval of classical RK4.
RK4_REAL_STABILITY = 2.785


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Immutable node set, quadrature and chart data for S^{n-1}.

    Attributes
    ----------
    n : int
        Ambient dimension, 2 or 3.
    shape : tuple of int
        ``(N,)`` for the circle, ``(n_lat, n_lon)`` for the sphere.
    nodes : ndarray, shape ``shape + (n,)``
        Unit vectors.
    weights : ndarray, shape ``shape``
        Quadrature weights (arc length or cell solid angle).
    coords : tuple of ndarray
        Chart coordinates per node: ``(theta,)`` or ``(colat, lon)``.
    spacing : tuple of float
        Chart step per coordinate.
    metric : ndarray, shape ``shape + (n-1, n-1)``
        Round metric in the chart.
    basis : ndarray, shape ``shape + (n-1, n)``
        Ambient coordinate vectors d(node)/d(coord_i).
    """

    n: int
    shape: tuple
    nodes: np.ndarray
    weights: np.ndarray
    coords: tuple
    spacing: tuple
    metric: np.ndarray
    basis: np.ndarray
    scheme: str = "fd2"
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def size(self):
        return int(np.prod(self.shape))

    @property
    def area(self):
        """Total measure of the sphere, 2*pi or 4*pi."""
        return 2.0 * np.pi if self.n == 2 else 4.0 * np.pi

    @property
    def resolution(self):
        return list(self.shape)

    def check(self, f, trailing=()):
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape + tuple(trailing):
            raise ValueError(
                f"field of shape {f.shape} is not aligned with grid {self.shape}"
            )
        return f

    def trig(self):
        """Cached (sin, cos) of colatitude on the sphere."""
        if "trig" not in self._cache:
            c = self.coords[0]
            self._cache["trig"] = (np.sin(c), np.cos(c))
        return self._cache["trig"]


SCHEMES = {2: ("spectral", "fd4"), 3: ("fd2",)}


def make_grid(n, resolution, scheme=None):
    """Build a grid on S^{n-1}.

    ``resolution`` is ``N`` (or ``[N]``) for the circle and
    ``(n_lat, n_lon)`` for the sphere; a single integer ``m`` for the
    sphere means ``(m, 2m)``. ``n_lon`` must be even so the pole shift by
    half a turn lands on a node.

    ``scheme`` selects the circle's derivative operator: ``"spectral"``
    (default) or ``"fd4"``. The sphere always uses ``"fd2"``.
    """
    res = list(np.atleast_1d(resolution).astype(int))
    if n in SCHEMES:
        scheme = SCHEMES[n][0] if scheme is None else scheme
        if scheme not in SCHEMES[n]:
            raise ValueError(f"scheme {scheme!r} not available for n={n}")
    if n == 2:
        if len(res) != 1:
            raise ValueError("the circle takes a single node count")
        (N,) = res
        if N < MIN_RESOLUTION:
            raise ValueError(f"resolution {N} below minimum {MIN_RESOLUTION}")
        h = 2.0 * np.pi / N
        theta = h * np.arange(N)
        nodes = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        weights = np.full(N, h)
        metric = np.ones((N, 1, 1))
        basis = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)[:, None, :]
        return SphereGrid(
            2, (N,), nodes, weights, (theta,), (h,), metric, basis, scheme
        )
    if n == 3:
        if len(res) == 1:
            res = [res[0], 2 * res[0]]
        if len(res) != 2:
            raise ValueError("the sphere takes (n_lat, n_lon)")
        n_lat, n_lon = res
        if min(n_lat, n_lon) < MIN_RESOLUTION:
            raise ValueError(f"resolution {res} below minimum {MIN_RESOLUTION}")
        if n_lon % 2:
            raise ValueError("n_lon must be even")
        ht = np.pi / n_lat
        hp = 2.0 * np.pi / n_lon
        colat1 = ht * (np.arange(n_lat) + 0.5)
        lon1 = hp * np.arange(n_lon)
        colat, lon = np.meshgrid(colat1, lon1, indexing="ij")
        st, ct = np.sin(colat), np.cos(colat)
        sp, cp = np.sin(lon), np.cos(lon)
        nodes = np.stack([st * cp, st * sp, ct], axis=-1)
        weights = 2.0 * st * np.sin(ht / 2) * hp
        metric = np.zeros(colat.shape + (2, 2))
        metric[..., 0, 0] = 1.0
        metric[..., 1, 1] = st**2
        basis = np.stack(
            [
                np.stack([ct * cp, ct * sp, -st], axis=-1),
                np.stack([-st * sp, st * cp, np.zeros_like(st)], axis=-1),
            ],
            axis=-2,
        )
        return SphereGrid(
            3, (n_lat, n_lon), nodes, weights, (colat, lon), (ht, hp), metric, basis
        )
    raise ValueError(f"unsupported dimension n={n}; only 2 and 3 are gridded")


# -- finite differences ----------------------------------------------------


def _d1_circle(f, h):
    return (
        np.roll(f, 2) - 8 * np.roll(f, 1) + 8 * np.roll(f, -1) - np.roll(f, -2)
    ) / (12 * h)


def _d2_circle(f, h):
    return (
        -np.roll(f, 2)
        + 16 * np.roll(f, 1)
        - 30 * f
        + 16 * np.roll(f, -1)
        - np.roll(f, -2)
    ) / (12 * h * h)


def _spectral_circle(f):
    N = f.shape[0]
    F = np.fft.rfft(f)
    k = np.arange(F.size, dtype=float)
    ik = 1j * k
    if N % 2 == 0:
        ik[-1] = 0.0  # the Nyquist mode has no resolvable odd derivative
    d1 = np.fft.irfft(ik * F, n=N)
    d2 = np.fft.irfft(-(k**2) * F, n=N)
    return d1, d2


def _circle(grid, f):
    if grid.scheme == "spectral":
        return _spectral_circle(f)
    h = grid.spacing[0]
    return _d1_circle(f, h), _d2_circle(f, h)


def _pad_poles(f):
    half = f.shape[1] // 2
    return np.concatenate(
        [np.roll(f[:1], half, axis=1), f, np.roll(f[-1:], half, axis=1)], axis=0
    )


def _chart_partials(grid, f):
    """Chart partials (f_t, f_p, f_tt, f_tp, f_pp) on the sphere."""
    ht, hp = grid.spacing
    P = _pad_poles(f)
    f_t = (P[2:] - P[:-2]) / (2 * ht)
    f_tt = (P[2:] - 2 * P[1:-1] + P[:-2]) / ht**2
    Pp = (np.roll(P, -1, axis=1) - np.roll(P, 1, axis=1)) / (2 * hp)
    f_p = Pp[1:-1]
    f_pp = (np.roll(f, -1, axis=1) - 2 * f + np.roll(f, 1, axis=1)) / hp**2
    f_tp = (Pp[2:] - Pp[:-2]) / (2 * ht)
    return f_t, f_p, f_tt, f_tp, f_pp


def differentiate(grid, f):
    """Covariant gradient components of ``f`` in the chart.

    On the circle this is df/dtheta; on the sphere the pair
    (df/dcolat, df/dlon). Use :func:`raise_index` or :func:`grad_norm_sq`
    for metric-dependent quantities.
    """
    f = grid.check(f)
    if grid.n == 2:
        return _circle(grid, f)[0][:, None]
    f_t, f_p, *_ = _chart_partials(grid, f)
    return np.stack([f_t, f_p], axis=-1)


def hessian(grid, f):
    """Covariant Hessian of ``f`` including the connection terms."""
    f = grid.check(f)
    if grid.n == 2:
        return _circle(grid, f)[1][:, None, None]
    f_t, f_p, f_tt, f_tp, f_pp = _chart_partials(grid, f)
    st, ct = grid.trig()
    H = np.empty(grid.shape + (2, 2))
    H[..., 0, 0] = f_tt
    H[..., 0, 1] = H[..., 1, 0] = f_tp - (ct / st) * f_p
    H[..., 1, 1] = f_pp + st * ct * f_t
    return H


def gradient_and_hessian(grid, f):
    """Both operators from one pass over the stencil."""
    f = grid.check(f)
    if grid.n == 2:
        d1, d2 = _circle(grid, f)
        return d1[:, None], d2[:, None, None]
    f_t, f_p, f_tt, f_tp, f_pp = _chart_partials(grid, f)
    st, ct = grid.trig()
    H = np.empty(grid.shape + (2, 2))
    H[..., 0, 0] = f_tt
    H[..., 0, 1] = H[..., 1, 0] = f_tp - (ct / st) * f_p
    H[..., 1, 1] = f_pp + st * ct * f_t
    return np.stack([f_t, f_p], axis=-1), H


def integrate(grid, f):
    """Quadrature of ``f`` against the round measure."""
    f = grid.check(f)
    return float(np.sum(f * grid.weights))


# -- metric helpers --------------------------------------------------------


def raise_index(grid, grad):
    if grid.n == 2:
        return grad
    out = grad.copy()
    out[..., 1] /= grid.trig()[0] ** 2
    return out


def grad_norm_sq(grid, grad):
    """Squared round-metric norm of a covariant gradient."""
    if grid.n == 2:
        return grad[..., 0] ** 2
    return grad[..., 0] ** 2 + (grad[..., 1] / grid.trig()[0]) ** 2


def tangent_vector(grid, grad):
    """Ambient vector of the gradient, tangent to the sphere at each node."""
    up = raise_index(grid, grad)
    return np.einsum("...i,...ia->...a", up, grid.basis)


def orthonormal(grid, T):
    """Components of a symmetric 2-tensor in the orthonormal chart frame."""
    if grid.n == 2:
        return T
    st = grid.trig()[0]
    out = T.copy()
    out[..., 0, 1] = out[..., 1, 0] = T[..., 0, 1] / st
    out[..., 1, 1] = T[..., 1, 1] / st**2
    return out


def det_over_metric(grid, T):
    """det(T_ij) / det(g_ij) per node."""
    if grid.n == 2:
        return T[..., 0, 0]
    det = T[..., 0, 0] * T[..., 1, 1] - T[..., 0, 1] ** 2
    return det / grid.trig()[0] ** 2


def eigvals_sym2(T):
    """Ascending eigenvalues of per-node symmetric 2x2 (or 1x1) tensors."""
    if T.shape[-1] == 1:
        return T[..., 0, :]
    a, b, c = T[..., 0, 0], T[..., 0, 1], T[..., 1, 1]
    mean = 0.5 * (a + c)
    rad = np.hypot(0.5 * (a - c), b)
    return np.stack([mean - rad, mean + rad], axis=-1)


# -- stability data for explicit stepping -----------------------------------


POLAR_MIN_MODES = 2


def polar_cutoff(grid):
    """Highest longitudinal wavenumber kept on each latitude row.

    Never below ``POLAR_MIN_MODES``: the m-th mode of a smooth field
    vanishes like sin^m(colat), and dropping it costs a curvature error of
    order sin^(m-2), so m = 2 must survive on every row.
    """
    n_lon = grid.shape[1]
    st = np.sin(grid.coords[0][:, 0])
    keep = np.maximum(POLAR_MIN_MODES, np.floor(0.5 * n_lon * st))
    return np.minimum(keep, n_lon // 2).astype(int)


def polar_filter(grid, f):
    """Remove longitudinal modes the pole-adjacent rows cannot carry.

    Row ``i`` keeps wavenumbers up to ``n_lon/2 * sin(colat_i)`` so that its
    effective zonal spacing matches the equator. Identity on the circle.
    """
    if grid.n == 2:
        return f
    F = np.fft.rfft(f, axis=1)
    m = np.arange(F.shape[1])[None, :]
    F[m > polar_cutoff(grid)[:, None]] = 0.0
    return np.fft.irfft(F, n=grid.shape[1], axis=1)


def laplacian_spectral_radius(grid):
    """Upper bound on the largest eigenvalue magnitude of the discrete
    second-derivative operator seen by a flow (after polar filtering)."""
    if "lap_radius" in grid._cache:
        return grid._cache["lap_radius"]
    if grid.n == 2:
        h = grid.spacing[0]
        val = (np.pi / h) ** 2 if grid.scheme == "spectral" else 16.0 / (3.0 * h * h)
    else:
        ht, hp = grid.spacing
        st = np.sin(grid.coords[0][:, 0])
        m = polar_cutoff(grid)
        zonal = 4.0 * np.sin(0.5 * m * hp) ** 2 / (st * hp) ** 2
        # cross and first-order terms enlarge the bound by a modest factor
        val = 1.5 * float(np.max(4.0 / ht**2 + zonal))
    grid._cache["lap_radius"] = val
    return val


# -- interpolation ---------------------------------------------------------


def chart_of(grid, directions):
    """Chart coordinates of unit vectors, shape ``directions.shape[:-1] + (n-1,)``."""
    d = np.asarray(directions, dtype=float)
    if grid.n == 2:
        return np.mod(np.arctan2(d[..., 1], d[..., 0]), 2 * np.pi)[..., None]
    colat = np.arccos(np.clip(d[..., 2], -1.0, 1.0))
    lon = np.mod(np.arctan2(d[..., 1], d[..., 0]), 2 * np.pi)
    return np.stack([colat, lon], axis=-1)


class SphereInterpolant:
    """Smooth interpolant of a grid field, evaluable off-grid with chart
    derivatives up to second order.

    The circle uses the trigonometric interpolant (exact for resolved
    Fourier modes). The sphere uses a bicubic spline on the chart padded
    across both poles and periodically in longitude, so colatitudes
    slightly outside ``[0, pi]`` are valid and mean the continuation
    through the pole.
    """

    _PAD = 3

    def __init__(self, grid, f):
        self.grid = grid
        f = grid.check(f)
        if grid.n == 2:
            N = grid.shape[0]
            self._coef = np.fft.rfft(f) / N
            k = np.arange(self._coef.size, dtype=float)
            weight = np.full(k.size, 2.0)
            weight[0] = 1.0
            if N % 2 == 0:
                weight[-1] = 1.0
            self._k = k
            self._w = weight
            self._nyquist = N % 2 == 0
        else:
            p = self._PAD
            ht, hp = grid.spacing
            colat = grid.coords[0][:, 0]
            half = grid.shape[1] // 2
            top = np.roll(f[:p][::-1], half, axis=1)
            bottom = np.roll(f[-p:][::-1], half, axis=1)
            rows = np.concatenate([top, f, bottom], axis=0)
            x = np.concatenate([-colat[:p][::-1], colat, 2 * np.pi - colat[-p:][::-1]])
            z = np.concatenate([rows[:, -p:], rows, rows[:, :p]], axis=1)
            lon = grid.coords[1][0]
            y = np.concatenate([lon[-p:] - 2 * np.pi, lon, lon[:p] + 2 * np.pi])
            self._spline = RectBivariateSpline(x, y, z, kx=3, ky=3, s=0)

    def _fourier(self, theta, orders):
        phase = np.exp(1j * np.multiply.outer(theta, self._k))
        c = self._coef
        if self._nyquist:
            # the Nyquist term is the real cosine mode only
            c = c.copy()
            c[-1] = c[-1].real
        coef = np.stack([c * (1j * self._k) ** m * self._w for m in orders], axis=-1)
        out = (phase @ coef).real
        return tuple(out[..., i] for i in range(len(orders)))

    def partials(self, coords):
        """Value and chart partials at ``coords`` (shape ``(..., n-1)``).

        Returns ``(f, f_t, f_tt)`` on the circle and
        ``(f, f_t, f_p, f_tt, f_tp, f_pp)`` on the sphere.
        """
        coords = np.asarray(coords, dtype=float)
        if self.grid.n == 2:
            return self._fourier(coords[..., 0], (0, 1, 2))
        t = coords[..., 0]
        p = np.mod(coords[..., 1], 2 * np.pi)
        ev = self._spline.ev
        return (
            ev(t, p),
            ev(t, p, dx=1),
            ev(t, p, dy=1),
            ev(t, p, dx=2),
            ev(t, p, dx=1, dy=1),
            ev(t, p, dy=2),
        )

    def __call__(self, coords):
        coords = np.asarray(coords, dtype=float)
        if self.grid.n == 2:
            return self._fourier(coords[..., 0], (0,))[0]
        return self._spline.ev(coords[..., 0], np.mod(coords[..., 1], 2 * np.pi))

    def at(self, directions):
        """Values at ambient unit vectors."""
        return self(chart_of(self.grid, directions))


def resample(grid, f, directions):
    """Interpolate grid field ``f`` at arbitrary unit ``directions``."""
    return SphereInterpolant(grid, f).at(directions)


def chart_point(n, coords):
    """Unit vector and its chart derivatives at chart coordinates.

    Returns ``(z, dz)`` with ``dz[..., i, :]`` the first partials and, for
    second partials, ``ddz[..., i, j, :]`` as a third element.
    """
    if n == 2:
        th = coords[..., 0]
        c, s = np.cos(th), np.sin(th)
        z = np.stack([c, s], axis=-1)
        dz = np.stack([-s, c], axis=-1)[..., None, :]
        ddz = (-z)[..., None, None, :]
        return z, dz, ddz
    t, p = coords[..., 0], coords[..., 1]
    st, ct, sp, cp = np.sin(t), np.cos(t), np.sin(p), np.cos(p)
    zero = np.zeros_like(t)
    z = np.stack([st * cp, st * sp, ct], axis=-1)
    z_t = np.stack([ct * cp, ct * sp, -st], axis=-1)
    z_p = np.stack([-st * sp, st * cp, zero], axis=-1)
    z_tp = np.stack([-ct * sp, ct * cp, zero], axis=-1)
    z_pp = np.stack([-st * cp, -st * sp, zero], axis=-1)
    dz = np.stack([z_t, z_p], axis=-2)
    ddz = np.stack([np.stack([-z, z_tp], axis=-2), np.stack([z_tp, z_pp], axis=-2)], axis=-3)
    return z, dz, ddz
