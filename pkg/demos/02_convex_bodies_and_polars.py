"""
Convex bodies by support function, their curvature and their polars
===================================================================

A body is stored as its support function s on the grid. The radius of
curvature, boundary points, volume and the polar body all follow from s.
"""

import numpy as np

from gcflab import convex_body as cb
from gcflab import monitors as mo
from gcflab import sphere_grid as sg

g = sg.make_grid(2, 256)
E = cb.ellipsoid(g, [2.0, 1.0])

# radius of curvature at the end of the long axis is b^2/a = 1/2
print("sigma at u = (1, 0):", cb.sigma_from_support(E)[0])
print("area (2 pi):", cb.volume(E), 2 * np.pi)

# the polar of a centred ellipse has reciprocal semi-axes
star = cb.polar(E)
print("polar support at u = (1, 0), (0, 1):", star.values[0], star.values[64])
print("involution error:", np.max(np.abs(cb.polar(star).values - E.values)))

# the radial function of K* is 1/s_K, and the support of K is recovered
# from its radial function by maximization
r = cb.radial_from_support(E)
print("support from radial error:", np.max(np.abs(cb.support_from_radial(r).values - E.values)))

# the Steiner point moves with the body
v = np.array([0.3, -0.2])
print("Steiner point of translate:", cb.steiner_point(cb.translate(E, v)))

# an ellipsoid on the sphere
s = sg.make_grid(3, (32, 64))
E3 = cb.ellipsoid(s, [1.5, 1.0, 0.8])
print("3-ellipsoid volume:", cb.volume(E3), "exact", 4 * np.pi / 3 * 1.5 * 0.8)
print("curvature relation check on the sphere:", mo.polar_hessian_check(E3))
