"""
Derivatives and quadrature on the circle and the sphere
=======================================================

Fields live on a grid of unit directions. On the circle derivatives are
spectral by default; on the sphere a latitude-longitude grid with
second-order differences is used and the poles are never nodes.
"""

import numpy as np

from gcflab import sphere_grid as sg

# the circle: a trigonometric polynomial is differentiated exactly
g = sg.make_grid(2, 64)
th = g.coords[0]
f = np.cos(th) + 0.3 * np.sin(5 * th)
df = sg.differentiate(g, f)[:, 0]
print("circle derivative error:", np.max(np.abs(df - (-np.sin(th) + 1.5 * np.cos(5 * th)))))

# restrictions of linear functions satisfy Hess f + f g = 0
H = sg.hessian(g, f := np.cos(th))
print("circle kernel residual:", np.max(np.abs(H[:, 0, 0] + f)))

# the sphere: same identity, now with a truncation error that halves twice
# per refinement in chart components
v = np.array([0.3, -0.5, 0.8])
for m in (16, 32, 64):
    s = sg.make_grid(3, m)
    f = s.nodes @ v
    R = sg.hessian(s, f) + s.metric * f[..., None, None]
    print(f"sphere {m}x{2 * m}: kernel residual {np.max(np.abs(R)):.2e}, area {sg.integrate(s, np.ones(s.shape)):.12f}")

# interpolation between nodes, including across the poles
s = sg.make_grid(3, 32)
d = np.array([[0, 0, 1.0], [0.6, 0, 0.8]])
print("height at the pole and off-grid:", sg.resample(s, s.nodes[..., 2], d))
