"""A non-balanced conformally flat torus: Lee form size and gating of the suite."""

import numpy as np

from chernkit import conformal_torus, is_balanced, lee_form, quadrature_grid, random_trig_field
from chernkit.identities import Verifier, active_dims

for eps in (0.0, 0.05, 0.1, 0.2):
    M = conformal_torus(eps)
    rep = is_balanced(M, quadrature_grid(M, 8, active=active_dims(M)))
    print(f"eps={eps:<5} balanced={rep.balanced!s:5} max|theta|={rep.theta_max:.3e}")

M = conformal_torus(0.1)
x = np.linspace(0, 1, 5)
pts = np.stack([x + 0.3j, np.full(x.shape, 0.5 + 0.5j)], axis=1)
print("theta_1 along x1:", np.round(lee_form(M, pts).theta[:, 0], 6))

f = random_trig_field(M, "vector", seed=3)
grid = quadrature_grid(M, 12, active=active_dims(M, [f]))
for r in Verifier(M, grid, [f]).run(["VEC7", "BIANCHI410", "LEM43"]):
    res = "-" if r.residual is None else f"{r.residual:.2e}"
    print(f"{r.case:11s} {r.verdict:13s} {res}")
