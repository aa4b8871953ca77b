"""Chern geometry of the Iwasawa manifold and the identity suite on its coframe."""

import numpy as np

from chernkit import (Geometry, Verifier, coframe_form, frame_field, is_balanced, iwasawa,
                      quadrature_grid)
from chernkit.identities import active_dims

M = iwasawa()
g = Geometry(M, np.array([[0.3 + 0.1j, 0.7 + 0.2j, 0.5 + 0.9j]]))
for name in ("k", "kstar", "s", "t", "H"):
    print(f"{name:6s} eigenvalues {np.round(g.eigen(getattr(g, name))[0], 12)}")

print("balanced:", is_balanced(M, quadrature_grid(M, 6, active=active_dims(M))).balanced)

fields = [coframe_form(M, 0), coframe_form(M, 2), frame_field(M, 2)]
grid = quadrature_grid(M, 8, active=active_dims(M, fields))
for r in Verifier(M, grid, fields).run(["LEM43", "LEM44", "KILL14"]):
    res = "-" if r.residual is None else f"{r.residual:.2e}"
    print(f"{r.case:7s} {r.field:5s} {r.verdict:18s} {res}")
