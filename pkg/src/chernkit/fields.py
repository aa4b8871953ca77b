"""Real 1-forms and vector fields, their Chern derivatives and residuals.

A real 1-form is given by its (1,0) components ``w_a`` (``omega = w_a dz^a +
conj``); a real vector field by the components ``xi^a`` of its (1,0)-part.
Inside, both become the lowered full-basis covector ``W[A]`` (a vector field
is lowered with the metric), so all covariant derivative blocks come from one
code path:

* ``DW[E, A] = (D_E W)_A``  and  ``D2W[F, E, A] = (D_F D W)(d_E, d_A)``.

Norms of real tensors are full real norms ``sum_{ij} X(e_i, e_j)^2`` over an
orthonormal frame, computed as contractions with the inverse metric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import expr as ex
from .expr import Expr, parse_expr
from .geometry import EINSUM, Geometry, swap_halves
from .jets import ExprJets
from .manifold import ManifoldModel, QuadratureGrid, integrate

__all__ = [
    "FieldSpec", "one_form", "vector_field", "coframe_form", "frame_field", "random_trig_field",
    "FieldData", "full_norm2", "block", "analytic_residual", "harmonic_residual",
    "killing_residual", "lie_connection_residual", "covariant_deriv", "field_from_config",
    "ResidualSummary", "sup_and_l2",
]


@dataclass
class FieldSpec:
    """A real field on a manifold: ``kind`` is ``"form"`` or ``"vector"``."""

    kind: str
    components: list
    label: str = ""
    seed: int | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("form", "vector"):
            raise ValueError(f"field kind must be 'form' or 'vector', not {self.kind!r}")
        self.components = [c if isinstance(c, Expr) else ex.const(c) for c in self.components]

    @property
    def n(self):
        return len(self.components)

    def dependence(self) -> set[int]:
        out = set()
        for c in self.components:
            out |= ex.free_coords(c)
        return out

    def jets(self, mode, fd=None) -> ExprJets:
        return ExprJets(np.array(self.components, dtype=object), self.n, params=self.params,
                        mode=mode, fd=fd)

    def scaled(self, c: complex, label=None) -> "FieldSpec":
        return FieldSpec(self.kind, [ex.const(c) * e for e in self.components],
                         label or self.label, self.seed, self.params)

    def rotated(self) -> "FieldSpec":
        """``J`` applied to the field (vector) or ``J omega`` (form)."""
        f = 1j if self.kind == "vector" else -1j
        return self.scaled(f, f"J{self.label}")


def one_form(components: Sequence, n: int | None = None, label="form", params=None) -> FieldSpec:
    n = n or len(components)
    comps = [parse_expr(c, n, params) if isinstance(c, str) else c for c in components]
    return FieldSpec("form", comps, label)


def vector_field(components: Sequence, n: int | None = None, label="vector", params=None) -> FieldSpec:
    n = n or len(components)
    comps = [parse_expr(c, n, params) if isinstance(c, str) else c for c in components]
    return FieldSpec("vector", comps, label)


_INV_SQRT2 = 1 / np.sqrt(2.0)


def coframe_form(M: ManifoldModel, i: int, coeff: complex = 1.0, unit: bool = True) -> FieldSpec:
    """The real 1-form ``Re(coeff * phi_i)`` from the model's invariant coframe.

    With ``unit`` the form is rescaled by ``sqrt 2`` so that it has unit
    pointwise length when ``phi_i`` is unitary (``omega = (phi + conj phi)/sqrt 2``);
    otherwise ``omega = phi + conj(phi)``.
    """
    c = coeff * (_INV_SQRT2 if unit else 1.0)
    comps = [ex.const(c) * e for e in M.coframe[i]]
    return FieldSpec("form", comps, f"phi{i + 1}")


def frame_field(M: ManifoldModel, i: int, coeff: complex = 1.0, unit: bool = True) -> FieldSpec:
    """The real vector field ``Re(coeff * E_i)``, normalised like :func:`coframe_form`."""
    c = coeff * (_INV_SQRT2 if unit else 1.0)
    comps = [ex.const(c) * e for e in M.frame[i]]
    return FieldSpec("vector", comps, f"E{i + 1}")


def _real_coord(k: int) -> Expr:
    z = ex.Coord(k // 2)
    return ex.func("re", z) if k % 2 == 0 else ex.func("im", z)


def random_trig_field(M: ManifoldModel, kind: str = "form", degree: int = 1, seed: int = 0,
                      terms: int = 2, constant: bool = True) -> FieldSpec:
    """Seeded random trigonometric field, well defined on the quotient.

    Coefficients along the model's invariant (co)frame are sums of ``terms``
    Fourier modes ``c exp(2 pi i k.x)`` with ``|k_j| <= degree`` over the
    model's periodic real coordinates, plus a random constant.
    """
    rng = np.random.default_rng(seed)
    n = M.n
    per = list(M.periodic if M.periodic is not None else range(2 * n))
    lo = [M.chart.box[d][0] for d in per]
    L = [M.chart.box[d][1] - M.chart.box[d][0] for d in per]
    basis = M.coframe if kind == "form" else M.frame
    coeffs = []
    for _ in range(n):
        c = ex.const(complex(*rng.normal(size=2)) * 0.5) if constant else ex.ZERO
        for _t in range(terms):
            k = rng.integers(-degree, degree + 1, size=len(per))
            if not np.any(k):
                k[rng.integers(len(per))] = 1
            amp = complex(*rng.normal(size=2)) * 0.5
            phase = ex.ZERO
            for kj, d, l0, ll in zip(k, per, lo, L):
                if kj:
                    phase = phase + ex.const(2 * np.pi * kj / ll) * (_real_coord(d) - ex.const(l0))
            c = c + ex.const(amp) * ex.func("exp", ex.const(1j) * phase)
        coeffs.append(c)
    comps = []
    for a in range(n):
        comps.append(ex.add(*[coeffs[i] * basis[i][a] for i in range(n)]))
    return FieldSpec(kind, comps, f"random_trig(degree={degree}, seed={seed})", seed=seed)


def field_from_config(M: ManifoldModel, spec) -> FieldSpec:
    """Build a field from the config block ``{"form"|"vector": {...}}``."""
    if not isinstance(spec, dict) or len(spec) != 1 or next(iter(spec)) not in ("form", "vector"):
        raise ValueError("field spec must be {'form': {...}} or {'vector': {...}}")
    kind, body = next(iter(spec.items()))
    if "components" in body:
        comps = body["components"]
        if len(comps) != M.n:
            raise ValueError(f"field needs {M.n} components")
        comps = [parse_expr(str(c), M.n, params=M.params.keys()) for c in comps]
        return FieldSpec(kind, comps, body.get("label", "custom"), params=dict(M.params))
    b = body.get("builtin")
    if isinstance(b, dict) and "random_trig" in b:
        r = b["random_trig"]
        return random_trig_field(M, kind, int(r.get("degree", 1)), int(r.get("seed", 0)),
                                 int(r.get("terms", 2)))
    if isinstance(b, str):
        name = b.lower()
        prefix = "phi" if kind == "form" else "e"
        if name.startswith(prefix) and name[len(prefix):].isdigit():
            i = int(name[len(prefix):]) - 1
            if not 0 <= i < M.n:
                raise ValueError(f"no {b} on an n={M.n} manifold")
            coeff = complex(body.get("coeff", 1.0))
            return coframe_form(M, i, coeff) if kind == "form" else frame_field(M, i, coeff)
    raise ValueError(f"unknown field spec {body!r}")


# ---------------------------------------------------------------------------
# tensor helpers


def full_norm2(X: np.ndarray, Gi: np.ndarray) -> np.ndarray:
    """Real norm of a real covariant tensor given on the full basis (batched).

    ``Gi`` is symmetric, so each slot is raised by one batched matmul.
    """
    Y = X
    N = X.shape[0]
    for ax in range(1, X.ndim):
        Y = np.moveaxis(Y, ax, 1)
        shp = Y.shape
        Y = np.matmul(Gi, Y.reshape(N, shp[1], -1)).reshape(shp)
        Y = np.moveaxis(Y, 1, ax)
    return (Y * X).reshape(N, -1).sum(axis=1).real


def block(X: np.ndarray, n: int, pattern: str) -> np.ndarray:
    """Keep the type block of ``X`` named by ``pattern`` and its conjugate.

    ``pattern`` is a string over ``"h"`` (holomorphic slot) and ``"a"``
    (anti-holomorphic slot), e.g. ``"hh"`` for the (2,0)+(0,2) part.
    """
    out = np.zeros_like(X)
    for pat in (pattern, pattern.translate(str.maketrans("ha", "ah"))):
        idx = (slice(None),) + tuple(slice(0, n) if c == "h" else slice(n, 2 * n) for c in pat)
        out[idx] = X[idx]
    return out


class FieldData:
    """A real field evaluated with its Chern derivatives at a batch of points."""

    def __init__(self, geom: Geometry, f: FieldSpec, order: int = 2):
        if f.n != geom.n:
            raise ValueError(f"field has {f.n} components on an n={geom.n} manifold")
        self.g = geom
        self.f = f
        self.n = n = geom.n
        mode = geom.M.metric.mode
        fd = geom.M.metric.jets.fd
        val, d, dd = f.jets(mode, fd).jet(geom.pts, order)
        C = self._complete
        if f.kind == "form":
            self.W = np.concatenate([val, np.conj(val)], axis=1)
            self.dW = C(d, [1])
            self.ddW = C(dd, [1, 2]) if dd is not None else None
            self.V = None
        else:
            V = np.concatenate([val, np.conj(val)], axis=1)
            dV = C(d, [1])
            ddV = C(dd, [1, 2]) if dd is not None else None
            G, dG = geom.G, geom.dG
            self.V = V
            self.W = np.einsum("nab,nb->na", G, V)
            self.dW = np.einsum("neab,nb->nea", dG, V) + np.einsum("nab,neb->nea", G, dV)
            if ddV is not None:
                self.ddW = (np.einsum("nfeab,nb->nfea", geom.ddG, V)
                            + np.einsum("neab,nfb->nfea", dG, dV)
                            + np.einsum("nfab,neb->nfea", dG, dV)
                            + np.einsum("nab,nfeb->nfea", G, ddV))
            else:
                self.ddW = None

    def _complete(self, d, axes):
        """Derivative table of the full (hol, anti-hol) component vector."""
        n = self.n
        return np.concatenate([d, swap_halves(np.conj(d), axes, n)], axis=-1)

    # covariant derivatives --------------------------------------------------------

    @cached_property
    def Wup(self):
        return np.einsum("nab,nb->na", self.g.Gi, self.W)

    @cached_property
    def DW(self):
        return self.dW - np.einsum("ncea,nc->nea", self.g.GF, self.W, **EINSUM)

    @cached_property
    def D2W(self):
        if self.ddW is None:
            raise ValueError("second field derivatives were not computed")
        g = self.g
        dDW = (self.ddW - np.einsum("nfcea,nc->nfea", g.dGF, self.W, **EINSUM)
               - np.einsum("ncea,nfc->nfea", g.GF, self.dW, **EINSUM))
        return (dDW - np.einsum("ncfe,nca->nfea", g.GF, self.DW, **EINSUM)
                - np.einsum("ncfa,nec->nfea", g.GF, self.DW, **EINSUM))

    @cached_property
    def NW(self):
        """Levi-Civita derivative ``(nabla_E omega)_A`` via the Chern connection and dOmega."""
        g = self.g
        corr = 0.5 * g.j[None, :, None] * np.einsum("neac,nc->nea", g.dOmega, self.Wup, **EINSUM)
        return self.DW - corr

    # paper blocks ---------------------------------------------------------------

    @property
    def D20(self):
        """``D_a w_b``."""
        return self.DW[:, : self.n, : self.n]

    @property
    def D11(self):
        """``D_a w_{b̄}``."""
        return self.DW[:, : self.n, self.n:]

    @cached_property
    def codifferential(self):
        """``delta omega = -sum_i (D_{e_i} omega) e_i - theta(omega#)``."""
        g = self.g
        return (-np.einsum("nab,nab->n", g.Gi, self.DW)
                - np.einsum("na,na->n", g.theta_full, self.Wup)).real

    @cached_property
    def codifferential_J(self):
        """``delta(J omega)``, with ``(J omega)_A = -j_A omega_A``."""
        g = self.g
        DJ = -g.j[None, None, :] * self.DW
        WJup = np.einsum("nab,nb->na", g.Gi, -g.j[None, :] * self.W)
        return (-np.einsum("nab,nab->n", g.Gi, DJ)
                - np.einsum("na,na->n", g.theta_full, WJup)).real

    @cached_property
    def codifferential_divergence(self):
        """``delta omega`` from the coordinate divergence formula (no connection)."""
        g = self.g
        dGi = g.dGi
        return -(np.einsum("na,na->n", g.dlogdet, self.Wup)
                 + np.einsum("naab,nb->n", dGi, self.W)
                 + np.einsum("nab,nab->n", g.Gi, self.dW)).real

    @cached_property
    def d_omega(self):
        """Exterior derivative ``d omega(d_E, d_A)`` from coordinates."""
        return self.dW - np.swapaxes(self.dW, 1, 2)

    @cached_property
    def d_omega_chern(self):
        """``d omega(X, Y) = (D_X omega)Y - (D_Y omega)X + omega(T(X, Y))``."""
        T = np.einsum("ncea,nc->nea", self.g.TF, self.W, **EINSUM)
        return self.DW - np.swapaxes(self.DW, 1, 2) + T

    def norm2(self, X):
        return full_norm2(X, self.g.Gi)


def covariant_deriv(M: ManifoldModel, f: FieldSpec, p):
    """Chern derivative blocks of a real field at ``p``.

    Returns a dict with ``D_a w_b``, ``D_a w_{b̄}``, ``D_{ā} w_b``, ``D_{ā} w_{b̄}``
    of the (lowered) field.
    """
    pts = np.asarray(p, dtype=complex)
    single = pts.ndim == 1
    g = Geometry(M, np.atleast_2d(pts), order=1)
    fd = FieldData(g, f, order=1)
    n = M.n
    D = fd.DW
    out = {"hh": D[:, :n, :n], "ha": D[:, :n, n:], "ah": D[:, n:, :n], "aa": D[:, n:, n:]}
    return {k: v[0] for k, v in out.items()} if single else out


# ---------------------------------------------------------------------------
# residuals over a grid


@dataclass
class ResidualSummary:
    sup: float
    l2: float

    def as_dict(self):
        return {"sup": self.sup, "l2": self.l2}


def sup_and_l2(M: ManifoldModel, grid: QuadratureGrid, fn, chunk: int = 2048) -> ResidualSummary:
    """Sup-norm and volume-normalised quadrature L2-norm of ``fn(points)`` over the grid."""
    vals = np.empty(len(grid))
    for s in range(0, len(grid), chunk):
        vals[s:s + chunk] = fn(grid.points[s:s + chunk])
    l2 = math.sqrt(max(math.fsum(grid.weights * vals ** 2), 0.0) / grid.volume)
    return ResidualSummary(float(np.max(vals)), l2)


def _per_point(M, f, order, fn):
    def run(pts):
        fd = FieldData(Geometry(M, pts, order=2 if order >= 2 else 1), f, order=order)
        return fn(fd)
    return run


def analytic_block_norm(fd: FieldData) -> np.ndarray:
    n = fd.n
    if fd.f.kind == "vector":
        return np.sqrt(fd.norm2(block(fd.DW, n, "hh")))
    return np.sqrt(fd.norm2(block(fd.DW, n, "ha")))


def analytic_residual(M: ManifoldModel, f: FieldSpec, grid: QuadratureGrid) -> ResidualSummary:
    """Norm of ``D_a xi_b`` (vector fields) or ``D_a w_{b̄}`` (1-forms) over the grid."""
    return sup_and_l2(M, grid, _per_point(M, f, 1, analytic_block_norm))


@dataclass
class HarmonicResidual:
    d_11: ResidualSummary     # D_a w_{b̄} - D_{b̄} w_a
    d_20: ResidualSummary     # D_a w_b - D_b w_a + T w
    delta: ResidualSummary
    delta_J: ResidualSummary

    def harmonic(self, tol):
        return max(self.d_11.sup, self.d_20.sup, self.delta.sup) <= tol

    def as_dict(self):
        return {k: v.as_dict() for k, v in self.__dict__.items()}


def harmonic_parts(fd: FieldData):
    n = fd.n
    dw = fd.d_omega_chern
    return (np.sqrt(fd.norm2(block(dw, n, "ha"))), np.sqrt(fd.norm2(block(dw, n, "hh"))),
            np.abs(fd.codifferential), np.abs(fd.codifferential_J))


def harmonic_residual(M: ManifoldModel, f: FieldSpec, grid: QuadratureGrid) -> HarmonicResidual:
    """Closedness blocks and co-closedness of a real 1-form over the grid."""
    parts = [sup_and_l2(M, grid, _per_point(M, f, 1, lambda fd, i=i: harmonic_parts(fd)[i]))
             for i in range(4)]
    return HarmonicResidual(*parts)


def killing_parts(fd: FieldData):
    n = fd.n
    full = fd.NW + np.swapaxes(fd.NW, 1, 2)
    hol = block(fd.DW + np.swapaxes(fd.DW, 1, 2), n, "hh")
    return np.sqrt(fd.norm2(full)), np.sqrt(fd.norm2(hol))


@dataclass
class KillingResidual:
    full: ResidualSummary
    holomorphic: ResidualSummary

    def as_dict(self):
        return {"full": self.full.as_dict(), "holomorphic": self.holomorphic.as_dict()}


def killing_residual(M: ManifoldModel, f: FieldSpec, grid: QuadratureGrid) -> KillingResidual:
    """Symmetrised Levi-Civita derivative of ``omega_xi`` and its (2,0) block."""
    if f.kind != "vector":
        raise ValueError("Killing residual needs a vector field")
    full = sup_and_l2(M, grid, _per_point(M, f, 1, lambda fd: killing_parts(fd)[0]))
    hol = sup_and_l2(M, grid, _per_point(M, f, 1, lambda fd: killing_parts(fd)[1]))
    return KillingResidual(full, hol)


def lie_connection_parts(fd: FieldData):
    """Norms of ``D_a D_{b̄} xi^l`` and ``D_a D_b xi^{l̄}``, computed on the lowered field."""
    n = fd.n
    D2 = fd.D2W
    return np.sqrt(fd.norm2(block(D2, n, "haa"))), np.sqrt(fd.norm2(block(D2, n, "hhh")))


@dataclass
class LieConnectionResidual:
    mixed: ResidualSummary
    pure: ResidualSummary

    def sup(self):
        return max(self.mixed.sup, self.pure.sup)

    def as_dict(self):
        return {"mixed": self.mixed.as_dict(), "pure": self.pure.as_dict()}


def lie_connection_residual(M: ManifoldModel, f: FieldSpec, grid: QuadratureGrid) -> LieConnectionResidual:
    if f.kind != "vector":
        raise ValueError("Lie derivative of the connection needs a vector field")
    a = sup_and_l2(M, grid, _per_point(M, f, 2, lambda fd: lie_connection_parts(fd)[0]))
    b = sup_and_l2(M, grid, _per_point(M, f, 2, lambda fd: lie_connection_parts(fd)[1]))
    return LieConnectionResidual(a, b)
