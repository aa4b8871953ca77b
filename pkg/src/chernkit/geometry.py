"""Chern connection, torsion, curvature and the Ricci-type tensors.

Conventions, fixed here and used everywhere else:

* ``h[a, b] = g(d_a, dbar_b)`` is the Hermitian metric matrix; ``gi[a, b]``
  is ``g^{a b̄}``, i.e. ``sum_v gi[l, v] h[b, v] = delta_lb`` (``gi = inv(h).T``).
* Christoffel symbols ``Gamma[l, a, b] = g^{l v̄} d_a g_{b v̄}``; the
  derivative index comes first among the lower indices.
* Torsion ``T[l, a, b] = Gamma[l, a, b] - Gamma[l, b, a]``, lowered
  ``T_low[a, b, c] = T^l_{ab} g_{l c̄}``.
* Curvature ``R[a, b, c, d] = g(K(d_a, dbar_b) d_c, dbar_d) = -dbar_b Gamma^l_{ac} g_{l d̄}``.
* (1,1) tensors are stored by their components ``M[c, d] = M(d_c, dbar_d)``;
  on a real vector ``X = U + conj(U)`` the quadratic form is
  ``M(X, X) = 2 Re M[c, d] U^c conj(U^d)``.
* With these, ``k[c, d] = -d_c dbar_d log det h``, ``kstar[c, d] = g^{ab̄} R[a, b, c, d]``,
  ``s[c, d] = g^{bā} R[c, a, b, d]``, and ``t[c, d] = sum T_{ab d̄} conj(T_{mv c̄}) g^{am̄} g^{bv̄}``.

The "full" arrays index the complexified tangent space with ``2n`` slots,
holomorphic first.  They realise the real orthonormal-frame definitions as
plain contractions with the inverse metric and serve as the independent
route for every holomorphic-index formula.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .manifold import ManifoldModel

__all__ = [
    "Geometry", "ConnectionTensors", "CurvatureTensors", "HermitianFormData", "FrameData",
    "christoffel", "curvature", "torsion_quadratic", "tensor_H", "lee_form", "is_balanced",
    "frame_at", "jvec", "quad_form", "frame_components", "BalancedReport",
]

EINSUM = dict(optimize=True)


def jvec(n: int) -> np.ndarray:
    """Eigenvalues of ``J`` on the complexified coordinate basis."""
    return np.concatenate([np.full(n, 1j), np.full(n, -1j)])


def full_metric(h: np.ndarray) -> np.ndarray:
    N, n, _ = h.shape
    G = np.zeros((N, 2 * n, 2 * n), dtype=complex)
    G[:, :n, n:] = h
    G[:, n:, :n] = np.swapaxes(h, 1, 2)
    return G


def full_inverse(gi: np.ndarray) -> np.ndarray:
    N, n, _ = gi.shape
    Gi = np.zeros((N, 2 * n, 2 * n), dtype=complex)
    Gi[:, :n, n:] = gi
    Gi[:, n:, :n] = np.swapaxes(gi, 1, 2)
    return Gi


def swap_halves(x: np.ndarray, axes, n: int) -> np.ndarray:
    for ax in axes:
        x = np.roll(x, n, axis=ax)
    return x


def quad_form(M: np.ndarray, U: np.ndarray) -> np.ndarray:
    """``M(X, X)`` for the real vector with (1,0)-part ``U`` (batched)."""
    return 2 * np.einsum("...cd,...c,...d->...", M, U, np.conj(U)).real


def frame_components(M: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Components ``M(E_a, conj(E_b))`` of a (1,1) tensor in the unitary frame ``F``."""
    return np.einsum("...ma,...mv,...vb->...ab", F, M, np.conj(F))


@dataclass
class ConnectionTensors:
    Gamma: np.ndarray
    T_up: np.ndarray
    T_low: np.ndarray


@dataclass
class CurvatureTensors:
    R: np.ndarray
    k: np.ndarray
    kstar: np.ndarray
    s: np.ndarray
    t: np.ndarray
    H: np.ndarray


@dataclass
class HermitianFormData:
    Omega: np.ndarray     # full 2n x 2n
    dOmega: np.ndarray    # full 2n x 2n x 2n
    theta: np.ndarray     # (1,0) block theta_a; the (0,1) block is its conjugate
    delta_Omega: np.ndarray  # full


@dataclass
class FrameData:
    F: np.ndarray       # columns: unitary (1,0) frame in coordinate components
    real: np.ndarray    # (2n, 2n): rows are e_1..e_2n in full complex components


class Geometry:
    """Chern geometry of a manifold at a batch of points.

    Everything is computed lazily and cached; arrays carry the batch axis
    first.  ``order=1`` skips second metric derivatives (no curvature).
    """

    def __init__(self, M: ManifoldModel, pts, order: int = 2):
        self.M = M
        self.n = M.n
        self.pts = np.atleast_2d(np.asarray(pts, dtype=complex))
        self.N = len(self.pts)
        self.h, self.dH, self.ddH = M.metric.jet(self.pts, order)
        self.order = order

    # metric ------------------------------------------------------------------

    @cached_property
    def gi(self):
        return np.swapaxes(np.linalg.inv(self.h), 1, 2)

    @cached_property
    def det(self):
        return np.linalg.det(self.h).real

    @cached_property
    def G(self):
        return full_metric(self.h)

    @cached_property
    def Gi(self):
        return full_inverse(self.gi)

    @cached_property
    def j(self):
        return jvec(self.n)

    @cached_property
    def dG(self):
        """``dG[:, E, A, B] = d_E G[A, B]``."""
        n = self.n
        out = np.zeros((self.N, 2 * n, 2 * n, 2 * n), dtype=complex)
        out[:, :, :n, n:] = self.dH
        out[:, :, n:, :n] = np.swapaxes(self.dH, 2, 3)
        return out

    @cached_property
    def dgi(self):
        """``dgi[:, E, l, v] = d_E g^{l v̄}``."""
        return -np.einsum("nlp,neqp,nqv->nelv", self.gi, self.dH, self.gi, **EINSUM)

    @cached_property
    def ddG(self):
        """``ddG[:, F, E, A, B] = d_F d_E G[A, B]``."""
        if self.ddH is None:
            raise ValueError("second metric derivatives were not computed (order=1)")
        n = self.n
        out = np.zeros((self.N,) + (2 * n,) * 4, dtype=complex)
        out[:, :, :, :n, n:] = self.ddH
        out[:, :, :, n:, :n] = np.swapaxes(self.ddH, 3, 4)
        return out

    @cached_property
    def dGi(self):
        """``dGi[:, E, A, B] = d_E Gi[A, B]``."""
        n = self.n
        out = np.zeros((self.N,) + (2 * n,) * 3, dtype=complex)
        out[:, :, :n, n:] = self.dgi
        out[:, :, n:, :n] = np.swapaxes(self.dgi, 2, 3)
        return out

    @cached_property
    def dlogdet(self):
        """``d_E log det h`` for all 2n directions."""
        return np.einsum("nba,neab->ne", np.linalg.inv(self.h), self.dH, **EINSUM)

    # connection ----------------------------------------------------------------

    @cached_property
    def Gamma(self):
        n = self.n
        return np.einsum("nlv,nabv->nlab", self.gi, self.dH[:, :n], **EINSUM)

    @cached_property
    def T(self):
        return self.Gamma - np.swapaxes(self.Gamma, 2, 3)

    @cached_property
    def T_low(self):
        return np.einsum("nlab,nlc->nabc", self.T, self.h, **EINSUM)

    @cached_property
    def dGamma(self):
        """``dGamma[:, E, l, a, b] = d_E Gamma[l, a, b]``."""
        if self.ddH is None:
            raise ValueError("second metric derivatives were not computed (order=1)")
        n = self.n
        return (np.einsum("nelv,nabv->nelab", self.dgi, self.dH[:, :n], **EINSUM)
                + np.einsum("nlv,neabv->nelab", self.gi, self.ddH[:, :, :n], **EINSUM))

    @cached_property
    def GF(self):
        """Full connection coefficients ``GF[:, C, A, B]``: ``D_A d_B = GF[C, A, B] d_C``."""
        n = self.n
        out = np.zeros((self.N,) + (2 * n,) * 3, dtype=complex)
        out[:, :n, :n, :n] = self.Gamma
        out[:, n:, n:, n:] = np.conj(self.Gamma)
        return out

    @cached_property
    def dGF(self):
        n = self.n
        out = np.zeros((self.N,) + (2 * n,) * 4, dtype=complex)
        out[:, :, :n, :n, :n] = self.dGamma
        out[:, :, n:, n:, n:] = swap_halves(np.conj(self.dGamma), [1], n)
        return out

    @cached_property
    def TF(self):
        return self.GF - np.swapaxes(self.GF, 2, 3)

    # curvature -------------------------------------------------------------------

    @cached_property
    def R(self):
        n = self.n
        return -np.einsum("nblac,nld->nabcd", self.dGamma[:, n:], self.h, **EINSUM)

    @cached_property
    def KF(self):
        """Full curvature ``KF[:, D, C, A, B]``: component D of ``K(d_A, d_B) d_C``."""
        dG = self.dGF
        GF = self.GF
        return (np.einsum("nadbc->ndcab", dG) - np.einsum("nbdac->ndcab", dG)
                + np.einsum("ndae,nebc->ndcab", GF, GF, **EINSUM)
                - np.einsum("ndbe,neac->ndcab", GF, GF, **EINSUM))

    @cached_property
    def k(self):
        return np.einsum("nab,ncdab->ncd", self.gi, self.R, **EINSUM)

    @cached_property
    def kstar(self):
        return np.einsum("nab,nabcd->ncd", self.gi, self.R, **EINSUM)

    @cached_property
    def s(self):
        return np.einsum("nba,ncabd->ncd", self.gi, self.R, **EINSUM)

    @cached_property
    def t(self):
        Tl = self.T_low
        return np.einsum("nam,nbv,nabd,nmvc->ncd", self.gi, self.gi, Tl, np.conj(Tl), **EINSUM)

    @cached_property
    def H(self):
        return self.k - self.kstar - 0.5 * self.t

    @cached_property
    def k_logdet(self):
        """``-d_c dbar_d log det h`` from metric derivatives alone."""
        n = self.n
        hinv = np.linalg.inv(self.h)
        # d_c dbar_d log det = tr(h^-1 d_c dbar_d h) - tr(h^-1 d_c h h^-1 dbar_d h)
        a = np.einsum("nba,ncdab->ncd", hinv, self.ddH[:, :n, n:], **EINSUM)
        b = np.einsum("nba,ncap,npq,ndqb->ncd", hinv, self.dH[:, :n], hinv, self.dH[:, n:], **EINSUM)
        return -(a - b)

    # full-basis Ricci-type tensors (literal trace definitions) --------------------

    def _full_traces(self):
        j, G, Gi, K = self.j, self.G, self.Gi, self.KF
        k = -0.5 * np.einsum("nab,q,b,ndapq,ndb->npq", Gi, j, j, K, G, **EINSUM)
        ks = -0.5 * np.einsum("nab,b,q,ndpab,ndq->npq", Gi, j, j, K, G, **EINSUM)
        s = np.einsum("nab,ndqap,ndb->npq", Gi, K, G, **EINSUM)
        return k, ks, s

    @cached_property
    def full_traces(self):
        """``(k, kstar, s)`` as full 2n x 2n bilinear forms from the trace definitions."""
        return self._full_traces()

    @cached_property
    def t_full(self):
        """The torsion-quadratic tensor as a full bilinear form.

        ``t(X, Y)`` is the symmetrisation of
        ``sum_{a,b} g(T(E_a, E_b), X) g(T(conj E_a, conj E_b), Y)`` over a unitary frame.
        """
        n = self.n
        Gi, G, TF = self.Gi, self.G, self.TF
        tl = np.einsum("nam,nbv,ncab,ncp,ndmv,ndq->npq",
                       Gi[:, :n, n:], Gi[:, :n, n:], TF[:, :, :n, :n], G,
                       TF[:, :, n:, n:], G, **EINSUM)
        return tl + np.swapaxes(tl, 1, 2)

    # Hermitian form data ----------------------------------------------------------

    @cached_property
    def Omega(self):
        return self.j[None, :, None] * self.G

    @cached_property
    def dOmega(self):
        """``dOmega[A, B, C] = d_A Om(B, C) - d_B Om(A, C) + d_C Om(A, B)``."""
        dOm = self.j[None, None, :, None] * self.dG  # d_E Omega[A, B]
        return dOm - np.swapaxes(dOm, 1, 2) + np.einsum("ncab->nabc", dOm)

    @cached_property
    def S_low(self):
        """``g(S(X, Y), Z) = 1/2 dOmega(JX, Y, Z)`` with ``S = nabla - D``."""
        return 0.5 * self.j[None, :, None, None] * self.dOmega

    @cached_property
    def S(self):
        return np.einsum("ndc,nabc->ndab", self.Gi, self.S_low, **EINSUM)

    @cached_property
    def delta_Omega(self):
        """Codifferential of the Kähler form, via nabla = D + S and D Omega = 0."""
        S, Om = self.S, self.Omega
        # (nabla_A Om)(B, Z) = -Om(S(A,B), Z) - Om(B, S(A,Z))
        nOm = -(np.einsum("ndab,ndz->nabz", S, Om, **EINSUM)
                + np.einsum("ndaz,nbd->nabz", S, Om, **EINSUM))
        return -np.einsum("nab,nabz->nz", self.Gi, nOm, **EINSUM)

    @cached_property
    def theta_full(self):
        """Lee form ``theta = -delta Omega o J`` on the full basis.

        The (0,1) block is set to the conjugate of the (1,0) block so the
        form is real exactly, not just to round-off.
        """
        hol = -1j * self.delta_Omega[:, : self.n]
        return np.concatenate([hol, np.conj(hol)], axis=1)

    @cached_property
    def theta(self):
        return self.theta_full[:, : self.n]

    @cached_property
    def trace_dOmega(self):
        """Contraction of ``dOmega`` with ``Omega``; zero iff ``dOmega^(n-1) = 0``."""
        Gi = self.Gi
        return np.einsum("nap,nbq,npq,nabc->nc", Gi, Gi, self.Omega, self.dOmega, **EINSUM)

    # frames -------------------------------------------------------------------------

    @cached_property
    def frame(self) -> FrameData:
        n = self.n
        L = np.linalg.cholesky(np.swapaxes(self.h, 1, 2))
        F = np.linalg.inv(np.conj(np.swapaxes(L, 1, 2)))
        real = np.zeros((self.N, 2 * n, 2 * n), dtype=complex)
        r2 = np.sqrt(2.0)
        for a in range(n):
            real[:, a, :n] = F[:, :, a] / r2
            real[:, a, n:] = np.conj(F[:, :, a]) / r2
            real[:, n + a, :n] = 1j * F[:, :, a] / r2
            real[:, n + a, n:] = -1j * np.conj(F[:, :, a]) / r2
        return FrameData(F=F, real=real)

    def eigen(self, M: np.ndarray) -> np.ndarray:
        """Eigenvalues of a Hermitian (1,1) tensor relative to the metric."""
        Mf = frame_components(M, self.frame.F)
        return np.linalg.eigvalsh(0.5 * (Mf + np.conj(np.swapaxes(Mf, 1, 2))))

    # Levi-Civita (reference only) -------------------------------------------------

    @cached_property
    def GLC(self):
        """Levi-Civita Christoffel symbols on the complexified coordinate basis."""
        dG = self.dG
        low = 0.5 * (np.einsum("nabd->nabd", dG) + np.einsum("nbad->nabd", dG)
                     - np.einsum("ndab->nabd", dG))
        return np.einsum("ncd,nabd->ncab", self.Gi, low, **EINSUM)


# ---------------------------------------------------------------------------
# public operations


def _geom(M, p, order=2):
    pts = np.asarray(p, dtype=complex)
    return Geometry(M, np.atleast_2d(pts), order), pts.ndim == 1


def _un(x, single):
    return x[0] if single else x


def christoffel(M: ManifoldModel, p) -> ConnectionTensors:
    g, single = _geom(M, p, order=1)
    return ConnectionTensors(Gamma=_un(g.Gamma, single), T_up=_un(g.T, single),
                             T_low=_un(g.T_low, single))


def curvature(M: ManifoldModel, p) -> CurvatureTensors:
    g, single = _geom(M, p)
    return CurvatureTensors(R=_un(g.R, single), k=_un(g.k, single), kstar=_un(g.kstar, single),
                            s=_un(g.s, single), t=_un(g.t, single), H=_un(g.H, single))


def torsion_quadratic(M: ManifoldModel, p) -> np.ndarray:
    g, single = _geom(M, p, order=1)
    return _un(g.t, single)


def tensor_H(M: ManifoldModel, p) -> np.ndarray:
    g, single = _geom(M, p)
    return _un(g.H, single)


def frame_at(M: ManifoldModel, p) -> FrameData:
    g, single = _geom(M, p, order=1)
    f = g.frame
    return FrameData(F=_un(f.F, single), real=_un(f.real, single))


def lee_form(M: ManifoldModel, p) -> HermitianFormData:
    g, single = _geom(M, p, order=1)
    return HermitianFormData(Omega=_un(g.Omega, single), dOmega=_un(g.dOmega, single),
                             theta=_un(g.theta, single), delta_Omega=_un(g.delta_Omega, single))


@dataclass
class BalancedReport:
    theta_max: float
    dOmega_trace_max: float
    delta_Omega_max: float
    laplacian_max: float
    tolerance: float
    balanced: bool

    def as_dict(self):
        return dict(self.__dict__)


def is_balanced(M: ManifoldModel, grid, tol: float = 1e-10, chunk: int = 2048,
                laplacian_tests=None) -> BalancedReport:
    """Check the four equivalent balanced conditions on the grid points.

    The Laplacian condition uses a fixed family of five trigonometric test
    functions unless ``laplacian_tests`` overrides it.
    """
    from .identities import laplacian_test_functions, laplacians

    th = dm = dl = lap = 0.0
    pts = grid.points if hasattr(grid, "points") else np.atleast_2d(grid)
    tests = laplacian_tests if laplacian_tests is not None else laplacian_test_functions(M)
    for s in range(0, len(pts), chunk):
        g = Geometry(M, pts[s:s + chunk], order=1)
        th = max(th, float(np.max(np.abs(g.theta))))
        dm = max(dm, float(np.max(np.abs(g.trace_dOmega))))
        dl = max(dl, float(np.max(np.abs(g.delta_Omega))))
    for f in tests:
        for s in range(0, len(pts), chunk):
            L = laplacians(M, f, pts[s:s + chunk])
            lap = max(lap, float(np.max(np.abs(L.dbar - 0.5 * L.d))))
    ok = max(th, dm, dl, lap) <= tol
    return BalancedReport(th, dm, dl, lap, tol, bool(ok))
