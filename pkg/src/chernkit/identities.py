"""Residuals and verdicts for the pointwise and integral identities.

Every identity is evaluated from tensor blocks computed at the grid points;
integrals are exactly rounded quadrature sums divided by the volume, pointwise
identities report ``sup |lhs - rhs| / max(1, sup |lhs|, sup |rhs|)``.

Case ids are stable strings.  Each case states the structure it needs
(``"any"`` Hermitian or ``"balanced"``); balanced-only cases return
``INAPPLICABLE`` on non-balanced manifolds and field hypotheses that fail give
``HYPOTHESIS_NOT_MET``.  Neither counts as a failure.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import expr as ex
from .expr import Expr
from .fields import FieldData, FieldSpec, block, coframe_form, frame_field, random_trig_field
from .geometry import EINSUM, Geometry, is_balanced, quad_form
from .jets import ExprJets
from .manifold import ManifoldModel, QuadratureGrid, quadrature_grid

__all__ = [
    "PASS", "FAIL", "INAPPLICABLE", "HYPOTHESIS_NOT_MET", "CASES", "CaseInfo", "CaseResult",
    "Tolerances", "FieldEvaluation", "Verifier", "verify", "laplacians", "LaplacianSet",
    "laplacian_test_functions", "weak_form_check", "definiteness_scan", "DefinitenessVerdict",
    "classify_eigenvalues", "theorem_report", "TheoremCheck", "active_dims", "default_fields",
    "field_terms",
]

PASS = "PASS"
FAIL = "FAIL"
INAPPLICABLE = "INAPPLICABLE"
HYPOTHESIS_NOT_MET = "HYPOTHESIS_NOT_MET"


@dataclass(frozen=True)
class CaseInfo:
    id: str
    structure: str      # "any" | "balanced"
    kind: str           # "pointwise" | "integral" | "check"
    needs_field: bool
    summary: str


_CASE_LIST = [
    CaseInfo("VEC7", "any", "integral", True,
             "int |D_a xi_b|^2 + 2 Re[xi^b D^a D_a xi_b + xi^b theta^a D_a xi_b] = 0"),
    CaseInfo("RICCI7S", "any", "pointwise", True,
             "D^a D_a xi_b = D_a D^a xi_b + k*_{b s̄} xi^{s̄}"),
    CaseInfo("PROP32", "balanced", "check", True,
             "analytic <=> D^a D_a xi_b = 0 <=> D_a D^a xi_b + k*_{b s̄} xi^{s̄} = 0"),
    CaseInfo("INT46", "balanced", "integral", True,
             "int |D_a xi_b|^2 = int |D_a xi_{b̄}|^2 - int k*(xi, xi)"),
    CaseInfo("KILL12", "balanced", "integral", True,
             "int 2 Re[D_b xi_a D^a xi^b] + k(xi, xi) - (delta w_xi)^2/2 - (delta w_Jxi)^2/2 = 0"),
    CaseInfo("KILL14", "balanced", "integral", True,
             "D_a xi_b + D_b xi_a = 0 => int |D_b xi_a|^2 - k(xi, xi) + (delta w_Jxi)^2/2 = 0"),
    CaseInfo("FORM47", "balanced", "integral", True,
             "closedness-defect identity for an arbitrary real 1-form"),
    CaseInfo("FORM48", "balanced", "integral", True,
             "torsion divergence identity for an arbitrary real 1-form"),
    CaseInfo("BIANCHI410", "any", "pointwise", True,
             "2 Re[D^a T^s_{ab} w_s w^b] = s(w#, w#) - k*(w#, w#)"),
    CaseInfo("LEM43", "balanced", "integral", True,
             "harmonic w => int |D_a w_{b̄}|^2 + H(w#, w#) = 0"),
    CaseInfo("LEM44", "balanced", "integral", True,
             "analytic w => int |D_a w_b - D_b w_a + T^s_{ab} w_s|^2/2 + H(w#, w#) = 0"),
    CaseInfo("LEM43P", "balanced", "integral", True,
             "harmonic w => int |D_a w_b|^2 + k(w#, w#) - t(w#, w#)/2 = 0"),
    CaseInfo("TH33", "balanced", "check", True,
             "analytic <=> complex Hermitian (both residual blocks vanish together)"),
    CaseInfo("KS_EQ", "balanced", "pointwise", False, "k = s"),
    CaseInfo("LAP_IV", "any", "check", False,
             "Laplacian equality on test functions holds exactly when theta = 0"),
]
CASES = {c.id: c for c in _CASE_LIST}


@dataclass
class Tolerances:
    """Default tolerances; any field may be overridden by name."""

    pointwise: float = 1e-9
    pointwise_fd: float = 1e-6
    integral: float = 1e-8
    balanced: float = 1e-10
    analytic: float = 1e-8
    harmonic: float = 1e-8
    killing: float = 1e-9
    lie: float = 1e-6
    zero: float = 1e-9
    laplacian: float = 1e-8

    def override(self, **kw) -> "Tolerances":
        out = Tolerances(**self.__dict__)
        for k, v in kw.items():
            if not hasattr(out, k):
                raise KeyError(f"unknown tolerance {k!r}")
            setattr(out, k, float(v))
        return out

    def pointwise_for(self, mode: str) -> float:
        return self.pointwise_fd if mode == "fd" else self.pointwise


@dataclass
class CaseResult:
    case: str
    verdict: str
    residual: float | None
    tolerance: float | None
    field: str | None = None
    detail: dict = dc_field(default_factory=dict)
    runtime: float = 0.0

    def as_dict(self):
        return {"case": self.case, "field": self.field, "verdict": self.verdict,
                "residual": self.residual, "tolerance": self.tolerance, "detail": self.detail}


# ---------------------------------------------------------------------------
# pointwise terms


def _cov_norm(gi, X):
    """Pointwise length of a (1,0)-covector field ``X_b`` (batched)."""
    return np.sqrt(np.abs(np.einsum("nbm,nb,nm->n", gi, X, np.conj(X)).real))


class _Terms:
    """Lazily computed pointwise scalar fields for one batch of points."""

    def __init__(self, g: Geometry, fd: FieldData):
        self.g, self.fd, self.n = g, fd, g.n
        self._cache = {}

    def __getitem__(self, key):
        if key not in self._cache:
            self._cache[key] = getattr(self, "t_" + key)()
        return self._cache[key]

    # shared pieces
    @cached_property
    def gab(self):
        n = self.n
        return self.g.Gi[:, :n, n:]

    @cached_property
    def U(self):
        return self.fd.Wup[:, : self.n]

    @cached_property
    def D20(self):
        return self.fd.DW[:, : self.n, : self.n]

    @cached_property
    def DuDl(self):
        n = self.n
        return np.einsum("nac,ncab->nb", self.gab, self.fd.D2W[:, n:, :n, :n], **EINSUM)

    @cached_property
    def DlDu(self):
        n = self.n
        return np.einsum("nac,nacb->nb", self.gab, self.fd.D2W[:, :n, n:, :n], **EINSUM)

    @cached_property
    def ks_xi(self):
        return np.einsum("nbs,ns->nb", self.g.kstar, np.conj(self.U))

    @cached_property
    def Dup(self):
        n = self.n
        return np.einsum("nac,nbm,ncm->nab", self.gab, self.gab, self.fd.DW[:, n:, n:], **EINSUM)

    @cached_property
    def Tw(self):
        return np.einsum("nsab,ns->nab", self.g.T, self.fd.W[:, : self.n])

    # scalar fields
    def t_n20(self):
        return self.fd.norm2(block(self.fd.DW, self.n, "hh"))

    def t_n11(self):
        return self.fd.norm2(block(self.fd.DW, self.n, "ha"))

    def t_vec7(self):
        n = self.n
        theta_up = np.einsum("nac,nc->na", self.gab, self.g.theta_full[:, n:])
        return self["n20"] + 2 * np.real(np.einsum("nb,nb->n", self.U, self.DuDl)
                                         + np.einsum("nb,na,nab->n", self.U, theta_up, self.D20))

    def t_ricci_diff(self):
        return _cov_norm(self.g.gi, self.DuDl - self.DlDu - self.ks_xi)

    def t_ricci_scale(self):
        gi = self.g.gi
        return np.maximum(_cov_norm(gi, self.DuDl - self.DlDu), _cov_norm(gi, self.ks_xi))

    def t_prop32_ii(self):
        return _cov_norm(self.g.gi, self.DuDl)

    def t_prop32_iii(self):
        return _cov_norm(self.g.gi, self.DlDu + self.ks_xi)

    def t_k(self):
        return quad_form(self.g.k, self.U)

    def t_kstar(self):
        return quad_form(self.g.kstar, self.U)

    def t_s(self):
        return quad_form(self.g.s, self.U)

    def t_t(self):
        return quad_form(self.g.t, self.U)

    def t_H(self):
        return quad_form(self.g.H, self.U)

    def t_delta(self):
        return self.fd.codifferential

    def t_deltaJ(self):
        return self.fd.codifferential_J

    def t_kill_contract(self):
        return 2 * np.real(np.einsum("nba,nab->n", self.D20, self.Dup))

    def t_n13(self):
        DW = self.fd.DW
        return self.fd.norm2(block(DW + np.swapaxes(DW, 1, 2), self.n, "hh"))

    def t_n_dw20(self):
        n = self.n
        X = self.D20 - np.swapaxes(self.D20, 1, 2) + self.Tw
        Xf = np.zeros_like(self.fd.DW)
        Xf[:, :n, :n] = X
        Xf[:, n:, n:] = np.conj(X)
        return self.fd.norm2(Xf)

    def t_T_Dup(self):
        return 2 * np.real(np.einsum("nab,nab->n", self.Tw, self.Dup - np.swapaxes(self.Dup, 1, 2)))

    def t_T_Dw(self):
        n = self.n
        Dsup = np.einsum("nac,ncs->nas", self.gab, self.fd.DW[:, n:, :n])
        return 2 * np.real(np.einsum("nsab,nas,nb->n", self.g.T, Dsup, self.U, **EINSUM))

    def t_DT(self):
        n = self.n
        dG = self.g.dGamma[:, n:]
        dT = dG - np.swapaxes(dG, 3, 4)
        return 2 * np.real(np.einsum("nac,ncsab,ns,nb->n", self.gab, dT, self.fd.W[:, :n], self.U,
                                     **EINSUM))

    def t_field_norm2(self):
        return self.fd.norm2(self.fd.W)

    # field residual norms
    def t_res_analytic_vector(self):
        return np.sqrt(np.maximum(self["n20"], 0))

    def t_res_analytic_form(self):
        return np.sqrt(np.maximum(self["n11"], 0))

    def t_res_d11(self):
        return np.sqrt(np.maximum(self.fd.norm2(block(self.fd.d_omega_chern, self.n, "ha")), 0))

    def t_res_d20(self):
        return np.sqrt(np.maximum(self.fd.norm2(block(self.fd.d_omega_chern, self.n, "hh")), 0))

    def t_res_killing(self):
        NW = self.fd.NW
        return np.sqrt(np.maximum(self.fd.norm2(NW + np.swapaxes(NW, 1, 2)), 0))

    def t_res_13(self):
        return np.sqrt(np.maximum(self["n13"], 0))

    def t_res_lie_mixed(self):
        return np.sqrt(np.maximum(self.fd.norm2(block(self.fd.D2W, self.n, "haa")), 0))

    def t_res_lie_pure(self):
        return np.sqrt(np.maximum(self.fd.norm2(block(self.fd.D2W, self.n, "hhh")), 0))


TERM_KEYS = tuple(k[2:] for k in vars(_Terms) if k.startswith("t_"))

# terms each case reads
CASE_TERMS = {
    "VEC7": ("vec7",),
    "RICCI7S": ("ricci_diff", "ricci_scale"),
    "BIANCHI410": ("DT", "s", "kstar"),
    "PROP32": ("res_analytic_vector", "prop32_ii", "prop32_iii"),
    "INT46": ("n20", "n11", "kstar"),
    "KILL12": ("kill_contract", "k", "delta", "deltaJ"),
    "KILL14": ("res_13", "n20", "k", "deltaJ"),
    "FORM47": ("n_dw20", "n11", "k", "kstar", "t", "delta", "deltaJ", "T_Dup"),
    "FORM48": ("k", "kstar", "T_Dup", "T_Dw"),
    "LEM43": ("res_d11", "res_d20", "delta", "n11", "H"),
    "LEM44": ("res_analytic_form", "n_dw20", "H"),
    "LEM43P": ("res_d11", "res_d20", "delta", "n20", "k", "t"),
    "TH33": ("res_analytic_vector", "res_lie_mixed", "res_lie_pure"),
}


THEOREM_TERMS = ("res_analytic_vector", "res_analytic_form", "res_d11", "res_d20", "delta",
                 "deltaJ", "res_killing", "res_lie_mixed", "res_lie_pure", "H", "k", "t",
                 "field_norm2")


def field_terms(g: Geometry, fd: FieldData, keys: Iterable[str] | None = None) -> dict:
    """Pointwise scalar fields entering the identities, for one batch of points."""
    T = _Terms(g, fd)
    return {k: T[k] for k in (TERM_KEYS if keys is None else keys)}


def active_dims(M: ManifoldModel, fields: Iterable[FieldSpec] = ()) -> tuple:
    """Real grid directions that metric or fields depend on."""
    deps = set(M.metric.dependence())
    for f in fields:
        deps |= f.dependence()
    dims = set()
    for k in deps:
        dims |= {2 * k, 2 * k + 1}
    return tuple(sorted(dims))


class FieldEvaluation:
    """Pointwise terms (all, or the requested ``keys``) for one field over a grid."""

    def __init__(self, M: ManifoldModel, f: FieldSpec, grid: QuadratureGrid,
                 keys: Iterable[str] | None = None, chunk: int = 1024):
        missing = sorted(set(active_dims(M, [f])) - set(getattr(grid, "active", ())))
        if missing:
            raise ValueError(f"grid collapses real directions {missing} that field "
                             f"{f.label!r} or the metric depends on")
        self.M, self.f, self.grid, self.chunk = M, f, grid, chunk
        self.terms: dict[str, np.ndarray] = {}
        self.ensure(TERM_KEYS if keys is None else keys)

    def ensure(self, keys: Iterable[str]) -> "FieldEvaluation":
        """Compute any of ``keys`` not evaluated yet."""
        missing = [k for k in dict.fromkeys(keys) if k not in self.terms]
        if not missing:
            return self
        parts: dict[str, list] = {k: [] for k in missing}
        M, grid, chunk = self.M, self.grid, self.chunk
        for s in range(0, len(grid), chunk):
            g = Geometry(M, grid.points[s:s + chunk], order=2)
            terms = field_terms(g, FieldData(g, self.f, order=2), missing)
            for k, v in terms.items():
                parts[k].append(np.asarray(v, dtype=float))
        for k, v in parts.items():
            arr = np.concatenate(v)
            if not np.all(np.isfinite(arr)):
                raise FloatingPointError(f"non-finite values in {k} for field {self.f.label}")
            self.terms[k] = arr
        return self

    def integral(self, values) -> float:
        """Quadrature integral divided by the volume."""
        return math.fsum(self.grid.weights * values) / self.grid.volume

    def sup(self, key) -> float:
        return float(np.max(np.abs(self.terms[key])))

    def residual(self, key) -> dict:
        v = self.terms[key]
        return {"sup": float(np.max(v)), "l2": math.sqrt(max(self.integral(v ** 2), 0.0))}

    @property
    def analytic_sup(self) -> float:
        key = "res_analytic_vector" if self.f.kind == "vector" else "res_analytic_form"
        return self.sup(key)

    def harmonic_sup(self) -> float:
        return max(self.sup("res_d11"), self.sup("res_d20"), self.sup("delta"))


# ---------------------------------------------------------------------------
# Laplacians


@dataclass
class LaplacianSet:
    d: np.ndarray       # Delta_d f = delta(df), real
    dbar: np.ndarray    # Delta_dbar f (complex when theta != 0)
    del_: np.ndarray    # Delta_del f = conj(Delta_dbar f) for real f


def _function_jets(M: ManifoldModel, f: Expr, pts):
    jets = ExprJets(np.array([f], dtype=object), M.n, params=M.params, mode=M.metric.mode,
                    fd=M.metric.jets.fd)
    val, d, dd = jets.jet(pts, 2)
    return val[:, 0], d[..., 0], dd[..., 0]


def laplacians(M: ManifoldModel, f: Expr, pts) -> LaplacianSet:
    """The three Laplacians of a real function at ``pts``.

    ``Delta_d f`` uses the Chern-connection codifferential with the Lee-form
    term; ``Delta_dbar f = -(1/det h) d_a(det h g^{a b̄} dbar_b f)``.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=complex))
    n = M.n
    g = Geometry(M, pts, order=1)
    _, d, dd = _function_jets(M, f, pts)
    DW = dd - np.einsum("ncea,nc->nea", g.GF, d, **EINSUM)
    Wup = np.einsum("nab,nb->na", g.Gi, d)
    lap_d = (-np.einsum("nab,nab->n", g.Gi, DW) - np.einsum("na,na->n", g.theta_full, Wup)).real
    hol, ant = slice(0, n), slice(n, 2 * n)
    gi, dgi = g.gi, g.dgi
    dbar = -(np.einsum("na,nab,nb->n", g.dlogdet[:, hol], gi, d[:, ant])
             + np.einsum("naab,nb->n", dgi[:, hol], d[:, ant])
             + np.einsum("nab,nab->n", gi, dd[:, hol, ant]))
    return LaplacianSet(d=lap_d, dbar=dbar, del_=np.conj(dbar))


def _periodic_coord(M: ManifoldModel, k: int) -> Expr:
    """Real coordinate number ``k`` scaled to period 1 along the box."""
    lo, hi = M.chart.box[k]
    z = ex.Coord(k // 2)
    r = ex.func("re", z) if k % 2 == 0 else ex.func("im", z)
    return (r - ex.const(lo)) * ex.const(1.0 / (hi - lo))


def laplacian_test_functions(M: ManifoldModel) -> list:
    """Five fixed trigonometric test functions in the periodic directions."""
    per = list(M.periodic if M.periodic is not None else range(2 * M.n))
    x = [_periodic_coord(M, k) for k in per]
    tp = ex.const(2 * math.pi)
    cos = lambda e: ex.func("cos", tp * e)
    sin = lambda e: ex.func("sin", tp * e)
    a, b, c = x[0], x[min(1, len(x) - 1)], x[-1]
    return [
        cos(a),
        sin(b),
        cos(a + c),
        sin(a - c) * cos(b),
        cos(ex.const(2) * c) + ex.const(0.5) * sin(a + b),
    ]


def weak_form_check(M: ManifoldModel, f: Expr, h: Expr, grid: QuadratureGrid,
                    chunk: int = 4096) -> float:
    """``|int (Delta_dbar f) h dV - int g^{a b̄} d_a h dbar_b f dV|`` (volume normalised)."""
    n = M.n
    lhs, rhs = [], []
    for s in range(0, len(grid), chunk):
        p = grid.points[s:s + chunk]
        L = laplacians(M, f, p)
        hv, dh, _ = _function_jets(M, h, p)
        _, df, _ = _function_jets(M, f, p)
        g = Geometry(M, p, order=1)
        lhs.append(L.dbar * hv)
        rhs.append(np.einsum("nab,na,nb->n", g.gi, dh[:, :n], df[:, n:]))
    lhs, rhs = np.concatenate(lhs), np.concatenate(rhs)
    w = grid.weights
    diff = [math.fsum(w * (lhs - rhs).real), math.fsum(w * (lhs - rhs).imag)]
    return abs(complex(*diff)) / grid.volume


# ---------------------------------------------------------------------------
# definiteness


TENSORS = ("H", "k", "kstar", "k_minus_half_t", "kappa", "s", "t")


@dataclass
class DefinitenessVerdict:
    tensor: str
    classification: str
    min_eig: float
    max_eig: float
    zero_tol: float
    points: int
    note: str = "grid-sampled"

    def as_dict(self):
        return dict(self.__dict__)


def classify_eigenvalues(lo: float, hi: float, tol: float = 1e-9) -> str:
    if max(abs(lo), abs(hi)) <= tol:
        return "zero"
    if lo > tol:
        return "PD"
    if lo >= -tol:
        return "PSD"
    if hi < -tol:
        return "ND"
    if hi <= tol:
        return "NSD"
    return "indefinite"


def _tensor(g: Geometry, name: str):
    if name in ("k", "kappa"):
        return g.k
    if name == "k_minus_half_t":
        return g.k - 0.5 * g.t
    return getattr(g, name)


def tensor_eigenvalues(M: ManifoldModel, name: str, pts, chunk: int = 2048) -> np.ndarray:
    out = []
    for s in range(0, len(pts), chunk):
        g = Geometry(M, pts[s:s + chunk], order=2)
        out.append(g.eigen(_tensor(g, name)))
    return np.concatenate(out)


def definiteness_scan(M: ManifoldModel, name: str, grid, tol: float = 1e-9) -> DefinitenessVerdict:
    """Classify a Hermitian (1,1) tensor from its eigenvalues at the grid points."""
    if name not in TENSORS:
        raise ValueError(f"unknown tensor {name!r}; choose from {TENSORS}")
    pts = grid.points if hasattr(grid, "points") else np.atleast_2d(grid)
    ev = tensor_eigenvalues(M, name, pts)
    lo, hi = float(ev.min()), float(ev.max())
    return DefinitenessVerdict(name, classify_eigenvalues(lo, hi, tol), lo, hi, tol, len(pts))


# ---------------------------------------------------------------------------
# verification


def default_fields(M: ManifoldModel, seed: int = 0) -> list:
    """Seeded random fields of both kinds plus the model's (co)frame fields."""
    out = [random_trig_field(M, "vector", 1, seed), random_trig_field(M, "form", 1, seed + 1)]
    out += [coframe_form(M, i) for i in range(M.n)]
    out += [frame_field(M, i) for i in range(M.n)]
    return out


def _rel(diff_sup, scale_sup):
    return diff_sup / max(1.0, scale_sup)


class Verifier:
    """Runs identity cases for one manifold, a grid and a list of fields."""

    def __init__(self, M: ManifoldModel, grid: QuadratureGrid, fields: Sequence[FieldSpec] = (),
                 tol: Tolerances | None = None, balanced_grid: QuadratureGrid | None = None):
        self.M = M
        self.grid = grid
        self.fields = list(fields)
        self.tol = tol or Tolerances()
        self.balanced_grid = balanced_grid or grid
        self._evals: dict[int, FieldEvaluation] = {}

    @cached_property
    def balanced(self):
        return is_balanced(self.M, self.balanced_grid, self.tol.balanced)

    def evaluation(self, i: int, keys: Iterable[str] = ()) -> FieldEvaluation:
        if i not in self._evals:
            self._evals[i] = FieldEvaluation(self.M, self.fields[i], self.grid, keys)
        return self._evals[i].ensure(keys)

    def run(self, cases: Iterable[str] | None = None) -> list:
        ids = list(CASES) if cases is None else list(cases)
        for cid in ids:
            if cid not in CASES:
                raise KeyError(f"unknown case {cid!r}")
        keys = set()
        for cid in ids:
            if CASES[cid].structure == "any" or self.balanced.balanced:
                keys.update(CASE_TERMS.get(cid, ()))
        self._batch_keys = tuple(sorted(keys))
        out = []
        for cid in ids:
            info = CASES[cid]
            if info.needs_field:
                if not self.fields:
                    out.append(CaseResult(cid, HYPOTHESIS_NOT_MET, None, None, None,
                                          {"reason": "no field supplied"}))
                for i in range(len(self.fields)):
                    out.append(self.run_case(cid, i))
            else:
                out.append(self.run_case(cid, None))
        return out

    def run_case(self, cid: str, i: int | None) -> CaseResult:
        info = CASES[cid]
        label = self.fields[i].label if i is not None else None
        t0 = time.perf_counter()
        if info.structure == "balanced" and not self.balanced.balanced:
            r = CaseResult(cid, INAPPLICABLE, None, None, label,
                           {"reason": "manifold is not balanced",
                            "theta_max": self.balanced.theta_max})
        else:
            want = tuple(getattr(self, "_batch_keys", ())) + CASE_TERMS.get(cid, ())
            ev = self.evaluation(i, want) if i is not None else None
            r = getattr(self, "_" + cid.lower())(ev)
            r.field = label
        r.runtime = time.perf_counter() - t0
        return r

    # helpers --------------------------------------------------------------

    def _integral_case(self, cid, ev: FieldEvaluation, values, detail=None):
        res = abs(ev.integral(values))
        tol = self.tol.integral
        return CaseResult(cid, PASS if res <= tol else FAIL, res, tol, detail=detail or {})

    def _pointwise_case(self, cid, diff, scale, detail=None):
        res = _rel(float(np.max(diff)), float(np.max(scale)))
        tol = self.tol.pointwise_for(self.M.metric.mode)
        return CaseResult(cid, PASS if res <= tol else FAIL, res, tol, detail=detail or {})

    def _not_met(self, cid, why, value, tol):
        return CaseResult(cid, HYPOTHESIS_NOT_MET, None, None,
                          detail={"reason": why, "residual": value, "tolerance": tol})

    # cases ------------------------------------------------------------------

    def _vec7(self, ev):
        return self._integral_case("VEC7", ev, ev.terms["vec7"])

    def _ricci7s(self, ev):
        return self._pointwise_case("RICCI7S", ev.terms["ricci_diff"], ev.terms["ricci_scale"])

    def _bianchi410(self, ev):
        T = ev.terms
        rhs = T["s"] - T["kstar"]
        return self._pointwise_case("BIANCHI410", np.abs(T["DT"] - rhs),
                                    np.maximum(np.abs(T["DT"]), np.abs(rhs)))

    def _prop32(self, ev):
        tol = self.tol.analytic
        r = [ev.sup("res_analytic_vector"), ev.sup("prop32_ii"), ev.sup("prop32_iii")]
        flags = [x <= tol for x in r]
        ok = all(flags) or not any(flags)
        return CaseResult("PROP32", PASS if ok else FAIL, max(r) if all(flags) else min(r), tol,
                          detail={"analytic": r[0], "ii": r[1], "iii": r[2]})

    def _int46(self, ev):
        T = ev.terms
        return self._integral_case("INT46", ev, T["n20"] - T["n11"] + T["kstar"])

    def _kill12(self, ev):
        T = ev.terms
        v = T["kill_contract"] + T["k"] - 0.5 * T["delta"] ** 2 - 0.5 * T["deltaJ"] ** 2
        return self._integral_case("KILL12", ev, v)

    def _kill14(self, ev):
        r = ev.sup("res_13")
        if r > self.tol.killing:
            return self._not_met("KILL14", "D_a xi_b + D_b xi_a != 0", r, self.tol.killing)
        T = ev.terms
        return self._integral_case("KILL14", ev, T["n20"] - T["k"] + 0.5 * T["deltaJ"] ** 2)

    def _form47(self, ev):
        T = ev.terms
        v = (0.5 * T["n_dw20"] - (T["n11"] + T["k"] - T["kstar"] + 0.5 * T["t"])
             + 0.5 * T["delta"] ** 2 + 0.5 * T["deltaJ"] ** 2 - T["T_Dup"])
        return self._integral_case("FORM47", ev, v)

    def _form48(self, ev):
        T = ev.terms
        return self._integral_case("FORM48", ev, T["k"] - T["kstar"] + 0.5 * T["T_Dup"] + T["T_Dw"])

    def _lem43(self, ev):
        r = ev.harmonic_sup()
        if r > self.tol.harmonic:
            return self._not_met("LEM43", "form is not harmonic", r, self.tol.harmonic)
        T = ev.terms
        return self._integral_case("LEM43", ev, T["n11"] + T["H"])

    def _lem44(self, ev):
        r = ev.sup("res_analytic_form")
        if r > self.tol.analytic:
            return self._not_met("LEM44", "form is not analytic", r, self.tol.analytic)
        T = ev.terms
        v = 0.5 * T["n_dw20"] + T["H"]
        res = self._integral_case("LEM44", ev, v)
        res.detail["pointwise_sup"] = float(np.max(np.abs(v)))
        return res

    def _lem43p(self, ev):
        r = ev.harmonic_sup()
        if r > self.tol.harmonic:
            return self._not_met("LEM43P", "form is not harmonic", r, self.tol.harmonic)
        T = ev.terms
        return self._integral_case("LEM43P", ev, T["n20"] + T["k"] - 0.5 * T["t"])

    def _th33(self, ev):
        a = ev.sup("res_analytic_vector")
        lie = max(ev.sup("res_lie_mixed"), ev.sup("res_lie_pure"))
        fa, fl = a <= self.tol.analytic, lie <= self.tol.lie
        return CaseResult("TH33", PASS if fa == fl else FAIL, None, None,
                          detail={"analytic": a, "complex_hermitian": lie,
                                  "analytic_tol": self.tol.analytic, "lie_tol": self.tol.lie})

    def _ks_eq(self, _):
        diff, scale = 0.0, 0.0
        pts = self.grid.points
        for s in range(0, len(pts), 2048):
            g = Geometry(self.M, pts[s:s + 2048], order=2)
            diff = max(diff, float(np.max(np.abs(g.k - g.s))))
            scale = max(scale, float(np.max(np.abs(g.k))), float(np.max(np.abs(g.s))))
        return self._pointwise_case("KS_EQ", np.array([diff]), np.array([scale]))

    def _lap_iv(self, _):
        dev = 0.0
        pts = self.balanced_grid.points
        for f in laplacian_test_functions(self.M):
            for s in range(0, len(pts), 2048):
                L = laplacians(self.M, f, pts[s:s + 2048])
                dev = max(dev, float(np.max(np.abs(L.dbar - 0.5 * L.d))),
                          float(np.max(np.abs(L.del_ - 0.5 * L.d))))
        holds = dev <= self.tol.laplacian
        bal = self.balanced.theta_max <= self.tol.balanced
        return CaseResult("LAP_IV", PASS if holds == bal else FAIL, dev, self.tol.laplacian,
                          detail={"laplacian_equality": holds, "theta_zero": bal})


def verify(case: str, M: ManifoldModel, f: FieldSpec | None, grid: QuadratureGrid,
           tol: Tolerances | None = None) -> CaseResult:
    """Run a single case for a single field."""
    v = Verifier(M, grid, [f] if f is not None else [], tol)
    return v.run_case(case, 0 if f is not None and CASES[case].needs_field else None)


# ---------------------------------------------------------------------------
# theorem report


@dataclass
class TheoremCheck:
    theorem: str
    part: str
    applicable: bool
    hypothesis: dict
    fields: list
    consistent: bool

    def as_dict(self):
        return dict(self.__dict__)


def theorem_report(M: ManifoldModel, grid: QuadratureGrid, fields: Sequence[FieldSpec],
                   tol: Tolerances | None = None, verifier: Verifier | None = None) -> list:
    """Hypothesis classifications and conclusion checks for the vanishing theorems.

    A theorem whose hypothesis fails is reported as not applicable; a
    conclusion that does not hold on an applicable field marks it inconsistent.
    """
    tol = tol or Tolerances()
    v = verifier or Verifier(M, grid, fields, tol)
    if not v.balanced.balanced:
        return [TheoremCheck(t, "", False, {"balanced": False}, [], True)
                for t in ("3.5", "3.9", "4.2", "4.6", "4.8", "4.9", "4.10")]
    scans = {name: definiteness_scan(M, name, grid, tol.zero)
             for name in ("kappa", "H", "k_minus_half_t", "kstar")}
    cls = {k: s.classification for k, s in scans.items()}
    nonneg = {"zero", "PSD", "PD"}
    nonpos = {"zero", "NSD", "ND"}
    evs = [v.evaluation(i, THEOREM_TERMS) for i in range(len(fields))]
    out = []

    def flags(ev):
        return {
            "field": ev.f.label, "kind": ev.f.kind,
            "analytic": ev.analytic_sup <= tol.analytic,
            "harmonic": ev.harmonic_sup() <= tol.harmonic,
            "killing": ev.sup("res_killing") <= tol.killing,
            "complex_hermitian": max(ev.sup("res_lie_mixed"), ev.sup("res_lie_pure")) <= tol.lie,
            "int_H": ev.integral(ev.terms["H"]) * grid.volume,
            "nonzero": ev.sup("field_norm2") > tol.zero,
        }

    F = [flags(ev) for ev in evs]

    # affine/complex Hermitian fields are analytic
    rows = [dict(f, ok=(not f["complex_hermitian"]) or f["analytic"]) for f in F if f["kind"] == "vector"]
    out.append(TheoremCheck("3.5", "", True, {"balanced": True}, rows, all(r["ok"] for r in rows)))

    # Killing fields under a non-positive Chern form
    app = cls["kappa"] in nonpos
    rows = []
    for f, ev in zip(F, evs):
        if f["kind"] != "vector" or not f["killing"]:
            continue
        k_xx = ev.sup("k")
        dJ = ev.sup("deltaJ")
        ok = f["analytic"] and k_xx <= tol.zero and dJ <= tol.analytic
        rows.append(dict(f, k_xi_xi=k_xx, delta_J=dJ, ok=ok))
    out.append(TheoremCheck("3.9", "i", app, {"kappa": cls["kappa"]}, rows,
                            (not app) or all(r["ok"] for r in rows)))
    app = cls["kappa"] == "ND"
    rows = [dict(f, ok=not f["nonzero"]) for f in F if f["kind"] == "vector" and f["killing"]]
    out.append(TheoremCheck("3.9", "ii", app, {"kappa": cls["kappa"]}, rows,
                            (not app) or all(r["ok"] for r in rows)))

    # harmonic vs analytic forms through the integral of H
    rows_i, rows_ii = [], []
    for f in F:
        h_zero = abs(f["int_H"]) <= tol.integral * grid.volume
        if f["harmonic"]:
            rows_i.append(dict(f, iff_condition="met" if h_zero else "not met",
                               ok=f["analytic"] == h_zero))
        if f["analytic"] and f["kind"] == "form":
            rows_ii.append(dict(f, iff_condition="met" if h_zero else "not met",
                                ok=f["harmonic"] == h_zero))
    out.append(TheoremCheck("4.2", "i", True, {"balanced": True}, rows_i, all(r["ok"] for r in rows_i)))
    out.append(TheoremCheck("4.2", "ii", True, {"balanced": True}, rows_ii, all(r["ok"] for r in rows_ii)))

    forms = [(f, ev) for f, ev in zip(F, evs) if f["kind"] == "form"]
    app = cls["H"] in nonneg
    rows = [dict(f, H_sup=ev.sup("H"),
                 ok=(f["harmonic"] == f["analytic"] or not (f["harmonic"] or f["analytic"]))
                 and (not (f["harmonic"] or f["analytic"]) or ev.sup("H") <= tol.zero))
            for f, ev in forms]
    out.append(TheoremCheck("4.6", "i", app, {"H": cls["H"]}, rows,
                            (not app) or all(r["ok"] for r in rows)))
    app = cls["H"] == "PD"
    rows = [dict(f, ok=not ((f["harmonic"] or f["analytic"]) and f["nonzero"])) for f, _ in forms]
    out.append(TheoremCheck("4.6", "ii", app, {"H": cls["H"]}, rows,
                            (not app) or all(r["ok"] for r in rows)))

    app = cls["k_minus_half_t"] in nonneg
    rows = []
    for f, ev in forms:
        if f["harmonic"]:
            val = float(np.max(np.abs(ev.terms["k"] - 0.5 * ev.terms["t"])))
            rows.append(dict(f, k_minus_half_t=val, ok=f["analytic"] and val <= tol.zero))
    out.append(TheoremCheck("4.8", "i", app, {"k_minus_half_t": cls["k_minus_half_t"]}, rows,
                            (not app) or all(r["ok"] for r in rows)))
    app = cls["k_minus_half_t"] == "PD"
    rows = [dict(f, ok=not (f["harmonic"] and f["nonzero"])) for f, _ in forms]
    out.append(TheoremCheck("4.8", "ii", app, {"k_minus_half_t": cls["k_minus_half_t"]}, rows,
                            (not app) or all(r["ok"] for r in rows)))

    # k*(X, X) < k(X, X) - t(X, X)/2 for all X is positivity of H
    app = cls["H"] == "PD"
    rows = [dict(f, ok=not ((f["harmonic"] or f["analytic"]) and f["nonzero"])) for f, _ in forms]
    out.append(TheoremCheck("4.9", "", app, {"H": cls["H"]}, rows,
                            (not app) or all(r["ok"] for r in rows)))

    ks_min = tensor_eigenvalues(M, "kstar", grid.points).min(axis=1)
    pd_somewhere = bool(np.max(ks_min) > tol.zero)
    app = cls["H"] in nonneg and cls["kstar"] in nonneg and pd_somewhere
    rows = [dict(f, ok=not (f["harmonic"] and f["nonzero"])) for f, _ in forms]
    out.append(TheoremCheck("4.10", "", app, {"H": cls["H"], "kstar": cls["kstar"],
                                              "kstar_pd_somewhere": pd_somewhere}, rows,
                            (not app) or all(r["ok"] for r in rows)))
    return out
