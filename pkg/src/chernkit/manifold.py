"""Compact Hermitian manifolds as one chart over a fundamental-domain box.

Real coordinates are ordered ``(Re z1, Im z1, Re z2, Im z2, ...)``.  The
volume density used for integration is ``det(g_{ab})`` times Lebesgue
measure on the box; constant factors such as ``2^n`` are dropped because
every verified integral is either zero or normalised by the volume.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import expr as ex
from .expr import Expr, FiniteDifference, free_coords, parse_expr
from .jets import FD, SYMBOLIC, ExprJets

__all__ = [
    "ManifoldConfigError", "ChartSpec", "MetricField", "QuadratureGrid", "ManifoldModel",
    "build_manifold", "metric_at", "quadrature_grid", "integrate", "flat_torus", "iwasawa",
    "conformal_torus", "real_to_complex", "complex_to_real", "random_points",
]

DEFAULT_MAX_POINTS = 2_000_000


class ManifoldConfigError(ValueError):
    pass


class MetricError(ValueError):
    pass


def real_to_complex(x) -> np.ndarray:
    """``(..., 2n)`` real coordinates to ``(..., n)`` complex points."""
    x = np.asarray(x, dtype=float)
    return x[..., 0::2] + 1j * x[..., 1::2]


def complex_to_real(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


@dataclass(frozen=True)
class ChartSpec:
    n: int
    box: tuple  # ((lo, hi),) * 2n
    periodicity: str = ""

    def __post_init__(self):
        if self.n < 1:
            raise ManifoldConfigError("complex dimension must be >= 1")
        if len(self.box) != 2 * self.n:
            raise ManifoldConfigError(f"box needs {2 * self.n} real intervals, got {len(self.box)}")
        for lo, hi in self.box:
            if not hi > lo:
                raise ManifoldConfigError(f"degenerate box interval [{lo}, {hi}]")

    @property
    def volume(self) -> float:
        return math.prod(hi - lo for lo, hi in self.box)


class MetricField:
    """The Hermitian matrix ``g_{a b̄}(z)`` with derivative evaluators.

    ``entries[a][b]`` is ``g(d/dz_a, d/dzbar_b)``.  Entries are expressions or,
    with ``evaluator``, a numeric callable ``points -> (N, n, n)`` (forces
    finite-difference mode).
    """

    def __init__(self, entries=None, n: int | None = None, params=None, mode: str = SYMBOLIC,
                 fd: FiniteDifference | None = None, evaluator: Callable | None = None):
        if evaluator is not None:
            if n is None:
                raise ManifoldConfigError("n is required with a numeric evaluator")
            self.n = n
            self.entries = None
            self.jets = ExprJets(evaluator, n, mode=FD, fd=fd, shape=(n, n))
        else:
            arr = np.empty((len(entries), len(entries)), dtype=object)
            for a, row in enumerate(entries):
                if len(row) != len(entries):
                    raise ManifoldConfigError("metric entries must form a square array")
                for b, e in enumerate(row):
                    arr[a, b] = e if isinstance(e, Expr) else ex.const(e)
            self.n = arr.shape[0]
            self.entries = arr
            self.jets = ExprJets(arr, self.n, params=params, mode=mode, fd=fd)
        self.params = dict(params or {})

    @property
    def mode(self) -> str:
        return self.jets.mode

    def with_mode(self, mode: str, fd: FiniteDifference | None = None) -> "MetricField":
        if self.entries is None:
            raise ManifoldConfigError("a numeric evaluator has no symbolic mode")
        return MetricField(self.entries, params=self.params, mode=mode, fd=fd or self.jets.fd)

    def value(self, pts) -> np.ndarray:
        return self.jets.value(pts)

    def jet(self, pts, order=2):
        return self.jets.jet(pts, order)

    def dependence(self) -> set[int]:
        """Complex coordinate indices the entries depend on (all, for numeric metrics)."""
        if self.entries is None:
            return set(range(self.n))
        out = set()
        for e in self.entries.flat:
            out |= free_coords(e)
        return out


@dataclass(frozen=True)
class QuadratureGrid:
    points: np.ndarray     # (N, n) complex
    weights: np.ndarray    # (N,) includes det g
    resolution: int
    active: tuple          # real coordinate indices that were subdivided

    def __len__(self):
        return len(self.points)

    @property
    def volume(self) -> float:
        return math.fsum(self.weights)


@dataclass
class ManifoldModel:
    """A Hermitian manifold given on one chart.

    ``coframe`` (n x n expressions, row i = components of the i-th (1,0)-form)
    and ``frame`` (row i = components of the dual (1,0)-vector) describe the
    preferred global frame used by the field library; ``periodic`` lists the
    real coordinates on which coefficients of well-defined fields may depend.
    """

    name: str
    chart: ChartSpec
    metric: MetricField
    invariant_metric: bool = False
    coframe: np.ndarray | None = None
    frame: np.ndarray | None = None
    periodic: tuple | None = None
    params: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.chart.n

    def with_mode(self, mode: str, fd: FiniteDifference | None = None) -> "ManifoldModel":
        m = ManifoldModel(**{**self.__dict__})
        m.metric = self.metric.with_mode(mode, fd)
        return m

    def validate(self, pts=None, tol: float = 1e-12):
        if pts is None:
            pts = random_points(self, 10, seed=0)
        g = self.metric.value(pts)
        herm = np.max(np.abs(g - np.conj(np.swapaxes(g, -1, -2))), initial=0.0)
        if herm > tol * max(1.0, np.max(np.abs(g))):
            raise MetricError(f"metric is not Hermitian (defect {herm:.3e})")
        lam = np.linalg.eigvalsh(0.5 * (g + np.conj(np.swapaxes(g, -1, -2))))
        if np.min(lam) <= 0:
            bad = int(np.argmin(lam.min(axis=-1)))
            raise MetricError(f"metric is not positive definite at {np.asarray(pts)[bad].tolist()}")
        return self


def random_points(M: ManifoldModel, count: int, seed=0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in M.chart.box])
    hi = np.array([b[1] for b in M.chart.box])
    x = lo + (hi - lo) * rng.random((count, 2 * M.n))
    return real_to_complex(x)


# ---------------------------------------------------------------------------
# built-in examples


def _z(k):
    return ex.coord(k)


def flat_torus(n: int = 2, mode: str = SYMBOLIC, fd=None) -> ManifoldModel:
    if n < 1:
        raise ManifoldConfigError("flat_torus needs n >= 1")
    entries = [[ex.ONE if a == b else ex.ZERO for b in range(n)] for a in range(n)]
    eye = np.array(entries, dtype=object)
    return ManifoldModel(
        name="flat_torus", chart=ChartSpec(n, ((0.0, 1.0),) * (2 * n), "C^n / (Z + iZ)^n"),
        metric=MetricField(entries, mode=mode, fd=fd), invariant_metric=True,
        coframe=eye.copy(), frame=eye.copy(), periodic=tuple(range(2 * n)),
        config={"builtin": "flat_torus", "params": {"n": n}},
    )


def iwasawa(mode: str = SYMBOLIC, fd=None) -> ManifoldModel:
    """Complex Heisenberg group modulo Gaussian-integer matrices.

    Invariant coframe ``phi1 = dz1, phi2 = dz2, phi3 = dz3 - z1 dz2`` and
    metric ``sum phi_i (x) conj(phi_i)``.
    """
    z1 = _z(1)
    O, I = ex.ZERO, ex.ONE
    entries = [[I, O, O], [O, 1 + ex.func("abs2", z1), -z1], [O, -ex.conj(z1), I]]
    coframe = np.array([[I, O, O], [O, I, O], [O, -z1, I]], dtype=object)
    frame = np.array([[I, O, O], [O, I, z1], [O, O, I]], dtype=object)
    return ManifoldModel(
        name="iwasawa",
        chart=ChartSpec(3, ((0.0, 1.0),) * 6,
                        "(z1, z2, z3) ~ (z1 + a1, z2 + a2, z3 + a1 z2 + a3), a in Z[i]^3"),
        metric=MetricField(entries, mode=mode, fd=fd), invariant_metric=True,
        coframe=coframe, frame=frame, periodic=(0, 1, 2, 3),
        config={"builtin": "iwasawa", "params": {}},
    )


def conformal_torus(amplitude: float = 0.1, mode: str = SYMBOLIC, fd=None) -> ManifoldModel:
    """``g = exp(2u) I`` on the 2-torus with ``u = amplitude * cos(2 pi Re z1)``."""
    eps = float(amplitude)
    u = ex.const(eps) * ex.func("cos", ex.const(2 * math.pi) * ex.func("re", _z(1)))
    conf = ex.func("exp", 2 * u)
    entries = [[conf, ex.ZERO], [ex.ZERO, conf]]
    eye = np.array([[ex.ONE, ex.ZERO], [ex.ZERO, ex.ONE]], dtype=object)
    return ManifoldModel(
        name="conformal_torus", chart=ChartSpec(2, ((0.0, 1.0),) * 4, "C^2 / (Z + iZ)^2"),
        metric=MetricField(entries, mode=mode, fd=fd), invariant_metric=(eps == 0),
        coframe=eye.copy(), frame=eye.copy(), periodic=(0, 1, 2, 3),
        params={"amplitude": eps},
        config={"builtin": "conformal_torus", "params": {"amplitude": eps}},
    )


BUILTINS = {"flat_torus": flat_torus, "iwasawa": iwasawa, "conformal_torus": conformal_torus}


def build_manifold(config: Mapping, mode: str | None = None, fd=None) -> ManifoldModel:
    """Build and validate a model from a config mapping.

    Accepted shapes: ``{"builtin": name, "params": {...}}`` or
    ``{"custom": {"n": k, "entries": [[text, ...], ...], "box": [[lo, hi], ...],
    "params": {...}}}``; either may sit under a ``"manifold"`` key, with an
    optional top-level ``"derivative_mode"``.
    """
    if not isinstance(config, Mapping):
        raise ManifoldConfigError("manifold config must be a mapping")
    if "manifold" in config:
        mode = mode or config.get("derivative_mode")
        config = config["manifold"]
        if isinstance(config, str):
            config = {"builtin": config}
    mode = mode or SYMBOLIC
    if mode not in (SYMBOLIC, FD):
        raise ManifoldConfigError(f"unknown derivative mode {mode!r}")
    if "builtin" in config:
        name = config["builtin"]
        params = dict(config.get("params") or {})
        if name not in BUILTINS:
            raise ManifoldConfigError(f"unknown built-in manifold {name!r}")
        try:
            if name == "flat_torus":
                M = flat_torus(int(params.pop("n", 2)), mode=mode, fd=fd)
            elif name == "conformal_torus":
                eps = params.pop("amplitude", params.pop("epsilon", params.pop("eps", 0.1)))
                M = conformal_torus(float(eps), mode=mode, fd=fd)
            else:
                M = iwasawa(mode=mode, fd=fd)
        except (TypeError, ValueError) as err:
            raise ManifoldConfigError(f"bad parameters for {name}: {err}") from None
        if params:
            raise ManifoldConfigError(f"unexpected parameters for {name}: {sorted(params)}")
        return M.validate()
    if "custom" in config:
        spec = config["custom"]
        try:
            n = int(spec["n"])
            params = {k: float(v) for k, v in (spec.get("params") or {}).items()}
            rows = spec["entries"]
            if len(rows) != n or any(len(r) != n for r in rows):
                raise ManifoldConfigError(f"entries must be {n}x{n}")
            entries = [[parse_expr(str(t), n, params=params.keys()) for t in row] for row in rows]
            box = tuple((float(lo), float(hi)) for lo, hi in spec.get("box", [[0, 1]] * (2 * n)))
        except ManifoldConfigError:
            raise
        except (KeyError, TypeError, ValueError) as err:
            raise ManifoldConfigError(f"malformed custom manifold: {err}") from None
        chart = ChartSpec(n, box, spec.get("periodicity", "user asserted"))
        eye = np.array([[ex.ONE if a == b else ex.ZERO for b in range(n)] for a in range(n)],
                       dtype=object)
        M = ManifoldModel(
            name=spec.get("name", "custom"), chart=chart,
            metric=MetricField(entries, params=params, mode=mode, fd=fd),
            coframe=eye, frame=eye.copy(), periodic=tuple(range(2 * n)), params=params,
            config={"custom": dict(spec)},
        )
        return M.validate()
    raise ManifoldConfigError("manifold config needs 'builtin' or 'custom'")


# ---------------------------------------------------------------------------
# pointwise metric and integration


def metric_at(M: ManifoldModel, p, cond_limit: float = 1e12):
    """Return ``(g, g_inv, det)`` at one point or a batch.

    ``g_inv`` is the ordinary matrix inverse of ``g`` (so ``g @ g_inv = I``).
    """
    pts = np.asarray(p, dtype=complex)
    single = pts.ndim == 1
    g = M.metric.value(np.atleast_2d(pts))
    cond = np.linalg.cond(g)
    if np.any(~np.isfinite(cond)) or np.any(cond > cond_limit):
        raise MetricError(f"metric is singular (condition number {np.max(cond):.3e})")
    ginv = np.linalg.inv(g)
    det = np.linalg.det(g).real
    if single:
        return g[0], ginv[0], float(det[0])
    return g, ginv, det


def quadrature_grid(M: ManifoldModel, resolution: int, active: Sequence[int] | None = None,
                    max_points: int = DEFAULT_MAX_POINTS) -> QuadratureGrid:
    """Tensor-product midpoint grid over the box.

    Real directions not listed in ``active`` get one node at the interval
    midpoint carrying the full interval length; this is exact for integrands
    that do not depend on those directions.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    dims = 2 * M.n
    active = tuple(range(dims)) if active is None else tuple(sorted(set(active)))
    count = resolution ** len(active)
    if count > max_points:
        raise ValueError(f"grid of {count} points exceeds the cap of {max_points}")
    axes, widths = [], []
    for d, (lo, hi) in enumerate(M.chart.box):
        if d in active:
            h = (hi - lo) / resolution
            axes.append(lo + h * (np.arange(resolution) + 0.5))
            widths.append(h)
        else:
            axes.append(np.array([0.5 * (lo + hi)]))
            widths.append(hi - lo)
    mesh = np.meshgrid(*axes, indexing="ij")
    x = np.stack([m.ravel() for m in mesh], axis=-1)
    pts = real_to_complex(x)
    cell = math.prod(widths)
    det = np.empty(len(pts))
    for s in range(0, len(pts), 8192):
        det[s:s + 8192] = np.linalg.det(M.metric.value(pts[s:s + 8192])).real
    w = cell * det
    if np.any(w <= 0):
        raise MetricError("non-positive volume density on the grid")
    return QuadratureGrid(points=pts, weights=w, resolution=resolution, active=active)


def integrate(M: ManifoldModel, f: Callable, grid: QuadratureGrid, chunk: int = 4096) -> float:
    """``sum_i w_i f(p_i)`` evaluated chunk by chunk in grid order.

    ``f`` maps an ``(m, n)`` batch of points to ``m`` real values.  The sum is
    an exactly rounded :func:`math.fsum`, so the result does not depend on how
    the evaluation is chunked or parallelised.
    """
    vals = np.empty(len(grid))
    for s in range(0, len(grid), chunk):
        v = np.asarray(f(grid.points[s:s + chunk]))
        if np.iscomplexobj(v):
            v = v.real
        vals[s:s + chunk] = v
    bad = ~np.isfinite(vals)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise FloatingPointError(f"non-finite integrand at {grid.points[i].tolist()}")
    return math.fsum(grid.weights * vals)
