"""First- and second-order matrix-coefficient operators on the trivial
rank-k bundle: principal symbols, composition, formal adjoints, the
hyperbolicity predicates, the bilinear dual pairing and discrete operator
application.

Coefficient derivatives needed by composition and adjoints are taken by
small-step centered differences of the coefficient fields, so the
expression module stays free of symbolic differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import expr as _expr
from .geometry import DiagonalMetric
from .grids import Grid1p1, GridSection, d_t, d_tt, d_x, d_xx

COEFF_FD_STEP = 1e-6  # centered-difference step for coefficient derivatives


class RankMismatchError(ValueError):
    pass


class UnsupportedFeatureError(ValueError):
    pass


class StencilError(ValueError):
    pass


# ---------------------------------------------------------------------------
# matrix-valued coefficient fields

class MatrixField:
    """A k x k complex-matrix-valued field over (t, x).

    Backed by a vectorized function fn(t, xs) -> (len(xs), k, k); constant
    fields carry their value so algebra on them stays exact and cheap.
    """

    def __init__(
        self,
        k: int,
        fn: Callable[[float, np.ndarray], np.ndarray],
        constant: Optional[np.ndarray] = None,
        t_dependent: bool = True,
    ):
        self.k = k
        self._fn = fn
        self.constant = None if constant is None else np.asarray(constant, dtype=complex)
        # fields that only depend on x can be cached per grid by solvers
        self.t_dependent = False if constant is not None else t_dependent

    @property
    def is_constant(self) -> bool:
        return self.constant is not None

    @classmethod
    def from_constant(cls, mat) -> "MatrixField":
        mat = np.asarray(mat, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("constant matrix field needs a square matrix")
        k = mat.shape[0]
        return cls(k, lambda t, xs: np.broadcast_to(mat, (len(xs), k, k)), constant=mat)

    @classmethod
    def zero(cls, k: int) -> "MatrixField":
        return cls.from_constant(np.zeros((k, k)))

    @classmethod
    def from_exprs(cls, entries: Sequence[Sequence[Union[str, "_expr.ExprAst", float, complex]]]) -> "MatrixField":
        k = len(entries)
        asts: List[List[object]] = []
        all_const = True
        any_t = False
        for row in entries:
            if len(row) != k:
                raise ValueError("coefficient matrix must be square")
            arow = []
            for e in row:
                if isinstance(e, str):
                    e = _expr.parse(e)
                if isinstance(e, (int, float, complex)):
                    arow.append(complex(e))
                else:
                    arow.append(e)
                    all_const &= _expr.is_constant(e)
                    any_t |= _expr.uses_var(e, "t")
            asts.append(arow)

        def fn(t, xs):
            out = np.empty((len(xs), k, k), dtype=complex)
            for i in range(k):
                for j in range(k):
                    e = asts[i][j]
                    if isinstance(e, complex):
                        out[:, i, j] = e
                    else:
                        out[:, i, j] = _expr.evaluate(e, t, xs)
            return out

        const = fn(0.0, np.zeros(1))[0] if all_const else None
        return cls(k, fn, constant=const, t_dependent=any_t)

    def eval(self, t: float, xs: np.ndarray) -> np.ndarray:
        """Values on a row of nodes: shape (len(xs), k, k)."""
        if self.is_constant:
            return np.broadcast_to(self.constant, (len(xs), self.k, self.k))
        return self._fn(t, np.asarray(xs, dtype=float))

    def at(self, t: float, x: float) -> np.ndarray:
        return self.eval(t, np.array([float(x)]))[0].copy()

    # -- algebra (constant-ness propagates) --------------------------------

    def __add__(self, other: "MatrixField") -> "MatrixField":
        const = self.constant + other.constant if self.is_constant and other.is_constant else None
        tdep = self.t_dependent or other.t_dependent
        return MatrixField(self.k, lambda t, xs: self.eval(t, xs) + other.eval(t, xs), const, tdep)

    def __sub__(self, other: "MatrixField") -> "MatrixField":
        const = self.constant - other.constant if self.is_constant and other.is_constant else None
        tdep = self.t_dependent or other.t_dependent
        return MatrixField(self.k, lambda t, xs: self.eval(t, xs) - other.eval(t, xs), const, tdep)

    def __neg__(self) -> "MatrixField":
        const = -self.constant if self.is_constant else None
        return MatrixField(self.k, lambda t, xs: -self.eval(t, xs), const, self.t_dependent)

    def __matmul__(self, other: "MatrixField") -> "MatrixField":
        const = self.constant @ other.constant if self.is_constant and other.is_constant else None
        tdep = self.t_dependent or other.t_dependent
        return MatrixField(self.k, lambda t, xs: self.eval(t, xs) @ other.eval(t, xs), const, tdep)

    def transpose(self) -> "MatrixField":
        const = self.constant.T if self.is_constant else None
        return MatrixField(
            self.k, lambda t, xs: np.swapaxes(self.eval(t, xs), -1, -2), const, self.t_dependent
        )

    def scale(self, s: complex) -> "MatrixField":
        const = s * self.constant if self.is_constant else None
        return MatrixField(self.k, lambda t, xs: s * self.eval(t, xs), const, self.t_dependent)

    def scale_by(
        self, scalar_fn: Callable[[float, np.ndarray], np.ndarray], t_dependent: bool = True
    ) -> "MatrixField":
        """Multiply by a scalar field (t, xs) -> (len(xs),)."""

        def fn(t, xs):
            s = np.broadcast_to(np.asarray(scalar_fn(t, xs), dtype=complex), (len(xs),))
            return s[:, None, None] * self.eval(t, xs)

        return MatrixField(self.k, fn, None, self.t_dependent or t_dependent)

    def d_dt(self, h: float = COEFF_FD_STEP) -> "MatrixField":
        if self.is_constant or not self.t_dependent:
            return MatrixField.zero(self.k)
        return MatrixField(
            self.k, lambda t, xs: (self._fn(t + h, xs) - self._fn(t - h, xs)) / (2 * h), None, True
        )

    def d_dx(self, h: float = COEFF_FD_STEP) -> "MatrixField":
        if self.is_constant:
            return MatrixField.zero(self.k)

        def fn(t, xs):
            xs = np.asarray(xs, dtype=float)
            return (self._fn(t, xs + h) - self._fn(t, xs - h)) / (2 * h)

        return MatrixField(self.k, fn, None, self.t_dependent)

    def max_abs(self, chart, n_t: int = 5, n_x: int = 33) -> float:
        ts = np.linspace(chart.t_min, chart.t_max, n_t)
        xs = np.linspace(chart.x_min, chart.x_max, n_x)
        return float(max(np.max(np.abs(self.eval(t, xs))) for t in ts))


def as_matrix_field(value, k: Optional[int] = None) -> MatrixField:
    if isinstance(value, MatrixField):
        return value
    arr = np.asarray(value)
    if arr.dtype.kind in "ifc" and arr.ndim == 2:
        return MatrixField.from_constant(arr)
    return MatrixField.from_exprs(value)


# ---------------------------------------------------------------------------
# operators

@dataclass
class FirstOrderOperator:
    """P Phi = A^t (d_t + omega_t) Phi + A^x (d_x + omega_x) Phi + B Phi."""

    k: int
    a_t: MatrixField
    a_x: MatrixField
    b: MatrixField
    omega_t: Optional[MatrixField] = None
    omega_x: Optional[MatrixField] = None

    @classmethod
    def build(cls, a_t, a_x, b, omega_t=None, omega_x=None) -> "FirstOrderOperator":
        a_t = as_matrix_field(a_t)
        return cls(
            a_t.k,
            a_t,
            as_matrix_field(a_x),
            as_matrix_field(b),
            None if omega_t is None else as_matrix_field(omega_t),
            None if omega_x is None else as_matrix_field(omega_x),
        )

    @property
    def has_connection(self) -> bool:
        return self.omega_t is not None or self.omega_x is not None

    def effective_b(self) -> MatrixField:
        """Zeroth-order part in coordinate form, with connection folded in:
        B + A^t omega_t + A^x omega_x."""
        b = self.b
        if self.omega_t is not None:
            b = b + self.a_t @ self.omega_t
        if self.omega_x is not None:
            b = b + self.a_x @ self.omega_x
        return b

    @property
    def is_constant(self) -> bool:
        return self.a_t.is_constant and self.a_x.is_constant and self.effective_b().is_constant


@dataclass
class SecondOrderOperator:
    """L Phi = C^tt d_t^2 Phi + 2 C^tx d_t d_x Phi + C^xx d_x^2 Phi
    + D^t d_t Phi + D^x d_x Phi + E Phi."""

    k: int
    c_tt: MatrixField
    c_tx: MatrixField
    c_xx: MatrixField
    d_t: MatrixField
    d_x: MatrixField
    e: MatrixField

    @property
    def is_constant(self) -> bool:
        return all(
            f.is_constant for f in (self.c_tt, self.c_tx, self.c_xx, self.d_t, self.d_x, self.e)
        )


# ---------------------------------------------------------------------------
# principal symbols and hyperbolicity predicates

def principal_symbol_1(op: FirstOrderOperator, point: Tuple[float, float], xi: Tuple[float, float]) -> np.ndarray:
    """sigma_P(xi) = A^t xi_t + A^x xi_x; the connection does not enter."""
    t, x = point
    return op.a_t.at(t, x) * xi[0] + op.a_x.at(t, x) * xi[1]


def principal_symbol_2(op: SecondOrderOperator, point: Tuple[float, float], xi: Tuple[float, float]) -> np.ndarray:
    t, x = point
    return (
        op.c_tt.at(t, x) * xi[0] ** 2
        + 2.0 * op.c_tx.at(t, x) * xi[0] * xi[1]
        + op.c_xx.at(t, x) * xi[1] ** 2
    )


def compose(p: FirstOrderOperator, q: FirstOrderOperator, fd_step: float = COEFF_FD_STEP) -> SecondOrderOperator:
    """Expand P(Q Phi) by the product rule into a second-order operator.

    Connection terms are folded into the zeroth-order coefficients first,
    so the expansion works on coordinate-form coefficients throughout.
    """
    if p.k != q.k:
        raise RankMismatchError(f"rank mismatch: {p.k} vs {q.k}")
    pat, pax, pb = p.a_t, p.a_x, p.effective_b()
    qat, qax, qb = q.a_t, q.a_x, q.effective_b()

    c_tt = pat @ qat
    c_tx = ((pat @ qax) + (pax @ qat)).scale(0.5)
    c_xx = pax @ qax
    dt_coeff = (pat @ qat.d_dt(fd_step)) + (pax @ qat.d_dx(fd_step)) + (pat @ qb) + (pb @ qat)
    dx_coeff = (pat @ qax.d_dt(fd_step)) + (pax @ qax.d_dx(fd_step)) + (pax @ qb) + (pb @ qax)
    e = (pat @ qb.d_dt(fd_step)) + (pax @ qb.d_dx(fd_step)) + (pb @ qb)
    return SecondOrderOperator(p.k, c_tt, c_tx, c_xx, dt_coeff, dx_coeff, e)


POLARIZATION_COVECTORS = ((1.0, 0.0), (0.0, 1.0), (1.0, 1.0))


@dataclass
class HyperbolicityReport:
    passed: bool
    max_deviation: float
    tol: float
    worst_point: Optional[Tuple[float, float]] = None
    worst_covector: Optional[Tuple[float, float]] = None


def default_symbol_tol(constant_coefficients: bool, coeff_scale: float = 1.0) -> float:
    if constant_coefficients:
        return 1e-12 * (1.0 + coeff_scale)
    return 1e-8


def metric_sample_points(metric: DiagonalMetric, n_t: int = 3, n_x: int = 9) -> List[Tuple[float, float]]:
    chart = metric.chart
    ts = np.linspace(chart.t_min, chart.t_max, n_t)
    xs = np.linspace(chart.x_min, chart.x_max, n_x)
    return [(float(t), float(x)) for t in ts for x in xs]


def is_normally_hyperbolic(
    op: SecondOrderOperator,
    metric: DiagonalMetric,
    sample_points: Optional[Sequence[Tuple[float, float]]] = None,
    tol: Optional[float] = None,
) -> HyperbolicityReport:
    """Check sigma_L(xi) == g(xi, xi) Id at the polarization covector set.

    Three covectors determine a quadratic form in two dimensions, so the
    check at {(1,0), (0,1), (1,1)} is sufficient pointwise.
    """
    if sample_points is None:
        sample_points = metric_sample_points(metric)
    if not sample_points:
        raise ValueError("sample_points must be nonempty")
    if tol is None:
        scale = max(
            op.c_tt.max_abs(metric.chart), op.c_tx.max_abs(metric.chart), op.c_xx.max_abs(metric.chart)
        )
        tol = default_symbol_tol(op.is_constant and metric.is_constant, scale)
    eye = np.eye(op.k)
    worst = 0.0
    worst_pt = None
    worst_xi = None
    for pt in sample_points:
        for xi in POLARIZATION_COVECTORS:
            dev = np.max(
                np.abs(principal_symbol_2(op, pt, xi) - metric.inverse_on_covector(pt, xi) * eye)
            )
            if dev > worst:
                worst, worst_pt, worst_xi = float(dev), pt, xi
    return HyperbolicityReport(worst < tol, worst, tol, worst_pt, worst_xi)


@dataclass
class PairReport:
    passed: bool
    pq: HyperbolicityReport
    qp: HyperbolicityReport

    @property
    def max_deviation(self) -> float:
        return max(self.pq.max_deviation, self.qp.max_deviation)


def is_complementary_pair(
    p: FirstOrderOperator,
    q: FirstOrderOperator,
    metric: DiagonalMetric,
    sample_points: Optional[Sequence[Tuple[float, float]]] = None,
    tol: Optional[float] = None,
) -> PairReport:
    """Check that both PQ and QP are normally hyperbolic."""
    pq = is_normally_hyperbolic(compose(p, q), metric, sample_points, tol)
    qp = is_normally_hyperbolic(compose(q, p), metric, sample_points, tol)
    return PairReport(pq.passed and qp.passed, pq, qp)


@dataclass
class InvertibilityReport:
    invertible: bool
    abs_det: float
    condition_estimate: float


def symbol_invertibility(
    op: FirstOrderOperator, point: Tuple[float, float], xi: Tuple[float, float], tol: float = 1e-12
) -> InvertibilityReport:
    sigma = principal_symbol_1(op, point, xi)
    det = np.linalg.det(sigma)
    abs_det = float(np.abs(det))
    scale = float(np.max(np.abs(sigma))) if np.max(np.abs(sigma)) > 0 else 1.0
    invertible = abs_det > tol * scale**op.k
    cond = float(np.linalg.cond(sigma)) if invertible else np.inf
    return InvertibilityReport(invertible, abs_det, cond)


# ---------------------------------------------------------------------------
# formal adjoint and the bilinear pairing

def formal_adjoint(p: FirstOrderOperator, metric: DiagonalMetric, fd_step: float = COEFF_FD_STEP) -> FirstOrderOperator:
    """Adjoint against the bilinear pairing int psi(phi) rho dt dx with
    rho = alpha * beta: coefficients -A^T and B^T - (1/rho) d_mu(rho A^mu,T).

    The pairing is bilinear (dual bundle, no complex conjugation), so
    matrices transpose without conjugation.
    """
    if p.has_connection:
        raise UnsupportedFeatureError("formal_adjoint does not support connection matrices")

    def rho(t, xs):
        return np.broadcast_to(np.asarray(metric.volume_density(t, xs), dtype=complex), (len(xs),))

    at_t = p.a_t.transpose()
    at_x = p.a_x.transpose()
    rho_at = at_t.scale_by(rho, t_dependent=metric.t_dependent)
    rho_ax = at_x.scale_by(rho, t_dependent=metric.t_dependent)
    inv_rho = lambda t, xs: 1.0 / rho(t, xs)
    div_term = (rho_at.d_dt(fd_step) + rho_ax.d_dx(fd_step)).scale_by(
        inv_rho, t_dependent=metric.t_dependent
    )
    b_star = p.b.transpose() - div_term
    if p.is_constant and metric.is_constant:
        # density constant: divergence term vanishes identically
        b_star = p.b.transpose()
    return FirstOrderOperator(p.k, -at_t, -at_x, b_star)


def pairing(psi: GridSection, phi: GridSection, metric: DiagonalMetric, grid: Optional[Grid1p1] = None) -> complex:
    """Bilinear spacetime pairing <psi, phi> = int sum_i psi_i phi_i rho,
    by trapezoidal quadrature over the chart."""
    grid = grid or phi.grid
    if psi.values.shape != phi.values.shape:
        raise ValueError("sections must share the grid and rank")
    tt = grid.ts[:, None]
    xx = grid.xs[None, :]
    rho = np.broadcast_to(np.asarray(metric.volume_density(tt, xx)), (grid.nt, grid.nx))
    density = np.einsum("tnc,tnc->tn", psi.values, phi.values) * rho
    if grid.periodic:
        inner_x = density.sum(axis=1) * grid.dx
    else:
        inner_x = np.trapezoid(density, dx=grid.dx, axis=1)
    return complex(np.trapezoid(inner_x, dx=grid.dt))


# ---------------------------------------------------------------------------
# discrete application

def _contract(coeff: MatrixField, values: np.ndarray, grid: Grid1p1) -> np.ndarray:
    """coeff(t_j, x) @ values[j] for every time level j."""
    if coeff.is_constant:
        return np.einsum("ij,tnj->tni", coeff.constant, values)
    if not coeff.t_dependent:
        c = coeff.eval(float(grid.ts[0]), grid.xs)
        return np.einsum("nij,tnj->tni", c, values)
    out = np.empty_like(values)
    for j, t in enumerate(grid.ts):
        out[j] = np.einsum("nij,nj->ni", coeff.eval(float(t), grid.xs), values[j])
    return out


def apply_operator(op: Union[FirstOrderOperator, SecondOrderOperator], phi: GridSection) -> GridSection:
    """Discrete realization of the operator on a sampled section: centered
    2nd-order differences in t and x (one-sided at edges)."""
    grid = phi.grid
    if grid.nt < 4 or grid.nx < 4:
        raise StencilError("grid too small for the stencil")
    v = phi.values
    if isinstance(op, FirstOrderOperator):
        out = (
            _contract(op.a_t, d_t(v, grid), grid)
            + _contract(op.a_x, d_x(v, grid), grid)
            + _contract(op.effective_b(), v, grid)
        )
        return GridSection(grid, out)
    vt = d_t(v, grid)
    out = (
        _contract(op.c_tt, d_tt(v, grid), grid)
        + 2.0 * _contract(op.c_tx, d_x(vt, grid), grid)
        + _contract(op.c_xx, d_xx(v, grid), grid)
        + _contract(op.d_t, vt, grid)
        + _contract(op.d_x, d_x(v, grid), grid)
        + _contract(op.e, v, grid)
    )
    return GridSection(grid, out)
