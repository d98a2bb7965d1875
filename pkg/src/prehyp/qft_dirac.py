"""The concrete spin-1/2 model: 1+1 Clifford representation, the
complementary pair (D + A, D - A), the Dirac-current Hermitian product on
Cauchy lines, its positivity and hypersurface independence, and the
finite-corpus data-space isometry check.

The Hermitian structure here (complex conjugation via the Dirac adjoint)
is deliberately distinct from the bilinear dual pairing used by the
Green's machinery; the two are never mixed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .bundle_ops import (
    FirstOrderOperator,
    MatrixField,
    as_matrix_field,
    is_complementary_pair,
)
from .cauchy import solve_cauchy
from .geometry import CauchyLine, DiagonalMetric
from .grids import CauchyData, Grid1p1, GridSection


class CliffordError(ValueError):
    pass


@dataclass(frozen=True)
class CliffordRep:
    """2x2 gamma matrices for signature (+,-): g0^2 = Id, g1^2 = -Id,
    {g0, g1} = 0, g0 Hermitian."""

    gamma0: np.ndarray
    gamma1: np.ndarray

    def validate(self, tol: float = 1e-14) -> None:
        g0, g1 = np.asarray(self.gamma0), np.asarray(self.gamma1)
        eye = np.eye(2)
        checks = [
            (g0 @ g0 - eye, "gamma0^2 != Id"),
            (g1 @ g1 + eye, "gamma1^2 != -Id"),
            (g0 @ g1 + g1 @ g0, "gamma0 gamma1 + gamma1 gamma0 != 0"),
            (g0 - g0.conj().T, "gamma0 not Hermitian"),
        ]
        for mat, msg in checks:
            if np.max(np.abs(mat)) > tol:
                raise CliffordError(msg)


def default_rep() -> CliffordRep:
    rep = CliffordRep(
        gamma0=np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
        gamma1=np.array([[0.0, -1.0], [1.0, 0.0]], dtype=complex),
    )
    rep.validate()
    return rep


@dataclass
class DiracModel:
    """Spin-1/2 model data: representation, mass and the order-0 potential
    term A (default i * m * Id).

    The factor i is forced by the current: gamma0 A must be anti-Hermitian
    for d_a j^a = 0 while gamma0 itself stays Hermitian for positivity of
    the Cauchy-line product, and a real multiple of Id satisfies both only
    at m = 0.
    """

    rep: CliffordRep = field(default_factory=default_rep)
    mass: float = 0.0
    potential: Optional[MatrixField] = None

    def potential_field(self) -> MatrixField:
        if self.potential is not None:
            return self.potential
        return MatrixField.from_constant(1j * self.mass * np.eye(2))


def build_dirac_pair(
    model: DiracModel, metric: Optional[DiagonalMetric] = None
) -> Tuple[FirstOrderOperator, FirstOrderOperator]:
    """(P, Q) = (D + A, D - A).  On a diagonal metric the Dirac principal
    part uses the orthonormal coframe: A^t = gamma0 / alpha, A^x =
    gamma1 / beta, so sigma_P sigma_Q = g(xi, xi) Id pointwise.  On
    Minkowski this is plainly (gamma0, gamma1)."""
    rep = model.rep
    rep.validate()
    a_field = model.potential_field()
    if metric is None or metric.is_constant:
        if metric is None:
            a0 = 1.0
            b0 = 1.0
        else:
            a0 = float(metric.alpha(0.0, 0.0))
            b0 = float(metric.beta(0.0, 0.0))
        a_t = MatrixField.from_constant(rep.gamma0 / a0)
        a_x = MatrixField.from_constant(rep.gamma1 / b0)
    else:
        inv_alpha = lambda t, xs: 1.0 / np.asarray(metric.alpha(t, xs), dtype=complex)
        inv_beta = lambda t, xs: 1.0 / np.asarray(metric.beta(t, xs), dtype=complex)
        a_t = MatrixField.from_constant(rep.gamma0).scale_by(
            inv_alpha, t_dependent=metric.t_dependent
        )
        a_x = MatrixField.from_constant(rep.gamma1).scale_by(
            inv_beta, t_dependent=metric.t_dependent
        )
    p = FirstOrderOperator(2, a_t, a_x, a_field)
    q = FirstOrderOperator(2, a_t, a_x, -a_field)
    return p, q


# ---------------------------------------------------------------------------
# Dirac adjoint, current and the Cauchy-line product

def dirac_adjoint(values: np.ndarray, rep: CliffordRep) -> np.ndarray:
    """Co-spinor phi+ = conj(phi)^T gamma0 per node; anti-linear in phi."""
    if values.shape[-1] != 2:
        raise ValueError("Dirac adjoint needs rank-2 sections")
    return np.einsum("...i,ij->...j", np.conj(values), rep.gamma0)


def dirac_current(
    psi: np.ndarray, phi: np.ndarray, rep: CliffordRep, index: str
) -> np.ndarray:
    """Frame current j^a = psi+ gamma^a phi per node (a in {t, x});
    sesquilinear: anti-linear in psi, linear in phi."""
    gamma = rep.gamma0 if index == "t" else rep.gamma1
    psi_plus = dirac_adjoint(psi, rep)
    return np.einsum("...i,ij,...j->...", psi_plus, gamma, phi)


def beta_sigma(
    psi: GridSection,
    phi: GridSection,
    sigma: CauchyLine,
    metric: DiagonalMetric,
    rep: CliffordRep,
) -> complex:
    """beta_Sigma(Psi, Phi) = int_Sigma n_a j^a d mu = int psi+ gamma0 phi
    beta(t0, x) dx: the lapse cancels between the normal covector and the
    frame current, leaving the plain gamma0 density against the induced
    measure."""
    grid = psi.grid
    j = grid.level_of(sigma.t0)
    density = dirac_current(psi.values[j], phi.values[j], rep, "t")
    measure = np.broadcast_to(
        np.asarray(metric.hypersurface_measure(CauchyLine(float(grid.ts[j])), grid.xs)),
        (grid.nx,),
    )
    integrand = density * measure
    if grid.periodic:
        return complex(integrand.sum() * grid.dx)
    return complex(np.trapezoid(integrand, dx=grid.dx))


@dataclass
class HermitianReport:
    value: complex
    positivity_margin: float
    hypersurface_drift: float


def hypersurface_independence(
    psi: GridSection,
    phi: GridSection,
    t_levels: Sequence[float],
    metric: DiagonalMetric,
    rep: CliffordRep,
) -> HermitianReport:
    """Evaluate beta_Sigma at each level; drift is the max pairwise
    deviation relative to the largest magnitude (0 if all values vanish)."""
    values = [
        beta_sigma(psi, phi, CauchyLine(t), metric, rep) for t in t_levels
    ]
    scale = max(abs(v) for v in values)
    drift = 0.0
    if scale > 0:
        drift = max(
            abs(a - b) for a in values for b in values
        ) / scale
    self_product = beta_sigma(phi, phi, CauchyLine(t_levels[0]), metric, rep)
    return HermitianReport(values[0], float(self_product.real), drift)


@dataclass
class IsometryReport:
    gram_mismatch: float
    min_gram_eigenvalue: float
    gram_sigma: np.ndarray
    gram_sigma_prime: np.ndarray


def data_space_isometry_check(
    phi0_list: Sequence[CauchyData],
    sigma: CauchyLine,
    sigma_prime: CauchyLine,
    metric: DiagonalMetric,
    model: DiracModel,
    grid: Grid1p1,
) -> IsometryReport:
    """Solve each datum with the Dirac pair and compare the Gram matrices
    of beta at Sigma and Sigma'; the evolution map is an isometry up to
    scheme error, and the Gram matrix is positive definite for linearly
    independent data."""
    p, q = build_dirac_pair(model, metric)
    rep = model.rep
    solutions = [
        solve_cauchy(p, q, metric, phi0, grid, check_pair=(i == 0))[0]
        for i, phi0 in enumerate(phi0_list)
    ]
    n = len(solutions)
    gram_a = np.empty((n, n), dtype=complex)
    gram_b = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            gram_a[i, j] = beta_sigma(solutions[i], solutions[j], sigma, metric, rep)
            gram_b[i, j] = beta_sigma(solutions[i], solutions[j], sigma_prime, metric, rep)
    scale = float(np.max(np.abs(gram_a)))
    mismatch = float(np.max(np.abs(gram_a - gram_b))) / scale if scale > 0 else 0.0
    eigs = np.linalg.eigvalsh(0.5 * (gram_a + gram_a.conj().T))
    return IsometryReport(mismatch, float(np.min(eigs)), gram_a, gram_b)
