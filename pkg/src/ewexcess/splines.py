"""Penalized cubic and cyclic-cubic regression spline bases.

Both basis kinds are parameterized by the spline's values at the knots, so
coefficients are directly interpretable and the wiggliness penalty is the
integrated squared second derivative, computed exactly for piecewise cubics.
The cubic (natural) kind extrapolates linearly beyond the knot range; the
cyclic kind wraps values and derivatives around the domain boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DegenerateInput(ValueError):
    """Raised when input values cannot support the requested knots."""


@dataclass(frozen=True)
class BasisSpec:
    """Specification of a penalized spline basis.

    kind is "cubic" or "cyclic_cubic".  k is the basis dimension before any
    identifiability constraint.  For the cyclic kind, ``domain`` gives the
    wrap interval and knots are placed evenly inside it (k + 1 knots, the
    last identified with the first).
    """

    kind: str
    k: int
    knots: tuple = ()
    domain: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("cubic", "cyclic_cubic"):
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if self.k < 3:
            raise ValueError("basis dimension k must be >= 3")
        if self.kind == "cyclic_cubic" and self.domain is None and not self.knots:
            raise ValueError("cyclic basis needs a domain or explicit knots")

    def knot_vector(self) -> np.ndarray:
        """Resolve the actual knot locations for this spec."""
        if self.knots:
            kn = np.asarray(self.knots, dtype=float)
        else:
            lo, hi = self.domain
            kn = np.linspace(lo, hi, self.k + 1)
        if np.any(np.diff(kn) <= 0):
            raise ValueError("knots must be strictly increasing")
        if self.kind == "cubic" and len(kn) != self.k:
            raise ValueError("cubic basis requires k knots")
        if self.kind == "cyclic_cubic" and len(kn) != self.k + 1:
            raise ValueError("cyclic basis requires k+1 knots (wrap point repeated)")
        return kn


@dataclass
class EvaluatedBasis:
    """A spline basis evaluated at a set of points.

    design has one row per evaluation point.  penalty is the symmetric PSD
    matrix S with beta' S beta = integral of the squared second derivative.
    constraint, when set, is the column transform Z applied to enforce
    sum-to-zero over the rows the basis was built on.
    """

    spec: BasisSpec
    design: np.ndarray
    penalty: np.ndarray
    constraint: np.ndarray | None = None
    second_deriv_map: np.ndarray = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.design.shape[1]


def knot_placement(values, k: int) -> np.ndarray:
    """Place k knots at evenly spaced quantiles of the distinct values."""
    distinct = np.unique(np.asarray(values, dtype=float))
    if distinct.size < k:
        raise DegenerateInput(
            f"need at least {k} distinct values, got {distinct.size}"
        )
    probs = np.linspace(0.0, 1.0, k)
    # Quantiles of the distinct values, so repeated observations don't drag
    # interior knots; endpoints are always included.
    knots = np.quantile(distinct, probs)
    knots[0] = distinct[0]
    knots[-1] = distinct[-1]
    return knots


def _cubic_matrices(knots: np.ndarray):
    """Band matrices for the natural cubic value-based parameterization.

    Returns (F, S): F maps knot values to second derivatives at the knots
    (zero at both ends), and S is the wiggliness penalty D' B^{-1} D.
    """
    k = len(knots)
    h = np.diff(knots)
    D = np.zeros((k - 2, k))
    B = np.zeros((k - 2, k - 2))
    for i in range(k - 2):
        D[i, i] = 1.0 / h[i]
        D[i, i + 1] = -1.0 / h[i] - 1.0 / h[i + 1]
        D[i, i + 2] = 1.0 / h[i + 1]
        B[i, i] = (h[i] + h[i + 1]) / 3.0
        if i + 1 < k - 2:
            B[i, i + 1] = h[i + 1] / 6.0
            B[i + 1, i] = h[i + 1] / 6.0
    Binv_D = np.linalg.solve(B, D)
    F = np.zeros((k, k))
    F[1:-1, :] = Binv_D
    S = D.T @ Binv_D
    return F, 0.5 * (S + S.T)


def _cyclic_matrices(knots: np.ndarray):
    """Band matrices for the cyclic cubic parameterization.

    knots has the wrap point repeated (first and last knots are identified),
    so the basis dimension is len(knots) - 1.  Returns (F, S) with F the
    (cyclic) map from knot values to second derivatives.
    """
    n = len(knots) - 1
    h = np.diff(knots)  # length n
    B = np.zeros((n, n))
    D = np.zeros((n, n))
    for i in range(n):
        im1 = (i - 1) % n
        ip1 = (i + 1) % n
        B[i, i] = (h[im1] + h[i]) / 3.0
        B[i, ip1] += h[i] / 6.0
        B[i, im1] += h[im1] / 6.0
        D[i, i] = -1.0 / h[im1] - 1.0 / h[i]
        D[i, ip1] += 1.0 / h[i]
        D[i, im1] += 1.0 / h[im1]
    F = np.linalg.solve(B, D)
    S = D.T @ F
    return F, 0.5 * (S + S.T)


def _piecewise_rows(x, knots, F, cyclic: bool):
    """Evaluate value-parameterized cubic basis rows at points x.

    For the cyclic kind the column for the final knot wraps onto column 0.
    No extrapolation handling here; callers clamp or wrap first.
    """
    x = np.asarray(x, dtype=float)
    k = len(knots)
    dim = F.shape[1]
    rows = np.zeros((x.size, dim))
    # interval index j with knots[j] <= x < knots[j+1]
    j = np.clip(np.searchsorted(knots, x, side="right") - 1, 0, k - 2)
    h = knots[j + 1] - knots[j]
    dl = knots[j + 1] - x
    dr = x - knots[j]
    a_minus = dl / h
    a_plus = dr / h
    c_minus = (dl**3 / h - h * dl) / 6.0
    c_plus = (dr**3 / h - h * dr) / 6.0
    jp1 = (j + 1) % dim if cyclic else j + 1
    jc = j % dim
    for i in range(x.size):
        rows[i, jc[i]] += a_minus[i]
        rows[i, jp1[i]] += a_plus[i]
        rows[i, :] += c_minus[i] * F[jc[i] if cyclic else j[i], :]
        rows[i, :] += c_plus[i] * F[jp1[i] if cyclic else j[i] + 1, :]
    return rows


def _boundary_derivative(knots, F, at_start: bool):
    """Basis-row derivative at a boundary knot of a natural cubic basis."""
    dim = F.shape[1]
    row = np.zeros(dim)
    if at_start:
        h = knots[1] - knots[0]
        row[0] -= 1.0 / h
        row[1] += 1.0 / h
        row += -(h / 3.0) * F[0, :] - (h / 6.0) * F[1, :]
    else:
        h = knots[-1] - knots[-2]
        row[-2] -= 1.0 / h
        row[-1] += 1.0 / h
        row += (h / 6.0) * F[-2, :] + (h / 3.0) * F[-1, :]
    return row


def build_basis(spec: BasisSpec, x) -> EvaluatedBasis:
    """Evaluate the basis of `spec` at points x, with its penalty matrix.

    Cubic kind: natural cubic spline through k knots, linear extrapolation
    outside the knot range.  Cyclic kind: periodic on spec's domain; x must
    lie within the wrap interval.
    """
    x = np.asarray(x, dtype=float)
    knots = spec.knot_vector()
    if spec.kind == "cubic":
        F, S = _cubic_matrices(knots)
        inside = (x >= knots[0]) & (x <= knots[-1])
        design = np.zeros((x.size, len(knots)))
        design[inside] = _piecewise_rows(x[inside], knots, F, cyclic=False)
        for at_start in (True, False):
            mask = (x < knots[0]) if at_start else (x > knots[-1])
            if np.any(mask):
                edge = knots[0] if at_start else knots[-1]
                b0 = _piecewise_rows(np.array([edge]), knots, F, cyclic=False)[0]
                d0 = _boundary_derivative(knots, F, at_start)
                design[mask] = b0 + np.outer(x[mask] - edge, d0)
    else:
        lo, hi = knots[0], knots[-1]
        if np.any((x < lo) | (x > hi)):
            raise ValueError("cyclic basis evaluated outside its domain")
        F, S = _cyclic_matrices(knots)
        xe = np.where(x == hi, x, x)  # hi maps onto the wrapped first column
        design = _piecewise_rows(xe, knots, F, cyclic=True)
    return EvaluatedBasis(spec=spec, design=design, penalty=S, second_deriv_map=F)


def apply_constraints(basis: EvaluatedBasis) -> EvaluatedBasis:
    """Absorb a sum-to-zero constraint over the evaluated rows.

    Returns a new basis whose design columns each have zero mean over the
    rows `basis` was built on, with the penalty transformed congruently.
    The column transform is kept so new points can be mapped consistently.
    """
    X = basis.design
    c = X.sum(axis=0)
    nrm = np.linalg.norm(c)
    if nrm == 0:
        raise ValueError("constraint vector is zero; basis already centered?")
    # Householder null-space basis of the single constraint row.
    Q, _ = np.linalg.qr(np.column_stack([c / nrm]), mode="complete")
    Z = Q[:, 1:]
    return EvaluatedBasis(
        spec=basis.spec,
        design=X @ Z,
        penalty=Z.T @ basis.penalty @ Z,
        constraint=Z,
        second_deriv_map=basis.second_deriv_map,
    )


def design_for(basis: EvaluatedBasis, x_new) -> np.ndarray:
    """Design rows at new points, applying any absorbed constraint."""
    raw = build_basis(basis.spec, x_new).design
    if basis.constraint is not None:
        raw = raw @ basis.constraint
    return raw


def eval_smooth(basis: EvaluatedBasis, coefs, cov, x_new):
    """Evaluate a fitted smooth and its pointwise standard error at x_new."""
    rows = design_for(basis, x_new)
    coefs = np.asarray(coefs, dtype=float)
    cov = np.asarray(cov, dtype=float)
    if rows.shape[1] != coefs.size or cov.shape != (coefs.size, coefs.size):
        raise ValueError("coefficient/covariance dimensions do not match basis")
    values = rows @ coefs
    se = np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", rows, cov, rows), 0.0))
    return values, se
