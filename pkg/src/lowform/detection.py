"""Detect when a polynomial depends on only a few linear forms.

A polynomial h in n variables is a function of m linear forms exactly when
its gradients span an m-dimensional subspace V.  Two routes find m and an
orthonormal basis of V:

* the exact route builds the matrix E[grad h grad h^T] under the uniform
  distribution on the unit ball (computable in closed form for polynomials)
  and reads m off its numeric rank, taking the eigenvectors of the nonzero
  eigenvalues as the basis;
* the randomized route stacks gradients at random ball points until the rank
  of the Gram matrix stops growing, which identifies m with probability one.

Given a basis, the sparse form h(x) = f(basis^T x) is recovered by linear
substitution and can be audited on random points.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .linalg import (
    DEFAULT_RANK_TOL,
    fix_column_signs,
    numeric_rank,
    orthonormalize,
    sym_eig,
)
from .poly import Polynomial, ball_monomial_moment
from .sampling import sample_ball


class RankNotStabilizedError(RuntimeError):
    """The sampled Gram rank kept growing; fall back to the exact method."""


@dataclass
class DetectionReport:
    """Outcome of a sparsity detection run.

    ``spectrum`` holds the full eigenvalue list of the gradient moment matrix
    for the exact method, and the trace of Gram ranks (one per sample count)
    for the randomized method.  ``samples_used`` is None for the exact method.
    """

    m: int
    basis: np.ndarray
    spectrum: list
    method: str
    samples_used: int | None
    rank_tol: float


@dataclass
class SparseForm:
    """Pair (f, ell) representing h(x) = f(ell^T x)."""

    f: Polynomial
    ell: np.ndarray


def moment_matrix(h: Polynomial) -> np.ndarray:
    """n x n matrix with entries E[dh/dx_i * dh/dx_j] on the unit ball.

    Entries are exact: the product of two gradient components is integrated
    term by term with closed-form monomial moments.  Terms are bucketed by
    exponent parity first, since a product monomial has nonzero moment only
    when both factors share the same parity pattern.
    """
    n = h.num_vars
    grads = h.gradient()
    buckets = []
    for g in grads:
        by_parity: dict[tuple, list] = defaultdict(list)
        for exp, coef in g.terms.items():
            by_parity[tuple(e & 1 for e in exp)].append((exp, coef))
        buckets.append(by_parity)

    matrix = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            acc = 0.0
            small, large = buckets[i], buckets[j]
            if len(large) < len(small):
                small, large = large, small
            for parity, terms_i in small.items():
                terms_j = large.get(parity)
                if not terms_j:
                    continue
                for exp_a, coef_a in terms_i:
                    for exp_b, coef_b in terms_j:
                        combined = tuple(a + b for a, b in zip(exp_a, exp_b))
                        acc += coef_a * coef_b * ball_monomial_moment(combined, n)
            matrix[i, j] = matrix[j, i] = acc
    return matrix


def detect_exact(h: Polynomial, rank_tol: float = DEFAULT_RANK_TOL) -> DetectionReport:
    """Exact detection via the spectrum of the gradient moment matrix."""
    eig = sym_eig(moment_matrix(h))
    m = numeric_rank(eig.eigenvalues, rank_tol)
    basis = orthonormalize(eig.eigenvectors[:, :m]) if m else np.zeros((h.num_vars, 0))
    return DetectionReport(
        m=m,
        basis=basis,
        spectrum=[float(v) for v in eig.eigenvalues],
        method="exact",
        samples_used=None,
        rank_tol=rank_tol,
    )


def detect_randomized(
    h: Polynomial,
    seed: int = 0,
    rank_tol: float = DEFAULT_RANK_TOL,
    max_k: int | None = None,
) -> DetectionReport:
    """Randomized detection from gradients at uniform ball samples.

    Gradients are appended one sample at a time; the run stops at the first k
    where the numeric rank of the Gram matrix matches the previous one.
    Raises :class:`RankNotStabilizedError` when the rank is still growing at
    ``max_k`` samples (default n + 2).
    """
    n = h.num_vars
    if max_k is None:
        max_k = n + 2
    if max_k < 2:
        raise ValueError("max_k must be at least 2")
    rng = np.random.default_rng(seed)
    points = sample_ball(rng, max_k, n)
    grads = h.gradient()

    columns: list[np.ndarray] = []
    rank_trace: list[int] = []
    prev_rank = None
    for k in range(1, max_k + 1):
        x = points[k - 1]
        columns.append(np.array([g.evaluate(x) for g in grads]))
        stacked = np.column_stack(columns)
        gram = stacked.T @ stacked
        ranks = numeric_rank(sym_eig((gram + gram.T) / 2.0).eigenvalues, rank_tol)
        rank_trace.append(ranks)
        if prev_rank is not None and ranks == prev_rank:
            m = ranks
            basis = _gradient_basis(stacked, m)
            return DetectionReport(
                m=m,
                basis=basis,
                spectrum=rank_trace,
                method="randomized",
                samples_used=k,
                rank_tol=rank_tol,
            )
        prev_rank = ranks
    raise RankNotStabilizedError(
        f"gradient rank did not stabilize within {max_k} samples"
    )


def _gradient_basis(stacked: np.ndarray, m: int) -> np.ndarray:
    """Orthonormalize m independent gradient columns (pivoted QR)."""
    if m == 0:
        return np.zeros((stacked.shape[0], 0))
    q, _, _ = scipy.linalg.qr(stacked, pivoting=True, mode="economic")
    return fix_column_signs(q[:, :m])


def extract_sparse_form(h: Polynomial, basis: np.ndarray) -> SparseForm:
    """Recover f with h(x) = f(basis^T x) for an orthonormal basis.

    With orthonormal columns the pseudo-inverse of the basis is its
    transpose, so f is simply h composed with x := basis @ X.
    """
    basis = np.asarray(basis, dtype=float)
    if basis.ndim != 2 or basis.shape[0] != h.num_vars:
        raise ValueError(
            f"basis must have shape ({h.num_vars}, m), got {basis.shape}"
        )
    m = basis.shape[1]
    gram = basis.T @ basis
    if m and float(np.abs(gram - np.eye(m)).max()) > 1e-8:
        raise ValueError("basis columns are not orthonormal")
    forms = [Polynomial.linear_form(basis[i, :]) for i in range(h.num_vars)]
    f = h.compose(forms, num_vars=m)
    return SparseForm(f=f, ell=basis.copy())


def verify_sparse_form(
    h: Polynomial, sf: SparseForm, num_points: int = 200, seed: int = 0
) -> float:
    """Max relative reconstruction residual of f(ell^T x) against h over
    ``num_points`` uniform ball samples."""
    if num_points <= 0:
        return 0.0
    rng = np.random.default_rng(seed)
    pts = sample_ball(rng, num_points, h.num_vars)
    h_vals = h.evaluate_many(pts)
    f_vals = sf.f.evaluate_many(pts @ sf.ell)
    return float(np.max(np.abs(h_vals - f_vals) / np.maximum(1.0, np.abs(h_vals))))
