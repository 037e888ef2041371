"""Conditional-expectation surrogates for approximately sparse polynomials.

When h is only approximately a function of m linear forms, split the spectrum
of the gradient moment matrix into a head frame ell (top m eigenvectors) and
a tail frame s.  Averaging h over the tail directions conditional on the head
coordinates gives a surrogate that is again a polynomial, in the m head
coordinates X plus one extra variable Y standing for sqrt(1 - |X|^2):

    fhat(X, Y) = E[ h(ell X + Y s v) ],   v uniform on the (n-m)-ball.

The expectation is computed exactly, term by term, with closed-form ball
moments; a cubature rule on the (n-m)-ball provides an alternative route
that must agree coefficientwise.  Ball symmetry makes fhat even in Y, so the
surrogate restricted to Y^2 = 1 - |X|^2 is a genuine polynomial model of h.

Minimizing the surrogate over the ball or sphere reduces to two polynomial
problems on half-spheres in R^(m+1) (the Y >= 0 and Y <= 0 branches), whose
minimum is the surrogate's exact minimum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .detection import moment_matrix
from .linalg import sym_eig
from .poly import (
    Polynomial,
    ball_monomial_moment,
    monomials_up_to,
    substitute_linear,
)
from .sampling import sample_ball
from .solvers import SolveOptions, minimize_sphere

_ODD_Y_TOL = 1e-12


class CubatureConstructionError(RuntimeError):
    """Moment matching failed; fall back to the exact path."""


@dataclass
class SpectrumSplit:
    """Head/tail eigendecomposition of the gradient moment matrix.

    ``ell`` holds the top-m orthonormal eigenvectors, ``s`` the remaining
    n - m; ``lambda_head`` and ``lambda_tail`` are the matching eigenvalues
    in descending order.
    """

    ell: np.ndarray
    s: np.ndarray
    lambda_head: np.ndarray
    lambda_tail: np.ndarray

    @property
    def n(self) -> int:
        return self.ell.shape[0]

    @property
    def m(self) -> int:
        return self.ell.shape[1]

    def tail_sum(self) -> float:
        return float(self.lambda_tail.sum())


@dataclass
class LiftedPolynomial:
    """Surrogate polynomial in (X_1, ..., X_m, Y); Y is the last variable."""

    m: int
    poly: Polynomial

    def __post_init__(self):
        if self.poly.num_vars != self.m + 1:
            raise ValueError(
                f"lifted polynomial must have {self.m + 1} variables, "
                f"got {self.poly.num_vars}"
            )

    def odd_y_violation(self) -> float:
        """Largest |coefficient| among odd-Y terms (zero for valid lifts)."""
        odd = [abs(c) for e, c in self.poly.terms.items() if e[-1] % 2 == 1]
        return max(odd, default=0.0)

    def y_mass(self) -> float:
        """Total |coefficient| mass of Y-dependent terms."""
        return sum(abs(c) for e, c in self.poly.terms.items() if e[-1] > 0)

    def flip_y(self) -> "LiftedPolynomial":
        """Negate Y: coefficients of odd-Y terms change sign."""
        flipped = {
            e: (-c if e[-1] % 2 else c) for e, c in self.poly.terms.items()
        }
        return LiftedPolynomial(self.m, Polynomial(self.m + 1, flipped))

    def to_ball_polynomial(self) -> Polynomial:
        """Eliminate Y via Y^2 = 1 - |X|^2; requires an even-Y lift."""
        if self.odd_y_violation() > _ODD_Y_TOL:
            raise ValueError("lift has odd-Y terms; Y cannot be eliminated")
        m = self.m
        one_minus_norm = Polynomial.constant(m, 1.0) - sum(
            (Polynomial.variable(m, j) ** 2 for j in range(m)),
            Polynomial.zero(m),
        )
        acc = Polynomial.zero(m)
        for exp, coef in self.poly.terms.items():
            x_part = Polynomial(m, {exp[:-1]: coef})
            acc = acc + x_part * one_minus_norm ** (exp[-1] // 2)
        return acc


def split_spectrum(h: Polynomial, m: int) -> SpectrumSplit:
    """Split the gradient moment spectrum of h at index m (1 <= m < n)."""
    n = h.num_vars
    if not 1 <= m < n:
        raise ValueError(f"m must satisfy 1 <= m < {n}, got {m}")
    eig = sym_eig(moment_matrix(h))
    return SpectrumSplit(
        ell=eig.eigenvectors[:, :m].copy(),
        s=eig.eigenvectors[:, m:].copy(),
        lambda_head=eig.eigenvalues[:m].copy(),
        lambda_tail=eig.eigenvalues[m:].copy(),
    )


def choose_m(h: Polynomial, threshold: float = 1e-2) -> int:
    """Smallest m whose spectral tail fraction drops below ``threshold``."""
    eig = sym_eig(moment_matrix(h))
    total = float(eig.eigenvalues.sum())
    n = eig.eigenvalues.size
    if total <= 0.0:
        return 0
    for m in range(n + 1):
        if float(eig.eigenvalues[m:].sum()) / total < threshold:
            return m
    return n


def conditional_expectation_exact(
    h: Polynomial, split: SpectrumSplit
) -> LiftedPolynomial:
    """Exact surrogate fhat(X, Y) = E[h(ell X + Y s v)], v uniform ball.

    The substitution x := ell X + Y (s v) is expanded symbolically over the
    variables (X, Y, v); each v-monomial is then replaced by its closed-form
    ball moment.  Odd total v-degree terms vanish, and since every v factor
    carries one Y factor, the result contains only even powers of Y.
    """
    n, m = split.n, split.m
    d = n - m
    # variable order: X_1..X_m, Y, v_1..v_d
    total = m + 1 + d
    forms = []
    for i in range(n):
        terms: dict[tuple, float] = {}
        for j in range(m):
            if split.ell[i, j]:
                exp = [0] * total
                exp[j] = 1
                terms[tuple(exp)] = float(split.ell[i, j])
        for k in range(d):
            if split.s[i, k]:
                exp = [0] * total
                exp[m] = 1
                exp[m + 1 + k] = 1
                terms[tuple(exp)] = float(split.s[i, k])
        forms.append(Polynomial(total, terms))
    expanded = h.compose(forms, num_vars=total)

    acc: dict[tuple, float] = {}
    for exp, coef in expanded.terms.items():
        head, v_part = exp[: m + 1], exp[m + 1 :]
        weight = ball_monomial_moment(v_part, d)
        if weight:
            acc[head] = acc.get(head, 0.0) + coef * weight
    return LiftedPolynomial(m, Polynomial(m + 1, acc))


# ----------------------------------------------------------------------
# cubature on the unit ball
# ----------------------------------------------------------------------


@dataclass
class CubatureRule:
    """Positive rule exact for all monomials of total degree <= degree."""

    dim: int
    degree: int
    nodes: np.ndarray  # (r, dim), inside the unit ball
    weights: np.ndarray  # (r,), positive, summing to 1

    def integrate_monomial(self, alpha) -> float:
        vals = np.ones(self.nodes.shape[0])
        for i, a in enumerate(alpha):
            if a:
                vals = vals * self.nodes[:, i] ** a
        return float(self.weights @ vals)


def _validate_rule(rule: CubatureRule, tol: float = 1e-8) -> float:
    worst = 0.0
    for alpha in monomials_up_to(rule.dim, rule.degree):
        err = abs(rule.integrate_monomial(alpha) - ball_monomial_moment(alpha, rule.dim))
        worst = max(worst, err)
    return worst


def build_cubature(dim: int, degree: int, seed: int = 0) -> CubatureRule:
    """Rule exact to ``degree`` for the uniform distribution on the ball.

    dim 1 uses Gauss-Legendre nodes (the uniform measure on [-1, 1] is the
    Legendre weight).  Higher dimensions match moments by nonnegative least
    squares over symmetric (+-v) candidate pairs, which kills all odd-degree
    monomials by construction; candidates are resampled with a larger pool on
    failure.  The finished rule is validated monomial by monomial.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if degree < 0:
        raise ValueError("degree must be >= 0")
    if dim == 1:
        q = degree // 2 + 1
        nodes, weights = np.polynomial.legendre.leggauss(q)
        rule = CubatureRule(1, degree, nodes.reshape(-1, 1), weights / 2.0)
        if _validate_rule(rule) > 1e-8:
            raise CubatureConstructionError("Gauss-Legendre rule failed validation")
        return rule

    even_targets = [
        alpha for alpha in monomials_up_to(dim, degree) if sum(alpha) % 2 == 0
    ]
    b = np.array([ball_monomial_moment(alpha, dim) for alpha in even_targets])
    rng = np.random.default_rng(seed)
    num_pairs = max(8 * len(even_targets), 128)
    for attempt in range(5):
        half = sample_ball(rng, num_pairs, dim)
        # columns: v^alpha + (-v)^alpha = 2 v^alpha for even total degree
        matrix = np.empty((len(even_targets), num_pairs))
        for r, alpha in enumerate(even_targets):
            vals = np.ones(num_pairs)
            for i, a in enumerate(alpha):
                if a:
                    vals = vals * half[:, i] ** a
            matrix[r] = 2.0 * vals
        weights, residual = nnls(matrix, b)
        if residual <= 1e-10:
            keep = weights > 1e-14
            nodes = np.vstack([half[keep], -half[keep]])
            w = np.concatenate([weights[keep], weights[keep]])
            rule = CubatureRule(dim, degree, nodes, w)
            if _validate_rule(rule) <= 1e-8:
                return rule
        num_pairs *= 2
    raise CubatureConstructionError(
        f"rule construction failed for dim={dim}, degree={degree}"
    )


def conditional_expectation_cubature(
    h: Polynomial, split: SpectrumSplit, rule: CubatureRule
) -> LiftedPolynomial:
    """Surrogate via a fixed cubature rule on the tail ball.

    fhat(X, Y) = sum_j w_j h(ell X + Y s v_j); each node makes the
    substitution linear in (X, Y).  Coefficientwise equal to the exact path
    whenever the rule's degree covers h's degree.
    """
    n, m = split.n, split.m
    d = n - m
    if rule.dim != d:
        raise ValueError(f"rule dimension {rule.dim} != tail dimension {d}")
    if rule.degree < h.degree():
        raise ValueError(
            f"rule degree {rule.degree} is below polynomial degree {h.degree()}"
        )
    acc: dict[tuple, float] = {}
    for node, weight in zip(rule.nodes, rule.weights):
        shift = split.s @ node  # coefficient of Y in each coordinate
        forms = [
            Polynomial.linear_form(list(split.ell[i, :]) + [float(shift[i])])
            for i in range(n)
        ]
        contrib = substitute_linear(h, forms)
        for exp, coef in contrib.terms.items():
            acc[exp] = acc.get(exp, 0.0) + weight * coef
    return LiftedPolynomial(m, Polynomial(m + 1, acc))


# ----------------------------------------------------------------------
# surrogate optimization and evaluation
# ----------------------------------------------------------------------


@dataclass
class SurrogateMinimum:
    rho: float
    rho_plus: float
    rho_minus: float
    point: np.ndarray  # (X, |Y|) on the unit sphere in R^(m+1)


def solve_Q(fhat: LiftedPolynomial, opts: SolveOptions | None = None) -> SurrogateMinimum:
    """Minimize fhat(X, |Y|) over the unit sphere in R^(m+1).

    Split into the Y >= 0 branch of fhat and the Y <= 0 branch of fhat with Y
    negated; the minimum of the two is the surrogate minimum.  For even-Y
    lifts the branches agree by symmetry.
    """
    opts = opts or SolveOptions()
    plus = minimize_sphere(fhat.poly, opts, half="y_nonneg")
    minus = minimize_sphere(fhat.flip_y().poly, opts, half="y_nonpos")
    if plus.value <= minus.value:
        point = plus.point
    else:
        point = minus.point.copy()
        point[-1] = -point[-1]  # report |Y|
    return SurrogateMinimum(
        rho=float(min(plus.value, minus.value)),
        rho_plus=float(plus.value),
        rho_minus=float(minus.value),
        point=point,
    )


def hhat_eval(fhat: LiftedPolynomial, split: SpectrumSplit, x: np.ndarray) -> float:
    """Surrogate value at an ambient point: fhat(ell^T x, sqrt(1 - |ell^T x|^2))."""
    return float(hhat_eval_many(fhat, split, np.asarray(x, dtype=float).reshape(1, -1))[0])


def hhat_eval_many(
    fhat: LiftedPolynomial, split: SpectrumSplit, points: np.ndarray
) -> np.ndarray:
    """Vectorized surrogate evaluation at rows of ``points``."""
    pts = np.asarray(points, dtype=float)
    proj = pts @ split.ell
    sq = (proj**2).sum(axis=1)
    if np.any(sq > (1.0 + 1e-6) ** 2):
        raise ValueError("a point projects outside the unit ball")
    y = np.sqrt(np.clip(1.0 - sq, 0.0, None))
    return fhat.poly.evaluate_many(np.hstack([proj, y[:, None]]))


@dataclass
class L2Estimate:
    value: float
    stderr: float


def l2_error(
    h: Polynomial,
    fhat: LiftedPolynomial,
    split: SpectrumSplit,
    num_samples: int = 100_000,
    seed: int = 0,
) -> L2Estimate:
    """Monte Carlo estimate of E[(h - hhat)^2] on the uniform unit ball."""
    if num_samples < 10_000:
        raise ValueError("num_samples must be at least 10^4")
    rng = np.random.default_rng(seed)
    pts = sample_ball(rng, num_samples, h.num_vars)
    diff_sq = (h.evaluate_many(pts) - hhat_eval_many(fhat, split, pts)) ** 2
    return L2Estimate(
        value=float(diff_sq.mean()),
        stderr=float(diff_sq.std(ddof=1) / np.sqrt(num_samples)),
    )
