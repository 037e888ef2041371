"""Reduce sparse polynomial optimization over polytopes via Farkas cuts.

For a standard-form feasible set Omega = {x >= 0 : A x = b} and a sparse
objective h(x) = f(ell^T x), every valid inequality on the projected point
X = ell^T x has the shape u . X <= lambda . b with (lambda, u) in the cone

    C = {(lambda, u) : A^T lambda - ell u >= 0}.

The cut loop alternates between minimizing f over the current outer
polyhedron and solving a separation LP over a normalized section of C; a
negative separation value certifies that the current minimizer lies outside
the projected feasible set and yields a violated cut.  The canonical simplex
and the unit box admit exact shortcuts (vertex images, zonotope support)
which are provided alongside the general loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .detection import SparseForm
from .linalg import LpProblem, lp_solve
from .poly import Polynomial
from .solvers import Hrep, SolveOptions, minimize_polytope

# Sign-robust replacement for the exact "separation value is zero" stop rule.
SEPARATION_TOL = 1e-8

_MAX_CUTS = 50


class InfeasibleDomainError(ValueError):
    pass


class UnboundedDomainError(ValueError):
    pass


class UnconstrainedProjectionError(ValueError):
    """The cone contains no element with nonzero u: no cut constrains X."""


@dataclass
class Polytope:
    """Standard-form feasible set {x >= 0 : a @ x = b}; checked nonempty."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        if self.a.ndim != 2:
            raise ValueError("a must be a matrix")
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        if self.b.size != self.a.shape[0]:
            raise ValueError("a and b disagree on row count")
        self._feasible = self._phase_one()

    @property
    def num_vars(self) -> int:
        return self.a.shape[1]

    def _phase_one(self) -> np.ndarray:
        res = lp_solve(
            LpProblem(
                c=np.zeros(self.num_vars),
                a_eq=self.a,
                b_eq=self.b,
                bounds=[(0.0, None)] * self.num_vars,
            )
        )
        if res.status != "optimal":
            raise InfeasibleDomainError("polytope is empty")
        return res.point

    def feasible_point(self) -> np.ndarray:
        return self._feasible.copy()

    def lmo(self, direction: np.ndarray) -> np.ndarray:
        """Vertex minimizing direction @ x over the polytope."""
        res = lp_solve(
            LpProblem(
                c=np.asarray(direction, dtype=float),
                a_eq=self.a,
                b_eq=self.b,
                bounds=[(0.0, None)] * self.num_vars,
            )
        )
        if res.status == "unbounded":
            raise UnboundedDomainError("polytope is unbounded")
        if res.status != "optimal":
            raise InfeasibleDomainError("polytope is empty")
        return res.point

    def coordinate_ranges(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-coordinate [min, max] over the polytope; raises if unbounded."""
        n = self.num_vars
        lo = np.zeros(n)
        hi = np.zeros(n)
        for i in range(n):
            direction = np.zeros(n)
            direction[i] = 1.0
            lo[i] = direction @ self.lmo(direction)
            hi[i] = direction @ self.lmo(-direction)
        return lo, hi

    def vertices(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Vertices found by linear programs with random objectives."""
        return np.array([self.lmo(rng.standard_normal(self.num_vars)) for _ in range(count)])

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Feasible points: convex mixtures of randomly discovered vertices."""
        verts = self.vertices(rng, max(2 * self.num_vars, 8))
        weights = rng.dirichlet(np.ones(len(verts)), size=count)
        return weights @ verts

    def start_points(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return self.sample(rng, count)


@dataclass
class Cut:
    """Valid inequality u . X <= rhs on the projected feasible set.

    ``lam`` is the cone multiplier for general polytopes (rhs = lam . b) and
    None for box cuts, whose rhs is the zonotope support value.
    """

    u: np.ndarray
    rhs: float
    lam: np.ndarray | None = None


@dataclass
class CutSet:
    cuts: list[Cut] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.cuts)

    def to_hrep(self, lo: np.ndarray, hi: np.ndarray) -> Hrep:
        m = np.asarray(lo).size
        if self.cuts:
            a_ub = np.array([c.u for c in self.cuts])
            b_ub = np.array([c.rhs for c in self.cuts])
        else:
            a_ub = np.zeros((0, m))
            b_ub = np.zeros(0)
        return Hrep(a_ub=a_ub, b_ub=b_ub, lo=lo, hi=hi)


@dataclass
class PolytopeReduceResult:
    rho: float
    x_star: np.ndarray  # minimizer in the projected space R^m
    cuts: CutSet
    iterations: int
    converged: bool
    inner_values: list[float]
    witness: np.ndarray | None = None  # feasible x with ell^T x ~ x_star
    witness_gap: float | None = None


# ----------------------------------------------------------------------
# separation
# ----------------------------------------------------------------------


def _cone_constraints(poly: Polytope, ell: np.ndarray):
    """Inequality rows for (lam+, lam-, u+, u-) >= 0 encoding A^T lam >= ell u."""
    s, n = poly.a.shape
    m = ell.shape[1]
    at = poly.a.T  # n x s
    # -(A^T lam - ell u) <= 0 componentwise
    rows = np.hstack([-at, at, ell, -ell])
    rhs = np.zeros(n)
    norm_row = np.ones(2 * s + 2 * m)
    return rows, rhs, norm_row, s, m


def _cone_has_cut_directions(poly: Polytope, ell: np.ndarray) -> bool:
    """True when some cone element has u != 0 (the projection is constrained)."""
    rows, rhs, norm_row, s, m = _cone_constraints(poly, ell)
    c = np.concatenate([np.zeros(2 * s), -np.ones(2 * m)])
    res = lp_solve(
        LpProblem(
            c=c,
            a_ub=rows,
            b_ub=rhs,
            a_eq=norm_row.reshape(1, -1),
            b_eq=np.array([1.0]),
            bounds=[(0.0, None)] * (2 * s + 2 * m),
        )
    )
    return res.status == "optimal" and -res.value > 1e-12


def separation_lp(
    poly: Polytope,
    ell: np.ndarray,
    x_star: np.ndarray,
    check_cone: bool = True,
) -> tuple[float, Cut]:
    """Minimize lambda . b - u . X* over the normalized cone section.

    A value >= -SEPARATION_TOL certifies (Farkas) that X* lies in the closure
    of the projected feasible set {ell^T x : x in Omega}; otherwise the
    returned cut is violated at X*.
    """
    ell = np.asarray(ell, dtype=float)
    x_star = np.asarray(x_star, dtype=float).reshape(-1)
    if check_cone and not _cone_has_cut_directions(poly, ell):
        raise UnconstrainedProjectionError(
            "the cone contains no usable cut: projection is unconstrained"
        )
    rows, rhs, norm_row, s, m = _cone_constraints(poly, ell)
    c = np.concatenate([poly.b, -poly.b, -x_star, x_star])
    res = lp_solve(
        LpProblem(
            c=c,
            a_ub=rows,
            b_ub=rhs,
            a_eq=norm_row.reshape(1, -1),
            b_eq=np.array([1.0]),
            bounds=[(0.0, None)] * (2 * s + 2 * m),
        )
    )
    if res.status != "optimal":
        raise InfeasibleDomainError(f"separation LP ended with status {res.status}")
    z = res.point
    lam = z[:s] - z[s : 2 * s]
    u = z[2 * s : 2 * s + m] - z[2 * s + m :]
    scale = float(np.abs(lam).sum() + np.abs(u).sum())
    if scale > 1e-12:
        lam = lam / scale
        u = u / scale
    return float(res.value), Cut(u=u, rhs=float(lam @ poly.b), lam=lam)


def box_support(ell: np.ndarray, u: np.ndarray) -> float:
    """Support function of the projected box [-1, 1]^n in direction u.

    The projection is the zonotope {ell^T x : x in [-1,1]^n}, whose support
    in direction u is the l1 norm of ell @ u.
    """
    ell = np.asarray(ell, dtype=float)
    u = np.asarray(u, dtype=float).reshape(-1)
    return float(np.abs(ell @ u).sum())


def _box_separation(ell: np.ndarray, x_star: np.ndarray) -> tuple[float, Cut]:
    """Minimize |ell u|_1 - u . X* over |u|_1 = 1 (box specialization)."""
    ell = np.asarray(ell, dtype=float)
    n, m = ell.shape
    x_star = np.asarray(x_star, dtype=float).reshape(-1)
    # variables: u+, u- (m each), t (n), all >= 0 with t >= +-(ell u)
    zeros_t = np.zeros((n, n))
    rows = np.vstack(
        [
            np.hstack([ell, -ell, -np.eye(n)]),
            np.hstack([-ell, ell, -np.eye(n)]),
        ]
    )
    rhs = np.zeros(2 * n)
    c = np.concatenate([-x_star, x_star, np.ones(n)])
    norm_row = np.concatenate([np.ones(2 * m), np.zeros(n)])
    res = lp_solve(
        LpProblem(
            c=c,
            a_ub=rows,
            b_ub=rhs,
            a_eq=norm_row.reshape(1, -1),
            b_eq=np.array([1.0]),
            bounds=[(0.0, None)] * (2 * m + n),
        )
    )
    if res.status != "optimal":
        raise InfeasibleDomainError(f"box separation LP status {res.status}")
    z = res.point
    u = z[:m] - z[m : 2 * m]
    scale = float(np.abs(u).sum())
    if scale > 1e-12:
        u = u / scale
    return float(res.value), Cut(u=u, rhs=box_support(ell, u), lam=None)


def simplex_projection(ell: np.ndarray) -> list[np.ndarray]:
    """Images of the canonical simplex vertices: the rows of ell.

    The projected feasible set {ell^T x : x in Delta_n} is exactly the convex
    hull of these n points, a direct V-representation that bypasses cuts.
    """
    ell = np.asarray(ell, dtype=float)
    return [ell[i, :].copy() for i in range(ell.shape[0])]


# ----------------------------------------------------------------------
# cut loop
# ----------------------------------------------------------------------


def _interval_box(ell: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    """Interval-arithmetic bounds on ell^T x from per-coordinate ranges."""
    ell = np.asarray(ell, dtype=float)
    low = np.minimum(ell * lo[:, None], ell * hi[:, None]).sum(axis=0)
    high = np.maximum(ell * lo[:, None], ell * hi[:, None]).sum(axis=0)
    pad = 1e-12 * np.maximum(1.0, np.maximum(np.abs(low), np.abs(high)))
    return low - pad, high + pad


def _generic_cut_loop(
    f: Polynomial,
    separate,
    box_lo: np.ndarray,
    box_hi: np.ndarray,
    feasible_x_star: np.ndarray,
    opts: SolveOptions,
    tol: float,
    max_cuts: int,
) -> PolytopeReduceResult:
    m = f.num_vars
    cuts = CutSet()

    # Seed with one cut from separating the origin, when it yields one.
    tau0, cut0 = separate(np.zeros(m))
    if tau0 < -tol and np.abs(cut0.u).sum() > 1e-12:
        cuts.cuts.append(cut0)

    if f.is_constant():
        return PolytopeReduceResult(
            rho=f.constant_value(),
            x_star=np.asarray(feasible_x_star, dtype=float),
            cuts=cuts,
            iterations=0,
            converged=True,
            inner_values=[],
        )

    inner_values: list[float] = []
    x_star = None
    rho = np.inf
    converged = False
    iterations = 0
    for k in range(max_cuts):
        region = cuts.to_hrep(box_lo, box_hi)
        res = minimize_polytope(f, region, opts)
        iterations += 1
        rho = res.value
        x_star = res.point
        inner_values.append(rho)
        tau, cut = separate(x_star)
        if tau >= -tol:
            converged = True
            break
        cuts.cuts.append(cut)
    return PolytopeReduceResult(
        rho=float(rho),
        x_star=np.asarray(x_star, dtype=float),
        cuts=cuts,
        iterations=iterations,
        converged=converged,
        inner_values=inner_values,
    )


def cut_loop(
    sf: SparseForm,
    poly: Polytope,
    opts: SolveOptions | None = None,
    tol: float = SEPARATION_TOL,
    max_cuts: int = _MAX_CUTS,
) -> PolytopeReduceResult:
    """Minimize f(ell^T x) over a bounded standard-form polytope by cuts.

    Requires Omega nonempty (checked at construction) and bounded (checked by
    coordinate-range LPs here).  The outer polyhedron starts from an interval
    box derived from Omega's coordinate ranges and tightens by one Farkas cut
    per iteration until the separation value is >= -tol.
    """
    opts = opts or SolveOptions()
    ell = np.asarray(sf.ell, dtype=float)
    lo, hi = poly.coordinate_ranges()
    box_lo, box_hi = _interval_box(ell, lo, hi)

    first_call = [True]

    def separate(x_point):
        check = first_call[0]
        first_call[0] = False
        return separation_lp(poly, ell, x_point, check_cone=check)

    result = _generic_cut_loop(
        sf.f,
        separate,
        box_lo,
        box_hi,
        ell.T @ poly.feasible_point(),
        opts,
        tol,
        max_cuts,
    )
    result.witness, result.witness_gap = _lift_witness(poly, ell, result.x_star)
    return result


def box_cut_loop(
    sf: SparseForm,
    opts: SolveOptions | None = None,
    tol: float = SEPARATION_TOL,
    max_cuts: int = _MAX_CUTS,
) -> PolytopeReduceResult:
    """Cut loop specialization for Omega = [-1, 1]^n using support cuts."""
    opts = opts or SolveOptions()
    ell = np.asarray(sf.ell, dtype=float)
    m = ell.shape[1]
    support = np.array([box_support(ell, e) for e in np.eye(m)])
    box_hi = support + 1e-12 * np.maximum(1.0, support)
    box_lo = -box_hi

    def separate(x_point):
        return _box_separation(ell, x_point)

    result = _generic_cut_loop(
        sf.f, separate, box_lo, box_hi, np.zeros(m), opts, tol, max_cuts
    )
    result.witness, result.witness_gap = _box_witness(ell, result.x_star)
    return result


def simplex_reduce(sf: SparseForm, opts: SolveOptions | None = None) -> PolytopeReduceResult:
    """Exact reduction on the canonical simplex via the vertex-image hull."""
    opts = opts or SolveOptions()
    ell = np.asarray(sf.ell, dtype=float)
    points = np.array(simplex_projection(ell))
    region = _VRepRegion(points)
    res = minimize_polytope(sf.f, region, opts)
    weights = _hull_weights(points, res.point)
    return PolytopeReduceResult(
        rho=res.value,
        x_star=res.point,
        cuts=CutSet(),
        iterations=res.iterations,
        converged=res.status == "converged",
        inner_values=[res.value],
        witness=weights,
        witness_gap=0.0 if weights is not None else None,
    )


@dataclass
class _VRepRegion:
    """Convex hull of finitely many points, with an enumeration LMO."""

    points: np.ndarray

    def lmo(self, direction: np.ndarray) -> np.ndarray:
        scores = self.points @ np.asarray(direction, dtype=float)
        return self.points[int(np.argmin(scores))].copy()

    def start_points(self, rng: np.random.Generator, count: int) -> np.ndarray:
        weights = rng.dirichlet(np.ones(len(self.points)), size=count)
        return weights @ self.points


def _hull_weights(points: np.ndarray, target: np.ndarray) -> np.ndarray | None:
    """Convex weights representing target in the hull of points, or None."""
    k, m = points.shape
    a_eq = np.vstack([points.T, np.ones((1, k))])
    b_eq = np.concatenate([target, [1.0]])
    res = lp_solve(
        LpProblem(c=np.zeros(k), a_eq=a_eq, b_eq=b_eq, bounds=[(0.0, None)] * k)
    )
    return res.point if res.status == "optimal" else None


def _lift_witness(poly: Polytope, ell: np.ndarray, x_star: np.ndarray):
    """Feasible x minimizing |ell^T x - x_star|_1 and the residual gap."""
    n = poly.num_vars
    m = ell.shape[1]
    # variables: x (n), d+ (m), d- (m)
    a_eq = np.vstack(
        [
            np.hstack([poly.a, np.zeros((poly.a.shape[0], 2 * m))]),
            np.hstack([ell.T, -np.eye(m), np.eye(m)]),
        ]
    )
    b_eq = np.concatenate([poly.b, x_star])
    c = np.concatenate([np.zeros(n), np.ones(2 * m)])
    res = lp_solve(
        LpProblem(c=c, a_eq=a_eq, b_eq=b_eq, bounds=[(0.0, None)] * (n + 2 * m))
    )
    if res.status != "optimal":
        return None, None
    return res.point[:n], float(res.value)


def _box_witness(ell: np.ndarray, x_star: np.ndarray):
    """Point of [-1, 1]^n minimizing |ell^T x - x_star|_1 and the gap."""
    n, m = ell.shape
    a_eq = np.hstack([ell.T, -np.eye(m), np.eye(m)])
    b_eq = np.asarray(x_star, dtype=float)
    c = np.concatenate([np.zeros(n), np.ones(2 * m)])
    bounds = [(-1.0, 1.0)] * n + [(0.0, None)] * (2 * m)
    res = lp_solve(LpProblem(c=c, a_eq=a_eq, b_eq=b_eq, bounds=bounds))
    if res.status != "optimal":
        return None, None
    return res.point[:n], float(res.value)
