"""Projection singularities, caustics, and multivalued geopotential branches.

The physical-space projection of an immersed chart drops rank exactly
where the determinant of its base-coordinate Jacobian vanishes; that
determinant is an exact polynomial in the chart coordinates and its zero
set is the singular locus.  Projecting the locus to physical space traces
the caustic.  Over a physical base point the chart relations define a
fiber of preimages; each preimage carries a geopotential value through
the chart's inverse Legendre formula, and the admissible branch is the
one whose branch Hessian is positive definite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .ma_core import ChartKind, GeneratingFunction, immersion, immersion_jacobian, \
    immersion_polys, _point_values
from .polyexpr import Poly
from .realroots import real_roots


@dataclass(frozen=True)
class CausticSample:
    """One singular-locus point with its physical projection."""

    chart_point: tuple
    base_point: tuple
    det_dpi: float


@dataclass(frozen=True)
class GridSpec2D:
    """Rectangular grid over two chart coordinates, row-major (var1 outer)."""

    var1: str
    lo1: float
    hi1: float
    n1: int
    var2: str
    lo2: float
    hi2: float
    n2: int

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("grid sizes must be at least 1")
        if self.lo1 > self.hi1 or self.lo2 > self.hi2:
            raise ValueError("grid bounds must be well ordered")

    def nodes(self):
        a1 = np.linspace(self.lo1, self.hi1, self.n1)
        a2 = np.linspace(self.lo2, self.hi2, self.n2)
        for v1 in a1:
            for v2 in a2:
                yield float(v1), float(v2)


@dataclass
class CausticSweep:
    samples: list
    degenerate_slices: list = field(default_factory=list)
    rejected: int = 0


@dataclass
class BranchPoint:
    """Fiber of chart preimages over one base point.

    Parallel lists: fiber_values (full chart points), P_values, convex_flags,
    multiplicities and degenerate_flags.  failed_seeds records Newton seeds
    that did not converge (iterative charts only).
    """

    base_point: tuple
    fiber_values: list
    P_values: list
    convex_flags: list
    multiplicities: list = field(default_factory=list)
    degenerate_flags: list = field(default_factory=list)
    failed_seeds: list = field(default_factory=list)


class BranchChoice(NamedTuple):
    index: int | None
    ambiguous: bool


@dataclass(frozen=True)
class FiberOptions:
    seeds: tuple = ()
    newton_tol: float = 1e-12
    newton_max_iter: int = 60
    dedupe_tol: float = 1e-9
    convex_tol: float = 1e-9
    degenerate_tol: float = 1e-9


@lru_cache(maxsize=None)
def singular_locus_poly(gf: GeneratingFunction) -> Poly:
    """Exact polynomial whose zero set (in chart coordinates) is the singular locus.

    It is the symbolic determinant of the base-projection Jacobian:
    constant 1 on the classical chart, -T_ZZ on the dual-T chart,
    S_XX*S_YY - S_XY^2 on dual-S, and det Hess(R) on dual-R.
    """
    cs = gf.chart.coords
    rows = immersion_polys(gf)[:3]
    jac = [[row.diff(v) for v in cs] for row in rows]
    return (
        jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1])
        - jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0])
        + jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0])
    )


def dpi_det(gf: GeneratingFunction, pt):
    """Determinant of the projection differential at a chart point."""
    return singular_locus_poly(gf).eval(_point_values(gf, pt))


def caustic_sweep(gf: GeneratingFunction, grid: GridSpec2D, tol: float = 1e-10) -> CausticSweep:
    """Trace the caustic over a grid of two chart coordinates.

    At each node the locus polynomial is restricted to the remaining chart
    coordinate and its real roots are found exactly; each root projects to
    one caustic sample.  Slices where the restriction vanishes identically
    are reported and skipped; samples whose residual determinant exceeds
    ``tol`` are counted as rejected.  Samples appear in row-major grid order,
    roots ascending within a node.
    """
    cs = gf.chart.coords
    if grid.var1 not in cs or grid.var2 not in cs or grid.var1 == grid.var2:
        raise ValueError(f"grid variables must be two distinct of {cs!r}")
    free = next(v for v in cs if v not in (grid.var1, grid.var2))
    locus = singular_locus_poly(gf)
    sweep = CausticSweep(samples=[])
    for v1, v2 in grid.nodes():
        mapping = {
            grid.var1: Fraction(v1),
            grid.var2: Fraction(v2),
            free: Poly.variable((free,), free),
        }
        restricted = locus.compose(mapping, (free,))
        if restricted.is_zero:
            sweep.degenerate_slices.append((v1, v2))
            continue
        coeffs = restricted.univariate_coefficients(free)
        if len(coeffs) == 1:
            continue  # constant nonzero: no roots on this slice
        for root in real_roots(coeffs):
            values = {grid.var1: v1, grid.var2: v2, free: root.value}
            chart_point = tuple(float(values[v]) for v in cs)
            det = float(dpi_det(gf, chart_point))
            if abs(det) > tol:
                sweep.rejected += 1
                continue
            base = immersion(gf, chart_point).base()
            sweep.samples.append(CausticSample(
                chart_point=chart_point,
                base_point=tuple(float(v) for v in base),
                det_dpi=det,
            ))
    return sweep


def multivalued_P(gf: GeneratingFunction, pt):
    """Geopotential value and base point of the branch through a dual-chart point.

    Inverse Legendre formulas per chart: dual-R P = Xx + Yy + Zz - R;
    dual-S P = Xx + Yy - S; dual-T P = Zz + T.  Exact for exact inputs.
    On the classical chart the potential itself is the geopotential, so the
    transform is not defined there.
    """
    if gf.chart is ChartKind.CLASSICAL_P:
        raise ValueError("the classical chart's potential is already the geopotential")
    values = _point_values(gf, pt)
    amb = immersion(gf, values).as_tuple()
    x, y, z, X, Y, Z = amb
    pot = gf.potential.eval(values)
    if gf.chart is ChartKind.DUAL_R:
        P = X * x + Y * y + Z * z - pot
    elif gf.chart is ChartKind.DUAL_S:
        P = X * x + Y * y - pot
    else:
        P = Z * z + pot
    return P, (x, y, z)


def branch_hessian(gf: GeneratingFunction, chart_pt) -> np.ndarray:
    """Hessian of the branch geopotential at a regular chart point.

    Computed by implicit differentiation of the chart relations: the
    momentum block of the immersion Jacobian times the inverse of its base
    block.  Raises DomainError where the base block is singular (fold).
    """
    J = immersion_jacobian(gf, chart_pt)
    B, C = J[:3], J[3:]
    det = np.linalg.det(B)
    scale = max(1.0, float(np.max(np.abs(B)))) ** 3
    if abs(det) <= 1e-14 * scale:
        raise DomainError("projection is singular here; branch Hessian undefined")
    return C @ np.linalg.inv(B)


def branch_is_convex(gf: GeneratingFunction, chart_pt, tol: float = 1e-9) -> bool:
    """Positive definiteness of the branch Hessian via leading principal minors."""
    try:
        hp = branch_hessian(gf, chart_pt)
    except DomainError:
        return False
    s = 0.5 * (hp + hp.T)
    m1 = s[0, 0]
    m2 = s[0, 0] * s[1, 1] - s[0, 1] ** 2
    m3 = np.linalg.det(s)
    return bool(m1 > tol and m2 > tol and m3 > tol)


def _dedupe(solutions: list, tol: float) -> list:
    kept = []
    for sol in solutions:
        if all(max(abs(a - b) for a, b in zip(sol, k)) > tol for k in kept):
            kept.append(sol)
    return kept


def _newton_fiber(gf: GeneratingFunction, base, opts: FiberOptions):
    """Newton solve of the chart relations over a base point (dual-R / dual-S)."""
    cs = gf.chart.coords
    pot = gf.potential
    if gf.chart is ChartKind.DUAL_R:
        unknowns = ["X", "Y", "Z"]
        targets = [base[0], base[1], base[2]]
        fixed = {}
    else:  # DUAL_S: z is a base coordinate, (X, Y) unknown
        unknowns = ["X", "Y"]
        targets = [base[0], base[1]]
        fixed = {"z": float(base[2])}
    res_polys = [pot.diff(v) for v in unknowns]
    jac_polys = [[p.diff(u) for u in unknowns] for p in res_polys]
    scale = 1.0 + max(abs(float(v)) for v in base)

    converged, failed = [], []
    for seed in opts.seeds:
        seed = tuple(float(s) for s in seed)
        if len(seed) != len(unknowns):
            raise ValueError(f"seed must supply {len(unknowns)} values for {unknowns!r}")
        u = np.array(seed, dtype=float)
        ok = False
        for _ in range(opts.newton_max_iter):
            point = dict(fixed)
            point.update(zip(unknowns, u))
            values = [point[v] for v in cs]
            r = np.array([float(p.eval(values)) - t for p, t in zip(res_polys, targets)])
            if np.max(np.abs(r)) <= opts.newton_tol * scale:
                ok = True
                break
            Jm = np.array([[float(q.eval(values)) for q in row] for row in jac_polys])
            try:
                step = np.linalg.solve(Jm, r)
            except np.linalg.LinAlgError:
                break
            u = u - step
            if not np.all(np.isfinite(u)):
                break
        if ok:
            converged.append(tuple(u))
        else:
            failed.append(seed)
    kept = _dedupe(sorted(converged), opts.dedupe_tol)
    chart_points = []
    for u in kept:
        point = dict(fixed)
        point.update(zip(unknowns, u))
        chart_points.append(tuple(float(point[v]) for v in cs))
    return chart_points, failed


def fiber_solve(gf: GeneratingFunction, base, opts: FiberOptions | None = None) -> BranchPoint:
    """All chart preimages of a physical base point, with geopotential values.

    On the dual-T chart the fiber equation z + T_Z(x, y, .) = 0 is a
    univariate polynomial in Z and is solved by exact root isolation, so
    fold tangencies are found with their multiplicity.  The dual-R and
    dual-S charts use Newton iteration from caller-supplied seeds.  An empty
    fiber means the base point lies outside the solution domain.
    """
    opts = opts or FiberOptions()
    base = tuple(base)
    if len(base) != 3:
        raise ValueError(f"base point must have 3 components, got {len(base)}")
    bp = BranchPoint(base_point=tuple(float(v) for v in base),
                     fiber_values=[], P_values=[], convex_flags=[])

    if gf.chart is ChartKind.CLASSICAL_P:
        chart_pt = tuple(float(v) for v in base)
        bp.fiber_values.append(chart_pt)
        bp.P_values.append(float(gf.potential.eval(list(base))))
        bp.convex_flags.append(branch_is_convex(gf, chart_pt, opts.convex_tol))
        bp.multiplicities.append(1)
        bp.degenerate_flags.append(False)
        return bp

    if gf.chart is ChartKind.DUAL_T:
        x0, y0, z0 = (Fraction(v) for v in base)
        t_z = gf.potential.diff("Z")
        restricted = t_z.compose(
            {"x": x0, "y": y0, "Z": Poly.variable(("Z",), "Z")}, ("Z",)
        ) + Poly.constant(("Z",), z0)
        if restricted.is_zero:
            raise DomainError("fiber equation vanishes identically over this base point")
        coeffs = restricted.univariate_coefficients("Z")
        roots = real_roots(coeffs) if len(coeffs) > 1 else []
        for root in roots:
            chart_pt = (float(x0), float(y0), root.value)
            P, _ = multivalued_P(gf, chart_pt)
            degenerate = root.multiplicity > 1 or \
                abs(float(dpi_det(gf, chart_pt))) <= opts.degenerate_tol
            bp.fiber_values.append(chart_pt)
            bp.P_values.append(float(P))
            bp.convex_flags.append(
                (not degenerate) and branch_is_convex(gf, chart_pt, opts.convex_tol)
            )
            bp.multiplicities.append(root.multiplicity)
            bp.degenerate_flags.append(degenerate)
        return bp

    chart_points, failed = _newton_fiber(gf, base, opts)
    bp.failed_seeds = failed
    for chart_pt in chart_points:
        P, _ = multivalued_P(gf, chart_pt)
        degenerate = abs(float(dpi_det(gf, chart_pt))) <= opts.degenerate_tol
        bp.fiber_values.append(chart_pt)
        bp.P_values.append(float(P))
        bp.convex_flags.append(
            (not degenerate) and branch_is_convex(gf, chart_pt, opts.convex_tol)
        )
        bp.multiplicities.append(1)
        bp.degenerate_flags.append(degenerate)
    return bp


def branch_select_convex(bp: BranchPoint, gf: GeneratingFunction,
                         tol: float = 1e-9) -> BranchChoice:
    """Index of the unique convex branch, or None.

    Convexity is re-evaluated from the generating function at each fiber
    point (degenerate fiber values are never eligible).  If several branches
    qualify the first index is returned with the ambiguity flag set; the
    selection policy among coexisting convex branches is left to the caller.
    """
    convex = []
    for i, chart_pt in enumerate(bp.fiber_values):
        if bp.degenerate_flags and bp.degenerate_flags[i]:
            continue
        if branch_is_convex(gf, chart_pt, tol):
            convex.append(i)
    if not convex:
        return BranchChoice(None, False)
    return BranchChoice(convex[0], len(convex) > 1)


CAUSTIC_CSV_COLUMNS = ("chart_1", "chart_2", "chart_3",
                       "base_x", "base_y", "base_z", "det_dpi")


def write_caustic_csv(sweep: CausticSweep, stream, float_format=None) -> None:
    """CSV rows in sweep order: chart coordinates, base point, residual determinant."""
    from .formatting import format_float

    fmt = float_format or format_float
    stream.write(",".join(CAUSTIC_CSV_COLUMNS) + "\n")
    for s in sweep.samples:
        row = list(s.chart_point) + list(s.base_point) + [s.det_dpi]
        stream.write(",".join(fmt(v) for v in row) + "\n")
