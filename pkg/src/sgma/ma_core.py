"""Charts, generating functions, and the induced phase-space geometry.

A generating function is a polynomial potential on one of four coordinate
charts of the phase space T*R^3 (coordinates x, y, z, X, Y, Z), together
with the positive constant that multiplies the Hessian-determinant balance
condition.  Each chart fixes three of the six phase-space coordinates as
independent variables; the potential's first derivatives supply the
remaining three, immersing the chart into the phase space as a Lagrangian
submanifold.

The ambient pseudo-metric pairs each base coordinate with its momentum
(signature (3,3)); its pull-back along the immersion is a symmetric 3x3
field whose signature classifies the balance equation pointwise as
elliptic (3,0), hyperbolic (1,2), or parabolic (degenerate).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .polyexpr import Poly

AMBIENT_COORDS = ("x", "y", "z", "X", "Y", "Z")


class ChartKind(enum.Enum):
    """The four physically used charts and their independent coordinates."""

    CLASSICAL_P = "P"
    DUAL_R = "R"
    DUAL_S = "S"
    DUAL_T = "T"

    @property
    def coords(self) -> tuple:
        return _CHART_COORDS[self]


_CHART_COORDS = {
    ChartKind.CLASSICAL_P: ("x", "y", "z"),
    ChartKind.DUAL_R: ("X", "Y", "Z"),
    ChartKind.DUAL_S: ("X", "Y", "z"),
    ChartKind.DUAL_T: ("x", "y", "Z"),
}


@dataclass(frozen=True)
class GeneratingFunction:
    """A chart, a polynomial potential over its coordinates, and eps_q > 0.

    ``eps_q`` is the single positive constant (Rossby number times potential
    vorticity) appearing in the balance condition; it is spatially uniform
    here.
    """

    chart: ChartKind
    potential: Poly
    eps_q: Fraction

    def __post_init__(self):
        eps = self.eps_q if isinstance(self.eps_q, Fraction) else Fraction(self.eps_q)
        object.__setattr__(self, "eps_q", eps)
        if eps <= 0:
            raise ValueError(f"eps_q must be positive, got {eps}")
        if self.potential.variables != self.chart.coords:
            raise ValueError(
                f"potential variables {self.potential.variables!r} do not match "
                f"chart {self.chart.value!r} coordinates {self.chart.coords!r}"
            )

    def to_dict(self) -> dict:
        return {
            "chart": self.chart.value,
            "potential": str(self.potential),
            "eps_q": str(self.eps_q),
        }

    @classmethod
    def from_dict(cls, record: Mapping) -> "GeneratingFunction":
        from .polyexpr import parse_poly

        unknown = set(record) - {"chart", "potential", "eps_q"}
        if unknown:
            raise ValueError(f"unknown generating-function keys {sorted(unknown)!r}")
        try:
            chart = ChartKind(record["chart"])
        except (KeyError, ValueError):
            raise ValueError(
                f"chart must be one of {[k.value for k in ChartKind]!r}"
            ) from None
        potential = parse_poly(record["potential"], chart.coords)
        eps_q = Fraction(str(record.get("eps_q", 1)))
        return cls(chart, potential, eps_q)


@dataclass(frozen=True)
class AmbientPoint:
    """A point of the phase space in the coordinate order x, y, z, X, Y, Z."""

    x: float
    y: float
    z: float
    X: float
    Y: float
    Z: float

    def as_tuple(self) -> tuple:
        return (self.x, self.y, self.z, self.X, self.Y, self.Z)

    def base(self) -> tuple:
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class Sym3:
    """Symmetric 3x3 real matrix stored by its six independent entries."""

    xx: float
    xy: float
    xz: float
    yy: float
    yz: float
    zz: float

    @classmethod
    def from_matrix(cls, m) -> "Sym3":
        m = np.asarray(m, dtype=float)
        return cls(
            xx=m[0, 0],
            xy=0.5 * (m[0, 1] + m[1, 0]),
            xz=0.5 * (m[0, 2] + m[2, 0]),
            yy=m[1, 1],
            yz=0.5 * (m[1, 2] + m[2, 1]),
            zz=m[2, 2],
        )

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                [self.xx, self.xy, self.xz],
                [self.xy, self.yy, self.yz],
                [self.xz, self.yz, self.zz],
            ]
        )

    def det(self) -> float:
        a, b, c, d, e, f = self.xx, self.xy, self.xz, self.yy, self.yz, self.zz
        return a * (d * f - e * e) - b * (b * f - e * c) + c * (b * e - d * c)

    def adjugate(self) -> "Sym3":
        a, b, c, d, e, f = self.xx, self.xy, self.xz, self.yy, self.yz, self.zz
        return Sym3(
            xx=d * f - e * e,
            xy=-(b * f - c * e),
            xz=b * e - c * d,
            yy=a * f - c * c,
            yz=-(a * e - b * c),
            zz=a * d - b * b,
        )

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues in ascending order (deterministic for a fixed input)."""
        return np.linalg.eigvalsh(self.as_array())

    def scaled(self, factor: float) -> "Sym3":
        return Sym3(*(factor * v for v in
                      (self.xx, self.xy, self.xz, self.yy, self.yz, self.zz)))


class SignatureLabel(str, enum.Enum):
    ELLIPTIC = "elliptic"
    HYPERBOLIC = "hyperbolic"
    PARABOLIC = "parabolic"
    OTHER = "other"


@dataclass(frozen=True)
class Signature:
    """Eigenvalue sign counts of a pull-back metric, with the tolerance used."""

    n_pos: int
    n_neg: int
    n_zero: int
    label: SignatureLabel
    tol: float
    eigenvalues: tuple


def _label_for(n_pos: int, n_neg: int, n_zero: int) -> SignatureLabel:
    if n_zero >= 1:
        return SignatureLabel.PARABOLIC
    if (n_pos, n_neg) == (3, 0):
        return SignatureLabel.ELLIPTIC
    if (n_pos, n_neg) == (1, 2):
        return SignatureLabel.HYPERBOLIC
    return SignatureLabel.OTHER


def _point_values(gf: GeneratingFunction, pt) -> list:
    if isinstance(pt, Mapping):
        missing = [v for v in gf.chart.coords if v not in pt]
        extra = set(pt) - set(gf.chart.coords)
        if missing or extra:
            raise ValueError(
                f"point must supply exactly {gf.chart.coords!r}"
            )
        return [pt[v] for v in gf.chart.coords]
    values = list(pt)
    if len(values) != 3:
        raise ValueError(f"expected 3 chart values, got {len(values)}")
    return values


# -- exact symbolic building blocks (cached per generating function) ---------


@lru_cache(maxsize=None)
def hessian_polys(gf: GeneratingFunction) -> tuple:
    """3x3 matrix of exact second-derivative polynomials of the potential."""
    cs = gf.chart.coords
    firsts = [gf.potential.diff(v) for v in cs]
    return tuple(tuple(firsts[i].diff(cs[j]) for j in range(3)) for i in range(3))


@lru_cache(maxsize=None)
def immersion_polys(gf: GeneratingFunction) -> tuple:
    """The six ambient coordinates as exact polynomials of the chart coordinates.

    Order follows AMBIENT_COORDS.  Chart coordinates map to themselves; the
    complementary coordinates are the defining first-derivative relations of
    the chart (with the sign conventions of the two mixed charts: Z = -S_z
    and z = -T_Z).
    """
    cs = gf.chart.coords
    pot = gf.potential

    def var(name: str) -> Poly:
        return Poly.variable(cs, name)

    if gf.chart is ChartKind.CLASSICAL_P:
        return (var("x"), var("y"), var("z"),
                pot.diff("x"), pot.diff("y"), pot.diff("z"))
    if gf.chart is ChartKind.DUAL_R:
        return (pot.diff("X"), pot.diff("Y"), pot.diff("Z"),
                var("X"), var("Y"), var("Z"))
    if gf.chart is ChartKind.DUAL_S:
        return (pot.diff("X"), pot.diff("Y"), var("z"),
                var("X"), var("Y"), -pot.diff("z"))
    return (var("x"), var("y"), -pot.diff("Z"),
            pot.diff("x"), pot.diff("y"), var("Z"))


@lru_cache(maxsize=None)
def immersion_jacobian_polys(gf: GeneratingFunction) -> tuple:
    """6x3 matrix of exact partials: ambient coordinate by chart coordinate."""
    cs = gf.chart.coords
    rows = immersion_polys(gf)
    return tuple(tuple(row.diff(v) for v in cs) for row in rows)


# The ambient quadratic form pairs (x, X), (y, Y), (z, Z).
_METRIC_PAIRS = ((0, 3), (1, 4), (2, 5))


@lru_cache(maxsize=None)
def pullback_metric_polys(gf: GeneratingFunction) -> tuple:
    """Exact 3x3 polynomial entries of the pull-back metric J^T G J."""
    jac = immersion_jacobian_polys(gf)
    eps = gf.eps_q
    out = []
    for i in range(3):
        row = []
        for j in range(3):
            acc = Poly.zero(gf.chart.coords)
            for a, b in _METRIC_PAIRS:
                acc = acc + jac[a][i] * jac[b][j] + jac[b][i] * jac[a][j]
            row.append(eps * acc)
        out.append(tuple(row))
    return tuple(out)


@lru_cache(maxsize=None)
def ma_residual_poly(gf: GeneratingFunction) -> Poly:
    """Exact chart balance residual (LHS - RHS); the zero polynomial for solutions.

    Chart forms: classical det Hess(P) = eps_q; dual-R det Hess(R) = 1/eps_q;
    dual-S eps_q*(S_XX S_YY - S_XY^2) + S_zz = 0; dual-T
    T_xx T_yy - T_xy^2 + eps_q T_ZZ = 0.
    """
    h = hessian_polys(gf)
    eps = gf.eps_q
    if gf.chart is ChartKind.CLASSICAL_P or gf.chart is ChartKind.DUAL_R:
        det = (
            h[0][0] * (h[1][1] * h[2][2] - h[1][2] * h[2][1])
            - h[0][1] * (h[1][0] * h[2][2] - h[1][2] * h[2][0])
            + h[0][2] * (h[1][0] * h[2][1] - h[1][1] * h[2][0])
        )
        rhs = eps if gf.chart is ChartKind.CLASSICAL_P else 1 / eps
        return det - Poly.constant(gf.chart.coords, rhs)
    minor = h[0][0] * h[1][1] - h[0][1] * h[0][1]
    if gf.chart is ChartKind.DUAL_S:
        return eps * minor + h[2][2]
    return minor + eps * h[2][2]


# -- point evaluations -------------------------------------------------------


def hessian(gf: GeneratingFunction, pt) -> Sym3:
    """Hessian of the potential in the chart's own variables, evaluated at pt."""
    values = _point_values(gf, pt)
    h = hessian_polys(gf)
    return Sym3(
        xx=float(h[0][0].eval(values)),
        xy=float(h[0][1].eval(values)),
        xz=float(h[0][2].eval(values)),
        yy=float(h[1][1].eval(values)),
        yz=float(h[1][2].eval(values)),
        zz=float(h[2][2].eval(values)),
    )


def ma_residual(gf: GeneratingFunction, pt):
    """Numeric balance residual at a chart point; exact for exact inputs."""
    return ma_residual_poly(gf).eval(_point_values(gf, pt))


def immersion(gf: GeneratingFunction, pt) -> AmbientPoint:
    """The unique ambient point over the chart point under the chart relations."""
    values = _point_values(gf, pt)
    coords = [p.eval(values) for p in immersion_polys(gf)]
    return AmbientPoint(*coords)


def immersion_jacobian(gf: GeneratingFunction, pt) -> np.ndarray:
    """6x3 differential of the immersion at pt (exact derivatives, then evaluated)."""
    values = _point_values(gf, pt)
    jac = immersion_jacobian_polys(gf)
    return np.array([[float(p.eval(values)) for p in row] for row in jac])


def ambient_metric(gf: GeneratingFunction) -> np.ndarray:
    """Constant 6x6 matrix of the ambient metric: eps_q on each base/momentum pair."""
    eps = float(gf.eps_q)
    g = np.zeros((6, 6))
    for a, b in _METRIC_PAIRS:
        g[a, b] = eps
        g[b, a] = eps
    return g


def pullback_metric(gf: GeneratingFunction, pt) -> Sym3:
    """Pull-back metric at a chart point, from the exact J^T G J entries."""
    values = _point_values(gf, pt)
    h = pullback_metric_polys(gf)
    return Sym3(
        xx=float(h[0][0].eval(values)),
        xy=float(h[0][1].eval(values)),
        xz=float(h[0][2].eval(values)),
        yy=float(h[1][1].eval(values)),
        yz=float(h[1][2].eval(values)),
        zz=float(h[2][2].eval(values)),
    )


def classify(gf: GeneratingFunction, pt, tol: float = 1e-9) -> Signature:
    """Signature of the pull-back metric at pt.

    An eigenvalue counts as zero when |lambda| <= tol * (1 + max |lambda|),
    a relative test meaningful near the singular locus where eigenvalues
    cross zero linearly.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    eigs = pullback_metric(gf, pt).eigenvalues()
    scale = tol * (1.0 + float(np.max(np.abs(eigs))))
    n_zero = int(np.sum(np.abs(eigs) <= scale))
    n_pos = int(np.sum(eigs > scale))
    n_neg = int(np.sum(eigs < -scale))
    return Signature(
        n_pos=n_pos,
        n_neg=n_neg,
        n_zero=n_zero,
        label=_label_for(n_pos, n_neg, n_zero),
        tol=tol,
        eigenvalues=tuple(float(v) for v in eigs),
    )


def linearization_matrix(gf: GeneratingFunction, pt) -> Sym3:
    """Coefficient matrix of the balance equation linearized about the potential.

    Classical chart: adjugate of the Hessian.  Dual-T chart: block matrix of
    the adjugate of the horizontal 2x2 Hessian with eps_q in the vertical
    slot.  The other charts have no separately hard-coded form here; the
    generic pull-back covers them.
    """
    if gf.chart is ChartKind.CLASSICAL_P:
        return hessian(gf, pt).adjugate()
    if gf.chart is ChartKind.DUAL_T:
        h = hessian(gf, pt)
        return Sym3(
            xx=h.yy, xy=-h.xy, xz=0.0,
            yy=h.xx, yz=0.0,
            zz=float(gf.eps_q),
        )
    raise ValueError(
        f"linearization matrix is only defined for charts "
        f"{ChartKind.CLASSICAL_P.value!r} and {ChartKind.DUAL_T.value!r}, "
        f"got {gf.chart.value!r}"
    )


def classification_grid(gf: GeneratingFunction, axes: Mapping[str, Sequence],
                        tol: float = 1e-9):
    """Vectorized classification over a rectangular grid of chart points.

    ``axes`` maps each chart coordinate to its 1-D sample values.  Returns
    (eigenvalues, labels): eigenvalues with shape grid + (3,), ascending,
    and labels as an object array of SignatureLabel values.  Points are in
    row-major order of the chart's coordinate tuple.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    cs = gf.chart.coords
    if set(axes) != set(cs):
        raise ValueError(f"axes must supply exactly {cs!r}")
    grids = np.meshgrid(*(np.asarray(axes[v], dtype=float) for v in cs),
                        indexing="ij")
    shape = grids[0].shape
    flat = [g.reshape(-1) for g in grids]
    n = flat[0].size
    hp = pullback_metric_polys(gf)
    H = np.empty((n, 3, 3))
    for i in range(3):
        for j in range(i, 3):
            val = hp[i][j].eval(flat)
            H[:, i, j] = val
            H[:, j, i] = val
    eigs = np.linalg.eigvalsh(H)
    scale = tol * (1.0 + np.max(np.abs(eigs), axis=1, keepdims=True))
    zero = np.abs(eigs) <= scale
    pos = eigs > scale
    neg = eigs < -scale
    n_zero = zero.sum(axis=1)
    n_pos = pos.sum(axis=1)
    n_neg = neg.sum(axis=1)
    labels = np.empty(n, dtype=object)
    for k in range(n):
        labels[k] = _label_for(int(n_pos[k]), int(n_neg[k]), int(n_zero[k]))
    return eigs.reshape(shape + (3,)), labels.reshape(shape)
