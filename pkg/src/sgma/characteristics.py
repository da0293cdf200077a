"""Characteristic variety, eikonal residuals, and bicharacteristic tracing.

On hyperbolic branches the pull-back metric has null directions; surfaces
tangent to exactly one null direction are the characteristic surfaces,
and they are foliated by the integral curves of the Hamiltonian
H(q, p) = p^T h(q)^{-1} p restricted to its zero level.  This module
integrates those curves with fixed-step classical RK4, monitors the
conserved quantities available for metrics with a cyclic horizontal
structure, and provides the closed-form null-geodesic displacements of
the canonical fold metric 2(-Z dx^2 + dy^2 - Z dZ^2) as an independent
oracle, including the semicubical cusp law at the parabolic boundary.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import isqrt

from .errors import DomainError, MetricSingularError
from .ma_core import GeneratingFunction, _point_values, pullback_metric_polys
from .polyexpr import Poly


@dataclass(frozen=True)
class BicharState:
    """Phase-space point over a chart: position q, conjugate momentum p."""

    q: tuple
    p: tuple
    s: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(float(v) for v in self.q))
        object.__setattr__(self, "p", tuple(float(v) for v in self.p))
        if len(self.q) != 3 or len(self.p) != 3:
            raise ValueError("q and p must each have 3 components")


class Termination(str, enum.Enum):
    MAX_STEPS = "max_steps"
    PARABOLIC_BOUNDARY = "parabolic_boundary"
    DOMAIN_EXIT = "domain_exit"
    DIVERGED = "diverged"


@dataclass
class Trace:
    states: list
    termination: Termination
    conserved_log: list = field(default_factory=list)


def _compile_poly(poly: Poly):
    # Tiny code generation: the metric entries are evaluated millions of
    # times inside RK4 stages, where generic Poly.eval dispatch dominates.
    terms = []
    for exps, coeff in poly.terms.items():
        parts = [repr(float(coeff))]
        parts += [f"q[{i}]**{e}" if e > 1 else f"q[{i}]"
                  for i, e in enumerate(exps) if e]
        terms.append("*".join(parts))
    src = " + ".join(terms) if terms else "0.0"
    return eval(f"lambda q: {src}")  # noqa: S307 - generated from our own Poly


class _MetricField:
    """Fast numeric access to the exact pull-back metric and its gradients."""

    def __init__(self, gf: GeneratingFunction):
        entries = pullback_metric_polys(gf)
        cs = gf.chart.coords
        self.entries = entries
        self.d_entries = tuple(
            tuple(tuple(entries[i][j].diff(v) for j in range(3)) for i in range(3))
            for v in cs
        )
        self._h_funcs = tuple(tuple(_compile_poly(entries[i][j]) for j in range(3))
                              for i in range(3))
        self._dh_funcs = tuple(
            tuple(tuple(_compile_poly(self.d_entries[k][i][j]) for j in range(3))
                  for i in range(3))
            for k in range(3)
        )
        self.cyclic = self._detect_cyclic(entries, cs)

    @staticmethod
    def _detect_cyclic(entries, cs) -> bool:
        # Diagonal metric depending only on the third coordinate, with
        # h_11 proportional to that coordinate and h_22 a nonzero constant:
        # then p1, p2 are conserved and so are qdot1 * q3 and qdot2.
        third = cs[2]
        for i in range(3):
            for j in range(3):
                if i != j and not entries[i][j].is_zero:
                    return False
                if i == j:
                    try:
                        entries[i][j].univariate_coefficients(third)
                    except ValueError:
                        return False
        c11 = entries[0][0].univariate_coefficients(third)
        c22 = entries[1][1].univariate_coefficients(third)
        return (
            len(c11) == 2 and c11[0] == 0 and c11[1] != 0
            and len(c22) == 1 and c22[0] != 0
        )

    def h(self, q):
        f = self._h_funcs
        return [[f[i][j](q) for j in range(3)] for i in range(3)]

    def dh(self, q, k):
        f = self._dh_funcs[k]
        return [[f[i][j](q) for j in range(3)] for i in range(3)]


@lru_cache(maxsize=None)
def _metric_field(gf: GeneratingFunction) -> _MetricField:
    return _MetricField(gf)


def _det3(m) -> float:
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def _inv3(m, singular_tol: float):
    det = _det3(m)
    scale = max(1.0, max(abs(v) for row in m for v in row)) ** 3
    if abs(det) <= singular_tol * scale:
        raise MetricSingularError(
            f"metric is singular within tolerance (det = {det:g})"
        )
    c = [
        [m[1][1] * m[2][2] - m[1][2] * m[2][1],
         m[0][2] * m[2][1] - m[0][1] * m[2][2],
         m[0][1] * m[1][2] - m[0][2] * m[1][1]],
        [m[1][2] * m[2][0] - m[1][0] * m[2][2],
         m[0][0] * m[2][2] - m[0][2] * m[2][0],
         m[0][2] * m[1][0] - m[0][0] * m[1][2]],
        [m[1][0] * m[2][1] - m[1][1] * m[2][0],
         m[0][1] * m[2][0] - m[0][0] * m[2][1],
         m[0][0] * m[1][1] - m[0][1] * m[1][0]],
    ]
    return [[c[i][j] / det for j in range(3)] for i in range(3)], det


def _matvec(m, v):
    return [sum(m[i][j] * v[j] for j in range(3)) for i in range(3)]


def _quadform(m, v) -> float:
    return sum(v[i] * m[i][j] * v[j] for i in range(3) for j in range(3))


def hamiltonian(gf: GeneratingFunction, state: BicharState,
                singular_tol: float = 1e-12) -> float:
    """H(q, p) = p^T h(q)^{-1} p; raises MetricSingularError at parabolic points."""
    field_ = _metric_field(gf)
    hinv, _ = _inv3(field_.h(state.q), singular_tol)
    return _quadform(hinv, state.p)


def null_project(gf: GeneratingFunction, q, p_partial, free_index: int,
                 singular_tol: float = 1e-12) -> list:
    """Complete two fixed momentum components to the null cone H = 0.

    Returns the 0, 1 or 2 real completions (ascending in the free
    component).  An empty list at an elliptic point reflects that the
    characteristic variety there is only the zero vector.
    """
    if free_index not in (0, 1, 2):
        raise ValueError("free_index must be 0, 1 or 2")
    p_partial = [float(v) for v in p_partial]
    if len(p_partial) != 2:
        raise ValueError("p_partial must supply the two fixed components")
    q = tuple(float(v) for v in q)
    field_ = _metric_field(gf)
    hinv, _ = _inv3(field_.h(q), singular_tol)
    fixed = [i for i in range(3) if i != free_index]
    p0 = [0.0, 0.0, 0.0]
    for i, v in zip(fixed, p_partial):
        p0[i] = v
    a = hinv[free_index][free_index]
    b = 2.0 * sum(hinv[free_index][j] * p0[j] for j in fixed)
    c = sum(p0[i] * hinv[i][j] * p0[j] for i in fixed for j in fixed)

    def completed(value: float) -> tuple:
        p = list(p0)
        p[free_index] = value
        return tuple(p)

    if abs(a) <= 1e-15 * max(1.0, max(abs(v) for row in hinv for v in row)):
        if abs(b) <= 1e-15:
            return [completed(0.0)] if abs(c) <= 1e-15 else []
        return [completed(-c / b)]
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return []
    if disc == 0.0:
        return [completed(-b / (2.0 * a))]
    r = math.sqrt(disc)
    roots = sorted(((-b - r) / (2.0 * a), (-b + r) / (2.0 * a)))
    return [completed(v) for v in roots]


def ham_rhs(gf: GeneratingFunction, state: BicharState,
            singular_tol: float = 1e-12):
    """Hamilton's equations: qdot = 2 h^{-1} p, pdot_k = w^T (d_k h) w, w = h^{-1} p.

    The momentum law uses d_k(h^{-1}) = -h^{-1} (d_k h) h^{-1}, with the
    metric's entry gradients taken from exact polynomial derivatives.
    """
    field_ = _metric_field(gf)
    hinv, _ = _inv3(field_.h(state.q), singular_tol)
    w = _matvec(hinv, state.p)
    qdot = tuple(2.0 * v for v in w)
    pdot = tuple(_quadform(field_.dh(state.q, k), w) for k in range(3))
    return qdot, pdot


def _rk4_step(gf, q, p, step, singular_tol):
    def rhs(qv, pv):
        return ham_rhs(gf, BicharState(qv, pv), singular_tol)

    k1q, k1p = rhs(q, p)
    k2q, k2p = rhs(
        tuple(q[i] + 0.5 * step * k1q[i] for i in range(3)),
        tuple(p[i] + 0.5 * step * k1p[i] for i in range(3)),
    )
    k3q, k3p = rhs(
        tuple(q[i] + 0.5 * step * k2q[i] for i in range(3)),
        tuple(p[i] + 0.5 * step * k2p[i] for i in range(3)),
    )
    k4q, k4p = rhs(
        tuple(q[i] + step * k3q[i] for i in range(3)),
        tuple(p[i] + step * k3p[i] for i in range(3)),
    )
    qn = tuple(q[i] + step / 6.0 * (k1q[i] + 2 * k2q[i] + 2 * k3q[i] + k4q[i])
               for i in range(3))
    pn = tuple(p[i] + step / 6.0 * (k1p[i] + 2 * k2p[i] + 2 * k3p[i] + k4p[i])
               for i in range(3))
    return qn, pn


def _sign_counts(h):
    # Eigenvalue sign counts of a symmetric 3x3 via Descartes' rule on the
    # characteristic polynomial (exact for real-rooted cubics).  Used only
    # to detect signature changes across a step, so near-zero invariants
    # are simply skipped.
    i1 = h[0][0] + h[1][1] + h[2][2]
    i2 = (h[0][0] * h[1][1] - h[0][1] * h[1][0]
          + h[0][0] * h[2][2] - h[0][2] * h[2][0]
          + h[1][1] * h[2][2] - h[1][2] * h[2][1])
    i3 = _det3(h)
    s = max(1.0, max(abs(v) for row in h for v in row))
    thresholds = (1e-12, 1e-12 * s, 1e-12 * s * s, 1e-12 * s * s * s)

    def variations(seq):
        signs = [v for v, t in zip(seq, thresholds) if abs(v) > t]
        return sum(1 for a, b in zip(signs, signs[1:]) if (a > 0) != (b > 0))

    n_pos = variations((1.0, -i1, i2, -i3))
    n_neg = variations((1.0, i1, i2, i3))
    return n_pos, n_neg


def _log_entry(field_, state, h, det, singular_tol):
    hinv, _ = _inv3(h, singular_tol)
    entry = {"H": _quadform(hinv, state.p), "det_h": det}
    if field_.cyclic:
        qdot = [2.0 * v for v in _matvec(hinv, state.p)]
        entry["xdotZ"] = qdot[0] * state.q[2]
        entry["ydot"] = qdot[1]
    return entry


def trace_bicharacteristic(gf: GeneratingFunction, initial: BicharState,
                           step: float = 1e-3, max_steps: int = 1000,
                           stop_tol: float | None = None, box: float = 10.0,
                           singular_tol: float = 1e-12,
                           h_tol: float = 1e-8) -> Trace:
    """Integrate a bicharacteristic with fixed-step classical RK4.

    The initial condition must lie on the null cone (|H| <= 1e-10).  The
    trace stops when |det h| falls below ``stop_tol`` (default: 1e-6 times
    its initial value) at the parabolic boundary, when a coordinate leaves
    the [-box, box] cube, when values stop being finite, or when the step
    budget is exhausted.  Two further guards keep accepted states honest
    near the singular locus, where the right-hand side stiffens and a fixed
    step loses validity: a change of metric signature between consecutive
    steps counts as a boundary hit (type transitions only occur through the
    locus, and a fixed step can jump straight across the thin determinant
    band), and a candidate whose |H| exceeds ``h_tol`` is rejected, ending
    the trace where the null constraint can no longer be held (labeled as
    the boundary when the determinant has already collapsed below half its
    initial size, as divergence otherwise).  Every accepted state therefore
    satisfies |H| <= h_tol.  Each accepted state logs H and det h, plus the
    conserved quantities qdot1*q3 and qdot2 when the metric has the cyclic
    diagonal structure of the canonical fold metric.
    """
    if step <= 0 or max_steps < 0:
        raise ValueError("step must be positive and max_steps non-negative")
    field_ = _metric_field(gf)
    H0 = hamiltonian(gf, initial, singular_tol)
    if abs(H0) > 1e-10:
        raise DomainError(f"initial condition is not null: H = {H0:g}")
    h_init = field_.h(initial.q)
    det0 = _det3(h_init)
    if stop_tol is None:
        stop_tol = 1e-6 * abs(det0)
    counts0 = _sign_counts(h_init)
    states = [initial]
    log = [_log_entry(field_, initial, h_init, det0, singular_tol)]
    termination = Termination.MAX_STEPS
    q, p, s = initial.q, initial.p, initial.s
    for _ in range(max_steps):
        try:
            qn, pn = _rk4_step(gf, q, p, step, singular_tol)
        except MetricSingularError:
            termination = Termination.PARABOLIC_BOUNDARY
            break
        except (OverflowError, ZeroDivisionError):
            termination = Termination.DIVERGED
            break
        if not all(math.isfinite(v) for v in qn + pn):
            termination = Termination.DIVERGED
            break
        if any(abs(v) > box for v in qn):
            termination = Termination.DOMAIN_EXIT
            break
        try:
            hn = field_.h(qn)
            det = _det3(hn)
        except OverflowError:
            termination = Termination.DIVERGED
            break
        if abs(det) < stop_tol or _sign_counts(hn) != counts0:
            termination = Termination.PARABOLIC_BOUNDARY
            break
        state = BicharState(qn, pn, s + step)
        entry = _log_entry(field_, state, hn, det, singular_tol)
        if abs(entry["H"]) > h_tol:
            termination = (Termination.PARABOLIC_BOUNDARY
                           if abs(det) < 0.5 * abs(det0)
                           else Termination.DIVERGED)
            break
        q, p, s = qn, pn, s + step
        states.append(state)
        log.append(entry)
    return Trace(states=states, termination=termination, conserved_log=log)


def eikonal_residual_grad(gf: GeneratingFunction, pt, grad,
                          singular_tol: float = 1e-12) -> float:
    """Residual (grad F)^T h^{-1} (grad F) for a numerically supplied gradient."""
    values = [float(v) for v in _point_values(gf, pt)]
    field_ = _metric_field(gf)
    hinv, _ = _inv3(field_.h(values), singular_tol)
    g = [float(v) for v in grad]
    if len(g) != 3:
        raise ValueError("gradient must have 3 components")
    return _quadform(hinv, g)


def eikonal_residual(gf: GeneratingFunction, F: Poly, pt,
                     singular_tol: float = 1e-12) -> float:
    """Residual of the eikonal equation h^{-1}(dF, dF) = 0 for a polynomial F.

    The gradient is taken exactly and evaluated at the chart point; zero
    residual on an open set means the level sets of F are characteristic.
    """
    if F.variables != gf.chart.coords:
        raise ValueError(
            f"F must be a polynomial over {gf.chart.coords!r}, got {F.variables!r}"
        )
    values = _point_values(gf, pt)
    grad = [float(F.diff(v).eval(values)) for v in gf.chart.coords]
    return eikonal_residual_grad(gf, values, grad, singular_tol)


def _sqrt_exact_or_float(value):
    # Keeps Fractions exact when the radicand is a perfect rational square.
    if isinstance(value, (int, Fraction)):
        fr = Fraction(value)
        if fr < 0:
            raise DomainError(f"negative radicand {fr}")
        n, d = fr.numerator, fr.denominator
        rn, rd = isqrt(n), isqrt(d)
        if rn * rn == n and rd * rd == d:
            return Fraction(rn, rd)
        return math.sqrt(float(fr))
    if value < 0:
        raise DomainError(f"negative radicand {value}")
    return math.sqrt(value)


def analytic_null_geodesic(C1, C2, Z0, Z):
    """Closed-form arc parameter and displacements of the fold-metric null rays.

    For the metric 2(-Z dx^2 + dy^2 - Z dZ^2) with conserved quantities
    xdot*Z = C1 and ydot = C2, the branch with Z increasing along the curve
    satisfies

        s  = g(Z) - g(Z0),   g(Z) = 2*sqrt(C2^2 Z - C1^2)(2 C1^2 + C2^2 Z)/(3 C2^4)
        dx = (2 C1 / C2^2) * (sqrt(C2^2 Z - C1^2) - sqrt(C2^2 Z0 - C1^2))
        dy = C2 * s

    The mirrored branch is (-s, -dx, -dy).  With C1 = 0 and Z0 = 0 this
    specializes to the semicubical cusp law (dy)^2 = (4/9) Z^3.  Results
    stay exact Fractions when the inputs are rational and the square roots
    are rational.
    """
    if C2 == 0:
        raise DomainError("C2 must be nonzero")
    r = C2 * C2 * Z - C1 * C1
    r0 = C2 * C2 * Z0 - C1 * C1
    if r < 0 or r0 < 0:
        raise DomainError("need C2^2*Z >= C1^2 at both endpoints")
    sq = _sqrt_exact_or_float(r)
    sq0 = _sqrt_exact_or_float(r0)
    c2sq = C2 * C2
    g = 2 * sq * (2 * C1 * C1 + c2sq * Z) / (3 * c2sq * c2sq)
    g0 = 2 * sq0 * (2 * C1 * C1 + c2sq * Z0) / (3 * c2sq * c2sq)
    s = g - g0
    dx = 2 * C1 * (sq - sq0) / c2sq
    dy = C2 * s
    return s, dx, dy


def trace_csv_columns(trace: Trace) -> tuple:
    cols = ["s", "q1", "q2", "q3", "p1", "p2", "p3", "H", "det_h"]
    if trace.conserved_log and "xdotZ" in trace.conserved_log[0]:
        cols += ["xdotZ", "ydot"]
    return tuple(cols)


def write_trace_csv(trace: Trace, stream, float_format=None) -> None:
    """One row per accepted step; termination reason on a trailing comment line."""
    from .formatting import format_float

    fmt = float_format or format_float
    cols = trace_csv_columns(trace)
    stream.write(",".join(cols) + "\n")
    for state, entry in zip(trace.states, trace.conserved_log):
        row = [state.s, *state.q, *state.p, entry["H"], entry["det_h"]]
        if "xdotZ" in cols:
            row += [entry["xdotZ"], entry["ydot"]]
        stream.write(",".join(fmt(v) for v in row) + "\n")
    stream.write(f"# termination={trace.termination.value}\n")
