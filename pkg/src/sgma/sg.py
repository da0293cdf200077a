"""Semigeostrophic flow reconstruction from a generating-function solution.

On a nondegenerate branch the geopotential gradient supplies the absolute
momentum components (M, N) and the scaled potential temperature; the
geostrophic wind follows algebraically, and the full velocity solves the
3x3 linear system whose rows are the base-space gradients of M, N and the
potential temperature.  For the canonical fold example the flow reduces to
a purely meridional geostrophic wind.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .errors import DomainError
from .ma_core import GeneratingFunction, SignatureLabel, classify, immersion
from .singular import BranchPoint, FiberOptions, branch_hessian, branch_select_convex, \
    fiber_solve


@dataclass(frozen=True)
class EpsilonChoice:
    """Rossby number and the potential vorticity it implies for a given eps_q.

    Only the product eps_q = epsilon * q_g enters the balance equation, but
    the wind formulas use q_g alone, so the split must be chosen explicitly;
    epsilon defaults to 1 (q_g = eps_q).
    """

    epsilon: Fraction
    q_g: Fraction

    def __post_init__(self):
        eps = self.epsilon if isinstance(self.epsilon, Fraction) else Fraction(str(self.epsilon))
        qg = self.q_g if isinstance(self.q_g, Fraction) else Fraction(str(self.q_g))
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "q_g", qg)
        if eps <= 0:
            raise ValueError("epsilon must be positive")

    @classmethod
    def for_gf(cls, gf: GeneratingFunction, epsilon=1) -> "EpsilonChoice":
        eps = Fraction(str(epsilon))
        return cls(epsilon=eps, q_g=gf.eps_q / eps)


@dataclass(frozen=True)
class SGState:
    """Flow diagnostics at one physical point on one branch.

    (M, N, theta_eps) is the branch geopotential gradient; u, v, w are None
    until reconstructed.  branch_label records the metric type at the
    underlying chart point ('elliptic', 'hyperbolic' or 'degenerate').
    """

    base: tuple
    chart_point: tuple
    P: float
    M: float
    N: float
    theta_eps: float
    u_g: float
    v_g: float
    branch_label: str
    u: float | None = None
    v: float | None = None
    w: float | None = None


def _resolve_branch(gf: GeneratingFunction, bp: BranchPoint, branch) -> int:
    if isinstance(branch, str):
        if branch != "convex":
            raise ValueError(f"branch must be 'convex' or an index, got {branch!r}")
        choice = branch_select_convex(bp, gf)
        if choice.index is None:
            raise DomainError("no convex branch over this base point")
        if choice.ambiguous:
            warnings.warn("multiple convex branches; using the first", stacklevel=3)
        return choice.index
    index = int(branch)
    if not 0 <= index < len(bp.fiber_values):
        raise DomainError(
            f"branch index {index} out of range for a fiber of {len(bp.fiber_values)}"
        )
    return index


def branch_state(gf: GeneratingFunction, base, branch="convex",
                 eps: EpsilonChoice | None = None,
                 opts: FiberOptions | None = None) -> SGState:
    """Geopotential, momenta, and geostrophic wind on one branch over a base point.

    ``branch`` is either "convex" (select via the convexity principle) or an
    explicit fiber index (fiber values ascending).  Raises DomainError when
    the base point lies outside the solution domain (empty fiber) or the
    selected branch is degenerate (caustic point).
    """
    eps = eps or EpsilonChoice.for_gf(gf)
    if gf.eps_q != 1:
        warnings.warn(
            "wind identities are stated for eps_q = 1; "
            f"eps_q = {gf.eps_q} is outside the verified regime",
            stacklevel=2,
        )
    bp = fiber_solve(gf, base, opts)
    if not bp.fiber_values:
        raise DomainError(
            f"base point {tuple(float(v) for v in base)} is outside the solution domain"
        )
    index = _resolve_branch(gf, bp, branch)
    if bp.degenerate_flags and bp.degenerate_flags[index]:
        raise DomainError("selected branch is degenerate (caustic point)")
    chart_pt = bp.fiber_values[index]
    amb = immersion(gf, chart_pt)
    x, y = float(amb.x), float(amb.y)
    M, N, theta_eps = float(amb.X), float(amb.Y), float(amb.Z)
    q_g = float(eps.q_g)
    sig = classify(gf, chart_pt)
    label = ("degenerate" if sig.label is SignatureLabel.PARABOLIC
             else sig.label.value)
    return SGState(
        base=tuple(float(v) for v in bp.base_point),
        chart_point=chart_pt,
        P=bp.P_values[index],
        M=M,
        N=N,
        theta_eps=theta_eps,
        u_g=q_g * (y - N),
        v_g=q_g * (M - x),
        branch_label=label,
    )


def _solve3(rows: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    # Direct 3x3 solve via adjugate and determinant.
    a = rows
    det = (
        a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
        - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
        + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0])
    )
    scale = max(1.0, float(np.max(np.abs(a)))) ** 3
    if abs(det) <= 1e-14 * scale:
        raise DomainError("velocity system is singular (degenerate point)")
    adj = np.array([
        [a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1],
         a[0, 2] * a[2, 1] - a[0, 1] * a[2, 2],
         a[0, 1] * a[1, 2] - a[0, 2] * a[1, 1]],
        [a[1, 2] * a[2, 0] - a[1, 0] * a[2, 2],
         a[0, 0] * a[2, 2] - a[0, 2] * a[2, 0],
         a[0, 2] * a[1, 0] - a[0, 0] * a[1, 2]],
        [a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0],
         a[0, 1] * a[2, 0] - a[0, 0] * a[2, 1],
         a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]],
    ])
    return adj @ rhs / det


def velocity_system(gf: GeneratingFunction, state: SGState,
                    eps: EpsilonChoice | None = None):
    """Rows (grad M, grad N, grad theta) and right-hand side (u_g, v_g, 0)."""
    eps = eps or EpsilonChoice.for_gf(gf)
    hp = branch_hessian(gf, state.chart_point)
    rows = np.vstack([hp[0], hp[1], hp[2] / float(eps.epsilon)])
    rhs = np.array([state.u_g, state.v_g, 0.0])
    return rows, rhs


def velocity_reconstruct(state: SGState, gf: GeneratingFunction,
                         eps: EpsilonChoice | None = None) -> tuple:
    """Velocity (u, v, w) solving the momentum/temperature transport system.

    The system matrix stacks the base-space gradients of M, N and theta
    (rows of the branch Hessian, the third scaled by 1/epsilon); it is
    invertible on nondegenerate branches since the Hessian determinant
    equals eps_q > 0 there.
    """
    rows, rhs = velocity_system(gf, state, eps)
    u, v, w = (float(c) for c in _solve3(rows, rhs))
    return u, v, w


def reconstructed_state(gf: GeneratingFunction, base, branch="convex",
                        eps: EpsilonChoice | None = None,
                        opts: FiberOptions | None = None) -> SGState:
    """branch_state plus velocity_reconstruct in one call."""
    eps = eps or EpsilonChoice.for_gf(gf)
    state = branch_state(gf, base, branch, eps, opts)
    u, v, w = velocity_reconstruct(state, gf, eps)
    return replace(state, u=u, v=v, w=w)


@dataclass(frozen=True)
class PlaneGridSpec:
    """Rectangular (x, z) section at fixed y, row-major (x outer, z inner)."""

    x_lo: float
    x_hi: float
    nx: int
    z_lo: float
    z_hi: float
    nz: int
    y: float = 0.0

    def __post_init__(self):
        if self.nx < 1 or self.nz < 1:
            raise ValueError("grid sizes must be at least 1")
        if self.x_lo > self.x_hi or self.z_lo > self.z_hi:
            raise ValueError("grid bounds must be well ordered")

    def nodes(self):
        for x in np.linspace(self.x_lo, self.x_hi, self.nx):
            for z in np.linspace(self.z_lo, self.z_hi, self.nz):
                yield float(x), float(z)


@dataclass(frozen=True)
class WindSample:
    """One sweep node: in-domain nodes carry a reconstructed state."""

    x: float
    y: float
    z: float
    in_domain: bool
    state: SGState | None


def wind_field_sweep(gf: GeneratingFunction, branch, grid: PlaneGridSpec,
                     eps: EpsilonChoice | None = None,
                     opts: FiberOptions | None = None) -> list:
    """Reconstruct the wind on a plane section, flagging out-of-domain nodes.

    Nodes whose fiber is empty or whose selected branch is degenerate are
    emitted with in_domain False and no state, so the caller still sees
    every grid node in row-major order.
    """
    eps = eps or EpsilonChoice.for_gf(gf)
    samples = []
    with warnings.catch_warnings():
        warnings.simplefilter("once")
        for x, z in grid.nodes():
            base = (x, grid.y, z)
            try:
                state = reconstructed_state(gf, base, branch, eps, opts)
            except DomainError:
                samples.append(WindSample(x, grid.y, z, False, None))
                continue
            samples.append(WindSample(x, grid.y, z, True, state))
    return samples


WIND_CSV_COLUMNS = ("x", "y", "z", "domain_flag", "P", "M", "N", "theta_eps",
                    "u_g", "v_g", "u", "v", "w", "v_mag")


def write_wind_csv(samples: list, stream, float_format=None) -> None:
    """Fixed-column CSV; out-of-domain rows have domain_flag 0 and empty values."""
    from .formatting import format_float

    fmt = float_format or format_float
    stream.write(",".join(WIND_CSV_COLUMNS) + "\n")
    for s in samples:
        head = [fmt(s.x), fmt(s.y), fmt(s.z)]
        if not s.in_domain:
            stream.write(",".join(head + ["0"] + [""] * 10) + "\n")
            continue
        st = s.state
        body = [st.P, st.M, st.N, st.theta_eps, st.u_g, st.v_g,
                st.u, st.v, st.w, abs(st.v)]
        stream.write(",".join(head + ["1"] + [fmt(v) for v in body]) + "\n")
