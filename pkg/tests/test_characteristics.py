"""Hamiltonian structure, null projection, ray tracing and eikonal residuals."""

import io
import math
import random
from fractions import Fraction

import numpy as np
import pytest

from sgma.characteristics import (
    BicharState,
    Termination,
    analytic_null_geodesic,
    eikonal_residual,
    eikonal_residual_grad,
    ham_rhs,
    hamiltonian,
    null_project,
    trace_bicharacteristic,
    write_trace_csv,
)
from sgma.errors import DomainError, MetricSingularError
from sgma.polyexpr import parse_poly


def _null_state(C1, C2, Z0, x0=0.0, y0=0.0, downhill=False):
    # Momentum for the fold metric 2*diag(-Z, 1, -Z) realizing the conserved
    # quantities xdot*Z = C1, ydot = C2 on the null cone.
    zdot = math.sqrt(C2 * C2 * Z0 - C1 * C1) / Z0
    p = (-C1, C2, -Z0 * zdot)
    if downhill:
        p = tuple(-v for v in p)
    return BicharState((x0, y0, Z0), p)


# -- hamiltonian and null projection ----------------------------------------

def test_hamiltonian_values(fold_gf):
    assert abs(hamiltonian(fold_gf, BicharState((0, 0, 1), (0, 1, 1)))) < 1e-15
    assert abs(hamiltonian(fold_gf, BicharState((0, 0, 1), (1, 0, 0))) + 0.5) < 1e-15


def test_hamiltonian_singular_metric_rejected(fold_gf):
    with pytest.raises(MetricSingularError):
        hamiltonian(fold_gf, BicharState((0, 0, 0), (0, 1, 0)))


def test_hamiltonian_positive_at_elliptic_points(fold_gf):
    # Elliptic metric is definite: the only null momentum is zero.
    rng = random.Random(30)
    for _ in range(25):
        q = (rng.uniform(-2, 2), rng.uniform(-1, 1), rng.uniform(-2.0, -0.1))
        p = tuple(rng.uniform(-2, 2) for _ in range(3))
        if max(abs(v) for v in p) < 1e-3:
            continue
        assert hamiltonian(fold_gf, BicharState(q, p)) > 0


def test_null_project_two_roots(fold_gf):
    sols = null_project(fold_gf, (0, 0, 1), (0, 1), 2)
    assert len(sols) == 2
    assert abs(sols[0][2] + 1) < 1e-12 and abs(sols[1][2] - 1) < 1e-12


def test_null_project_elliptic_empty(fold_gf):
    assert null_project(fold_gf, (0, 0, -1), (0, 1), 2) == []


def test_null_project_trivial(fold_gf):
    assert null_project(fold_gf, (0, 0, 1), (0, 0), 0) == [(0.0, 0.0, 0.0)]


def test_ham_rhs_example(fold_gf):
    qdot, pdot = ham_rhs(fold_gf, BicharState((0, 0, 1), (0, 1, 1)))
    assert np.allclose(qdot, (0, 1, -1))
    assert np.allclose(pdot, (0, 0, -0.5))


def test_ham_rhs_fixed_point(fold_gf):
    qdot, pdot = ham_rhs(fold_gf, BicharState((0.4, 0.2, 1.3), (0, 0, 0)))
    assert qdot == (0, 0, 0) and pdot == (0, 0, 0)


def test_ydot_is_conserved_component(fold_gf):
    # The metric is independent of y, so qdot_2 = p_2 along any trace.
    state = _null_state(0.3, 1.1, 0.9)
    qdot, _ = ham_rhs(fold_gf, state)
    assert abs(qdot[1] - 1.1) < 1e-12


# -- traces -------------------------------------------------------------------

def test_trace_reaches_parabolic_boundary(fold_gf):
    trace = trace_bicharacteristic(fold_gf, BicharState((0, 0, 1), (0, 1, 1)),
                                   step=1e-3, max_steps=5000)
    assert trace.termination is Termination.PARABOLIC_BOUNDARY
    assert 0 < trace.states[-1].q[2] < 0.1  # stops just above Z = 0


def test_trace_fixed_point_runs_out_of_steps(fold_gf):
    trace = trace_bicharacteristic(fold_gf, BicharState((0, 0, 1), (0, 0, 0)),
                                   max_steps=40)
    assert trace.termination is Termination.MAX_STEPS
    assert all(s.q == (0.0, 0.0, 1.0) for s in trace.states)


def test_trace_domain_exit(fold_gf):
    trace = trace_bicharacteristic(fold_gf, _null_state(0.2, 1.0, 1.0),
                                   step=1e-3, max_steps=100000, box=2.0)
    assert trace.termination is Termination.DOMAIN_EXIT


def test_trace_rejects_non_null_start(fold_gf):
    with pytest.raises(DomainError):
        trace_bicharacteristic(fold_gf, BicharState((0, 0, 1), (1, 1, 1)))


def test_trace_h_drift_and_conserved_quantities(fold_gf):
    trace = trace_bicharacteristic(fold_gf, _null_state(0.5, 1.0, 1.0),
                                   step=1e-3, max_steps=1000, box=30.0)
    assert len(trace.states) == 1001
    hs = [e["H"] for e in trace.conserved_log]
    assert max(abs(v) for v in hs) <= 1e-8
    xz = [e["xdotZ"] for e in trace.conserved_log]
    yd = [e["ydot"] for e in trace.conserved_log]
    assert max(abs(v - 0.5) for v in xz) <= 1e-8
    assert max(abs(v - 1.0) for v in yd) <= 1e-8


def test_trace_matches_analytic_oracle(fold_gf):
    C1, C2, Z0 = 0.4, 1.2, 0.7
    x0, y0 = 0.3, -0.1
    trace = trace_bicharacteristic(fold_gf, _null_state(C1, C2, Z0, x0, y0),
                                   step=1e-3, max_steps=800, box=30.0)
    worst = 0.0
    for state in trace.states[1:]:
        s, dx, dy = analytic_null_geodesic(C1, C2, Z0, state.q[2])
        worst = max(worst, abs(state.q[0] - x0 - dx), abs(state.q[1] - y0 - dy),
                    abs(state.s - s))
    assert worst <= 1e-6


def test_trace_euler_lagrange_residual_second_order(fold_gf):
    # The projected curve must satisfy the geodesic equations of the fold
    # metric; finite-difference acceleration residuals shrink at O(step^2).
    def max_residual(step):
        trace = trace_bicharacteristic(fold_gf, _null_state(0.4, 1.0, 1.0),
                                       step=step, max_steps=int(0.4 / step),
                                       box=30.0)
        worst = 0.0
        states = trace.states
        for k in range(1, len(states) - 1, 7):
            qm, q0, qp = states[k - 1].q, states[k].q, states[k + 1].q
            vel = [(qp[i] - qm[i]) / (2 * step) for i in range(3)]
            acc = [(qp[i] - 2 * q0[i] + qm[i]) / step ** 2 for i in range(3)]
            z = q0[2]
            res = (
                abs(acc[0] + vel[0] * vel[2] / z),
                abs(acc[1]),
                abs(acc[2] - (vel[0] ** 2 - vel[2] ** 2) / (2 * z)),
            )
            worst = max(worst, *res)
        return worst

    r1 = max_residual(2e-2)
    r2 = max_residual(1e-2)
    order = math.log2(r1 / r2)
    assert order >= 1.5


def test_trace_csv_format(fold_gf):
    trace = trace_bicharacteristic(fold_gf, BicharState((0, 0, 1), (0, 1, 1)),
                                   step=1e-3, max_steps=3)
    buf = io.StringIO()
    write_trace_csv(trace, buf)
    lines = buf.getvalue().strip().split("\n")
    assert lines[0] == "s,q1,q2,q3,p1,p2,p3,H,det_h,xdotZ,ydot"
    assert lines[-1] == "# termination=max_steps"
    assert len(lines) == 2 + 4  # header + initial + 3 steps + comment


def test_trace_csv_omits_conserved_columns_for_noncyclic_metric(convex_quadratic_gf):
    # The classical-chart metric is a constant multiple of the identity, not
    # the cyclic diagonal structure, so no conserved columns are emitted.
    trace = trace_bicharacteristic(convex_quadratic_gf,
                                   BicharState((0, 0, 0), (0, 0, 0)), max_steps=2)
    buf = io.StringIO()
    write_trace_csv(trace, buf)
    assert buf.getvalue().split("\n")[0] == "s,q1,q2,q3,p1,p2,p3,H,det_h"


# -- eikonal -------------------------------------------------------------------

def test_eikonal_cusp_family_is_characteristic(fold_gf):
    rng = random.Random(31)
    for _ in range(40):
        pt = (rng.uniform(-2, 2), rng.uniform(-1, 1), rng.uniform(0.1, 2.0))
        for sign in (1.0, -1.0):
            grad = (0.0, 1.0, sign * math.sqrt(pt[2]))
            assert abs(eikonal_residual_grad(fold_gf, pt, grad)) <= 1e-12


def test_eikonal_constant_and_x_plane(fold_gf):
    const = parse_poly("7", ("x", "y", "Z"))
    assert eikonal_residual(fold_gf, const, (0, 0, 1)) == 0
    fx = parse_poly("x", ("x", "y", "Z"))
    assert abs(eikonal_residual(fold_gf, fx, (0, 0, 1)) + 0.5) < 1e-15
    for z in np.linspace(0.5, 2.0, 7):
        assert abs(eikonal_residual(fold_gf, fx, (0, 0, float(z)))) >= 0.1


def test_eikonal_requires_chart_variables(fold_gf):
    with pytest.raises(ValueError):
        eikonal_residual(fold_gf, parse_poly("x", ("x",)), (0, 0, 1))


def test_eikonal_singular_point_rejected(fold_gf):
    with pytest.raises(MetricSingularError):
        eikonal_residual_grad(fold_gf, (0, 0, 0), (0, 1, 0))


# -- analytic oracle -------------------------------------------------------------

def test_analytic_geodesic_cusp_values_exact():
    s, dx, dy = analytic_null_geodesic(Fraction(0), Fraction(1), Fraction(0),
                                       Fraction(1))
    assert dy == Fraction(2, 3) and dx == 0
    assert dy * dy == Fraction(4, 9)
    _, dx4, dy4 = analytic_null_geodesic(Fraction(0), Fraction(1), Fraction(0),
                                         Fraction(4))
    assert dy4 * dy4 == Fraction(256, 9) and dx4 == 0


def test_analytic_geodesic_coincident_endpoints():
    s, dx, dy = analytic_null_geodesic(0.5, 1.0, 2.0, 2.0)
    assert s == 0 and dx == 0 and dy == 0


def test_analytic_geodesic_domain_errors():
    with pytest.raises(DomainError):
        analytic_null_geodesic(1.0, 0.0, 1.0, 2.0)
    with pytest.raises(DomainError):
        analytic_null_geodesic(2.0, 1.0, 1.0, 2.0)  # C2^2 Z0 < C1^2


def test_cusp_exponent_three_halves(fold_gf):
    rho = 0.04
    up = _null_state(0.0, 1.0, rho)
    trace_up = trace_bicharacteristic(fold_gf, up, step=1e-4, max_steps=2600,
                                      box=30.0)
    down = BicharState(up.q, tuple(-v for v in up.p))
    trace_down = trace_bicharacteristic(fold_gf, down, step=5e-6, max_steps=1600,
                                        stop_tol=8.0 * (0.05 * rho) ** 2, box=30.0)
    assert trace_down.termination is Termination.PARABOLIC_BOUNDARY
    y_cusp = trace_down.states[-1].q[1]
    zs, dys = [], []
    for state in trace_up.states:
        if 2 * rho <= state.q[2] <= 10 * rho:
            zs.append(math.log(state.q[2]))
            dys.append(math.log(abs(state.q[1] - y_cusp)))
    a = np.vstack([zs, np.ones(len(zs))]).T
    slope = float(np.linalg.lstsq(a, np.array(dys), rcond=None)[0][0])
    assert abs(slope - 1.5) <= 0.015
