import math

import numpy as np
import pytest

from fracdirac.forward import (
    ConvergenceError,
    SolverError,
    char_delta,
    compute_nodal_set,
    find_eigenvalues,
    find_nodes,
    picard_solve,
    solve_phi,
)
from fracdirac.model import Model, ModelError


def sup(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


# -- model ------------------------------------------------------------------

def test_angles_normalized():
    m = Model.build(1.0, 2.0, -2.0)
    assert m.theta == pytest.approx(2.0 - math.pi)
    assert m.beta == pytest.approx(math.pi - 2.0)
    assert Model.build(1.0, math.pi / 2).theta == pytest.approx(math.pi / 2)
    assert Model.build(1.0, -math.pi / 2).theta == pytest.approx(math.pi / 2)


@pytest.mark.parametrize("kwargs, match", [
    (dict(p="sqrt(x - 1)"), "not finite"),
    (dict(p="t"), "only use x"),
    (dict(M12="1/(x - t)"), "M12"),
    (dict(r="1 +"), "r"),
])
def test_invalid_models(kwargs, match):
    with pytest.raises(ModelError, match=match):
        Model.build(1.0, **kwargs)


def test_alpha_one_grid_is_identity():
    g = Model.build(1.0).grid
    assert np.array_equal(g.x[:-1], g.s[:-1])


# -- initial-value solver ----------------------------------------------------

@pytest.mark.parametrize("alpha", [0.3, 0.5, 1.0])
def test_zero_potential_closed_form(alpha):
    m = Model.build(alpha)
    tr = solve_phi(m, 5.0)
    assert sup(tr.phi1.values, np.cos(5 * m.grid.s)) <= 1e-6
    assert sup(tr.phi2.values, np.sin(5 * m.grid.s)) <= 1e-6


def test_initial_condition_exact():
    m = Model.build(0.7, 0.4, 0.0, "sin(x)", "x")
    tr = solve_phi(m, 3.0)
    assert tr.phi1.values[0] == math.cos(0.4)
    assert tr.phi2.values[0] == -math.sin(0.4)


def test_constant_potential_rotation():
    m = Model.build(1.0, 0.3, 0.0, "0.5", "0.5")
    tr = solve_phi(m, 6.0)
    x = m.grid.x
    assert sup(tr.phi1.values, np.cos(5.5 * x - 0.3)) <= 1e-6
    assert sup(tr.phi2.values, np.sin(5.5 * x - 0.3)) <= 1e-6


def test_unitary_when_p_equals_r():
    m = Model.build(0.6, 0.2, 0.0, "sin(3*x) + x", "sin(3*x) + x")
    tr = solve_phi(m, 11.0)
    assert sup(tr.phi1.values**2 + tr.phi2.values**2, 1.0) <= 1e-6


def test_derivatives_satisfy_the_system():
    m = Model.build(1.0, 0.1, 0.0, "sin(x)", "0.3")
    tr = solve_phi(m, 4.0)
    p, r = m.p_samples.values, m.r_samples.values
    assert sup(tr.dphi2.values, (4.0 - p) * tr.phi1.values) <= 1e-12
    assert sup(tr.dphi1.values, (r - 4.0) * tr.phi2.values) <= 1e-12


@pytest.mark.parametrize("kernel", ["0", "0.5*cos(x - t)"])
def test_fourth_order_convergence(kernel):
    """Zero potentials are exact in the rotating frame, so the order is
    measured on a model with variable coefficients."""
    model = Model.build(0.5, 0.2, 0.0, "sin(x)", "0.3*x", M12=kernel, M21=kernel)
    ref = solve_phi(model.with_grid(8193), 7.3).phi1.values
    errs = []
    for n in (129, 257, 513):
        k = (ref.size - 1) // (n - 1)
        errs.append(sup(solve_phi(model.with_grid(n), 7.3).phi1.values, ref[::k]))
    assert errs[0] / errs[1] >= 3.7 and errs[1] / errs[2] >= 3.7


def test_blow_up_reports_index():
    m = Model.build(1.0, 0.0, 0.0, "exp(100*x)", "-exp(100*x)")
    with pytest.raises(SolverError, match="grid index"):
        solve_phi(m, 3.0)


def test_rejects_non_finite_lambda():
    with pytest.raises(ValueError):
        solve_phi(Model.build(1.0), math.inf)


# -- Picard oracle -------------------------------------------------------------

def test_picard_zero_potential_is_exact():
    m = Model.build(0.5, 0.3)
    tr = picard_solve(m, 4.0, 1)
    assert sup(tr.phi1.values, np.cos(4.0 * m.grid.s - 0.3)) <= 1e-13


def test_picard_constant_potential():
    m = Model.build(1.0, 0.2, 0.0, "0.5", "0.5")
    tr = picard_solve(m, 6.0, 20)
    assert sup(tr.phi1.values, np.cos(5.5 * m.grid.x - 0.2)) <= 1e-6


def test_picard_matches_rk4_plain():
    m = Model.build(1.0, 0.0, 0.0, "sin(x)", "0")
    a, b = solve_phi(m, 5.0), picard_solve(m, 5.0, 30)
    assert sup(a.phi1.values, b.phi1.values) <= 1e-6
    assert sup(a.phi2.values, b.phi2.values) <= 1e-6


def test_picard_matches_rk4_kernel():
    m = Model.build(1.0, 0.0, 0.0, M11="0.2", M22="0.2", n_points=8193)
    a, b = solve_phi(m, 4.0), picard_solve(m, 4.0, 20)
    assert sup(a.phi1.values, b.phi1.values) <= 1e-6
    assert sup(a.phi2.values, b.phi2.values) <= 1e-6


def test_picard_reports_non_convergence():
    with pytest.raises(ConvergenceError):
        picard_solve(Model.build(1.0, 0.0, 0.0, "sin(x)"), 5.0, 1)
    with pytest.raises(ValueError):
        picard_solve(Model.build(1.0), 5.0, 0)


# -- characteristic function and eigenvalues ------------------------------------

def test_char_delta_examples():
    assert abs(char_delta(Model.build(1.0), 3.0)) <= 1e-8
    assert abs(char_delta(Model.build(1.0, 0.0, math.pi / 2), 2.5)) <= 1e-8
    m = Model.build(0.5)
    lam = 1.7
    assert char_delta(m, lam) == pytest.approx(math.sin(lam * math.pi**0.5 / 0.5), abs=1e-10)
    m = Model.build(1.0, 0.0, 0.0, "0.3", "0.3")
    for n in (1, 4, 9):
        assert abs(char_delta(m, n + 0.3)) <= 1e-8


@pytest.mark.parametrize("alpha, c, tol", [(1.0, 0.0, 1e-8), (1.0, 0.3, 1e-8), (0.5, 0.0, 1e-7)])
def test_eigenvalue_closed_forms(alpha, c, tol):
    m = Model.build(alpha, 0.0, 0.0, repr(c), repr(c))
    spec = find_eigenvalues(m, 1, 50)
    assert [e.n for e in spec] == list(range(1, 51)) and not spec.failures
    gap = alpha * math.pi ** (1 - alpha)
    assert max(abs(e.lam - (e.n * gap + c)) for e in spec) <= tol


def test_spectrum_invariants():
    m = Model.build(1.0, 0.3, 0.1, "cos(2*x) + sin(x)", "cos(2*x) - sin(x)", M12="0.5")
    spec = find_eigenvalues(m, 1, 30, jobs=2)
    lams = np.array([e.lam for e in spec])
    assert np.all(np.diff(lams) > 0)
    assert all(e.residual <= 1e-9 for e in spec)
    assert spec[7].lam == spec.as_dict()[7]
    with pytest.raises(KeyError):
        spec[31]


def test_parallel_search_identical():
    m = Model.build(0.5, 0.2, 0.0, "sin(x)", "0")
    a = find_eigenvalues(m, 3, 20, jobs=1)
    b = find_eigenvalues(m, 3, 20, jobs=4)
    assert [e.lam for e in a] == [e.lam for e in b]


def test_index_labelling_near_low_n():
    """The first two eigenvalues of a strongly shifted model stay distinct."""
    m = Model.build(1.0, 0.0, 0.0, "cos(2*x) + sin(x)", "cos(2*x) - sin(x)")
    spec = find_eigenvalues(m, 1, 10)
    assert len({round(e.lam, 8) for e in spec}) == 10


# -- nodes ------------------------------------------------------------------------

def test_nodes_zero_potential():
    m = Model.build(1.0)
    xs = find_nodes(m, 5, solve_phi(m, 5.0))
    assert sup(xs, (np.arange(5) + 0.5) * math.pi / 5) <= 1e-8
    m = Model.build(0.5)
    lam = 10 * 0.5 * math.sqrt(math.pi)
    xs = find_nodes(m, 10, solve_phi(m, lam))
    assert sup(xs, ((np.arange(10) + 0.5) * math.sqrt(math.pi) / 10) ** 2) <= 1e-8


def test_nodes_constant_potential():
    m = Model.build(1.0, 0.0, 0.0, "0.3", "0.3")
    xs = find_nodes(m, 10, solve_phi(m, 10.3))
    assert sup(xs, (np.arange(10) + 0.5) * math.pi / 10) <= 1e-8


def test_node_count_and_ordering():
    m = Model.build(1.0, 0.3, 0.1, "cos(2*x) + sin(x)", "cos(2*x) - sin(x)")
    spec = find_eigenvalues(m, 1, 24)
    nodal = compute_nodal_set(m, spec, jobs=2)
    assert nodal.n_min is not None and nodal.n_min <= 5
    for n, xs in nodal.nodes.items():
        assert np.all(np.diff(xs) > 0) and xs[0] > 0 and xs[-1] < math.pi
        if n >= nodal.n_min:
            assert xs.size == n
