import math
from fractions import Fraction

import numpy as np
import pytest
import sympy

from carnotkit import catalog
from carnotkit.chart import VectorField
from carnotkit.coords import model_euler_field
from carnotkit.deform import (
    DeformPoint,
    DomainExit,
    ReesElement,
    euler_like_check,
    integrate_tube,
    lift,
    rees_evaluate,
    rees_symbol,
    t_field,
    t_field_relations,
    unzoom,
    verify_tube,
    zoom,
)
from carnotkit.poly import Poly
from carnotkit.serialize import ChartFile
from oracles import from_sympy, to_sympy

x, y, z = Poly.gens(3)


@pytest.fixture(scope="module")
def point_file():
    return ChartFile.load(catalog.data_path("charts", "heisenberg-point"))


@pytest.fixture(scope="module")
def point(point_file):
    return point_file.chart


def model(chart):
    return model_euler_field(chart.weights, chart.normal)


def test_zoom_round_trip(point):
    p = zoom(point, Fraction(1, 2), (1, 2, 3))
    assert p.zt == (2, 4, 12)
    assert unzoom(point, p) == [1, 2, 3]
    with pytest.raises(ValueError):
        zoom(point, 0, (1, 2, 3))


def test_lift(point):
    lam, X, Y, Z = Poly.gens(4)
    assert lift(point, z - x * y) == lam**2 * (Z - X * Y)


def test_rees_t_times_z(point):
    # t^{-2} z is in the Rees algebra at the origin because z has H-order 2 there
    f = ReesElement(point, {2: z})
    lam, X, Y, Z = Poly.gens(4)
    assert rees_symbol(f) == Z
    assert rees_symbol(ReesElement.t(point) * f) == lam * Z
    assert rees_evaluate(f, DeformPoint(0, (), (1, 2, 3))) == 3


def test_rees_membership(point):
    with pytest.raises(ValueError):
        ReesElement(point, {3: z})  # z only has H-order 2
    prod = ReesElement(point, {1: x}) * ReesElement(point, {1: y})
    assert rees_symbol(prod) == rees_symbol(ReesElement(point, {2: x * y}))


def test_rees_on_y_axis():
    line = catalog.heisenberg(normal_vars=[0, 2])
    f = ReesElement(line, {3: x * z})
    lam, X, Y, Z = Poly.gens(4)
    assert rees_symbol(f) == X * Z
    assert rees_symbol(ReesElement.function(line, y)) == Y


def test_rees_symbol_is_multiplicative(point):
    f = ReesElement(point, {1: x, 0: y * y})
    g = ReesElement(point, {2: z, -1: x})
    assert rees_symbol(f * g) == rees_symbol(f) * rees_symbol(g)
    assert rees_symbol(f + g) == rees_symbol(f) + rees_symbol(g)


def test_euler_like_examples(point, point_file):
    assert euler_like_check(point, model(point)).passed
    assert euler_like_check(point, point_file.fields["perturbed"]).passed
    report = euler_like_check(point, point_file.fields["doubled"])
    assert not report.passed
    first = report.witnesses[0]
    assert (first["q"], first["generator"]) == (1, "x")


def test_euler_like_flat_classical():
    cf = ChartFile.load(catalog.data_path("charts", "flat-point"))
    assert euler_like_check(cf.chart, cf.fields["classical"]).passed


def test_euler_like_on_line():
    line = catalog.heisenberg(normal_vars=[0, 2])
    assert euler_like_check(line, model(line)).passed
    # y d/dz sends z to y, which does not even vanish on M
    bad = model(line) + VectorField((Poly.zero(3), Poly.zero(3), y))
    assert not euler_like_check(line, bad).passed
    good = model(line) + VectorField((x * x, Poly.zero(3), x * z))
    assert euler_like_check(line, good).passed


def _sympy_t_field(chart, E):
    """Pull back lam^{-1} E + d/dlam through (lam, zt) -> (lam, lam^q zt) with sympy."""
    n, q = chart.dim, chart.weights
    normal = set(chart.normal)
    lam = sympy.Symbol("lam")
    u = sympy.symbols(f"u0:{n}")
    phi = {u[i]: lam ** q[i] * u[i] if i in normal else u[i] for i in range(n)}
    out = [sympy.Integer(1)]
    for i in range(n):
        Ei = to_sympy(E.components[i], u).subs(phi, simultaneous=True)
        if i in normal:
            expr = (Ei - q[i] * lam ** q[i] * u[i]) / lam ** (q[i] + 1)
        else:
            expr = Ei / lam
        out.append(sympy.cancel(sympy.expand(expr)))
    return [from_sympy(e, (lam,) + u) for e in out]


@pytest.mark.parametrize("field", ["model", "perturbed"])
def test_t_field_against_sympy(point, point_file, field):
    E = model(point) if field == "model" else point_file.fields[field]
    tf = t_field(point, E)
    assert list(tf.T.components) == _sympy_t_field(point, E)
    assert all(t_field_relations(tf).values())


def test_t_field_on_line():
    line = catalog.heisenberg(normal_vars=[0, 2])
    E = model(line) + VectorField((x * x, Poly.zero(3), x * z))
    tf = t_field(line, E)
    assert list(tf.T.components) == _sympy_t_field(line, E)
    assert all(t_field_relations(tf).values())
    assert tf.format() == ["1", "x~^2", "0", "x~*z~"]


def test_t_field_refuses_non_euler(point, point_file):
    with pytest.raises(ValueError, match="not Euler-like"):
        t_field(point, point_file.fields["doubled"])


def _exact_perturbed(w):
    # z' = 2 z + z^2 is linearised by z = w / (1 - w / 2)
    return w / (1 - w / 2)


def test_tube_endpoint_exact(point, point_file):
    res = integrate_tube(point, point_file.fields["perturbed"], DeformPoint(0, (), (0, 0, 1)), steps=200)
    assert res.endpoint.lam == 1.0
    assert abs(res.manifold_point[2] - 2.0) < 1e-9
    assert res.error_estimate < 1e-8


@pytest.mark.parametrize("w", [-0.8, -0.25, 0.3, 0.9])
def test_tube_matches_closed_form(point, point_file, w):
    res = integrate_tube(point, point_file.fields["perturbed"], DeformPoint(0, (), (0.2, -0.1, w)), steps=200)
    assert res.manifold_point[0] == pytest.approx(0.2, abs=1e-12)
    assert res.manifold_point[2] == pytest.approx(_exact_perturbed(w), abs=1e-9)


def test_tube_self_convergence(point, point_file):
    start = DeformPoint(0, (), (0.1, 0.2, 0.7))
    coarse = integrate_tube(point, point_file.fields["perturbed"], start, steps=20, self_check=False)
    fine = integrate_tube(point, point_file.fields["perturbed"], start, steps=200, self_check=False)
    err = abs(coarse.manifold_point[2] - fine.manifold_point[2])
    # fourth order: a tenfold step reduction shrinks the error by about 10^4
    exact = _exact_perturbed(0.7)
    assert abs(fine.manifold_point[2] - exact) < err * 1e-3


def test_tube_against_scipy(point, point_file):
    integrate = pytest.importorskip("scipy.integrate")
    tf = t_field(point, point_file.fields["perturbed"])
    comps = [to_sympy(c, sympy.symbols("l a b c")) for c in tf.T.components]
    f = sympy.lambdify([sympy.symbols("l a b c")], comps)
    sol = integrate.solve_ivp(lambda s, u: f(u), (0, 1), [0, 0.1, 0.2, 0.6], rtol=1e-12, atol=1e-12)
    res = integrate_tube(point, tf, DeformPoint(0, (), (0.1, 0.2, 0.6)))
    assert res.endpoint.zt[2] == pytest.approx(sol.y[3, -1], abs=1e-9)


def test_rescale_mode_agrees(point, point_file):
    E = point_file.fields["perturbed"]
    start = DeformPoint(0, (), (0, 0, 1))
    plain = integrate_tube(point, E, start, steps=200)
    scaled = integrate_tube(point, E, start, steps=200, rescale=0.5)
    assert scaled.manifold_point[2] == pytest.approx(plain.manifold_point[2], abs=1e-9)
    with pytest.raises(ValueError):
        integrate_tube(point, E, start, rescale=-1)


def test_domain_exit(point, point_file):
    # the exact solution blows up at w = 2
    with pytest.raises(DomainExit):
        integrate_tube(point, point_file.fields["perturbed"], DeformPoint(0, (), (0, 0, 1.9)), steps=100, bounds=10.0)


def test_start_must_be_on_zero_fibre(point):
    with pytest.raises(ValueError):
        integrate_tube(point, model(point), DeformPoint(1, (), (0, 0, 0)))


def test_model_tube_is_identity(point):
    res = integrate_tube(point, model(point), DeformPoint(0, (), (0.3, -0.2, 0.5)))
    assert np.allclose(res.manifold_point, [0.3, -0.2, 0.5], atol=1e-14)


def test_verify_tube(point, point_file):
    report = verify_tube(point, point_file.fields["perturbed"], samples=8)
    assert report.passed, report.witnesses
    assert report.details["normal_differential_residual"] < 1e-6
    assert report.details["scaling_residual"] < 1e-6
    assert all(report.details["relations"].values())


def test_verify_tube_on_line():
    line = catalog.heisenberg(normal_vars=[0, 2])
    E = model(line) + VectorField((x * x, Poly.zero(3), x * z))
    report = verify_tube(line, E, samples=8)
    assert report.passed, report.witnesses


def test_scaling_relation_closed_form():
    # phi_s(w) = w s^2 / (1 - w s^2 / 2) for the z block, so phi_{e^t s}(w) = phi_s(e^{2t} w)
    for s, t, w in [(0.5, -0.3, 0.8), (1.0, -0.1, -0.4)]:
        lhs = _exact_perturbed(w * (math.exp(t) * s) ** 2)
        rhs = _exact_perturbed(w * math.exp(2 * t) * s**2)
        assert lhs == pytest.approx(rhs, abs=1e-15)
