import random
from fractions import Fraction
from itertools import product

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from carnotkit import catalog
from carnotkit.chart import (
    FilteredChart,
    FrameOperator,
    VectorField,
    frame_monomial_apply,
    h_order_of_operator,
    lie_bracket,
    multi_indices,
    validate_lie_filtration,
    vanishing_h_order,
)
from carnotkit.poly import Poly, weighted_valuation
from oracles import from_sympy, sympy_bracket, to_sympy, vanishing_order_by_words

x, y, z = Poly.gens(3)


def test_heisenberg_bracket(heis):
    assert lie_bracket(heis.frame[0], heis.frame[1]) == VectorField.coordinate(3, 2)


def test_bracket_antisymmetry_and_flat(heis, flat3):
    X = heis.frame[1]
    assert lie_bracket(X, X).is_zero()
    for a, b in product(range(3), repeat=2):
        assert lie_bracket(flat3.frame[a], flat3.frame[b]).is_zero()


def test_bracket_against_sympy():
    rng = random.Random(3)
    syms = sympy.symbols("a b c")
    for _ in range(10):
        fields = []
        for _ in range(2):
            fields.append(VectorField(tuple(
                Poly(3, {tuple(rng.randint(0, 2) for _ in range(3)): rng.randint(-3, 3) for _ in range(3)})
                for _ in range(3)
            )))
        X, Y = fields
        expected = sympy_bracket([to_sympy(c, syms) for c in X.components], [to_sympy(c, syms) for c in Y.components], syms)
        assert list(lie_bracket(X, Y).components) == [from_sympy(e, syms) for e in expected]


def test_bracket_dimension_mismatch(heis):
    with pytest.raises(ValueError):
        lie_bracket(heis.frame[0], VectorField.coordinate(2, 0))


def test_valid_charts(heis, engel, flat3):
    for chart in (heis, engel, flat3, catalog.warped_heisenberg()):
        report = validate_lie_filtration(chart)
        assert report.passed, report.witnesses
        assert report.to_json()["pass"] is True


def test_engel_brackets(engel):
    X = engel.frame
    assert lie_bracket(X[0], X[1]) == X[2]
    assert lie_bracket(lie_bracket(X[0], X[1]), X[1]) == X[3]


def test_engel_declared_two_step_passes(engel):
    # with ranks (2, 4) the top weight is the step, so every bracket lands in H^2 = TV
    chart = FilteredChart((2, 4), engel.frame)
    assert chart.weights == (1, 1, 2, 2)
    assert validate_lie_filtration(chart).passed


def test_broken_engel_is_rejected():
    report = validate_lie_filtration(catalog.broken_engel())
    assert not report.passed
    w = report.witnesses[0]
    assert (w["a"], w["b"], w["c"], w["kind"]) == (1, 2, 3, "weight")


def test_non_polynomial_coefficients_reported():
    # frame d/dx, (1 + x) d/dy: the bracket is d/dy = (1 + x)^{-1} X2
    n = 2
    X1 = VectorField.coordinate(n, 0)
    X2 = VectorField((Poly.zero(n), Poly.constant(n, 1) + Poly.var(n, 0)))
    report = validate_lie_filtration(FilteredChart((1, 2), (X1, X2)))
    assert not report.passed
    assert report.witnesses[0]["kind"] == "non-polynomial"


def test_chart_invariants():
    with pytest.raises(ValueError):
        FilteredChart((2, 3), (VectorField.coordinate(3, 0),) * 3)  # singular frame
    with pytest.raises(ValueError):
        FilteredChart((2, 2), catalog.heisenberg().frame)  # last rank is not n
    with pytest.raises(ValueError):
        catalog.heisenberg(normal_vars=[2])  # X2 is not tangent to {z = 0}


def test_frame_monomial_apply(heis):
    assert frame_monomial_apply(heis, (0, 1, 0), z) == x
    assert frame_monomial_apply(heis, (0, 0, 0), z) == z
    assert frame_monomial_apply(heis, (1, 1, 0), z) == Poly.constant(3, 1)


def test_h_order_of_operator(heis):
    assert h_order_of_operator(heis, FrameOperator(heis, {(1, 1, 0): 1})) == 2
    assert h_order_of_operator(heis, FrameOperator.field(heis, 2)) == 2
    assert h_order_of_operator(heis, FrameOperator.field(heis, 0, x * x + y)) == 1
    with pytest.raises(ValueError):
        h_order_of_operator(heis, FrameOperator(heis))


def test_frame_fields_have_their_weight(engel):
    for a, q in enumerate(engel.weights):
        assert h_order_of_operator(engel, FrameOperator.field(engel, a)) == q


def test_vanishing_order_examples(heis):
    assert vanishing_h_order(heis, z, "origin", 2) == 2
    assert vanishing_h_order(heis, Poly.constant(3, 1), "origin", 2) == 0
    with pytest.raises(ValueError):
        vanishing_h_order(heis, z, "origin", 0)


def test_vanishing_order_on_z_plane(heis):
    # brute-force oracle: restrict every word of weight <= 1 applied to z to {z = 0}
    orders = []
    for word in ([], [0], [1], [2]):
        g = z
        for i in reversed(word):
            g = heis.frame[i](g)
        if not g.restrict([2]).is_zero():
            orders.append(sum(heis.weights[i] for i in word))
    assert min(orders) == 1  # X2 z = x does not vanish on {z = 0}
    assert vanishing_h_order(heis, z, "submanifold", 2, normal_vars=[2]) == 1


def test_vanishing_order_on_y_axis():
    chart = catalog.heisenberg(normal_vars=[0, 2])
    assert vanishing_h_order(chart, z, "submanifold") == 2
    assert vanishing_h_order(chart, x, "submanifold") == 1
    assert vanishing_h_order(chart, z * x, "submanifold") == 3


def _random_poly(rng, n, terms=3, deg=3):
    return Poly(n, {tuple(rng.randint(0, deg) for _ in range(n)): Fraction(rng.randint(-4, 4), rng.randint(1, 3))
                    for _ in range(terms)})


@pytest.mark.parametrize("name", ["heisenberg", "engel", "warped-heisenberg"])
def test_vanishing_order_matches_word_oracle(name):
    chart = catalog.model_of(name)
    rng = random.Random(7)
    for _ in range(15):
        f = _random_poly(rng, chart.dim)
        f = f - Poly.constant(chart.dim, f.constant_term())
        v = tuple(Fraction(rng.randint(-2, 2)) for _ in range(chart.dim))
        g = f - Poly.constant(chart.dim, f.evaluate(v))
        cap = chart.step
        assert vanishing_h_order(chart, g, "point", cap, point=v) == vanishing_order_by_words(
            chart.frame, chart.weights, g, v, cap
        )


def test_flat_vanishing_is_total_degree(flat3):
    rng = random.Random(11)
    for _ in range(20):
        f = _random_poly(rng, 3)
        if f:
            expected = min(weighted_valuation(f, (1, 1, 1)), 4)
            assert vanishing_h_order(flat3, f, "origin", 3) == expected


@pytest.mark.parametrize("name", ["heisenberg", "engel"])
def test_vanishing_order_is_multiplicative(name):
    chart = catalog.model_of(name)
    rng = random.Random(5)
    r = chart.step
    for _ in range(15):
        f, g = _random_poly(rng, chart.dim, deg=2), _random_poly(rng, chart.dim, deg=2)
        f = f - Poly.constant(chart.dim, f.constant_term())
        g = g - Poly.constant(chart.dim, g.constant_term())
        of, og = vanishing_h_order(chart, f, "origin", r), vanishing_h_order(chart, g, "origin", r)
        assert vanishing_h_order(chart, f * g, "origin", r) >= min(of + og, r + 1)


@pytest.mark.parametrize("name", ["heisenberg", "engel", "warped-heisenberg"])
def test_operator_composition(name):
    chart = catalog.model_of(name)
    rng = random.Random(2)
    n = chart.dim
    alphas = multi_indices(chart.weights, 2)
    for _ in range(6):
        D1 = FrameOperator(chart, {rng.choice(alphas): _random_poly(rng, n, 2, 2) for _ in range(2)})
        D2 = FrameOperator(chart, {rng.choice(alphas): _random_poly(rng, n, 2, 2) for _ in range(2)})
        D = D1.compose(D2)
        f = _random_poly(rng, n, 4, 4)
        assert D(f) == D1(D2(f))
        if not (D1.is_zero() or D2.is_zero() or D.is_zero()):
            assert h_order_of_operator(chart, D) <= h_order_of_operator(chart, D1) + h_order_of_operator(chart, D2)


def test_chart_json_round_trip(engel):
    marked = catalog.heisenberg(normal_vars=[0, 2])
    for chart in (engel, marked):
        data = chart.to_json()
        back = FilteredChart.from_json(data)
        assert back.ranks == chart.ranks and back.frame == chart.frame
        assert back.normal_vars == chart.normal_vars
    assert marked.to_json()["normal_vars"] == [1, 3]
