import random
from fractions import Fraction

import pytest

from carnotkit import catalog
from carnotkit.chart import FilteredChart, VectorField
from carnotkit.coords import (
    adapted_coordinates,
    carnot_repair,
    check_adapted,
    check_privileged,
    coordinates_are_adapted,
    is_carnot,
    model_euler_field,
    privileged_coordinates,
)
from carnotkit.poly import Poly
from oracles import vanishing_order_by_words

x, y, z = Poly.gens(3)


def skewed_heisenberg():
    """Heisenberg frame with X3 = d/dz + d/dx, so the chart's z is no longer adapted at 0."""
    frame = (VectorField.coordinate(3, 0), VectorField((Poly.zero(3), Poly.constant(3, 1), x)),
             VectorField((Poly.constant(3, 1), Poly.zero(3), Poly.constant(3, 1))))
    return FilteredChart((2, 3), frame, frozenset({0, 1, 2}))


def test_known_privileged_coordinates(heis, engel, flat3):
    assert privileged_coordinates(flat3) == list(Poly.gens(3))
    assert privileged_coordinates(heis) == [x, y, z - x * y]
    x1, x2, x3, x4 = Poly.gens(4)
    assert privileged_coordinates(engel) == [x1, x2, x3 - x1 * x2, x4 - (x1 * x2 * x2).scale(Fraction(1, 2))]


def _word_oracle(chart, v, coords):
    for b, xb in enumerate(coords):
        assert vanishing_order_by_words(chart.frame, chart.weights, xb, v, chart.step) == chart.weights[b]
        for a, X in enumerate(chart.frame):
            assert X(xb).evaluate(v) == int(a == b)


@pytest.mark.parametrize("name", ["heisenberg", "engel", "warped-heisenberg"])
def test_privileged_at_random_points(name):
    chart = catalog.model_of(name)
    rng = random.Random(12)
    for _ in range(4):
        v = tuple(Fraction(rng.randint(-3, 3), rng.randint(1, 2)) for _ in range(chart.dim))
        coords = privileged_coordinates(chart, v)
        assert check_privileged(chart, v, coords) == []
        _word_oracle(chart, v, coords)


def test_privileged_away_from_origin(heis):
    v = (1, 1, 1)
    coords = privileged_coordinates(heis, v)
    assert coords[2] == z - x * y + x - 1


def test_check_privileged_flags_plain_z(heis):
    problems = check_privileged(heis, None, [x, y, z + x])
    assert any("x3" in p for p in problems)


def test_relabelling_variables(heis):
    # swap the roles of x and y: the frame becomes d/dy, d/dx + y d/dz, d/dz
    swap = [y, x, z]
    frame = (VectorField.coordinate(3, 1), VectorField((Poly.constant(3, 1), Poly.zero(3), y)), VectorField.coordinate(3, 2))
    # reorder so that frame field i still pairs with variable i
    swapped = FilteredChart((2, 3), (frame[1], frame[0], frame[2]))
    got = privileged_coordinates(swapped)
    expected = [p.substitute(swap) for p in privileged_coordinates(heis)]
    assert check_privileged(swapped, None, got) == []
    assert got[0] == expected[1] and got[1] == expected[0]
    # the weight-2 coordinate is only determined modulo the kernel of the dual conditions
    assert Poly.var(3, 2) in (got[2], got[2] + x * y)


def test_adapted_on_y_axis():
    chart = catalog.heisenberg(normal_vars=[0, 2])
    zc = adapted_coordinates(chart)
    assert zc == {0: x, 2: z}
    assert check_adapted(chart, zc) == []
    assert coordinates_are_adapted(chart)


def test_adapted_point_case_matches_privileged(heis):
    point = catalog.heisenberg(normal_vars=[0, 1, 2])
    zc = adapted_coordinates(point)
    assert [zc[i] for i in range(3)] == privileged_coordinates(heis)


def test_adapted_on_engel_axis():
    chart = catalog.engel(normal_vars=[0, 2, 3])
    zc = adapted_coordinates(chart)
    assert check_adapted(chart, zc) == []


def test_adapted_repairs_skewed_chart():
    chart = skewed_heisenberg()
    assert not coordinates_are_adapted(chart)
    zc = adapted_coordinates(chart)
    assert check_adapted(chart, zc) == []
    _word_oracle(chart, chart.origin(), [zc[i] for i in range(3)])


def test_heisenberg_carnot_examples(heis):
    ok, witness = is_carnot(heis, None, [x, y, z])
    assert not ok
    assert witness["index"] == 3 and witness["text"] == "1/2*xi1*xi2"
    assert is_carnot(heis, None, [x, y, z - (x * y).scale(Fraction(1, 2))]) == (True, None)
    # privileged coordinates need not be Carnot
    assert not is_carnot(heis, None, privileged_coordinates(heis))[0]


def test_carnot_repair(heis):
    assert carnot_repair(heis, None, [x, y, z], 2, x * y) == Fraction(-1, 2)
    assert carnot_repair(heis, None, [x, y, z - x * y], 2, x * y) == Fraction(1, 2)
    with pytest.raises(ValueError):
        carnot_repair(heis, None, [x, y, z], 2, x * x)


def test_flat_coordinates_are_carnot(flat3):
    assert is_carnot(flat3, None, list(Poly.gens(3)))[0]
    assert is_carnot(flat3, (1, 2, 3), [g - k for g, k in zip(Poly.gens(3), (1, 2, 3))])[0]


def test_engel_carnot_repair(engel):
    x1, x2, x3, x4 = Poly.gens(4)
    coords = privileged_coordinates(engel)
    c = carnot_repair(engel, None, coords, 2, x1 * x2)
    assert c == Fraction(1, 2)
    coords[2] = coords[2] + (x1 * x2).scale(c)
    ok, witness = is_carnot(engel, None, coords)
    # the weight-3 coordinate needs two cubic corrections, which one multiple cannot supply
    assert not ok and witness["index"] == 4
    assert witness["text"] == "1/2*xi2*xi3 + 1/3*xi1*xi2^2"
    with pytest.raises(ValueError):
        carnot_repair(engel, None, coords, 3, x2 * x3)


def test_model_euler_field():
    E = model_euler_field((1, 1, 2), [0, 2])
    assert E == VectorField((x, Poly.zero(3), z.scale(2)))
    assert model_euler_field((1, 1, 2), []).is_zero()
