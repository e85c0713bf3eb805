"""Small library of example charts used by the tests, the CLI and the docs."""

from __future__ import annotations

from fractions import Fraction

from .chart import FilteredChart, VectorField
from .poly import Poly


def _field(n: int, comps: dict[int, Poly | int]) -> VectorField:
    out = [Poly.zero(n) for _ in range(n)]
    for i, c in comps.items():
        out[i] = c if isinstance(c, Poly) else Poly.constant(n, c)
    return VectorField(tuple(out))


def flat(n: int = 2, normal_vars=None) -> FilteredChart:
    """R^n with the coordinate frame and the trivial one-step filtration."""
    frame = tuple(VectorField.coordinate(n, i) for i in range(n))
    names = tuple(f"u{i + 1}" for i in range(n))
    return FilteredChart((n,), frame, None if normal_vars is None else frozenset(normal_vars), names)


def heisenberg(normal_vars=None) -> FilteredChart:
    """X1 = d/dx, X2 = d/dy + x d/dz, X3 = d/dz with ranks (2, 3)."""
    n = 3
    x, _, _ = Poly.gens(n)
    frame = (_field(n, {0: 1}), _field(n, {1: 1, 2: x}), _field(n, {2: 1}))
    return FilteredChart((2, 3), frame, None if normal_vars is None else frozenset(normal_vars), ("x", "y", "z"))


def warped_heisenberg(normal_vars=None) -> FilteredChart:
    """Heisenberg-type frame that is not left invariant: X2 = d/dy + (x + x^2) d/dz."""
    n = 3
    x, _, _ = Poly.gens(n)
    frame = (_field(n, {0: 1}), _field(n, {1: 1, 2: x + x * x}), _field(n, {2: 1}))
    return FilteredChart((2, 3), frame, None if normal_vars is None else frozenset(normal_vars), ("x", "y", "z"))


def _engel_frame() -> tuple[VectorField, ...]:
    n = 4
    x1, _, x3, _ = Poly.gens(n)
    return (
        _field(n, {0: 1}),
        _field(n, {1: 1, 2: x1, 3: x3}),
        _field(n, {2: 1}),
        _field(n, {3: 1}),
    )


def engel(normal_vars=None) -> FilteredChart:
    """Engel structure on R^4 with ranks (2, 3, 4)."""
    return FilteredChart(
        (2, 3, 4), _engel_frame(), None if normal_vars is None else frozenset(normal_vars), ("x1", "x2", "x3", "x4")
    )


def broken_engel() -> FilteredChart:
    """The Engel frame with X3 wrongly placed in H^2: ranks (2, 2, 4).

    The chart parses, but [X3, X2] = -X4 has weight 3 while the declared
    filtration only allows weight 2 + 1 = 3 for fields of weights 1 and 2,
    and [X1, X2] = X3 of weight 3 exceeds 1 + 1 = 2.
    """
    return FilteredChart((2, 2, 4), _engel_frame(), None, ("x1", "x2", "x3", "x4"))


def model_of(name: str) -> FilteredChart:
    table = {
        "flat": lambda: flat(2),
        "flat3": lambda: flat(3),
        "heisenberg": heisenberg,
        "warped-heisenberg": warped_heisenberg,
        "engel": engel,
        "broken-engel": broken_engel,
    }
    try:
        return table[name]()
    except KeyError:
        raise KeyError(f"unknown example chart {name!r}; choose from {sorted(table)}") from None


def data_path(kind: str, name: str):
    """Path of a shipped chart (``kind="charts"``) or schema (``kind="schemas"``) file."""
    from importlib.resources import files

    return files("carnotkit") / "data" / kind / f"{name}.json"


def example_documents() -> dict[str, dict]:
    """The chart files shipped under ``data/charts``, keyed by file stem."""
    from .coords import model_euler_field
    from .groupoid import doubled_chart
    from .serialize import chart_document

    docs = {}
    docs["flat"] = chart_document(flat(2), description="R^2 with the coordinate frame; one-step filtration")
    f = flat(2, normal_vars=[0, 1])
    docs["flat-point"] = chart_document(
        f,
        fields={"classical": model_euler_field(f.weights, f.normal)},
        description="R^2 with the origin marked; 'classical' is the Euler field u1 d/du1 + u2 d/du2",
    )
    docs["heisenberg"] = chart_document(heisenberg(), description="Heisenberg frame X1 = d/dx, X2 = d/dy + x d/dz, X3 = d/dz")
    hp = heisenberg(normal_vars=[0, 1, 2])
    model = model_euler_field(hp.weights, hp.normal)
    z = Poly.var(3, 2)
    x, y = Poly.var(3, 0), Poly.var(3, 1)
    docs["heisenberg-point"] = chart_document(
        hp,
        functions={"carnot_z": z - (x * y).scale(Fraction(1, 2))},
        fields={
            "perturbed": VectorField((model.components[0], model.components[1], model.components[2] + z * z)),
            "doubled": VectorField(tuple(c.scale(2) for c in model.components)),
        },
        description="Heisenberg chart with the origin marked",
    )
    docs["heisenberg-line"] = chart_document(
        heisenberg(normal_vars=[0, 2]), description="Heisenberg chart with the y-axis {x = z = 0} marked"
    )
    docs["warped-heisenberg"] = chart_document(
        warped_heisenberg(), description="Heisenberg-type frame X2 = d/dy + (x + x^2) d/dz, not left invariant"
    )
    docs["engel"] = chart_document(engel(), description="Engel frame, ranks (2, 3, 4)")
    docs["broken-engel"] = chart_document(broken_engel(), description="Engel frame with an inconsistent rank sequence")
    docs["heisenberg-doubled"] = chart_document(
        doubled_chart(heisenberg()).chart,
        description="doubled Heisenberg chart in adapted coordinates, diagonal marked",
    )
    return docs


def main(argv=None) -> None:
    import sys
    from pathlib import Path

    from .serialize import dumps

    target = Path(argv[0] if argv else (sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent / "data" / "charts"))
    target.mkdir(parents=True, exist_ok=True)
    for stem, doc in example_documents().items():
        (target / f"{stem}.json").write_text(dumps(doc) + "\n")


if __name__ == "__main__":
    main()
