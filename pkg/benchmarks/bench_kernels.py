"""Compare the compiled and pure-Python RK4 kernels on polynomial systems.

    python3 benchmarks/bench_kernels.py [--steps N] [--repeat R]
"""

import argparse
from fractions import Fraction
import random
import time

import numpy as np

from carnotkit import _kernels_py, catalog, kernels
from carnotkit.coords import model_euler_field
from carnotkit.deform import t_field
from carnotkit.poly import Poly


def heisenberg_system():
    chart = catalog.heisenberg(normal_vars=[0, 1, 2])
    z = Poly.var(3, 2)
    model = model_euler_field(chart.weights, chart.normal)
    E = type(model)((model.components[0], model.components[1], model.components[2] + z * z))
    tf = t_field(chart, E)
    return "heisenberg T-field", tf.packed(), np.array([0.0, 0.1, -0.2, 0.5])


def random_system(nvars=6, terms=40, degree=4, seed=1):
    rng = random.Random(seed)
    polys = []
    for _ in range(nvars):
        data = {}
        for _ in range(terms):
            exps = [0] * nvars
            for _ in range(rng.randint(0, degree)):
                exps[rng.randrange(nvars)] += 1
            data[tuple(exps)] = Fraction(rng.randint(-10, 10), 100)
        polys.append(Poly(nvars, data))
    return f"random {nvars} vars x {terms} terms", kernels.PackedSystem.pack(polys), np.full(nvars, 0.1)


def timed(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=2000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if kernels.BACKEND != "compiled":
        print("compiled kernels are not built; only the Python timings are meaningful")
    print(f"{'system':34s} {'python [s]':>11s} {'compiled [s]':>13s} {'speedup':>8s} {'max diff':>10s}")
    for name, system, x0 in (heisenberg_system(), random_system()):
        h = 1.0 / args.steps
        tp, (xp, _, _) = timed(lambda: kernels.rk4(system, x0, h, args.steps, impl=_kernels_py), args.repeat)
        tc, (xc, _, _) = timed(lambda: kernels.rk4(system, x0, h, args.steps), args.repeat)
        diff = float(np.max(np.abs(xp - xc)))
        print(f"{name:34s} {tp:11.4f} {tc:13.5f} {tp / tc:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
