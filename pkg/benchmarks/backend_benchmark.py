"""Compare the numba kernels against the pure-numpy fallback.

Run:  python3 benchmarks/backend_benchmark.py [--rows 20000] [--repeats 5]

Times the two hot kernels in isolation and one full forest training run
per backend, then prints the ratio. Both backends return bit-identical
results; the benchmark asserts that while it measures.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from opttriage.features import FeatureSchema
from opttriage.forest import ForestParams, dumps_model, train
from opttriage.forest.kernels import available_backends, route_tree, split_scan, warm_up
from opttriage.forest.model import build_tree


def _best_of(repeats: int, fn) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_split_scan(rows: int, repeats: int) -> dict[str, float]:
    rng = np.random.default_rng(1)
    values = rng.uniform(0.0, 1.0, size=rows)
    labels = rng.integers(0, 2, size=rows).astype(np.int8)
    out = {}
    reference = None
    for backend in available_backends():
        result = split_scan(values, labels, 2, backend)
        if reference is None:
            reference = result
        else:
            assert tuple(map(float, result)) == tuple(map(float, reference))
        out[backend] = _best_of(repeats, lambda b=backend: split_scan(values, labels, 2, b))
    return out


def bench_route(rows: int, repeats: int) -> dict[str, float]:
    rng = np.random.default_rng(2)
    width = 16
    x = rng.uniform(0.0, 1.0, size=(2000, width))
    y = (x[:, 3] + 0.3 * rng.uniform(size=2000) > 0.6).astype(np.int8)
    tree, _ = build_tree(x, y, ForestParams().resolved(width), np.random.default_rng(0))
    probes = rng.uniform(0.0, 1.0, size=(rows, width))
    args = (tree.feature, tree.threshold, tree.left, tree.right, tree.label, probes)
    reference = None
    out = {}
    for backend in available_backends():
        result = route_tree(*args, backend)
        if reference is None:
            reference = result
        else:
            assert np.array_equal(result, reference)
        out[backend] = _best_of(repeats, lambda b=backend: route_tree(*args, b))
    return out


def bench_training(rows: int, repeats: int) -> dict[str, float]:
    rng = np.random.default_rng(3)
    width = 16
    x = rng.uniform(0.0, 1.0, size=(min(rows, 4000), width))
    y = ((x[:, 1] > 0.5) ^ (x[:, 7] > 0.4)).astype(np.int8)
    schema = FeatureSchema((width - 10) // 2)
    params = ForestParams(n_trees=25, rng_seed=9)
    reference = None
    out = {}
    for backend in available_backends():
        model = train(x, y, schema, params, backend=backend)
        blob = dumps_model(model)
        if reference is None:
            reference = blob
        else:
            assert blob == reference, "backends must train identical models"
        out[backend] = _best_of(
            repeats, lambda b=backend: train(x, y, schema, params, backend=b)
        )
    return out


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=20000)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    if "numba" in backends:
        warm_up()

    sections = [
        ("split_scan", bench_split_scan(args.rows, args.repeats)),
        ("route_tree", bench_route(args.rows, args.repeats)),
        ("train 25 trees", bench_training(args.rows, args.repeats)),
    ]
    print(f"{'kernel':<16}" + "".join(f"{b:>12}" for b in backends) + f"{'numpy/numba':>14}")
    for name, times in sections:
        row = f"{name:<16}" + "".join(f"{times[b] * 1e3:>10.2f}ms" for b in backends)
        if len(backends) == 2:
            row += f"{times['numpy'] / times['numba']:>13.2f}x"
        print(row)


if __name__ == "__main__":
    main()
