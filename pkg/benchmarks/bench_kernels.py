"""Time the compiled and numpy element kernels on the default mesh.

    python benchmarks/bench_kernels.py [--h 25] [--repeat 20]

Prints the median time per call for each kernel and backend, and checks
that both backends return the same numbers.
"""

import argparse
import statistics
import time

import numpy as np

from cavedamage import kernels
from cavedamage.assembly import _elastic_locals, _elastic_pattern
from cavedamage.constitutive import MaterialParams
from cavedamage.mesh import build_mesh


def _median_time(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def cases(h):
    mesh = build_mesh((-1500, 1500, -500, 500), h)
    mat = MaterialParams()
    rng = np.random.default_rng(0)
    nn, ne = mesh.n_nodes, mesh.n_elems
    tris, area, grads = mesh.tris, mesh.area, mesh.grads
    u = rng.normal(size=2 * nn) * 1e-2
    alpha = rng.uniform(0, 1, nn)
    beta = np.clip(alpha + rng.normal(size=nn) * 1e-3, 0, 1)
    v = rng.normal(size=nn)
    const = rng.uniform(0, 1e4, ne)
    coef = rng.uniform(-1e4, 1e4, ne)
    kv, kd = _elastic_locals(mesh, mat)
    _, indices, emap = _elastic_pattern(mesh)
    wa, wb = rng.uniform(0, 1, ne), rng.uniform(0, 1, ne)
    return {
        "element_strains": lambda k: k.element_strains(tris, grads, u),
        "scatter_add": lambda k: k.scatter_add(emap, kv, wa, kd, wb, len(indices)),
        "bulk_value_grad": lambda k: k.bulk_value_grad(tris, area, const, coef, 4, mat.w1, alpha, nn)[1],
        "bulk_curvature": lambda k: k.bulk_curvature(tris, area, coef, 4, mat.w1, alpha, True),
        "bulk_hessp": lambda k: k.bulk_hessp(tris, area, coef, 4, mat.w1, alpha, v, nn),
        "bulk_difference": lambda k: k.bulk_difference(tris, area, coef, 4, mat.w1, alpha, beta),
    }, mesh


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--h", type=float, default=25.0, help="mesh size")
    parser.add_argument("--repeat", type=int, default=20)
    args = parser.parse_args(argv)
    impls = kernels.backends()
    table, mesh = cases(args.h)
    print(f"mesh: {mesh.n_nodes} nodes, {mesh.n_elems} triangles; backends: {', '.join(impls)}")
    print(f"{'kernel':<18}" + "".join(f"{name:>14}" for name in impls) + ("     speedup" if len(impls) > 1 else ""))
    for label, call in table.items():
        outs = {name: np.asarray(call(k)) for name, k in impls.items()}
        ref = outs["numpy"]
        for name, out in outs.items():
            if not np.allclose(out, ref, rtol=1e-12, atol=1e-12 * max(1.0, float(np.max(np.abs(ref))))):
                raise SystemExit(f"{label}: {name} backend disagrees with numpy")
        times = {name: _median_time(lambda k=k: call(k), args.repeat) for name, k in impls.items()}
        row = f"{label:<18}" + "".join(f"{1e3 * t:>12.3f}ms" for t in times.values())
        if "cython" in times:
            row += f"{times['numpy'] / times['cython']:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
