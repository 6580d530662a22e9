"""Time the numba and pure-numpy kernel paths on a training-sized objective.

    python3 benchmarks/bench_kernels.py [--points 2150] [--repeats 20]

Reports the median wall time of the activation jets, the residual and its
vector-Jacobian product, and one full loss-and-gradient evaluation, once per
path, and checks that both paths agree.
"""

import argparse
import statistics
import time

import numpy as np

from rarpinn import kernels
from rarpinn._accel import HAVE_NUMBA, use_numba
from rarpinn.net import NetworkShape, init_params, jet_forward
from rarpinn.oracle import OneSolitonSpec, as_solution
from rarpinn.sampling import Domain
from rarpinn.training import ForwardExperiment, build_datasets, forward_loss


def median_time(fn, repeats):
    fn()  # warm-up (and JIT compile)
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def cases(n_points):
    rng = np.random.default_rng(0)
    Z = rng.normal(size=(4, n_points, 32))
    A = kernels.jet_activation_forward("tanh", Z)
    GA = rng.normal(size=Z.shape)
    Y = rng.normal(size=(4, n_points, 4))
    GF = rng.normal(size=(n_points, 4))
    coef = np.array([1.0, 1.0, 1.0, 0.0])
    spec = OneSolitonSpec()
    exp = ForwardExperiment(as_solution(spec), spec.coeffs, Domain(-10, 10, -2, 2), n0=50, nb=50, nf=n_points - 150)
    data = build_datasets(exp)
    obj = forward_loss(exp.shape(), data, spec.coeffs)
    params = init_params(exp.shape(), 1)
    return {
        "tanh jet forward": lambda: kernels.jet_activation_forward("tanh", Z),
        "tanh jet backward": lambda: kernels.jet_activation_backward("tanh", Z, A, GA),
        "residual": lambda: kernels.residual_forward(Y, (1.0, 1.0), (2.0, 2.0), coef),
        "residual vjp": lambda: kernels.residual_vjp(Y, (1.0, 1.0), (2.0, 2.0), coef, GF),
        "loss + gradient (6x32)": lambda: obj(params),
    }, (params, exp.shape(), data, obj)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--points", type=int, default=2150)
    p.add_argument("--repeats", type=int, default=20)
    args = p.parse_args()

    paths = ["numba", "numpy"] if HAVE_NUMBA else ["numpy"]
    table, outputs = {}, {}
    for path in paths:
        use_numba(path == "numba")
        fns, (params, shape, data, obj) = cases(args.points)
        for name, fn in fns.items():
            table.setdefault(name, {})[path] = median_time(fn, args.repeats)
        outputs[path] = (obj(params)[1], jet_forward(params, shape, data.xf)[0])

    width = max(map(len, table))
    print(f"{'kernel':<{width}}  " + "  ".join(f"{p:>10}" for p in paths) + ("    speedup" if len(paths) == 2 else ""))
    for name, row in table.items():
        cells = "  ".join(f"{row[p] * 1e3:8.3f}ms" for p in paths)
        extra = f"  {row['numpy'] / row['numba']:8.2f}x" if len(paths) == 2 else ""
        print(f"{name:<{width}}  {cells}{extra}")
    if len(paths) == 2:
        g_diff = np.max(np.abs(outputs["numba"][0] - outputs["numpy"][0]))
        y_diff = np.max(np.abs(outputs["numba"][1] - outputs["numpy"][1]))
        print(f"max |difference| between paths: gradient {g_diff:.2e}, jets {y_diff:.2e}")


if __name__ == "__main__":
    main()
