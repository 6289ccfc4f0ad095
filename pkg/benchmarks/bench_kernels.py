"""Compare the compiled and pure-numpy block kernels on a realistic problem.

    python benchmarks/bench_kernels.py [--n 32] [--k 2] [--repeat 5]

Times gather, scatter, gram and the nonlinearity on the three energy terms
of the p = 3 problem, then one full residual + Jacobian evaluation per
backend.  Results are also checked for agreement.
"""
import argparse
import importlib
import time

import numpy as np

from pbiharmonic import _kernels_py
from pbiharmonic import kernels as active
from pbiharmonic.manufactured import ExactSolution
from pbiharmonic.mesh import build_structured
from pbiharmonic.solver import PBiharmonicProblem, SolveConfig
from pbiharmonic.space import build_space


def _best(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--p", type=float, default=3.0)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    try:
        compiled = importlib.import_module("pbiharmonic._kernels")
    except ImportError:
        print("compiled kernels not built; only the python backend is available")
        compiled = None
    backends = {"python": _kernels_py}
    if compiled is not None:
        backends["cython"] = compiled

    space = build_space(build_structured(args.n), args.k)
    cfg = SolveConfig(p=args.p)
    prob = PBiharmonicProblem(space, ExactSolution().load(space, args.p), cfg)
    rng = np.random.default_rng(0)
    x = rng.standard_normal(prob.n)
    print(f"n={args.n} k={args.k} dofs={prob.n} active backend={active.BACKEND}")

    results = {}
    for name, mod in backends.items():
        row = {}
        for label, t in zip(("volume", "grad jump", "value jump"), prob.terms):
            tg, vals = _best(lambda: mod.gather(t.M, t.dofs, x), args.repeat)
            tn, (F, f, df) = _best(lambda: mod.nonlinearity(vals, args.p, 1e-6), args.repeat)
            y = np.ascontiguousarray(t.weights * f)
            c = np.ascontiguousarray(t.weights * df)
            ts, r = _best(lambda: mod.scatter(t.M, t.dofs, y, prob.n), args.repeat)
            tj, G = _best(lambda: mod.gram(t.M, c), args.repeat)
            row[label] = (tg, tn, ts, tj, vals, r, G)
        results[name] = row

    print(f"{'term':<12}{'kernel':<14}" + "".join(f"{b:>12}" for b in backends)
          + ("   speedup" if compiled is not None else ""))
    for label in ("volume", "grad jump", "value jump"):
        for i, kern in enumerate(("gather", "nonlinearity", "scatter", "gram")):
            times = [results[b][label][i] for b in backends]
            line = f"{label:<12}{kern:<14}" + "".join(f"{1e3 * s:>10.2f}ms" for s in times)
            if compiled is not None:
                line += f"   {times[0] / times[1]:6.1f}x"
            print(line)
        if compiled is not None:
            a, b = results["python"][label], results["cython"][label]
            for j, kern in zip((4, 5, 6), ("gather", "scatter", "gram")):
                err = np.abs(a[j] - b[j]).max() / max(np.abs(a[j]).max(), 1e-300)
                assert err < 1e-12, f"{label} {kern} backends disagree ({err:.2e})"

    # end-to-end residual + Jacobian with each backend swapped in
    for name, mod in backends.items():
        saved = (active.gather, active.scatter, active.gram, active.nonlinearity)
        active.gather, active.scatter, active.gram, active.nonlinearity = (
            mod.gather, mod.scatter, mod.gram, mod.nonlinearity)
        try:
            t, _ = _best(lambda: (prob.residual(x, args.p, 1e-6), prob.jacobian(x, args.p, 1e-6)),
                         args.repeat)
        finally:
            active.gather, active.scatter, active.gram, active.nonlinearity = saved
        print(f"residual + jacobian [{name}]: {1e3 * t:.1f} ms")


if __name__ == "__main__":
    main()
