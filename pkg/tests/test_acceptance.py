"""Acceptance criteria for the p-biharmonic dG solver.

Each ``criterion_N`` returns ``(passed, detail)``.  The pytest wrappers print
one ``criterion N: PASS|FAIL`` line per criterion and then assert.  Run the
module directly (``python tests/test_acceptance.py``) for the summary alone.
"""
from __future__ import annotations

import functools
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from conftest import random_function  # noqa: E402
from oracles import dense_D  # noqa: E402

from pbiharmonic.analysis import dg_norm, lp_norm  # noqa: E402
from pbiharmonic.cli import RunConfig, run_study  # noqa: E402
from pbiharmonic.hessian import assemble_D  # noqa: E402
from pbiharmonic.manufactured import ExactSolution  # noqa: E402
from pbiharmonic.mesh import build_structured  # noqa: E402
from pbiharmonic.skeleton import check_elementwise_integration  # noqa: E402
from pbiharmonic.solver import PBiharmonicProblem, SolveConfig  # noqa: E402
from pbiharmonic.space import build_space, l2_project  # noqa: E402

EX = ExactSolution()


def _in(x, lo, hi):
    return x is not None and lo <= x <= hi


@functools.lru_cache(maxsize=None)
def _study(p, k, sigma, levels):
    t0 = time.perf_counter()
    recs = run_study(RunConfig(p=p, k=k, sigma=sigma, levels=list(levels)), write=False)
    return recs, time.perf_counter() - t0


def _rates(recs):
    return recs[-1].eoc_u, recs[-1].eoc_D


# -- convergence rates -------------------------------------------------------
def criterion_1():
    recs, secs = _study(2, 2, 10.0, (4, 8, 16, 32))
    eu, ed = _rates(recs)
    ok = _in(eu, 1.75, 2.25) and _in(ed, 0.75, 1.25) and secs <= 120
    return ok, f"eoc_u={eu:.3f} in [1.75,2.25], eoc_D={ed:.3f} in [0.75,1.25], {secs:.1f}s"


def criterion_2():
    recs, secs = _study(2, 3, 10.0, (4, 8, 16))
    eu, ed = _rates(recs)
    ok = _in(eu, 3.6, 4.3) and _in(ed, 1.7, 2.3) and secs <= 180
    return ok, f"eoc_u={eu:.3f} in [3.6,4.3], eoc_D={ed:.3f} in [1.7,2.3], {secs:.1f}s"


def criterion_3():
    recs, secs = _study(3, 2, 10.0, (4, 8, 16))
    eu, ed = _rates(recs)
    ok = _in(eu, 1.75, 2.3) and _in(ed, 1.1, 1.6) and secs <= 300
    return ok, f"eoc_u={eu:.3f} in [1.75,2.3], eoc_D={ed:.3f} in [1.1,1.6], {secs:.1f}s"


def criterion_4():
    recs, secs = _study(4, 2, 10.0, (4, 8, 16))
    _, ed = _rates(recs)
    ok = _in(ed, 0.75, 1.3) and secs <= 300
    return ok, f"eoc_D={ed:.3f} in [0.75,1.3], {secs:.1f}s"


# -- operator identities -----------------------------------------------------
def criterion_5():
    rng = np.random.default_rng(5)
    worst = 0.0
    count = 0
    for n in (1, 2, 4):
        for k in (2, 3):
            space = build_space(build_structured(n), k)
            for _ in range(100):
                phi = random_function(space, rng)
                q = (random_function(space, rng), random_function(space, rng))
                worst = max(worst, check_elementwise_integration(phi, q),
                            check_elementwise_integration(phi, q, tensor=True))
                count += 1
    return worst < 1e-10, f"max relative residual {worst:.2e} over {count} pairs (< 1e-10)"


def criterion_6():
    worst = 0.0
    for n in (1, 2):
        space = build_space(build_structured(n), 2)
        A = assemble_D(space).matrix.toarray()
        worst = max(worst, float(np.abs(A - dense_D(space, "clamped")).max()))
    return worst <= 1e-12, f"max entrywise difference {worst:.2e} (<= 1e-12)"


def criterion_7():
    errs = []
    for n in (8, 16, 32):
        space = build_space(build_structured(n), 2)
        deg = 10
        d = assemble_D(space)(l2_project(EX.u, space, deg))
        pts, _, _ = space.volume_quadrature(deg)
        errs.append(lp_norm(d.at_volume_points(deg) - EX.laplacian(pts[..., 0], pts[..., 1]),
                            2, space, deg))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    return min(ratios) >= 1.7, "ratios " + ", ".join(f"{r:.3f}" for r in ratios) + " (>= 1.7)"


# -- variational structure ---------------------------------------------------
def criterion_8():
    rng = np.random.default_rng(8)
    space = build_space(build_structured(2), 2)
    f = lambda x, y: np.sin(np.pi * x) * (1 + y)
    worst = 0.0
    for p in (2.0, 3.0, 4.0):
        prob = PBiharmonicProblem(space, f, SolveConfig(p=p))
        for _ in range(20):
            v = rng.standard_normal(space.total_dofs)
            w = rng.standard_normal(space.total_dofs)
            t = 1e-5 * np.linalg.norm(v) / np.linalg.norm(w)
            fd = (prob.energy(v + t * w, p) - prob.energy(v - t * w, p)) / (2 * t)
            an = float(prob.residual(v, p) @ w)
            worst = max(worst, abs(fd - an) / abs(an))
    return worst <= 1e-5, f"max relative difference {worst:.2e} (<= 1e-5)"


def criterion_9():
    rng = np.random.default_rng(9)
    space = build_space(build_structured(2), 2)
    worst = 0.0
    for p in (2.0, 3.0):
        prob = PBiharmonicProblem(space, None, SolveConfig(p=p))
        v = rng.standard_normal(space.total_dofs)
        J = prob.jacobian(v, p)
        for _ in range(20):
            w = rng.standard_normal(space.total_dofs)
            t = 1e-6 * np.linalg.norm(v) / np.linalg.norm(w)
            fd = (prob.residual(v + t * w, p) - prob.residual(v - t * w, p)) / (2 * t)
            an = J @ w
            worst = max(worst, float(np.linalg.norm(fd - an) / np.linalg.norm(an)))
    return worst <= 1e-5, f"max relative difference {worst:.2e} (<= 1e-5)"


def criterion_10():
    rng = np.random.default_rng(10)
    stab, coer = {}, {}
    for p in (2.0, 3.0):
        for n in (2, 4, 8):
            space = build_space(build_structured(n), 2)
            prob = PBiharmonicProblem(space, None, SolveConfig(p=p))
            D = prob.hessian
            s_max, c_min = 0.0, np.inf
            for _ in range(50):
                v = random_function(space, rng)
                nv = dg_norm(v, p, boundary=True)
                s_max = max(s_max, lp_norm(D(v), p) / nv)
                c_min = min(c_min, prob.bilinear(v.coeffs, v.coeffs, p) / nv**p)
            stab[p, n], coer[p, n] = s_max, c_min
    ok = True
    parts = []
    for p in (2.0, 3.0):
        s = [stab[p, n] for n in (2, 4, 8)]
        c = [coer[p, n] for n in (2, 4, 8)]
        ok &= max(s) / min(s) <= 2 and max(c) / min(c) <= 2
        parts.append(f"p={p:g} stab {'/'.join(f'{x:.3g}' for x in s)}"
                     f" coer {'/'.join(f'{x:.3g}' for x in c)}")
    return ok, "; ".join(parts) + " (band factor <= 2)"


def criterion_11():
    ok = True
    parts = []
    for p in (2.0, 3.0):
        norms = []
        for n in (4, 8, 16):
            space = build_space(build_structured(n), 2)
            u, _, rep = PBiharmonicProblem(space, EX.load(space, p), SolveConfig(p=p)).solve()
            ok &= rep.converged
            norms.append(dg_norm(u, p))
        mean = float(np.mean(norms))
        ok &= all(b <= 1.5 * a for a, b in zip(norms, norms[1:]))
        ok &= all(0.5 * mean <= x <= 1.5 * mean for x in norms)
        limit = lp_norm(EX.laplacian, p, space, 12)
        parts.append(f"p={p:g} " + "/".join(f"{x:.4g}" for x in norms)
                     + f" (|||u||| = {limit:.4g})")
    return ok, "; ".join(parts) + " (within +-50%, no growth)"


def criterion_12():
    base = _rates(_study(2, 2, 10.0, (4, 8, 16, 32))[0])
    ok = True
    parts = []
    total = 0.0
    for sigma in (1.0, 100.0):
        recs, secs = _study(2, 2, sigma, (4, 8, 16, 32))
        total += secs
        eu, ed = _rates(recs)
        ok &= abs(eu - base[0]) <= 0.3 and abs(ed - base[1]) <= 0.3
        parts.append(f"sigma={sigma:g} eoc_u={eu:.3f} eoc_D={ed:.3f}")
    ok &= total <= 240
    return ok, (f"sigma=10 eoc_u={base[0]:.3f} eoc_D={base[1]:.3f}; " + "; ".join(parts)
                + f" (+-0.3), {total:.1f}s")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11, criterion_12]


def _report(i):
    passed, detail = CRITERIA[i - 1]()
    return passed, f"criterion {i}: {'PASS' if passed else 'FAIL'} {detail}"


@pytest.mark.parametrize("i", range(1, 13))
def test_criterion(i, capsys):
    passed, line = _report(i)
    with capsys.disabled():
        print("\n" + line)
    assert passed, line


if __name__ == "__main__":
    results = [_report(i) for i in range(1, 13)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(p for p, _ in results) else 1)
