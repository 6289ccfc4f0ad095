"""Command-line driver for convergence studies on the benchmark solution.

Usage::

    pbiharmonic study --p 3 --k 2 --levels 4,8,16 --out runs/p3k2
    pbiharmonic sweep --p 2 --k 2 --sigmas 1,10,100 --out runs/sweep
    pbiharmonic study --config run.cfg --sigma 100

A config file holds flat ``key = value`` lines (``#`` starts a comment);
command-line flags override it.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .analysis import ErrorRecord, error_record
from .manufactured import ExactSolution
from .mesh import build_structured
from .solver import PBiharmonicProblem, SolveConfig, SolveReport
from .space import DgFunction, build_space

log = logging.getLogger(__name__)

CSV_HEADER = ["n", "h", "err_u_Lp", "eoc_u", "err_D_Lp", "eoc_D", "dgnorm_err", "eoc_dg", "iters"]
SUPPORTED_P = (2, 3, 4, 5)
SUPPORTED_K = (2, 3, 4)


def default_levels(k: int) -> list[int]:
    return [4, 8, 16, 32] if k == 2 else [4, 8, 16]


@dataclass
class RunConfig:
    p: float = 2.0
    k: int = 2
    sigma: float = 10.0
    levels: list[int] = field(default_factory=list)
    epsilon: float | None = None
    newton_tol: float = 1e-8
    out: str = "pbiharmonic-out"
    emit_vtk: bool = False
    quad_bump: int = 0

    def __post_init__(self):
        if not self.levels:
            self.levels = default_levels(self.k)
        self.levels = [int(n) for n in self.levels]
        if self.p not in SUPPORTED_P:
            raise ValueError(f"p must be one of {SUPPORTED_P}, got {self.p}")
        if self.k not in SUPPORTED_K:
            raise ValueError(f"k must be one of {SUPPORTED_K}, got {self.k}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if any(n < 1 for n in self.levels):
            raise ValueError("mesh levels must be positive")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError(f"mesh levels must be strictly increasing, got {self.levels}")
        if self.epsilon is not None and self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if not self.newton_tol > 0:
            raise ValueError("newton_tol must be positive")
        if self.quad_bump < 0:
            raise ValueError("quad_bump must be non-negative")

    def solve_config(self) -> SolveConfig:
        return SolveConfig(p=float(self.p), sigma=float(self.sigma), epsilon=self.epsilon,
                           newton_tol=self.newton_tol,
                           quad_degree=2 * self.k + 2 + self.quad_bump)


class StudyError(RuntimeError):
    """A level failed to converge; ``records`` holds the levels finished so far."""

    def __init__(self, message, records):
        super().__init__(message)
        self.records = records


# -- config parsing ----------------------------------------------------------
_CONVERTERS = {
    "p": float, "k": int, "sigma": float, "epsilon": float, "newton_tol": float,
    "out": str, "quad_bump": int,
    "levels": lambda s: [int(t) for t in s.replace(",", " ").split()],
    "emit_vtk": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
}
_ALIASES = {"eps": "epsilon", "tol": "newton_tol", "emit-vtk": "emit_vtk",
            "quad-bump": "quad_bump"}


def read_config_file(path) -> dict:
    """Parse a flat ``key = value`` file into RunConfig keyword arguments."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            key = _ALIASES.get(key, key)
            if key not in _CONVERTERS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _CONVERTERS[key](val)
    return values


# -- output ------------------------------------------------------------------
def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{x:.6e}"


def _eoc_fmt(x) -> str:
    return "" if x is None else f"{x:.4f}"


def write_csv(records: list[ErrorRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow([r.n, _fmt(r.h), _fmt(r.err_u), _eoc_fmt(r.eoc_u), _fmt(r.err_D),
                        _eoc_fmt(r.eoc_D), _fmt(r.err_dg), _eoc_fmt(r.eoc_dg), r.iterations])


def read_csv(path) -> list[dict]:
    """Rows of a rate table as dicts of floats (None for empty EOC cells)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: (float(v) if v != "" else None) for k, v in row.items()} for row in rows]


def write_plot_data(records: list[ErrorRecord], outdir) -> list[Path]:
    """Two-column ``log h  log error`` files, one per error kind."""
    outdir = Path(outdir)
    paths = []
    for name, attr in (("err_u", "err_u"), ("err_D", "err_D"), ("err_dg", "err_dg")):
        path = outdir / f"{name}.dat"
        with open(path, "w") as fh:
            fh.write(f"# log(h) log({name})\n")
            for r in records:
                fh.write(f"{math.log(r.h):.10e} {math.log(getattr(r, attr)):.10e}\n")
        paths.append(path)
    return paths


def emit_vtk(u_h: DgFunction, d_h: DgFunction, path) -> None:
    """Legacy ASCII VTK of u_h and d_h sampled at the vertices of each element.

    Vertices are duplicated per element so the discontinuous fields are
    represented exactly at the element corners.
    """
    space = u_h.space
    mesh = space.mesh
    ne = mesh.num_elements
    ref = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    K = np.arange(ne)
    val, _, _ = space.tabulate(K, np.broadcast_to(ref, (ne, 3, 2)), derivatives=0)
    u = np.einsum("eqb,eb->eq", val, u_h.element_coeffs).ravel()
    d = np.einsum("eqb,eb->eq", val, d_h.element_coeffs).ravel()
    pts = mesh.vertices[mesh.elements].reshape(-1, 2)
    lines = ["# vtk DataFile Version 3.0", "pbiharmonic solution", "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {3 * ne} double"]
    lines += [f"{x:.17g} {y:.17g} 0" for x, y in pts]
    lines.append(f"CELLS {ne} {4 * ne}")
    lines += [f"3 {3 * e} {3 * e + 1} {3 * e + 2}" for e in range(ne)]
    lines.append(f"CELL_TYPES {ne}")
    lines += ["5"] * ne
    lines.append(f"POINT_DATA {3 * ne}")
    for name, values in (("u_h", u), ("d_h", d)):
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [f"{v:.17g}" for v in values]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_vtk_point_data(path) -> dict[str, np.ndarray]:
    """Inverse of :func:`emit_vtk` for the point data arrays (and point count)."""
    with open(path) as fh:
        tokens = fh.read().split("\n")
    out = {}
    i = 0
    npts = None
    while i < len(tokens):
        line = tokens[i].strip()
        if line.startswith("POINTS"):
            out["num_points"] = int(line.split()[1])
        elif line.startswith("POINT_DATA"):
            npts = int(line.split()[1])
        elif line.startswith("SCALARS") and npts is not None:
            name = line.split()[1]
            out[name] = np.array([float(t) for t in tokens[i + 2:i + 2 + npts]])
            i += 1 + npts
        i += 1
    return out


# -- studies -----------------------------------------------------------------
def solve_level(cfg: RunConfig, n: int, exact: ExactSolution | None = None):
    """Solve the benchmark on level n.  Returns (u_h, d_h, report)."""
    exact = exact or ExactSolution()
    space = build_space(build_structured(n), cfg.k)
    scfg = cfg.solve_config()
    load = exact.load(space, scfg.p, scfg.quad_degree)
    return PBiharmonicProblem(space, load, scfg).solve()


def run_study(cfg: RunConfig, write: bool = True) -> list[ErrorRecord]:
    """Convergence study over ``cfg.levels``.

    Writes ``rates.csv`` and gnuplot data into ``cfg.out``.  If a level fails
    to converge, the table up to that level is written and StudyError raised.
    """
    exact = ExactSolution()
    outdir = Path(cfg.out)
    if write:
        outdir.mkdir(parents=True, exist_ok=True)
    records: list[ErrorRecord] = []
    prev = None
    failure = None
    for n in cfg.levels:
        t0 = time.perf_counter()
        u_h, d_h, report = solve_level(cfg, n, exact)
        rec = error_record(n, u_h, d_h, exact, float(cfg.p), report.total_iterations, prev)
        rec.extra.update(converged=report.converged, residual=report.final_residual,
                         seconds=time.perf_counter() - t0)
        records.append(rec)
        log.info("n=%d err_u=%.3e err_D=%.3e iters=%d (%.1fs)", n, rec.err_u, rec.err_D,
                 rec.iterations, rec.extra["seconds"])
        if write and cfg.emit_vtk:
            emit_vtk(u_h, d_h, outdir / f"solution_n{n}.vtk")
        if not report.converged:
            failure = f"level n={n} did not converge: {report.message}"
            break
        prev = rec
    if write:
        write_csv(records, outdir / "rates.csv")
        write_plot_data(records, outdir)
    if failure:
        raise StudyError(failure, records)
    return records


def sigma_sweep(cfg: RunConfig, sigmas, write: bool = True) -> dict[float, list[ErrorRecord]]:
    """Repeat the study for each penalty value.  Returns {sigma: records}."""
    sigmas = [float(s) for s in sigmas]
    if len(sigmas) < 2:
        raise ValueError("a sweep needs at least two sigma values")
    table = {}
    for s in sigmas:
        sub = replace(cfg, sigma=s, out=str(Path(cfg.out) / f"sigma_{s:g}"))
        table[s] = run_study(sub, write=write)
    if write:
        path = Path(cfg.out) / "sweep.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sigma"] + CSV_HEADER)
            for s, recs in table.items():
                for r in recs:
                    w.writerow([f"{s:g}", r.n, _fmt(r.h), _fmt(r.err_u), _eoc_fmt(r.eoc_u),
                                _fmt(r.err_D), _eoc_fmt(r.eoc_D), _fmt(r.err_dg),
                                _eoc_fmt(r.eoc_dg), r.iterations])
    return table


# -- entry point -------------------------------------------------------------
def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file")
    common.add_argument("--p", type=float)
    common.add_argument("--k", type=int)
    common.add_argument("--sigma", type=float)
    common.add_argument("--levels", help="comma separated mesh levels, e.g. 4,8,16")
    common.add_argument("--out")
    common.add_argument("--emit-vtk", action="store_true", default=None)
    common.add_argument("--eps", type=float, help="regularisation epsilon")
    common.add_argument("--tol", type=float, help="relative Newton tolerance")
    common.add_argument("--quad-bump", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="pbiharmonic", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("study", parents=[common], help="convergence study on the benchmark")
    sw = sub.add_parser("sweep", parents=[common], help="repeat the study for several sigma")
    sw.add_argument("--sigmas", default="1,10,100")
    return ap


def config_from_args(args) -> RunConfig:
    values = read_config_file(args.config) if args.config else {}
    overrides = {"p": args.p, "k": args.k, "sigma": args.sigma, "out": args.out,
                 "emit_vtk": args.emit_vtk, "epsilon": args.eps, "newton_tol": args.tol,
                 "quad_bump": args.quad_bump,
                 "levels": _CONVERTERS["levels"](args.levels) if args.levels else None}
    values.update({k: v for k, v in overrides.items() if v is not None})
    if "p" in values and float(values["p"]).is_integer():
        values["p"] = int(values["p"])
    known = {f.name for f in fields(RunConfig)}
    return RunConfig(**{k: v for k, v in values.items() if k in known})


def _print_table(records, stream=None):
    stream = stream or sys.stdout
    print(",".join(CSV_HEADER), file=stream)
    for r in records:
        print(",".join([str(r.n), _fmt(r.h), _fmt(r.err_u), _eoc_fmt(r.eoc_u), _fmt(r.err_D),
                        _eoc_fmt(r.eoc_D), _fmt(r.err_dg), _eoc_fmt(r.eoc_dg),
                        str(r.iterations)]), file=stream)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
    except (ValueError, OSError) as exc:
        print(f"pbiharmonic: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "study":
            _print_table(run_study(cfg))
        else:
            sigmas = [float(s) for s in args.sigmas.split(",") if s.strip()]
            for s, recs in sigma_sweep(cfg, sigmas).items():
                print(f"# sigma = {s:g}")
                _print_table(recs)
    except StudyError as exc:
        _print_table(exc.records)
        print(f"pbiharmonic: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"pbiharmonic: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
