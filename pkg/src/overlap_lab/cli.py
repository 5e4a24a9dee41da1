"""Command-line interface: ``overlap-lab <command> ...``.

Exit codes: 0 success, 1 comparison or verification failure, 2 usage error,
3 numerical failure.  Outputs are written to a temporary file and renamed
into place, so a failed run never leaves a partial file.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import __version__, asymptotics, ensemble, finite_n, verify
from .quad import QuadratureConfig, QuadratureError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
MAX_REJECTION_RATE = 0.01


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class Grid:
    start: float
    stop: float
    count: int

    @property
    def values(self) -> np.ndarray:
        if self.count == 1:
            return np.array([self.start])
        return np.linspace(self.start, self.stop, self.count)


def parse_grid(text: str) -> Grid:
    """``start:stop:count`` with count >= 2, or a single number."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            v = float(parts[0])
            grid = Grid(v, v, 1)
        elif len(parts) == 3:
            grid = Grid(float(parts[0]), float(parts[1]), int(parts[2]))
            if grid.count < 2:
                raise argparse.ArgumentTypeError(f"grid {text!r}: count must be >= 2")
        else:
            raise ValueError
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid grid {text!r}: expected start:stop:count or a number")
    if not all(math.isfinite(v) for v in (grid.start, grid.stop)):
        raise argparse.ArgumentTypeError(f"grid {text!r} must be finite")
    return grid


def parse_edges(text: str) -> np.ndarray:
    grid = parse_grid(text)
    if grid.count < 2 or not grid.stop > grid.start:
        raise argparse.ArgumentTypeError(f"bin edges {text!r} must be increasing start:stop:count")
    return grid.values


@dataclass
class RunConfig:
    command: str
    params: Dict[str, object] = field(default_factory=dict)
    seed: Optional[int] = None
    matrices: Optional[int] = None
    out: Optional[str] = None
    rel_tol: Optional[float] = None
    abs_tol: Optional[float] = None

    def quad_config(self) -> Optional[QuadratureConfig]:
        if self.rel_tol is None and self.abs_tol is None:
            return None
        base = QuadratureConfig()
        return QuadratureConfig(rel_tol=self.rel_tol or base.rel_tol,
                                abs_tol=base.abs_tol if self.abs_tol is None else self.abs_tol)


def fmt(v: float) -> str:
    """17 significant digits, decimal scientific notation."""
    return f"{float(v):.16e}"


def _atomic_write(path: Optional[str], text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="\n", encoding="ascii") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header: Sequence[str], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(c if isinstance(c, str) else fmt(c) if isinstance(c, float)
                              else str(c) for c in row))
    return "\n".join(lines) + "\n"


def _map_rows(fn: Callable, items: Sequence) -> List:
    """Ordered map over grid rows, fanned out up to OVERLAP_LAB_THREADS workers."""
    threads = ensemble.thread_count()
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _require(cond: bool, message: str):
    if not cond:
        raise UsageError(message)


def _positive_grid(grid: Grid, name: str):
    _require(np.all(grid.values > 0), f"{name} grid must be positive")


# --------------------------------------------------------------------------
# commands


def cmd_edge_jpdf(args, cfg: RunConfig):
    _require(args.b > 0, "b must be positive: at b = 0 the overlap law collapses to "
             "rho_0(zeta) delta(t), which has no pointwise density")
    _positive_grid(args.t, "t")
    qc = cfg.quad_config()
    t = args.t.values

    def row(zeta):
        return asymptotics.jpdf_edge(zeta=float(zeta), t=t, b=args.b, cfg=qc)

    vals = _map_rows(row, list(args.zeta.values))
    rows = [(float(z), float(tt), float(v)) for z, vs in zip(args.zeta.values, vals)
            for tt, v in zip(t, np.atleast_1d(vs))]
    return ("zeta", "t", "density"), rows


def cmd_edge_density(args, cfg: RunConfig):
    _require(args.b >= 0, "b must be non-negative")
    qc = cfg.quad_config()
    vals = _map_rows(lambda z: asymptotics.edge_density(float(z), args.b, qc), list(args.zeta.values))
    return ("zeta", "density"), [(float(z), float(v)) for z, v in zip(args.zeta.values, vals)]


def cmd_cond_density(args, cfg: RunConfig):
    _require(args.b > 0, "b must be positive: at b = 0 the conditional law is delta(t)")
    _positive_grid(args.t, "t")
    qc = cfg.quad_config()
    t = args.t.values

    def row(zeta):
        return asymptotics.cond_density(t, float(zeta), args.b, qc)

    vals = _map_rows(row, list(args.zeta.values))
    rows = [(float(z), float(tt), float(v)) for z, vs in zip(args.zeta.values, vals)
            for tt, v in zip(t, np.atleast_1d(vs))]
    return ("zeta", "t", "density"), rows


def cmd_bulk_jpdf(args, cfg: RunConfig):
    _require(args.a > 0, "a must be positive")
    _positive_grid(args.w, "w")
    _positive_grid(args.t, "t")
    qc = cfg.quad_config()
    t = args.t.values
    vals = _map_rows(lambda w: asymptotics.bulk_weak_jpdf(float(w), t, args.a, qc), list(args.w.values))
    rows = [(float(w), float(tt), float(v)) for w, vs in zip(args.w.values, vals)
            for tt, v in zip(t, np.atleast_1d(vs))]
    return ("w", "t", "density"), rows


def cmd_strong_jpdf(args, cfg: RunConfig):
    _positive_grid(args.sigma, "sigma")
    s = args.sigma.values
    rows = []
    for d in args.delta.values:
        vs = np.atleast_1d(asymptotics.strong_jpdf(delta=float(d), sigma=s))
        rows.extend((float(d), float(x), float(v)) for x, v in zip(s, vs))
    return ("delta", "sigma", "density"), rows


def _params(n, tau) -> finite_n.EllipticParams:
    try:
        return finite_n.EllipticParams(n, tau)
    except ValueError as exc:
        raise UsageError(str(exc))


def cmd_finite_jpdf(args, cfg: RunConfig):
    params = _params(args.n, args.tau)
    _positive_grid(args.t, "t")
    z = args.z.values
    t = args.t.values
    Z, T = np.meshgrid(z, t, indexing="ij")
    vals = finite_n.jpdf_finite_t(Z, T, params)
    rows = [(float(a), float(b), float(v)) for a, b, v in zip(Z.ravel(), T.ravel(), np.ravel(vals))]
    return ("z", "t", "density"), rows


def sample_to_text(params: finite_n.EllipticParams, seed: int, matrices: int):
    samples = ensemble.sample_overlaps(params, seed, matrices)
    summary = ensemble.summarize(samples)
    rows = []
    for s in samples:
        if s.accepted:
            rows.extend((s.index, float(lam), float(t)) for lam, t in zip(s.lambdas, s.t))
    meta = {
        "seed": seed, "n": params.n, "tau": params.tau, "matrices": matrices,
        "rejected_count": summary.rejected, "real_eigenvalue_count": summary.real_count,
        "tool_version": __version__,
        "condition_cutoff": ensemble.COND_MAX, "residual_tolerance": ensemble.RESIDUAL_TOL,
        "real_tolerance": ensemble.REAL_TOL,
        "max_row_sum_error": summary.max_row_sum_error,
        "rng": "numpy Philox keyed by (seed, matrix_index), standard_normal",
    }
    reasons = [f"matrix {s.index}: {s.reason}" for s in samples if not s.accepted]
    return _csv_text(("matrix_index", "lambda", "t"), rows), meta, summary, reasons


def cmd_sample(args, cfg: RunConfig):
    params = _params(args.n, args.tau)
    _require(args.matrices >= 1, "matrices must be at least 1")
    _require(0 <= args.seed < 2**64, "seed must be a 64-bit unsigned integer")
    text, meta, summary, reasons = sample_to_text(params, args.seed, args.matrices)
    for r in reasons:
        print(f"rejected {r}", file=sys.stderr)
    if params.n <= 200 and params.tau <= 0.95 and summary.rejection_rate > MAX_REJECTION_RATE:
        print(f"error: rejection rate {summary.rejection_rate:.3%} exceeds "
              f"{MAX_REJECTION_RATE:.0%}", file=sys.stderr)
        return EXIT_NUMERIC
    meta_text = json.dumps(meta, indent=2, sort_keys=True) + "\n"
    _atomic_write(args.out, text)
    _atomic_write(args.out + ".meta.json", meta_text)
    print(f"matrices={summary.matrices} rejected={summary.rejected} "
          f"real_eigenvalues={summary.real_count}", file=sys.stderr)
    return EXIT_OK


def _read_samples(path: str):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["matrix_index", "lambda", "t"]:
            raise UsageError(f"{path}: expected header matrix_index,lambda,t")
        data = [(float(r["lambda"]), float(r["t"])) for r in reader]
    return np.array(data, dtype=float).reshape(-1, 2)


def cmd_compare(args, cfg: RunConfig):
    meta = {}
    meta_path = args.samples + ".meta.json"
    if os.path.exists(meta_path):
        with open(meta_path) as fh:
            meta = json.load(fh)
    n = args.n if args.n is not None else meta.get("n")
    tau = args.tau if args.tau is not None else meta.get("tau")
    matrices = args.matrices if args.matrices is not None else meta.get("matrices")
    _require(n is not None and tau is not None and matrices is not None,
             "need --n, --tau and --matrices (or a .meta.json sidecar)")
    params = _params(int(n), float(tau))
    _require((args.zeta_bins is None) != (args.z_bins is None),
             "give exactly one of --zeta-bins and --z-bins")
    data = _read_samples(args.samples)
    lam, t = data[:, 0], data[:, 1]
    scale = params.n ** (1 / 6)
    if args.zeta_bins is not None:
        x, edges, xname = ensemble.to_zeta(lam, params), args.zeta_bins, "zeta"
    else:
        x, edges, xname = lam, args.z_bins, "z"
    hist = ensemble.accumulate(ensemble.Histogram2D(edges, args.t_bins),
                               np.column_stack([x, t]), int(matrices))

    if args.theory == "finite":
        def theory(xv, tv):
            z = ensemble.from_zeta(xv, params) if xname == "zeta" else xv
            jac = 1 / scale if xname == "zeta" else 1.0
            return jac * finite_n.jpdf_finite_t(z, np.maximum(tv, 1e-300), params)
    else:
        b = params.b
        qc = cfg.quad_config()

        def theory(xv, tv):
            zeta = xv if xname == "zeta" else ensemble.to_zeta(xv, params)
            jac = 1.0 if xname == "zeta" else scale
            out = np.empty(np.shape(zeta))
            for u in np.unique(zeta):
                m = zeta == u
                T = asymptotics.t_quadruple(float(u), b, qc)
                out[m] = asymptotics.edge_law(T, float(u), tv[m], b)
            return jac * out

    try:
        cmp = ensemble.compare(hist, theory, min_expected=args.min_expected)
    except ValueError as exc:
        raise UsageError(str(exc))
    rows = []
    xe, te = hist.x_edges, hist.t_edges
    for i in range(xe.size - 1):
        for j in range(te.size - 1):
            r = cmp.residuals[i, j]
            rows.append((float(xe[i]), float(xe[i + 1]), float(te[j]), float(te[j + 1]),
                         int(cmp.observed[i, j]), float(cmp.expected[i, j]),
                         float(r) if np.isfinite(r) else "nan", "1" if cmp.mask[i, j] else "0"))
    header = (f"{xname}_lo", f"{xname}_hi", "t_lo", "t_hi", "observed", "expected", "residual", "used")
    _atomic_write(args.out, _csv_text(header, rows))
    ok = cmp.passed(args.threshold)
    print(f"theory={args.theory} chi2={cmp.chi2:.6g} dof={cmp.dof} p={cmp.p_value:.4g} "
          f"max_abs_residual={cmp.max_abs_residual:.4g} threshold={args.threshold:g} "
          f"{'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(args, cfg: RunConfig):
    results = verify.run(quick=args.quick)
    print(verify.format_table(results))
    failed = [r.name for r in results if not r.passed]
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="overlap-lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"overlap-lab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, out_required=False):
        sp.add_argument("--out", required=out_required, help="output file (default: stdout)")
        sp.add_argument("--rel-tol", type=float, default=None)
        sp.add_argument("--abs-tol", type=float, default=None)
        return sp

    sp = common(sub.add_parser("edge-jpdf", help="edge limit joint density"))
    sp.add_argument("--b", type=float, required=True)
    sp.add_argument("--zeta", type=parse_grid, required=True)
    sp.add_argument("--t", type=parse_grid, required=True)
    sp.set_defaults(func=cmd_edge_jpdf)

    sp = common(sub.add_parser("edge-density", help="edge eigenvalue density"))
    sp.add_argument("--b", type=float, required=True)
    sp.add_argument("--zeta", type=parse_grid, required=True)
    sp.set_defaults(func=cmd_edge_density)

    sp = common(sub.add_parser("cond-density", help="overlap density given zeta"))
    sp.add_argument("--b", type=float, required=True)
    sp.add_argument("--zeta", type=parse_grid, required=True)
    sp.add_argument("--t", type=parse_grid, required=True)
    sp.set_defaults(func=cmd_cond_density)

    sp = common(sub.add_parser("bulk-jpdf", help="bulk weak non-normality limit"))
    sp.add_argument("--a", type=float, required=True)
    sp.add_argument("--w", type=parse_grid, required=True)
    sp.add_argument("--t", type=parse_grid, required=True)
    sp.set_defaults(func=cmd_bulk_jpdf)

    sp = common(sub.add_parser("strong-jpdf", help="strong non-normality limit"))
    sp.add_argument("--delta", type=parse_grid, required=True)
    sp.add_argument("--sigma", type=parse_grid, required=True)
    sp.set_defaults(func=cmd_strong_jpdf)

    sp = common(sub.add_parser("finite-jpdf", help="exact finite-N joint density"))
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--tau", type=float, required=True)
    sp.add_argument("--z", type=parse_grid, required=True)
    sp.add_argument("--t", type=parse_grid, required=True)
    sp.set_defaults(func=cmd_finite_jpdf)

    sp = sub.add_parser("sample", help="Monte Carlo (lambda, t) pairs")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--tau", type=float, required=True)
    sp.add_argument("--matrices", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_sample)

    sp = common(sub.add_parser("compare", help="histogram samples against a density"))
    sp.add_argument("--samples", required=True)
    sp.add_argument("--theory", choices=("finite", "edge"), required=True)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--tau", type=float, default=None)
    sp.add_argument("--matrices", type=int, default=None)
    sp.add_argument("--zeta-bins", type=parse_edges, default=None)
    sp.add_argument("--z-bins", type=parse_edges, default=None)
    sp.add_argument("--t-bins", type=parse_edges, required=True)
    sp.add_argument("--min-expected", type=float, default=10.0)
    sp.add_argument("--threshold", type=float, default=4.0)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("verify", help="run the identity suite")
    sp.add_argument("--quick", action="store_true")
    sp.set_defaults(func=cmd_verify)
    return p


def _bind_negative_values(argv: Sequence[str]) -> List[str]:
    """Attach values such as ``-6:2:81`` to their option so argparse does not read them as flags."""
    out: List[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if (tok.startswith("--") and "=" not in tok and nxt is not None and len(nxt) > 1
                and nxt[0] == "-" and (nxt[1].isdigit() or nxt[1] == ".")):
            out.append(f"{tok}={nxt}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(_bind_negative_values(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    cfg = RunConfig(args.command, params={k: v for k, v in vars(args).items()
                                          if k not in ("func", "command")},
                    seed=getattr(args, "seed", None), matrices=getattr(args, "matrices", None),
                    out=getattr(args, "out", None), rel_tol=getattr(args, "rel_tol", None),
                    abs_tol=getattr(args, "abs_tol", None))
    try:
        ensemble.thread_count()
        cfg.quad_config()
        result = args.func(args, cfg)
        if isinstance(result, int):
            return result
        header, rows = result
        _atomic_write(args.out, _csv_text(header, rows))
        return EXIT_OK
    except UsageError as exc:
        print(f"overlap-lab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureError, ArithmeticError, FloatingPointError) as exc:
        print(f"overlap-lab {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"overlap-lab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
