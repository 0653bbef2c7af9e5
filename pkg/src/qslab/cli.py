"""Command-line entry point.

Every subcommand prints a single JSON (or CSV) document with the resolved
configuration echoed into it, and exits 0 on success, 2 on a contract
violation, 3 on non-convergence.  Randomness is seeded and worker-count
independent, so identical invocations produce byte-identical output.
"""

import argparse
import json
import os
import sys

import numpy as np

from .blocks import BlockTriple, classify
from .blockmeasure import measure_block_norm
from .norms import fbar_norm, hs_norm, l1tau_l2xi_norm, linf_l2_norm, xk_norm
from .qsf import read_qsf, write_qsf
from .scan import divergence_experiment, scan, scan_summary_json, scan_to_csv
from .spacetime import Field, InitialData, PhaseGrid, free_evolve, to_spectral
from .wellposed import picard_solve, random_shell_data, resonant_denominator_bound

EXIT_OK = 0
EXIT_CONTRACT = 2
EXIT_NOCONV = 3


class ContractError(Exception):
    pass


def _grid_from_args(args):
    return PhaseGrid(nx=args.nx, nt=args.nt, xlen=args.xlen, tlen=args.tlen)


def _grid_config(grid):
    return {"nx": grid.nx, "nt": grid.nt, "xlen": grid.xlen, "tlen": grid.tlen}


def _np_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _emit(doc, args):
    text = doc if isinstance(doc, str) else json.dumps(doc, sort_keys=True, default=_np_default)
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text)
            if not text.endswith("\n"):
                fh.write("\n")
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _workers(args):
    if args.workers is not None:
        return args.workers
    return int(os.environ.get("QSLAB_WORKERS", "1"))


def cmd_gen(args):
    grid = _grid_from_args(args)
    if args.kind == "gaussian":
        vals = args.amp * np.exp(-(grid.x / args.width) ** 2 / 2.0).astype(complex)
        data = InitialData(grid, vals)
    elif args.kind == "shell":
        if args.k > grid.k_grid:
            raise ContractError(
                f"shell k={args.k} above the largest representable shell k_grid={grid.k_grid}"
            )
        rng = np.random.default_rng(args.seed)
        data = random_shell_data(grid, args.k, rng, amplitude=args.amp)
    elif args.kind == "random-shell":
        if args.k > grid.k_grid:
            raise ContractError(
                f"shell k={args.k} above the largest representable shell k_grid={grid.k_grid}"
            )
        rng = np.random.default_rng(args.seed)
        acc = np.zeros(grid.nx, dtype=complex)
        for k in range(0, args.k + 1):
            part = random_shell_data(grid, k, rng, amplitude=1.0)
            acc += (1.0 + 4.0**k) ** (-0.125) * part.values
        data = InitialData(grid, acc)
        scale = data.l2()
        if scale > 0:
            data = InitialData(grid, acc * (args.amp / scale))
    else:
        raise ContractError(f"unknown kind {args.kind}")
    write_qsf(args.path, data)
    _emit({"written": args.path, "kind": args.kind, "config": _grid_config(grid),
           "seed": args.seed, "l2": data.l2()}, args)
    return EXIT_OK


def _load_field(path):
    obj = read_qsf(path)
    return obj


def cmd_norm(args):
    obj = _load_field(args.file)
    if isinstance(obj, InitialData):
        if args.space != "hs":
            raise ContractError("initial data supports only --space hs")
        val = hs_norm(obj, args.s)
        _emit({"space": "Hs", "s": args.s, "total": val,
               "config": _grid_config(obj.grid), "file": args.file}, args)
        return EXIT_OK
    if args.space == "fbar":
        bd = fbar_norm(obj, args.s)
    elif args.space == "xk":
        spec = obj if obj.domain == "spectral" else to_spectral(obj)
        bd = xk_norm(spec, args.k)
    elif args.space == "linfl2":
        _emit({"space": "LinfL2", "total": linf_l2_norm(obj),
               "config": _grid_config(obj.grid), "file": args.file}, args)
        return EXIT_OK
    elif args.space == "l1l2":
        spec = obj if obj.domain == "spectral" else to_spectral(obj)
        _emit({"space": "L1L2", "total": l1tau_l2xi_norm(spec),
               "config": _grid_config(obj.grid), "file": args.file}, args)
        return EXIT_OK
    else:
        raise ContractError(f"unknown space {args.space}")
    doc = json.loads(bd.to_json())
    doc["config"] = _grid_config(obj.grid)
    doc["file"] = args.file
    _emit(doc, args)
    return EXIT_OK


def cmd_evolve(args):
    obj = _load_field(args.file)
    if not isinstance(obj, InitialData):
        raise ContractError("evolve expects an initial-data file")
    u = free_evolve(obj)
    write_qsf(args.out_field, u)
    _emit({"written": args.out_field, "config": _grid_config(obj.grid),
           "l2": u.l2()}, args)
    return EXIT_OK


def cmd_picard(args):
    obj = _load_field(args.file)
    if not isinstance(obj, InitialData):
        raise ContractError("picard expects an initial-data file")
    grid = obj.grid
    if args.nt != grid.nt:
        grid = PhaseGrid(nx=grid.nx, nt=args.nt, xlen=grid.xlen, tlen=grid.tlen)
        obj = InitialData(grid, obj.values)
    u, rep = picard_solve(obj, max_iters=args.iters, tol=args.tol)
    doc = json.loads(rep.to_json())
    doc["config"] = _grid_config(grid)
    doc["file"] = args.file
    if args.out_field:
        write_qsf(args.out_field, u)
        doc["written"] = args.out_field
    _emit(doc, args)
    return EXIT_OK if rep.contracted else EXIT_NOCONV


def _parse_triple(karg, jarg):
    ks = [int(x) for x in karg.split(",")]
    js = [int(x) for x in jarg.split(",")]
    if len(ks) != 3 or len(js) != 3:
        raise ContractError("--k and --j need three comma-separated integers")
    return BlockTriple(ks[0], js[0], ks[1], js[1], ks[2], js[2])


def cmd_blocknorm(args):
    t = _parse_triple(args.k, args.j)
    pred = classify(t)
    m = measure_block_norm(t, density=args.density, restarts=args.restarts, seed=args.seed)
    doc = {
        "triple": {"k1": t.k1, "j1": t.j1, "k2": t.k2, "j2": t.j2, "k3": t.k3, "j3": t.j3},
        "case": pred.case_label,
        "feasible": pred.feasible,
        "predicted": pred.predicted,
        "measured": m.value,
        "ratio": m.value / pred.predicted if pred.predicted > 0 else 0.0,
        "converged": m.converged,
        "iterations": m.iterations,
        "restarts": m.restarts,
        "grid_density": list(m.grid_density),
        "config": {"density": args.density, "restarts": args.restarts, "seed": args.seed},
    }
    _emit(doc, args)
    return EXIT_OK if m.converged else EXIT_NOCONV


def _parse_range(text):
    if ".." in text:
        a, b = text.split("..")
        return range(int(a), int(b) + 1)
    return [int(x) for x in text.split(",")]


def cmd_scan(args):
    rep = scan(
        _parse_range(args.k), _parse_range(args.j),
        density=args.density, restarts=args.restarts, seed=args.seed,
        workers=_workers(args),
    )
    if args.format == "csv":
        _emit(scan_to_csv(rep), args)
    else:
        _emit(scan_summary_json(rep), args)
    return EXIT_OK


def cmd_divergence(args):
    rep = divergence_experiment(
        k_high=args.k_high, k_low_range=range(-args.depth, 1),
        s=args.s, b=args.b, density=args.density, restarts=args.restarts, seed=args.seed,
    )
    _emit(rep.to_json(), args)
    return EXIT_OK


def cmd_regions(args):
    bound = resonant_denominator_bound(args.k1, args.k1, density=args.density,
                                       sigma_cap=args.sigma_cap)
    _emit({"k1": args.k1, "density": args.density,
           "min_denominator_over_xi_xi1": bound,
           "passes_quarter_bound": bound >= 0.25}, args)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="qslab",
                                description="frequency-space laboratory for dyadic dispersive estimates")
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: QSLAB_WORKERS or 1)")
    sub = p.add_subparsers(dest="command", required=True)

    def add_grid(q):
        q.add_argument("--nx", type=int, default=1024)
        q.add_argument("--nt", type=int, default=1024)
        q.add_argument("--xlen", type=float, default=64.0 * np.pi)
        q.add_argument("--tlen", type=float, default=8.0)

    g = sub.add_parser("gen", help="write initial data in QSF1 format")
    g.add_argument("kind", choices=["gaussian", "shell", "random-shell"])
    g.add_argument("path")
    g.add_argument("--amp", type=float, default=0.1)
    g.add_argument("--width", type=float, default=1.0)
    g.add_argument("--k", type=int, default=3)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default=None)
    add_grid(g)
    g.set_defaults(func=cmd_gen)

    n = sub.add_parser("norm", help="norm of a QSF1 field or data file")
    n.add_argument("file")
    n.add_argument("--space", choices=["fbar", "xk", "hs", "linfl2", "l1l2"], default="fbar")
    n.add_argument("-s", "--s", type=float, default=-0.25)
    n.add_argument("--k", type=int, default=1)
    n.add_argument("--out", default=None)
    n.set_defaults(func=cmd_norm)

    e = sub.add_parser("evolve", help="free evolution of initial data")
    e.add_argument("file")
    e.add_argument("out_field")
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_evolve)

    pi = sub.add_parser("picard", help="fixed-point probe of the quadratic evolution")
    pi.add_argument("file")
    pi.add_argument("--iters", type=int, default=12)
    pi.add_argument("--tol", type=float, default=1e-10)
    pi.add_argument("--nt", type=int, default=1024)
    pi.add_argument("--out-field", default=None)
    pi.add_argument("--out", default=None)
    pi.set_defaults(func=cmd_picard)

    b = sub.add_parser("blocknorm", help="restricted convolution norm of one block triple")
    b.add_argument("--k", required=True, help="k1,k2,k3")
    b.add_argument("--j", required=True, help="j1,j2,j3")
    b.add_argument("--density", type=float, default=8.0)
    b.add_argument("--restarts", type=int, default=16)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", default=None)
    b.set_defaults(func=cmd_blocknorm)

    s = sub.add_parser("scan", help="scan the dyadic case predictions")
    s.add_argument("--k", default="-2..8", help="range a..b or comma list")
    s.add_argument("--j", default="0..16")
    s.add_argument("--density", type=float, default=8.0)
    s.add_argument("--restarts", type=int, default=16)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_scan)

    d = sub.add_parser("divergence", help="high x high -> low shell accumulation probe")
    d.add_argument("--k-high", type=int, default=12)
    d.add_argument("--depth", type=int, default=12, help="deepest output shell is -depth")
    d.add_argument("--s", type=float, default=-0.25)
    d.add_argument("--b", type=float, default=0.5)
    d.add_argument("--density", type=float, default=8.0)
    d.add_argument("--restarts", type=int, default=8)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", default=None)
    d.set_defaults(func=cmd_divergence)

    r = sub.add_parser("regions", help="interaction-region denominator sweep")
    r.add_argument("--k1", type=int, default=6)
    r.add_argument("--density", type=float, default=2.0)
    r.add_argument("--sigma-cap", type=float, default=8.0)
    r.add_argument("--out", default=None)
    r.set_defaults(func=cmd_regions)

    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
