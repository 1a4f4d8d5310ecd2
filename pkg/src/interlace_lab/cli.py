"""interlace-lab command line interface.

Subcommands: classify, duality-check, density, eigen-check, entrance-law,
intertwine-check, simulate, edge-cdf, campaign.  All numeric output is CSV
with a '#schema=1' comment line; --out writes files, otherwise stdout.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import kmgroup as km
from . import twolevel as tl
from . import reflectsde as rs
from . import edgekernels as ek
from .diffusion1d import (
    CATALOG_IDS,
    boundary_integrals,
    classify_boundary,
    conjugate,
    duality_residual,
    kernel,
    make_spec,
)
from .harness import (
    CampaignConfig,
    empirical_cdf_on_grid,
    read_config,
    rmt_oracle,
    run_campaign,
    write_csv,
)
from .harness.io import ensure_outdir


def _emit(args, name, fieldnames, rows):
    if args.out:
        ensure_outdir(args.out)
        path = os.path.join(args.out, f"{name}.csv")
        write_csv(path, fieldnames, rows)
        print(path)
    else:
        write_csv(sys.stdout, fieldnames, rows)


def _floats(s):
    return [float(v) for v in s.replace(",", " ").split()]


def cmd_classify(args):
    rows = []
    for sid in args.spec or CATALOG_IDS:
        spec = make_spec(sid)
        for end in ("l", "r") if args.endpoint == "both" else (args.endpoint,):
            (nv, nd), (sv, sd) = boundary_integrals(spec, end)
            rows.append({
                "spec": sid, "endpoint": end,
                "N": "inf" if nd else f"{nv:.6g}",
                "Sigma": "inf" if sd else f"{sv:.6g}",
                "class": classify_boundary(spec, end).value,
            })
    _emit(args, "classify", ["spec", "endpoint", "N", "Sigma", "class"], rows)


def cmd_duality_check(args):
    rows = []
    for sid in args.spec:
        spec = make_spec(sid)
        kern = kernel(spec)
        lo, hi = kern.window(max(args.times), spec.c)
        l, r = spec.interval
        lo = max(lo, l + 0.1 * (spec.c - l)) if np.isfinite(l) else lo / 2
        hi = min(hi, r - 0.1 * (r - spec.c)) if np.isfinite(r) else hi / 2
        grid = np.linspace(lo, hi, args.grid)
        for t in args.times:
            for x in grid:
                for y in grid:
                    rows.append({
                        "spec": sid, "t": t, "x": f"{x:.6g}", "y": f"{y:.6g}",
                        "residual": duality_residual(spec, t, float(x), float(y)),
                    })
    _emit(args, "duality", ["spec", "t", "x", "y", "residual"], rows)


def cmd_density(args):
    spec = make_spec(args.spec)
    kern = kernel(spec)
    x = km.as_weyl(_floats(args.x), spec.interval)
    y = km.as_weyl(_floats(args.y), spec.interval)
    val = float(km.km_density(kern, args.t, x, y))
    rows = [{"spec": args.spec, "t": args.t, "x": args.x, "y": args.y,
             "kind": "killed-determinant", "value": val}]
    if args.h_transform:
        h = km.eigenfunction_catalog(spec, len(x))
        rows.append({"spec": args.spec, "t": args.t, "x": args.x, "y": args.y,
                     "kind": "h-transform", "value": float(km.h_transform_density(kern, h, args.t, x, y))})
    _emit(args, "density", ["spec", "t", "x", "y", "kind", "value"], rows)


def cmd_eigen_check(args):
    spec = make_spec(args.spec)
    h = km.eigenfunction_catalog(spec, args.n)
    probes = np.array([_floats(p) for p in args.probes]) if args.probes else _default_probes(spec, args.n)
    r = km.eigen_residual(kernel(spec), h, args.t, probes)
    rows = [{"spec": args.spec, "n": args.n, "t": args.t, "rate": h.rate, "residual": r}]
    _emit(args, "eigen", ["spec", "n", "t", "rate", "residual"], rows)


def _default_probes(spec, n):
    l, r = spec.interval
    lo = l if np.isfinite(l) else spec.c - 1.5
    hi = r if np.isfinite(r) else spec.c + 1.5
    pad = 0.15 * (hi - lo)
    base = np.linspace(lo + pad, hi - pad, n)
    return np.vstack([base, base * 0.8 + 0.2 * (lo + pad)])


def cmd_entrance_law(args):
    elaw = km.entrance_law(args.family, args.n)
    rows = []
    for p in args.points:
        y = np.array(_floats(p))
        rows.append({"family": args.family, "n": args.n, "t": args.t,
                     "y": p, "density": elaw.density(args.t, y[None, :]).item()})
    _emit(args, "entrance", ["family", "n", "t", "y", "density"], rows)


def cmd_intertwine_check(args):
    spec = make_spec(args.spec)
    shape = {"n,n+1": tl.Shape.NNP1, "n,n": tl.Shape.NN, "n+1,n": tl.Shape.NP1N}[args.shape]
    sys_ = tl.TwoLevelSystem(spec, shape)
    n1 = args.n
    n2 = tl.counts(shape, n1)
    l, r = spec.interval
    lo = l if np.isfinite(l) else -1.5
    hi = r if np.isfinite(r) else 1.5
    x = np.linspace(lo + 0.25 * (hi - lo), hi - 0.25 * (hi - lo), n2)
    ylo, yhi = tl.fiber_bounds(x, shape, l, r)
    y = 0.5 * (np.where(np.isfinite(ylo), ylo, x.min() - 0.5)
               + np.where(np.isfinite(yhi), yhi, x.max() + 0.5))
    fs = tl.test_function_basis(x, y)
    rows = []
    for fi, f in enumerate(fs):
        fy = lambda yp, ff=f: ff(np.zeros(yp.shape[:-1] + (n2,)), yp)
        r_d = tl.dynkin_residual(sys_, args.t, fy, (x, y))
        rows.append({"spec": args.spec, "shape": args.shape, "identity": "projection",
                     "test_function": fi, "residual": r_d,
                     "pass": r_d <= args.tolerance})
    if shape is not tl.Shape.NP1N:
        h_hat = km.eigenfunction_catalog(conjugate(spec), n1)
        res = tl.master_intertwining_residual(sys_, h_hat, args.t, fs, x)
        for fi, rv in enumerate(res):
            rows.append({"spec": args.spec, "shape": args.shape, "identity": "master",
                         "test_function": fi, "residual": rv,
                         "pass": rv <= args.tolerance})
    _emit(args, "intertwine",
          ["spec", "shape", "identity", "test_function", "residual", "pass"], rows)


def cmd_simulate(args):
    cfg = read_config(args.config, "simulate")
    family = cfg["family"]
    mode = cfg.get("mode", "two-level")
    T = float(cfg.get("t", 1.0))
    dt = float(cfg.get("dt", 1e-3))
    paths = int(cfg.get("paths", 1000))
    seed = int(cfg.get("seed", args.seed or 0))
    out = cfg.get("output", args.out or ".")
    ensure_outdir(out)
    stride = int(cfg["record_stride"]) if "record_stride" in cfg else None
    if mode == "edge":
        n = int(cfg["n"])
        side = cfg.get("side", "right")
        x0 = np.array(_floats(cfg.get("init", " ".join(["0"] * n))))
        pb = rs.simulate_edge(make_spec(family), n, side, x0, T, dt, paths, seed,
                              record_stride=stride)
    elif mode == "gt":
        N = int(cfg["levels"])
        fams = cfg.get("level_families", ",".join([family] * N)).split(",")
        specs = [make_spec(f.strip()) for f in fams]
        x0 = [np.array(_floats(cfg[f"init{k+1}"])) for k in range(N)]
        pb = rs.simulate_gt(specs, x0, T, dt, paths, seed, record_stride=stride)
    else:
        shape = {"n,n+1": tl.Shape.NNP1, "n,n": tl.Shape.NN, "n+1,n": tl.Shape.NP1N}[
            cfg.get("shape", "n,n+1")
        ]
        spec = make_spec(family)
        x0 = np.array(_floats(cfg["init_x"]))
        y0 = np.array(_floats(cfg["init_y"]))
        y_spec = make_spec(cfg["y_family"]) if "y_family" in cfg else None
        pb = rs.simulate_two_level(spec, shape, x0, y0, T, dt, paths, seed,
                                   y_spec=y_spec, record_stride=stride)
    rows = []
    for lvl, name in enumerate(pb.level_names):
        term = pb.terminal(lvl)
        for pid in range(term.shape[0]):
            for idx in range(term.shape[1]):
                rows.append({"path_id": pid, "time": pb.grid[-1], "level": name,
                             "index": idx, "value": term[pid, idx],
                             "tau": pb.tau[pid] if np.isfinite(pb.tau[pid]) else ""})
    path = os.path.join(out, "terminal.csv")
    write_csv(path, ["path_id", "time", "level", "index", "value", "tau"], rows)
    print(path)
    if stride is not None:
        rows = []
        for lvl, name in enumerate(pb.level_names):
            arr = pb.levels[lvl]
            for ti, tval in enumerate(pb.grid):
                for pid in range(arr.shape[1]):
                    for idx in range(arr.shape[2]):
                        rows.append({"path_id": pid, "time": tval, "level": name,
                                     "index": idx, "value": arr[ti, pid, idx]})
        tpath = os.path.join(out, "trajectories.csv")
        write_csv(tpath, ["path_id", "time", "level", "index", "value"], rows)
        print(tpath)


def cmd_edge_cdf(args):
    spec = make_spec(args.spec)
    z = np.linspace(args.zmin, args.zmax, args.znum)
    x0 = np.array(_floats(args.start)) if args.start else None
    if x0 is None or np.allclose(np.diff(x0), 0.0):
        base = float(x0[0]) if x0 is not None else 0.0
        if args.side == "right":
            F = ek.edge_max_cdf_degenerate(spec, args.n, args.t, base, z)
        else:
            F = ek.edge_min_cdf_degenerate(spec, args.n, args.t, base, z)
    else:
        tbl = ek.build_edge_table(spec, args.n, args.t)
        F = ek.edge_max_cdf(tbl, x0, z) if args.side == "right" else ek.edge_min_cdf(tbl, x0, z)
    rows = []
    oracle_F = None
    if args.oracle:
        rng = np.random.default_rng(args.seed or 0)
        samples = rmt_oracle(args.oracle, args.oracle_count, rng)
        col = -1 if args.side == "right" else 0
        oracle_F = empirical_cdf_on_grid(samples[:, col], z)
    for i, zz in enumerate(z):
        row = {"z": zz, "cdf": float(F[i])}
        if oracle_F is not None:
            row["oracle_cdf"] = float(oracle_F[i])
            row["diff"] = float(abs(F[i] - oracle_F[i]))
        rows.append(row)
    fields = ["z", "cdf"] + (["oracle_cdf", "diff"] if oracle_F is not None else [])
    _emit(args, "edge_cdf", fields, rows)


def cmd_campaign(args):
    if args.config:
        cfg = CampaignConfig.from_file(args.config)
        if args.out:
            cfg.out = args.out
        if args.threads:
            cfg.threads = args.threads
    else:
        cfg = CampaignConfig(name=args.name, out=args.out, seed=args.seed,
                             threads=args.threads or 1)
    res = run_campaign(cfg)
    print(f"campaign {res.name}: {'PASS' if res.passed else 'FAIL'} "
          f"({res.summary}; {res.runtime:.1f}s)")
    if not args.out:
        write_csv(sys.stdout, res.fieldnames, res.rows)
    return 0 if res.passed else 1


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--out", default=None, help="output directory (default: stdout)")
    common.add_argument("--config", default=None, help="config file for campaign/simulate")

    p = argparse.ArgumentParser(prog="interlace-lab",
                                description="interlacing-diffusion numerics",
                                parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    s = add("classify", help="Feller boundary classes")
    s.add_argument("--spec", action="append", help="catalog spec id (repeatable)")
    s.add_argument("--endpoint", choices=["l", "r", "both"], default="both")
    s.set_defaults(func=cmd_classify)

    s = add("duality-check", help="CDF duality residual grid")
    s.add_argument("--spec", action="append", required=True)
    s.add_argument("--times", type=float, nargs="+", default=[0.25, 1.0])
    s.add_argument("--grid", type=int, default=5)
    s.set_defaults(func=cmd_duality_check)

    s = add("density", help="determinant transition density")
    s.add_argument("--spec", required=True)
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--x", required=True, help="space-separated coordinates")
    s.add_argument("--y", required=True)
    s.add_argument("--h-transform", action="store_true")
    s.set_defaults(func=cmd_density)

    s = add("eigen-check", help="eigenfunction residual")
    s.add_argument("--spec", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--t", type=float, default=0.5)
    s.add_argument("--probes", action="append")
    s.set_defaults(func=cmd_eigen_check)

    s = add("entrance-law", help="degenerate-start density values")
    s.add_argument("--family", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--t", type=float, default=1.0)
    s.add_argument("--points", action="append", required=True)
    s.set_defaults(func=cmd_entrance_law)

    s = add("intertwine-check", help="projection/master residuals")
    s.add_argument("--spec", required=True)
    s.add_argument("--shape", choices=["n,n+1", "n,n", "n+1,n"], default="n,n+1")
    s.add_argument("--n", type=int, default=1, help="particle count of the inner level")
    s.add_argument("--t", type=float, default=0.5)
    s.add_argument("--tolerance", type=float, default=1e-4)
    s.set_defaults(func=cmd_intertwine_check)

    s = add("simulate", help="reflected-SDE simulation from a config file")
    s.set_defaults(func=cmd_simulate)

    s = add("edge-cdf", help="extreme-particle distribution")
    s.add_argument("--spec", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--t", type=float, default=1.0)
    s.add_argument("--side", choices=["left", "right"], default="right")
    s.add_argument("--start", default=None, help="space-separated start (default origin)")
    s.add_argument("--zmin", type=float, required=True)
    s.add_argument("--zmax", type=float, required=True)
    s.add_argument("--znum", type=int, default=41)
    s.add_argument("--oracle", default=None, help="e.g. gue:2 or wishart:2,2")
    s.add_argument("--oracle-count", type=int, default=100000)
    s.set_defaults(func=cmd_edge_cdf)

    s = add("campaign", help="run a verification campaign")
    s.add_argument("--name", default="all")
    s.set_defaults(func=cmd_campaign)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate" and not args.config:
        parser.error("simulate requires --config")
    ret = args.func(args)
    return int(ret) if ret else 0


if __name__ == "__main__":
    sys.exit(main())
