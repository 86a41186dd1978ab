"""Command-line interface: ``portsolve solve|vdp|check|replay``.

Exit codes: 0 success, 1 bad input (parse or validation error), 2 solver
failure (divergence), 3 no convergence within the iteration cap or a
trivial oscillator solution, 4 monotonicity violation.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from portsolve import circuit as ckt
from portsolve import mixed
from portsolve import netlist as nl
from portsolve import operators as ops
from portsolve.errors import NonFinite, PortsolveError, TrivialFixedPoint
from portsolve.signal import write_csv
from portsolve.splitting import Sinusoid, SolverConfig, initial_signal

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_NOCONV, EXIT_MONOTONE = 0, 1, 2, 3, 4


@dataclass
class RunManifest:
    command: str
    input: str
    config: dict
    solver: str
    outputs: dict
    iterations: int
    converged: bool
    duration_s: float
    params: dict = field(default_factory=dict)

    def write(self, path):
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")

    @classmethod
    def read(cls, path):
        return cls(**json.loads(Path(path).read_text()))


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _config_dict(cfg: SolverConfig) -> dict:
    init = cfg.init
    if isinstance(init, Sinusoid):
        init = {"sinusoid": {"amplitude": init.amplitude, "harmonics": list(init.harmonics)}}
    elif not isinstance(init, (str, int, float)):
        init = repr(init)
    return {"alpha": list(cfg.alphas), "epsilon": cfg.epsilon, "max_iter": cfg.max_iter, "init": init}


def _write_residuals(path, residuals):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "residual"])
        for j, r in enumerate(residuals, start=1):
            w.writerow([j, repr(float(r))])


def _summary(res) -> str:
    return f"converged={str(res.converged).lower()} iters={res.iterations} residual={res.fixed_point_residual:.6g}"


def _err(msg):
    print(f"portsolve: {msg}", file=sys.stderr)


# solve

def cmd_solve(args) -> int:
    path = Path(args.netlist)
    try:
        doc = nl.load(path)
    except nl.NetlistError as exc:
        _err(f"{path}:{exc.line}:{exc.column}: {exc.message}")
        return EXIT_INPUT
    except OSError as exc:
        _err(str(exc))
        return EXIT_INPUT

    outdir = Path(args.outdir) if args.outdir else path.parent
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        cfg = nl.build_config(doc)
        if isinstance(doc.topology, nl.MixedTopology):
            problem = nl.build_mixed(doc, base_dir=path.parent)
            x1 = initial_signal(cfg.init, *problem.grid)
            solver = "mmdr"
            run = lambda: mixed.mmdr(problem, x1, cfg)  # noqa: E731
        else:
            tree = nl.build_tree(doc)
            drive = nl.build_drive(doc, base_dir=path.parent)
            solver = "naive" if args.naive else "nested"
            fn = ckt.solve_naive if args.naive else ckt.solve_nested
            run = lambda: fn(tree, drive, cfg)  # noqa: E731
    except (nl.NetlistError, OSError, ValueError) as exc:
        _err(str(exc))
        return EXIT_INPUT

    t0 = time.perf_counter()
    try:
        res = run()
    except NonFinite as exc:
        _err(f"solver diverged: {exc}")
        return EXIT_SOLVER
    except PortsolveError as exc:
        _err(f"solver failed: {type(exc).__name__}: {exc}")
        return EXIT_SOLVER
    duration = time.perf_counter() - t0

    out_csv = outdir / f"{path.stem}_out.csv"
    res_csv = outdir / f"{path.stem}_residuals.csv"
    write_csv(out_csv, res.solution)
    _write_residuals(res_csv, res.residuals)
    RunManifest(
        command="solve",
        input=str(path),
        config=_config_dict(cfg),
        solver=solver,
        outputs={str(p.name): _sha256(p) for p in (out_csv, res_csv)},
        iterations=res.iterations,
        converged=bool(res.converged),
        duration_s=duration,
        params={"naive": bool(args.naive)},
    ).write(outdir / f"{path.stem}_out.json")
    print(_summary(res))
    return EXIT_OK if res.converged else EXIT_NOCONV


# vdp

def _mu_tag(mu: float) -> str:
    return f"{mu:g}"


def _vdp_one(mu, args, outdir):
    params = mixed.VdpParams(mu=mu, period_T=args.period, n_samples=args.steps)
    cfg = SolverConfig(alpha=args.alpha, epsilon=args.eps, max_iter=args.max_iter, init=Sinusoid(2.0))
    t0 = time.perf_counter()
    params = params.resolved()
    if args.scan_period:
        params = mixed.VdpParams(mu, mixed.scan_period(params, cfg), args.steps)
    out_csv = outdir / f"vdp_{_mu_tag(mu)}.csv"
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TrivialFixedPoint)
        res = mixed.vdp_solve(params, cfg, csv_path=out_csv)
    duration = time.perf_counter() - t0
    RunManifest(
        command="vdp",
        input="",
        config=_config_dict(cfg),
        solver="mmdr",
        outputs={out_csv.name: _sha256(out_csv)},
        iterations=res.iterations,
        converged=bool(res.converged),
        duration_s=duration,
        params={"mu": mu, "period_T": params.period_T, "n_samples": params.n_samples},
    ).write(out_csv.with_suffix(".json"))
    return res, out_csv


def _write_gnuplot(outdir, csvs):
    lines = ["set datafile separator ','", "set xlabel 'Time t'", "set ylabel 'Voltage v'", "plot \\"]
    plots = [f"  '{p.name}' using 1:2 every ::1 with lines title '{p.stem}'" for p in csvs]
    lines.append(", \\\n".join(plots))
    (outdir / "vdp.gp").write_text("\n".join(lines) + "\n")


def cmd_vdp(args) -> int:
    try:
        if not args.eps > 0:
            raise ValueError(f"--eps must be positive, got {args.eps}")
        if not args.alpha > 0:
            raise ValueError(f"--alpha must be positive, got {args.alpha}")
        if args.steps < 2:
            raise ValueError(f"--steps must be at least 2, got {args.steps}")
        if args.max_iter < 1:
            raise ValueError(f"--max-iter must be at least 1, got {args.max_iter}")
        if any(not m > 0 for m in args.mu):
            raise ValueError("--mu values must be positive")
        if args.period is not None and not args.period > 0:
            raise ValueError(f"--period must be positive, got {args.period}")
    except ValueError as exc:
        _err(str(exc))
        return EXIT_INPUT

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    workers = int(os.environ.get("PORTSOLVE_THREADS", len(args.mu)) or 1)
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = [pool.submit(_vdp_one, mu, args, outdir) for mu in args.mu]
        code = EXIT_OK
        csvs = []
        for mu, fut in zip(args.mu, futures):
            try:
                res, path = fut.result()
            except NonFinite as exc:
                _err(f"mu={mu:g}: solver diverged: {exc}")
                code = max(code, EXIT_SOLVER)
                continue
            except PortsolveError as exc:
                _err(f"mu={mu:g}: solver failed: {exc}")
                code = max(code, EXIT_SOLVER)
                continue
            csvs.append(path)
            peak = float(np.max(np.abs(res.solution.samples)))
            print(f"mu={mu:g} T={res.info['period_T']:.6g} {_summary(res)} peak={peak:.4f} -> {path}")
            if res.info["trivial"]:
                _err(f"mu={mu:g}: trivial fixed point (solution collapsed to zero)")
                code = max(code, EXIT_NOCONV)
            elif not res.converged:
                code = max(code, EXIT_NOCONV)
    if args.gnuplot and csvs:
        _write_gnuplot(outdir, csvs)
    return code


# check

def cmd_check(args) -> int:
    path = Path(args.netlist)
    try:
        doc = nl.load(path)
    except nl.NetlistError as exc:
        _err(f"{path}:{exc.line}:{exc.column}: {exc.message}")
        return EXIT_INPUT
    except OSError as exc:
        _err(str(exc))
        return EXIT_INPUT

    roles = nl.element_roles(doc)
    n, T = doc.space.n, doc.space.period_T
    failed = False
    for name in doc.names:
        op = nl.build_operator(doc, name)
        role = roles[name]
        probe = ops.Negated(op) if role == "anti-monotone" else op
        sampler = ops.default_sampler(op, n, T)
        rep = ops.check_monotone(probe, sampler, trials=args.trials)
        ok = rep.monotone or role == "unused"
        failed |= not ok
        print(f"{name}: declared={role} pairs={rep.tested_pairs} min_pairing={rep.min_pairing:.6g} "
              f"verdict={rep.verdict} inconclusive={rep.inconclusive} {'ok' if ok else 'FAIL'}")
    return EXIT_MONOTONE if failed else EXIT_OK


# replay

def cmd_replay(args) -> int:
    m = RunManifest.read(args.manifest)
    outdir = Path(args.outdir)
    if m.command == "solve":
        ns = argparse.Namespace(netlist=m.input, naive=m.params.get("naive", False), outdir=str(outdir))
        code = cmd_solve(ns)
    elif m.command == "vdp":
        cfg = m.config
        ns = argparse.Namespace(mu=[m.params["mu"]], alpha=cfg["alpha"][0], eps=cfg["epsilon"],
                                steps=m.params["n_samples"], period=m.params["period_T"],
                                scan_period=False, max_iter=cfg["max_iter"], outdir=str(outdir),
                                gnuplot=False)
        code = cmd_vdp(ns)
    else:
        _err(f"unknown command {m.command!r} in manifest")
        return EXIT_INPUT
    same = all((outdir / name).exists() and _sha256(outdir / name) == digest
               for name, digest in m.outputs.items())
    print(f"identical={str(same).lower()}")
    return code if same else max(code, EXIT_SOLVER)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="portsolve", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve a netlist")
    s.add_argument("netlist")
    s.add_argument("--naive", action="store_true", help="use the double-loop reference solver for trees")
    s.add_argument("--outdir", default=None, help="output directory (default: next to the netlist)")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("vdp", help="periodic van der Pol steady states for one or more mu")
    v.add_argument("--mu", type=float, nargs="+", default=[0.0002, 1.5, 10.0])
    v.add_argument("--alpha", type=float, default=0.05)
    v.add_argument("--eps", type=float, default=0.01)
    v.add_argument("--steps", type=int, default=5000)
    v.add_argument("--period", type=float, default=None, help="period T (default: RK4 estimate per mu)")
    v.add_argument("--scan-period", action="store_true", help="refine T by minimizing the residual")
    v.add_argument("--max-iter", type=int, default=10_000)
    v.add_argument("--outdir", default=".")
    v.add_argument("--gnuplot", action="store_true", help="also write vdp.gp")
    v.set_defaults(func=cmd_vdp)

    c = sub.add_parser("check", help="audit element monotonicity by sampling")
    c.add_argument("netlist")
    c.add_argument("--trials", type=int, default=200)
    c.set_defaults(func=cmd_check)

    r = sub.add_parser("replay", help="re-run a manifest and compare outputs")
    r.add_argument("manifest")
    r.add_argument("--outdir", default=".")
    r.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
