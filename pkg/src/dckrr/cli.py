"""Command-line front end: ``dckrr sweep|rates|diagnose``.

Configs and manifests are JSON; tabular results are CSV with dot decimal
separators, LF line endings, and 17 significant digits. Every run writes a
``manifest.json`` listing each output file with its SHA-256 hash, the
effective config, the artifact version, and wall time. Exit codes: 0 on
success, 2 on configuration errors, 3 on experiment failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
import time

import numpy as np

from dckrr import __version__, dnc, rates, simlab
from dckrr.spectra import (
    TruncationError,
    truncation_level,
    additive,
    check_prop31_ratio,
    check_tail_sum,
    eval_kernel_K,
    gaussian_rkhs,
    periodic_sobolev,
    spectral_sums,
    thin_plate,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_EXPERIMENT = 3

CSV_HEADER = "N,rho,s,n,lambda,mse_mean,mse_stderr,reject_rate,reject_stderr,reps,dropped"


class ConfigError(ValueError):
    pass


def _fmt(x: float) -> str:
    """Locale-independent float with 17 significant digits."""
    return format(float(x), ".17g")


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir: str, config: dict, outputs: list[str], seed: int, t0: float) -> None:
    manifest = {
        "version": __version__,
        "config": config,
        "seed": seed,
        "wall_time_seconds": time.perf_counter() - t0,
        "outputs": {
            os.path.basename(p): {"sha256": _sha256(p)} for p in outputs
        },
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


PRESETS = {
    "spline-fig1": {
        "model": "spline1d",
        "c": 1.0,
        "N_list": [512, 1024, 2048, 4096, 8192],
        "rho_list": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8],
        "replications": 50,
        "lambda": {"source": "rates", "task": "estimation"},
    },
    "additive-fig2": {
        "model": "additive2d",
        "c": 1.0,
        "N_list": [512, 1024, 2048, 4096, 8192],
        "rho_list": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8],
        "replications": 50,
        "lambda": {"source": "rates", "task": "estimation"},
    },
}
PAPER_SCALE_REPS = {"spline-fig1": 100, "additive-fig2": 100}


def _load_config(args) -> dict:
    if args.preset:
        if args.preset not in PRESETS:
            raise ConfigError(f"unknown preset {args.preset!r}")
        cfg = json.loads(json.dumps(PRESETS[args.preset]))  # deep copy
        if args.paper_scale:
            cfg["replications"] = PAPER_SCALE_REPS[args.preset]
    elif args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    else:
        raise ConfigError("one of --config or --preset is required")
    if args.seed is not None:
        cfg["base_seed"] = args.seed
    if args.workers is not None:
        cfg["workers"] = args.workers
    return cfg


def _sweep_config(cfg: dict) -> simlab.SweepConfig:
    lam = cfg.get("lambda", {"source": "rates", "task": "testing"})
    sig = cfg.get("sigma2", {"mode": "known", "value": 1.0})
    try:
        return simlab.SweepConfig(
            model=cfg.get("model", "spline1d"),
            c=float(cfg.get("c", 1.0)),
            N_list=tuple(int(N) for N in cfg.get("N_list", [1024])),
            rho_list=tuple(float(r) for r in cfg.get("rho_list", [0.3])),
            replications=int(cfg.get("replications", 50)),
            alpha=float(cfg.get("alpha", 0.05)),
            lambda_source=lam.get("source", "rates"),
            lambda_task=lam.get("task", "testing"),
            lambda_value=lam.get("value"),
            sigma2_mode=sig.get("mode", "known"),
            sigma2_value=float(sig.get("value", 1.0)),
            base_seed=int(cfg.get("base_seed", 0)),
            solve_path=cfg.get("solve_path", "truncated_feature"),
            workers=int(cfg.get("workers", 1)),
            m=int(cfg.get("m", 2)),
            grid_size=cfg.get("grid_size"),
        )
    except (TypeError, ValueError, AttributeError) as exc:
        raise ConfigError(str(exc)) from exc


def cmd_sweep(args) -> int:
    t0 = time.perf_counter()
    try:
        raw = _load_config(args)
        cfg = _sweep_config(raw)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = simlab.run_sweep(cfg)
    except (simlab.SweepError, TruncationError) as exc:
        print(f"experiment failure: {exc}", file=sys.stderr)
        return EXIT_EXPERIMENT
    os.makedirs(args.out, exist_ok=True)
    csv_path = os.path.join(args.out, "sweep.csv")
    with open(csv_path, "w", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for cell in result.cells:
            fh.write(
                ",".join(
                    [
                        str(cell.N),
                        _fmt(cell.rho),
                        str(cell.s),
                        str(cell.n),
                        _fmt(cell.lam),
                        _fmt(cell.mse_mean),
                        _fmt(cell.mse_stderr),
                        _fmt(cell.reject_rate),
                        _fmt(cell.reject_stderr),
                        str(cell.reps),
                        str(cell.dropped),
                    ]
                )
                + "\n"
            )
    _write_manifest(args.out, dataclasses.asdict(cfg), [csv_path], cfg.base_seed, t0)
    print(f"wrote {csv_path} ({len(result.cells)} rows)")
    return EXIT_OK


def cmd_rates(args) -> int:
    try:
        rx = rates.prescribe(args.family, args.m, args.d, args.N, args.task)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rho = math.log(rx.s_max) / math.log(args.N)
    print("family,task,m,d,N,lambda,s_max,rho_max,rate")
    print(
        f"{rx.family},{rx.task},{rx.m},{rx.d},{rx.N},"
        f"{_fmt(rx.lam)},{rx.s_max},{_fmt(rho)},{_fmt(rx.rate)}"
    )
    if rx.exponents:
        exps = " ".join(f"{k}={_fmt(v)}" for k, v in sorted(rx.exponents.items()))
        print(f"# exponents: {exps}")
    for msg in rx.warnings:
        print(f"# warning: {msg}")
    return EXIT_OK


def _diag_spectrum(cfg: dict, lam_grid: list[float]):
    fam = cfg.get("family", "spline")
    m = int(cfg.get("m", 2))
    d = int(cfg.get("d", 1))
    if "M" in cfg:
        M = int(cfg["M"])
    elif fam in ("spline", "periodic_sobolev", "additive"):
        # resolve the finest lambda in the grid
        M = truncation_level(m, min(lam_grid), rates.leading_eigenvalue("spline", m), d)
    else:
        M = 64
    if fam in ("spline", "periodic_sobolev"):
        return periodic_sobolev(m, M=M)
    if fam == "additive":
        return additive(m, d, M=M)
    if fam in ("gaussian", "gaussian_rkhs"):
        return gaussian_rkhs(d, float(cfg.get("scale", 1.0)), M=M)
    if fam == "thin_plate":
        return thin_plate(m, d, M=M)
    raise ConfigError(f"unknown family {fam!r}")


def cmd_diagnose(args) -> int:
    t0 = time.perf_counter()
    try:
        raw = _load_config(args) if (args.config or args.preset) else {}
        lam_grid = [float(x) for x in raw.get("lambda_grid", [1e-2, 1e-3, 1e-4, 1e-5, 1e-6])]
        spec = _diag_spectrum(raw.get("spectrum", {}), lam_grid)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report: dict = {
        "family": spec.family,
        "m": spec.m,
        "d": spec.d,
        "M": spec.M,
        "tail_sum_sup": check_tail_sum(spec),
        "prop31_ratios": dict(
            zip(map(_fmt, lam_grid), map(float, check_prop31_ratio(spec, lam_grid)))
        ),
    }
    if spec.has_eigenfunctions:
        lam0 = lam_grid[0]
        grid = (np.arange(256) + 0.5) / 256
        pts = grid.reshape(-1, 1) if spec.d == 1 else np.column_stack([grid] * spec.d)
        kxx = max(eval_kernel_K(spec, lam0, p, p) for p in pts)
        report["kernel_bound"] = {
            "lambda": lam0,
            "max_K_xx": kxx,
            "h_inv": spectral_sums(spec, lam0).h_inv,
            "ok": kxx <= 2.0 * spectral_sums(spec, lam0).h_inv,
        }
    if raw.get("xi"):
        if not spec.has_eigenfunctions:
            print(
                f"unsupported: xi diagnostic unavailable for {spec.family}",
                file=sys.stderr,
            )
            return EXIT_CONFIG
        xi_cfg = raw["xi"]
        N = int(xi_cfg.get("N", 1024))
        s = int(xi_cfg.get("s", 4))
        lam = float(xi_cfg.get("lambda", lam_grid[0]))
        seed = int(xi_cfg.get("seed", 0))
        model = "spline1d" if spec.d == 1 else "additive2d"
        data = simlab.generate(model, N, seed, c=0.0)
        part = dnc.partition(data, s, seed)
        xis = dnc.xi_diagnostic(spec, data, part, lam)
        report["xi"] = {
            "N": N,
            "s": s,
            "lambda": lam,
            "max": float(np.max(xis)),
            "median": float(np.median(xis)),
        }
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "diagnostics.json")
    with open(path, "w", newline="\n") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(args.out, raw, [path], int(raw.get("base_seed", 0)), t0)
    print(f"wrote {path}")
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="path to a JSON config")
    p.add_argument("--preset", help="named preset (spline-fig1, additive-fig2)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--workers", type=int, default=None, help="worker pool width")
    p.add_argument("--seed", type=int, default=None, help="override base seed")
    p.add_argument("--paper-scale", action="store_true", help="full replication counts")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dckrr", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run a replicated (N, rho) experiment grid")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("rates", help="print tuning-rule prescriptions")
    p.add_argument("--family", required=True, choices=list(rates.FAMILIES))
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--task", default="estimation", choices=list(rates.TASKS))
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("diagnose", help="spectral and empirical-process diagnostics")
    _add_common(p)
    p.set_defaults(func=cmd_diagnose)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
