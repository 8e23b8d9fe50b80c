"""Command-line driver: ``python -m fermiqec <command> --config PATH``.

Configs are INI files with one section named after the command (see
``experiments/``). Lists are comma separated. Every output carries the seed and
a SHA-256 of the resolved config: CSV files start with one ``#`` comment line,
JSON files have ``config_hash`` and ``seed`` fields.

Output schemas::

    pl-sweep   model,c,p,n,T,samples,p_L,stderr,degenerate,seed
    peff       c,p,n,T,samples,p_eff,stderr,slope,slope_err,seed
    decay      model,c,p,d,T,samples,p_L_d,stderr_d,p_L_d2,stderr_d2,lambda,lambda_err,seed
    threshold  JSON {config_hash, seed, fits: [{model,c,p_th,p_th_err,a,b,d,residual,window}]}
    surface    JSON {config_hash, seed, results: [{d,T,p,c,variant,samples,F,F_stderr,A,rho_re,rho_im}]}
    bench      JSON {config_hash, seed, n, p, c, model, samples, fast_ms, naive_ms, ratio}
"""
import argparse
import configparser
import csv
import hashlib
import io
import json
import sys
import time
from typing import Dict, List, Optional

import numpy as np

from .analysis import crossing_window, decay_rate, estimate_peff, fit_threshold, peff_slope
from .circuit import (CIRCUIT_BASED, PHENOMENOLOGICAL, CircuitConfig, _sample_kernel, compile_config,
                      draw_uniforms, estimate_logical_error, sample_stream)
from .errors import FitDiverged, InvalidArgument
from .kraus import NoiseModel

COMMANDS = ("pl-sweep", "threshold", "peff", "decay", "surface", "bench")


# -- config -------------------------------------------------------------------

def _floats(s):
    return [float(x) for x in s.replace("\n", ",").split(",") if x.strip()]


def _ints(s):
    return [int(x) for x in s.replace("\n", ",").split(",") if x.strip()]


def load_config(path: str, command: str) -> Dict[str, str]:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise InvalidArgument(f"cannot read config {path}: {exc}") from exc
    if not cp.has_section(command):
        raise InvalidArgument(f"{path} has no [{command}] section")
    return dict(cp[command])


def config_hash(command: str, cfg: Dict[str, str]) -> str:
    canon = json.dumps({"command": command, **{k: cfg[k] for k in sorted(cfg)}}, sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()


def _model(name):
    name = name.strip().replace("-", "_")
    if name in ("phenomenological", "phen"):
        return PHENOMENOLOGICAL
    if name in ("circuit_based", "circuit"):
        return CIRCUIT_BASED
    raise InvalidArgument(f"unknown model {name!r}")


def _T(cfg, n):
    if "t" not in cfg or cfg["t"].strip() in ("", "n-1"):
        return n - 1
    return int(cfg["t"])


def _require(cfg, *keys):
    for k in keys:
        if k not in cfg:
            raise InvalidArgument(f"config is missing {k!r}")


# -- commands -----------------------------------------------------------------

def sweep_rows(cfg, seed, workers) -> List[dict]:
    _require(cfg, "model", "p", "n", "samples")
    model = _model(cfg["model"])
    samples = int(cfg["samples"])
    if samples < 1:
        raise InvalidArgument("samples must be >= 1")
    weighting = cfg.get("weighting", "uniform")
    rows = []
    for c in _floats(cfg.get("c", "0")):
        for p in _floats(cfg["p"]):
            for n in _ints(cfg["n"]):
                conf = CircuitConfig(model, n, NoiseModel(p, c), _T(cfg, n), weighting)
                est = estimate_logical_error(conf, samples, seed, workers)
                rows.append(dict(model=model, c=c, p=p, n=n, T=conf.T, samples=samples, p_L=est.p_L,
                                 stderr=est.stderr, degenerate=est.degenerate_count, seed=seed))
    return rows


def cmd_pl_sweep(cfg, seed, workers):
    return sweep_rows(cfg, seed, workers)


def cmd_threshold(cfg, seed, workers):
    rows = sweep_rows(cfg, seed, workers)
    rel = float(cfg["window_rel"]) if "window_rel" in cfg else None
    boot = int(cfg.get("bootstrap", "200"))
    fits = []
    for c in sorted({r["c"] for r in rows}):
        data = [(r["p"], r["n"], r["p_L"], max(r["stderr"], 1e-12)) for r in rows if r["c"] == c]
        window = crossing_window(data, rel) if rel else None
        try:
            f = fit_threshold(data, window, bootstrap=boot, seed=seed)
        except FitDiverged as exc:
            fits.append(dict(model=rows[0]["model"], c=c, error=str(exc), diagnostics=exc.diagnostics))
            continue
        fits.append(dict(model=rows[0]["model"], c=c, p_th=f.p_th, p_th_err=f.p_th_err, a=f.a, b=f.b,
                         d=f.d, residual=f.residual, window=list(window) if window else None))
    return {"fits": fits, "sweep": rows}


def cmd_peff(cfg, seed, workers):
    _require(cfg, "p", "n", "samples")
    n = int(cfg["n"])
    samples = int(cfg["samples"])
    rows = []
    for c in _floats(cfg.get("c", "0")):
        group = []
        for p in _floats(cfg["p"]):
            conf = CircuitConfig(CIRCUIT_BASED, n, NoiseModel(p, c), _T(cfg, n))
            est = estimate_peff(conf, samples=samples, seed=seed)
            group.append(dict(c=c, p=p, n=n, T=conf.T, samples=samples, p_eff=est.p_eff, stderr=est.stderr))
        ps = [g["p"] for g in group]
        if len(ps) >= 2 and all(g["stderr"] > 0 for g in group):
            slope, err = peff_slope(ps, [g["p_eff"] for g in group], [g["stderr"] for g in group])
        else:
            slope, err = float("nan"), float("nan")
        for g in group:
            rows.append({**g, "slope": slope, "slope_err": err, "seed": seed})
    return rows


def cmd_decay(cfg, seed, workers):
    _require(cfg, "model", "p", "d", "samples")
    model = _model(cfg["model"])
    samples = int(cfg["samples"])
    rows = []
    for c in _floats(cfg.get("c", "0")):
        for p in _floats(cfg["p"]):
            for d in _ints(cfg["d"]):
                ests = []
                for nn in (d, d + 2):
                    conf = CircuitConfig(model, nn, NoiseModel(p, c), _T(cfg, nn))
                    ests.append(estimate_logical_error(conf, samples, seed, workers))
                a, b = ests
                if a.p_L > 0:
                    lam = decay_rate(a.p_L, b.p_L)
                    lam_err = lam * float(np.hypot(a.stderr / a.p_L, b.stderr / b.p_L if b.p_L > 0 else 0.0))
                else:
                    lam, lam_err = float("nan"), float("nan")
                rows.append(dict(model=model, c=c, p=p, d=d, T=_T(cfg, d), samples=samples, p_L_d=a.p_L,
                                 stderr_d=a.stderr, p_L_d2=b.p_L, stderr_d2=b.stderr, **{"lambda": lam},
                                 lambda_err=lam_err, seed=seed))
    return rows


def cmd_surface(cfg, seed, workers):
    from .surface import SurfaceConfig, run_and_reconstruct

    _require(cfg, "d", "p", "samples")
    samples = int(cfg["samples"])
    variant = cfg.get("variant", "faces")
    out = []
    for d in _ints(cfg["d"]):
        T = int(cfg["t"]) if "t" in cfg else None
        for c in _floats(cfg.get("c", "0")):
            for p in _floats(cfg["p"]):
                conf = SurfaceConfig.uniform(d, p, c, T, variant)
                r = run_and_reconstruct(conf, samples, seed, workers)
                out.append(dict(d=d, T=conf.T, p=p, c=c, variant=variant, samples=samples, F=r.F,
                                F_stderr=r.F_stderr, A=r.A, rho_re=np.real(r.rho).tolist(),
                                rho_im=np.imag(r.rho).tolist(), degenerate=r.degenerate_count))
    return {"results": out}


def bench_times(conf: CircuitConfig, samples: int, seed: int, method: str) -> np.ndarray:
    """Per-sample wall time (s) of schedule build, trajectory and decode."""
    from .decoder import LatticeDecoder

    decoder = LatticeDecoder.for_config(conf)
    rng = sample_stream(seed, 0)
    comp = compile_config(conf, rng)
    _sample_kernel(comp, draw_uniforms(comp, rng), method)  # compile outside the clock
    out = np.empty(samples)
    for k in range(samples):
        t0 = time.perf_counter()
        rng = sample_stream(seed, k)
        comp = compile_config(conf, rng)
        traj = _sample_kernel(comp, draw_uniforms(comp, rng), method)
        decoder.decode(traj.syndromes)
        out[k] = time.perf_counter() - t0
    return out


def cmd_bench(cfg, seed, workers):
    n = int(cfg.get("n", "15"))
    p = float(cfg.get("p", "0.03"))
    c = float(cfg.get("c", "0"))
    model = _model(cfg.get("model", "circuit_based"))
    samples = int(cfg.get("samples", "200"))
    conf = CircuitConfig(model, n, NoiseModel(p, c), _T(cfg, n))
    res = dict(n=n, p=p, c=c, model=model, samples=samples)
    for method in ("fast", "naive"):
        t = bench_times(conf, samples, seed, method) * 1e3
        res[f"{method}_ms"] = dict(mean=float(t.mean()), p50=float(np.percentile(t, 50)),
                                   p90=float(np.percentile(t, 90)), p99=float(np.percentile(t, 99)))
    res["ratio"] = res["naive_ms"]["mean"] / res["fast_ms"]["mean"]
    return res


HANDLERS = {
    "pl-sweep": cmd_pl_sweep,
    "threshold": cmd_threshold,
    "peff": cmd_peff,
    "decay": cmd_decay,
    "surface": cmd_surface,
    "bench": cmd_bench,
}


# -- output -------------------------------------------------------------------

def format_csv(rows: List[dict], command: str, digest: str, seed: int) -> str:
    buf = io.StringIO()
    buf.write(f"# fermiqec {command} config_sha256={digest} seed={seed}\n")
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def format_json(payload: dict, command: str, digest: str, seed: int) -> str:
    return json.dumps({"command": command, "config_hash": digest, "seed": seed, **payload}, indent=2) + "\n"


def run(command: str, cfg: Dict[str, str], seed: int, workers: int = 1) -> str:
    if command not in HANDLERS:
        raise InvalidArgument(f"unknown command {command!r}")
    digest = config_hash(command, cfg)
    result = HANDLERS[command](cfg, seed, workers)
    if isinstance(result, list):
        return format_csv(result, command, digest, seed)
    return format_json(result, command, digest, seed)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fermiqec", description="Fermionic Gaussian QEC simulations.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="INI file with a [%s] section" % name)
        sp.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed (overrides the config)")
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--out", default=None, help="output path (default: stdout)")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.command)
        seed = args.seed if args.seed is not None else int(cfg.get("seed", "0"))
        if not 0 <= seed < 2 ** 64:
            raise InvalidArgument("seed must be an unsigned 64-bit integer")
        if args.workers < 1:
            raise InvalidArgument("workers must be >= 1")
        cfg = {k: v for k, v in cfg.items() if k != "seed"}
        text = run(args.command, cfg, seed, args.workers)
        if args.out:
            try:
                with open(args.out, "w") as fh:
                    fh.write(text)
            except OSError as exc:
                raise InvalidArgument(f"cannot write {args.out}: {exc}") from exc
        else:
            sys.stdout.write(text)
    except (InvalidArgument, FitDiverged, ArithmeticError, RuntimeError) as exc:
        print(f"fermiqec {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
