"""Command-line entry point: `maxindep <command> [options]`.

Exit codes: 0 success, 1 usage error, 2 failed verification (JSON report on stdout).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Callable

import numpy as np

from .config import (COMMANDS, FAMILIES, SAMPLE_KINDS, SUITES, TW2_METHODS, ConfigError, RunConfig,
                     build_config, load_config_file)

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2


# ---------------------------------------------------------------- output

def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _emit(cfg: RunConfig, text: str):
    if cfg.out in ("-", ""):
        sys.stdout.write(text)
    else:
        with open(cfg.out, "w") as fh:
            fh.write(text)


def _emit_table(cfg: RunConfig, header, rows):
    if cfg.format == "json":
        _emit(cfg, json.dumps([_jsonable(dict(zip(header, r))) for r in rows], indent=1) + "\n")
    else:
        _emit(cfg, csv_text(header, rows))


def _pmap(fn: Callable, items, jobs: int):
    """Ordered map, optionally over a process pool; output order never depends on jobs."""
    items = list(items)
    if jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------- pointwise workers (picklable)

def _tw2_fredholm(s):
    from .fredholm import airy_operator, fredholm_det
    return fredholm_det(airy_operator(s))


def _tw2_classical(s):
    from .painleve import tw2_cdf_classical
    return tw2_cdf_classical(s)


def _tw2_new(s):
    from .painleve import tw2_cdf_new
    return tw2_cdf_new(s)


def _tw1(args):
    from .airy_flow import tw1_cdf
    s, route = args
    return tw1_cdf(s, route)


def _kpz_det(args):
    from .airy_flow import KpzParams, kpz_kernel
    from .fredholm import fredholm_det
    s, t = args
    return fredholm_det(kpz_kernel(s, KpzParams(t)))


# ---------------------------------------------------------------- commands

def cmd_tw2(cfg: RunConfig) -> int:
    s = cfg.s_values()
    if cfg.method == "max-product":
        from .airy_flow import build_eigenflow, extended_s_grid, law_zk_prime
        from .laws import product_cdf
        flow = build_eigenflow(extended_s_grid(cfg.k_max), cfg.k_max, jobs=cfg.jobs)
        laws = [law_zk_prime(flow, k) for k in range(1, cfg.k_max + 1)]
        vals = [float(product_cdf(laws, v)) for v in s]
    else:
        fn = {"fredholm": _tw2_fredholm, "painleve-classical": _tw2_classical, "painleve-new": _tw2_new}[cfg.method]
        vals = _pmap(fn, s, cfg.jobs)
    _emit_table(cfg, ["s", "value"], list(zip(s, vals)))
    return EXIT_OK


def cmd_tw1(cfg: RunConfig) -> int:
    s = cfg.s_values()
    vals = _pmap(_tw1, [(v, cfg.route) for v in s], cfg.jobs)
    _emit_table(cfg, ["s", "value"], list(zip(s, vals)))
    return EXIT_OK


def cmd_kpz(cfg: RunConfig) -> int:
    s = cfg.s_values()
    if cfg.method == "max-product":
        from .airy_flow import KpzParams, kpz_max_laws, kpz_s_grid
        from .laws import product_cdf
        p = KpzParams(cfg.t)
        _, laws = kpz_max_laws(p, kpz_s_grid(p, lo=None), cfg.k_max, jobs=cfg.jobs)
        vals = [float(product_cdf(laws, v)) for v in s]
    else:
        vals = _pmap(_kpz_det, [(v, cfg.t) for v in s], cfg.jobs)
    _emit_table(cfg, ["s", "value"], list(zip(s, vals)))
    return EXIT_OK


def cmd_gue_extreme(cfg: RunConfig) -> int:
    from . import ortho
    if not cfg.validate:
        s = cfg.s_values()
        vals = [ortho.gue_extreme_cdf(cfg.n, v, cfg.side) for v in s]
        _emit_table(cfg, ["s", "value"], list(zip(s, vals)))
        return EXIT_OK
    from .sampler import EmpiricalCdf, Rng, ks_distance, ks_threshold, sample_gue_spectra
    law = ortho.gue_extreme_law(cfg.n, cfg.side)
    ev = sample_gue_spectra(cfg.n, cfg.samples, Rng(cfg.seed))
    x = ev[:, -1] if cfg.side == "max" else ev[:, 0]
    ks = ks_distance(EmpiricalCdf(x), law.cdf)
    return _report(cfg, f"gue-extreme-{cfg.side}", {"ks": ks, "N": cfg.n, "samples": cfg.samples},
                   {"ks": ks_threshold(cfg.samples)}, ks <= ks_threshold(cfg.samples))


def cmd_laws(cfg: RunConfig) -> int:
    from . import airy_flow as af
    from . import ortho, schur
    fam, k = cfg.family, cfg.k
    if fam in ("airy", "airy-varying"):
        flow = af.build_eigenflow(af.extended_s_grid(max(k, 1)), max(k, 1), jobs=cfg.jobs)
        law = af.law_zk_prime(flow, k) if fam == "airy" else af.law_zk_ter(flow, k)
    elif fam == "kpz":
        p = af.KpzParams(cfg.t)
        _, laws = af.kpz_max_laws(p, af.kpz_s_grid(p, lo=None), max(k, 1), jobs=cfg.jobs)
        law = laws[k - 1]
    elif fam == "gue":
        law = ortho.law_w(k, cfg.side)
    elif fam == "circle":
        law = ortho.partial_arc_circle_law(ortho.cue_weight, k)
    elif fam == "popl":
        law = schur.law_z_popl(cfg.xi)
    else:
        st = schur.opuc_from_weight(schur.SchurWeight(tuple(_alphabet(cfg.alphabet))))
        q = np.array([st.q(j) for j in range(st.n + 1)])
        _emit_table(cfg, ["k", "q"], list(zip(range(st.n + 1), q)))
        return EXIT_OK
    if cfg.format == "json":
        _emit(cfg, json.dumps({"name": law.name, "s": law.grid.tolist(), "cdf": law.cdf_values.tolist()}) + "\n")
    else:
        _emit(cfg, law.to_csv())
    return EXIT_OK


def _alphabet(text: str):
    """JSON list of letters; complex letters as [re, im] pairs."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"alphabet is not valid JSON: {exc}") from exc
    out = []
    for a in raw:
        out.append(complex(a[0], a[1]) if isinstance(a, list) else complex(a))
    return out


def cmd_popl(cfg: RunConfig) -> int:
    from . import schur
    st = schur.opuc_from_weight(schur.Plancherel(cfg.xi))
    if cfg.validate:
        return _popl_validate(cfg, st)
    if cfg.n:
        _emit_table(cfg, ["N", "value"], [(N, schur.popl_max_cdf(cfg.xi, N, st)) for N in range(cfg.n + 1)])
    else:
        rows = [(k, float(np.real(st.alpha[k])) if k < st.n else 0.0, st.q(k)) for k in range(st.n + 1)]
        _emit_table(cfg, ["k", "alpha", "q"], rows)
    return EXIT_OK


def _popl_validate(cfg, st) -> int:
    from . import schur
    from .sampler import EmpiricalCdf, Rng, ks_distance, ks_threshold, sample_plancherel_first_rows
    rows = sample_plancherel_first_rows(cfg.xi, cfg.samples, Rng(cfg.seed))
    ks = ks_distance(EmpiricalCdf(rows), lambda u: np.array([schur.popl_max_cdf(cfg.xi, int(v), st) for v in u]),
                     discrete=True)
    return _report(cfg, "popl-rsk", {"ks": ks, "xi": cfg.xi}, {"ks": ks_threshold(cfg.samples)},
                   ks <= ks_threshold(cfg.samples))


def cmd_schur(cfg: RunConfig) -> int:
    from . import schur
    w = schur.SchurWeight(tuple(_alphabet(cfg.alphabet)))
    st = schur.opuc_from_weight(w)
    rows = [(N, schur.schur_max_cdf(w, N, st)) for N in range(cfg.n + 1)]
    _emit_table(cfg, ["N", "value"], rows)
    return EXIT_OK


def cmd_sample(cfg: RunConfig) -> int:
    from . import sampler as sm
    rng = sm.Rng(cfg.seed)
    if cfg.kind == "gue":
        ev = sm.sample_gue_spectra(cfg.n, cfg.samples, rng)
        x = ev[:, -1] if cfg.side == "max" else ev[:, 0]
    elif cfg.kind == "cue":
        x = sm.sample_cue_angles_batch(cfg.n, cfg.samples, rng)[:, -1]
    elif cfg.kind == "popl":
        x = sm.sample_plancherel_first_rows(cfg.xi, cfg.samples, rng)
    elif cfg.kind == "gamma":
        x = sm.sample_gamma_maxima(cfg.n, cfg.samples, rng)
    else:
        x = sm.sample_geometric_sums(_alphabet(cfg.alphabet), cfg.samples, rng)
    _emit(cfg, sm.EmpiricalCdf(x).to_csv())
    return EXIT_OK


def _report(cfg: RunConfig, suite: str, metrics: dict, tolerances: dict, ok: bool) -> int:
    rep = {"suite": suite, "metrics": _jsonable(metrics), "tolerances": _jsonable(tolerances), "pass": bool(ok)}
    _emit(cfg, json.dumps(rep, indent=1) + "\n")
    return EXIT_OK if ok else EXIT_FAIL


def _jsonable(d):
    if isinstance(d, dict):
        return {k: _jsonable(v) for k, v in d.items()}
    if isinstance(d, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in d]
    if isinstance(d, (bool, np.bool_)):
        return bool(d)
    if isinstance(d, (int, np.integer)):
        return int(d)
    if isinstance(d, (float, np.floating)):
        return float(d)
    return d


def cmd_verify(cfg: RunConfig) -> int:
    from . import suites
    metrics, tolerances, ok = suites.SUITES[cfg.suite](cfg)
    return _report(cfg, cfg.suite, metrics, tolerances, ok)


HANDLERS = {"tw2": cmd_tw2, "tw1": cmd_tw1, "kpz": cmd_kpz, "gue-extreme": cmd_gue_extreme, "laws": cmd_laws,
            "popl": cmd_popl, "schur": cmd_schur, "verify": cmd_verify, "sample": cmd_sample}


# ---------------------------------------------------------------- argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="maxindep", description="Max-independence laws of random-matrix and growth-model extremes.")
    p.add_argument("--config", help="key=value file presetting any option")
    sub = p.add_subparsers(dest="command")

    def common(sp):
        sp.add_argument("--s", type=float)
        sp.add_argument("--s-min", dest="s_min", type=float)
        sp.add_argument("--s-max", dest="s_max", type=float)
        sp.add_argument("--s-step", dest="s_step", type=float)
        sp.add_argument("--k-max", dest="k_max", type=int)
        sp.add_argument("--jobs", type=int)
        sp.add_argument("--precision", choices=("double", "extended"))
        sp.add_argument("--out")
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("--seed", type=int)
        sp.add_argument("--samples", type=int)
        sp.add_argument("--validate", action="store_const", const=True)
        return sp

    common(sub.add_parser("tw2")).add_argument("--method", choices=TW2_METHODS)
    common(sub.add_parser("tw1")).add_argument("--route", choices=("ferrari_spohn", "sqrt_formula"))
    kp = common(sub.add_parser("kpz"))
    kp.add_argument("--t", type=float)
    kp.add_argument("--method", choices=("fredholm", "max-product"))
    gp = common(sub.add_parser("gue-extreme"))
    gp.add_argument("--n", type=int)
    gp.add_argument("--side", choices=("max", "min"))
    lp = common(sub.add_parser("laws"))
    lp.add_argument("--family", choices=FAMILIES)
    lp.add_argument("--k", type=int)
    lp.add_argument("--t", type=float)
    lp.add_argument("--xi", type=float)
    lp.add_argument("--side", choices=("max", "min"))
    lp.add_argument("--alphabet")
    pp = common(sub.add_parser("popl"))
    pp.add_argument("--xi", type=float)
    pp.add_argument("--n", type=int)
    sp = common(sub.add_parser("schur"))
    sp.add_argument("--alphabet")
    sp.add_argument("--n", type=int)
    vp = common(sub.add_parser("verify"))
    vp.add_argument("--suite", choices=SUITES, required=True)
    mp = common(sub.add_parser("sample"))
    mp.add_argument("--kind", choices=SAMPLE_KINDS)
    mp.add_argument("--n", type=int)
    mp.add_argument("--xi", type=float)
    mp.add_argument("--side", choices=("max", "min"))
    mp.add_argument("--alphabet")
    return p


def parse(argv) -> RunConfig:
    ns = make_parser().parse_args(argv)
    if ns.command is None:
        raise ConfigError(f"a command is required: {', '.join(COMMANDS)}")
    values = {k: v for k, v in vars(ns).items() if k != "config"}
    file_values = load_config_file(ns.config) if ns.config else {}
    if ns.command == "popl" and ns.n is None and "n" not in file_values:
        values["n"] = 0  # default popl output is the (k, alpha, q) table
    return build_config(file_values, values)


def run(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse(argv)
    except (ConfigError, OSError) as exc:
        sys.stderr.write(f"maxindep: {exc}\n")
        return EXIT_USAGE
    saved = os.environ.get("MAXINDEP_PRECISION")
    os.environ["MAXINDEP_PRECISION"] = cfg.precision
    try:
        return HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        sys.stderr.write(f"maxindep: {exc}\n")
        return EXIT_USAGE
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        rep = {"suite": cfg.command, "metrics": {}, "tolerances": {}, "pass": False,
               "error": f"{type(exc).__name__}: {exc}"}
        sys.stdout.write(json.dumps(rep, indent=1) + "\n")
        return EXIT_FAIL
    finally:
        if saved is None:
            os.environ.pop("MAXINDEP_PRECISION", None)
        else:
            os.environ["MAXINDEP_PRECISION"] = saved


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
