"""Command-line front end: ``psido <command> [flags]``.

Every command writes a JSON report (schema ``psido-report/1``) that echoes
the full configuration.  Exit codes: 0 pass, 2 fail, 1 usage or config error.
"""
from __future__ import annotations

import argparse
import re
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import fieldio
from .calculus import TEXT_CAP, adjoint_symbol, compose_symbols, parametrix, remainder_decay_probe
from .config import ConfigError, RunConfig, load_config
from .errors import PsidoError
from .garding import GARDING_GRID, default_battery, garding_fit, sg_garding_fit
from .probes import (RescaleParams, apply_R, apply_R_inverse, concentration_probe,
                     conjugate_order_reduction, decay_exponent_probe, default_t,
                     weak_decay_probe)
from .quantize import (GridSpec, apply_op, dense_matrix, extract_symbol, gaussian)
from .report import dumps, make_report
from .spaces import NormSpec, lp_norm, sobolev_norm
from .symclass import (EllipticityCertificate, Witness, certify_elliptic, check_class,
                       fit_lower_bound)
from .symexpr import node_count, to_text, tree_size
from .weights import check_weight

__all__ = ["COMMANDS", "expand_list", "run", "main", "emit_battery_fields"]

def expand_list(text) -> list:
    """'4,8,...,1024' expands geometrically from the first two terms; plain lists pass."""
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    if "..." not in parts:
        return [float(p) for p in parts]
    i = parts.index("...")
    if i < 2 or i != len(parts) - 2:
        raise ValueError(f"cannot expand {text!r}: use a,b,...,c")
    head = [float(p) for p in parts[:i]]
    a, b, end = head[-2], head[-1], float(parts[-1])
    if a <= 0 or b <= a or end < b:
        raise ValueError(f"cannot expand {text!r}: need 0 < a < b <= c")
    r = b / a
    out = list(head)
    v = b * r
    while v <= end * (1 + 1e-12):
        out.append(v)
        v *= r
    return out


# ---------------------------------------------------------------------------
# commands: each takes (config, params) and returns (result, verdict)

def _sym(cfg: RunConfig, p: dict, key="symbol", order="order"):
    if key not in p:
        raise ConfigError(f"--{key} is required")
    return cfg.symbol(p[key], p.get(order), p.get("rho"), p.get("weight"), p.get("xweight"))


def _expr_text(e, dim) -> dict:
    size = tree_size(e)
    return {"nodes": node_count(e), "tree_size": size,
            "text": to_text(e, dim) if size <= TEXT_CAP else None}


def cmd_check_weight(cfg, p):
    dim = int(p.get("dim", cfg.grid.get("dim", 1)))
    w = cfg.weight(p.get("weight", "bracket"), dim)
    radii = expand_list(p.get("radii", "4,8,...,1024"))
    rep = check_weight(w, radii, int(p.get("max_deriv", 2)), dim, float(p.get("tol", 0.1)))
    return {"weight": w.name, "expr": w.text, "dim": dim, "report": rep}, rep.verdict


def cmd_check_symbol(cfg, p):
    s = _sym(cfg, p)
    rep = check_class(s, int(p.get("maxord", 3)), tol=float(p.get("tol", 0.1)),
                      mclass=not p.get("s_only", False))
    return {"descriptor": s, "class_report": rep}, rep.verdict


def cmd_certify(cfg, p):
    s = _sym(cfg, p)
    radii = expand_list(p["radii"]) if "radii" in p else None
    res = certify_elliptic(s, p.get("kind", "M-elliptic"), radii)
    ok = isinstance(res, EllipticityCertificate)
    return {"descriptor": s, "certificate": res if ok else None,
            "witness": res if not ok else None}, "pass" if ok else "fail"


def cmd_fit_eta_kappa(cfg, p):
    s = _sym(cfg, p)
    lb = fit_lower_bound(s)
    return {"descriptor": s, "lower_bound": lb}, "pass"


def cmd_quantize(cfg, p):
    s = _sym(cfg, p)
    for k in ("in", "out"):
        if k not in p:
            raise ConfigError(f"--{k} is required")
    u = fieldio.load_field(p["in"])
    v = apply_op(s, u, with_evaluator=False)
    fieldio.save_field(v, p["out"])
    return {"descriptor": s, "grid": u.grid, "in": p["in"], "out": p["out"],
            "norm_in": lp_norm(u), "norm_out": lp_norm(v)}, "info"


def cmd_compose(cfg, p):
    s = _sym(cfg, p)
    t = _sym(cfg, p, "symbol2", "order2")
    r = compose_symbols(s, t, int(p.get("M", 3)))
    return {"left": s, "right": t, "expansion": r, "descriptor": r.descriptor}, "info"


def cmd_adjoint(cfg, p):
    s = _sym(cfg, p)
    r = adjoint_symbol(s, int(p.get("M", 3)))
    return {"descriptor": s, "expansion": r}, "info"


def cmd_parametrix(cfg, p):
    s = _sym(cfg, p)
    cert = certify_elliptic(s, p.get("kind", "M-elliptic"))
    if not isinstance(cert, EllipticityCertificate):
        return {"descriptor": s, "witness": cert,
                "message": "symbol is not certified elliptic"}, "fail"
    grid = cfg.grid_spec(GridSpec(1, 8.0, 256))
    M, K = int(p.get("M", 3)), int(p.get("K", 2))
    R = p.get("R")
    u = gaussian(grid, 0.0, float(p.get("xi0", 32.0)))
    Tsu = apply_op(s, u, with_evaluator=False)
    rows = []
    tau = None
    for k in range(K + 1):
        tau = parametrix(s, M, k, R, cert)
        res = apply_op(tau, Tsu, with_evaluator=False) - u
        rows.append({"K": k, "residual": lp_norm(res) / lp_norm(u),
                     "nodes": node_count(tau.expr)})
    ok = rows[-1]["residual"] <= rows[0]["residual"]
    return {"descriptor": s, "certificate": cert, "grid": grid,
            "R": cert.R if R is None else float(R), "M": M, "K": K, "residuals": rows,
            "parametrix": _expr_text(tau.expr, s.dim)}, "pass" if ok else "fail"


def cmd_remainder_probe(cfg, p):
    s = _sym(cfg, p)
    t = _sym(cfg, p, "symbol2", "order2")
    grid = cfg.grid_spec(GridSpec(1, 2 * np.pi, 1024))
    M = int(p.get("M", 2))
    radii = expand_list(p.get("radii", "8,16,...,128"))
    exact = extract_symbol(dense_matrix(s, grid) @ dense_matrix(t, grid), grid)
    r = compose_symbols(s, t, M)
    fit = remainder_decay_probe(exact, r.descriptor, r.claimed_order, radii, grid)
    return {"left": s, "right": t, "grid": grid, "expansion": _expr_text(r.expr, s.dim),
            "fit": fit}, fit.verdict


def cmd_norm(cfg, p):
    if "field" not in p:
        raise ConfigError("--field is required")
    u = fieldio.load_field(p["field"])
    dim = u.grid.dim
    w = cfg.weight(p.get("weight", "bracket"), dim)
    m = float(p.get("m", 0.0))
    if "m2" in p:
        xw = cfg.weight(p.get("xweight", "bracket"), dim)
        spec = NormSpec((m, float(p["m2"])), float(p.get("p", 2.0)), w, xw)
    else:
        spec = NormSpec(m, float(p.get("p", 2.0)), w)
    return {"field": p["field"], "grid": u.grid, "norm": sobolev_norm(u, spec),
            "m": m, "m2": p.get("m2"), "p": spec.p, "weight": w.name}, "info"


def cmd_rescale_probe(cfg, p):
    grid = cfg.grid_spec(GridSpec(1, 16.0, 1024))
    n = grid.dim
    lambdas = expand_list(p.get("lambdas", "1,2,...,64"))
    x0 = tuple(np.broadcast_to(np.asarray(p.get("x0", 0.0), float), (n,)))
    xi0 = tuple(np.broadcast_to(np.asarray(p.get("xi0", 1.0), float), (n,)))
    pp = float(p.get("p", 2.0))
    t = float(p.get("t", default_t(1.0, 1.0)))
    u = gaussian(grid)
    v = gaussian(grid, 1.0)
    base = RescaleParams(1.0, t, x0, xi0, pp)
    rows = []
    for lam in lambdas:
        prm = base.with_lam(lam)
        Ru = apply_R(u, prm)
        back = apply_R_inverse(Ru, prm)
        rows.append({"lambda": lam,
                     "inverse_error": float(np.max(np.abs(back.values - u.values))),
                     "norm": lp_norm(Ru, pp)})
    norms = [r["norm"] for r in rows]
    spread = (max(norms) - min(norms)) / max(norms)
    weak = weak_decay_probe(u, v, base, lambdas)
    result = {"grid": grid, "params": base, "rows": rows, "isometry_spread": spread,
              "weak_decay": weak}
    ok = weak.decreasing and spread <= float(cfg.tolerances.get("isometry", 1e-6)) and \
        max(r["inverse_error"] for r in rows) <= float(cfg.tolerances.get("inverse", 1e-10))
    if "symbol" in p:
        s = _sym(cfg, p)
        fits = [decay_exponent_probe(s, a, b, base, lambdas[-6:] if len(lambdas) > 6 else lambdas)
                for a, b in (((1,), (0,)), ((0,), (1,)))]
        result["decay_exponents"] = fits
        ok = ok and all(f.verdict == "pass" for f in fits)
    return result, "pass" if ok else "fail"


def cmd_fredholm_probe(cfg, p):
    s = _sym(cfg, p)
    grid = cfg.grid_spec(GridSpec(1, 16.0, 512))
    res = certify_elliptic(s, p.get("kind", "M-elliptic"))
    u = gaussian(grid)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if isinstance(res, Witness):
            rep = concentration_probe(s, res, u, float(p.get("p", 2.0)), p.get("t"))
            ok = rep.lower_bound_fails
        else:
            ks = range(1, 6)
            pts = ([np.zeros(s.dim)] * 5,
                   [2.0 ** k * np.eye(s.dim)[0] for k in ks])
            rep = concentration_probe(s, pts, u, float(p.get("p", 2.0)), p.get("t"))
            ok = True
    return {"descriptor": s, "grid": grid, "ellipticity": res, "probe": rep,
            "warnings": [str(w.message) for w in caught]}, "pass" if ok else "fail"


def cmd_order_reduce(cfg, p):
    s = _sym(cfg, p)
    r = conjugate_order_reduction(s, float(p.get("s", 0.0)), int(p.get("M", 3)))
    rep = check_class(r, int(p.get("maxord", 2)))
    return {"descriptor": s, "reduced": _expr_text(r.expr, s.dim), "class_report": rep}, \
        rep.verdict


def _battery(cfg, p):
    name = p.get("battery", "default")
    if name != "default":
        raise ConfigError(f"unknown battery {name!r}; only 'default' is built in")
    grid = cfg.grid_spec(GARDING_GRID)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        b = default_battery(grid)
    return b, grid, [str(w.message) for w in caught]


def cmd_garding(cfg, p):
    p = dict(p)
    if "two_m" in p:
        p.setdefault("order", p["two_m"])
    s = _sym(cfg, p)
    b, grid, warns = _battery(cfg, p)
    cert = certify_elliptic(s, "strongly-M-elliptic")
    rep = garding_fit(s, float(p.get("s", s.rho / 2)), b, cert)
    return {"descriptor": s, "grid": grid, "certificate": cert, "garding": rep,
            "warnings": warns}, rep.verdict


def cmd_garding_sg(cfg, p):
    p = dict(p)
    p.setdefault("order", [float(p.get("two_m1", 0.0)), float(p.get("two_m2", 0.0))])
    p.setdefault("xweight", "bracket")
    s = _sym(cfg, p)
    b, grid, warns = _battery(cfg, p)
    cert = certify_elliptic(s, "SG")
    rep = sg_garding_fit(s, float(p.get("s1", s.rho / 2)), float(p.get("s2", s.rho / 2)),
                         b, cert)
    return {"descriptor": s, "grid": grid, "certificate": cert, "garding": rep,
            "warnings": warns}, rep.verdict


def _safe(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.+-]+", "_", label).strip("_")


def emit_battery_fields(cfg: RunConfig, out_dir) -> list:
    """Write the default battery as .field files; returns (path, norm, round_trip) rows."""
    b, grid, _ = _battery(cfg, {})
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for i, (label, u) in enumerate(zip(b.labels, b.fields)):
        path = out / f"{i:02d}_{_safe(label)}.field"
        fieldio.save_field(u, path)
        back = fieldio.load_field(path)
        rows.append({"label": label, "path": str(path), "norm": lp_norm(u, 2.0),
                     "round_trip": bool(np.array_equal(back.values, u.values))})
    return rows


def cmd_emit_battery(cfg, p):
    rows = emit_battery_fields(cfg, p.get("out_dir", "battery"))
    ok = all(r["round_trip"] and abs(r["norm"] - 1) <= 1e-10 for r in rows)
    return {"files": rows, "count": len(rows)}, "pass" if ok else "fail"


COMMANDS = {
    "check-weight": cmd_check_weight,
    "check-symbol": cmd_check_symbol,
    "certify": cmd_certify,
    "fit-eta-kappa": cmd_fit_eta_kappa,
    "quantize": cmd_quantize,
    "compose": cmd_compose,
    "adjoint": cmd_adjoint,
    "parametrix": cmd_parametrix,
    "remainder-probe": cmd_remainder_probe,
    "norm": cmd_norm,
    "rescale-probe": cmd_rescale_probe,
    "fredholm-probe": cmd_fredholm_probe,
    "order-reduce": cmd_order_reduce,
    "garding": cmd_garding,
    "garding-sg": cmd_garding_sg,
    "emit-battery": cmd_emit_battery,
}


def run(config: RunConfig, command: str) -> tuple:
    """Dispatch ``command``; returns (report, exit code).

    Mathematical precondition failures produce a 'fail' report (exit 2);
    configuration problems raise ConfigError.
    """
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    config.validate()
    t0 = time.perf_counter()
    error = None
    try:
        result, verdict = COMMANDS[command](config, dict(config.params))
    except PsidoError as exc:
        result, verdict, error = {}, "fail", f"{type(exc).__name__}: {exc}"
    rep = make_report(command, config.to_dict(), result, verdict, time.perf_counter() - t0,
                      error)
    return rep, 2 if verdict == "fail" else 0


# ---------------------------------------------------------------------------
# argument parsing

def _symbol_flags(sp, second=False, order_flag="--order"):
    sp.add_argument("--symbol", help="expression or a symbol name from the config")
    if order_flag:
        sp.add_argument(order_flag, dest="order", type=float, help="claimed order m")
    sp.add_argument("--rho", type=float)
    sp.add_argument("--weight", help="weight name or expression in xi")
    if second:
        sp.add_argument("--symbol2", help="right factor")
        sp.add_argument("--order2", type=float)


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="psido", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def cmd(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--L", type=float, help="half-width of the periodic box")
        sp.add_argument("--N", type=int, help="points per axis (power of 2)")
        return sp

    sp = cmd("check-weight", "fit growth exponents and derivative ratios of a weight")
    sp.add_argument("--weight")
    sp.add_argument("--dim", type=int)
    sp.add_argument("--radii")
    sp.add_argument("--max-deriv", dest="max_deriv", type=int)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--out")

    sp = cmd("check-symbol", "seminorm table and S/M class verdict")
    _symbol_flags(sp)
    sp.add_argument("--xweight")
    sp.add_argument("--maxord", type=int)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--s-only", dest="s_only", action="store_true", default=None)
    sp.add_argument("--out")

    sp = cmd("certify", "ellipticity certificate or witness")
    _symbol_flags(sp)
    sp.add_argument("--kind", choices=["M-elliptic", "strongly-M-elliptic", "SG"])
    sp.add_argument("--xweight")
    sp.add_argument("--radii")
    sp.add_argument("--out")

    sp = cmd("fit-eta-kappa", "fit Re sigma >= eta L^2m - kappa L^(2m-rho)")
    _symbol_flags(sp)
    sp.add_argument("--out")

    sp = cmd("quantize", "apply T_sigma to a field file")
    _symbol_flags(sp)
    sp.add_argument("--in", dest="in")
    sp.add_argument("--out", dest="out", help="output field file")
    sp.add_argument("--report", help="report path (default stdout)")

    for name, help_ in (("compose", "truncated composition symbol"),
                        ("adjoint", "truncated adjoint symbol")):
        sp = cmd(name, help_)
        _symbol_flags(sp, second=name == "compose")
        sp.add_argument("-M", "--M-terms", dest="M", type=int)
        sp.add_argument("--out")

    sp = cmd("parametrix", "Newton parametrix and residual on a modulated Gaussian")
    _symbol_flags(sp)
    sp.add_argument("-M", "--M-terms", dest="M", type=int)
    sp.add_argument("-K", "--iterations", dest="K", type=int)
    sp.add_argument("-R", "--radius", dest="R", type=float)
    sp.add_argument("--kind", choices=["M-elliptic", "strongly-M-elliptic"])
    sp.add_argument("--xi0", type=float)
    sp.add_argument("--out")

    sp = cmd("remainder-probe", "decay fit of the composition truncation error")
    _symbol_flags(sp, second=True)
    sp.add_argument("-M", "--M-terms", dest="M", type=int)
    sp.add_argument("--radii")
    sp.add_argument("--out")

    sp = cmd("norm", "weighted Sobolev norm of a field file")
    sp.add_argument("--field")
    sp.add_argument("--m", type=float)
    sp.add_argument("--m2", type=float)
    sp.add_argument("--p", type=float)
    sp.add_argument("--weight")
    sp.add_argument("--xweight")
    sp.add_argument("--out")

    sp = cmd("rescale-probe", "rescaling identities, weak decay and decay exponents")
    _symbol_flags(sp)
    sp.add_argument("--lambdas")
    sp.add_argument("--t", type=float)
    sp.add_argument("--x0", type=float)
    sp.add_argument("--xi0", type=float)
    sp.add_argument("--p", type=float)
    sp.add_argument("--out")

    sp = cmd("fredholm-probe", "concentration probe along a non-ellipticity witness")
    _symbol_flags(sp)
    sp.add_argument("--kind", choices=["M-elliptic", "strongly-M-elliptic"])
    sp.add_argument("--t", type=float)
    sp.add_argument("--p", type=float)
    sp.add_argument("--out")

    sp = cmd("order-reduce", "conjugate to order 0 with J_(m-s) T J_s")
    _symbol_flags(sp)
    sp.add_argument("--s", type=float)
    sp.add_argument("-M", "--M-terms", dest="M", type=int)
    sp.add_argument("--maxord", type=int)
    sp.add_argument("--out")

    sp = cmd("garding", "fit Garding constants on a test battery")
    _symbol_flags(sp, order_flag="--two-m")
    sp.add_argument("--s", type=float)
    sp.add_argument("--battery")
    sp.add_argument("--out")

    sp = cmd("garding-sg", "SG Garding fit")
    _symbol_flags(sp, order_flag=None)
    sp.add_argument("--two-m1", dest="two_m1", type=float)
    sp.add_argument("--two-m2", dest="two_m2", type=float)
    sp.add_argument("--xweight")
    sp.add_argument("--s1", type=float)
    sp.add_argument("--s2", type=float)
    sp.add_argument("--battery")
    sp.add_argument("--out")

    sp = cmd("emit-battery", "write the default battery as field files")
    sp.add_argument("--out-dir", dest="out_dir")
    sp.add_argument("--out")
    return ap


_NOT_PARAMS = {"command", "config", "seed", "L", "N", "report"}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    for k in ("L", "N"):
        v = getattr(args, k)
        if v is not None:
            cfg.grid[k] = v
    report_to_out = args.command != "quantize"
    for k, v in vars(args).items():
        if k in _NOT_PARAMS or v is None or (k == "out" and report_to_out):
            continue
        cfg.params[k] = v
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        cfg = config_from_args(args)
        rep, code = run(cfg, args.command)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"psido: error: {exc}", file=sys.stderr)
        return 1
    text = dumps(rep)
    dest = args.report if args.command == "quantize" else getattr(args, "out", None)
    if dest:
        Path(dest).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
