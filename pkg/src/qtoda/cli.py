"""Command-line front end: evaluate function families on geometric grids, run
verification suites and compare the Barnes and series forms of K.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 numeric
non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import hopf, mellin, qbessel, toda, whittaker
from .qcalc import DomainError, NonConvergenceError, QContext, SeriesValue, Tolerances

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NONCONV = 0, 1, 2, 3

FUNCTIONS = ("I", "J0", "K", "psiL", "xi1", "xi2", "g_of_s")
SUITES = ("toda", "wronskian", "mellin", "whittaker", "hopf", "all")
MELLIN_TOL = 1e-6

DEFAULTS = {
    "q": 0.5,
    "delta": 1,
    "mu": 1.0,
    "nu": 0.5,
    "x0": 1.0,
    "lo": -20,
    "hi": 20,
    "rel_eps": 1e-12,
    "abs_eps": 1e-300,
    "format": "json",
    "out": None,
    "function": "K",
    "sign": 1,
    "suite": "all",
    "eigenvalue": None,
}


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    ctx: QContext
    x0: float
    lo: int
    hi: int
    tol: Tolerances
    format: str
    out: str | None
    function: str = "K"
    sign: int = 1
    suite: str = "all"
    eigenvalue: complex | None = None

    def grid(self) -> np.ndarray:
        n = np.arange(self.lo, self.hi + 1, dtype=float)
        return self.x0 * self.ctx.q**n

    def describe(self) -> dict:
        d = {
            "subcommand": self.subcommand,
            "q": self.ctx.q,
            "delta": self.ctx.delta,
            "mu": self.ctx.mu,
            "nu": self.ctx.nu,
            "x0": self.x0,
            "lo": self.lo,
            "hi": self.hi,
            "rel_eps": self.tol.rel_eps,
            "abs_eps": self.tol.abs_eps,
            "format": self.format,
        }
        if self.subcommand == "eval":
            d.update(function=self.function, sign=self.sign)
        if self.subcommand == "verify":
            d.update(suite=self.suite)
            if self.eigenvalue is not None:
                d["eigenvalue"] = [self.eigenvalue.real, self.eigenvalue.imag]
        return d


# ---------------------------------------------------------------------------
# argument handling


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default values; flags override it")
    common.add_argument("--q", type=float)
    common.add_argument("--delta", type=int, choices=(0, 1, 2))
    common.add_argument("--mu", type=float)
    common.add_argument("--nu", type=float)
    common.add_argument("--x0", type=float, help="grid anchor; grid points are x0*q**n for n = lo..hi")
    common.add_argument("--lo", type=int)
    common.add_argument("--hi", type=int)
    common.add_argument("--rel-eps", dest="rel_eps", type=float)
    common.add_argument("--abs-eps", dest="abs_eps", type=float)
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--out", help="output file (default: stdout)")

    p = argparse.ArgumentParser(prog="qtoda", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="subcommand", required=True)
    ev = sub.add_parser("eval", parents=[common], help="evaluate a function family on the grid")
    ev.add_argument("function", choices=FUNCTIONS)
    ev.add_argument("--sign", type=int, choices=(1, -1), help="order sign for I")
    ve = sub.add_parser("verify", parents=[common], help="run a verification suite")
    ve.add_argument("suite", choices=SUITES)
    ve.add_argument("--eigenvalue", type=complex, help="override the Toda eigenvalue (negative control)")
    sub.add_parser("mellin-compare", parents=[common], help="compare Barnes-integral K with the series K")
    return p


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    data = {k.replace("-", "_"): v for k, v in data.items()}
    unknown = set(data) - set(DEFAULTS)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return data


def resolve_config(argv: Sequence[str]) -> RunConfig:
    ns = build_parser().parse_args(argv)
    file_cfg = _load_config(ns.config)
    merged = dict(DEFAULTS)
    merged.update(file_cfg)
    for k, v in vars(ns).items():
        if k in DEFAULTS and v is not None:
            merged[k] = v
    try:
        ctx = QContext(float(merged["q"]), int(merged["delta"]), float(merged["mu"]), float(merged["nu"]))
        tol = Tolerances(rel_eps=float(merged["rel_eps"]), abs_eps=float(merged["abs_eps"]))
    except (DomainError, TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    if int(merged["lo"]) > int(merged["hi"]):
        raise UsageError("lo must not exceed hi")
    if not float(merged["x0"]) > 0:
        raise UsageError("x0 must be positive")
    if merged["format"] not in ("csv", "json"):
        raise UsageError("format must be csv or json")
    ev = merged["eigenvalue"]
    return RunConfig(
        subcommand=ns.subcommand,
        ctx=ctx,
        x0=float(merged["x0"]),
        lo=int(merged["lo"]),
        hi=int(merged["hi"]),
        tol=tol,
        format=merged["format"],
        out=merged["out"],
        function=getattr(ns, "function", None) or merged["function"],
        sign=int(merged["sign"]),
        suite=getattr(ns, "suite", None) or merged["suite"],
        eigenvalue=None if ev is None else complex(ev),
    )


# ---------------------------------------------------------------------------
# eval


def evaluator(cfg: RunConfig) -> Callable[[float], SeriesValue]:
    ctx, tol = cfg.ctx, cfg.tol
    table: dict[str, Callable[[float], SeriesValue]] = {
        "I": lambda x: qbessel.modified_I(ctx, x, cfg.sign, tol=tol),
        "J0": lambda x: qbessel.bessel_J0(ctx, x, tol=tol),
        "K": lambda x: qbessel.macdonald_K(ctx, x, tol=tol),
        "psiL": lambda x: whittaker.psi_L(x, ctx, tol=tol),
        "xi1": lambda x: whittaker.xi1(x, ctx, tol),
        "xi2": lambda x: whittaker.xi2(x, ctx, tol),
        "g_of_s": lambda x: SeriesValue(mellin.g_of_s(x, ctx), 0, 0.0),
    }
    if cfg.function not in table:
        raise UsageError(f"unknown function {cfg.function!r}")
    return table[cfg.function]


def _eval_row(fn: Callable[[float], SeriesValue], x: float, tol: Tolerances) -> dict:
    try:
        v = fn(x)
    except NonConvergenceError as exc:
        return {"x": x, "re": math.nan, "im": math.nan, "terms": 0, "tail_estimate": math.inf, "converged": False, "note": str(exc)}
    val = complex(v.value)
    conv = v.terms_used == 0 or v.converged(tol)
    return {"x": x, "re": val.real, "im": val.imag, "terms": v.terms_used, "tail_estimate": v.tail_estimate, "converged": conv, "note": ""}


def _parallel_rows(fn: Callable[[float], dict], xs: Sequence[float]) -> list[dict]:
    # map preserves input order, so the output is deterministic
    with ThreadPoolExecutor(max_workers=4) as pool:
        return list(pool.map(fn, xs))


def cmd_eval(cfg: RunConfig) -> tuple[dict, int]:
    fn = evaluator(cfg)
    rows = _parallel_rows(lambda x: _eval_row(fn, float(x), cfg.tol), list(cfg.grid()))
    code = EXIT_OK if all(r["converged"] for r in rows) else EXIT_NONCONV
    return {"config": cfg.describe(), "rows": rows, "checks": []}, code


# ---------------------------------------------------------------------------
# verify


def _check(suite: str, name: str, residual: float, threshold: float, status: str | None = None, note: str = "") -> dict:
    if status is None:
        status = "pass" if residual < threshold else "fail"
    return {"suite": suite, "check": name, "status": status, "worst_residual": residual, "threshold": threshold, "note": note}


def _j1_anchor(ctx: QContext, lo: int) -> float:
    """Anchor placing the highest stencil point x0*q**(lo-1) inside the j=1 window."""
    return 0.999 * qbessel.J1_WINDOW * qbessel.j1_radius(ctx) * ctx.q ** (1 - lo)


def suite_toda(cfg: RunConfig) -> list[dict]:
    ctx = cfg.ctx
    anchor = _j1_anchor(ctx, cfg.lo) if ctx.delta == 2 else cfg.x0
    op = toda.TodaOperator(ctx)
    out = []
    for sign in (1, -1):
        f = toda.GridFunction.sample(
            lambda x: qbessel.modified_I_array(ctx, x, sign, tol=cfg.tol)[0], ctx.q, anchor, cfg.lo - 1, cfg.hi + 1
        )
        rep = toda.eigen_residual(op, f, cfg.eigenvalue, cfg.tol.abs_eps)
        label = "wrong eigenvalue " if cfg.eigenvalue is not None else ""
        out.append(_check("toda", f"{label}eigenfunction residual I(sign={sign:+d})", rep.difference_equation, 1e-9, note=f"anchor={anchor!r}"))
    return out


def suite_wronskian(cfg: RunConfig) -> list[dict]:
    ctx = cfg.ctx
    # W cancels between products that grow like exp(c ln^2 x): sample n >= 0 only (x <= anchor)
    lo = max(cfg.lo, 0)
    if lo > cfg.hi:
        raise UsageError("the Wronskian suite needs hi >= 0")
    # for j=1 the cancellation is worst near the radius: start at half of it
    anchor = 0.5 * qbessel.j1_radius(ctx) * ctx.q ** (-lo) if ctx.delta == 2 else cfg.x0
    xs = anchor * ctx.q ** np.arange(lo, cfg.hi + 1, dtype=float)
    w = qbessel.wronskian(ctx, xs, cfg.tol)
    c = qbessel.wronskian_constant(ctx)
    ratio = np.array([w[i] / qbessel.wronskian_factor(ctx, float(x)) for i, x in enumerate(xs)])
    dev = float(np.max(np.abs(ratio - c)) / abs(c))
    out = [_check("wronskian", "W / factor equals the closed-form constant", dev, 1e-8, note=f"x in [{float(xs[-1])!r}, {float(xs[0])!r}]")]
    worst = 0.0
    for k in range(1, 7):
        s, s_ref = qbessel.interior_sum_S(ctx, k), qbessel.interior_sum_closed_form(ctx, k)
        worst = max(worst, abs(s - s_ref) / max(abs(s_ref), 1e-300) if s_ref != 0 else abs(s))
    out.append(_check("wronskian", "interior sums S_k, k=1..6", worst, 1e-10))
    return out


def suite_mellin(cfg: RunConfig) -> list[dict]:
    ctx = cfg.ctx
    rng = np.random.default_rng(7)
    samples = [complex(a, b) for a, b in zip(rng.uniform(abs(ctx.nu) + 0.2, 4, 20), rng.uniform(-3, 3, 20))]
    out = [_check("mellin", "g(s) recurrence at 20 points", max(mellin.g_recurrence_residual(s, ctx) for s in samples), 1e-12)]
    out.append(_check("mellin", "lowering ladder identity", mellin.ladder_identity_check(ctx), 1e-10))
    if ctx.delta == 2:
        out.append(_check("mellin", "Barnes K vs series K", math.nan, MELLIN_TOL, status="excluded", note="delta=2 excluded from default comparison"))
        return out
    try:
        worst = 0.0
        for x in (0.5, 1.0, 2.0):
            b = mellin.barnes_K(ctx, x).value
            s = qbessel.macdonald_K(ctx, x).value
            worst = max(worst, abs(b - s) / abs(s))
        out.append(_check("mellin", "Barnes K vs series K at x=0.5,1,2", worst, MELLIN_TOL))
    except NonConvergenceError as exc:
        out.append(_check("mellin", "Barnes K vs series K at x=0.5,1,2", math.inf, MELLIN_TOL, status="nonconvergent", note=str(exc)))
    return out


def suite_whittaker(cfg: RunConfig) -> list[dict]:
    ctx = cfg.ctx
    out = [
        _check("whittaker", "invariant vector C*.psi_L = psi_L.B", whittaker.invariance_residual(ctx), 1e-12),
        _check("whittaker", "coefficient recursion through bidegree 8", whittaker.coefficient_recursion_residual(ctx, 8), 1e-13),
    ]
    if ctx.delta == 2:
        out.append(_check("whittaker", "Whittaker condition", math.nan, 1e-13, status="excluded", note="delta=2 xi_2 has zero radius of convergence"))
        return out
    out.append(_check("whittaker", "Whittaker condition through bidegree 8", whittaker.whittaker_condition_residual(ctx, 8), 1e-13))
    res = [whittaker.matrix_element_radial(H, ctx, r_max=256.0) for H in (0.5, 1.0, 2.0)]
    if not all(r.converged for r in res):
        out.append(_check("whittaker", "radial matrix element", math.inf, 1e-4, status="nonconvergent", note="radial integral does not converge"))
        return out
    ks = [qbessel.macdonald_K(ctx, 1 / r.H).value * r.H ** (ctx.inu - 1) for r in res]
    ratios = [r.value / k for r, k in zip(res, ks)]
    dev = max(abs(x - ratios[0]) for x in ratios) / abs(ratios[0])
    out.append(_check("whittaker", "matrix element / (H^{i nu-1} K) is H-constant", dev, 1e-4))
    return out


def _hopf_rows_to_checks(title: str, rows: list[dict]) -> dict:
    worst = max((r["mismatch_terms"] for r in rows), default=0)
    return _check("hopf", f"{title} ({len(rows)} cases)", float(worst), 0.5)


def suite_hopf(cfg: RunConfig) -> list[dict]:
    p = hopf.Params(delta=cfg.ctx.delta)
    out = [
        _hopf_rows_to_checks("algebra relations, integer module", hopf.verify_algebra_relations(4, 4, 4, p)),
        _hopf_rows_to_checks("algebra relations, principal-series slice", hopf.verify_algebra_relations(4, 4, 4, p, slice_=1)),
        _hopf_rows_to_checks("Casimir forms agree", hopf.verify_casimir(4, 4, 4, p) + hopf.verify_casimir(4, 4, 4, p, slice_=1)),
        _hopf_rows_to_checks("pi_nu relations and Casimir scalar", hopf.verify_pi_nu(8)),
        _hopf_rows_to_checks("slice action equals pi_nu", hopf.verify_slice_matches_pi_nu()),
        _hopf_rows_to_checks("star compatibility", hopf.verify_compatibility(4, 4, 4, p)),
        _hopf_rows_to_checks("twisted coproduct, counit, antipode", hopf.verify_coproduct(1, 1, 1, p=p)),
        _hopf_rows_to_checks("normal-ordering confluence, words <= 6", hopf.check_confluence(6, cfg.ctx.delta)),
        _hopf_rows_to_checks("unitarity of pi_nu", [hopf.verify_unitarity(g) for g in "ABC"]),
    ]
    q = cfg.ctx.q
    for mkn in ((2, 1, 2), (2, 1, 3)):
        f = hopf.gaussian_test_function(q, *mkn)
        for g in "AB":
            out.append(_check("hopf", f"Haar invariance under {g}, test monomial {mkn}", hopf.haar_invariance(f, q, g), 1e-8))
    return out


SUITE_RUNNERS: dict[str, Callable[[RunConfig], list[dict]]] = {
    "toda": suite_toda,
    "wronskian": suite_wronskian,
    "mellin": suite_mellin,
    "whittaker": suite_whittaker,
    "hopf": suite_hopf,
}


def _exit_from_checks(checks: list[dict]) -> int:
    statuses = {c["status"] for c in checks}
    if "nonconvergent" in statuses:
        return EXIT_NONCONV
    if "fail" in statuses:
        return EXIT_FAIL
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> tuple[dict, int]:
    if cfg.suite not in SUITES:
        raise UsageError(f"unknown suite {cfg.suite!r}")
    names = [s for s in SUITES if s != "all"] if cfg.suite == "all" else [cfg.suite]
    checks: list[dict] = []
    for name in names:
        t0 = time.perf_counter()
        new = SUITE_RUNNERS[name](cfg)
        dt = time.perf_counter() - t0
        for c in new:
            c["seconds"] = dt
        checks.extend(new)
    return {"config": cfg.describe(), "rows": [], "checks": checks}, _exit_from_checks(checks)


# ---------------------------------------------------------------------------
# mellin-compare


def _compare_row(ctx: QContext, x: float) -> dict:
    row = {"x": x, "barnes_re": math.nan, "barnes_im": math.nan, "series_re": math.nan, "series_im": math.nan, "rel_diff": math.nan}
    if ctx.delta == 2:
        row["status"] = "excluded from default comparison"
        return row
    s = qbessel.macdonald_K(ctx, x).value
    row.update(series_re=s.real, series_im=s.imag)
    try:
        b = mellin.barnes_K(ctx, x).value
    except NonConvergenceError:
        row["status"] = "nonconvergent"
        return row
    rel = abs(b - s) / abs(s)
    row.update(barnes_re=b.real, barnes_im=b.imag, rel_diff=rel, status="pass" if rel < MELLIN_TOL else "fail")
    return row


def cmd_mellin_compare(cfg: RunConfig) -> tuple[dict, int]:
    rows = _parallel_rows(lambda x: _compare_row(cfg.ctx, float(x)), list(cfg.grid()))
    statuses = {r["status"] for r in rows}
    code = EXIT_NONCONV if "nonconvergent" in statuses else EXIT_FAIL if "fail" in statuses else EXIT_OK
    return {"config": cfg.describe(), "rows": rows, "checks": []}, code


# ---------------------------------------------------------------------------
# output


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=1, default=_json_default) + "\n"
    table = report["rows"] or report["checks"]
    buf = io.StringIO()
    if table:
        writer = csv.DictWriter(buf, fieldnames=list(table[0].keys()), lineterminator="\n")
        writer.writeheader()
        for row in table:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o))


COMMANDS = {"eval": cmd_eval, "verify": cmd_verify, "mellin-compare": cmd_mellin_compare}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cfg = resolve_config(argv)
    except SystemExit as exc:  # argparse usage errors
        return EXIT_USAGE if exc.code else EXIT_OK
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        report, code = COMMANDS[cfg.subcommand](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONV
    text = render(report, cfg.format)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
