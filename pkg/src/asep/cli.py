"""Command-line front door.

Every command prints one JSON RunRecord (floats carry 17 significant
digits so records round-trip), or CSV for site sweeps when asked.  Exit
codes: 0 success, 2 domain/precondition error, 3 convergence or budget
failure, 4 internal inconsistency.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from . import __version__
from .core import Configuration, ModelParams
from .errors import (
    AsepError,
    BudgetError,
    ConsistencyError,
    ConvergenceError,
    DomainError,
    EvaluationError,
    PoleError,
)
from .exact import (
    TransitionQuery,
    dual_query,
    tasep_transition_determinant,
    transition_probability,
)
from .identities import run_identity_suite
from .marginals import (
    MarginalQuery,
    SeriesControl,
    mth_particle_large,
    mth_particle_small,
    mth_particle_tu,
    step_ic_mth_particle,
)
from .oracles import (
    gillespie_simulate,
    marginal_from_distribution,
    master_equation_uniformization,
)

SCHEMA_ID = "asep.runrecord.v1"

EXIT_OK = 0
EXIT_DOMAIN = 2
EXIT_CONVERGENCE = 3
EXIT_INCONSISTENT = 4


# ---------------------------------------------------------------------------
# serialization (floats at 17 significant digits)

def _to_json(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(
            f'{pad}  "{k}": {_to_json(v, indent + 1)}' for k, v in obj.items()
        )
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = ",\n".join(f"{pad}  {_to_json(v, indent + 1)}" for v in obj)
        return "[\n" + items + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format(obj, ".17g")
    if obj is None:
        return "null"
    return '"' + str(obj).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _emit(record: dict) -> None:
    sys.stdout.write(_to_json(record) + "\n")


def _record(command: str, params: dict, started: float, **fields) -> dict:
    rec = {
        "schema": SCHEMA_ID,
        "command": command,
        "params": params,
        "version": __version__,
        "wall_time_s": time.perf_counter() - started,
    }
    rec.update(fields)
    return rec


# ---------------------------------------------------------------------------
# argument helpers

def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise DomainError(f"cannot parse integer list {text!r}") from exc


def _x_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split("..")
        return int(lo), int(hi)
    except ValueError as exc:
        raise DomainError(f"cannot parse range {text!r} (expected A..B)") from exc


def _params(ns) -> ModelParams:
    if not (0.0 <= ns.p <= 1.0):
        raise DomainError(f"p must lie in [0,1], got {ns.p}")
    return ModelParams.from_p(ns.p)


def _threads(ns) -> int:
    if ns.threads is not None:
        return max(1, ns.threads)
    env = os.environ.get("ASEP_THREADS")
    return max(1, int(env)) if env else 1


# ---------------------------------------------------------------------------
# commands

def cmd_transition(ns) -> int:
    started = time.perf_counter()
    params = _params(ns)
    query = TransitionQuery(
        Configuration(_int_list(ns.y)), Configuration(_int_list(ns.x)), ns.t, params
    )
    if ns.method == "contour":
        res = transition_probability(query, ns.tol)
        payload = dict(
            value=res.value, error_estimate=res.error, nodes_used=res.nodes,
            converged=res.converged,
        )
    elif ns.method == "determinant":
        if params.p == 0.0:
            query = dual_query(query)
        res = tasep_transition_determinant(query, ns.tol)
        payload = dict(
            value=res.value, error_estimate=res.error, nodes_used=res.nodes,
            converged=res.converged,
        )
    else:  # oracle
        dist = master_equation_uniformization(query.Y, ns.t, params, min(ns.tol, 1e-12))
        payload = dict(
            value=dist.probs.get(query.X.positions, 0.0),
            error_estimate=dist.tail_bound,
            converged=True,
        )
    rec = _record(
        "transition",
        dict(y=list(query.Y.positions), x=list(query.X.positions), t=ns.t, p=ns.p,
             tol=ns.tol, method=ns.method, threads=_threads(ns)),
        started, **payload,
    )
    _emit(rec)
    return EXIT_OK if payload.get("converged", True) else EXIT_CONVERGENCE


def _marginal_value(ns, params: ModelParams, x: int):
    ctrl = SeriesControl(tol=ns.tol, max_sigma=ns.max_sigma, R_override=ns.radius)
    if ns.step:
        if ns.method == "corollary":
            return step_ic_mth_particle(ns.m, x, ns.t, params, ctrl)
        raise DomainError(f"step initial data supports method 'corollary'/'mc', not {ns.method!r}")
    Y = Configuration(_int_list(ns.y))
    mq = MarginalQuery(Y, ns.m, x, ns.t, params)
    if ns.method == "small":
        return mth_particle_small(mq, ns.tol)
    if ns.method == "large":
        return mth_particle_large(mq, ns.tol, ctrl if Y.n > 12 else None)
    if ns.method == "tu":
        return mth_particle_tu(mq, ns.tol)
    raise DomainError(f"unknown marginal method {ns.method!r}")


def cmd_marginal(ns) -> int:
    started = time.perf_counter()
    params = _params(ns)
    if ns.step and not ns.y:
        pass
    elif not ns.y:
        raise DomainError("either --y or --step is required")
    sites = [ns.x] if ns.x_range is None else list(range(ns.x_range[0], ns.x_range[1] + 1))
    if sites == [None]:
        raise DomainError("one of --x / --x-range is required")

    base_params = dict(
        y=(list(_int_list(ns.y)) if ns.y else None), step=ns.step, m=ns.m, t=ns.t,
        p=ns.p, tol=ns.tol, method=ns.method, threads=_threads(ns),
    )
    converged = True
    if ns.method == "oracle":
        Y = Configuration(_int_list(ns.y)) if ns.y else _step_window_config(ns)
        dist = master_equation_uniformization(Y, ns.t, params, min(ns.tol, 1e-12))
        marg = marginal_from_distribution(dist, ns.m)
        rows = [dict(x=x, value=marg.get(x, 0.0), error_estimate=dist.tail_bound) for x in sites]
    elif ns.method == "mc":
        Y = Configuration(_int_list(ns.y)) if ns.y else _step_window_config(ns)
        batch = gillespie_simulate(Y, ns.t, params, ns.runs, ns.seed)
        counts = batch.marginal_counts(ns.m)
        rows = [dict(x=x, value=counts.get(x, 0) / ns.runs,
                     error_estimate=_binomial_sem(counts.get(x, 0), ns.runs))
                for x in sites]
        base_params["runs"] = ns.runs
    else:
        rows = []
        for x in sites:
            res = _marginal_value(ns, params, x)
            converged = converged and res.converged
            rows.append(dict(x=x, value=res.value, error_estimate=res.error))
    if ns.csv:
        sys.stdout.write("x,value,error_estimate\n")
        for row in rows:
            sys.stdout.write(
                f"{row['x']},{format(row['value'], '.17g')},{format(row['error_estimate'], '.17g')}\n"
            )
        return EXIT_OK if converged else EXIT_CONVERGENCE
    rec = _record("marginal", base_params, started, values=rows, converged=converged)
    if ns.method == "mc":
        rec["seed"] = ns.seed
    _emit(rec)
    return EXIT_OK if converged else EXIT_CONVERGENCE


def _binomial_sem(k: int, n: int) -> float:
    phat = k / n
    return (phat * (1.0 - phat) / n) ** 0.5


def _step_window_config(ns) -> Configuration:
    width = ns.m + int(5 * ns.t) + 20
    return Configuration(tuple(range(1, width + 1)))


def cmd_expect(ns) -> int:
    from .moments import expected_first_particle

    started = time.perf_counter()
    params = _params(ns)
    Y = Configuration(_int_list(ns.y))
    res = expected_first_particle(Y, ns.t, params, ns.tol)
    rec = _record(
        "expect",
        dict(y=list(Y.positions), t=ns.t, p=ns.p, tol=ns.tol, threads=_threads(ns)),
        started,
        value=res.value, error_estimate=res.error, converged=res.converged,
    )
    _emit(rec)
    return EXIT_OK if res.converged else EXIT_CONVERGENCE


def _verify_identities(ns):
    reports = run_identity_suite(samples=ns.samples, seed=ns.seed)
    checks = []
    for r in reports:
        line = f"{'PASS' if r.passed else 'FAIL'} {r.name} n={r.n} p={r.p} max_rel={r.max_rel_error:.3e}"
        sys.stderr.write(line + "\n")
        checks.append(dict(name=f"{r.name}:n={r.n}:p={r.p}", passed=r.passed,
                           max_rel_error=r.max_rel_error))
    return checks


def _verify_consistency(ns):
    checks = []
    for p in (0.5, 0.7):
        params = ModelParams.from_p(p)
        Y = Configuration((0, 2))
        for m in (1, 2):
            for x in (m - 2, m, m + 2):
                mq = MarginalQuery(Y, m, x, 0.5, params)
                a = mth_particle_small(mq, 1e-10).value
                b = mth_particle_large(mq, 1e-10).value
                c = mth_particle_tu(mq, 1e-10).value
                worst = max(abs(a - b), abs(a - c))
                ok = worst < 1e-8
                name = f"marginal-paths:p={p}:m={m}:x={x}"
                sys.stderr.write(f"{'PASS' if ok else 'FAIL'} {name} max_abs={worst:.3e}\n")
                checks.append(dict(name=name, passed=ok, max_abs_error=worst))
    return checks


def _verify_oracle(ns):
    checks = []
    for p in (0.5, 0.7):
        params = ModelParams.from_p(p)
        Y = Configuration((0, 1))
        dist = master_equation_uniformization(Y, 0.5, params, 1e-12)
        worst = 0.0
        for X in [(0, 1), (-1, 1), (1, 2), (-1, 2)]:
            q = TransitionQuery(Y, Configuration(X), 0.5, params)
            worst = max(worst, abs(transition_probability(q, 1e-10).value - dist.probs.get(X, 0.0)))
        ok = worst < 1e-8
        name = f"contour-vs-uniformization:p={p}"
        sys.stderr.write(f"{'PASS' if ok else 'FAIL'} {name} max_abs={worst:.3e}\n")
        checks.append(dict(name=name, passed=ok, max_abs_error=worst))
    return checks


def cmd_verify(ns) -> int:
    started = time.perf_counter()
    runner = {
        "identities": _verify_identities,
        "consistency": _verify_consistency,
        "oracle": _verify_oracle,
    }[ns.suite]
    checks = runner(ns)
    passed = all(c["passed"] for c in checks)
    rec = _record(
        "verify",
        dict(suite=ns.suite, samples=getattr(ns, "samples", None), seed=ns.seed,
             threads=_threads(ns)),
        started, checks=checks, converged=passed,
    )
    _emit(rec)
    return EXIT_OK if passed else EXIT_INCONSISTENT


def cmd_simulate(ns) -> int:
    started = time.perf_counter()
    params = _params(ns)
    Y = Configuration(_int_list(ns.y)) if ns.y else _step_window_config(ns)
    batch = gillespie_simulate(Y, ns.t, params, ns.runs, ns.seed)
    counts = {str(m): {str(site): c for site, c in sorted(batch.marginal_counts(m).items())}
              for m in range(1, Y.n + 1)}
    rec = _record(
        "simulate",
        dict(y=list(Y.positions), t=ns.t, p=ns.p, runs=ns.runs, threads=_threads(ns)),
        started, seed=ns.seed, counts=counts, converged=True,
    )
    _emit(rec)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="asep", description=__doc__)
    top.add_argument("--threads", type=int, default=None,
                     help="cap worker count (ASEP_THREADS env var as fallback)")
    sub = top.add_subparsers(dest="subcommand", required=True)

    tr = sub.add_parser("transition", help="N-particle transition probability")
    tr.add_argument("--y", required=True, help="initial configuration, e.g. 0,1,4")
    tr.add_argument("--x", required=True, help="final configuration")
    tr.add_argument("--t", type=float, required=True)
    tr.add_argument("--p", type=float, required=True)
    tr.add_argument("--tol", type=float, default=1e-10)
    tr.add_argument("--method", choices=("contour", "determinant", "oracle"), default="contour")
    tr.set_defaults(func=cmd_transition)

    mg = sub.add_parser("marginal", help="law of the m-th left-most particle")
    mg.add_argument("--y", default=None)
    mg.add_argument("--step", action="store_true", help="every positive site occupied")
    mg.add_argument("--m", type=int, required=True)
    mg.add_argument("--x", type=int, default=None)
    mg.add_argument("--x-range", dest="x_range", type=_x_range, default=None)
    mg.add_argument("--t", type=float, required=True)
    mg.add_argument("--p", type=float, required=True)
    mg.add_argument("--tol", type=float, default=1e-9)
    mg.add_argument("--method",
                    choices=("small", "large", "tu", "corollary", "oracle", "mc"),
                    default="small")
    mg.add_argument("--runs", type=int, default=100000)
    mg.add_argument("--seed", type=int, default=1)
    mg.add_argument("--max-sigma", dest="max_sigma", type=int, default=20)
    mg.add_argument("--radius", type=float, default=None, help="large-contour override")
    mg.add_argument("--csv", action="store_true")
    mg.set_defaults(func=cmd_marginal)

    ex = sub.add_parser("expect", help="expected position of the left-most particle")
    ex.add_argument("--y", required=True)
    ex.add_argument("--t", type=float, required=True)
    ex.add_argument("--p", type=float, required=True)
    ex.add_argument("--tol", type=float, default=1e-8)
    ex.set_defaults(func=cmd_expect)

    vf = sub.add_parser("verify", help="run a verification suite")
    vf.add_argument("--suite", choices=("identities", "consistency", "oracle"), required=True)
    vf.add_argument("--samples", type=int, default=30)
    vf.add_argument("--seed", type=int, default=20080316)
    vf.set_defaults(func=cmd_verify)

    sm = sub.add_parser("simulate", help="Monte Carlo batch")
    sm.add_argument("--y", default=None)
    sm.add_argument("--step", action="store_true")
    sm.add_argument("--m", type=int, default=1, help="sizing hint for the step window")
    sm.add_argument("--t", type=float, required=True)
    sm.add_argument("--p", type=float, required=True)
    sm.add_argument("--runs", type=int, required=True)
    sm.add_argument("--seed", type=int, required=True)
    sm.set_defaults(func=cmd_simulate)
    return top


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
        return ns.func(ns)
    except (DomainError,) as exc:
        _emit_error("domain", exc)
        return EXIT_DOMAIN
    except (ConvergenceError, BudgetError) as exc:
        _emit_error("convergence", exc)
        return EXIT_CONVERGENCE
    except (ConsistencyError, PoleError, EvaluationError) as exc:
        _emit_error("inconsistency", exc)
        return EXIT_INCONSISTENT
    except AsepError as exc:  # pragma: no cover
        _emit_error("error", exc)
        return EXIT_INCONSISTENT


def _emit_error(kind: str, exc: Exception) -> None:
    _emit({
        "schema": SCHEMA_ID,
        "command": "error",
        "params": {},
        "version": __version__,
        "wall_time_s": 0.0,
        "error": {"type": kind, "message": str(exc)},
    })


if __name__ == "__main__":
    sys.exit(main())
