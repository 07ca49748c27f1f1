"""Command-line front end.

Exit codes follow an oracle-friendly trichotomy: 0 when the requested
property holds or the solve succeeded, 2 when the run was fine but the
property fails / the problem is infeasible, 1 for usage or internal errors.
Numeric output carries 12 significant digits plus the exact rational where
one is available.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction

from . import fairness, payments, testkit, twoebm, welfare_opt
from .lpengine import InfeasibleError
from .model import (
    Allocation,
    Instance,
    Lottery,
    Matching,
    WelfareObjective,
    expected_welfare,
    parse_rational,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FALSE = 2


def _num(value):
    """12-significant-digit float plus the exact rational when available."""
    if isinstance(value, Fraction):
        return {"value": float(f"{float(value):.12g}"), "exact": str(value)}
    return {"value": float(f"{float(value):.12g}")}


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as err:
        raise SystemExit(
            f"error: malformed JSON in {path}: line {err.lineno} column {err.colno}: {err.msg}"
        ) from err
    except OSError as err:
        raise SystemExit(f"error: cannot read {path}: {err}") from err


def _load_instance(path) -> Instance:
    return Instance.from_json(_load_json(path))


def _load_outcome(data):
    if "matching" in data:
        return Matching(tuple(data["matching"]))
    if "bundles" in data:
        return Allocation(tuple(tuple(b) for b in data["bundles"]))
    raise SystemExit("error: outcome JSON needs 'matching' or 'bundles'")


def _load_lottery(path) -> Lottery:
    data = _load_json(path)
    if "support" in data:
        return Lottery.from_json(data)
    return Lottery.deterministic(_load_outcome(data))


def _lottery_json(lottery: Lottery):
    entries = []
    for outcome, p in lottery.support:
        entry = {"prob": _num(p)}
        if isinstance(outcome, Matching):
            entry["matching"] = list(outcome.assignment)
        else:
            entry["bundles"] = [list(b) for b in outcome.bundles]
        entries.append(entry)
    return {"support": entries}


def _emit(data):
    json.dump(data, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _load_payments(path) -> payments.PaymentScheme:
    data = _load_json(path)
    kind = data.get("kind", "A").upper()
    raw = data["payments"]
    if kind == "A":
        return payments.PaymentScheme.a_payments(tuple(parse_rational(v) for v in raw))
    if kind == "B":
        mapping = {}
        for key, v in raw.items():
            bundle = tuple(int(x) for x in str(key).split(","))
            mapping[bundle] = parse_rational(v)
        return payments.PaymentScheme.b_payments(mapping)
    if kind == "C":
        mapping = {}
        for entry in raw:
            outcome = _load_outcome(entry)
            from .model import outcome_key

            mapping[outcome_key(outcome)] = tuple(parse_rational(v) for v in entry["p"])
        return payments.PaymentScheme.c_payments(mapping)
    raise SystemExit(f"error: unknown payment kind {kind!r}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_check(args):
    instance = _load_instance(args.instance)
    prop = args.property
    if prop != "mms" and not args.target:
        raise SystemExit("error: this property needs an allocation or lottery file")
    if prop in ("ef", "prop", "eef"):
        outcome = _load_outcome(_load_json(args.target))
        if prop == "ef":
            report = fairness.is_envy_free(instance, outcome)
        elif prop == "prop":
            report = fairness.is_proportional(instance, outcome)
        else:
            alloc = outcome if isinstance(outcome, Allocation) else Allocation(outcome.bundles())
            report = fairness.is_eef(instance, alloc)
    elif prop in ("ief", "exante", "expost"):
        lottery = _load_lottery(args.target)
        if prop == "ief":
            report = fairness.is_ief(instance, lottery, args.epsilon)
        elif prop == "exante":
            report = fairness.is_ex_ante_ef(instance, lottery)
        else:
            report = fairness.is_ex_post_ef(instance, lottery)
    elif prop == "mms":
        exists, witness = fairness.exists_mms_allocation(instance)
        _emit({"property": "mms_allocation_exists", "holds": exists,
               "witness": None if witness is None else [list(b) for b in witness.bundles]})
        return EXIT_OK if exists else EXIT_FALSE
    else:
        raise SystemExit(f"error: unknown property {prop!r}")
    out = report.to_json()
    if report.margin is not None:
        out["margin"] = _num(report.margin)
    _emit(out)
    return EXIT_OK if report.holds else EXIT_FALSE


def cmd_solve(args):
    instance = _load_instance(args.instance)
    objective = {
        "util": WelfareObjective.UTILITARIAN,
        "egal": WelfareObjective.EGALITARIAN,
        "lognash": WelfareObjective.LOG_NASH,
    }[args.objective]
    try:
        result = welfare_opt.solve_ief_welfare(instance, objective)
    except InfeasibleError as err:
        _emit({"status": "infeasible", "detail": str(err)})
        return EXIT_FALSE
    except welfare_opt.LogNashUnsupportableError as err:
        _emit({"status": "lognash_unsupportable", "detail": str(err)})
        return EXIT_FALSE
    _emit({
        "status": "optimal",
        "objective_name": result.objective_name,
        "objective": _num(result.objective),
        "lottery": _lottery_json(result.lottery),
        "support_welfare": [_num(w) for w in result.support_welfare],
        "iterations": result.iterations,
    })
    return EXIT_OK


def cmd_2ebm(args):
    data = _load_json(args.problem)
    weights = twoebm.EdgePairWeights.from_entries(
        data["n"],
        [tuple(e) for e in data.get("psi", [])],
        [tuple(e) for e in data.get("forbidden", [])],
    )
    try:
        matching, value = twoebm.solve_2ebm(weights)
    except twoebm.InfeasibleMatchingError as err:
        _emit({"status": "infeasible", "detail": str(err)})
        return EXIT_FALSE
    _emit({"status": "optimal", "matching": list(matching.assignment), "value": _num(value)})
    return EXIT_OK


def cmd_graph(args):
    instance = _load_instance(args.instance)
    lottery = _load_lottery(args.lottery)
    graph = payments.build_envy_graph(instance, lottery)
    _emit({
        "n": graph.n,
        "weights": [[_num(w) for w in row] for row in graph.weights],
        "ief_able_with_agent_payments": payments.is_ief_able_A(graph),
    })
    return EXIT_OK


def cmd_apay(args):
    instance = _load_instance(args.instance)
    lottery = _load_lottery(args.lottery)
    graph = payments.build_envy_graph(instance, lottery)
    try:
        vector = payments.compute_A_payments(graph)
    except payments.PositiveCycleError as err:
        _emit({"status": "not_ief_able", "detail": str(err)})
        return EXIT_FALSE
    _emit({"status": "ok", "payments": [_num(p) for p in vector],
           "total": _num(sum(vector))})
    return EXIT_OK


def cmd_paycheck(args):
    instance = _load_instance(args.instance)
    lottery = _load_lottery(args.lottery)
    scheme = _load_payments(args.payments)
    if scheme.kind != args.kind.upper():
        raise SystemExit(f"error: payment file is kind {scheme.kind}, not {args.kind}")
    report = payments.check_ief_with_payments(instance, lottery, scheme, args.epsilon)
    out = report.to_json()
    if report.margin is not None:
        out["margin"] = _num(report.margin)
    _emit(out)
    return EXIT_OK if report.holds else EXIT_FALSE


def _payment_result_json(result):
    keyed = []
    for outcome, _ in result.lottery.support:
        from .model import outcome_key

        p = result.payments.data[outcome_key(outcome)]
        entry = {"p": [_num(v) for v in p]}
        if isinstance(outcome, Matching):
            entry["matching"] = list(outcome.assignment)
        keyed.append(entry)
    return {
        "status": "optimal",
        "lottery": _lottery_json(result.lottery),
        "payments": keyed,
        "total_expected_payment": _num(result.total_expected_payment),
        "min_expected_utility": _num(result.min_expected_utility),
        "lp_objective": _num(result.lp_objective),
        "epsilon": result.epsilon,
        "iterations": result.iterations,
    }


def cmd_subsidy(args):
    instance = _load_instance(args.instance)
    result = payments.solve_subsidy_min(instance, args.epsilon)
    _emit(_payment_result_json(result))
    return EXIT_OK


def cmd_rent(args):
    instance = _load_instance(args.instance)
    try:
        result = payments.solve_utility_max(instance, args.rent, args.epsilon)
    except InfeasibleError as err:
        _emit({"status": "infeasible", "detail": str(err)})
        return EXIT_FALSE
    _emit(_payment_result_json(result))
    return EXIT_OK


def cmd_oracle(args):
    instance = _load_instance(args.instance)
    if args.kind == "ief-exists":
        if instance.is_matching_instance:
            exists = testkit.ief_matching_feasible_exact(instance)
        else:
            exists = testkit.ief_existence_general(instance)
        _emit({"kind": args.kind, "ief_lottery_exists": exists})
        return EXIT_OK if exists else EXIT_FALSE
    if args.kind == "welfare-lp":
        objective = {
            "util": WelfareObjective.UTILITARIAN,
            "egal": WelfareObjective.EGALITARIAN,
            "lognash": WelfareObjective.LOG_NASH,
        }[args.objective]
        ref = testkit.full_lp_reference(instance, "welfare", objective=objective)
        out = {"kind": args.kind, "status": ref.status}
        if ref.status == "optimal":
            out["value"] = _num(ref.value)
            out["lottery"] = {str(list(k)): _num(v) for k, v in ref.lottery.items()}
        _emit(out)
        return EXIT_OK if ref.status == "optimal" else EXIT_FALSE
    raise SystemExit(f"error: unknown oracle kind {args.kind!r}")


def _price_row(family, n, eps):
    if family in ("util", "nash"):
        if n % 2:
            raise SystemExit("error: util/nash families need even n")
        size = n // 2
    else:
        size = n
    instance = testkit.gen_price_family(family, size, eps)
    if family == "nash":
        best = welfare_opt.unconstrained_optimum(instance, WelfareObjective.AVERAGE_NASH)
        result = welfare_opt.solve_ief_welfare(instance, WelfareObjective.UTILITARIAN)
        ief_value = float(expected_welfare(instance, result.lottery,
                                           WelfareObjective.AVERAGE_NASH))
        unconstrained = float(best[1])
    else:
        objective = (WelfareObjective.UTILITARIAN if family in ("util", "maxenvy", "pareto")
                     else WelfareObjective.EGALITARIAN)
        best = welfare_opt.unconstrained_optimum(instance, objective)
        result = welfare_opt.solve_ief_welfare(instance, objective)
        ief_value = result.objective
        unconstrained = float(best[1])
    ratio = unconstrained / ief_value if ief_value else float("inf")
    return [instance.n_agents, f"{unconstrained:.12g}", f"{ief_value:.12g}", f"{ratio:.12g}"]


def cmd_experiment(args):
    if args.what != "price":
        raise SystemExit(f"error: unknown experiment {args.what!r}")
    eps = parse_rational(args.eps) if args.eps else None
    sizes = [int(s) for s in args.n.split(",")]
    jobs = [(args.family, n, eps) for n in sizes]
    if args.jobs > 1:
        import concurrent.futures

        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_price_row_star, jobs))
    else:
        rows = [_price_row(*job) for job in jobs]
    writer = csv.writer(sys.stdout)
    writer.writerow(["n", "unconstrained_optimum", "ief_optimum", "ratio"])
    writer.writerows(rows)
    return EXIT_OK


def _price_row_star(job):
    return _price_row(*job)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ieflot",
        description="Interim envy-free lotteries: checkers, welfare solvers, payments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="check a fairness property")
    p.add_argument("--property", required=True,
                   choices=["ef", "prop", "ief", "exante", "expost", "eef", "mms"])
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("instance")
    p.add_argument("target", nargs="?", help="allocation or lottery JSON")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("solve", help="welfare-optimal interim envy-free lottery")
    p.add_argument("--objective", required=True, choices=["util", "egal", "lognash"])
    p.add_argument("instance")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("2ebm", help="maximum edge-pair-weighted perfect matching")
    p.add_argument("problem", help='JSON {"n":, "psi": [[i,j,k,l,w],...], "forbidden": [[i,j],...]}')
    p.set_defaults(func=cmd_2ebm)

    p = sub.add_parser("graph", help="interim envy graph of a lottery")
    p.add_argument("instance")
    p.add_argument("lottery")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("apay", help="agent payments via longest paths")
    p.add_argument("instance")
    p.add_argument("lottery")
    p.set_defaults(func=cmd_apay)

    p = sub.add_parser("paycheck", help="verify iEF with payments")
    p.add_argument("--kind", required=True, choices=["A", "B", "C", "a", "b", "c"])
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("instance")
    p.add_argument("lottery")
    p.add_argument("payments")
    p.set_defaults(func=cmd_paycheck)

    p = sub.add_parser("subsidy", help="minimum total expected subsidy with C-payments")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("instance")
    p.set_defaults(func=cmd_subsidy)

    p = sub.add_parser("rent", help="maximum minimum expected utility under a rent")
    p.add_argument("--rent", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("instance")
    p.set_defaults(func=cmd_rent)

    p = sub.add_parser("oracle", help="exact/reference oracles")
    p.add_argument("--kind", required=True, choices=["ief-exists", "welfare-lp"])
    p.add_argument("--objective", default="util", choices=["util", "egal", "lognash"])
    p.add_argument("instance")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("experiment", help="price-of-fairness experiment CSV")
    p.add_argument("what", choices=["price"])
    p.add_argument("--family", required=True,
                   choices=["util", "egal", "nash", "maxenvy", "pareto"])
    p.add_argument("--n", required=True, help="comma-separated instance sizes")
    p.add_argument("--eps", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0, help="reserved for randomized runs")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except InfeasibleError as err:
        _emit({"status": "infeasible", "detail": str(err)})
        return EXIT_FALSE
    except Exception as err:  # internal error -> exit 1 with a diagnostic
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
