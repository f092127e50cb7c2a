"""Command-line interface.

Subcommands: simulate (spec+dist+n -> CSV/JSON), fit (CSV -> parameter and
diagnostics JSON), test (k CSVs -> test-result JSON), mc (study config ->
report JSON + delimited cell table + power figure), diag (residual-process
remainder sweep).  Exit codes: 0 success, 1 usage error, 2 computational
failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .dataio import (dump_json, fit_to_dict, ingest_csv, test_result_to_dict,
                     write_series_csv)
from .errors import DivergenceError, FitError, StudyError
from .figures import save_power_curves, save_remainder_decay
from .garch import GarchSpec, InitRule, innovation_family, simulate
from .ksample import asymptotic_test, bootstrap_test, decompose_diagnostic
from .qml import fit, model_diagnostics
from .ranks import score_by_name
from .rng import stream
from .study import DGP_SPECS, parse_study_config, run_study, study_innovation


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise _UsageError(message)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _parse_spec(args) -> GarchSpec:
    return GarchSpec(args.omega, _floats(args.alpha) if args.alpha else (),
                     _floats(args.beta) if args.beta else ())


def _parse_orders(text: str, k: int) -> list[tuple[int, int]]:
    groups = [g for g in text.split(";") if g.strip()]
    pairs = []
    for g in groups:
        p, q = (int(v) for v in g.split(","))
        pairs.append((p, q))
    if len(pairs) == 1:
        return pairs * k
    if len(pairs) != k:
        raise ValueError(f"--orders lists {len(pairs)} pairs for {k} groups")
    return pairs


def _init_rule(name: str) -> InitRule:
    return InitRule.OMEGA if name == "omega" else InitRule.FIRST_SQUARED


def _write_or_print(text: str, out: str | None) -> None:
    if out is None:
        print(text)
    else:
        with open(out, "w") as fh:
            fh.write(text + "\n")


def cmd_simulate(args) -> int:
    spec = _parse_spec(args)
    if args.centered_mixture:
        dist = innovation_family(args.dist, args.phi)
    else:
        dist = study_innovation(args.dist, args.phi)
    sample = simulate(spec, dist, args.n, args.warmup, seed=args.seed)
    if args.format == "csv":
        if args.out is None:
            print("value")
            for v in sample.values:
                print(repr(float(v)))
        else:
            write_series_csv(args.out, sample.values)
    else:
        doc = {"schema": "garchrank.simulate/1", "seed": args.seed,
               "warmup_discarded": sample.warmup_discarded,
               "values": [float(v) for v in sample.values]}
        _write_or_print(dump_json(doc), args.out)
    return 0


def cmd_fit(args) -> int:
    data = ingest_csv(args.csv, column=args.column,
                      returns_or_prices="prices" if args.prices else "returns",
                      log_returns=args.log_returns, tail=args.tail)
    p, q = (int(v) for v in args.orders.split(","))
    res = fit(data.values, p, q, init_rule=_init_rule(args.init),
              starts=args.starts)
    diag = model_diagnostics(res, data.values)
    doc = {"schema": "garchrank.fit/1", "input": args.csv,
           "column": data.column, "rows_dropped": data.dropped}
    doc.update(fit_to_dict(res))
    doc["diagnostics"] = {
        "U_hat": [[float(v) for v in row] for row in diag.U_hat],
        "tau_hat": [float(v) for v in diag.tau_hat],
        "kappa_hat": diag.kappa_hat,
        "delta_hat": [float(v) for v in diag.delta_hat],
    }
    _write_or_print(dump_json(doc), args.out)
    return 0


def cmd_test(args) -> int:
    samples = []
    for path in args.csv:
        data = ingest_csv(path, column=args.column,
                          returns_or_prices="prices" if args.prices else "returns",
                          log_returns=args.log_returns, tail=args.tail)
        samples.append(data.values)
    orders = _parse_orders(args.orders, len(samples))
    score = score_by_name(args.score)
    bootstrap = None
    if args.bootstrap > 0:
        bootstrap = bootstrap_test(samples, orders, score, args.level,
                                   B=args.bootstrap, n0=args.warmup,
                                   seed=args.seed,
                                   init_rule=_init_rule(args.init),
                                   starts=args.starts,
                                   recompute_sigma=not args.fast_sigma,
                                   rect_m=args.rect_m)
        observed = bootstrap.observed
    else:
        observed = asymptotic_test(samples, orders, score, args.level,
                                   init_rule=_init_rule(args.init),
                                   starts=args.starts)
    doc = test_result_to_dict(observed, bootstrap)
    doc["inputs"] = list(args.csv)
    _write_or_print(dump_json(doc), args.out)
    return 0


def cmd_mc(args) -> int:
    config = parse_study_config(args.config)
    report = run_study(config, seed=args.seed)
    prefix = args.out
    with open(prefix + ".json", "w") as fh:
        fh.write(report.to_json() + "\n")
    with open(prefix + ".csv", "w") as fh:
        fh.write(report.cells_csv())
    if not args.no_figure:
        save_power_curves(report, prefix + ".png")
    print(report.text_table())
    print(f"runtime: {report.runtime_seconds:.1f}s  "
          f"(written: {prefix}.json, {prefix}.csv"
          + ("" if args.no_figure else f", {prefix}.png") + ")",
          file=sys.stderr)
    return 0


def cmd_diag(args) -> int:
    spec = DGP_SPECS[args.dgp] if args.dgp != "custom" else _parse_spec(args)
    n_values = [int(v) for v in args.n.split(",")]
    sup_norms = []
    for n in n_values:
        sups = []
        for r in range(args.replicates):
            x = simulate(spec, study_innovation("normal", 0.0), n, args.warmup,
                         seed=stream(args.seed, n, r)).values
            d = decompose_diagnostic(x, spec, starts=args.starts)
            sups.append(d.sup_norm)
        sup_norms.append(sups)
    doc = {"schema": "garchrank.diag/1", "seed": args.seed,
           "spec": {"omega": spec.omega, "alpha": list(spec.alpha),
                    "beta": list(spec.beta)},
           "n_values": n_values,
           "replicates": args.replicates,
           "medians": [float(np.median(s)) for s in sup_norms],
           "sup_norms": [[float(v) for v in s] for s in sup_norms]}
    prefix = args.out
    with open(prefix + ".json", "w") as fh:
        fh.write(dump_json(doc) + "\n")
    if not args.no_figure:
        save_remainder_decay(n_values, sup_norms, prefix + ".png")
    for n, m in zip(n_values, doc["medians"]):
        print(f"n={n}: median sup-norm {m:.4f}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="garchrank",
                     description="Rank-based k-sample tests for GARCH "
                                 "innovation distributions")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate a GARCH path")
    sim.add_argument("--omega", type=float, required=True)
    sim.add_argument("--alpha", default="", help="comma-separated ARCH coefficients")
    sim.add_argument("--beta", default="", help="comma-separated GARCH coefficients")
    sim.add_argument("--dist", default="normal",
                     choices=["normal", "mixture", "student_t"])
    sim.add_argument("--phi", type=float, default=0.0,
                     help="mixing weight / reciprocal degrees of freedom")
    sim.add_argument("--centered-mixture", action="store_true",
                     help="center the mixture to mean 0 (default keeps the "
                          "simulation design's scale-only standardization)")
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--warmup", type=int, default=500)
    sim.add_argument("--seed", type=int, required=True)
    sim.add_argument("--format", choices=["csv", "json"], default="csv")
    sim.add_argument("--out", default=None)
    sim.set_defaults(func=cmd_simulate)

    fit_p = sub.add_parser("fit", help="QML fit of one series")
    fit_p.add_argument("csv")
    fit_p.add_argument("--orders", default="1,1", help="p,q")
    fit_p.add_argument("--column", default=None)
    fit_p.add_argument("--prices", action="store_true")
    fit_p.add_argument("--log-returns", action="store_true")
    fit_p.add_argument("--tail", type=int, default=None)
    fit_p.add_argument("--init", choices=["omega", "first_squared"],
                       default="omega")
    fit_p.add_argument("--starts", type=int, default=3)
    fit_p.add_argument("--out", default=None)
    fit_p.set_defaults(func=cmd_fit)

    test_p = sub.add_parser("test", help="k-sample innovation-distribution test")
    test_p.add_argument("csv", nargs="+", help="one CSV per group")
    test_p.add_argument("--score", default="wilcoxon",
                        choices=["wilcoxon", "vdw", "mood", "klotz"])
    test_p.add_argument("--level", type=float, default=0.05)
    test_p.add_argument("--bootstrap", type=int, default=0, metavar="B",
                        help="bootstrap replicates (0 = asymptotic test only)")
    test_p.add_argument("--seed", type=int, default=0)
    test_p.add_argument("--orders", default="1,1",
                        help="shared 'p,q' or per-group 'p,q;p,q;...'")
    test_p.add_argument("--warmup", type=int, default=500)
    test_p.add_argument("--column", default=None)
    test_p.add_argument("--prices", action="store_true")
    test_p.add_argument("--log-returns", action="store_true")
    test_p.add_argument("--tail", type=int, default=None)
    test_p.add_argument("--init", choices=["omega", "first_squared"],
                        default="omega")
    test_p.add_argument("--starts", type=int, default=3)
    test_p.add_argument("--fast-sigma", action="store_true",
                        help="reuse the observed dispersion estimate across "
                             "bootstrap replicates (faster, approximate)")
    test_p.add_argument("--rect-m", type=int, default=None,
                        help="cross-check mode: rectangular integration with "
                             "m cells for the bootstrap statistics")
    test_p.add_argument("--out", default=None)
    test_p.set_defaults(func=cmd_test)

    mc = sub.add_parser("mc", help="Monte Carlo size/power study")
    mc.add_argument("--config", required=True)
    mc.add_argument("--seed", type=int, required=True)
    mc.add_argument("--out", default="study",
                    help="output prefix (.json/.csv/.png)")
    mc.add_argument("--no-figure", action="store_true")
    mc.set_defaults(func=cmd_mc)

    diag = sub.add_parser("diag", help="residual-process remainder sweep")
    diag.add_argument("--dgp", default="dgp1", choices=["dgp1", "dgp2", "custom"])
    diag.add_argument("--omega", type=float, default=0.1)
    diag.add_argument("--alpha", default="0.1")
    diag.add_argument("--beta", default="0.1")
    diag.add_argument("--n", default="250,1000", help="comma-separated sizes")
    diag.add_argument("--replicates", type=int, default=100)
    diag.add_argument("--warmup", type=int, default=500)
    diag.add_argument("--seed", type=int, required=True)
    diag.add_argument("--starts", type=int, default=3)
    diag.add_argument("--out", default="diag")
    diag.add_argument("--no-figure", action="store_true")
    diag.set_defaults(func=cmd_diag)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError:
        return 1
    try:
        return args.func(args)
    except (ValueError, FitError, StudyError, DivergenceError, RuntimeError,
            OSError, np.linalg.LinAlgError) as exc:
        print(f"garchrank: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
