"""Command-line interface.

Subcommands: fit (train a model and save it), eval (score a saved model
on a dataset), curve (learning curves to CSV), audit (axiom checks on a
saved model), synth (generate synthetic data from a known model).

Exit codes: 0 success, 1 usage error, 2 data or file error,
3 numerical failure.
"""

import argparse
import itertools
import sys

import numpy as np

from . import axioms, data as data_mod, evaluate, luce, model as model_mod, param, serialize
from .errors import (
    DegenerateSplit,
    EmptyDataset,
    EmptySubset,
    IndexOutOfRange,
    InvalidChoice,
    InvalidK,
    MultipleClosedClasses,
    NoConvergence,
    NotConnected,
    OptimizerFailure,
    ParseError,
    PcmcError,
    SingularSystem,
    UnseenSet,
)

_KINDS = ("pcmc", "mnl", "mmnl", "bladechest")
_REGIMES = ("randq", "mnl", "bladechest")

_DATA_ERRORS = (
    OSError, ParseError, InvalidChoice, EmptyDataset, EmptySubset,
    DegenerateSplit, UnseenSet, IndexOutOfRange,
)
_NUMERIC_ERRORS = (
    OptimizerFailure, NoConvergence, NotConnected,
    SingularSystem, MultipleClosedClasses,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError("%s: %s" % (self.prog, message))


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _fraction_list(text):
    out = []
    for tok in text.split(","):
        f = float(tok)
        if not (0.0 < f <= 1.0):
            raise argparse.ArgumentTypeError("fractions must lie in (0, 1]")
        out.append(f)
    if not out:
        raise argparse.ArgumentTypeError("need at least one fraction")
    return out


def _model_list(text):
    out = [tok.strip() for tok in text.split(",") if tok.strip()]
    if not out:
        raise argparse.ArgumentTypeError("need at least one model kind")
    for kind in out:
        if kind not in _KINDS:
            raise argparse.ArgumentTypeError("unknown model kind %r" % kind)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pcmc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a model to a dataset")
    p_fit.add_argument("--data", required=True)
    p_fit.add_argument("--model", required=True, choices=_KINDS)
    p_fit.add_argument("--out", required=True)
    p_fit.add_argument("--alpha", type=float, default=0.1,
                       help="smoothing pseudocount (default 0.1)")
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--k", type=_positive_int, default=None,
                       help="mixture size for mmnl")
    p_fit.add_argument("--d", type=_positive_int, default=2,
                       help="embedding dimension for bladechest")
    p_fit.add_argument("--variant", choices=("distance", "inner"),
                       default="distance")
    p_fit.add_argument("--max-iters", type=_positive_int, default=200)
    p_fit.add_argument("--format", default="chosen-set-v1",
                       choices=("chosen-set-v1", "sf-matrix"))
    p_fit.add_argument("--report", default=None,
                       help="also write a fit report JSON here")

    p_eval = sub.add_parser("eval", help="score a saved model on a dataset")
    p_eval.add_argument("--model-file", required=True)
    p_eval.add_argument("--data", required=True)
    p_eval.add_argument("--out", required=True)
    p_eval.add_argument("--format", default="chosen-set-v1",
                        choices=("chosen-set-v1", "sf-matrix"))

    p_curve = sub.add_parser("curve", help="learning curve over training fractions")
    p_curve.add_argument("--data", required=True)
    p_curve.add_argument("--models", required=True, type=_model_list,
                         help="comma-separated model kinds")
    p_curve.add_argument("--fractions", required=True, type=_fraction_list,
                         help="comma-separated training fractions")
    p_curve.add_argument("--permutations", required=True, type=_positive_int)
    p_curve.add_argument("--seed", type=int, default=0)
    p_curve.add_argument("--out", required=True)
    p_curve.add_argument("--alpha", type=float, default=0.1)
    p_curve.add_argument("--k", type=_positive_int, default=None)
    p_curve.add_argument("--d", type=_positive_int, default=2)
    p_curve.add_argument("--max-iters", type=_positive_int, default=200)
    p_curve.add_argument("--format", default="chosen-set-v1",
                         choices=("chosen-set-v1", "sf-matrix"))

    p_audit = sub.add_parser("audit", help="axiom checks on a saved model")
    p_audit.add_argument("--model-file", required=True)
    p_audit.add_argument("--out", required=True)
    p_audit.add_argument("--expand-k", type=_positive_int, default=2)

    p_synth = sub.add_parser("synth", help="sample synthetic data from a known model")
    p_synth.add_argument("--regime", required=True, choices=_REGIMES)
    p_synth.add_argument("--n", required=True, type=_positive_int)
    p_synth.add_argument("--samples", required=True, type=_positive_int)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--sets", type=_positive_int, default=25,
                         help="number of distinct triple menus (default 25)")
    p_synth.add_argument("--model-out", default=None,
                         help="also save the generating model here")
    return parser


def _write_text(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _cmd_fit(args) -> int:
    dataset = data_mod.load(args.data, format=args.format)
    cfg = model_mod.FitConfig(smoothing_alpha=args.alpha, seed=args.seed,
                              max_iters=args.max_iters)
    report_dict = None
    if args.model == "pcmc":
        report = model_mod.fit(dataset, cfg)
        fitted = report.params
        report_dict = serialize.fit_report_to_dict(report)
    elif args.model == "mnl":
        fitted = luce.fit_mnl(dataset, alpha=args.alpha)
    elif args.model == "mmnl":
        fitted = luce.fit_mmnl(dataset, k=args.k, alpha=args.alpha,
                               seed=args.seed)
    else:
        fitted = param.fit_bladechest(dataset, d=args.d, variant=args.variant,
                                      cfg=cfg)
    if report_dict is None:
        report_dict = {
            "loglik": model_mod.log_likelihood(fitted, dataset),
            "n_observations": len(dataset),
        }
    serialize.save_model(fitted, args.out)
    if args.report:
        _write_text(args.report, serialize.dumps(report_dict))
    return 0


def _cmd_eval(args) -> int:
    fitted = serialize.load_model(args.model_file)
    dataset = data_mod.load(args.data, format=args.format)
    report = evaluate.prediction_error(fitted, dataset)
    _write_text(args.out, serialize.dumps(serialize.error_report_to_dict(report)))
    return 0


def _cmd_curve(args) -> int:
    dataset = data_mod.load(args.data, format=args.format)
    specs = [
        evaluate.FitSpec(kind=kind, alpha=args.alpha, k=args.k, d=args.d,
                         max_iters=args.max_iters)
        for kind in args.models
    ]
    curve = evaluate.learning_curve(
        dataset, specs, args.fractions, args.permutations, seed=args.seed,
    )
    _write_text(args.out, serialize.curve_to_csv(curve))
    return 0


def _cmd_audit(args) -> int:
    fitted = serialize.load_model(args.model_file)
    report = axioms.run_audit(fitted, expand_k=args.expand_k)
    _write_text(args.out, serialize.dumps(report))
    return 0


def _cmd_synth(args) -> int:
    if args.n < 3:
        raise _UsageError("synth needs --n of at least 3")
    seeds = np.random.SeedSequence(args.seed).spawn(3)
    if args.regime == "randq":
        generator = model_mod.PcmcModel(q=data_mod.gen_random_q(args.n, seeds[0]))
    elif args.regime == "mnl":
        generator = data_mod.gen_mnl_simplex(args.n, seeds[0])
    else:
        generator = data_mod.gen_bladechest_circle(args.n, seeds[0])

    triples = list(itertools.combinations(range(args.n), 3))
    want = min(args.sets, len(triples))
    rng = np.random.default_rng(seeds[1])
    picked = rng.choice(len(triples), size=want, replace=False)
    menus = [triples[i] for i in sorted(picked)]

    dataset = data_mod.sample(generator, menus, args.samples, seeds[2])
    data_mod.save(dataset, args.out)
    if args.model_out:
        serialize.save_model(generator, args.model_out)
    return 0


_COMMANDS = {
    "fit": _cmd_fit,
    "eval": _cmd_eval,
    "curve": _cmd_curve,
    "audit": _cmd_audit,
    "synth": _cmd_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except _NUMERIC_ERRORS as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return 3
    except _DATA_ERRORS as exc:
        print("data error: %s" % exc, file=sys.stderr)
        return 2
    except PcmcError as exc:
        print("data error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
