"""Command-line interface: prepare, demos, train, eval, experiment.

Exit codes: 0 on success, 1 on usage errors, 2 on runtime failures.
"""

import argparse
import logging
import sys
from typing import List, Optional

from . import pipeline
from .config import ExperimentConfig, apply_overrides, checked, load_config
from .demogen import mean_profile
from .evaluation import SUBDOMINANCE, export_results
from .loaders.compas import RACE_POLICIES
from .storage import (
    read_dataset,
    read_demos,
    read_report,
    read_report_document,
    write_dataset,
    write_demos,
    write_report,
)
from .trainer import TrainConfig
from .validation import SubdomfairError

DEFAULTS = ExperimentConfig()
TRAIN_DEFAULTS = TrainConfig()


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"❌ {self.prog}: {message}", file=sys.stderr)
        sys.exit(1)


def _float_list(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _str_list(text: str) -> List[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML config file; flags override its values")
    parser.add_argument("--seed", type=int, help=f"root seed (default: {DEFAULTS.seed})")
    parser.add_argument(
        "--workdir", help=f"directory for artifacts (default: {DEFAULTS.paths.workdir})"
    )
    parser.add_argument(
        "--metrics",
        type=_str_list,
        help=f"comma-separated metric ids (default: {','.join(DEFAULTS.metric_ids)})",
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for INFO, -vv for DEBUG"
    )


def _dataset_source(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--dataset",
        choices=("adult", "compas", "synthetic"),
        help=f"dataset to load (default: {DEFAULTS.dataset})",
    )
    parser.add_argument("--input", help="raw CSV for adult or compas")
    parser.add_argument("--m", type=int, help=f"synthetic items (default: {DEFAULTS.synthetic.m})")
    parser.add_argument("--l", type=int, help=f"synthetic features incl. intercept (default: {DEFAULTS.synthetic.l})")
    parser.add_argument(
        "--group-rate", type=float, help=f"synthetic P(a=1) (default: {DEFAULTS.synthetic.group_rate})"
    )
    parser.add_argument(
        "--flip-rate", type=float, help=f"synthetic label flip rate (default: {DEFAULTS.synthetic.flip_rate})"
    )
    parser.add_argument(
        "--include-protected",
        action="store_true",
        default=None,
        help="keep the protected attribute among the features",
    )
    parser.add_argument(
        "--compas-race",
        choices=RACE_POLICIES,
        help=f"COMPAS race binarization (default: {DEFAULTS.compas_race})",
    )


def _demo_options(parser: argparse.ArgumentParser, sweep: bool = False) -> None:
    parser.add_argument("--n", type=int, dest="n_demos", help=f"number of demonstrations (default: {DEFAULTS.n_demos})")
    if sweep:
        parser.add_argument(
            "--epsilons",
            type=_float_list,
            help=f"comma-separated noise rates (default: {','.join(f'{e:g}' for e in DEFAULTS.epsilons)})",
        )
    else:
        parser.add_argument("--epsilon", type=float, help=f"noise rate (default: {DEFAULTS.epsilon})")
    parser.add_argument(
        "--constraint", choices=("dp", "eqodds"), help=f"post-processing constraint (default: {DEFAULTS.constraint})"
    )
    parser.add_argument("--workers", type=int, help=f"parallel demo synthesis (default: {DEFAULTS.workers})")


def _train_options(parser: argparse.ArgumentParser) -> None:
    t = TRAIN_DEFAULTS
    parser.add_argument("--eta", type=float, help=f"learning rate (default: {t.eta})")
    parser.add_argument("--lambda", type=float, dest="lam", help=f"alpha regularizer (default: {t.lam})")
    parser.add_argument("--max-iters", type=int, help=f"iteration cap (default: {t.max_iters})")
    parser.add_argument("--patience", type=int, help=f"early-stop window (default: {t.patience})")
    parser.add_argument(
        "--samples-per-demo", type=int, help=f"sampled decisions per demo (default: {t.samples_per_demo})"
    )
    parser.add_argument("--init", choices=("scorer", "zeros"), help=f"initial policy (default: {t.init})")
    parser.add_argument(
        "--alpha-floor",
        type=float,
        help=f"lower bound on alpha_k in units of 1/spread of the demos (default: {t.alpha_floor})",
    )
    parser.add_argument(
        "--baseline",
        action=argparse.BooleanOptionalAction,
        default=None,
        help=f"subtract the mean objective in the gradient (default: {t.baseline})",
    )
    parser.add_argument(
        "--normalize",
        action=argparse.BooleanOptionalAction,
        default=None,
        help=f"scale each gradient term by 1/items of its demo (default: {t.normalize})",
    )


def _policy_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--group-feature",
        action=argparse.BooleanOptionalAction,
        default=None,
        help=f"give the learned policy the group indicator as a feature (default: {DEFAULTS.group_feature})",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="subdomfair",
        description="Fairness-aware subdominance minimization against noisy reference decisions",
    )
    subparsers = parser.add_subparsers(dest="action", parser_class=_Parser, help="Command to run")

    prepare = subparsers.add_parser("prepare", help="Load or synthesize a dataset and cache it")
    _common(prepare)
    _dataset_source(prepare)
    prepare.add_argument("--out", dest="dataset_path", help="dataset cache path")

    demos = subparsers.add_parser("demos", help="Synthesize training and held-out demonstrations")
    _common(demos)
    _demo_options(demos)
    demos.add_argument("--data", dest="dataset_path", help="dataset cache path")
    demos.add_argument("--out", dest="demos", help="training demonstrations path")
    demos.add_argument("--test-out", dest="test_demos", help="held-out demonstrations path")

    train = subparsers.add_parser("train", help="Train the policy against demonstrations")
    _common(train)
    _train_options(train)
    _policy_options(train)
    train.add_argument("--data", dest="dataset_path", help="dataset cache path")
    train.add_argument("--demos", help="training demonstrations path")
    train.add_argument("--out", dest="report", help="training report path")

    evaluate = subparsers.add_parser("eval", help="Compare methods and export result tables")
    _common(evaluate)
    _policy_options(evaluate)
    evaluate.add_argument("--data", dest="dataset_path", help="dataset cache path")
    evaluate.add_argument("--demos", help="training demonstrations path")
    evaluate.add_argument("--test-demos", help="held-out demonstrations path")
    evaluate.add_argument("--model", dest="report", help="training report path")
    evaluate.add_argument("--out", dest="results", help="results directory")

    experiment = subparsers.add_parser("experiment", help="Full pipeline over a sweep of noise rates")
    _common(experiment)
    _dataset_source(experiment)
    _demo_options(experiment, sweep=True)
    _train_options(experiment)
    _policy_options(experiment)

    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """Defaults, then the config file, then explicit flags."""
    cfg = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()

    def get(name):
        return getattr(args, name, None)

    top = {
        "dataset": get("dataset"),
        "epsilon": get("epsilon"),
        "epsilons": tuple(get("epsilons")) if get("epsilons") else None,
        "n_demos": get("n_demos"),
        "constraint": get("constraint"),
        "metric_ids": tuple(get("metrics")) if get("metrics") else None,
        "seed": get("seed"),
        "workers": get("workers"),
        "include_protected": get("include_protected"),
        "compas_race": get("compas_race"),
        "group_feature": get("group_feature"),
    }
    sections = {
        "train": {
            k: get(k)
            for k in (
                "eta",
                "lam",
                "alpha_floor",
                "max_iters",
                "patience",
                "samples_per_demo",
                "init",
                "baseline",
                "normalize",
            )
        },
        "synthetic": {k: get(k) for k in ("m", "l", "group_rate", "flip_rate")},
        "paths": {
            "workdir": get("workdir"),
            "input": get("input"),
            "dataset": get("dataset_path"),
            "demos": get("demos"),
            "test_demos": get("test_demos"),
            "report": get("report"),
            "results": get("results"),
        },
    }
    return checked(apply_overrides(cfg, top, sections))


def _profile_line(prof) -> str:
    return ", ".join(f"{k}={v:.4f}" for k, v in zip(prof.metric_ids, prof.values))


def cmd_prepare(cfg: ExperimentConfig) -> None:
    ds = pipeline.build_dataset(cfg)
    path = write_dataset(ds, cfg.paths.resolve("dataset"))
    rates = ds.base_rates()
    print(f"✅ wrote dataset → {path}")
    print(
        f"   M={len(ds)} L={ds.n_features} "
        f"P(y=1)={rates['label_rate']:.4f} P(a=1)={rates['group_rate']:.4f} "
        f"P(y=1|a=0)={rates['label_rate_group0']:.4f} P(y=1|a=1)={rates['label_rate_group1']:.4f}"
    )


def cmd_demos(cfg: ExperimentConfig) -> None:
    ds = read_dataset(cfg.paths.resolve("dataset"))
    halves = pipeline.shares(ds, cfg)
    train_demos, test_demos = pipeline.make_demos(cfg, halves, cfg.epsilon)
    path = write_demos(train_demos, cfg.paths.resolve("demos"))
    test_path = write_demos(test_demos, cfg.paths.resolve("test_demos"))
    print(f"✅ wrote {len(train_demos)} demos → {path}")
    print(f"✅ wrote {len(test_demos)} held-out demos → {test_path}")
    print(f"   mean profile: {_profile_line(mean_profile(train_demos))}")


def cmd_train(cfg: ExperimentConfig) -> None:
    ds = read_dataset(cfg.paths.resolve("dataset"))
    demos = read_demos(cfg.paths.resolve("demos"))
    halves = pipeline.shares(ds, cfg)
    model = pipeline.fit(cfg, halves.first, demos)
    path = write_report(model.report, cfg.paths.resolve("report"), extra=model.extra())
    report = model.report
    print(f"✅ wrote training report → {path}")
    print(
        f"   iterations={report.iterations_run} best={report.best_iteration} "
        f"subdominance={report.best_subdominance:.4f} bound_gamma={model.bound_gamma:.3f}"
    )


def cmd_eval(cfg: ExperimentConfig) -> None:
    report_path = cfg.paths.resolve("report")
    report = read_report(report_path)
    bound = float(read_report_document(report_path).get("bound_gamma", 0.0))
    ds = read_dataset(cfg.paths.resolve("dataset"))
    train_demos = read_demos(cfg.paths.resolve("demos"))
    test_demos = read_demos(cfg.paths.resolve("test_demos"))
    halves = pipeline.shares(ds, cfg)

    result = pipeline.evaluate(cfg, report, bound, halves, train_demos, test_demos)
    written = export_results(result, test_demos.profiles, cfg.paths.resolve("results"))
    print(f"✅ wrote {len(written)} result files → {cfg.paths.resolve('results')}")
    for name in result.methods:
        print(f"   {name}: gamma_test={result.gamma[name]:.3f} gamma_train={result.gamma_train[name]:.3f}")


def cmd_experiment(cfg: ExperimentConfig) -> None:
    reports = pipeline.run_experiment(cfg)
    print(f"✅ experiment finished → {cfg.paths.workdir}")
    for r in reports:
        print(
            f"   epsilon={r.epsilon:g}: gamma_test={r.gamma[SUBDOMINANCE]:.3f} "
            f"gamma_train={r.gamma_train[SUBDOMINANCE]:.3f} bound_gamma={r.bound_gamma:.3f}"
        )


COMMANDS = {
    "prepare": cmd_prepare,
    "demos": cmd_demos,
    "train": cmd_train,
    "eval": cmd_eval,
    "experiment": cmd_experiment,
}


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point for command-line interface."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    if args.action is None:
        parser.print_help()
        return 1

    _configure_logging(args.verbose)
    try:
        cfg = config_from_args(args)
    except (SubdomfairError, OSError, ValueError) as e:
        print(f"❌ invalid configuration: {e}", file=sys.stderr)
        return 1

    try:
        COMMANDS[args.action](cfg)
    except (SubdomfairError, OSError, ValueError) as e:
        print(f"❌ {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
