import argparse
import ast
import csv
import logging
import math
import operator
import os
import re
import sys
from pathlib import Path
from typing import Dict, List

import numpy as np

from qrwsearch import api, optimize, plots, ridge, surrogate, sweep, walk
from qrwsearch.errors import QrwsError, ValidationError
from qrwsearch.version import __version__


WORKERS_ENV = "QRWS_WORKERS"
MAX_QUBITS_ENV = "QRWS_MAX_QUBITS"
SIMULATOR_SOURCE = "sim"
MODEL_SOURCE = "model"
PLOTTING_COMMANDS = (
    "simulate",
    "sweep",
    "grid",
    "train",
    "gridsearch",
    "ridge",
    "profile",
    "predict",
)
# flags without a usable default; a --config file may supply them
REQUIRED_FLAGS = {
    "simulate": ("n", "phi", "zeta"),
    "sweep": ("n", "samples"),
    "grid": ("n", "res"),
    "train": ("data", "layers", "neurons"),
    "gridsearch": ("data",),
    "optimize": ("n",),
    "ridge": ("n",),
    "fit-alpha": ("n",),
    "profile": ("n",),
    "predict": ("model",),
}

_OPERATORS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.USub: operator.neg,
    ast.UAdd: operator.pos,
}


logger = logging.getLogger(__name__)


class UsageParser(argparse.ArgumentParser):
    """Argument parser reporting usage errors as ``error:cli:usage:`` lines"""

    def error(self, message: str):
        usage = ValidationError(f"{self.prog}: {message}", module="cli", kind="usage")
        print(usage.line(), file=sys.stderr)
        sys.exit(2)


def _check_required(subparser: UsageParser, parsed: argparse.Namespace):
    missing = [
        "--" + dest.replace("_", "-")
        for dest in REQUIRED_FLAGS.get(parsed.command, ())
        if getattr(parsed, dest) is None
    ]
    if missing:
        subparser.error(f"the following arguments are required: {', '.join(missing)}")


def _evaluate_angle(node):
    if isinstance(node, ast.Expression):
        return _evaluate_angle(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id == "pi":
        return math.pi
    if isinstance(node, ast.BinOp) and type(node.op) in _OPERATORS:
        return _OPERATORS[type(node.op)](
            _evaluate_angle(node.left), _evaluate_angle(node.right)
        )
    if isinstance(node, ast.UnaryOp) and type(node.op) in _OPERATORS:
        return _OPERATORS[type(node.op)](_evaluate_angle(node.operand))
    raise ValueError(f"unsupported element {ast.dump(node)}")


def parse_angle(text: str) -> float:
    """Radians from a decimal or an arithmetic expression in ``pi``

    ``pi``, ``2pi``, ``3*pi/2`` and ``-1/(2pi)`` are all accepted.
    """
    expression = re.sub(r"(\d)\s*(pi|\()", r"\1*\2", text.strip().lower())
    try:
        value = _evaluate_angle(ast.parse(expression, mode="eval"))
    except (SyntaxError, ValueError, ZeroDivisionError) as error:
        raise argparse.ArgumentTypeError(f"invalid angle {text!r}: {error}")
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"angle {text!r} is not finite")
    return value


def parse_curve(text: str) -> ridge.CurveSpec:
    """``line32[:k]``, ``line33``, ``line34`` or ``sine:<alpha>``"""
    kind, _, argument = text.strip().partition(":")
    try:
        if kind == ridge.LINE32:
            return ridge.CurveSpec.line32(int(argument) if argument else 1)
        if kind == ridge.SINE and argument:
            return ridge.CurveSpec.sine(parse_angle(argument))
        if kind in (ridge.LINE33, ridge.LINE34) and not argument:
            return ridge.CurveSpec(kind)
    except (ValueError, ValidationError) as error:
        raise argparse.ArgumentTypeError(f"invalid curve {text!r}: {error}")
    raise argparse.ArgumentTypeError(
        f"invalid curve {text!r}; use line32[:k], line33, line34 or sine:<alpha>"
    )


def parse_range(text: str) -> List[int]:
    """``lo:hi`` (inclusive) or a comma separated list of integers"""
    try:
        if ":" in text:
            lo, hi = (int(part) for part in text.split(":"))
            values = list(range(lo, hi + 1))
        else:
            values = [int(part) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid range {text!r}")
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"range {text!r} must hold positive integers")
    return values


def parse_model_spec(text: str):
    """``n=PATH`` pairing a coin size with a model file"""
    n, sep, path = text.partition("=")
    if not sep or not n.strip().isdigit():
        raise argparse.ArgumentTypeError(f"expected n=PATH, got {text!r}")
    return int(n), Path(path)


def _env_int(name: str, default: int) -> int:
    value = os.environ.get(name)
    if value is None:
        return default
    try:
        return int(value)
    except ValueError:
        raise ValidationError(
            f"{name}={value!r} is not an integer", module="cli", kind="environment"
        )


def read_config(path: Path) -> Dict[str, str]:
    """``key=value`` lines; ``#`` starts a comment and blank lines are ignored"""
    settings = {}
    with open(path, encoding="utf-8") as stream:
        for number, raw in enumerate(stream, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip():
                raise ValidationError(
                    f"{path} line {number}: expected key=value, got {line!r}",
                    module="cli",
                    kind="config",
                )
            settings[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return settings


def _apply_config(subparser: argparse.ArgumentParser, path: Path):
    actions = {action.dest: action for action in subparser._actions}
    defaults = {}
    for key, value in read_config(path).items():
        action = actions.get(key)
        if action is None or key in ("help", "config"):
            raise ValidationError(
                f"{path}: unknown setting {key!r}", module="cli", kind="config"
            )
        if action.nargs == 0:
            defaults[key] = value.lower() in ("1", "true", "yes", "on")
        elif action.nargs in ("+", "*"):
            convert = action.type or str
            defaults[key] = [convert(item) for item in value.split()]
        else:
            # argparse converts string defaults with the action's type
            defaults[key] = value
    subparser.set_defaults(**defaults)


def _write_csv(path: Path, header: List[str], rows):
    with open(path, "w", newline="", encoding="utf-8") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _evaluator(args) -> api.Evaluator:
    if args.source == MODEL_SOURCE:
        if args.model is None:
            raise ValidationError(
                "--source model needs --model PATH", module="cli", kind="missing"
            )
        return api.ModelEvaluator(surrogate.load_model(args.model), args.n)
    return api.SimulatorEvaluator(args.n, max_qubits=args.max_qubits)


def _train_config(args) -> surrogate.TrainConfig:
    return surrogate.TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch,
        learning_rate=args.learning_rate,
        patience=args.patience,
        train_fraction=args.train_fraction,
        seed=args.seed,
    )


def _simulate(args):
    marked = args.target
    if args.scan is not None:
        probabilities = walk.scan_iterations(
            args.n, args.phi, args.zeta, marked, args.scan, max_qubits=args.max_qubits
        )
        _write_csv(
            args.out,
            ["step", "p"],
            ([k, f"{p:.17g}"] for k, p in enumerate(probabilities)),
        )
        logger.info(f"Wrote {len(probabilities)} steps to {args.out}")
        if args.plot:
            plots.write_script(
                args.out,
                plots.profile_script([args.out], f"n={args.n}", x="step", y="p"),
            )

    result = walk.run(
        args.n,
        args.phi,
        args.zeta,
        marked,
        steps=args.steps,
        max_qubits=args.max_qubits,
    )
    print(f"p={result.probability:.17g}")
    print(f"k={result.steps}")

    if args.distribution is not None:
        distribution = walk.node_distribution(result.state)
        _write_csv(
            args.distribution,
            ["node", "p"],
            ([x, f"{p:.17g}"] for x, p in enumerate(distribution)),
        )


def _sweep(args):
    if args.command == "sweep":
        dataset = sweep.generate(
            args.n,
            args.samples,
            args.seed,
            workers=args.workers,
            with_best=args.with_best,
            max_qubits=args.max_qubits,
        )
    else:
        dataset = sweep.grid(
            args.n,
            args.res,
            workers=args.workers,
            with_best=args.with_best,
            max_qubits=args.max_qubits,
        )
    sweep.save_csv(dataset, args.out)
    if args.plot:
        title = f"p(phi, zeta, {args.n})"
        script = plots.heatmap_script(args.out, "phi", "zeta", "p", title)
        plots.write_script(args.out, script)


def _train(args):
    datasets = [sweep.load_csv(path) for path in args.data]
    model, report = surrogate.train(
        datasets, args.input_dim, args.layers, args.neurons, _train_config(args)
    )
    surrogate.save_model(model, args.model)
    print(f"best_epoch={report.best_epoch}")
    print(f"val_loss={report.best_val_loss:.17g}")
    if args.history is not None:
        surrogate.save_history(report, args.history)
        if args.plot:
            plots.write_script(args.history, plots.history_script(args.history))


def _gridsearch(args):
    datasets = [sweep.load_csv(path) for path in args.data]
    losses = surrogate.grid_search(
        datasets, args.layers, args.neurons, _train_config(args), args.input_dim
    )
    surrogate.save_grid(losses, args.layers, args.neurons, args.out)
    if np.isnan(losses).all():
        raise QrwsError(
            "Every grid-search cell failed", module="surrogate", kind="grid"
        )
    i, j = np.unravel_index(np.nanargmin(losses), losses.shape)
    print(f"best L={args.layers[i]} N={args.neurons[j]} val_loss={losses[i, j]:.17g}")
    if args.plot:
        script = plots.heatmap_script(
            args.out,
            "N",
            "L",
            "val_loss",
            "validation loss",
            logscale=True,
            square=False,
        )
        plots.write_script(args.out, script)


def _optimize(args):
    if optimize.resolve_method(args.method) == optimize.DE_METHOD:
        config = optimize.DEConfig(
            population=args.population,
            generations=args.generations,
            mutation=args.mutation,
            recombination=args.recombination,
            seed=args.seed,
        )
    else:
        config = optimize.SobolConfig(
            samples=args.samples, top_k=args.top_k, seed=args.seed
        )
    result = optimize.maximize_probability(
        _evaluator(args), args.n, args.method, config
    )

    phi, zeta = result.point
    print(f"method={result.method} n={args.n}")
    print(f"phi={phi:.17g} zeta={zeta:.17g}")
    print(f"p={result.value:.17g} evals={result.evaluations}")
    if result.simulated is not None:
        print(f"p_simulated={result.simulated:.17g}")
    if args.out is not None:
        optimize.save_result(result, args.n, args.out)


def _ridge(args):
    points = ridge.extract_ridge(_evaluator(args), args.n, args.grid)
    ridge.save_ridge(points, args.out)
    if args.plot:
        script = plots.heatmap_script(
            args.out, "phi", "zeta_unwrapped", "p", f"ridge, n={args.n}"
        )
        plots.write_script(args.out, script)


def _fit_alpha(args):
    if args.ridge is not None:
        points = ridge.load_ridge(args.ridge)
        fit = ridge.fit_alpha(ridge.high_probability_band(points, args.n, args.band))
    else:
        fit, _ = api.fit_ridge(_evaluator(args), args.grid, args.band)
    print(f"alpha={fit.alpha:.17g}")
    print(f"rms_residual={fit.rms_residual:.17g}")
    if args.out is not None:
        ridge.save_fit(fit, args.n, args.source, args.out)


def _profile(args):
    curves = {curve.label: curve for curve in args.curve or []}
    if args.named or not curves:
        curves.update(ridge.named_curves(args.n))
    evaluator = _evaluator(args)
    args.out.mkdir(parents=True, exist_ok=True)

    paths = []
    for label, curve in curves.items():
        profile = ridge.profile(evaluator, curve, args.n, args.grid)
        stem = re.sub(r"[^A-Za-z0-9.+-]+", "_", label)
        path = args.out / f"profile_n{args.n}_{stem}.csv"
        ridge.save_profile(profile, path)
        paths.append(path)
        width = ridge.stability_width(profile, args.fraction)
        print(f"curve={label} p_max={profile.p.max():.17g} width={width:.17g}")

    if args.plot:
        title = f"p along curves, n={args.n}"
        script = plots.profile_script(paths, title, labels=list(curves))
        plots.write_script(args.out / f"profiles_n{args.n}.csv", script)


def _predict(args):
    model = surrogate.load_model(args.model)
    if args.grid is not None:
        phis, zetas, p = surrogate.prediction_grid(model, args.grid, args.n)
        surrogate.save_prediction_grid(phis, zetas, p, args.n, args.out)
        if args.plot:
            title = f"predicted p, n={args.n}"
            script = plots.heatmap_script(args.out, "phi", "zeta", "p", title)
            plots.write_script(args.out, script)
        return
    if args.phi is None or args.zeta is None:
        raise ValidationError(
            "predict needs --phi and --zeta, or --grid", module="cli", kind="missing"
        )
    print(f"p={surrogate.predict_p(model, args.phi, args.zeta, args.n):.17g}")


def _tables(args):
    models = {n: surrogate.load_model(path) for n, path in args.model}
    optima, alphas = api.reproduce_tables(
        args.out,
        models,
        qubits=args.qubits,
        de_config=optimize.DEConfig(seed=args.seed),
        sobol_config=optimize.SobolConfig(seed=args.seed),
        grid_size=args.grid,
        band=args.band,
    )
    print(optima)
    print(alphas)


COMMANDS = {
    "simulate": _simulate,
    "sweep": _sweep,
    "grid": _sweep,
    "train": _train,
    "gridsearch": _gridsearch,
    "optimize": _optimize,
    "ridge": _ridge,
    "fit-alpha": _fit_alpha,
    "profile": _profile,
    "predict": _predict,
    "tables": _tables,
}


def main(args=None):
    try:
        args = parse_args(args=args)

        logging.basicConfig(level=args.log_level)
        logger.setLevel(args.log_level)

        COMMANDS[args.command](args)
    except ValidationError as error:
        print(error.line(), file=sys.stderr)
        sys.exit(2)
    except QrwsError as error:
        print(error.line(), file=sys.stderr)
        sys.exit(1)
    except OSError as error:
        print(f"error:cli:io: {error}", file=sys.stderr)
        sys.exit(1)


def _add_source(subparser):
    subparser.add_argument(
        "--source",
        choices=(SIMULATOR_SOURCE, MODEL_SOURCE),
        default=SIMULATOR_SOURCE,
        help="Evaluate p by direct simulation (sim) or with a trained model (model)",
    )
    subparser.add_argument(
        "--model", type=Path, default=None, help="Model file for --source model"
    )


def _add_training(subparser):
    subparser.add_argument(
        "--data",
        type=Path,
        nargs="+",
        default=None,
        help="Sweep CSV files; several (one per n) for a three-input model",
    )
    subparser.add_argument(
        "--input-dim",
        type=int,
        choices=(2, 3),
        default=2,
        help="2 for (phi, zeta) models, 3 for combined (phi, zeta, n) models",
    )
    subparser.add_argument("--epochs", type=int, default=500, help="Maximum epochs")
    subparser.add_argument("--batch", type=int, default=256, help="Mini-batch size")
    subparser.add_argument(
        "--learning-rate", type=float, default=1e-3, help="Adam step size"
    )
    subparser.add_argument(
        "--patience",
        type=int,
        default=50,
        help="Epochs without validation improvement before stopping",
    )
    subparser.add_argument(
        "--train-fraction",
        type=float,
        default=0.8,
        help="Share of records used for training; the rest validates",
    )


def parse_args(args=None):
    parser = UsageParser(
        prog="qrws",
        description=(
            "Simulate and optimize quantum random walk search on the hypercube "
            "with Householder walk coins"
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)

    subparsers = parser.add_subparsers(
        dest="command", help="Subcommand help", parser_class=UsageParser
    )
    subparsers.required = True
    subparsers.add_parser("simulate", help="Run the search for one coin")
    subparsers.add_parser("sweep", help="Monte Carlo sweep over random (phi, zeta)")
    subparsers.add_parser("grid", help="Sweep a regular (phi, zeta) grid")
    subparsers.add_parser("train", help="Train a surrogate model on sweep data")
    subparsers.add_parser("gridsearch", help="Validation loss over a grid of (L, N)")
    subparsers.add_parser("optimize", help="Find the coin phases maximizing p")
    subparsers.add_parser("ridge", help="Extract the ridge of maximal p")
    subparsers.add_parser("fit-alpha", help="Fit the sine correction of the ridge")
    subparsers.add_parser("profile", help="p along reference curves")
    subparsers.add_parser("predict", help="Predict p with a trained model")
    subparsers.add_parser("tables", help="Reproduce the optimum and alpha tables")

    default_workers = _env_int(WORKERS_ENV, os.cpu_count() or 1)
    default_max_qubits = _env_int(MAX_QUBITS_ENV, walk.DEFAULT_MAX_QUBITS)

    for name, subparser in subparsers.choices.items():
        subparser.add_argument(
            "--config",
            type=Path,
            default=None,
            help="File of key=value defaults; explicit flags take precedence",
        )

        logger_group_parent = subparser.add_argument_group(
            title="logging arguments",
            description="Control what log level the log outputs (default: logger.INFO)",
        )

        logger_group = logger_group_parent.add_mutually_exclusive_group()

        logger_group.add_argument(
            "-d",
            "--debug",
            dest="log_level",
            action="store_const",
            const=logging.DEBUG,
            default=logging.INFO,
            help="Set log level to DEBUG for more verbose output",
        )

        logger_group.add_argument(
            "-q",
            "--quiet",
            dest="log_level",
            action="store_const",
            const=logging.ERROR,
            default=logging.INFO,
            help="Suppress all logs except ERROR and CRITICAL",
        )

        if name not in ("train", "gridsearch", "tables"):
            subparser.add_argument(
                "--n",
                type=int,
                default=None,
                help="Number of coin qubits (the hypercube has 2^n dimensions)",
            )
            subparser.add_argument(
                "--max-qubits",
                type=int,
                default=default_max_qubits,
                help=f"Largest n to simulate (memory cap; env {MAX_QUBITS_ENV})",
            )

        if name in ("sweep", "grid"):
            subparser.add_argument(
                "--workers",
                type=int,
                default=default_workers,
                help=(
                    f"Worker processes (env {WORKERS_ENV}); "
                    "output does not depend on it"
                ),
            )
            subparser.add_argument(
                "--with-best",
                action="store_true",
                help="Also record the best iteration within one period",
            )

        if name in ("optimize", "ridge", "fit-alpha", "profile"):
            _add_source(subparser)

        if name in ("ridge", "fit-alpha", "profile", "tables"):
            subparser.add_argument(
                "--grid",
                type=int,
                default=ridge.DEFAULT_GRID,
                help="Number of phi values on [0, 2pi]",
            )

        if name in ("fit-alpha", "tables"):
            subparser.add_argument(
                "--band",
                type=float,
                default=ridge.DEFAULT_BAND,
                help=(
                    "Fit only ridge points whose p rises this share of the way from "
                    "2^-(2^n) to the ridge maximum"
                ),
            )

        if name in ("train", "gridsearch"):
            _add_training(subparser)

        if name in ("sweep", "train", "gridsearch", "optimize", "tables"):
            subparser.add_argument(
                "--seed", type=int, default=0, help="Seed of all random streams"
            )

        if name in PLOTTING_COMMANDS:
            subparser.add_argument(
                "--plot",
                action="store_true",
                help="Also write a gnuplot script (.gp) next to the CSV",
            )

        if name == "simulate":
            subparser.add_argument(
                "--phi", type=parse_angle, default=None, help="Householder phase (rad)"
            )
            subparser.add_argument(
                "--zeta", type=parse_angle, default=None, help="Global phase (rad)"
            )
            subparser.add_argument(
                "--target",
                type=int,
                nargs="+",
                default=[0],
                help="Marked node(s), integers in [0, 2^(2^n))",
            )
            subparser.add_argument(
                "--steps",
                type=int,
                default=None,
                help="Iterations (default: ceil(pi/2 sqrt(2^(2^n - 1))))",
            )
            subparser.add_argument(
                "--scan",
                type=int,
                default=None,
                metavar="K",
                help="Write p after every step 0..K to --out",
            )
            subparser.add_argument(
                "--out", type=Path, default=Path("scan.csv"), help="CSV for --scan"
            )
            subparser.add_argument(
                "--distribution",
                type=Path,
                default=None,
                help="Write the final node distribution (node,p) to this CSV",
            )
        elif name == "sweep":
            subparser.add_argument(
                "--samples", type=int, default=None, help="Number of records"
            )
            subparser.add_argument(
                "--out", type=Path, default=Path("sweep.csv"), help="Output CSV"
            )
        elif name == "grid":
            subparser.add_argument(
                "--res", type=int, default=None, help="Grid points per axis"
            )
            subparser.add_argument(
                "--out", type=Path, default=Path("grid.csv"), help="Output CSV"
            )
        elif name == "train":
            subparser.add_argument(
                "--layers", type=int, default=None, help="Hidden layers L"
            )
            subparser.add_argument(
                "--neurons", type=int, default=None, help="Neurons per hidden layer N"
            )
            subparser.add_argument(
                "--model", type=Path, default=Path("qrws.model"), help="Model file"
            )
            subparser.add_argument(
                "--history",
                type=Path,
                default=None,
                help="Write epoch,train_loss,val_loss to this CSV",
            )
        elif name == "gridsearch":
            subparser.add_argument(
                "--layers",
                type=parse_range,
                default=parse_range("1:20"),
                help="Hidden layer counts, lo:hi or a comma list (default 1:20)",
            )
            subparser.add_argument(
                "--neurons",
                type=parse_range,
                default=parse_range("5:30"),
                help="Neurons per layer, lo:hi or a comma list (default 5:30)",
            )
            subparser.add_argument(
                "--out", type=Path, default=Path("gridsearch.csv"), help="Output CSV"
            )
        elif name == "optimize":
            subparser.add_argument(
                "--method",
                choices=(optimize.DE_METHOD, optimize.SOBOL_METHOD),
                default=optimize.DE_METHOD,
                help="Differential evolution (de) or Sobol multistart (sobol)",
            )
            subparser.add_argument(
                "--population", type=int, default=30, help="DE population size"
            )
            subparser.add_argument(
                "--generations", type=int, default=200, help="DE generations"
            )
            subparser.add_argument(
                "--mutation", type=float, default=0.8, help="DE differential weight F"
            )
            subparser.add_argument(
                "--recombination",
                type=float,
                default=0.9,
                help="DE crossover probability CR",
            )
            subparser.add_argument(
                "--samples", type=int, default=256, help="Sobol points"
            )
            subparser.add_argument(
                "--top-k", type=int, default=4, help="Sobol points refined by simplex"
            )
            subparser.add_argument(
                "--out",
                type=Path,
                default=None,
                help="Write method,n,phi,zeta,value,evals to this CSV",
            )
        elif name == "ridge":
            subparser.add_argument(
                "--out", type=Path, default=Path("ridge.csv"), help="Output CSV"
            )
        elif name == "fit-alpha":
            subparser.add_argument(
                "--ridge",
                type=Path,
                default=None,
                help="Fit a ridge CSV instead of extracting a new ridge",
            )
            subparser.add_argument(
                "--out",
                type=Path,
                default=None,
                help="Write alpha,rms_residual,n,source to this CSV",
            )
        elif name == "profile":
            subparser.add_argument(
                "--curve",
                type=parse_curve,
                nargs="+",
                default=None,
                help="line32[:k], line33, line34 or sine:<alpha> (pi accepted)",
            )
            subparser.add_argument(
                "--named",
                action="store_true",
                help="Add the reference curves for n (default when no --curve)",
            )
            subparser.add_argument(
                "--fraction",
                type=float,
                default=0.9,
                help="Share of the profile maximum defining the stability width",
            )
            subparser.add_argument(
                "--out", type=Path, default=Path("."), help="Directory for the CSVs"
            )
        elif name == "predict":
            subparser.add_argument(
                "--model", type=Path, default=None, help="Model file"
            )
            subparser.add_argument(
                "--phi", type=parse_angle, default=None, help="Householder phase (rad)"
            )
            subparser.add_argument(
                "--zeta", type=parse_angle, default=None, help="Global phase (rad)"
            )
            subparser.add_argument(
                "--grid",
                type=int,
                default=None,
                metavar="R",
                help="Predict on an R x R (phi, zeta) grid written to --out",
            )
            subparser.add_argument(
                "--out", type=Path, default=Path("predict.csv"), help="CSV for --grid"
            )
        elif name == "tables":
            subparser.add_argument(
                "--model",
                type=parse_model_spec,
                nargs="*",
                default=[],
                help="n=PATH model files; optima for that n use the model",
            )
            subparser.add_argument(
                "--qubits",
                type=parse_range,
                default=[1, 2, 3],
                help="Coin sizes to tabulate (default 1:3)",
            )
            subparser.add_argument(
                "--out", type=Path, default=Path("."), help="Directory for the tables"
            )

    parsed = parser.parse_args(args)
    subparser = subparsers.choices[parsed.command]
    if parsed.config is not None:
        _apply_config(subparser, parsed.config)
        parsed = parser.parse_args(args)
    _check_required(subparser, parsed)
    return parsed


if __name__ == "__main__":
    main()
