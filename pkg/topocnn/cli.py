"""The topocnn command line

Subcommands: ``gen-data``, ``train``, ``infer`` and ``eval``. Every run
prints its resolved configuration as JSON before doing any work; that JSON
can be passed back through ``--config`` to replay the run.

Exit codes: 0 success, 1 usage or runtime error, 2 partial success.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel

from ._checkpoint import load_checkpoint, save_checkpoint
from ._dataset import (
    gen_input_image,
    generate_dataset,
    load_dataset,
    sample_seed,
    write_dataset,
)
from ._errors import TopoCnnError
from ._metrics import evaluate_model, summarize, write_report
from ._network import build_model
from ._optim import AdamState
from ._pgm import read_image, write_pgm
from ._training import TrainConfig, train
from .simp import Preset, preset

_logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARTIAL = 2

_PROBLEMS = [p.value for p in Preset if p != Preset.CUSTOM]
_GLOBAL_KEYS = ("seed", "threads", "verbose", "quiet")
_SOLVER_KEYS = ("penal", "rmin", "E0", "E1", "nu", "move", "change_tol", "maxit")


class RunConfig(BaseModel):
    """The fully resolved configuration of one run"""

    command: str
    seed: int
    threads: int
    verbose: int
    quiet: bool
    options: dict[str, Any]


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def main(argv: list[str] | None = None) -> int:
    """Runs the command line and returns the exit code"""
    parser = build_parser()
    try:
        command, config_path = _pre_parse(argv)
        if config_path is not None and command in _subcommands(parser):
            _apply_config(parser, command, read_config(config_path))
        args = parser.parse_args(argv)
    except SystemExit as exp:
        return EXIT_OK if exp.code is None else int(exp.code)
    except (OSError, ValueError) as exp:
        print(f"error: {exp}", file=sys.stderr)
        return EXIT_ERROR

    _configure_logging(args.verbose, args.quiet)
    print(resolve_config(args).model_dump_json(indent=2), flush=True)
    try:
        return args.handler(args)
    except (TopoCnnError, ValueError, OSError, ImportError) as exp:
        _logger.debug("run failed", exc_info=True)
        print(f"error: {exp}", file=sys.stderr)
        return EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="run seed (default 0)")
    common.add_argument(
        "--threads", type=int, default=1, help="worker processes (default 1)"
    )
    common.add_argument(
        "-v", "--verbose", action="count", default=0, help="more logging; repeatable"
    )
    common.add_argument("--quiet", action="store_true", help="log errors only")
    common.add_argument(
        "--config", default=None, help="key=value (or resolved JSON) defaults file"
    )

    parser = _Parser(prog="topocnn", description=__doc__.splitlines()[0])
    subparsers = parser.add_subparsers(dest="command", required=True)

    gen = subparsers.add_parser("gen-data", parents=[common], help="generate a dataset")
    gen.add_argument("--problem", choices=_PROBLEMS, default=Preset.MID_LOAD.value)
    gen.add_argument("--nx", type=int, default=100)
    gen.add_argument("--ny", type=int, default=100)
    gen.add_argument("--vf-start", type=float, default=0.01)
    gen.add_argument("--vf-end", type=float, default=0.95)
    gen.add_argument("--vf-step", type=float, default=0.01)
    gen.add_argument("--maxit", type=int, default=300)
    gen.add_argument("--out", required=True)
    gen.add_argument("--allow-partial", action="store_true")
    gen.set_defaults(handler=cmd_gen_data)

    tr = subparsers.add_parser("train", parents=[common], help="train a surrogate")
    tr.add_argument("--data", required=True)
    tr.add_argument("--adaptive-n", type=int, default=0)
    tr.add_argument("--epochs", type=int, default=2000)
    tr.add_argument("--batch", type=int, default=32)
    tr.add_argument("--lr", type=float, default=1e-3)
    tr.add_argument("--checkpoint", required=True)
    tr.add_argument("--widths", type=_widths, default=(128, 256, 512))
    tr.add_argument("--log", default=None, help="loss CSV (default <checkpoint>.loss.csv)")
    tr.set_defaults(handler=cmd_train)

    inf = subparsers.add_parser("infer", parents=[common], help="predict one design")
    inf.add_argument("--checkpoint", required=True)
    source = inf.add_mutually_exclusive_group(required=True)
    source.add_argument("--vf", type=float)
    source.add_argument("--input")
    inf.add_argument("--out", required=True)
    inf.set_defaults(handler=cmd_infer)

    ev = subparsers.add_parser("eval", parents=[common], help="evaluate a surrogate")
    ev.add_argument("--checkpoint", default=None)
    ev.add_argument("--data", default=None)
    ev.add_argument("--problem", choices=_PROBLEMS, required=True)
    ev.add_argument("--vf-list", type=_floats, required=True)
    ev.add_argument("--report", required=True)
    ev.add_argument("--triptych", default=None)
    ev.add_argument("--max-verr", type=float, default=None)
    ev.add_argument("--max-cerr", type=float, default=None)
    ev.add_argument(
        "--maxit",
        type=int,
        default=None,
        help="solver iteration cap (default from meta.json, else 300)",
    )
    ev.add_argument(
        "--echo-targets",
        action="store_true",
        help="evaluate the solver targets instead of a checkpoint",
    )
    ev.set_defaults(handler=cmd_eval)
    return parser


def cmd_gen_data(args: argparse.Namespace) -> int:
    ds = generate_dataset(
        args.problem,
        args.nx,
        args.ny,
        args.vf_start,
        args.vf_end,
        args.vf_step,
        seed=args.seed,
        workers=args.threads,
        allow_partial=args.allow_partial,
        maxit=args.maxit,
    )
    write_dataset(ds, args.out)
    if ds.failures:
        for name, error in ds.failures.items():
            print(f"failed {name}: {error}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    ds = load_dataset(args.data)
    if ds.nx != ds.ny:
        raise ValueError(f"the network needs square images, got {ds.ny}x{ds.nx}")
    model = build_model(args.adaptive_n, ds.nx, args.widths, seed=args.seed)
    _logger.info("model summary:\n%s", model.summary())
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch, lr=args.lr, seed=args.seed)
    adam = AdamState.create(model.parameters(), lr=cfg.lr)
    log = train(model, ds, cfg, adam)
    save_checkpoint(model, args.checkpoint, adam)
    log.to_csv(args.log or f"{args.checkpoint}.loss.csv")
    return EXIT_OK


def cmd_infer(args: argparse.Namespace) -> int:
    model, _ = load_checkpoint(args.checkpoint)
    height, width, _ = model.input_shape
    if args.input is not None:
        image = read_image(args.input)
    else:
        image = gen_input_image(args.vf, width, height, sample_seed(args.seed, args.vf))
    pred = model.predict(image[np.newaxis, :, :, np.newaxis])
    write_pgm(pred[0, :, :, 0], args.out)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    if args.checkpoint is None and not args.echo_targets:
        raise ValueError("eval needs --checkpoint or --echo-targets")
    if args.echo_targets and args.data is None:
        raise ValueError("--echo-targets needs --data")
    if not args.vf_list:
        raise ValueError("--vf-list is empty")
    model = None
    if not args.echo_targets:
        model, _ = load_checkpoint(args.checkpoint)
    ds = load_dataset(args.data) if args.data is not None else None

    solver_kwargs = {}
    if ds is not None and ds.metadata is not None:
        meta = ds.metadata.model_dump()
        solver_kwargs = {k: meta[k] for k in _SOLVER_KEYS if meta.get(k) is not None}
    if args.maxit is not None:
        solver_kwargs["maxit"] = args.maxit
    if ds is not None:
        nx, ny = ds.nx, ds.ny
    else:
        ny, nx, _ = model.input_shape

    family = preset(args.problem, nx, ny, args.vf_list[0], **solver_kwargs)
    records = evaluate_model(
        model,
        ds,
        family,
        args.vf_list,
        seed=args.seed,
        model_tag="solver-targets" if model is None else Path(args.checkpoint).stem,
        triptych_dir=args.triptych,
    )
    write_report(records, args.report)
    summary = summarize(records, args.max_verr, args.max_cerr)
    print(summary.model_dump_json(indent=2))
    return EXIT_OK if summary.passed else EXIT_ERROR


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Collects every resolved flag of the parsed command line"""
    options = {
        key: list(value) if isinstance(value, tuple) else value
        for key, value in vars(args).items()
        if key not in (*_GLOBAL_KEYS, "command", "handler", "config")
    }
    return RunConfig(
        command=args.command,
        seed=args.seed,
        threads=args.threads,
        verbose=args.verbose,
        quiet=args.quiet,
        options=options,
    )


def read_config(path: str) -> dict[str, Any]:
    """Reads a defaults file

    Either ``key=value`` lines (``#`` starts a comment, keys may use ``-``
    or ``_``) or the JSON printed by a previous run.
    """
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        return {
            **{k: data[k] for k in _GLOBAL_KEYS if k in data},
            **data.get("options", {}),
        }

    values = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{number}: expected key=value, got {line!r}")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _pre_parse(argv: list[str] | None) -> tuple[str | None, str | None]:
    """Finds the subcommand and the --config file before the full parse"""
    pre = _Parser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    return known.command, known.config


def _subcommands(parser: argparse.ArgumentParser) -> dict[str, argparse.ArgumentParser]:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices
    return {}


def _apply_config(parser: argparse.ArgumentParser, command: str, values: dict[str, Any]):
    """Installs the file values as defaults of the subcommand"""
    subparser = _subcommands(parser)[command]
    actions = {action.dest: action for action in subparser._actions}
    defaults = {}
    for key, value in values.items():
        action = actions.get(key)
        if action is None:
            raise ValueError(f"unknown option {key!r} for {command}")
        if isinstance(value, str) and action.nargs == 0:
            value = _boolean(value) if isinstance(action.const, bool) else int(value)
        elif isinstance(value, list):
            value = ",".join(str(v) for v in value)
        defaults[key] = value
    subparser.set_defaults(**defaults)

    # options supplied by the file are no longer required on the command line
    supplied = {key for key, value in defaults.items() if value is not None}
    for key in supplied:
        actions[key].required = False
    for group in subparser._mutually_exclusive_groups:
        if any(action.dest in supplied for action in group._group_actions):
            group.required = False


def _configure_logging(verbose: int, quiet: bool):
    levels = (logging.WARNING, logging.INFO, logging.DEBUG)
    level = logging.ERROR if quiet else levels[min(verbose, 2)]
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _floats(text: str) -> list[float]:
    try:
        return [float(value) for value in text.split(",") if value.strip()]
    except ValueError as exp:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text}") from exp


def _widths(text: str) -> tuple[int, int, int]:
    try:
        widths = tuple(int(value) for value in text.split(","))
    except ValueError as exp:
        raise argparse.ArgumentTypeError(f"expected c1,c2,c3: {text}") from exp
    if len(widths) != 3:
        raise argparse.ArgumentTypeError(f"expected three widths, got {text}")
    return widths


def _boolean(text: str) -> bool:
    lowered = text.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")
