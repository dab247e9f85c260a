"""Command-line front end.

Exit codes: 0 success, 2 usage error, 3 I/O error, 4 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .datapath import MAC, SIGNED, UNSIGNED, Variant, estimate_lut_cost, multiply, render_trace
from .errorlab import exact_reference, sweep
from .lut import MultiplierSpec, config_image, full_config_image
from .rounding import MODES

EXIT_USAGE, EXIT_IO, EXIT_DATA = 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--format", choices=("text", "csv", "json"), default="text")
    p.add_argument("--out", type=Path, help="write output here instead of stdout")
    p.add_argument("--seed", type=int, default=0)
    return p


def _rounding() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--round", choices=MODES, help="rounding for both encoder and LUT contents")
    p.add_argument("--encoder-round", choices=MODES)
    p.add_argument("--product-round", choices=MODES)
    p.add_argument("--clamp-w128", action="store_true", help="configure W=-128 as |W|=127")
    p.add_argument("--result-bits", type=int, default=5, help="LUT result width k (calibration only)")
    return p


def _variant(args) -> Variant:
    base = args.round or "half-up"
    return Variant(
        args.encoder_round or base,
        args.product_round or base,
        args.clamp_w128,
        args.result_bits,
    )


def build_parser() -> argparse.ArgumentParser:
    common, rounding = _common(), _rounding()
    parser = _Parser(prog="dyrecmul", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"dyrecmul {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("mul", parents=[common, rounding], help="multiply two operands")
    p.add_argument("x", type=int)
    p.add_argument("w", type=int)
    p.add_argument("--mode", choices=(SIGNED, UNSIGNED), default=SIGNED)
    p.add_argument("--trace", action="store_true")

    p = sub.add_parser("analyze", parents=[common, rounding], help="exhaustive error sweep")
    p.add_argument("--mode", choices=(SIGNED, UNSIGNED), default=SIGNED)
    p.add_argument("--oracle", choices=("dyrecmul", "exact"), default="dyrecmul", help="multiplier to score")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--calibrate", action="store_true", help="emit the calibration table (markdown)")

    p = sub.add_parser("configgen", parents=[common, rounding], help="LUT configuration memory image")
    p.add_argument("weight", type=int, nargs="?")
    p.add_argument("--all", action="store_true", help="every magnitude 0..2**b2")
    p.add_argument("--b1", type=int, default=5)
    p.add_argument("--b2", type=int, default=7)
    p.add_argument("--k", type=int, default=5)

    p = sub.add_parser("cost", parents=[common], help="component LUT count")
    p.add_argument("--b1", type=int, default=5)
    p.add_argument("--b2", type=int, help="constant operand width (default: max(7, k - b1))")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--variant", choices=(SIGNED, UNSIGNED, MAC), default=SIGNED)

    p = sub.add_parser("infer", parents=[common, rounding], help="toy-scale inference")
    p.add_argument("model", help="model file, or 'toy' for the bundled model")
    p.add_argument("data", help="IDX image file, or 'synthetic'")
    p.add_argument("--labels", type=Path, help="IDX label file (default: <data stem>.labels.idx)")
    p.add_argument("--samples", type=int, default=600, help="synthetic dataset size")
    p.add_argument("--backend", choices=("exact", "dyrecmul"), default="exact")
    p.add_argument("--compare", action="store_true", help="run both backends and report the delta")
    return parser


def _kv_render(rows: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2) + "\n"
    if fmt == "csv":
        return "key,value\n" + "".join(f"{k},{v}\n" for k, v in rows.items())
    return "".join(f"{k}={v}\n" for k, v in rows.items())


def cmd_mul(args) -> str:
    mode = args.mode
    lo, hi = (-128, 127) if mode == SIGNED else (0, 255)
    for name, v in (("x", args.x), ("w", args.w)):
        if not lo <= v <= hi:
            raise UsageError(f"{name}={v} outside {mode} INT8 range [{lo}, {hi}]")
    variant = _variant(args)
    if args.trace:
        text = render_trace(args.x, args.w, mode, variant)
        rows = dict(line.split("=", 1) for line in text.splitlines())
        return text if args.format == "text" else _kv_render(rows, args.format)
    p = multiply(args.x, args.w, mode, variant)
    exact = exact_reference(args.x, args.w)
    return _kv_render({"int8": p.int8_out, "wide": p.wide_out, "exact": exact, "ed": abs(exact - p.wide_out)}, args.format)


def cmd_analyze(args) -> str:
    from .calibration import render_markdown
    from .datapath import DyRecMul

    if args.calibrate:
        return render_markdown(workers=args.workers)
    if args.oracle == "exact":
        report = sweep(args.mode, exact_reference, workers=args.workers, multiplier="exact")
    else:
        v = _variant(args)
        report = sweep(args.mode, DyRecMul(args.mode, v), workers=args.workers, variant=v.label())
    return {"text": report.to_text, "csv": report.to_csv, "json": report.to_json}[args.format]()


def cmd_configgen(args) -> str:
    spec = MultiplierSpec(args.b1, args.b2, args.k)
    v = _variant(args)
    if args.all == (args.weight is not None):
        raise UsageError("give exactly one of WEIGHT or --all")
    if args.all:
        return full_config_image(spec, v.product_rounding, args.clamp_w128)
    mag = abs(args.weight)
    if mag > spec.max_op2:
        raise UsageError(f"weight {args.weight} outside [-{spec.max_op2}, {spec.max_op2}] for b2={spec.b2}")
    if args.clamp_w128 and mag == spec.max_op2:
        mag -= 1
    return config_image([mag], spec, v.product_rounding)


def cmd_cost(args) -> str:
    b2 = args.b2 if args.b2 is not None else max(7, args.k - args.b1)
    cost = estimate_lut_cost(MultiplierSpec(args.b1, b2, args.k), args.variant)
    rows = dict(
        cfglut=cost.cfglut,
        encoder=cost.encoder,
        decoder=cost.decoder,
        twos_complement=cost.twos_complement,
        total=cost.total,
        config_bits=cost.config_bits,
    )
    return _kv_render(rows, args.format)


def _load_dataset(args):
    from .nn.idx import read_idx
    from .nn.toy import synthetic_dataset

    if args.data == "synthetic":
        return synthetic_dataset(args.samples, args.seed)
    images = read_idx(args.data)
    labels_path = args.labels or Path(args.data).with_suffix(".labels.idx")
    labels = read_idx(labels_path)
    return images, labels


def cmd_infer(args) -> str:
    from .nn import make_backend, run_model, toy_model_path
    from .nn.model import load, loads

    model = loads(toy_model_path().read_text()) if args.model == "toy" else load(args.model)
    images, labels = _load_dataset(args)
    names = ["exact", "dyrecmul"] if args.compare else [args.backend]
    variant = _variant(args)
    results = {}
    for name in names:
        rec, ledger = run_model(model, images, labels, make_backend(name, variant))
        results[name] = dict(accuracy=rec.accuracy, correct=rec.correct, total=rec.total, **ledger.as_dict())
    out = {"samples": int(np.asarray(labels).size), "backends": results}
    if args.compare:
        out["delta_pp"] = 100.0 * (results["exact"]["accuracy"] - results["dyrecmul"]["accuracy"])
    if args.format == "json":
        return json.dumps(out, indent=2) + "\n"
    rows = {}
    for name, r in results.items():
        rows.update({f"{name}.{k}": (f"{v:.4f}" if isinstance(v, float) else v) for k, v in r.items()})
    if args.compare:
        rows["delta_pp"] = f"{out['delta_pp']:.4f}"
    return _kv_render(rows, args.format)


COMMANDS = dict(mul=cmd_mul, analyze=cmd_analyze, configgen=cmd_configgen, cost=cmd_cost, infer=cmd_infer)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        text = COMMANDS[args.command](args)
        if args.out:
            args.out.write_text(text)
        else:
            sys.stdout.write(text)
        return 0
    except UsageError as e:
        print(f"dyrecmul: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"dyrecmul: io error: {e}", file=sys.stderr)
        return EXIT_IO
    except ValueError as e:
        print(f"dyrecmul: data error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
