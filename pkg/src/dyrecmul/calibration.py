"""Calibration of the multiplier against its published error figures.

The rounding conventions of the encoder and of the LUT contents are not
pinned down by the architecture, so this module sweeps every documented
variant flag and tabulates the five metrics next to the published ones.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .datapath import SIGNED, UNSIGNED, DyRecMul, Variant
from .errorlab import ErrorReport, consistency_violations, sweep
from .rounding import HALF_UP, MODES, TRUNCATE

# Published exhaustive-sweep figures for the INT8 design.
PUBLISHED = {
    SIGNED: dict(ep=0.5157, mae=397.0, mre=0.0680, mse=96336.0, ned=0.00005),
    UNSIGNED: dict(ep=0.7380, mae=336.0, mre=0.0194, mse=260528.0, ned=0.1210),
}

# metric -> (tolerance, "rel" | "abs"); metrics absent here are reported only
TOLERANCES = {
    SIGNED: dict(mre=(0.20, "rel"), ep=(0.15, "abs"), mae=(0.25, "rel")),
    UNSIGNED: dict(mre=(0.20, "rel"), mae=(0.25, "rel")),
}


def within(mode: str, metric: str, value: float) -> bool:
    tol, kind = TOLERANCES[mode][metric]
    target = PUBLISHED[mode][metric]
    if kind == "rel":
        return abs(value - target) <= tol * target
    return abs(value - target) <= tol


def published_violations(mode: str) -> list:
    p = PUBLISHED[mode]
    return consistency_violations(p["ep"], p["mae"], p["mse"], p["ned"])


def rounding_variants(mode: str):
    clamps = (False, True) if mode == SIGNED else (False,)
    for enc, prod, clamp in itertools.product(MODES, MODES, clamps):
        yield Variant(enc, prod, clamp)


def resolution_variants(ks=range(6, 10)):
    for enc, k in itertools.product((HALF_UP, TRUNCATE), ks):
        yield Variant(enc, HALF_UP, False, k)


@dataclass(frozen=True)
class CalibrationRow:
    variant: Variant
    report: ErrorReport

    def gated(self) -> dict:
        return {m: within(self.report.mode, m, getattr(self.report, m)) for m in TOLERANCES[self.report.mode]}


def calibrate(mode: str, variants, workers: int = 1) -> list:
    return [
        CalibrationRow(v, sweep(mode, DyRecMul(mode, v), workers=workers, variant=v.label())) for v in variants
    ]


def closest(rows, metric: str) -> CalibrationRow:
    mode = rows[0].report.mode
    target = PUBLISHED[mode][metric]
    return min(rows, key=lambda r: abs(getattr(r.report, metric) - target))


def _fmt_row(row: CalibrationRow) -> str:
    r, v = row.report, row.variant
    marks = row.gated()
    cells = []
    for m in ("ep", "mae", "mre", "mse", "ned"):
        cell = f"{getattr(r, m):.4f}"
        if m in marks:
            cell += " ok" if marks[m] else " --"
        cells.append(cell)
    clamp = "yes" if v.clamp_w128 else "no"
    return f"| {v.encoder_rounding} | {v.product_rounding} | {clamp} | {v.result_bits} | " + " | ".join(cells) + " |"


def render_markdown(workers: int = 1) -> str:
    out = [
        "# Calibration against the published error figures",
        "",
        "Generated by `dyrecmul analyze --calibrate`; do not edit by hand.",
        "Every row is an exhaustive 65,536-pair sweep in wide-product mode.",
        "`ok` / `--` mark whether a gated metric is inside its tolerance",
        "(signed: MRE +-20 % rel, EP +-0.15 abs, MAE +-25 % rel; unsigned: MRE +-20 %, MAE +-25 %).",
        "Rows with k = 5 are the hardware configuration (five LUTs); k > 5 rows",
        "only probe how fine a product quantization the published figures imply.",
        "",
    ]
    for mode in (SIGNED, UNSIGNED):
        p = PUBLISHED[mode]
        rows = calibrate(mode, rounding_variants(mode), workers)
        res = calibrate(mode, resolution_variants(), workers)
        out += [
            f"## {mode}",
            "",
            "| encoder | product | clamp W=-128 | k | EP | MAE | MRE | MSE | NED |",
            "|---|---|---|---|---|---|---|---|---|",
            f"| published | | | 5 | {p['ep']:.4f} | {p['mae']:.4f} | {p['mre']:.4f} | {p['mse']:.4f} | {p['ned']:.5f} |",
        ]
        out += [_fmt_row(r) for r in rows]
        out += ["", "Product resolution probe:", ""]
        out += ["| encoder | product | clamp W=-128 | k | EP | MAE | MRE | MSE | NED |", "|---|---|---|---|---|---|---|---|---|"]
        out += [_fmt_row(r) for r in res]
        out += ["", "Closest k = 5 configuration per gated metric:", ""]
        for m in TOLERANCES[mode]:
            c = closest(rows, m)
            out.append(
                f"- {m.upper()}: {getattr(c.report, m):.4f} (published {p[m]}) with {c.variant.label()}"
            )
        bad = published_violations(mode)
        if bad:
            out += ["", "The published figures fail internal consistency checks:", ""]
            out += [f"- {b}" for b in bad]
        out.append("")
    return "\n".join(out)
