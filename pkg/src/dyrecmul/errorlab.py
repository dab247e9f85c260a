"""Exhaustive error analysis of approximate multipliers.

Metrics over all ``2**(2N)`` operand pairs, with ``ED = |exact - approx|``:
EP (fraction of pairs with ED != 0), MAE, MRE, MSE and NED (MAE / max ED).

Pairs whose exact product is zero are left out of the MRE mean and counted
in ``zero_exact_excluded``.  Sums are kept as integers; the relative-error
sum is bucketed by ``|exact|`` so partial results from any partition of the
operand space merge to the same bits.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from . import __version__
from .datapath import SIGNED, UNSIGNED, operand_range

METRICS = ("ep", "mae", "mre", "mse", "ned")


def exact_multiply(x: int, w: int, mode: str = SIGNED, bits: int = 8) -> int:
    for v in (x, w):
        r = operand_range(mode, bits)
        if not r.start <= v < r.stop:
            raise ValueError(f"operand {v} outside {bits}-bit {mode} range")
    return x * w


@dataclass
class SweepAccumulator:
    pairs: int = 0
    errors: int = 0
    sum_ed: int = 0
    sum_ed2: int = 0
    max_ed: int = 0
    zero_exact: int = 0
    # |exact| -> sum of ED over pairs with that exact magnitude
    ed_by_exact: dict = field(default_factory=dict)

    def add(self, exact: int, approx: int):
        ed = abs(exact - approx)
        self.pairs += 1
        if ed:
            self.errors += 1
            self.sum_ed += ed
            self.sum_ed2 += ed * ed
            if ed > self.max_ed:
                self.max_ed = ed
        if exact == 0:
            self.zero_exact += 1
        elif ed:
            key = abs(exact)
            self.ed_by_exact[key] = self.ed_by_exact.get(key, 0) + ed

    def merge(self, other: "SweepAccumulator") -> "SweepAccumulator":
        out = SweepAccumulator(
            self.pairs + other.pairs,
            self.errors + other.errors,
            self.sum_ed + other.sum_ed,
            self.sum_ed2 + other.sum_ed2,
            max(self.max_ed, other.max_ed),
            self.zero_exact + other.zero_exact,
            dict(self.ed_by_exact),
        )
        for k, v in other.ed_by_exact.items():
            out.ed_by_exact[k] = out.ed_by_exact.get(k, 0) + v
        return out

    def relative_sum(self) -> float:
        return math.fsum(self.ed_by_exact[k] / k for k in sorted(self.ed_by_exact))


@dataclass(frozen=True)
class ErrorReport:
    ep: float
    mae: float
    mre: float
    mse: float
    ned: float
    max_ed: int
    pair_count: int
    zero_exact_excluded: int
    mode: str
    bits: int
    multiplier: str = ""
    variant: str = ""

    @classmethod
    def from_accumulator(cls, acc: SweepAccumulator, mode: str, bits: int, multiplier: str = "", variant: str = ""):
        n = acc.pairs
        if n == 0:
            raise ValueError("empty sweep")
        counted = n - acc.zero_exact
        mae = Fraction(acc.sum_ed, n)
        return cls(
            ep=float(Fraction(acc.errors, n)),
            mae=float(mae),
            mre=acc.relative_sum() / counted if counted else 0.0,
            mse=float(Fraction(acc.sum_ed2, n)),
            ned=float(mae / acc.max_ed) if acc.max_ed else 0.0,
            max_ed=acc.max_ed,
            pair_count=n,
            zero_exact_excluded=acc.zero_exact,
            mode=mode,
            bits=bits,
            multiplier=multiplier,
            variant=variant,
        )

    @property
    def descriptor(self):
        return (self.mode, self.bits)

    def metrics(self) -> dict:
        return {m: getattr(self, m) for m in METRICS}

    def violations(self, rel_tol: float = 1e-12) -> list:
        """Internal-consistency failures (empty for any report built by :func:`sweep`)."""
        return consistency_violations(self.ep, self.mae, self.mse, self.ned, self.max_ed, rel_tol)

    # renderings

    def to_csv(self) -> str:
        rows = [
            ("EP", self.ep),
            ("MAE", self.mae),
            ("MRE", self.mre),
            ("MSE", self.mse),
            ("NED", self.ned),
            ("MAX_ED", self.max_ed),
            ("PAIRS", self.pair_count),
            ("MRE_EXCLUDED", self.zero_exact_excluded),
        ]
        return "metric,value\n" + "".join(f"{k},{v:.6g}\n" for k, v in rows)

    def to_dict(self) -> dict:
        return {
            "tool": "dyrecmul",
            "version": __version__,
            "sweep": {"mode": self.mode, "bits": self.bits, "multiplier": self.multiplier, "variant": self.variant},
            "ep": self.ep,
            "mae": self.mae,
            "mre": self.mre,
            "mse": self.mse,
            "ned": self.ned,
            "max_ed": self.max_ed,
            "pairs": self.pair_count,
            "mre_excluded": self.zero_exact_excluded,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_text(self) -> str:
        head = f"{self.multiplier or 'multiplier'} ({self.mode}, N={self.bits})"
        if self.variant:
            head += f" [{self.variant}]"
        lines = [head]
        lines += [f"  {m.upper():<4} {getattr(self, m):.4f}" for m in METRICS]
        lines += [
            f"  MAX_ED {self.max_ed}",
            f"  PAIRS {self.pair_count}",
            f"  MRE_EXCLUDED {self.zero_exact_excluded}",
        ]
        return "\n".join(lines) + "\n"


def consistency_violations(ep, mae, mse, ned, max_ed=None, rel_tol=1e-12) -> list:
    """Check metric identities that any exhaustive report must satisfy.

    Without ``max_ed`` the NED check falls back to the implied maximum error
    ``MAE / NED``, which cannot exceed the largest possible 8-bit error.
    """
    out = []
    if mse < mae * mae * (1 - rel_tol):
        out.append(f"MSE {mse:g} < MAE^2 {mae * mae:g}")
    if (ep == 0) != (mae == 0) or (mae == 0) != (mse == 0):
        out.append("EP, MAE and MSE disagree on whether any error occurred")
    if max_ed is not None:
        want = mae / max_ed if max_ed else 0.0
        if not math.isclose(ned, want, rel_tol=1e-9, abs_tol=1e-15):
            out.append(f"NED {ned:g} != MAE/max(ED) {want:g}")
    elif ned > 0:
        implied = mae / ned
        # |exact| and |approx| are both below 2**16 for 8-bit operands
        if implied > 2 * (1 << 16):
            out.append(f"NED implies max(ED) = {implied:g}, beyond any 8-bit product error")
    return out


def _approx_value(r) -> int:
    return r if isinstance(r, int) else r.wide_out


def _sweep_rows(args) -> SweepAccumulator:
    approx, xs, ws = args
    acc = SweepAccumulator()
    for x in xs:
        for w in ws:
            acc.add(x * w, _approx_value(approx(x, w)))
    return acc


def sweep(
    mode: str,
    approx: Callable,
    bits: int = 8,
    workers: int = 1,
    multiplier: str = "",
    variant: str = "",
) -> ErrorReport:
    """Score ``approx(x, w)`` against the exact product over every operand pair.

    ``approx`` returns an int or an object with ``wide_out``.  With
    ``workers > 1`` it must be picklable; the operand space is split by rows
    of ``x`` and the partial accumulators merged in row order.
    """
    xs = list(operand_range(mode, bits))
    ws = list(operand_range(mode, bits))
    if workers <= 1:
        acc = _sweep_rows((approx, xs, ws))
    else:
        step = -(-len(xs) // (4 * workers))
        chunks = [(approx, xs[i:i + step], ws) for i in range(0, len(xs), step)]
        acc = SweepAccumulator()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_sweep_rows, chunks):
                acc = acc.merge(part)
    name = multiplier or getattr(approx, "name", getattr(approx, "__name__", ""))
    return ErrorReport.from_accumulator(acc, mode, bits, name, variant)


class DescriptorMismatch(ValueError):
    pass


def compare_report(a: ErrorReport, b: ErrorReport) -> dict:
    """Per-metric ``{"abs": a - b, "rel": (a - b) / b}``; ``rel`` is None when ``b`` is 0."""
    if a.descriptor != b.descriptor:
        raise DescriptorMismatch(f"cannot compare {a.descriptor} with {b.descriptor}")
    out = {}
    for m in METRICS + ("max_ed",):
        va, vb = getattr(a, m), getattr(b, m)
        out[m] = {"abs": va - vb, "rel": (va - vb) / vb if vb else None}
    return out


def exact_reference(x: int, w: int) -> int:
    return x * w
