"""INT8 approximate multiplier pipeline.

encoder (INT8 -> float(1,2,5)) -> mantissa x |W| on a LUT chain ->
decoder (shift by exponent) -> two's complement when the operand signs differ.

Two result views are produced.  ``int8_out`` is the 7-bit (8-bit unsigned)
decoder output, which is the product scaled by ``2**-shift``.  ``wide_out``
puts the same bits back at full scale, ``zmnt * 2**(exp + shift)``, and is
what error analysis and accumulation use.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .lut import (
    INT8_SPEC,
    UINT8_SPEC,
    ConfigChain,
    MultiplierSpec,
    gen_config_chain,
    lut_eval,
    quantized_product,
)
from .rounding import HALF_UP, MODES, round_div

SIGNED = "signed"
UNSIGNED = "unsigned"
MAC = "mac"

MNT_BITS = 5
EXP_MAX = 3


@dataclass(frozen=True)
class Variant:
    """Rounding and quantization knobs left open by the architecture.

    Defaults are the reference configuration; the rest exist for calibration
    sweeps.  ``result_bits`` is the LUT result width ``k``.
    """

    encoder_rounding: str = HALF_UP
    product_rounding: str = HALF_UP
    clamp_w128: bool = False
    result_bits: int = 5

    def __post_init__(self):
        for mode in (self.encoder_rounding, self.product_rounding):
            if mode not in MODES:
                raise ValueError(f"unknown rounding mode {mode!r}")

    def label(self) -> str:
        parts = [f"enc={self.encoder_rounding}", f"prod={self.product_rounding}", f"k={self.result_bits}"]
        if self.clamp_w128:
            parts.append("clamp-w128")
        return " ".join(parts)


DEFAULT_VARIANT = Variant()


def operand_range(mode: str, bits: int = 8) -> range:
    if mode == SIGNED:
        return range(-(1 << (bits - 1)), 1 << (bits - 1))
    if mode == UNSIGNED:
        return range(0, 1 << bits)
    raise ValueError(f"unknown mode {mode!r}")


def check_operand(v: int, mode: str, name: str = "operand"):
    r = operand_range(mode)
    if not r.start <= v < r.stop:
        raise ValueError(f"{name} {v} outside {mode} INT8 range [{r.start}, {r.stop - 1}]")


def mantissa_spec(mode: str = SIGNED, variant: Variant = DEFAULT_VARIANT) -> MultiplierSpec:
    base = INT8_SPEC if mode == SIGNED else UINT8_SPEC
    if variant.result_bits == base.k:
        return base
    return MultiplierSpec(base.b1, base.b2, variant.result_bits)


def _out_bits(mode: str) -> int:
    return 7 if mode == SIGNED else 8


@dataclass(frozen=True)
class Float125:
    """Minifloat produced by the encoder: float(1,2,5), or float(0,2,5) unsigned."""

    sign: int
    exp: int
    mnt: int
    saturated: bool = False

    @property
    def magnitude(self) -> int:
        return self.mnt << self.exp


def encode(x: int, mode: str = SIGNED, rounding: str = HALF_UP) -> Float125:
    check_operand(x, mode, "x")
    m = abs(x)
    sign = int(x < 0)
    # normalise so the leading one sits in mantissa bit 4
    exp = max(0, m.bit_length() - MNT_BITS)
    mnt = round_div(m, 1 << exp, rounding)
    if mnt == 1 << MNT_BITS:
        exp, mnt = exp + 1, 1 << (MNT_BITS - 1)
    saturated = False
    if exp > EXP_MAX:
        # only reachable for unsigned 248..255 with rounding up
        exp, mnt, saturated = EXP_MAX, (1 << MNT_BITS) - 1, True
    return Float125(sign, exp, mnt, saturated)


def mantissa_mul(xf: Float125, w_chain: ConfigChain) -> int:
    if w_chain.spec.b1 != MNT_BITS:
        raise ValueError(f"mantissa chain must have b1=5, got {w_chain.spec}")
    return lut_eval(w_chain, xf.mnt)


def decode(exp: int, zmnt: int, out_bits: int = 7) -> int:
    if not 0 <= exp <= EXP_MAX or zmnt < 0:
        raise ValueError(f"bad decoder input exp={exp} zmnt={zmnt}")
    return min((1 << out_bits) - 1, zmnt << exp)


@dataclass(frozen=True)
class ApproxProduct:
    int8_out: int
    wide_out: int
    trace: Optional[dict] = None


def _weight_magnitude(w: int, mode: str, variant: Variant) -> int:
    wm = abs(w)
    if variant.clamp_w128 and mode == SIGNED and wm == 128:
        return 127
    return wm


def _assemble(xf: Float125, zmnt: int, negative: bool, spec: MultiplierSpec, mode: str, want_trace: bool, **extra):
    out_bits = _out_bits(mode)
    base_shift = spec.b1 + spec.b2 - MNT_BITS
    scaled = zmnt << xf.exp
    if spec.shift >= base_shift:
        scaled <<= spec.shift - base_shift
    else:
        scaled >>= base_shift - spec.shift
    mag = min((1 << out_bits) - 1, scaled)
    wide = zmnt << (xf.exp + spec.shift)
    if negative:
        mag, wide = -mag, -wide
    trace = None
    if want_trace:
        trace = dict(
            sign=xf.sign,
            exp=xf.exp,
            mnt=xf.mnt,
            zmnt=zmnt,
            encoder_saturated=int(xf.saturated),
            decoder_saturated=int(scaled > (1 << out_bits) - 1),
            negate=int(negative),
            **extra,
        )
    return ApproxProduct(mag, wide, trace)


def multiply(
    x: int,
    w: int,
    mode: str = SIGNED,
    variant: Variant = DEFAULT_VARIANT,
    chain: Optional[ConfigChain] = None,
    trace: bool = False,
) -> ApproxProduct:
    """Approximate ``x * w`` through the emulated LUT fabric.

    ``chain`` may be a pre-built configuration for ``|w|`` (weight-stationary
    reuse); otherwise one is generated.
    """
    check_operand(w, mode, "w")
    xf = encode(x, mode, variant.encoder_rounding)
    wm = _weight_magnitude(w, mode, variant)
    spec = mantissa_spec(mode, variant)
    if chain is None:
        chain = gen_config_chain(wm, spec, variant.product_rounding)
    elif chain.spec != spec or (chain.op2_value is not None and chain.op2_value != wm):
        raise ValueError(f"chain (op2={chain.op2_value}, {chain.spec}) does not hold |w|={wm} for {spec}")
    zmnt = mantissa_mul(xf, chain)
    negative = mode == SIGNED and (x < 0) != (w < 0)
    return _assemble(xf, zmnt, negative, spec, mode, trace, w_mag=wm)


def multiply_closed_form(x: int, w: int, mode: str = SIGNED, variant: Variant = DEFAULT_VARIANT) -> ApproxProduct:
    """Same arithmetic as :func:`multiply` without any LUT emulation."""
    check_operand(w, mode, "w")
    xf = encode(x, mode, variant.encoder_rounding)
    spec = mantissa_spec(mode, variant)
    zmnt = quantized_product(xf.mnt, _weight_magnitude(w, mode, variant), spec, variant.product_rounding)
    negative = mode == SIGNED and (x < 0) != (w < 0)
    return _assemble(xf, zmnt, negative, spec, mode, False)


@dataclass(frozen=True)
class DyRecMul:
    """Callable ``(x, w) -> wide product`` with cached encodings and chains.

    Picklable, so it can be handed to sweep workers.
    """

    mode: str = SIGNED
    variant: Variant = DEFAULT_VARIANT
    _chains: dict = field(default_factory=dict, compare=False, repr=False)
    _codes: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def name(self) -> str:
        return f"dyrecmul-{self.mode}"

    def chain_for(self, w: int) -> ConfigChain:
        wm = _weight_magnitude(w, self.mode, self.variant)
        chain = self._chains.get(wm)
        if chain is None:
            chain = gen_config_chain(wm, mantissa_spec(self.mode, self.variant), self.variant.product_rounding)
            self._chains[wm] = chain
        return chain

    def __call__(self, x: int, w: int) -> int:
        xf = self._codes.get(x)
        if xf is None:
            xf = self._codes[x] = encode(x, self.mode, self.variant.encoder_rounding)
        check_operand(w, self.mode, "w")
        chain = self.chain_for(w)
        wide = lut_eval(chain, xf.mnt) << (xf.exp + chain.spec.shift)
        if self.mode == SIGNED and (x < 0) != (w < 0):
            return -wide
        return wide


# multiply-accumulate

ACC_BITS = 32


@dataclass(frozen=True)
class Accumulator:
    """Saturating signed accumulator; ``saturated`` is sticky."""

    value: int = 0
    saturated: bool = False
    bits: int = ACC_BITS

    def __post_init__(self):
        if self.bits < 24:
            raise ValueError("accumulator must be at least 24 bits wide")

    @property
    def bounds(self):
        return -(1 << (self.bits - 1)), (1 << (self.bits - 1)) - 1

    def add(self, v: int) -> "Accumulator":
        lo, hi = self.bounds
        s = self.value + v
        if s > hi or s < lo:
            return Accumulator(max(lo, min(hi, s)), True, self.bits)
        return Accumulator(s, self.saturated, self.bits)


def mac_step(
    acc: Accumulator,
    x: int,
    w_chain: ConfigChain,
    w_negative: bool = False,
    variant: Variant = DEFAULT_VARIANT,
) -> Accumulator:
    """``acc + wide(x * w)`` where ``w_chain`` holds ``|w|`` and ``w_negative`` its sign bit."""
    xf = encode(x, SIGNED, variant.encoder_rounding)
    zmnt = mantissa_mul(xf, w_chain)
    prod = zmnt << (xf.exp + w_chain.spec.shift)
    if (x < 0) != w_negative:
        prod = -prod
    return acc.add(prod)


# static cost model (component counts of the INT8 design)

ENCODER_LUTS = 7
DECODER_LUTS = 7
TWOS_COMPLEMENT_LUTS = 8


@dataclass(frozen=True)
class LutCost:
    cfglut: int
    encoder: int
    decoder: int
    twos_complement: int
    config_bits: int

    @property
    def total(self) -> int:
        return self.cfglut + self.encoder + self.decoder + self.twos_complement


def estimate_lut_cost(spec: MultiplierSpec = INT8_SPEC, variant: str = SIGNED) -> LutCost:
    """Component-level LUT count.

    This is a sum of parts; synthesis merges some logic (the INT8 signed
    design is reported at 25 LUTs against the 27 counted here).  In the MAC
    variant the accumulator adder shares the two's complement LUTs.
    """
    if variant not in (SIGNED, UNSIGNED, MAC):
        raise ValueError(f"unknown variant {variant!r}")
    return LutCost(
        cfglut=spec.cfglut_count,
        encoder=ENCODER_LUTS,
        decoder=DECODER_LUTS,
        twos_complement=0 if variant == UNSIGNED else TWOS_COMPLEMENT_LUTS,
        config_bits=spec.config_bits,
    )


def render_trace(x: int, w: int, mode: str = SIGNED, variant: Variant = DEFAULT_VARIANT) -> str:
    """key=value lines describing one multiplication."""
    p = multiply(x, w, mode, variant, trace=True)
    exact = x * w
    ed = abs(exact - p.wide_out)
    rel = f"{ed / abs(exact):.6g}" if exact else "n/a"
    rows = [
        ("x", x),
        ("w", w),
        ("mode", mode),
        ("encoder_rounding", variant.encoder_rounding),
        ("product_rounding", variant.product_rounding),
        ("k", variant.result_bits),
    ]
    rows += list(p.trace.items())
    rows += [("int8", p.int8_out), ("wide", p.wide_out), ("exact", exact), ("ed", ed), ("re", rel)]
    return "".join(f"{k}={v}\n" for k, v in rows)
