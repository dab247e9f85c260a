"""Emulation of CFGLUT5-style reconfigurable lookup primitives.

A constant-operand multiplier is realised as ``k`` parallel 5-input LUTs,
one per result bit.  Each LUT holds a 32-entry truth table that is written
through a serial configuration chain (CDI in, CDO out, cascaded).

Serialization convention: within one LUT, entry 31 is shifted first; the
chain is shifted starting from the last LUT.  Equivalently the whole chain
is a single shift register whose most significant bit is ``luts[-1].bits[31]``
and new bits enter at ``luts[0].bits[0]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .rounding import HALF_UP, round_div

LUT_INPUTS = 5
LUT_ENTRIES = 1 << LUT_INPUTS
MAX_B1 = 8

IMAGE_MAGIC = "# dyrecmul-cfg v1"


@dataclass(frozen=True)
class MultiplierSpec:
    """Shape of a LUT-based constant multiplier.

    ``b1`` is the streamed (address) operand width, ``b2`` the constant
    operand width and ``k`` the number of result bits kept after dropping
    ``shift = b1 + b2 - k`` low bits.
    """

    b1: int
    b2: int
    k: int

    def __post_init__(self):
        if self.b1 < 1 or self.b2 < 1 or self.k < 1:
            raise ValueError(f"widths must be >= 1: {self}")
        if self.shift < 0:
            raise ValueError(f"k={self.k} exceeds full product width {self.b1 + self.b2}")

    @property
    def shift(self) -> int:
        return self.b1 + self.b2 - self.k

    @property
    def groups(self) -> int:
        # LUT groups selected by the address bits above the native five
        return 1 << max(0, self.b1 - LUT_INPUTS)

    @property
    def cfglut_count(self) -> int:
        return self.groups * self.k

    @property
    def config_bits(self) -> int:
        return LUT_ENTRIES * self.cfglut_count

    @property
    def max_op2(self) -> int:
        # 2**b2 itself is admitted so that |-128| fits a 7-bit constant port
        return 1 << self.b2

    def __str__(self):
        return f"b1={self.b1} b2={self.b2} k={self.k}"


INT8_SPEC = MultiplierSpec(5, 7, 5)
UINT8_SPEC = MultiplierSpec(5, 8, 5)


@dataclass(frozen=True)
class LutConfig:
    """32-entry truth table of one LUT; ``bits[a]`` is the output at address ``a``."""

    bits: tuple

    def __post_init__(self):
        if len(self.bits) != LUT_ENTRIES or any(b not in (0, 1) for b in self.bits):
            raise ValueError("LutConfig needs exactly 32 entries of 0/1")

    @classmethod
    def from_int(cls, word: int) -> "LutConfig":
        return cls(tuple((word >> a) & 1 for a in range(LUT_ENTRIES)))

    def as_int(self) -> int:
        return sum(b << a for a, b in enumerate(self.bits))

    def __getitem__(self, address: int) -> int:
        return self.bits[address]


@dataclass(frozen=True)
class ConfigChain:
    """Ordered LUT configurations of one multiplier.

    For ``b1 <= 5`` there is one LUT per result bit (``luts[j]`` drives bit
    ``j``).  Wider streamed operands replicate the group: ``luts[g * k + j]``
    drives bit ``j`` when the address bits above bit 4 equal ``g``.
    ``op2_value`` is None when the chain was loaded from a raw bitstream.
    """

    luts: tuple
    op2_value: Optional[int]
    spec: MultiplierSpec

    def __post_init__(self):
        if len(self.luts) != self.spec.cfglut_count:
            raise ValueError(
                f"chain holds {len(self.luts)} LUTs, spec {self.spec} needs {self.spec.cfglut_count}"
            )

    @property
    def config_bits(self) -> int:
        return LUT_ENTRIES * len(self.luts)

    def as_int(self) -> int:
        """The chain as one shift-register word (first-shifted bit is the MSB)."""
        word = 0
        for lut in reversed(self.luts):
            word = (word << LUT_ENTRIES) | lut.as_int()
        return word


def _check_spec(spec: MultiplierSpec):
    if spec.b1 > MAX_B1:
        raise ValueError(f"b1={spec.b1} unsupported (max {MAX_B1})")


def quantized_product(address: int, op2: int, spec: MultiplierSpec, rounding: str = HALF_UP) -> int:
    """Closed-form value a configured chain must produce at ``address``."""
    q = round_div(address * op2, 1 << spec.shift, rounding)
    return min(q, (1 << spec.k) - 1)


def gen_config_chain(op2: int, spec: MultiplierSpec = INT8_SPEC, rounding: str = HALF_UP) -> ConfigChain:
    """Translate a constant operand into LUT truth tables.

    Every address ``a < 2**b1`` maps to ``min(2**k - 1, round(a * op2 / 2**shift))``;
    rounding overflow saturates.  Unused entries (``b1 < 5``) stay zero.
    """
    _check_spec(spec)
    if not 0 <= op2 <= spec.max_op2:
        raise ValueError(f"op2={op2} outside [0, {spec.max_op2}] for {spec}")
    words = [0] * spec.cfglut_count
    for a in range(1 << spec.b1):
        q = quantized_product(a, op2, spec, rounding)
        group, local = divmod(a, LUT_ENTRIES)
        for j in range(spec.k):
            if (q >> j) & 1:
                words[group * spec.k + j] |= 1 << local
    return ConfigChain(tuple(LutConfig.from_int(w) for w in words), op2, spec)


def zero_chain(spec: MultiplierSpec = INT8_SPEC) -> ConfigChain:
    return ConfigChain(tuple(LutConfig.from_int(0) for _ in range(spec.cfglut_count)), 0, spec)


def lut_eval(chain: ConfigChain, address: int) -> int:
    spec = chain.spec
    if not 0 <= address < (1 << spec.b1):
        raise ValueError(f"address {address} outside {spec.b1}-bit range")
    group, local = divmod(address, LUT_ENTRIES)
    base = group * spec.k
    out = 0
    for j in range(spec.k):
        out |= chain.luts[base + j].bits[local] << j
    return out


def serialize(chain: ConfigChain) -> list:
    """Bits in shift order (first element is shifted in first)."""
    word = chain.as_int()
    n = chain.config_bits
    return [(word >> i) & 1 for i in range(n - 1, -1, -1)]


def serial_reconfigure(chain: ConfigChain, bitstream: Sequence[int]) -> ConfigChain:
    """Shift ``bitstream`` through the cascaded chain and return its new contents."""
    n = chain.config_bits
    if len(bitstream) != n:
        raise ValueError(f"bitstream has {len(bitstream)} bits, chain needs {n}")
    mask = (1 << n) - 1
    reg = chain.as_int()
    for bit in bitstream:
        if bit not in (0, 1):
            raise ValueError(f"bitstream entry {bit!r} is not a bit")
        reg = ((reg << 1) | bit) & mask
    luts = tuple(
        LutConfig.from_int((reg >> (LUT_ENTRIES * i)) & 0xFFFFFFFF) for i in range(len(chain.luts))
    )
    return ConfigChain(luts, None, chain.spec)


def cfglut_count(b1: int, k: int) -> int:
    """Number of 5-input LUTs for a ``b1``-bit streamed operand and ``k`` result bits."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if b1 < LUT_INPUTS:
        raise ValueError(f"b1={b1} < 5: formula does not apply, a single LUT per bit ({k} total) suffices")
    return (1 << (b1 - LUT_INPUTS)) * k


# config memory image


def chain_to_hex(chain: ConfigChain) -> str:
    return format(chain.as_int(), f"0{chain.config_bits // 4}x")


def hex_to_bits(line: str, nbits: int) -> list:
    word = int(line, 16)
    return [(word >> i) & 1 for i in range(nbits - 1, -1, -1)]


def config_image(op2_values: Iterable[int], spec: MultiplierSpec = INT8_SPEC, rounding: str = HALF_UP) -> str:
    lines = [f"{IMAGE_MAGIC} {spec}"]
    lines += [chain_to_hex(gen_config_chain(v, spec, rounding)) for v in op2_values]
    return "\n".join(lines) + "\n"


def full_config_image(spec: MultiplierSpec = INT8_SPEC, rounding: str = HALF_UP, clamp_w128: bool = False) -> str:
    top = spec.max_op2 - 1 if clamp_w128 else spec.max_op2
    return config_image(range(top + 1), spec, rounding)


def parse_config_image(text: str):
    """Return ``(spec, [ConfigChain, ...])`` from an image produced by :func:`config_image`."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith(IMAGE_MAGIC):
        raise ValueError("missing config image header")
    fields = dict(tok.split("=", 1) for tok in lines[0][len(IMAGE_MAGIC):].split())
    try:
        spec = MultiplierSpec(int(fields["b1"]), int(fields["b2"]), int(fields["k"]))
    except KeyError as e:
        raise ValueError(f"config image header lacks {e}") from None
    width = spec.config_bits // 4
    chains = []
    for ln in lines[1:]:
        if len(ln) != width:
            raise ValueError(f"config line has {len(ln)} hex digits, expected {width}")
        chains.append(serial_reconfigure(zero_chain(spec), hex_to_bits(ln, spec.config_bits)))
    return spec, chains
