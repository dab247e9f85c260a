"""Integer rounding modes shared by the encoder and the configuration generator.

All helpers operate on non-negative numerators so they map directly onto
the unsigned magnitude datapath.
"""

HALF_UP = "half-up"
HALF_EVEN = "half-even"
TRUNCATE = "truncate"

MODES = (HALF_UP, HALF_EVEN, TRUNCATE)


def round_div(n: int, d: int, mode: str = HALF_UP) -> int:
    """Return ``n / d`` rounded to an integer under ``mode``.

    ``n`` must be non-negative and ``d`` positive.
    """
    if n < 0 or d <= 0:
        raise ValueError(f"round_div expects n >= 0, d > 0 (got {n}, {d})")
    if mode == HALF_UP:
        return (2 * n + d) // (2 * d)
    q, r = divmod(n, d)
    if mode == TRUNCATE:
        return q
    if mode == HALF_EVEN:
        if 2 * r > d or (2 * r == d and q & 1):
            q += 1
        return q
    raise ValueError(f"unknown rounding mode {mode!r}")
