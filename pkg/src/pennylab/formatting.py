"""Deterministic number formatting shared by reports and delimited output.

Rationals print as p/q (integers without the denominator), floats with 12
significant digits, so repeated runs diff cleanly.
"""

from fractions import Fraction


def fmt_number(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (int, Fraction)):
        return str(x)
    return "%.12g" % float(x)
