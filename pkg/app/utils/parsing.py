"""Parsing of drift and start vectors from their comma-separated text form."""
from fractions import Fraction
from typing import List

from app.utils.errors import InvalidInputError

SEPARATOR = ","  # separator between vector components


def parse_vector(text: str) -> List[Fraction]:
    """
    Parse ``"3,1,2,5,1"`` or ``"1/2,-1/3,0.25"`` into exact rationals.

    Decimal literals are read as the rational they spell (``0.1`` is 1/10), not as the nearest binary float.

    :param text: Comma-separated decimals or ratios of integers.
    :return: The components as fractions.
    :raises InvalidInputError: On an empty vector or an unparseable component.
    """
    if text is None or not text.strip():
        raise InvalidInputError("empty vector")
    values = []
    for position, token in enumerate(text.replace("−", "-").split(SEPARATOR)):
        token = token.strip()
        try:
            values.append(Fraction(token))
        except (ValueError, ZeroDivisionError) as e:
            raise InvalidInputError(
                "component {} ({!r}) is not a decimal or rational: {}".format(position + 1, token, e)
            )
    return values


def parse_grid(text: str) -> List[float]:
    """Parse a comma-separated list of positive times."""
    grid = [float(v) for v in parse_vector(text)]
    if any(t <= 0 for t in grid):
        raise InvalidInputError("time grid must be positive: {}".format(text))
    return grid


def format_number(value, digits: int = 12) -> str:
    """Format a number with the given count of significant digits."""
    if isinstance(value, Fraction):
        return str(value)
    return "{:.{}g}".format(float(value), digits)
