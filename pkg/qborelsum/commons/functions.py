"""Strict value parsers shared by the command line and job files."""

import re
from collections.abc import Collection, Sequence

RE_IM_PAIR_LENGTH = 2
# "a+bi", "a-bi", "bi", "a" with optional exponents; "j" accepted as imaginary unit
COMPLEX_LITERAL_PATTERN = re.compile(r"^[0-9eE.+\-]*[ij]?$")
# a value that starts with a minus sign followed by a digit or a decimal point
SIGNED_VALUE_PATTERN = re.compile(r"^-\.?\d")


def parse_complex(value: str) -> complex:
    """
    Parse a complex number from its command-line form.

    Accepted forms:
        're,im'  -> strict pair, e.g. '0.2,-1.5'
        'a+bi'   -> convenience literal, e.g. '1+1i', '-0.5i', '2'

    Raises:
        ValueError: If the value is not a recognized complex literal.
    """
    text = value.strip().replace(" ", "")
    if not text:
        raise ValueError("Empty complex value")

    if "," in text:
        parts = text.split(",")
        if len(parts) != RE_IM_PAIR_LENGTH:
            raise ValueError(f"Invalid complex pair: {value!r}. Expected 're,im'")
        try:
            return complex(float(parts[0]), float(parts[1]))
        except ValueError as exc:
            raise ValueError(f"Invalid complex pair: {value!r}. Expected 're,im'") from exc

    if COMPLEX_LITERAL_PATTERN.match(text) is None:
        raise ValueError(f"Invalid complex literal: {value!r}. Expected 're,im' or 'a+bi'")
    try:
        return complex(text.replace("i", "j"))
    except ValueError as exc:
        raise ValueError(f"Invalid complex literal: {value!r}. Expected 're,im' or 'a+bi'") from exc


def parse_complex_list(value: str) -> list[complex]:
    """
    Parse a parameter vector such as '2,3,5' or '1+1i;0.5'.

    Items are separated by ';' when present, otherwise by ','. An empty string
    yields an empty list (no lower parameters).
    """
    text = value.strip()
    if not text:
        return []
    separator = ";" if ";" in text else ","
    return [parse_complex(item) for item in text.split(separator) if item.strip()]


def parse_float_list(value: str) -> list[float]:
    """Parse a comma separated list of reals, e.g. '0.5,0.9,0.99'."""
    text = value.strip()
    if not text:
        return []
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise ValueError(f"Invalid real list: {value!r}") from exc


def complex_to_pair(value: complex) -> list[float]:
    """Serialize a complex number as the [re, im] pair used in every report."""
    return [float(value.real), float(value.imag)]


def pair_to_complex(value: object) -> complex:
    """Inverse of ``complex_to_pair``; also accepts plain numbers and literals."""
    if isinstance(value, complex):
        return value
    if isinstance(value, int | float):
        return complex(value)
    if isinstance(value, str):
        return parse_complex(value)
    if isinstance(value, list | tuple) and len(value) == RE_IM_PAIR_LENGTH:
        return complex(float(value[0]), float(value[1]))
    raise ValueError(f"Invalid complex value: {value!r}. Expected [re, im]")


def attach_signed_values(arguments: Sequence[str], options: Collection[str]) -> list[str]:
    """
    Join '--x -1.5,0' into '--x=-1.5,0' for the given value options.

    argparse reads any token that starts with '-' as an option unless it is a
    plain number, so negative complex pairs and literals need the '=' form.
    """
    joined: list[str] = []
    index = 0
    while index < len(arguments):
        item = arguments[index]
        following = arguments[index + 1] if index + 1 < len(arguments) else None
        if item in options and following is not None and SIGNED_VALUE_PATTERN.match(following):
            joined.append(f"{item}={following}")
            index += 2
            continue
        joined.append(item)
        index += 1
    return joined
