import re
from typing import List

import numpy as np

from .exceptions import DomainError

_RANGE = re.compile(r"^\s*(\d+)\s*-\s*(\d+)\s*$")
_LINSPACE = re.compile(r"^\s*([^:]+):([^:]+):(\d+)\s*$")


def parse_lengths(text: str) -> List[int]:
    """Parse "1-16", "1,2,4,8" or a mix such as "1-4,8,16" into ascending lengths"""
    if not text or not text.strip():
        raise DomainError("empty length list")

    lengths = set()
    for part in text.split(","):
        match = _RANGE.match(part)
        try:
            if match:
                start, stop = int(match.group(1)), int(match.group(2))
                if start > stop:
                    raise DomainError(f"descending range {part.strip()!r}")
                lengths.update(range(start, stop + 1))
            else:
                lengths.add(int(part))
        except ValueError as e:
            raise DomainError(f"invalid length {part.strip()!r}") from e

    if min(lengths) < 1:
        raise DomainError("sequence lengths must be >= 1")
    return sorted(lengths)


def parse_axis(text: str) -> List[float]:
    """Parse a sigma axis: "0,0.065,0.13" or "start:stop:count" (inclusive)"""
    if not text or not text.strip():
        raise DomainError("empty sigma axis")
    match = _LINSPACE.match(text)
    try:
        if match:
            start, stop, count = float(match.group(1)), float(match.group(2)), int(match.group(3))
            if count < 1:
                raise DomainError("axis needs at least one point")
            values = np.linspace(start, stop, count).tolist()
        else:
            values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise DomainError(f"invalid sigma axis {text!r}") from e

    if not values:
        raise DomainError("empty sigma axis")
    if any(v < 0 for v in values):
        raise DomainError("standard deviations must be non-negative")
    return values


def format_fidelity(gate_error: float) -> str:
    return f"{100.0 * (1.0 - gate_error):.2f}%"

