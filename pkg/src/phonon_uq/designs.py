"""Built-in defect-free design geometries.

Two-phase cells with a stiff inclusion in a soft matrix, the combination
known to open a full in-plane bandgap at steel/epoxy-like contrast. The
8 px designs scale to the 16/40 px study resolutions; the 10 px designs
scale to the 10..40 px convergence sweep.
"""

import numpy as np

from .geometry import UnitCellBitmap

_DESIGNS = {}


def _register(name, rows):
    _DESIGNS[name] = np.array([[int(ch) for ch in row] for row in rows], dtype=np.uint8)


_register(
    "square8",
    [
        "00000000",
        "00000000",
        "00111100",
        "00111100",
        "00111100",
        "00111100",
        "00000000",
        "00000000",
    ],
)

_register(
    "cross8",
    [
        "00000000",
        "00011000",
        "00011000",
        "01111110",
        "01111110",
        "00011000",
        "00011000",
        "00000000",
    ],
)

_register(
    "square10",
    [
        "0000000000",
        "0000000000",
        "0011111100",
        "0011111100",
        "0011111100",
        "0011111100",
        "0011111100",
        "0011111100",
        "0000000000",
        "0000000000",
    ],
)

_register(
    "cross10",
    [
        "0000000000",
        "0001111000",
        "0001111000",
        "0111111110",
        "0111111110",
        "0111111110",
        "0111111110",
        "0001111000",
        "0001111000",
        "0000000000",
    ],
)


def design_names() -> list[str]:
    return sorted(_DESIGNS)


def get_design(name: str) -> UnitCellBitmap:
    """Return a built-in design geometry by name."""
    try:
        cells = _DESIGNS[name]
    except KeyError:
        raise KeyError(f"unknown design {name!r}; available: {', '.join(design_names())}") from None
    return UnitCellBitmap(cells.copy())
