"""
Axisymmetric scalar fields on the meridian half-disk and their file formats.

A Field2D samples a function u(s, r), s = x_1 and r = |x'|, on a tensor grid covering
[-1, 1] x [0, 1]; ``mask`` marks the nodes that carry data (inside the ball and away from
singular points). Data files are deterministic: fixed column order, 17 significant digits,
no timestamps. Run metadata goes to a ``.meta.json`` sidecar.
"""

import json
import logging
import math
import os
import time
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import DomainError

logger = logging.getLogger(__name__)

CSV_HEADER = "s,r,value"


@dataclass
class Field2D:
    s_grid: np.ndarray
    r_grid: np.ndarray
    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        shape = (len(self.s_grid), len(self.r_grid))
        if self.values.shape != shape or self.mask.shape != shape:
            raise DomainError(
                f"field arrays must have shape {shape}, got values {self.values.shape} and mask {self.mask.shape}"
            )

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    @property
    def spacing(self) -> Tuple[float, float]:
        """Largest mesh width along s and along r."""
        return float(np.max(np.diff(self.s_grid))), float(np.max(np.diff(self.r_grid)))

    def masked_values(self) -> np.ndarray:
        """Values with NaN wherever the mask is false."""
        return np.where(self.mask, self.values, np.nan)

    def evenness_error(self) -> float:
        """Largest |u(s, r) - u(-s, r)| over nodes present on both sides."""
        both = self.mask & self.mask[::-1, :]
        if not np.any(both):
            return 0.0
        return float(np.max(np.abs(self.values - self.values[::-1, :])[both]))

    def axis_profile(self) -> Tuple[np.ndarray, np.ndarray]:
        """(s, u(s, 0)) along the symmetry axis, masked nodes dropped."""
        keep = self.mask[:, 0]
        return self.s_grid[keep], self.values[keep, 0]

    def scaled(self, factor: float) -> "Field2D":
        return Field2D(self.s_grid, self.r_grid, self.values * factor, self.mask.copy())


def half_disk_mask(s_grid: np.ndarray, r_grid: np.ndarray) -> np.ndarray:
    """Nodes of the tensor grid strictly inside the unit disk."""
    s, r = np.meshgrid(s_grid, r_grid, indexing="ij")
    return s * s + r * r < 1.0


def half_disk_grid(n_s: int, n_r: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Uniform tensor grid of [-1, 1] x [0, 1] and the mask of nodes strictly inside the unit disk."""
    if n_s < 3 or n_r < 2:
        raise DomainError(f"grid too small: {n_s} x {n_r}")
    s_grid = np.linspace(-1.0, 1.0, n_s)
    r_grid = np.linspace(0.0, 1.0, n_r)
    return s_grid, r_grid, half_disk_mask(s_grid, r_grid)


def graded_axis(n_intervals: int, centers: Sequence[float], widths: Sequence[float], growth: float = 0.25,
                max_width: float = 0.05, samples: int = 200001) -> np.ndarray:
    """
    n_intervals + 1 nodes on [0, 1], ends included, that equidistribute the density 1 / h with

        h(x) = min(max_width, min_j(widths_j + growth |x - centers_j|)).

    The nodes follow h up to one common factor, so the mesh is finest at the centers and
    widens geometrically away from them. When the node budget is short every width grows
    by the same factor.
    """
    if n_intervals < 1:
        raise DomainError(f"need at least one interval, got {n_intervals}")
    if len(centers) != len(widths) or any(w <= 0 for w in widths):
        raise DomainError(f"need one positive width per center, got centers {centers} and widths {widths}")
    if growth <= 0 or max_width <= 0:
        raise DomainError(f"growth and max_width must be positive, got {growth}, {max_width}")
    x = np.linspace(0.0, 1.0, samples)
    width = np.full_like(x, max_width)
    for center, w in zip(centers, widths):
        width = np.minimum(width, w + growth * np.abs(x - center))
    cumulative = cumulative_trapezoid(1.0 / width, x, initial=0.0)
    nodes = np.interp(np.linspace(0.0, cumulative[-1], n_intervals + 1), cumulative, x)
    nodes[0], nodes[-1] = 0.0, 1.0
    logger.debug(f"graded axis: {n_intervals} intervals, widths {np.min(np.diff(nodes)):.3e} .. {np.max(np.diff(nodes)):.3e}")
    return nodes


def parse_grid(text: str) -> Tuple[int, int]:
    """Parse 'SxR' into (n_s, n_r)."""
    try:
        n_s, n_r = (int(part) for part in text.lower().split("x"))
    except ValueError as e:
        raise DomainError(f"grid must look like 129x65, got {text!r}") from e
    return n_s, n_r


def _fmt(value: float) -> str:
    return f"{float(value):.17g}"


def field_to_csv(field: Field2D) -> str:
    lines = [CSV_HEADER]
    for i, s in enumerate(field.s_grid):
        for j, r in enumerate(field.r_grid):
            if field.mask[i, j]:
                lines.append(f"{_fmt(s)},{_fmt(r)},{_fmt(field.values[i, j])}")
    return "\n".join(lines) + "\n"


def write_field_csv(field: Field2D, path: str):
    _write_text(path, field_to_csv(field))
    logger.info(f"Wrote field with {int(field.mask.sum())} nodes to {path}")


class FixedDigitsEncoder(json.JSONEncoder):
    """JSON encoder writing every float with 17 significant digits; non-finite floats are rejected."""

    def iterencode(self, o, _one_shot=False):
        def floatstr(value: float) -> str:
            if not math.isfinite(value):
                raise ValueError(f"non-finite float {value!r} is not valid JSON")
            return format(value, ".17g")

        indent = " " * self.indent if isinstance(self.indent, int) else self.indent
        markers = {} if self.check_circular else None
        encoder = json.encoder.encode_basestring_ascii if self.ensure_ascii else json.encoder.encode_basestring
        return json.encoder._make_iterencode(
            markers, self.default, encoder, indent, floatstr, self.key_separator, self.item_separator,
            self.sort_keys, self.skipkeys, _one_shot,
        )(o, 0)


def to_json_text(payload: Any) -> str:
    """Deterministic JSON: fixed key order as given, floats with 17 significant digits."""
    return json.dumps(payload, indent=2, cls=FixedDigitsEncoder) + "\n"


def write_json(payload: Any, path: str):
    _write_text(path, to_json_text(payload))
    logger.info(f"Wrote {path}")


def write_sidecar(path: str, arguments: Dict[str, Any], started: float, extra: Optional[Dict[str, Any]] = None):
    """Run metadata next to a data file; the only place timestamps are written."""
    meta = {
        "data_file": os.path.basename(path),
        "arguments": arguments,
        "finished_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "runtime_s": round(time.time() - started, 3),
    }
    if extra:
        meta.update(extra)
    _write_text(path + ".meta.json", json.dumps(meta, indent=2, default=str) + "\n")


def _write_text(path: str, text: str):
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
