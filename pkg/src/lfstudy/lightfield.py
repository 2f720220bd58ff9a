"""Light field data model: view grids, image I/O, centered cropping, sparse sampling.

A light field is a rows x cols grid of sub-aperture views. Pixels are kept as
normalized float64 in [0, 1] together with the capture bit depth, so metrics
stay depth-agnostic while file round-trips remain bit-exact (10-bit content in
16-bit containers is scaled by 1/1023, not 1/65535).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import cv2
import numpy as np

SIDECAR_NAME = "lightfield.json"
DEFAULT_LAYOUT = "v_{r:02}_{c:02}.ppm"

SUPPORTED_BIT_DEPTHS = (8, 10, 16)


class LightFieldError(Exception):
    """Raised for malformed light fields or unreadable view files."""


class ViewType(Enum):
    """Grid-parity role of a view in the sparse-sampling scheme.

    S: retained (directly coded) views at even/even coordinates.
    X: first-generation synthesized views (exactly one odd coordinate).
    O: second-generation synthesized views (both coordinates odd).
    """

    S = "S"
    X = "X"
    O = "O"


def classify_view(row: int, col: int) -> ViewType:
    """Classify a grid coordinate (relative to the cropped grid origin)."""
    if row < 0 or col < 0:
        raise ValueError(f"negative grid coordinate ({row}, {col})")
    odd = (row % 2) + (col % 2)
    if odd == 0:
        return ViewType.S
    if odd == 1:
        return ViewType.X
    return ViewType.O


@dataclass(frozen=True)
class View:
    """One sub-aperture image: (height, width, 3) float64 samples in [0, 1]."""

    data: np.ndarray
    bit_depth: int = 8

    def __post_init__(self):
        if self.data.ndim != 3 or self.data.shape[2] != 3:
            raise LightFieldError(f"view must be (h, w, 3), got {self.data.shape}")
        if self.bit_depth not in SUPPORTED_BIT_DEPTHS:
            raise LightFieldError(f"unsupported bit depth {self.bit_depth}")
        lo, hi = float(self.data.min()), float(self.data.max())
        if lo < 0.0 or hi > 1.0:
            raise LightFieldError(f"samples outside [0, 1]: min={lo}, max={hi}")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def codes(self) -> np.ndarray:
        """Integer sample codes at the declared bit depth."""
        return np.rint(self.data * ((1 << self.bit_depth) - 1)).astype(np.uint16)


@dataclass
class LightField:
    """A complete grid of views sharing dimensions and bit depth."""

    content_id: str
    views: list[list[View]]

    def __post_init__(self):
        if not self.views or not self.views[0]:
            raise LightFieldError("empty view grid")
        cols = len(self.views[0])
        first = self.views[0][0]
        for r, row in enumerate(self.views):
            if len(row) != cols:
                raise LightFieldError(f"ragged grid: row {r} has {len(row)} views, expected {cols}")
            for c, v in enumerate(row):
                if v is None:
                    raise LightFieldError(f"missing view at ({r}, {c})")
                if v.data.shape != first.data.shape:
                    raise LightFieldError(
                        f"view ({r}, {c}) has shape {v.data.shape[:2]}, expected {first.data.shape[:2]}"
                    )
                if v.bit_depth != first.bit_depth:
                    raise LightFieldError(f"view ({r}, {c}) bit depth differs")

    @property
    def rows(self) -> int:
        return len(self.views)

    @property
    def cols(self) -> int:
        return len(self.views[0])

    @property
    def bit_depth(self) -> int:
        return self.views[0][0].bit_depth

    @property
    def view_height(self) -> int:
        return self.views[0][0].height

    @property
    def view_width(self) -> int:
        return self.views[0][0].width

    def view(self, row: int, col: int) -> View:
        return self.views[row][col]

    def coordinates(self):
        for r in range(self.rows):
            for c in range(self.cols):
                yield r, c

    def view_types(self) -> dict[tuple[int, int], ViewType]:
        return {(r, c): classify_view(r, c) for r, c in self.coordinates()}

    def replace_view(self, row: int, col: int, view: View) -> "LightField":
        grid = [list(r) for r in self.views]
        grid[row][col] = view
        return LightField(self.content_id, grid)


def view_type_census(rows: int, cols: int) -> dict[ViewType, int]:
    """Count S/X/O positions on a rows x cols grid."""
    census = {t: 0 for t in ViewType}
    for r in range(rows):
        for c in range(cols):
            census[classify_view(r, c)] += 1
    return census


# ---------------------------------------------------------------------------
# image file I/O


def _read_ppm(path: Path) -> tuple[np.ndarray, int]:
    """Read a binary P6 PPM. Returns (uint16 array (h, w, 3), container maxval)."""
    data = path.read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        m = re.match(rb"\s*(#[^\n]*\n|\S+)", data[pos:])
        if m is None:
            raise LightFieldError(f"{path}: truncated PPM header")
        pos += m.end()
        tok = m.group(1)
        if not tok.startswith(b"#"):
            tokens.append(tok)
    if tokens[0] != b"P6":
        raise LightFieldError(f"{path}: not a binary P6 PPM (magic {tokens[0]!r})")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval not in (255, 65535):
        raise LightFieldError(f"{path}: unsupported PPM maxval {maxval}")
    dtype = np.dtype(">u2") if maxval == 65535 else np.uint8
    count = width * height * 3
    raw = np.frombuffer(data, dtype=dtype, count=count, offset=pos + 1)
    if raw.size != count:
        raise LightFieldError(f"{path}: truncated pixel data")
    return raw.reshape(height, width, 3).astype(np.uint16), maxval


def _write_ppm(path: Path, codes: np.ndarray, maxval: int) -> None:
    header = f"P6\n{codes.shape[1]} {codes.shape[0]}\n{maxval}\n".encode()
    if maxval == 65535:
        body = codes.astype(">u2").tobytes()
    else:
        body = codes.astype(np.uint8).tobytes()
    path.write_bytes(header + body)


def _read_image(path: Path) -> tuple[np.ndarray, int]:
    """Read PPM or PNG as uint16 RGB codes plus the container maxval."""
    if path.suffix.lower() in (".ppm", ".pnm"):
        return _read_ppm(path)
    img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise LightFieldError(f"cannot decode image {path}")
    if img.ndim == 2:
        img = np.stack([img] * 3, axis=-1)
    if img.shape[2] == 4:
        img = img[:, :, :3]
    maxval = 65535 if img.dtype == np.uint16 else 255
    return img[:, :, ::-1].astype(np.uint16), maxval  # BGR -> RGB


def load_view(path: Path, bit_depth: int) -> View:
    """Load one view and normalize by the declared bit depth."""
    codes, maxval = _read_image(Path(path))
    scale = (1 << bit_depth) - 1
    if codes.max(initial=0) > scale:
        raise LightFieldError(
            f"{path}: sample code {int(codes.max())} exceeds declared {bit_depth}-bit depth"
        )
    if scale > maxval:
        raise LightFieldError(f"{path}: {bit_depth}-bit content in a {maxval}-level container")
    return View(codes.astype(np.float64) / scale, bit_depth=bit_depth)


def save_view(view: View, path, fmt: str = "ppm16") -> None:
    """Write a view losslessly at its declared bit depth.

    ppm16 stores the raw integer codes in a 16-bit P6 container; png writes an
    8-bit PNG for 8-bit views and a 16-bit PNG otherwise. load_view(save_view(v))
    reproduces v bit-exactly.
    """
    path = Path(path)
    codes = view.codes()
    if fmt == "ppm16":
        _write_ppm(path, codes, 65535)
    elif fmt == "png":
        if view.bit_depth == 8:
            out = codes.astype(np.uint8)[:, :, ::-1]
        else:
            out = codes.astype(np.uint16)[:, :, ::-1]
        if not cv2.imwrite(str(path), out):
            raise LightFieldError(f"failed to write {path}")
    else:
        raise ValueError(f"unknown format {fmt!r} (expected 'ppm16' or 'png')")


# ---------------------------------------------------------------------------
# directory layout


def _layout_filename(layout: str, r: int, c: int) -> str:
    return layout.format(r=r, c=c)


def _layout_regex(layout: str) -> re.Pattern:
    """Turn a layout pattern with {r}/{c} placeholders into a capture regex."""
    out = []
    pos = 0
    for m in re.finditer(r"\{(r|c)(?::0?(\d+))?\}", layout):
        out.append(re.escape(layout[pos:m.start()]))
        out.append(f"(?P<{m.group(1)}>\\d+)")
        pos = m.end()
    out.append(re.escape(layout[pos:]))
    return re.compile("^" + "".join(out) + "$")


def read_sidecar(directory: Path) -> dict | None:
    sidecar = Path(directory) / SIDECAR_NAME
    if sidecar.exists():
        return json.loads(sidecar.read_text())
    return None


def load_light_field(
    directory,
    layout: str | None = None,
    *,
    rows: int | None = None,
    cols: int | None = None,
    bit_depth: int | None = None,
    content_id: str | None = None,
) -> LightField:
    """Load a directory of per-view images into a LightField.

    Unspecified arguments fall back to the lightfield.json sidecar; without a
    sidecar the grid extent is inferred by matching the layout pattern against
    the directory and the bit depth defaults to the container depth.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise LightFieldError(f"{directory} is not a directory")
    meta = read_sidecar(directory) or {}
    layout = layout or meta.get("layout", DEFAULT_LAYOUT)
    rows = rows if rows is not None else meta.get("rows")
    cols = cols if cols is not None else meta.get("cols")
    bit_depth = bit_depth if bit_depth is not None else meta.get("bit_depth")
    content_id = content_id or meta.get("content_id", directory.name)

    if rows is None or cols is None:
        pattern = _layout_regex(layout)
        coords = []
        for p in directory.iterdir():
            m = pattern.match(p.name)
            if m:
                coords.append((int(m.group("r")), int(m.group("c"))))
        if not coords:
            raise LightFieldError(f"no files in {directory} match layout {layout!r}")
        rows = max(r for r, _ in coords) + 1
        cols = max(c for _, c in coords) + 1

    if bit_depth is None:
        probe = directory / _layout_filename(layout, 0, 0)
        if not probe.exists():
            raise LightFieldError(f"missing view file for (0, 0): {probe.name}")
        _, maxval = _read_image(probe)
        bit_depth = 16 if maxval == 65535 else 8

    grid: list[list[View]] = []
    shape = None
    for r in range(rows):
        row_views = []
        for c in range(cols):
            path = directory / _layout_filename(layout, r, c)
            if not path.exists():
                raise LightFieldError(f"missing view file for ({r}, {c}): {path.name}")
            v = load_view(path, bit_depth)
            if shape is None:
                shape = v.data.shape
            elif v.data.shape != shape:
                raise LightFieldError(
                    f"view ({r}, {c}) has dimensions {v.data.shape[:2]}, expected {shape[:2]}"
                )
            row_views.append(v)
        grid.append(row_views)
    return LightField(content_id, grid)


def save_light_field(lf: LightField, directory, layout: str = DEFAULT_LAYOUT, fmt: str = "ppm16") -> None:
    """Write all views plus the lightfield.json sidecar."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for r, c in lf.coordinates():
        save_view(lf.view(r, c), directory / _layout_filename(layout, r, c), fmt)
    sidecar = {
        "content_id": lf.content_id,
        "rows": lf.rows,
        "cols": lf.cols,
        "bit_depth": lf.bit_depth,
        "layout": layout,
    }
    (directory / SIDECAR_NAME).write_text(json.dumps(sidecar, indent=2) + "\n")


# ---------------------------------------------------------------------------
# grid operations


def crop_inner(lf: LightField, target_rows: int, target_cols: int) -> LightField:
    """Centered subgrid, coordinates re-based to (0, 0).

    The margin must split evenly on both sides, e.g. 15x15 -> 5x5 keeps source
    rows/cols 5..9 and 9x9 -> 5x5 keeps 2..6.
    """
    if target_rows > lf.rows or target_cols > lf.cols:
        raise LightFieldError(
            f"crop {target_rows}x{target_cols} exceeds source {lf.rows}x{lf.cols}"
        )
    dr, dc = lf.rows - target_rows, lf.cols - target_cols
    if dr % 2 or dc % 2:
        raise LightFieldError(
            f"no centered {target_rows}x{target_cols} crop of a {lf.rows}x{lf.cols} grid"
        )
    r0, c0 = dr // 2, dc // 2
    grid = [[lf.view(r0 + r, c0 + c) for c in range(target_cols)] for r in range(target_rows)]
    return LightField(lf.content_id, grid)


def sample_sparse(lf: LightField) -> LightField:
    """Keep the even-coordinate subgrid: (2k+1)x(2k+1) -> (k+1)x(k+1).

    Inputs smaller than 5x5 are rejected; they leave no views to synthesize.
    """
    if lf.rows != lf.cols or lf.rows % 2 == 0:
        raise LightFieldError(f"sparse sampling needs an odd square grid, got {lf.rows}x{lf.cols}")
    if lf.rows < 5:
        raise LightFieldError(f"sparse sampling needs at least a 5x5 grid, got {lf.rows}x{lf.cols}")
    keep = range(0, lf.rows, 2)
    grid = [[lf.view(r, c) for c in keep] for r in keep]
    return LightField(lf.content_id, grid)
