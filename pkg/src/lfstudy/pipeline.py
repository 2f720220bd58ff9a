"""Condition matrix construction: codec adapters, rate control, view synthesis.

A condition is one (codec, encoding method, target bitrate) cell. The full
method encodes the whole 5x5 grid; the sparse method encodes only the 3x3
even-coordinate subgrid and reconstructs the remaining views with a two-stage
synthesis plan driven by a SynthesizerAdapter.

Real codecs (Pleno, VVC) run through external command templates. The built-in
stand-in codec produces realistic block-transform artifacts at controllable
rates so the whole platform runs without third-party binaries.
"""

from __future__ import annotations

import json
import math
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy import fft

from .lightfield import (
    LightField,
    View,
    ViewType,
    classify_view,
    load_light_field,
    load_view,
    sample_sparse,
    save_light_field,
    save_view,
)


class PipelineError(Exception):
    pass


class EncodingMethod(str, Enum):
    FULL5X5 = "full5x5"
    SPARSE3X3 = "sparse3x3"


# paper operating points, bits per pixel
BITRATE_LADDER = (0.118, 0.236, 0.472, 1.003)


# ---------------------------------------------------------------------------
# synthesis plan


@dataclass(frozen=True)
class SynthesisStep:
    target: tuple[int, int]
    sources: tuple[tuple[int, int], tuple[int, int]]
    stage: int


@dataclass(frozen=True)
class SynthesisPlan:
    rows: int
    cols: int
    steps: tuple[SynthesisStep, ...]
    stage2_axis: str = "horizontal"


def build_synthesis_plan(rows: int, cols: int) -> SynthesisPlan:
    """Two-stage plan filling every X view from S pairs, then every O view
    from the horizontal pair of stage-1 X views."""
    if rows != cols or rows % 2 == 0 or rows < 5:
        raise PipelineError(f"synthesis plan needs an odd square grid >= 5x5, got {rows}x{cols}")
    steps = []
    for r in range(rows):
        for c in range(cols):
            if classify_view(r, c) is ViewType.X:
                if r % 2 == 0:  # even row: horizontal S neighbours
                    sources = ((r, c - 1), (r, c + 1))
                else:  # even column: vertical S neighbours
                    sources = ((r - 1, c), (r + 1, c))
                steps.append(SynthesisStep(target=(r, c), sources=sources, stage=1))
    for r in range(1, rows, 2):
        for c in range(1, cols, 2):
            steps.append(SynthesisStep(target=(r, c), sources=((r, c - 1), (r, c + 1)), stage=2))
    return SynthesisPlan(rows=rows, cols=cols, steps=tuple(steps))


def blend_synthesize(a: View, b: View) -> View:
    if a.data.shape != b.data.shape:
        raise PipelineError(f"blend inputs differ: {a.data.shape} vs {b.data.shape}")
    return View(data=(a.data + b.data) / 2.0, bit_depth=a.bit_depth)


class SynthesizerAdapter:
    name = "abstract"

    def synthesize(self, a: View, b: View) -> View:
        raise NotImplementedError


class BlendSynthesizer(SynthesizerAdapter):
    name = "blend"

    def synthesize(self, a: View, b: View) -> View:
        return blend_synthesize(a, b)


@dataclass
class ExternalSynthesizer(SynthesizerAdapter):
    """Command template with {left}, {right}, {output} image path slots."""

    command: str
    io_format: str = "ppm16"
    name: str = "external"

    def synthesize(self, a: View, b: View) -> View:
        with tempfile.TemporaryDirectory(prefix="lfsynth_") as td:
            td = Path(td)
            ext = "png" if self.io_format == "png" else "ppm"
            left, right, out = td / f"left.{ext}", td / f"right.{ext}", td / f"out.{ext}"
            save_view(a, left, self.io_format)
            save_view(b, right, self.io_format)
            _run_template(self.command, left=left, right=right, output=out)
            if not out.exists():
                raise PipelineError(f"synthesizer produced no output at {out}")
            return load_view(out, a.bit_depth)


# ---------------------------------------------------------------------------
# stand-in codec

# classic JPEG luminance quantization table
_QUANT_TABLE = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=float,
)


def _scaled_table(quality: int, base: np.ndarray) -> np.ndarray:
    s = 5000.0 / quality if quality < 50 else 200.0 - 2.0 * quality
    return np.clip(np.floor((base * s + 50.0) / 100.0), 1.0, 255.0)


def _to_blocks(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    return plane.reshape(h // 8, 8, w // 8, 8).transpose(0, 2, 1, 3)


def _from_blocks(blocks: np.ndarray) -> np.ndarray:
    nbh, nbw = blocks.shape[:2]
    return blocks.transpose(0, 2, 1, 3).reshape(nbh * 8, nbw * 8)


def _pad8(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    return np.pad(plane, ((0, -h % 8), (0, -w % 8)), mode="symmetric")


def _entropy_bits(symbols: np.ndarray) -> int:
    _, counts = np.unique(symbols, return_counts=True)
    p = counts / symbols.size
    h = float(-(p * np.log2(p)).sum())
    return max(1, math.ceil(symbols.size * h))


def standin_encode_decode(
    lf: LightField, quality: int, table: np.ndarray | None = None
) -> tuple[LightField, int]:
    """Block-DCT coding of every view; returns the reconstruction and an
    entropy-based size estimate in bits. quality=100 passes through losslessly."""
    if not 1 <= quality <= 100:
        raise PipelineError(f"quality must be in 1..100, got {quality}")
    if quality == 100:
        samples = lf.rows * lf.cols * lf.view_height * lf.view_width * 3
        return lf, samples * lf.bit_depth

    q_table = _scaled_table(quality, _QUANT_TABLE if table is None else table)
    grid = []
    symbols = []
    for r in range(lf.rows):
        row = []
        for c in range(lf.cols):
            src = lf.view(r, c)
            h, w = src.height, src.width
            recon = np.empty_like(src.data)
            for ch in range(3):
                blocks = _to_blocks(_pad8(src.data[..., ch] * 255.0 - 128.0))
                coeffs = fft.dctn(blocks, axes=(-2, -1), norm="ortho")
                quantized = np.rint(coeffs / q_table)
                symbols.append(quantized.astype(np.int32).ravel())
                rebuilt = fft.idctn(quantized * q_table, axes=(-2, -1), norm="ortho")
                recon[..., ch] = np.clip((_from_blocks(rebuilt)[:h, :w] + 128.0) / 255.0, 0.0, 1.0)
            row.append(View(data=recon, bit_depth=src.bit_depth))
        grid.append(row)
    return LightField(lf.content_id, grid), _entropy_bits(np.concatenate(symbols))


class CodecAdapter:
    """encode then decode at a target rate; reports compressed size in bits."""

    name = "abstract"

    def encode_decode(self, lf: LightField, target_bpp: float) -> tuple[LightField, int]:
        raise NotImplementedError


@dataclass
class StandInCodec(CodecAdapter):
    """Built-in block-DCT codec with bisection rate control.

    table_scale skews the quantization table, giving distinctly behaving
    codec variants from the same machinery. A fixed quality wins over the
    bitrate target when set.
    """

    name: str = "standin"
    quality: int | None = None
    table_scale: float = 1.0

    def _table(self) -> np.ndarray:
        return np.clip(_QUANT_TABLE * self.table_scale, 1.0, None)

    def encode_decode(self, lf: LightField, target_bpp: float) -> tuple[LightField, int]:
        if self.quality is not None:
            return standin_encode_decode(lf, self.quality, self._table())
        pixels = lf.rows * lf.cols * lf.view_height * lf.view_width
        lo, hi = 1, 99
        while lo < hi:  # largest quality fitting under the target
            mid = (lo + hi + 1) // 2
            _, bits = standin_encode_decode(lf, mid, self._table())
            if bits / pixels <= target_bpp:
                lo = mid
            else:
                hi = mid - 1
        return standin_encode_decode(lf, lo, self._table())


def _run_template(template: str, **slots) -> None:
    cmd = [part.format(**slots) for part in shlex.split(template)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        tail = proc.stderr.strip().splitlines()[-5:]
        raise PipelineError(
            f"adapter command failed (exit {proc.returncode}): {cmd[0]}\n" + "\n".join(tail)
        )


@dataclass
class ExternalCodec(CodecAdapter):
    """Wraps codec binaries via command templates.

    encode_cmd slots: {input} view directory, {output} bitstream path,
    {bpp} target rate. decode_cmd slots: {input} bitstream, {output} directory.
    """

    encode_cmd: str
    decode_cmd: str
    io_format: str = "ppm16"
    name: str = "external"

    def encode_decode(self, lf: LightField, target_bpp: float) -> tuple[LightField, int]:
        with tempfile.TemporaryDirectory(prefix="lfcodec_") as td:
            td = Path(td)
            in_dir = td / "input"
            save_light_field(lf, in_dir, fmt=self.io_format)
            stream = td / "stream.bin"
            _run_template(self.encode_cmd, input=in_dir, output=stream, bpp=target_bpp)
            if not stream.exists():
                raise PipelineError(f"{self.name}: encoder produced no bitstream")
            bits = stream.stat().st_size * 8
            out_dir = td / "decoded"
            _run_template(self.decode_cmd, input=stream, output=out_dir)
            decoded = load_light_field(out_dir, bit_depth=lf.bit_depth, content_id=lf.content_id)
            return decoded, bits


def load_codec_adapters(path) -> dict[str, CodecAdapter]:
    """Adapter config JSON: name -> {encode_cmd, decode_cmd, io_format} for
    external codecs, or {type: standin, quality?, table_scale?} for built-ins."""
    spec = json.loads(Path(path).read_text())
    adapters: dict[str, CodecAdapter] = {}
    for name, entry in spec.items():
        if "encode_cmd" in entry:
            adapters[name] = ExternalCodec(
                name=name,
                encode_cmd=entry["encode_cmd"],
                decode_cmd=entry["decode_cmd"],
                io_format=entry.get("io_format", "ppm16"),
            )
        elif entry.get("type", "standin") == "standin":
            adapters[name] = StandInCodec(
                name=name,
                quality=entry.get("quality"),
                table_scale=entry.get("table_scale", 1.0),
            )
        else:
            raise PipelineError(f"unknown adapter type for {name!r}: {entry}")
    return adapters


# ---------------------------------------------------------------------------
# condition orchestration


@dataclass(frozen=True)
class Condition:
    codec: str
    method: EncodingMethod
    target_bitrate_bpp: float
    achieved_bitrate_bpp: float
    wall_clock_s: float

    def label(self) -> str:
        return f"{self.codec}_{self.method.value}_{self.target_bitrate_bpp:g}"


def run_condition(
    lf: LightField,
    codec: CodecAdapter,
    method: EncodingMethod | str,
    bitrate: float,
    synth: SynthesizerAdapter | None = None,
) -> tuple[LightField, Condition]:
    method = EncodingMethod(method)
    started = time.perf_counter()

    if method is EncodingMethod.FULL5X5:
        encoded = lf
    else:
        encoded = sample_sparse(lf)
    decoded, bits = codec.encode_decode(encoded, bitrate)
    if (decoded.rows, decoded.cols) != (encoded.rows, encoded.cols) or (
        decoded.view_height,
        decoded.view_width,
    ) != (encoded.view_height, encoded.view_width):
        raise PipelineError(
            f"{codec.name}: decoded geometry {decoded.rows}x{decoded.cols} views of "
            f"{decoded.view_height}x{decoded.view_width} does not match input"
        )

    if method is EncodingMethod.FULL5X5:
        recon = decoded
    else:
        synth = synth or BlendSynthesizer()
        grid: dict[tuple[int, int], View] = {
            (2 * r, 2 * c): decoded.view(r, c) for r in range(decoded.rows) for c in range(decoded.cols)
        }
        for step in build_synthesis_plan(lf.rows, lf.cols).steps:
            grid[step.target] = synth.synthesize(grid[step.sources[0]], grid[step.sources[1]])
        recon = LightField(
            lf.content_id, [[grid[(r, c)] for c in range(lf.cols)] for r in range(lf.rows)]
        )

    achieved = bits / (encoded.rows * encoded.cols * lf.view_height * lf.view_width)
    condition = Condition(
        codec=codec.name,
        method=method,
        target_bitrate_bpp=bitrate,
        achieved_bitrate_bpp=achieved,
        wall_clock_s=time.perf_counter() - started,
    )
    return recon, condition


def select_test_views(scores: dict[tuple[int, int], float]) -> dict[ViewType, tuple[int, int]]:
    """Pick the worst-scoring coordinate per view type, ties row-major."""
    if not scores:
        raise PipelineError("no scores provided")
    rows = max(r for r, _ in scores) + 1
    cols = max(c for _, c in scores) + 1
    expected = {(r, c) for r in range(rows) for c in range(cols)}
    if set(scores) != expected:
        missing = sorted(expected - set(scores))
        raise PipelineError(f"scores missing for {len(missing)} views, first {missing[:3]}")

    selected: dict[ViewType, tuple[int, int]] = {}
    best: dict[ViewType, float] = {}
    for coord in sorted(scores):
        t = classify_view(*coord)
        if t not in selected or scores[coord] < best[t]:
            selected[t] = coord
            best[t] = scores[coord]
    return selected


# ---------------------------------------------------------------------------
# condition manifest


def condition_to_json(cond: Condition) -> dict:
    return {
        "codec": cond.codec,
        "method": cond.method.value,
        "target_bitrate_bpp": cond.target_bitrate_bpp,
        "achieved_bitrate_bpp": cond.achieved_bitrate_bpp,
    }


def condition_from_json(obj: dict) -> Condition:
    return Condition(
        codec=obj["codec"],
        method=EncodingMethod(obj["method"]),
        target_bitrate_bpp=obj["target_bitrate_bpp"],
        achieved_bitrate_bpp=obj["achieved_bitrate_bpp"],
        wall_clock_s=obj.get("wall_clock_s", 0.0),
    )


def write_condition_manifest(path, entries: list[dict], extra: dict | None = None) -> None:
    """entries: {content_id, light_field_dir, condition: Condition, rows, cols}.

    Wall-clock timings are deliberately left out; they go to a volatile
    sidecar so repeated runs stay byte-identical. extra holds run-level
    metadata such as the synthesizer identity.
    """
    records = []
    for e in entries:
        rows, cols = e["rows"], e["cols"]
        records.append(
            {
                "content_id": e["content_id"],
                "light_field_dir": str(e["light_field_dir"]),
                "condition": condition_to_json(e["condition"]) if e["condition"] else None,
                "rows": rows,
                "cols": cols,
                "view_types": {
                    f"{r},{c}": classify_view(r, c).value for r in range(rows) for c in range(cols)
                },
            }
        )
    payload = {"schema": "lfstudy-conditions-v1", "entries": records}
    payload.update(extra or {})
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_condition_manifest(path) -> list[dict]:
    payload = json.loads(Path(path).read_text())
    if payload.get("schema") != "lfstudy-conditions-v1":
        raise PipelineError(f"unrecognized manifest schema in {path}")
    entries = []
    for rec in payload["entries"]:
        entries.append(
            {
                "content_id": rec["content_id"],
                "light_field_dir": rec["light_field_dir"],
                "condition": condition_from_json(rec["condition"]) if rec["condition"] else None,
                "rows": rec["rows"],
                "cols": rec["cols"],
            }
        )
    return entries
