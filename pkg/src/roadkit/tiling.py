"""Expansion-prediction tiling: overlapping reads, disjoint interior writes.

Large images are read in overlapping patches; each patch's outer margin is
thrown away (its context is unreliable) except at the image border where no
neighbor covers it. Write regions are disjoint and jointly cover the image.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Window

DEFAULT_PATCH = 512
DEFAULT_STRIDE = 368
DEFAULT_MARGIN = 72


@dataclass(frozen=True)
class Tile:
    read: Window
    write: Window
    paste_offset: tuple[int, int]  # (dx, dy) of the write window inside the tile output


@dataclass(frozen=True)
class TilePlan:
    width: int
    height: int
    patch: int
    stride: int
    margin: int
    tiles: tuple[Tile, ...]


def _axis_offsets(size: int, patch: int, stride: int) -> list[int]:
    if size <= patch:
        return [0]
    offsets = list(range(0, size - patch, stride))
    offsets.append(size - patch)  # clamp the last read window inside the image
    return offsets


def _axis_windows(size: int, patch: int, stride: int, margin: int) -> list[tuple[int, int, int, int]]:
    """Per axis: (read_start, read_size, write_start, write_end)."""
    offsets = _axis_offsets(size, patch, stride)
    read_size = min(patch, size)
    out = []
    prev_end = 0
    for i, off in enumerate(offsets):
        last = i == len(offsets) - 1
        start = 0 if off == 0 else off + margin
        end = size if last or off + read_size >= size else off + read_size - margin
        start = max(start, prev_end)  # clamped tiles overlap; earlier tile wins
        out.append((off, read_size, start, end))
        prev_end = end
    return out


def plan_tiles(
    image_w: int,
    image_h: int,
    patch: int = DEFAULT_PATCH,
    stride: int = DEFAULT_STRIDE,
    margin: int = DEFAULT_MARGIN,
) -> TilePlan:
    """Plan read/write windows covering an image without seams.

    Read windows step by ``stride`` and clamp so they stay inside the image;
    write windows trim ``margin`` on interior sides and extend to the border
    on boundary sides. Requires patch > 2*margin and stride <= patch - 2*margin
    so interior writes always cover the image.
    """
    if image_w <= 0 or image_h <= 0:
        raise ValueError(f"image dimensions must be positive, got {image_w}x{image_h}")
    if margin < 0:
        raise ValueError(f"margin must be >= 0, got {margin}")
    if patch <= 2 * margin:
        raise ValueError(f"patch ({patch}) must exceed twice the margin ({margin})")
    if not 0 < stride <= patch - 2 * margin:
        raise ValueError(f"stride ({stride}) must be in (0, patch - 2*margin]")

    cols = _axis_windows(image_w, patch, stride, margin)
    rows = _axis_windows(image_h, patch, stride, margin)
    tiles = []
    for ry, rh, wy0, wy1 in rows:
        for rx, rw, wx0, wx1 in cols:
            read = Window(rx, ry, rw, rh)
            write = Window(wx0, wy0, wx1 - wx0, wy1 - wy0)
            tiles.append(Tile(read, write, (wx0 - rx, wy0 - ry)))
    return TilePlan(image_w, image_h, patch, stride, margin, tuple(tiles))


def stitch(plan: TilePlan, tile_outputs) -> np.ndarray:
    """Assemble per-tile outputs into the full-size grid.

    Each output must match its read window's size; only the write-window crop
    lands in the result, so every pixel is written exactly once.
    """
    tile_outputs = list(tile_outputs)
    if len(tile_outputs) != len(plan.tiles):
        raise ValueError(f"expected {len(plan.tiles)} tile outputs, got {len(tile_outputs)}")
    first = np.asarray(tile_outputs[0])
    out = np.zeros((plan.height, plan.width), dtype=first.dtype)
    for tile, data in zip(plan.tiles, tile_outputs):
        data = np.asarray(data)
        expected = (int(tile.read.height), int(tile.read.width))
        if data.shape != expected:
            raise ValueError(f"tile output shape {data.shape} != read window size {expected}")
        dx, dy = tile.paste_offset
        w, h = int(tile.write.width), int(tile.write.height)
        wy, wx = int(tile.write.y0), int(tile.write.x0)
        out[wy : wy + h, wx : wx + w] = data[dy : dy + h, dx : dx + w]
    return out


def plan_to_dict(plan: TilePlan) -> dict:
    """JSON-friendly form of a tile plan."""
    return {
        "width": plan.width,
        "height": plan.height,
        "patch": plan.patch,
        "stride": plan.stride,
        "margin": plan.margin,
        "tiles": [
            {
                "read": [int(t.read.x0), int(t.read.y0), int(t.read.width), int(t.read.height)],
                "write": [int(t.write.x0), int(t.write.y0), int(t.write.width), int(t.write.height)],
                "paste_offset": list(t.paste_offset),
            }
            for t in plan.tiles
        ],
    }
