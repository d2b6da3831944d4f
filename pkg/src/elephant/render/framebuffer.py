"""Accumulating framebuffer with fixed 64-pixel tiles.

Color, albedo, and normal accumulate linearly; cost counts rays traced per
pixel (cumulative). Tiles are disjoint pixel ranges, so tile writers never
share pixels and accumulation order cannot matter.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TILE_SIZE = 64


@dataclass(frozen=True)
class Tile:
    index: int
    x0: int
    y0: int
    w: int
    h: int


def tile_grid(width: int, height: int) -> list[Tile]:
    tiles = []
    idx = 0
    for y0 in range(0, height, TILE_SIZE):
        for x0 in range(0, width, TILE_SIZE):
            tiles.append(Tile(index=idx, x0=x0, y0=y0,
                              w=min(TILE_SIZE, width - x0),
                              h=min(TILE_SIZE, height - y0)))
            idx += 1
    return tiles


class FrameBuffer:
    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        # float32 storage matches the wire format of gathered tiles, so a
        # distributed gather can reproduce local accumulation bit for bit
        self.color = np.zeros((height, width, 3), np.float32)
        self.albedo = np.zeros((height, width, 3), np.float32)
        self.normal = np.zeros((height, width, 3), np.float32)
        self.sample_count = np.zeros((height, width), np.uint32)
        self.cost = np.zeros((height, width), np.uint64)
        self.tiles = tile_grid(width, height)

    def reset(self):
        self.color[:] = 0
        self.albedo[:] = 0
        self.normal[:] = 0
        self.sample_count[:] = 0
        self.cost[:] = 0

    def add_tile(self, tile: Tile, color, albedo, normal, cost, samples: int):
        ys = slice(tile.y0, tile.y0 + tile.h)
        xs = slice(tile.x0, tile.x0 + tile.w)
        self.color[ys, xs] += color
        self.albedo[ys, xs] += albedo
        self.normal[ys, xs] += normal
        self.cost[ys, xs] += cost.astype(np.uint64)
        self.sample_count[ys, xs] += np.uint32(samples)

    def set_tile(self, tile: Tile, color, albedo, normal, cost, samples):
        """Overwrite (used by the distributed head committing gathered tiles)."""
        ys = slice(tile.y0, tile.y0 + tile.h)
        xs = slice(tile.x0, tile.x0 + tile.w)
        self.color[ys, xs] = color
        self.albedo[ys, xs] = albedo
        self.normal[ys, xs] = normal
        self.cost[ys, xs] = cost
        self.sample_count[ys, xs] = samples

    def mean_color(self) -> np.ndarray:
        n = np.maximum(self.sample_count, 1)[:, :, None]
        return self.color / n

    def mean_albedo(self) -> np.ndarray:
        n = np.maximum(self.sample_count, 1)[:, :, None]
        return self.albedo / n

    def mean_normal(self) -> np.ndarray:
        n = np.maximum(self.sample_count, 1)[:, :, None]
        return self.normal / n
