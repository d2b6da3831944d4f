from .context import RenderContext, build_context, camera_rays
from .denoise import DimensionMismatch, denoise
from .frame import (CATEGORIES, RenderConfig, RenderMode, RenderStats,
                    debug_shade, frame_image, hash_color, render_frame)
from .framebuffer import TILE_SIZE, FrameBuffer, Tile, tile_grid
from .pathtrace import StageTimes, trace_paths
from .tonemap import read_pfm, tonemap_for_display, write_pfm

__all__ = ["RenderContext", "build_context", "camera_rays",
           "DimensionMismatch", "denoise", "CATEGORIES", "RenderConfig",
           "RenderMode", "RenderStats", "debug_shade", "frame_image",
           "hash_color", "render_frame", "TILE_SIZE", "FrameBuffer", "Tile",
           "tile_grid", "StageTimes", "trace_paths", "read_pfm",
           "tonemap_for_display", "write_pfm"]
