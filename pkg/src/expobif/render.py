"""Parameter-plane pictures: each pixel centre is classified by its singular orbit."""
from __future__ import annotations

import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dynamics import Attracting, Escaping, classify_singular_orbit
from .errors import ValidationError

# attracting pixels by period (cycled past the end), escaping by speed
PERIOD_COLORS = np.array([
    (230, 60, 50), (250, 170, 40), (240, 230, 70), (90, 200, 90), (60, 170, 220),
    (120, 90, 220), (210, 90, 200), (160, 110, 70),
], dtype=np.uint8)
UNRESOLVED = (0, 0, 0)


@dataclass(frozen=True)
class RenderConfig:
    region: tuple  # re_min, re_max, im_min, im_max
    width: int
    height: int
    max_iter: int = 200
    period_cap: int = 8
    palette: str = "period"

    def validate(self):
        a, b, c, d = self.region
        if not (a < b and c < d):
            raise ValidationError("region must have re_min < re_max and im_min < im_max", region=list(self.region))
        if self.width < 1 or self.height < 1:
            raise ValidationError("width and height must be positive", width=self.width, height=self.height)
        if self.max_iter < 1 or self.period_cap < 1:
            raise ValidationError("max_iter and period_cap must be positive")
        if self.palette not in ("period", "gray"):
            raise ValidationError(f"unknown palette {self.palette!r}")
        return self


def pixel_center(cfg: RenderConfig, i: int, j: int) -> complex:
    """Column i, row j (row 0 at the top)."""
    a, b, c, d = cfg.region
    return complex(a + (i + 0.5) * (b - a) / cfg.width, d - (j + 0.5) * (d - c) / cfg.height)


def classify_pixel(cfg: RenderConfig, i: int, j: int):
    return classify_singular_orbit(pixel_center(cfg, i, j), cfg.max_iter, cfg.period_cap)


def _color(status, palette):
    if isinstance(status, Attracting):
        if palette == "gray":
            return (255, 255, 255)
        return tuple(int(v) for v in PERIOD_COLORS[(status.period - 1) % len(PERIOD_COLORS)])
    if isinstance(status, Escaping):
        v = max(40, 200 - 12 * status.steps)
        return (v // 3, v // 2, v) if palette == "period" else (v // 2, v // 2, v // 2)
    return UNRESOLVED


def _row(args):
    cfg, j = args
    return [_color(classify_pixel(cfg, i, j), cfg.palette) for i in range(cfg.width)]


def workers() -> int:
    env = os.environ.get("EXPOBIF_THREADS")
    n = os.cpu_count() or 1
    if env:
        try:
            n = max(1, min(n, int(env)))
        except ValueError:
            raise ValidationError(f"EXPOBIF_THREADS must be an integer, got {env!r}") from None
    return n


def render_pixels(cfg: RenderConfig, threads: int | None = None) -> np.ndarray:
    """H x W x 3 uint8 image; rows are computed independently and assembled in order."""
    cfg.validate()
    threads = threads or workers()
    jobs = [(cfg, j) for j in range(cfg.height)]
    if threads == 1 or cfg.height == 1:
        rows = [_row(a) for a in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(_row, jobs, chunksize=max(1, cfg.height // (4 * threads))))
    return np.array(rows, dtype=np.uint8).reshape(cfg.height, cfg.width, 3)


def encode_ppm(img: np.ndarray) -> bytes:
    h, w, _ = img.shape
    return b"P6\n%d %d\n255\n" % (w, h) + img.tobytes()


def encode_png(img: np.ndarray) -> bytes:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(img, "RGB").save(buf, format="PNG")
    return buf.getvalue()


def render(cfg: RenderConfig, fmt: str = "ppm", threads: int | None = None) -> bytes:
    if fmt not in ("ppm", "png"):
        raise ValidationError(f"images are ppm or png, not {fmt!r}")
    img = render_pixels(cfg, threads)
    return encode_ppm(img) if fmt == "ppm" else encode_png(img)
