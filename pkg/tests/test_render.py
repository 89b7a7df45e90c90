import io
import math

import numpy as np
import pytest
from PIL import Image

from expobif.dynamics import Attracting, Escaping, classify_singular_orbit
from expobif.errors import ValidationError
from expobif.render import (
    PERIOD_COLORS, RenderConfig, classify_pixel, pixel_center, render, render_pixels, workers,
)

STRIP = RenderConfig((-6.0, 4.0, 0.0, 2 * math.pi), 40, 30, 200, 6)


def locate(cfg, kappa):
    a, b, c, d = cfg.region
    i = int((kappa.real - a) / (b - a) * cfg.width)
    j = int((d - kappa.imag) / (d - c) * cfg.height)
    return i, j


@pytest.fixture(scope="module")
def strip_img():
    return render_pixels(STRIP, threads=1)


def test_pixel_centers():
    cfg = RenderConfig((0.0, 4.0, 0.0, 2.0), 4, 2)
    assert pixel_center(cfg, 0, 0) == complex(0.5, 1.5)
    assert pixel_center(cfg, 3, 1) == complex(3.5, 0.5)


def test_strip_shows_both_components(strip_img):
    # far left of the strip: attracting fixed point; right of re = 1 at im = pi: period 2
    i, j = locate(STRIP, complex(-4, math.pi))
    assert isinstance(classify_pixel(STRIP, i, j), Attracting)
    assert classify_pixel(STRIP, i, j).period == 1
    assert tuple(strip_img[j, i]) == tuple(PERIOD_COLORS[0])
    i, j = locate(STRIP, complex(3, math.pi))
    assert classify_pixel(STRIP, i, j).period == 2
    assert tuple(strip_img[j, i]) == tuple(PERIOD_COLORS[1])


def test_classification_matches_pixel_centres(strip_img):
    rng = np.random.default_rng(0)
    for _ in range(40):
        i, j = int(rng.integers(STRIP.width)), int(rng.integers(STRIP.height))
        a = classify_pixel(STRIP, i, j)
        b = classify_singular_orbit(pixel_center(STRIP, i, j), STRIP.max_iter, STRIP.period_cap)
        assert a == b


def test_escaping_pixels_are_blue():
    cfg = RenderConfig((20.0, 22.0, -0.5, 0.5), 4, 2)
    img = render_pixels(cfg, threads=1)
    assert isinstance(classify_pixel(cfg, 0, 0), Escaping)
    assert (img[..., 2] > img[..., 0]).all()


def test_ppm_layout():
    cfg = RenderConfig((-6.0, 4.0, 0.0, 6.0), 7, 5, 50, 4)
    data = render(cfg, "ppm", threads=1)
    assert data.startswith(b"P6\n7 5\n255\n")
    assert len(data) == len(b"P6\n7 5\n255\n") + 7 * 5 * 3


def test_png_matches_pixels():
    cfg = RenderConfig((-6.0, 4.0, 0.0, 6.0), 9, 6, 50, 4)
    img = Image.open(io.BytesIO(render(cfg, "png", threads=1)))
    assert np.array_equal(np.asarray(img), render_pixels(cfg, threads=1))


def test_deterministic_across_runs_and_threads():
    a = render(STRIP, "ppm", threads=1)
    assert render(STRIP, "ppm", threads=1) == a
    assert render(STRIP, "ppm", threads=3) == a


@pytest.mark.parametrize("region", [(-6, 4, 1, 1), (2, 2, 0, 1), (4, -6, 0, 1)])
def test_degenerate_regions_rejected(region):
    with pytest.raises(ValidationError):
        render(RenderConfig(region, 10, 10))


def test_bad_config_rejected():
    with pytest.raises(ValidationError):
        render(RenderConfig((0, 1, 0, 1), 0, 10))
    with pytest.raises(ValidationError):
        render(RenderConfig((0, 1, 0, 1), 2, 2, palette="neon"))
    with pytest.raises(ValidationError):
        render(RenderConfig((0, 1, 0, 1), 2, 2), "gif")


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("EXPOBIF_THREADS", "1")
    assert workers() == 1
    monkeypatch.setenv("EXPOBIF_THREADS", "many")
    with pytest.raises(ValidationError):
        workers()
