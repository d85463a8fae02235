"""Rasterize a layout tree to a PNG screenshot with Pillow.

Painting follows document order: backgrounds, then borders, then image
placeholders and text. Output bytes are deterministic for a given layout
(fixed fonts, no timestamps in the PNG stream).
"""

from __future__ import annotations

import io
import math
from functools import lru_cache

from PIL import Image, ImageDraw, ImageFont

from .layout import LayoutBox

WHITE = (255, 255, 255)


@lru_cache(maxsize=16)
def _font(size: int):
    try:
        return ImageFont.load_default(size=size)
    except TypeError:  # older Pillow: fixed-size bitmap font
        return ImageFont.load_default()


def paint(root: LayoutBox, width: int, min_height: int = 720, max_height: int = 40000) -> tuple[Image.Image, bool]:
    """Render the layout to an image; returns (image, clipped)."""
    doc_height = int(math.ceil(root.height))
    height = max(doc_height, min_height, 1)
    clipped = height > max_height
    height = min(height, max_height)
    background = root.background or WHITE
    image = Image.new("RGB", (max(width, 1), height), background)
    draw = ImageDraw.Draw(image)
    for child in root.children:
        _paint_box(draw, child)
    _paint_text(draw, root)
    return image, clipped


def _paint_box(draw: ImageDraw.ImageDraw, box: LayoutBox) -> None:
    if not box.visible:
        for child in box.children:
            _paint_box(draw, child)
        return
    x0, y0 = box.x, box.y
    x1, y1 = box.x + box.width, box.y + box.height
    if box.background is not None and box.width > 0 and box.height > 0:
        draw.rectangle([x0, y0, x1 - 1, y1 - 1], fill=box.background)
    if box.tag == "img" and box.width > 0 and box.height > 0:
        draw.rectangle([x0, y0, x1 - 1, y1 - 1], outline=(150, 150, 150))
        draw.line([x0, y0, x1 - 1, y1 - 1], fill=(150, 150, 150))
        draw.line([x0, y1 - 1, x1 - 1, y0], fill=(150, 150, 150))
    widths = box.border_widths
    if widths:
        color = box.border_color
        if widths.get("top"):
            draw.rectangle([x0, y0, x1 - 1, y0 + widths["top"] - 1], fill=color)
        if widths.get("bottom"):
            draw.rectangle([x0, y1 - widths["bottom"], x1 - 1, y1 - 1], fill=color)
        if widths.get("left"):
            draw.rectangle([x0, y0, x0 + widths["left"] - 1, y1 - 1], fill=color)
        if widths.get("right"):
            draw.rectangle([x1 - widths["right"], y0, x1 - 1, y1 - 1], fill=color)
    for child in box.children:
        _paint_box(draw, child)


def _paint_text(draw: ImageDraw.ImageDraw, box: LayoutBox) -> None:
    if box.visible:
        for frag in box.fragments:
            size = max(int(round(frag.font_size * 0.75)), 6)
            pad = max((frag.height - frag.font_size) / 2.0, 0.0)
            draw.text((frag.x, frag.y + pad), frag.text, fill=frag.color, font=_font(size))
    for child in box.children:
        _paint_text(draw, child)


def to_png_bytes(image: Image.Image) -> bytes:
    buffer = io.BytesIO()
    image.save(buffer, format="PNG", optimize=False)
    return buffer.getvalue()
