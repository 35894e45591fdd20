"""An 8x8 bitmap digit font and a jittered renderer for it."""

import numpy as np

# one byte per row, most significant bit leftmost
_DIGITS = (
    (0x7C, 0xC6, 0xCE, 0xDE, 0xF6, 0xE6, 0x7C, 0x00),
    (0x30, 0x70, 0x30, 0x30, 0x30, 0x30, 0xFC, 0x00),
    (0x78, 0xCC, 0x0C, 0x38, 0x60, 0xCC, 0xFC, 0x00),
    (0x78, 0xCC, 0x0C, 0x38, 0x0C, 0xCC, 0x78, 0x00),
    (0x1C, 0x3C, 0x6C, 0xCC, 0xFE, 0x0C, 0x1E, 0x00),
    (0xFC, 0xC0, 0xF8, 0x0C, 0x0C, 0xCC, 0x78, 0x00),
    (0x38, 0x60, 0xC0, 0xF8, 0xCC, 0xCC, 0x78, 0x00),
    (0xFC, 0xCC, 0x0C, 0x18, 0x30, 0x30, 0x30, 0x00),
    (0x78, 0xCC, 0xCC, 0x78, 0xCC, 0xCC, 0x78, 0x00),
    (0x78, 0xCC, 0xCC, 0x7C, 0x0C, 0x18, 0x70, 0x00),
)

GLYPHS = np.array(
    [[[(row >> (7 - col)) & 1 for col in range(8)] for row in digit] for digit in _DIGITS],
    dtype=bool,
)

BASE_SIZE = 16  # rendered glyph edge before scale jitter


def render_digit(digit: int, rng: np.random.Generator, canvas: int = 32, max_shift: int = 4,
                 scale_range=(1.0, 1.5), dropout: float = 0.02) -> np.ndarray:
    """Boolean ``canvas x canvas`` foreground mask of one jittered digit."""
    size = int(round(BASE_SIZE * rng.uniform(*scale_range)))
    size = min(size, canvas)
    idx = (np.arange(size) * 8) // size
    glyph = GLYPHS[digit][np.ix_(idx, idx)]
    dy, dx = rng.integers(-max_shift, max_shift + 1, size=2)
    top = (canvas - size) // 2 + int(dy)
    left = (canvas - size) // 2 + int(dx)
    mask = np.zeros((canvas, canvas), dtype=bool)
    y0, x0 = max(top, 0), max(left, 0)
    y1, x1 = min(top + size, canvas), min(left + size, canvas)
    mask[y0:y1, x0:x1] = glyph[y0 - top:y1 - top, x0 - left:x1 - left]
    if dropout > 0:
        mask &= rng.random(mask.shape) >= dropout
    return mask
