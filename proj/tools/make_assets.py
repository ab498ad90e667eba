#!/usr/bin/env python3
"""Regenerate the bundled assets.

  digits/<d>.png     digit glyph cells rendered from DejaVu Sans
  accents/<d>.pgm    signed accent masks for the digit templates
  glyphs/<hex>.png   Hanzi atlas rendered from hanzi-writer-data outlines
  charset/freq3500.txt

Inputs that are not in the repo: the hanzi-writer-data npm package
(stroke outlines, Arphic PL) and a frequency-ordered charset file.
"""

import argparse
import json
import re
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont
from scipy import ndimage

import matplotlib

DIGIT_FONT = Path(matplotlib.__file__).parent / "mpl-data/fonts/ttf/DejaVuSans.ttf"
DIGIT_FONT_PX = 41  # gives ~30 px tall digits
DIGIT_PAD = 4
LOG_SIGMA = 1.2
ACCENT_GAIN = 0.5

ATLAS_EM = 48
SUPERSAMPLE = 4


def render_digit_ink(font, d):
    canvas = Image.new("L", (DIGIT_FONT_PX * 2, DIGIT_FONT_PX * 2), 0)
    ImageDraw.Draw(canvas).text((DIGIT_FONT_PX // 2, DIGIT_FONT_PX // 4), str(d), font=font, fill=255)
    return np.asarray(canvas, dtype=np.float64) / 255.0


def make_digits(out_dir):
    font = ImageFont.truetype(str(DIGIT_FONT), DIGIT_FONT_PX)
    inks = {d: render_digit_ink(font, d) for d in range(8)}
    # Common vertical extent so every digit shares a baseline.
    rows = np.where(np.any(np.stack([v > 0.5 for v in inks.values()]), axis=(0, 2)))[0]
    top, bottom = rows.min(), rows.max() + 1
    widths = {}
    cols = {}
    for d, ink in inks.items():
        c = np.where(np.any(ink > 0.5, axis=0))[0]
        cols[d] = (c.min(), c.max() + 1)
        widths[d] = c.max() + 1 - c.min()
    cell_w = max(widths.values()) + 2 * DIGIT_PAD
    cell_h = bottom - top + 2 * DIGIT_PAD
    cells = {}
    for d, ink in inks.items():
        c0, c1 = cols[d]
        cell = np.zeros((cell_h, cell_w))
        x0 = (cell_w - (c1 - c0)) // 2
        cell[DIGIT_PAD:DIGIT_PAD + bottom - top, x0:x0 + c1 - c0] = ink[top:bottom, c0:c1]
        cells[d] = cell
        img = Image.fromarray(np.round(255 * (1.0 - cell)).astype(np.uint8), "L")
        (out_dir / "digits").mkdir(parents=True, exist_ok=True)
        img.save(out_dir / "digits" / f"{d}.png")
    return cells


def write_signed_pgm(path, values):
    data = np.clip(np.round(values * 127.0) + 128.0, 0, 255).astype(np.uint8)
    h, w = data.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode())
        f.write(data.tobytes())


def make_accents(out_dir, cells):
    # Accent = difference between a digit's LoG and the LoG of its two most
    # similar digits, in units of the digit's peak LoG magnitude.
    logs = {d: ndimage.gaussian_laplace(c, LOG_SIGMA, mode="mirror") for d, c in cells.items()}
    (out_dir / "accents").mkdir(parents=True, exist_ok=True)
    for d, ld in logs.items():
        def cos(a, b):
            a = a - a.mean()
            b = b - b.mean()
            return float((a * b).sum() / np.sqrt((a * a).sum() * (b * b).sum()))

        rivals = sorted((e for e in logs if e != d), key=lambda e: -cos(ld, logs[e]))[:2]
        print(f"accent {d}: rivals {rivals[0]}, {rivals[1]}")
        rival = np.maximum(cells[rivals[0]], cells[rivals[1]])
        lr = ndimage.gaussian_laplace(rival, LOG_SIGMA, mode="mirror")
        peak = np.abs(ld).max()
        accent = ACCENT_GAIN * (ld - lr) / peak
        # Only where the digit and its rivals disagree.
        accent[np.abs(cells[d] - rival) < 0.25] = 0.0
        accent = ndimage.gaussian_filter(accent, 0.7)
        write_signed_pgm(out_dir / "accents" / f"{d}.pgm", np.clip(accent, -1.0, 1.0))


TOKEN = re.compile(r"[MLQCZ]|-?\d+(?:\.\d+)?")


def outline_polygons(path_text, scale):
    """Flatten an SVG outline (M/L/Q/C/Z) into polygons in atlas pixels."""
    tokens = TOKEN.findall(path_text)
    polys, cur = [], []
    pos = (0.0, 0.0)
    i = 0

    def pt(x, y):
        # hanzi-writer coordinates: 1024 em box, y up, baseline offset 900.
        return (x * scale, (900.0 - y) * scale)

    def nums(k):
        nonlocal i
        vals = [float(t) for t in tokens[i:i + k]]
        i += k
        return vals

    cmd = None
    while i < len(tokens):
        t = tokens[i]
        if t.isalpha():
            cmd = t
            i += 1
            if cmd == "Z":
                if cur:
                    polys.append(cur)
                cur = []
                continue
        if cmd == "M":
            x, y = nums(2)
            if cur:
                polys.append(cur)
            cur = [pt(x, y)]
            pos = (x, y)
        elif cmd == "L":
            x, y = nums(2)
            cur.append(pt(x, y))
            pos = (x, y)
        elif cmd == "Q":
            cx, cy, x, y = nums(4)
            for s in np.linspace(0, 1, 9)[1:]:
                bx = (1 - s) ** 2 * pos[0] + 2 * (1 - s) * s * cx + s * s * x
                by = (1 - s) ** 2 * pos[1] + 2 * (1 - s) * s * cy + s * s * y
                cur.append(pt(bx, by))
            pos = (x, y)
        elif cmd == "C":
            c1x, c1y, c2x, c2y, x, y = nums(6)
            for s in np.linspace(0, 1, 11)[1:]:
                u = 1 - s
                bx = u ** 3 * pos[0] + 3 * u * u * s * c1x + 3 * u * s * s * c2x + s ** 3 * x
                by = u ** 3 * pos[1] + 3 * u * u * s * c1y + 3 * u * s * s * c2y + s ** 3 * y
                cur.append(pt(bx, by))
            pos = (x, y)
        else:
            raise ValueError(f"unsupported path command {cmd!r}")
    if cur:
        polys.append(cur)
    return polys


def render_hanzi(strokes):
    size = ATLAS_EM * SUPERSAMPLE
    img = Image.new("L", (size, size), 255)
    draw = ImageDraw.Draw(img)
    for stroke in strokes:
        for poly in outline_polygons(stroke, size / 1024.0):
            if len(poly) >= 3:
                draw.polygon(poly, fill=0)
    return img.resize((ATLAS_EM, ATLAS_EM), Image.Resampling.BOX)


def make_atlas(out_dir, charset, hanzi_dir, limit):
    glyph_dir = out_dir / "glyphs"
    glyph_dir.mkdir(parents=True, exist_ok=True)
    chars = [c for c in (line.strip() for line in charset.read_text(encoding="utf-8").splitlines()) if c]
    if limit:
        chars = chars[:limit]
    (out_dir / "charset").mkdir(parents=True, exist_ok=True)
    (out_dir / "charset" / "freq3500.txt").write_text("\n".join(chars) + "\n", encoding="utf-8")
    missing = 0
    for ch in chars:
        src = hanzi_dir / f"{ch}.json"
        if not src.exists():
            missing += 1
            continue
        data = json.loads(src.read_text(encoding="utf-8"))
        render_hanzi(data["strokes"]).save(glyph_dir / f"{ord(ch):04x}.png", optimize=True)
    print(f"atlas: {len(chars) - missing} glyphs, {missing} missing")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "assets")
    ap.add_argument("--hanzi-data", type=Path, help="unpacked hanzi-writer-data package directory")
    ap.add_argument("--charset", type=Path, help="frequency-ordered charset, one character per line")
    ap.add_argument("--limit", type=int, default=0)
    args = ap.parse_args()

    cells = make_digits(args.out)
    make_accents(args.out, cells)
    if args.hanzi_data and args.charset:
        make_atlas(args.out, args.charset, args.hanzi_data, args.limit)


if __name__ == "__main__":
    main()
