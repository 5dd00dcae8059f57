#!/usr/bin/env python3
"""Regenerate the bundled 8x8 digits-style CSV fixture.

Ten hand-drawn 8x8 prototypes (one per class) are jittered with a random
circular shift, per-sample intensity, partial pixel dropout, and additive
Gaussian noise, then clipped to the 0..16 pixel range.  The jitter is
deliberately strong so that classifiers do not saturate and the training
loss stays informative.  1800 rows (180 per class) are written in a fixed
shuffled order; loaders split them 1500 train / 300 test sequentially.
The generator is fully seeded, so the committed CSV is reproducible.
"""

import sys
from pathlib import Path

import numpy as np

PROTOTYPES = {
    0: ["..####..",
        ".#....#.",
        "#......#",
        "#......#",
        "#......#",
        "#......#",
        ".#....#.",
        "..####.."],
    1: ["...##...",
        "..###...",
        ".#.##...",
        "...##...",
        "...##...",
        "...##...",
        "...##...",
        ".######."],
    2: [".#####..",
        "#.....#.",
        "......#.",
        ".....#..",
        "...##...",
        "..#.....",
        ".#......",
        "#######."],
    3: [".#####..",
        "......#.",
        "......#.",
        "..####..",
        "......#.",
        "......#.",
        "#.....#.",
        ".#####.."],
    4: ["....##..",
        "...#.#..",
        "..#..#..",
        ".#...#..",
        "#....#..",
        "########",
        ".....#..",
        ".....#.."],
    5: ["#######.",
        "#.......",
        "#.......",
        "######..",
        "......#.",
        "......#.",
        "#.....#.",
        ".#####.."],
    6: ["..####..",
        ".#......",
        "#.......",
        "######..",
        "#.....#.",
        "#.....#.",
        ".#....#.",
        "..####.."],
    7: ["########",
        "......#.",
        ".....#..",
        "....#...",
        "...#....",
        "...#....",
        "..#.....",
        "..#....."],
    8: ["..####..",
        ".#....#.",
        ".#....#.",
        "..####..",
        ".#....#.",
        "#......#",
        ".#....#.",
        "..####.."],
    9: ["..####..",
        ".#....#.",
        "#......#",
        ".#.....#",
        "..######",
        "......#.",
        ".....#..",
        "..###..."],
}


def prototype_array(rows):
    return np.array(
        [[1.0 if ch == "#" else 0.0 for ch in row] for row in rows]
    ).reshape(-1)


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parents[1] / "src" / "koopbound" / "data" / "digits.csv"
    )
    rng = np.random.default_rng(20240817)
    per_class = 180
    rows = []
    for label, proto in PROTOTYPES.items():
        base = prototype_array(proto).reshape(8, 8)
        for _ in range(per_class):
            img = np.roll(
                base,
                (int(rng.integers(-1, 2)), int(rng.integers(-1, 2))),
                axis=(0, 1),
            )
            intensity = rng.uniform(7.0, 16.0)
            keep = rng.random(64).reshape(8, 8) > 0.05
            noise = rng.normal(0.0, 2.0, size=(8, 8))
            pix = np.clip(
                np.rint(img * intensity * keep + noise), 0, 16
            ).astype(int).reshape(-1)
            rows.append((label, pix))
    order = rng.permutation(len(rows))
    lines = ["label," + ",".join(f"p{i}" for i in range(64))]
    for idx in order:
        label, pix = rows[idx]
        lines.append(f"{label}," + ",".join(str(v) for v in pix))
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {len(rows)} rows to {out}")


if __name__ == "__main__":
    main()
