#!/usr/bin/env python3
"""Builds the bundled 128x128 denoising corpus from permissively licensed
sample images shipped with scikit-image, scikit-learn and matplotlib.

Usage: python3 tools/make_corpus.py [out_dir] [count]
"""
import os
import sys

import matplotlib
import numpy as np
import skimage
import sklearn
from PIL import Image

SIZE = 128


def sources():
    sk = os.path.join(os.path.dirname(skimage.__file__), "data")
    sl = os.path.join(os.path.dirname(sklearn.__file__), "datasets", "images")
    mp = os.path.join(os.path.dirname(matplotlib.__file__), "mpl-data", "sample_data")
    names = [
        (sk, "astronaut.png"), (sk, "chelsea.png"), (sk, "coffee.png"),
        (sk, "hubble_deep_field.jpg"), (sk, "ihc.png"), (sk, "motorcycle_left.png"),
        (sk, "motorcycle_right.png"), (sk, "retina.jpg"), (sk, "rocket.jpg"),
        (sl, "china.jpg"), (sl, "flower.jpg"), (mp, "grace_hopper.jpg"),
    ]
    for base, name in names:
        path = os.path.join(base, name)
        if os.path.exists(path):
            yield os.path.splitext(name)[0], Image.open(path).convert("RGB")


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "data/denoise_corpus"
    count = int(sys.argv[2]) if len(sys.argv) > 2 else 240
    os.makedirs(out, exist_ok=True)
    rng = np.random.default_rng(20180908)
    imgs = list(sources())
    crops = []
    i = 0
    while len(crops) < count:
        name, img = imgs[i % len(imgs)]
        i += 1
        w, h = img.size
        side = int(rng.integers(SIZE, max(SIZE + 1, min(w, h) // 2)))
        x = int(rng.integers(0, w - side + 1))
        y = int(rng.integers(0, h - side + 1))
        crop = img.crop((x, y, x + side, y + side)).resize((SIZE, SIZE), Image.BILINEAR)
        crops.append((name, crop))
    order = rng.permutation(len(crops))
    for idx, k in enumerate(order):
        name, crop = crops[k]
        crop.save(os.path.join(out, f"img_{idx:03d}_{name}.png"), optimize=True)
    print(f"wrote {len(crops)} images to {out}")


if __name__ == "__main__":
    main()
