#!/usr/bin/env python3
"""Regenerate the lasso-fidelity fixture.

2000 projection-like points plus one irregular polygon; the expected id
set comes from the serving side's even-odd evaluation, so the client test
checks exact agreement with the server geometry.

Usage: python3 scripts/generate_lasso_fixture.py
"""
import json
from pathlib import Path

import numpy as np

from embshift.tsne import points_in_polygon

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "lasso_fixture.json"


def main():
    rng = np.random.default_rng(424242)
    # three blobs, like a projection with clusters
    coords = np.vstack(
        [
            rng.normal(loc=(-4.0, 1.0), scale=1.4, size=(700, 2)),
            rng.normal(loc=(3.0, 3.5), scale=1.1, size=(700, 2)),
            rng.normal(loc=(1.0, -3.0), scale=1.8, size=(600, 2)),
        ]
    )
    ids = [f"pt-{i:04d}" for i in range(coords.shape[0])]
    polygon = [
        [0.8, -0.6],
        [4.6, 1.2],
        [5.4, 4.9],
        [2.2, 6.1],
        [-0.4, 4.0],
        [1.5, 2.3],
        [-0.9, 1.0],
    ]
    mask = points_in_polygon(coords, polygon)
    fixture = {
        "points": [
            {"id": rec_id, "x": float(x), "y": float(y)}
            for rec_id, (x, y) in zip(ids, coords)
        ],
        "polygon": polygon,
        "expected_ids": [rec_id for rec_id, inside in zip(ids, mask) if inside],
    }
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(fixture) + "\n", encoding="utf-8")
    print(f"wrote {OUT} ({mask.sum()} of {len(ids)} points inside)")


if __name__ == "__main__":
    main()
