#!/usr/bin/env python3
"""Generate the bundled wavy-top triangle meshes (JSON).

The domain is x in [0, 20], 0 <= y <= 4 + 0.6 sin(2 pi x / 5). A graded,
jittered structured triangulation stands in for an unstructured mesher.

    python3 scripts/gen_wavy_mesh.py assets/meshes
"""
import json
import sys
from pathlib import Path

import numpy as np

LX, H, AMP, PERIOD = 20.0, 4.0, 0.6, 5.0


def graded(n, beta):
    s = np.linspace(0.0, 1.0, n + 1)
    return s - beta * np.sin(2.0 * np.pi * s) / (2.0 * np.pi)


def build(nx, ny, beta_x, beta_y, jitter, seed):
    rng = np.random.default_rng(seed)
    u = graded(nx, beta_x)
    v = graded(ny, beta_y)
    U, V = np.meshgrid(u, v, indexing="ij")
    du = np.gradient(u)[:, None] * np.ones_like(U)
    dv = np.gradient(v)[None, :] * np.ones_like(V)
    U[1:-1, 1:-1] += rng.uniform(-jitter, jitter, U[1:-1, 1:-1].shape) * du[1:-1, 1:-1]
    V[1:-1, 1:-1] += rng.uniform(-jitter, jitter, V[1:-1, 1:-1].shape) * dv[1:-1, 1:-1]
    X = U * LX
    Y = V * (H + AMP * np.sin(2.0 * np.pi * X / PERIOD))
    vertices = np.stack([X.ravel(), Y.ravel()], axis=1)

    def vid(i, j):
        return i * (ny + 1) + j

    triangles = []
    for i in range(nx):
        for j in range(ny):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            if rng.random() < 0.5:
                triangles += [(a, b, c), (a, c, d)]
            else:
                triangles += [(a, b, d), (b, c, d)]
    return vertices, np.array(triangles)


def signed_areas(vertices, triangles):
    p = vertices[triangles]
    return 0.5 * (
        (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
        - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
    )


def write(path, vertices, triangles):
    doc = {
        "vertices": [[round(float(x), 12), round(float(y), 12)] for x, y in vertices],
        "triangles": [[int(i), int(j), int(k)] for i, j, k in triangles],
    }
    path.write_text(json.dumps(doc, separators=(",", ":")))


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "assets/meshes")
    out.mkdir(parents=True, exist_ok=True)
    for name, nx, ny, bx, by, jitter, seed in [
        ("wavy_coarse", 32, 14, 0.9, 0.0, 0.3, 1),
        ("wavy_dense", 95, 50, 0.55, 0.4, 0.2, 2),
    ]:
        v, t = build(nx, ny, bx, by, jitter, seed)
        a = signed_areas(v, t)
        assert (a > 0).all(), f"{name}: folded element"
        print(f"{name}: {len(v)} vertices, {len(t)} triangles, "
              f"area {a.sum():.6f}, max {a.max():.4f}, sqrt(max) {np.sqrt(a.max()):.3f}")
        write(out / f"{name}.json", v, t)


if __name__ == "__main__":
    main()
