"""Smoke test for the reynolds_fem extension module.

Build and run:

    cargo build --release -p reynolds-fem-py --features extension-module
    cp target/release/libreynolds_fem.so python/reynolds_fem.so
    python3 python/smoke_test.py
"""

import math
import sys

import reynolds_fem as rf


def main():
    spec = rf.ProblemSpec.benchmark()
    x0, x1, y0, y1 = spec.domain
    assert math.isclose(x1, 2.0 * math.pi / 3.0)
    assert spec.d_value(0.5, 0.5) > 0.0

    mesh = rf.build_rect_mesh(x0, x1, y0, y1, 12, 8)
    assert mesh.n_triangles == 2 * 12 * 8
    finer = mesh.refine([0, 1, 2])
    assert finer.n_triangles > mesh.n_triangles
    assert finer.min_angle() >= 20.0

    sol = rf.solve(spec, mesh, degree=1, method="nitsche")
    print(f"single mesh: ndofs {sol.ndofs}, max p {sol.max():.4f}, "
          f"min p {sol.min():.3e}, {sol.iterations} iterations, {sol.active_points} active points")
    assert sol.max() > 0.0

    history = rf.adaptive(method="nitsche", degree=1, rounds=4)
    for r in history:
        print(f"round {r['round']}: ndofs {r['ndofs']:6d} eta {r['eta_total']:.4e} max p {r['p_max']:.4f}")
    assert [r["ndofs"] for r in history] == sorted(r["ndofs"] for r in history)

    try:
        rf.solve(spec, mesh, method="lagrange")
    except ValueError as e:
        print(f"rejected bad method: {e}")
    else:
        raise AssertionError("bad method accepted")

    print("smoke test ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
