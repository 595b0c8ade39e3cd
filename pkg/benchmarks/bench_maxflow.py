"""Benchmark: compiled max-flow kernel vs the pure-Python twin.

Builds realistic two-layer wall graphs (polar grid sizes used in
tracking), reduces them to s-t networks exactly as the solver does, and
times both kernels on identical inputs.  Results must match exactly
(same flow, same side labels) because both kernels execute the same
operations in the same order.

Run:  python3 benchmarks/bench_maxflow.py
"""

import time

import numpy as np

from vesselwall._maxflow_py import solve as solve_py
from vesselwall.unfold import UnfoldedSlice
from vesselwall.wallgraph import TrackingParams, build_arcs, build_wall_graph

try:
    from vesselwall._maxflow_c import solve as solve_c
except ImportError:
    solve_c = None


def wall_network(rays: int, samples: int, seed: int):
    """(n, tails, heads, caps, s, t) for a synthetic tracking solve."""
    rng = np.random.default_rng(seed)
    field = rng.normal(40.0, 10.0, size=(rays, samples))
    field[:, : samples // 3] = rng.normal(300.0, 10.0,
                                          size=(rays, samples // 3))
    u1 = UnfoldedSlice(samples=field, center_px=np.zeros(2), dr=0.5,
                       theta0=0.0)
    fixed = np.full(rays, int(samples * 0.7))
    params = TrackingParams()
    g, _ = build_wall_graph(u1, fixed, 40.0, params)

    w = g.weights.reshape(-1)
    X, _, Z = g.dims
    tails, heads = build_arcs(X, Z, g.dx, g.dy, g.wrap)

    n = w.size
    s, t = n, n + 1
    idx = np.arange(n, dtype=np.int64)
    src = idx[w < 0]
    snk = idx[w > 0]
    all_tails = np.concatenate(
        [tails, np.full(src.size, s, dtype=np.int64), snk]).astype(np.int32)
    all_heads = np.concatenate(
        [heads, src, np.full(snk.size, t, dtype=np.int64)]).astype(np.int32)
    caps = np.concatenate([np.full(tails.size, np.inf), -w[src], w[snk]])
    finite = np.isfinite(caps)
    bound = float(caps[finite].sum()) + 2.0
    caps = np.where(finite, caps, bound)
    return n + 2, all_tails, all_heads, caps, s, t


def run(kernel, args, repeats: int):
    best = float("inf")
    flow = side = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        flow, side = kernel(*args)
        best = min(best, time.perf_counter() - t0)
    return best, flow, side


def main() -> int:
    sizes = [(36, 60), (72, 120), (144, 160)]
    repeats = 3
    print(f"{'grid':>12} {'nodes':>7} {'arcs':>7} "
          f"{'python':>10} {'compiled':>10} {'speedup':>8}  match")
    for rays, samples in sizes:
        n, tails, heads, caps, s, t = wall_network(rays, samples, seed=1)
        args = (n, tails, heads, caps, s, t)
        t_py, f_py, side_py = run(solve_py, args, repeats)
        if solve_c is None:
            print(f"{rays}x{samples:>4} {n:>7} {tails.size:>7} "
                  f"{t_py * 1e3:>8.1f}ms {'-':>10} {'-':>8}  "
                  f"(compiled kernel unavailable)")
            continue
        t_c, f_c, side_c = run(solve_c, args, repeats)
        match = (f_py == f_c) and np.array_equal(side_py, side_c)
        print(f"{rays}x{samples:>4} {n:>7} {tails.size:>7} "
              f"{t_py * 1e3:>8.1f}ms {t_c * 1e3:>8.1f}ms "
              f"{t_py / t_c:>7.1f}x  {'yes' if match else 'NO'}")
        if not match:
            return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
