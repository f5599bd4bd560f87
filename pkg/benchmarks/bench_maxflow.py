"""Time the compiled push-relabel kernel against the pure-Python fallback.

Each case evaluates r3 on a fixed batch of random node subsets with both
kernels and checks the two agree before reporting timings.

    python3 benchmarks/bench_maxflow.py --subsets 40
"""

import argparse
import random
import time

from vpca import kernels
from vpca.model import generate_random
from vpca.netflow import build_network, max_net_flow

CASES = {
    # name: (nodes, flows, max path length, rate range, capacity range)
    "small": (12, 144, 5, (1, 100), (100, 1000)),
    "medium": (30, 600, 6, (1, 50), (200, 1000)),
    "scale": (65, 1869, 8, (1, 30), (1000, 1000)),
}


def time_kernel(network, batches, kernel, repeat):
    best, values = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        values = [max_net_flow(network, s, kernel)[0] for s in batches]
        best = min(best, time.perf_counter() - t0)
    return best, values


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--subsets", type=int, default=20, help="node subsets per case")
    ap.add_argument("--repeat", type=int, default=3, help="keep the best of this many runs")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--cases", default=",".join(CASES), help="comma list of " + ", ".join(CASES))
    args = ap.parse_args(argv)

    if kernels.compiled_push_relabel is None:
        print("compiled kernel not built; only the Python fallback is timed")
    print(f"{'case':<8} {'V':>4} {'F':>6} {'python ms':>11} {'compiled ms':>12} {'speedup':>8}")
    for name in args.cases.split(","):
        nodes, flows, plen, rates, caps = CASES[name]
        inst = generate_random(nodes, flows, plen, rates, caps, (1, 1), 0.5, args.seed)
        net = build_network(inst)
        rng = random.Random(args.seed)
        batches = [rng.sample(range(nodes), rng.randint(1, nodes)) for _ in range(args.subsets)]

        py_s, py_vals = time_kernel(net, batches, kernels.python_push_relabel, args.repeat)
        if kernels.compiled_push_relabel is None:
            print(f"{name:<8} {nodes:>4} {flows:>6} {py_s * 1e3:>11.1f} {'-':>12} {'-':>8}")
            continue
        c_s, c_vals = time_kernel(net, batches, kernels.compiled_push_relabel, args.repeat)
        if any(abs(a - b) > 1e-6 * max(1.0, a) for a, b in zip(py_vals, c_vals)):
            raise SystemExit(f"{name}: kernels disagree")
        print(f"{name:<8} {nodes:>4} {flows:>6} {py_s * 1e3:>11.1f} {c_s * 1e3:>12.1f} {py_s / c_s:>7.1f}x")


if __name__ == "__main__":
    main()
