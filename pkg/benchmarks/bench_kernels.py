"""Compare the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--height 260] [--width 346]
       [--events 750000] [--repeats 7]

Both backends are timed best-of-N on identical inputs. They produce
bit-identical results (tests/test_backends.py), so this is purely a
throughput comparison.
"""

import argparse
import time

import numpy as np

from evpose._kernels import _numpy

try:
    from evpose._kernels import _core
except ImportError:
    _core = None


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def make_simulate_inputs(rng, height, width):
    log0 = rng.uniform(0.0, 2.0, (height, width))
    log1 = log0 + rng.uniform(-1.5, 1.5, (height, width))
    ref = log0.copy()
    last = np.full((height, width), -1, dtype=np.int64)
    return log0, log1, ref, last


def make_event_inputs(rng, n, height, width):
    xs = rng.integers(0, width, n)
    ys = rng.integers(0, height, n)
    ts = np.sort(rng.integers(0, 1_000_000, n))
    ps = rng.choice(np.array([-1, 1], dtype=np.int8), n)
    return xs, ys, ts, ps


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--height", type=int, default=260)
    parser.add_argument("--width", type=int, default=346)
    parser.add_argument("--events", type=int, default=750_000)
    parser.add_argument("--repeats", type=int, default=7)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if _core is None:
        print("compiled backend unavailable; build the extension first")
        return 1

    rng = np.random.default_rng(args.seed)
    log0, log1, ref, last = make_simulate_inputs(rng, args.height, args.width)
    xs, ys, ts, ps = make_event_inputs(rng, args.events, args.height, args.width)
    t0, tn = int(ts[0]), int(ts[-1])

    n_events = _core.simulate_pair_kernel(
        log0, log1, 0, 10_000, ref.copy(), last.copy(), 0.2, 0.2, 100
    )[0].size

    cases = [
        (
            f"simulate {args.height}x{args.width} pair ({n_events} events)",
            lambda m: m.simulate_pair_kernel(
                log0, log1, 0, 10_000, ref.copy(), last.copy(), 0.2, 0.2, 100
            ),
        ),
        (
            f"count frame, {args.events} events",
            lambda m: m.accumulate_count(xs, ys, ps, args.width, args.height, 0),
        ),
        (
            f"voxel grid B=4, {args.events} events",
            lambda m: m.accumulate_voxel(xs, ys, ts, ps, t0, tn, args.width, args.height, 4, 0),
        ),
    ]

    print(f"{'kernel':<44} {'cython':>10} {'numpy':>10} {'speedup':>8}")
    for label, call in cases:
        t_core = best_of(lambda: call(_core), args.repeats)
        t_numpy = best_of(lambda: call(_numpy), args.repeats)
        print(f"{label:<44} {t_core * 1e3:>8.2f}ms {t_numpy * 1e3:>8.2f}ms {t_numpy / t_core:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
