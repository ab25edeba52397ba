"""Compare the compiled kernels with their numpy fallbacks.

Usage::

    python benchmarks/bench_backends.py [--sizes 1024 4096 16384] [--repetitions 5]

Prints one row per kernel and size with both median times and the speedup.
"""

import argparse

from fbessel import bench


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[1024, 4096, 16384])
    p.add_argument("--repetitions", type=int, default=5)
    args = p.parse_args()
    result = bench.backend_comparison(args.sizes, args.repetitions)
    print(f"active backend: {result['backend']}")
    print(f"{'kernel':<18}{'n':>8}{'compiled s':>14}{'numpy s':>14}{'speedup':>10}")
    for r in result["rows"]:
        print(f"{r['kernel']:<18}{r['n']:>8}{r['compiled']:>14.5f}{r['numpy']:>14.5f}{r['speedup']:>10.1f}")


if __name__ == "__main__":
    main()
