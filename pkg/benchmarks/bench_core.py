"""Throughput of the compiled detector kernel versus the pure-Python fallback.

Runs ``process_trace`` over the synthesized standard-suite traces with each
available backend and reports samples per second and the speed-up. Both
backends must produce identical events; the script exits non-zero if not.

    python benchmarks/bench_core.py --repeats 5
"""
import argparse
import sys
import time

from roadwarn.detector import BACKENDS, DetectorConfig, process_trace
from roadwarn.photometry import synthesize_trace
from roadwarn.suite import standard_suite


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - start)
    return min(times), result


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=2021)
    args = parser.parse_args(argv)

    cfg = DetectorConfig()
    traces = [synthesize_trace(spec) for spec in standard_suite(args.seed)]
    n = sum(len(t) for t in traces)
    print(f"{len(traces)} traces, {n} samples, backends: {', '.join(sorted(BACKENDS))}")

    results = {}
    for name in sorted(BACKENDS):
        elapsed, runs = best_of(lambda: [process_trace(t, cfg, backend=name) for t in traces],
                                args.repeats)
        results[name] = (elapsed, [r.events for r in runs])
        print(f"{name:>8}: {elapsed * 1e3:9.1f} ms  {n / elapsed / 1e6:8.2f} Msamples/s")

    if "cython" in results:
        py, cy = results["python"], results["cython"]
        print(f"speed-up: {py[0] / cy[0]:.1f}x")
        if py[1] != cy[1]:
            print("backends disagree", file=sys.stderr)
            return 1
    else:
        print("compiled kernel not built; only the fallback was timed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
