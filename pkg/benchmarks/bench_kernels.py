"""Time the compiled friend kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--n 100000] [--repeat 5]

Also times one full market replication with each backend swapped in.
"""
import argparse
import timeit

import numpy as np

from wom_search import _kernels_py, kernels, simulator
from wom_search.simulator import SimConfig

try:
    from wom_search import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench_kernels(n, ks, repeat):
    rng = np.random.default_rng(0)
    backends = {"python": _kernels_py}
    if _kernels_c is not None:
        backends["cython"] = _kernels_c
    print(f"{'kernel':<18}{'k':>5}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}")
    for k in ks:
        u = rng.random((n, k))
        searched = rng.integers(-1, 2, n).astype(np.int8)
        friends = _kernels_py.sample_friends(u)
        for label, call in (
            ("sample_friends", lambda m: m.sample_friends(u)),
            ("friend_quote_mask", lambda m: m.friend_quote_mask(searched, friends)),
        ):
            times = {name: _best(lambda: call(mod), repeat) for name, mod in backends.items()}
            cells = "".join(f"{t * 1e3:>10.2f}ms" for t in times.values())
            speed = f"{times['python'] / times['cython']:>9.1f}x" if "cython" in times else ""
            print(f"{label:<18}{k:>5}{cells}{speed}")


def bench_replication(n, ks, repeat):
    if _kernels_c is None:
        return
    print(f"\n{'replication':<18}{'k':>5}{'python':>12}{'cython':>12}{'speedup':>10}")
    for k in ks:
        cfg = SimConfig(n_consumers=n, k=k, q=0.3, replications=1)
        times = {}
        for name, mod in (("python", _kernels_py), ("cython", _kernels_c)):
            # swap the implementation the simulator dispatches to
            saved = kernels.sample_friends, kernels.friend_quote_mask
            kernels.sample_friends, kernels.friend_quote_mask = mod.sample_friends, mod.friend_quote_mask
            try:
                times[name] = _best(lambda: simulator.simulate_market(cfg), repeat)
            finally:
                kernels.sample_friends, kernels.friend_quote_mask = saved
        print(f"{'simulate_market':<18}{k:>5}{times['python'] * 1e3:>10.1f}ms{times['cython'] * 1e3:>10.1f}ms"
              f"{times['python'] / times['cython']:>9.1f}x")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--k", type=int, nargs="+", default=[1, 10, 50])
    args = ap.parse_args()
    print(f"active backend: {kernels.BACKEND}; n = {args.n}\n")
    if _kernels_c is None:
        print("compiled extension not built; timing the fallback only\n")
    bench_kernels(args.n, args.k, args.repeat)
    bench_replication(args.n, args.k, args.repeat)


if __name__ == "__main__":
    main()
