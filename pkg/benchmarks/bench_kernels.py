"""Compare the compiled recurrent kernels with the numpy fallback.

Times one training step (forward with dropout, then backward) for LSTM and
GRU layers over the unit and batch sizes of the search space, and checks
that both backends produce the same outputs.

    python benchmarks/bench_kernels.py --repeat 50
"""

import argparse
import timeit

import numpy as np

from recessnet.nn import Network, kernels


def step(net, x, seed):
    cache = net.forward(x, training=True, rng=np.random.default_rng(seed))
    return cache, net.backward(cache, d_logit=cache.prob - 0.5)


def agreement(kind, units, batch, features):
    net = Network(kind, features, units, layers=2, dropout=0.2, recurrent_dropout=0.3, seed=3)
    x = np.random.default_rng(1).normal(size=(batch, features, 12))
    outs = {}
    for b in kernels.available_backends():
        kernels.use_backend(b)
        outs[b] = step(net, x, 5)
    (ca, ga), (cb, gb) = outs.values()
    return max(np.abs(ca.prob - cb.prob).max(), max(np.abs(ga[k] - gb[k]).max() for k in ga))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=30)
    ap.add_argument("--features", type=int, default=25)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if len(backends) < 2:
        print("compiled extension not built; only the numpy backend is available")
    original = kernels.BACKEND
    print(f"{'kind':5} {'units':>5} {'batch':>5} " + " ".join(f"{b + ' ms':>12}" for b in backends)
          + ("  speedup" if len(backends) > 1 else ""))
    for kind in ("lstm", "gru"):
        for units, batch in [(16, 16), (32, 32), (64, 64)]:
            net = Network(kind, args.features, units, seed=0)
            x = np.random.default_rng(0).normal(size=(batch, args.features, 12))
            ms = {}
            for b in backends:
                kernels.use_backend(b)
                step(net, x, 0)
                best = min(timeit.repeat(lambda: step(net, x, 0), number=args.repeat, repeat=3))
                ms[b] = best / args.repeat * 1e3
            line = f"{kind:5} {units:5d} {batch:5d} " + " ".join(f"{ms[b]:12.3f}" for b in backends)
            if len(backends) > 1:
                line += f"  {ms['python'] / ms['compiled']:6.1f}x"
            print(line)
    if len(backends) > 1:
        for kind in ("lstm", "gru"):
            print(f"{kind} max |compiled - python| = {agreement(kind, 32, 32, args.features):.2e}")
    kernels.use_backend(original)


if __name__ == "__main__":
    main()
