"""Time the compiled kernels against the numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat N]

Each kernel runs on inputs sized like a realistic call; outputs of the two
backends are checked for agreement before timing.
"""

import argparse
import timeit

import numpy as np

from shapsrc.kernels import backends


def cases(rng):
    m = 14
    table = rng.uniform(size=(1 << m, 3))
    yield "shapley_from_table (m=14, T=3)", (table, m)

    diff = rng.integers(-1, 2, size=2000).astype(float)
    idx = rng.integers(0, 2000, size=(1000, 2000), dtype=np.int64)
    yield "bootstrap_not_better (n=2000, 1000 resamples)", (diff, idx)

    n_docs, vocab, classes = 2000, 5000, 3
    lengths = rng.integers(5, 30, size=n_docs)
    indptr = np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)
    tokens = rng.integers(0, vocab, size=indptr[-1], dtype=np.int64)
    counts = rng.integers(1, 3, size=indptr[-1]).astype(float)
    log_prob = np.ascontiguousarray(np.log(rng.dirichlet(np.ones(vocab), size=classes).T))
    log_prior = np.log(np.full(classes, 1 / classes))
    yield "nb_predict (2000 docs, V=5000)", (indptr, tokens, counts, log_prob, log_prior)

    x = rng.normal(size=(5000, 50))
    centroids = rng.normal(size=(10, 50))
    yield "centroid_predict (5000 x 50, 10 classes)", (x, centroids)


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    found = backends()
    names = sorted(found)
    print(f"{'kernel':48s}" + "".join(f"{n:>12s}" for n in names) + ("     speedup" if len(names) > 1 else ""))
    for label, inputs in cases(np.random.Generator(np.random.PCG64(0))):
        fn_name = label.split()[0]
        outs = [np.asarray(getattr(found[n], fn_name)(*inputs)) for n in names]
        for o in outs[1:]:
            np.testing.assert_allclose(o, outs[0], rtol=1e-9, atol=1e-12)
        times = [min(timeit.repeat(lambda f=getattr(found[n], fn_name): f(*inputs), number=1, repeat=args.repeat))
                 for n in names]
        row = f"{label:48s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times)
        if len(names) > 1:
            row += f"{times[names.index('python')] / times[names.index('cython')]:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
