"""Semi-experiments: which correlation structure matters for LRU?

Each randomization destroys one structure of the request process and
keeps the rest. Comparing hit-ratio curves before and after tells how
much that structure contributes to cache performance:

- global   : all request times redrawn uniformly (an IRM trace);
- positional: each document's request block shifted as a whole;
- local    : per document, interior request times redrawn between the
             fixed first and last requests.

On a dynamic-catalog trace, global randomization spreads each document's
requests over the whole window and destroys the temporal locality that
LRU exploits, so the hit ratio collapses; the other two barely move it.
"""

import numpy as np

from cachechurn import GeneratorConfig, generate_box_trace, log_size_grid, run_semi_experiments

# documents appear at 2/1000 ms, live ~100 s, and draw heterogeneous
# request rates: a miniature of a UGC-video style workload
rng = np.random.default_rng(3)
config = GeneratorConfig(
    gamma=2e-3,
    window=2 * 10**6,
    lambdas=10 ** rng.uniform(-4.5, -2.5, 500),
    taus=10 ** rng.uniform(4.8, 5.5, 500),
)
trace = generate_box_trace(config, seed=11)
print(f"trace: {len(trace)} requests to {trace.distinct_docs} documents")

sizes = log_size_grid(trace.distinct_docs // 2, 12)
report = run_semi_experiments(trace, sizes, seed=99)

print("\nhit ratio by cache size:")
print("cache_size  original   global  positional   local")
for i, c in enumerate(sizes):
    row = [report.original.hit_ratios[i]] + [
        report.randomized[k].hit_ratios[i] for k in ("global", "positional", "local")
    ]
    print(f"{c:10d}  " + "  ".join(f"{v:8.4f}" for v in row))

print("\nmean absolute relative error vs original:")
for kind, value in report.mare_values.items():
    print(f"  {kind:10s} {value:8.4f}")
print("\nthe global curve sits far below the original: an IRM model of this")
print("workload would badly underestimate the hit ratio at practical sizes.")
