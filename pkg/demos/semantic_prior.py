"""Does knowing where things are likely to be help?

Runs the same episodes twice: once with the oracle scorer (frontiers that lead
toward the goal score high) and once with a constant 0.5 for every frontier,
which reduces the method to plain gain-and-distance frontier exploration.
The benchmark in the acceptance suite does this over 100 episodes; this is a
smaller version that finishes in well under a minute. Many episodes come out
identical under both scorers (the goal is in view early, or there is only one
way to go), so a handful of small samples swing the average a lot; expect a
few percent here and about ten over the full hundred.

    python demos/semantic_prior.py [n_episodes]
"""

import statistics
import sys

from frontiernav.evaluation import Episode, aggregate, make_suite, run_suite

n = int(sys.argv[1]) if len(sys.argv) > 1 else 20
suite = make_suite(range(n), world_params=dict(width=96, height=96, n_rooms=4), min_start_distance=3.0)


def with_scorer(name):
    return [Episode(**{**e.__dict__, "scorer": name}) for e in suite]


oracle = run_suite(with_scorer("oracle"))
constant = run_suite(with_scorer("constant"))

print(f"{'episode':<8} {'goal':<12} {'oracle':>14} {'constant':>14}")
for o, c in zip(oracle, constant):
    print(f"{o.episode_id:<8} {o.goal:<12} {o.steps:>5} st {o.spl:.2f}  {c.steps:>5} st {c.spl:.2f}")

for name, results in (("oracle", oracle), ("constant", constant)):
    agg = aggregate(results)
    print(f"{name:<9} SR {agg['SR']:5.1f}%  SPL {agg['SPL']:5.1f}%")
spl_o = statistics.mean(r.spl for r in oracle)
spl_c = statistics.mean(r.spl for r in constant)
print(f"relative SPL gain from the semantic prior: {100 * (spl_o - spl_c) / spl_c:+.1f}%")
