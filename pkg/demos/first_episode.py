"""One episode, start to finish, on a procedural house.

Generates a world, runs the oracle scorer toward a goal that exists in it,
prints what the manager decided along the way, and writes a top-down SVG of
the trajectory next to this script.

    python demos/first_episode.py [seed]
"""

import sys
from collections import Counter
from pathlib import Path

from frontiernav.evaluation import make_suite, run_episode
from frontiernav.plotting import write_svg

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 7
out_dir = Path(__file__).parent / "out"

(episode,) = make_suite([seed], min_start_distance=2.0)
world = episode.world
print(f"world seed {seed}: {world.grid.shape[1]}x{world.grid.shape[0]} cells at {world.resolution} m")
print("objects:", ", ".join(sorted({o.label for o in world.objects})))
print(f"goal: {episode.goal!r}, start {episode.start_pose.xz[0]:.2f}, {episode.start_pose.xz[1]:.2f}")

log = out_dir / f"episode_{seed:04d}.jsonl"
result = run_episode(episode, log_path=log, keep_events=True)

# The tick records say why each action was taken. Show the interesting ones.
ticks = [e for e in result.events if e["type"] == "tick"]
for e in ticks:
    notes = []
    if "viewpoints_added" in e:
        notes.append(f"object seen, viewpoint {e['viewpoints_added']} placed")
    if "reached" in e:
        notes.append(f"reached frontier {e['reached']}")
    if "drop" in e:
        notes.append(f"gave up on frontier {e['drop']} after a stall")
    if "verified" in e:
        notes.append(f"asked 'is it here?' -> {e['presence']:.2f}")
    if "rotation_inserted" in e:
        notes.append("nothing to explore, turning around")
    if notes:
        print(f"  step {e['step']:>3}: {'; '.join(notes)}")

print("decisions:", dict(Counter(e["decision"] for e in ticks)))
print(f"success={result.success}  steps={result.steps}  path {result.agent_path_length:.2f} m "
      f"vs shortest {result.shortest_path_length:.2f} m  SPL {result.spl:.3f}  ({result.failure_mode})")

svg = out_dir / f"episode_{seed:04d}.svg"
write_svg(world, result.events, svg)
print(f"log: {log}\nfigure: {svg}")
