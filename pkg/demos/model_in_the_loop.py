"""The set-of-marks path a real vision-language model would see.

Every few steps the agent letters the visible frontiers on its camera image
and asks the model how likely each one is to lead to the goal. This demo runs
one episode through that path. With no endpoint configured, a stand-in client
prints the first prompt, saves the first marked image, answers 0.5 for every
frontier and confirms every sighting, so it runs offline. To use a real model:

    export FRONTIERNAV_VLM_TOKEN=...
    python demos/model_in_the_loop.py https://host/v1/generate model-name [simple|chat]
"""

import json
import re
import sys
from pathlib import Path

from frontiernav.evaluation import make_suite, run_episode
from frontiernav.scoring import VLMClient, VLMScorer, write_ppm

out_dir = Path(__file__).parent / "out"


class StandInClient:
    def __init__(self):
        self.calls = 0

    def complete(self, prompt, image):
        self.calls += 1
        if self.calls == 1:
            print("---- first prompt ----\n" + prompt + "\n----------------------")
            out_dir.mkdir(exist_ok=True)
            write_ppm(image, out_dir / "first_query.ppm")
            print(f"marked image written to {out_dir / 'first_query.ppm'}")
        if "labeled frontiers" not in prompt:
            # presence check: the detector only fires on the goal class, so trust it
            return '[{"probability": 0.9, "reason": "looks like it"}]'
        labels = re.search(r"labeled frontiers (.*?) represent", prompt).group(1).split(", ")
        return json.dumps([{label: [0.5, "no opinion"] for label in labels}])


if len(sys.argv) >= 3:
    adapter = sys.argv[3] if len(sys.argv) > 3 else "simple"
    client = VLMClient(sys.argv[1], sys.argv[2], adapter=adapter)
else:
    client = StandInClient()

(episode,) = make_suite([4], min_start_distance=2.0)
scorer = VLMScorer(client)
result = run_episode(episode, scorer=scorer)
print(f"goal {episode.goal!r}: success={result.success} steps={result.steps} mode={result.failure_mode}")
print("last prompt began:", scorer.last_prompt.splitlines()[0][:70], "...")
print("last reply:", scorer.last_reply)
