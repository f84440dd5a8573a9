import json
import math

import pytest

from conftest import DATA
from frontiernav.config import NavConfig
from frontiernav.errors import AggregationError, ConfigurationError, InvalidInputError
from frontiernav.evaluation import (
    FAILURE_MODES,
    Episode,
    EpisodeResult,
    aggregate,
    classify_failure,
    compute_spl,
    is_feasible,
    load_manifest,
    make_suite,
    read_results,
    run_episode,
    run_suite,
    save_manifest,
    shortest_path_to_goal,
    write_results,
)
from frontiernav.geometry import Pose
from frontiernav.gridworld import load_world, success_check
from frontiernav.planner import geodesic_distance
from frontiernav.scoring import OracleScorer

MICRO_START = Pose.planar(0.95, 1.55, 0.0)


def micro():
    return load_world(DATA / "micro_world.txt")


def result(success, spl, mode="none", excluded=False):
    return EpisodeResult("e", "bed", "oracle", success, 10, 1.0, 1.0, spl, mode, excluded=excluded)


# -- metrics


def test_spl_examples():
    assert compute_spl(True, 10.0, 20.0) == 0.5
    assert compute_spl(True, 10.0, 7.0) == 1.0
    assert compute_spl(True, 10.0, 10.0) == 1.0
    assert compute_spl(False, 10.0, 3.0) == 0.0


@pytest.mark.parametrize("shortest,actual", [(0.0, 1.0), (-1.0, 1.0), (math.inf, 1.0), (1.0, -0.1)])
def test_spl_rejects_bad_lengths(shortest, actual):
    with pytest.raises(InvalidInputError):
        compute_spl(True, shortest, actual)


def test_aggregate_example():
    out = aggregate([result(True, 1.0), result(True, 0.5), result(False, 0.0, "reach_max_steps")])
    assert out["SR"] == pytest.approx(200 / 3)
    assert out["SPL"] == 50.0
    assert out["episodes"] == 3 and out["excluded"] == 0
    assert out["failure_modes"]["reach_max_steps"] == 1 and out["failure_modes"]["none"] == 2


def test_aggregate_skips_excluded_and_errors_when_empty():
    out = aggregate([result(True, 0.8), result(False, 0.0, excluded=True)])
    assert out["SR"] == 100.0 and out["SPL"] == 80.0 and out["excluded"] == 1
    with pytest.raises(AggregationError):
        aggregate([result(False, 0.0, excluded=True)])
    with pytest.raises(AggregationError):
        aggregate([])


def test_failure_taxonomy():
    assert classify_failure(True, False, True) == "false_positive"
    assert classify_failure(False, False, True, 500) == "stuck_cannot_reach"
    assert classify_failure(False, False, False, 500) == "reach_max_steps"
    assert classify_failure(False, False, False, 40, no_frontiers=True) == "no_frontiers"
    assert classify_failure(True, True, True) == "none"


def test_failure_modes_exclusive_and_exhaustive():
    seen = set()
    for stopped in (False, True):
        for success in (False, True):
            for ever in (False, True):
                for nf in (False, True):
                    mode = classify_failure(stopped, success, ever, 0, nf)
                    assert mode in FAILURE_MODES
                    assert (mode == "none") == success
                    seen.add(mode)
    assert seen == set(FAILURE_MODES)


# -- shortest path


def test_shortest_path_matches_independent_search():
    world = micro()
    d, region = shortest_path_to_goal(world, MICRO_START, "bed")
    # point-to-point geodesics to the region cells on the side facing the start
    cells = [tuple(c) for c in zip(*region.nonzero())]
    facing = [c for c in cells if c[1] <= min(k[1] for k in cells) + 1]
    best = min(
        geodesic_distance(world.grid, MICRO_START.position, ((c[1] + 0.5) * 0.1, 0.0, (c[0] + 0.5) * 0.1)) for c in facing
    )
    assert abs(d - best) <= world.resolution
    for c in cells[:: max(1, len(cells) // 40)]:
        pose = Pose.planar((c[1] + 0.5) * 0.1, (c[0] + 0.5) * 0.1)
        # every region cell succeeds for some heading, since success is heading-free
        assert success_check(world, pose, "bed").success


# -- episodes


def test_micro_world_success():
    res = run_episode(Episode(MICRO_START, "bed", world=micro(), episode_id="micro"))
    assert res.success and res.failure_mode == "none"
    assert res.steps <= 60
    assert 0.0 < res.spl <= 1.0
    assert res.spl == pytest.approx(compute_spl(True, res.shortest_path_length, res.agent_path_length))
    assert res.trajectory[0] == [0.95, 1.55, 0.0]


def test_disconnected_goal_is_excluded():
    res = run_episode(Episode(MICRO_START, "sofa", world=micro(), episode_id="far"))
    assert res.excluded and res.exclusion_reason == "infeasible" and res.steps == 0
    assert not is_feasible(Episode(MICRO_START, "sofa", world=micro()))
    assert is_feasible(Episode(MICRO_START, "bed", world=micro()))
    out = aggregate([res, run_episode(Episode(MICRO_START, "bed", world=micro()))])
    assert out["episodes"] == 1 and out["excluded"] == 1


def test_absent_goal_is_a_negative_control():
    res = run_episode(Episode(MICRO_START, "piano", world=micro(), max_steps=40))
    assert res.excluded and res.exclusion_reason == "negative_control" and not res.success


def test_start_must_be_free():
    with pytest.raises(InvalidInputError):
        run_episode(Episode(Pose.planar(0.05, 0.05), "bed", world=micro()))


class NeverPresent(OracleScorer):
    def verify_presence(self, obs, goal):
        return 0.0


def test_budget_exhaustion_runs_all_steps():
    (ep,) = make_suite([0], world_params=dict(width=160, height=160, n_rooms=8), min_start_distance=3.0)
    res = run_episode(ep, scorer=NeverPresent(ep.resolve_world()))
    assert res.steps == 500 and not res.stopped
    assert res.failure_mode == "reach_max_steps" and res.spl == 0.0


def test_step_cap_from_episode():
    (ep,) = make_suite([0], world_params=dict(width=160, height=160, n_rooms=8))
    res = run_episode(Episode(ep.start_pose, ep.goal, world=ep.world, world_seed=0, max_steps=37), scorer=NeverPresent(ep.world))
    assert res.steps == 37


def test_event_log_structure(tmp_path):
    log = tmp_path / "micro.jsonl"
    res = run_episode(Episode(MICRO_START, "bed", world=micro(), episode_id="micro"), log_path=log)
    lines = [json.loads(line) for line in log.read_text().splitlines()]
    assert lines[0]["type"] == "header" and lines[-1]["type"] == "end"
    ticks = lines[1:-1]
    assert [t["step"] for t in ticks] == list(range(len(ticks)))
    assert len(ticks) == res.steps
    assert ticks[-1]["decision"] == "stop_success"
    assert res.event_log == str(log)


# -- suites


def test_manifest_round_trip(tmp_path):
    suite = make_suite(range(3), world_params=dict(width=48, height=48))
    save_manifest(suite, tmp_path / "m.jsonl")
    back = load_manifest(tmp_path / "m.jsonl")
    assert back == suite  # the inline world is not compared, seeds and params are
    assert [b.resolve_world().grid.tolist() for b in back] == [s.world.grid.tolist() for s in suite]


def test_manifest_with_world_file(tmp_path):
    (tmp_path / "w.txt").write_text((DATA / "micro_world.txt").read_text())
    (tmp_path / "m.jsonl").write_text('# comment\n{"world_file": "w.txt", "goal": "bed", "start": [0.95, 1.55, 0.0]}\n')
    (ep,) = load_manifest(tmp_path / "m.jsonl")
    assert ep.resolve_world().grid.shape == (32, 60)
    assert ep.start_pose == MICRO_START


@pytest.mark.parametrize("row", ['{"goal": "bed"}', '{"world_seed": 1}', '{"world_seed": 1, "goal": "bed", "oops": 2}', "{bad"])
def test_bad_manifest_rows(tmp_path, row):
    (tmp_path / "m.jsonl").write_text(row + "\n")
    with pytest.raises(ConfigurationError):
        load_manifest(tmp_path / "m.jsonl")


def test_results_round_trip(tmp_path):
    res = [
        run_episode(Episode(MICRO_START, "bed", world=micro(), episode_id="a")),
        run_episode(Episode(MICRO_START, "sofa", world=micro(), episode_id="b")),
    ]
    write_results(res, tmp_path / "r.jsonl")
    back = read_results(tmp_path / "r.jsonl")
    assert [b.to_dict() for b in back] == [r.to_dict() for r in res]
    assert math.isinf(back[1].shortest_path_length)


def test_suite_start_distance_filter():
    suite = make_suite(range(4), world_params=dict(width=48, height=48), min_start_distance=2.5)
    assert suite
    for ep in suite:
        d, _ = shortest_path_to_goal(ep.world, ep.start_pose, ep.goal)
        assert d >= 2.5


def test_worker_count_does_not_change_results():
    suite = make_suite(range(4), world_params=dict(width=48, height=48), max_steps=120)
    cfg = NavConfig()
    serial = [r.to_dict() for r in run_suite(suite, cfg, workers=1)]
    parallel = [r.to_dict() for r in run_suite(suite, cfg, workers=2)]
    assert serial == parallel


def test_spl_never_exceeds_success():
    suite = make_suite(range(5), world_params=dict(width=48, height=48), max_steps=150)
    for r in run_suite(suite):
        assert r.spl <= float(r.success)
        assert (r.failure_mode == "none") == r.success or r.excluded
