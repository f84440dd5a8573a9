"""Global frontier management: merge, prune, select, stall handling, target
verification and emergency rotation.

One :meth:`FrontierManager.tick` runs per simulator step. The outcome of the
previous decision (distance to the selected frontier, reached viewpoints) is
evaluated at the start of the tick, then the frontier set is refreshed and a
new decision is emitted.
"""

from __future__ import annotations

import copy
import enum
import math
from dataclasses import dataclass, field

from .config import NavConfig
from .frontiers import Frontier, FrontierKind, FrontierProposal, frontier_mask, gain_at
from .geometry import CameraModel, Pose, wrap_angle
from .gridworld import OCCUPIED, BeliefGrid, Observation, world_to_cell
from .grounding import HypothesisTracker, Segmenter, promote_to_frontier
from .errors import InvalidInputError

INITIAL_D_PREV = 1e9


class DecisionKind(str, enum.Enum):
    GOTO = "goto"
    GOTO_TARGET = "goto_target"
    ROTATE_IN_PLACE = "rotate_in_place"
    STOP_SUCCESS = "stop_success"
    STOP_FAILURE = "stop_failure"
    CONTINUE = "continue"


@dataclass(frozen=True)
class Decision:
    kind: DecisionKind
    frontier_id: int | None = None
    target: tuple | None = None
    heading: float | None = None
    direction: int = 0  # +1 turn left, -1 turn right
    reason: str | None = None

    @property
    def is_stop(self) -> bool:
        return self.kind in (DecisionKind.STOP_SUCCESS, DecisionKind.STOP_FAILURE)


def _planar_dist(a, b) -> float:
    return math.hypot(a[0] - b[0], a[2] - b[2])


# -- pure steps -------------------------------------------------------------


def merge_update(active, proposals, tau_merge: float, next_id: int = 0, step: int = 0):
    """Fold fresh proposals into the active set.

    Pairs (proposal, active EXPLORATION frontier) within ``tau_merge`` are
    matched greedily, nearest pair first, each side at most once. A matched
    frontier takes the proposal's geometry and gain and its semantic
    probability returns to 0.5 until re-scored. Unmatched proposals become new
    frontiers. Returns ``(frontiers, next_id, ids)`` where ``ids[i]`` is the
    frontier now carrying proposal ``i``.
    """
    active = list(active)
    candidates = []
    for i, prop in enumerate(proposals):
        for j, fr in enumerate(active):
            if fr.kind is not FrontierKind.EXPLORATION:
                continue
            d = _planar_dist(prop.centroid_world, fr.position)
            if d <= tau_merge:
                candidates.append((d, i, fr.id, j))
    candidates.sort()
    matched_props: dict[int, int] = {}
    used = set()
    for _, i, fid, j in candidates:
        if i in matched_props or fid in used:
            continue
        matched_props[i] = j
        used.add(fid)
    ids = []
    out = list(active)
    for i, prop in enumerate(proposals):
        if i in matched_props:
            j = matched_props[i]
            old = active[j]
            out[j] = Frontier(
                id=old.id,
                kind=FrontierKind.EXPLORATION,
                pose=Pose(prop.centroid_world, old.pose.heading),
                gain_raw=prop.gain_raw,
                semantic_prob=0.5,
                pixel_centroid=prop.pixel_centroid,
                created_step=old.created_step,
                last_updated=step,
                member_cells=prop.member_cells,
            )
            ids.append(old.id)
        else:
            out.append(
                Frontier(
                    id=next_id,
                    kind=FrontierKind.EXPLORATION,
                    pose=Pose(prop.centroid_world, 0.0),
                    gain_raw=prop.gain_raw,
                    pixel_centroid=prop.pixel_centroid,
                    created_step=step,
                    last_updated=step,
                    member_cells=prop.member_cells,
                )
            )
            ids.append(next_id)
            next_id += 1
    return out, next_id, ids


def near_cleared(position, cleared, r_clear: float) -> bool:
    return any(_planar_dist(position, c) <= r_clear for c in cleared)


def _on_occupied(belief: BeliefGrid, position) -> bool:
    cell = world_to_cell(position[0], position[2], belief.resolution)
    h, w = belief.shape
    return 0 <= cell[0] < h and 0 <= cell[1] < w and belief.cells[cell] == OCCUPIED


def prune(active, cleared, r_clear: float, belief: BeliefGrid | None, g_min: float = 0.5, r_gain: float = 2.0):
    """Drop frontiers that are cleared, unsafe or out of gain.

    EXPLORATION frontiers are removed within ``r_clear`` of a cleared point,
    when their gain recomputed on ``belief`` is zero or below ``g_min``, or when
    none of their member cells borders unknown space any more. Every kind is
    removed when its position lies on a belief-OCCUPIED cell; otherwise VIEWPOINT
    frontiers leave only through verification or the stall rule. Returns
    ``(kept, removed)`` with ``removed`` a list of ``(frontier, reason)``.
    """
    kept, removed = [], []
    fmask = frontier_mask(belief) if belief is not None else None
    for fr in active:
        x, _, z = fr.position
        if belief is not None and _on_occupied(belief, fr.position):
            removed.append((fr, "occupied"))
            continue
        if fr.kind is not FrontierKind.EXPLORATION:
            kept.append(fr)
            continue
        if near_cleared(fr.position, cleared, r_clear):
            removed.append((fr, "cleared"))
            continue
        if belief is not None:
            gain = gain_at(belief, x, z, r_gain)
            if gain == 0.0:
                removed.append((fr, "gain_exhausted"))
                continue
            if fr.member_cells and not any(fmask[c] for c in fr.member_cells):
                removed.append((fr, "gain_exhausted"))
                continue
            if gain != fr.gain_raw:
                fr = _replace(fr, gain_raw=gain)
        if fr.gain_raw < g_min:
            removed.append((fr, "below_g_min"))
            continue
        kept.append(fr)
    return kept, removed


def _replace(fr: Frontier, **changes) -> Frontier:
    data = {f: getattr(fr, f) for f in fr.__dataclass_fields__}
    data.update(changes)
    return Frontier(**data)


def global_utility(fr: Frontier, p_r, r_near: float) -> float:
    return fr.gain / max(_planar_dist(p_r, fr.position), r_near)


def select_best(active, p_r, r_near: float = 0.2) -> Frontier | None:
    """Nearest priority frontier if any, else the argmax of gain over clamped
    distance; ties go to the lowest id."""
    active = list(active)
    if not active:
        return None
    priority = [f for f in active if f.priority]
    if priority:
        return min(priority, key=lambda f: (_planar_dist(p_r, f.position), f.id))
    return min(active, key=lambda f: (-global_utility(f, p_r, r_near), f.id))


def handle_progress(d: float, d_prev: float, stall: int, T_stall: int, epsilon_stall: float):
    """Stall counter update; returns ``(drop, stall, d_prev)``."""
    if d_prev - d >= epsilon_stall:
        stall = 0
    else:
        stall += 1
    drop = stall >= T_stall
    return drop, stall, d


# -- state machine -------------------------------------------------------------


@dataclass
class ManagerState:
    active: list = field(default_factory=list)
    cleared: list = field(default_factory=list)
    stall: int = 0
    d_prev: float = INITIAL_D_PREV
    has_target: bool = False
    x_star: tuple | None = None
    emergency_round: int = 0
    g_min_current: float = 0.5
    last_detection_step: int = -1
    hypotheses: HypothesisTracker = field(default_factory=HypothesisTracker)
    next_id: int = 0
    target_id: int | None = None
    in_emergency: bool = False
    pending_verify: Frontier | None = None
    has_target_ever: bool = False
    terminal: Decision | None = None

    @property
    def discard_blocklist(self):
        return self.hypotheses.blocklist

    def frontier(self, fid):
        for f in self.active:
            if f.id == fid:
                return f
        return None


@dataclass
class TickInputs:
    p_r: tuple
    heading: float
    step: int
    observation: Observation | None = None
    belief: BeliefGrid | None = None
    proposals: list | None = None
    scores: dict | None = None
    no_progress: bool = False


def _fmt(v: float) -> float:
    return float(v)


class FrontierManager:
    """Runs the target-management loop for one episode.

    ``scorer`` provides ``score_frontiers(obs, frontiers, goal)`` and
    ``verify_presence(obs, goal)``. When given, scoring runs synchronously on
    detection ticks; otherwise scores may be delivered through
    ``TickInputs.scores`` and are applied at the start of the next tick.
    """

    def __init__(
        self,
        config: NavConfig,
        goal: str,
        scorer=None,
        segmenter: Segmenter | None = None,
        camera: CameraModel | None = None,
        state: ManagerState | None = None,
    ):
        self.config = config
        self.goal = goal
        self.scorer = scorer
        self.segmenter = segmenter
        self.camera = camera
        if state is None:
            state = ManagerState(
                g_min_current=config.g_min,
                hypotheses=HypothesisTracker(config.dbscan_eps, config.discard_cooldown),
            )
        self.state = state
        self.record: dict = {}

    # -- helpers --------------------------------------------------------------

    def wants_detection(self) -> bool:
        """True when no frontier other than rotation frontiers is active."""
        s = self.state
        return s.in_emergency or not any(f.kind is not FrontierKind.ROTATION for f in s.active)

    def _remove(self, fid):
        self.state.active = [f for f in self.state.active if f.id != fid]

    def _aligned(self, heading, target_heading, tol) -> bool:
        return abs(wrap_angle(target_heading - heading)) < tol - 1e-9

    def _rotate(self, fid, heading, target_heading) -> Decision:
        err = wrap_angle(target_heading - heading)
        return Decision(DecisionKind.ROTATE_IN_PLACE, fid, heading=target_heading, direction=1 if err > 0 else -1)

    def _goto_target(self, p_r) -> Decision:
        s = self.state
        if _planar_dist(p_r, s.x_star) < self.config.r_goal:
            return self._terminate(Decision(DecisionKind.STOP_SUCCESS, target=s.x_star))
        return Decision(DecisionKind.GOTO_TARGET, target=s.x_star)

    def _terminate(self, decision: Decision) -> Decision:
        self.state.terminal = decision
        return decision

    def _linked_point(self, vp: Frontier):
        hyp = self.state.hypotheses.get(vp.linked_object)
        if hyp is not None:
            return hyp.centroid
        x, y, z = vp.position
        return (x + self.config.r_sep * math.sin(vp.pose.heading), y, z + self.config.r_sep * math.cos(vp.pose.heading))

    def _verify(self, vp: Frontier, inp: TickInputs):
        s, rec = self.state, self.record
        p = float(self.scorer.verify_presence(inp.observation, self.goal)) if self.scorer is not None else 0.0
        rec["presence"] = _fmt(p)
        rec["verified"] = vp.id
        s.pending_verify = None
        if p > self.config.p_presence:
            s.has_target = True
            s.has_target_ever = True
            s.x_star = tuple(self._linked_point(vp))
            return self._goto_target(inp.p_r)
        s.hypotheses.discard(vp.linked_object, inp.step)
        rec["discarded"] = vp.linked_object
        return None

    def _apply_scores(self, scores: dict, step: int):
        if not scores:
            return
        out = []
        for f in self.state.active:
            if f.id in scores and f.kind is FrontierKind.EXPLORATION:
                p = min(1.0, max(0.0, float(scores[f.id])))
                f = _replace(f, semantic_prob=p, last_updated=step)
            out.append(f)
        self.state.active = out

    def _evaluate_previous(self, inp: TickInputs):
        """Outcome of the last decision. Returns a decision to emit, or None."""
        s, cfg, rec = self.state, self.config, self.record
        if s.pending_verify is not None:
            vp = s.pending_verify
            if self._aligned(inp.heading, vp.pose.heading, cfg.turn_angle / 2 + 1e-6):
                return self._verify(vp, inp)
            return self._rotate(vp.id, inp.heading, vp.pose.heading)
        fr = s.frontier(s.target_id) if s.target_id is not None else None
        if fr is None:
            return None
        if fr.kind is FrontierKind.ROTATION:
            if self._aligned(inp.heading, fr.pose.heading, cfg.turn_angle):
                self._remove(fr.id)
                rec["rotation_cleared"] = fr.id
                s.target_id = None
            return None
        d = _planar_dist(inp.p_r, fr.position)
        d_eff = s.d_prev if inp.no_progress and s.d_prev < INITIAL_D_PREV else d
        rec["d"] = _fmt(d_eff)
        rec["d_prev"] = _fmt(s.d_prev) if s.d_prev < INITIAL_D_PREV else None
        drop, s.stall, s.d_prev = handle_progress(d_eff, s.d_prev, s.stall, cfg.T_stall, cfg.epsilon_stall)
        rec["progress_target"] = fr.id
        rec["stall_after"] = s.stall
        if drop:
            s.cleared.append(fr.position)
            rec.setdefault("cleared_added", []).append(list(map(_fmt, fr.position)))
            self._remove(fr.id)
            rec["drop"] = fr.id
            s.target_id = None
            return None
        if d < cfg.r_near:
            s.cleared.append(fr.position)
            rec.setdefault("cleared_added", []).append(list(map(_fmt, fr.position)))
            self._remove(fr.id)
            rec["reached"] = fr.id
            s.target_id = None
            if fr.kind is FrontierKind.VIEWPOINT:
                s.pending_verify = fr
                if self._aligned(inp.heading, fr.pose.heading, cfg.turn_angle / 2 + 1e-6):
                    return self._verify(fr, inp)
                return self._rotate(fr.id, inp.heading, fr.pose.heading)
        return None

    def _insert_viewpoints(self, inp: TickInputs):
        s = self.state
        linked = {f.linked_object for f in s.active if f.kind is FrontierKind.VIEWPOINT}
        if s.pending_verify is not None:
            linked.add(s.pending_verify.linked_object)
        for hyp in s.hypotheses.hypotheses:
            if hyp.id in linked:
                continue
            try:
                fr = promote_to_frontier(hyp, inp.p_r, self.config.r_sep, s.next_id, inp.step)
            except InvalidInputError:
                continue
            if inp.belief is not None and _on_occupied(inp.belief, fr.position):
                # the standoff pose is inside a known obstacle; retry from a later robot position
                continue
            if near_cleared(fr.position, s.cleared, self.config.r_clear):
                # a viewpoint here was already dropped as unreachable
                continue
            s.next_id += 1
            s.active.append(fr)
            self.record.setdefault("viewpoints_added", []).append(fr.id)

    def _emergency(self, inp: TickInputs) -> Decision:
        s, cfg = self.state, self.config
        if s.in_emergency:
            # the previous round's rotations are all cleared and nothing turned up
            s.emergency_round += 1
            if s.emergency_round >= cfg.n_emergency:
                return self._terminate(Decision(DecisionKind.STOP_FAILURE, reason="no_frontiers"))
            s.g_min_current *= 0.5
            self.record["g_min_relaxed"] = s.g_min_current
        s.in_emergency = True
        ids = []
        for offset in (math.pi / 2, -math.pi / 2, math.pi):
            fr = Frontier(
                id=s.next_id,
                kind=FrontierKind.ROTATION,
                pose=Pose(inp.p_r, inp.heading + offset),
                gain_raw=1.0,
                semantic_prob=1.0,
                created_step=inp.step,
                last_updated=inp.step,
            )
            s.next_id += 1
            s.active.append(fr)
            ids.append(fr.id)
        self.record["rotation_inserted"] = ids
        return self._select(inp)

    def _select(self, inp: TickInputs) -> Decision | None:
        s = self.state
        best = select_best(s.active, inp.p_r, self.config.r_near)
        if best is None:
            return None
        if best.kind is FrontierKind.ROTATION:
            rot = [f for f in s.active if f.kind is FrontierKind.ROTATION]
            best = min(rot, key=lambda f: (abs(wrap_angle(f.pose.heading - inp.heading)), f.id))
        elif s.in_emergency or any(f.kind is FrontierKind.ROTATION for f in s.active):
            s.active = [f for f in s.active if f.kind is not FrontierKind.ROTATION]
            s.in_emergency = False
            s.emergency_round = 0
        if best.id != s.target_id:
            s.target_id = best.id
            s.stall = 0
            s.d_prev = INITIAL_D_PREV
        if best.kind is FrontierKind.ROTATION:
            return self._rotate(best.id, inp.heading, best.pose.heading)
        return Decision(DecisionKind.GOTO, best.id, target=best.position, heading=best.pose.heading)

    # -- main loop ------------------------------------------------------------

    def tick(self, inp: TickInputs) -> Decision:
        s, cfg = self.state, self.config
        self.record = rec = {"step": inp.step}
        if s.terminal is not None:
            return self._finish(s.terminal, inp)
        if inp.scores:
            self._apply_scores(inp.scores, inp.step)
        if s.has_target:
            return self._finish(self._goto_target(inp.p_r), inp)
        decision = self._evaluate_previous(inp)
        if "cleared_added" in rec:
            # a point cleared this tick also retires any viewpoint standing next to it
            s.active = [
                f for f in s.active
                if f.kind is FrontierKind.ROTATION or not near_cleared(f.position, s.cleared, cfg.r_clear)
            ]
        if decision is not None:
            return self._finish(decision, inp)

        if inp.proposals is not None:
            s.active, s.next_id, ids = merge_update(s.active, inp.proposals, cfg.tau_merge, s.next_id, inp.step)
            s.last_detection_step = inp.step
            rec["detection"] = len(inp.proposals)
            if self.scorer is not None and ids:
                wanted = set(ids)
                frontiers = [f for f in s.active if f.id in wanted]
                self._apply_scores(self.scorer.score_frontiers(inp.observation, frontiers, self.goal), inp.step)
        if self.segmenter is not None and inp.observation is not None and self.camera is not None:
            # grounding is cheap next to a scorer query, so it runs on every tick
            s.hypotheses.update(inp.observation, self.goal, self.segmenter, self.camera, inp.step)
        s.active, removed = prune(s.active, s.cleared, cfg.r_clear, inp.belief, s.g_min_current, cfg.r_gain)
        for fr, reason in removed:
            if fr.id == s.target_id:
                s.target_id = None
        if removed:
            rec["pruned"] = [[fr.id, reason] for fr, reason in removed]
        self._insert_viewpoints(inp)

        decision = self._select(inp)
        if decision is None:
            decision = self._emergency(inp)
        return self._finish(decision, inp)

    def _finish(self, decision: Decision, inp: TickInputs) -> Decision:
        s, rec = self.state, self.record
        rec["decision"] = decision.kind.value
        if decision.reason:
            rec["reason"] = decision.reason
        rec["frontier_id"] = decision.frontier_id
        rec["p_r"] = [_fmt(inp.p_r[0]), _fmt(inp.p_r[2])]
        rec["heading"] = _fmt(inp.heading)
        rec["stall"] = s.stall
        rec["has_target"] = s.has_target
        rec["x_star"] = [_fmt(s.x_star[0]), _fmt(s.x_star[2])] if s.x_star is not None else None
        rec["g_min"] = s.g_min_current
        rec["emergency_round"] = s.emergency_round
        if inp.no_progress:
            rec["no_progress"] = True
        rec["active"] = [
            [f.id, f.kind.value[0], _fmt(f.position[0]), _fmt(f.position[2]), _fmt(f.gain)]
            for f in sorted(s.active, key=lambda f: f.id)
        ]
        return decision


def tick(state: ManagerState, inputs: TickInputs, config: NavConfig, goal: str, scorer=None, segmenter=None, camera=None):
    """Functional form of :meth:`FrontierManager.tick`: returns ``(new_state, decision, record)``
    and leaves ``state`` untouched."""
    mgr = FrontierManager(config, goal, scorer, segmenter, camera, state=copy.deepcopy(state))
    decision = mgr.tick(inputs)
    return mgr.state, decision, mgr.record
