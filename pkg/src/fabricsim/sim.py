"""Discrete-event scenario engine.

Two fabrics are simulated under a shared fault/workload vocabulary:

* reconciled links ("bisync"): time advances in slots; every slot on every
  link resolves bilaterally, per-destination trees heal by local parent
  reselection, and requests hop along tree parents one slot at a time.
* fire-and-forget links ("conventional"): per-hop sampled delays and drops,
  acknowledgment-or-timeout at the sender, and a control plane whose view
  of link liveness lags reality by the reconvergence window (the sum of
  the four repair phases), so packets chase stale routes during repair.

Runs are fully deterministic for a given config and seed: all sampling
flows from per-link streams spawned from the master seed.
"""

from __future__ import annotations

import heapq
from bisect import bisect_right
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .config import ConfigError, FaultEvent, ScenarioConfig
from .graphs import FabricGraph
from .healing import TreeProtocol, build_rooted_tree
from .linkmodel import DelayModel, FlappingModel
from .metrics import FaultRecord, MetricsReport, PartitionRecord, RequestRecord


def clos_reconverge(fault: FaultEvent, phases: tuple[int, int, int, int]) -> int:
    """Reconvergence window of a global control-plane repair.

    The window is the sum of the four phases: loss detection, failure
    propagation, route recalculation, and forwarding-state installation.
    While it runs, traffic crossing the faulted element is dropped.
    """
    if len(phases) != 4 or any(p < 0 for p in phases):
        raise ValueError("expected four non-negative phase durations")
    return sum(phases)


def classify_fault(
    fault: FaultEvent, g: FabricGraph, app_visible: bool, ambiguous: bool = False
) -> str:
    """Fault class as the application experiences it.

    H: the surviving fabric is physically partitioned - no protocol can mask
    it. U: the application saw ambiguity about message fate (an unresolved
    send at timeout). S: transient, but visible because repair outran the
    application's patience. Repaired below the observation threshold is not
    a partition at all.
    """
    if ambiguous:
        return "U"
    alive = set(range(g.num_edges)) - set(fault.edges)
    if fault.kind == "cell-down":
        survivors = [v for v in range(g.num_vertices) if v != fault.cell]
        if survivors:
            comp = g.component_of(survivors[0], alive)
            if not set(survivors) <= comp:
                return "H"
    elif fault.kind != "link-flap-window" and not g.is_connected(alive):
        return "H"
    if app_visible:
        return "S"
    return "sub-threshold"


def run_scenario(cfg: ScenarioConfig) -> MetricsReport:
    """Simulate one scenario end to end; deterministic for (config, seed)."""
    if cfg.link_kind == "bisync":
        return _BisyncEngine(cfg).run()
    if cfg.workload["kind"] not in ("requests", "none"):
        raise ConfigError("workload.kind: conventional links support only 'requests' workloads")
    return _ConventionalEngine(cfg).run()


def replicated_register_workload(
    policy: str, cut_duration: int, cut_start: int = 200, seed: int = 7
) -> tuple[int, int]:
    """Two-replica register demo on a single reconciled link.

    A hard cut of the given duration separates the replicas. Returns the
    total unavailability and the maximum data staleness, in ticks: under CP
    the cut blocks writes for at least its duration while reads stay exact;
    under AP both sides keep answering and staleness grows with the cut.
    With cut_duration=0 no fault is scheduled at all.
    """
    from .config import parse_config

    schedule = []
    if cut_duration > 0:
        schedule.append(
            {"kind": "hard-cut", "edges": [[0, 1]], "start": cut_start, "duration": cut_duration}
        )
    cfg = parse_config(
        {
            "topology": {"family": "chain", "cells": 2},
            "links": {"kind": "bisync"},
            "faults": {"schedule": schedule},
            "workload": {"kind": "register", "replicas": [0, 1], "policy": policy},
            "run": {"seed": seed, "duration": cut_start + cut_duration + 400},
        },
        name=f"register-{policy.lower()}",
    )
    report = run_scenario(cfg)
    return report.register["unavailability_total"], report.register["max_staleness"]


@dataclass
class _Message:
    """Internal fabric message advancing one tree hop per slot."""

    dst: int
    position: int
    kind: str  # request | replicate | ack
    rid: int | None = None
    payload: int = 0


@dataclass
class _FaultState:
    event: FaultEvent
    disconnects: bool
    damaged_roots: set[int] = field(default_factory=set)
    healed_tick: int | None = None
    record: FaultRecord | None = None
    partition: PartitionRecord | None = None


class _BisyncEngine:
    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.g = cfg.graph
        g = self.g
        self.alive: set[int] = set(range(g.num_edges))
        self.dead_ref = [0] * g.num_edges
        self.dead_cells: set[int] = set()

        master = np.random.SeedSequence(cfg.seed)
        _, links_ss = master.spawn(2)
        self.link_rng = [
            np.random.Generator(np.random.PCG64(ss)) for ss in links_ss.spawn(g.num_edges)
        ]
        self.flap: dict[int, FlappingModel] = {}
        if cfg.flapping is not None:
            for eid in range(g.num_edges):
                self.flap[eid] = FlappingModel(**cfg.flapping)

        self.trees: dict[int, TreeProtocol] = {}
        self.report = MetricsReport(
            scenario=cfg.echo, slot_trace=[] if cfg.trace else None
        )
        self.fault_states: dict[int, _FaultState] = {}
        self.active_faults: list[int] = []
        self.messages: list[_Message] = []
        self._spawned: list[_Message] = []
        self.requests: dict[int, RequestRecord] = {}
        self.crossed: dict[int, int | None] = {}  # rid -> attributed fault id
        self._next_rid = 0
        self._next_pid = 0
        self._issued = 0
        self.register: dict | None = None

        wl = cfg.workload
        if wl["kind"] == "requests":
            self._sources = (
                [v for v in range(g.num_vertices) if v != wl["destination"]]
                if wl["sources"] == "all"
                else [v for v in wl["sources"] if v != wl["destination"]]
            )
            self._src_cursor = 0
            self._tree(wl["destination"])
        elif wl["kind"] == "attempts":
            self._attempt_path = self._shortest_path(wl["src"], wl["dst"])
            self._alt_path = None
            if wl["use_detour"]:
                detour = cfg.echo["topology"].get("detour")
                if detour is None:
                    raise ConfigError("workload.use_detour: requires topology.detour")
                u, v, w = detour
                if [wl["src"], wl["dst"]] not in ([u, v], [v, u]):
                    raise ConfigError("workload.use_detour: detour must parallel src-dst")
                self._attempt_path = [wl["src"], wl["dst"]]
                self._alt_path = [wl["src"], w, wl["dst"]]
            self._attempts: list[dict] = []
        elif wl["kind"] == "register":
            ra, rb = wl["replicas"]
            self._tree(ra)
            self._tree(rb)
            d = self._hop_distance(ra, rb)
            self.register = {
                "policy": wl["policy"],
                "commit_sla": 2 * d + 2,
                "ra": ra,
                "rb": rb,
                "ra_committed": -1,
                "rb_applied": -1,
                "pending_writes": deque(),
                "writes": 0,
                "reads": 0,
                "max_staleness": 0,
                "blocked_since": None,
                "stale_since": None,
            }

    # -- topology helpers --------------------------------------------------

    def _tree(self, root: int) -> TreeProtocol:
        proto = self.trees.get(root)
        if proto is None:
            proto = TreeProtocol(self.g, build_rooted_tree(self.g, root, self.alive))
            self.trees[root] = proto
        return proto

    def _shortest_path(self, src: int, dst: int) -> list[int]:
        return build_rooted_tree(self.g, dst).path_to_root(src)

    def _hop_distance(self, a: int, b: int) -> int:
        return build_rooted_tree(self.g, b).depth[a]

    # -- fault plumbing ------------------------------------------------------

    def _apply_fault_transitions(self, tick: int) -> None:
        for fault in self.cfg.faults:
            if fault.start == tick:
                self._start_fault(fault)
            if fault.end == tick:
                self._end_fault(fault)

    def _start_fault(self, fault: FaultEvent) -> None:
        if fault.kind == "link-flap-window":
            self.flap[fault.edges[0]] = FlappingModel(**fault.flap)
        else:
            for eid in fault.edges:
                self.dead_ref[eid] += 1
                self.alive.discard(eid)
            if fault.kind == "cell-down":
                self.dead_cells.add(fault.cell)
        state = _FaultState(fault, disconnects=classify_fault(fault, self.g, False) == "H")
        if fault.kind != "link-flap-window":
            for root, proto in self.trees.items():
                before = set(proto.detached)
                proto.on_edges_down(set(fault.edges))
                if proto.detached - before:
                    state.damaged_roots.add(root)
        state.record = FaultRecord(
            fid=fault.fid,
            kind=fault.kind,
            target=fault.target_label(self.g),
            start=fault.start,
            duration=fault.duration,
        )
        if not state.damaged_roots and fault.kind != "link-flap-window":
            state.record.heal_slots = 0  # no tree used the failed links
        self.report.faults.append(state.record)
        self.fault_states[fault.fid] = state
        self.active_faults.append(fault.fid)

    def _end_fault(self, fault: FaultEvent) -> None:
        if fault.kind == "link-flap-window":
            del self.flap[fault.edges[0]]
        else:
            for eid in fault.edges:
                self.dead_ref[eid] -= 1
                if self.dead_ref[eid] == 0:
                    self.alive.add(eid)
            if fault.kind == "cell-down":
                self.dead_cells.discard(fault.cell)
            for proto in self.trees.values():
                proto.on_edges_revived()
        self.active_faults.remove(fault.fid)

    def _attributed_fault(self, tick: int) -> int | None:
        if self.active_faults:
            return self.active_faults[-1]
        # a recently ended fault can still explain a wait within the window
        recent = None
        for fid, st in self.fault_states.items():
            end = st.event.end
            if st.event.start <= tick and (end is None or end > tick - self.cfg.app_timeout):
                recent = fid
        return recent

    # -- slot work -----------------------------------------------------------

    def _step_flap_models(self) -> None:
        for eid in sorted(self.flap):
            self.flap[eid].step(self.link_rng[eid])

    def _heal_round(self, tick: int) -> None:
        for proto in self.trees.values():
            if not proto.settled:
                proto.heal_round(self.alive, self.dead_cells)
        for st in self.fault_states.values():
            if st.damaged_roots and st.healed_tick is None:
                if all(self.trees[r].healed(self.dead_cells) for r in st.damaged_roots):
                    st.healed_tick = tick
                    st.record.heal_slots = (tick - st.event.start) // self.cfg.delta + 1

    def _slot_commit(self, eid: int) -> bool:
        """One message's reconciliation on a link: True when it commits."""
        if eid in self.flap:
            model = self.flap[eid]
            p = model.p_bad if model.bad else model.p_good
        else:
            p = self.cfg.abort_prob
        if p > 0.0:
            return not self.link_rng[eid].random() < p
        return True

    def _advance_message(self, msg: _Message, tick: int) -> bool:
        """Move a message one hop toward its destination; True on arrival."""
        if msg.position == msg.dst:
            return True
        if msg.position in self.dead_cells or msg.dst in self.dead_cells:
            return False
        hop = self.trees[msg.dst].route_next(msg.position)
        if hop is None:
            return False
        nxt, eid = hop
        if eid not in self.alive:
            self._trace(tick, eid, "link-failed", msg)
            return False
        if not self._slot_commit(eid):
            self._trace(tick, eid, "aborted", msg)
            return False
        self._trace(tick, eid, "committed", msg)
        msg.position = nxt
        return msg.position == msg.dst

    def _trace(self, tick: int, eid: int, outcome: str, msg) -> None:
        rows = self.report.slot_trace
        if rows is not None:
            payload = msg.rid if isinstance(msg, _Message) and msg.rid is not None else (
                f"{msg.kind}:{msg.payload}" if isinstance(msg, _Message) else msg
            )
            rows.append((tick, eid, tick // self.cfg.delta, outcome, payload))

    # -- workloads -------------------------------------------------------------

    def _issue_requests(self, tick: int) -> None:
        wl = self.cfg.workload
        if tick % wl["period"] != 0 or not self._sources:
            return
        if wl["count"] is not None and self._issued >= wl["count"]:
            return
        src = self._sources[self._src_cursor % len(self._sources)]
        self._src_cursor += 1
        self._issued += 1
        rid = self._next_rid
        self._next_rid += 1
        rec = RequestRecord(rid=rid, src=src, dst=wl["destination"], issued=tick)
        self.requests[rid] = rec
        self.report.requests.append(rec)
        self.messages.append(_Message(dst=wl["destination"], position=src, kind="request", rid=rid))

    def _move_messages(self, tick: int) -> None:
        remaining = []
        for msg in self.messages:
            if self._advance_message(msg, tick):
                self._on_arrival(msg, tick)
            else:
                remaining.append(msg)
        self.messages = remaining + self._spawned
        self._spawned = []

    def _on_arrival(self, msg: _Message, tick: int) -> None:
        if msg.kind == "request":
            rec = self.requests[msg.rid]
            rec.delivered = tick
            rec.latency = tick - rec.issued + self.cfg.delta
            rec.outcome = "delivered"
            self._resolve_crossing(msg.rid, tick)
        elif msg.kind == "replicate":
            reg = self.register
            reg["rb_applied"] = max(reg["rb_applied"], msg.payload)
            if reg["policy"] == "CP":
                self._spawned.append(
                    _Message(dst=reg["ra"], position=reg["rb"], kind="ack", payload=msg.payload)
                )
        elif msg.kind == "ack":
            reg = self.register
            reg["ra_committed"] = max(reg["ra_committed"], msg.payload)
            while reg["pending_writes"] and reg["pending_writes"][0] <= reg["ra_committed"]:
                reg["pending_writes"].popleft()

    def _run_register(self, tick: int) -> None:
        wl = self.cfg.workload
        reg = self.register
        if tick % wl["write_period"] == 0:
            reg["writes"] += 1
            if reg["policy"] == "AP":
                reg["ra_committed"] = tick  # commits locally, replicates async
            else:
                reg["pending_writes"].append(tick)  # commits only on replica ack
            self.messages.append(
                _Message(dst=reg["rb"], position=reg["ra"], kind="replicate", payload=tick)
            )
        if tick % wl["read_period"] == 0:
            reg["reads"] += 1
            lag = max(0, reg["ra_committed"] - reg["rb_applied"]) if reg["ra_committed"] >= 0 else 0
            reg["max_staleness"] = max(reg["max_staleness"], lag)
            self._track_streak(reg, "stale_since", lag > reg["commit_sla"], tick, tick - lag)
        blocked = bool(reg["pending_writes"]) and (tick - reg["pending_writes"][0]) > reg["commit_sla"]
        origin = reg["pending_writes"][0] if reg["pending_writes"] else tick
        self._track_streak(reg, "blocked_since", blocked, tick, origin)

    def _track_streak(self, reg: dict, key: str, condition: bool, tick: int, origin: int) -> None:
        """Open/close an interval; origin backdates it to the first unserved tick."""
        sink = self.report.inconsistency if key == "stale_since" else self.report.unavailability
        if condition and reg[key] is None:
            reg[key] = max(0, origin)
        elif not condition and reg[key] is not None:
            sink.append((reg[key], tick))
            reg[key] = None
        if reg[key] is not None and tick - reg[key] == self.cfg.app_timeout:
            self._emit_partition(tick, self._attributed_fault(tick))

    def _run_attempts(self, tick: int) -> None:
        wl = self.cfg.workload
        if tick % wl["period"] == 0 and (wl["count"] is None or self._issued < wl["count"]):
            self._issued += 1
            rid = self._next_rid
            self._next_rid += 1
            rec = RequestRecord(rid=rid, src=wl["src"], dst=wl["dst"], issued=tick)
            self.requests[rid] = rec
            self.report.requests.append(rec)
            self._attempts.append(
                {"rid": rid, "path": self._attempt_path, "idx": 0, "attempt": 1, "on_alt": False}
            )
        survivors = []
        for att in self._attempts:
            rec = self.requests[att["rid"]]
            path = att["path"]
            u, v = path[att["idx"]], path[att["idx"] + 1]
            eid = self.g.edge_id(u, v)
            hop_ok = eid in self.alive and self._slot_commit(eid)
            self._trace(tick, eid, "committed" if hop_ok else ("aborted" if eid in self.alive else "link-failed"), att["rid"])
            if hop_ok:
                att["idx"] += 1
                if att["idx"] == len(path) - 1:
                    rec.delivered = tick
                    rec.latency = tick - rec.issued + self.cfg.delta
                    rec.outcome = "delivered"
                    rec.attempts = att["attempt"]
                else:
                    survivors.append(att)
                continue
            # hop failed: try the parallel detour once, else burn an attempt
            if self._alt_path is not None and not att["on_alt"]:
                att.update(path=self._alt_path, idx=0, on_alt=True)
                survivors.append(att)
            elif att["attempt"] <= wl["retries"]:
                att.update(path=self._attempt_path, idx=0, attempt=att["attempt"] + 1, on_alt=False)
                survivors.append(att)
            else:
                rec.outcome = "failed"
                rec.attempts = att["attempt"]
        self._attempts = survivors

    # -- application-visibility bookkeeping -----------------------------------

    def _emit_partition(self, tick: int, fault_id: int | None) -> None:
        if fault_id is not None:
            st = self.fault_states[fault_id]
            if st.partition is not None:
                return
            klass = "H" if st.disconnects else "S"
            st.record.classification = klass
        else:
            klass = "S"
        rec = PartitionRecord(
            pid=self._next_pid, klass=klass, first_observed=tick, duration=0, fault_id=fault_id
        )
        self._next_pid += 1
        self.report.partitions.append(rec)
        if fault_id is not None:
            self.fault_states[fault_id].partition = rec

    def _check_app_threshold(self, tick: int) -> None:
        for msg in self.messages:
            if msg.kind != "request":
                continue
            rec = self.requests[msg.rid]
            if tick - rec.issued == self.cfg.app_timeout:
                fid = self._attributed_fault(tick)
                self._emit_partition(tick, fid)
                self.crossed[msg.rid] = fid

    def _resolve_crossing(self, rid: int, tick: int) -> None:
        fid = self.crossed.pop(rid, -2)
        if fid == -2 or fid is None:
            return
        rec = self.fault_states[fid].partition
        if rec is not None:
            rec.duration = max(rec.duration, tick - rec.first_observed)

    # -- main loop ----------------------------------------------------------------

    def run(self) -> MetricsReport:
        cfg = self.cfg
        wl = cfg.workload["kind"]
        for tick in range(cfg.duration):
            self._apply_fault_transitions(tick)
            if tick % cfg.delta == 0:
                self._step_flap_models()
                self._heal_round(tick)
                if wl == "requests":
                    self._issue_requests(tick)
                    self._move_messages(tick)
                elif wl == "attempts":
                    self._run_attempts(tick)
                elif wl == "register":
                    self._run_register(tick)
                    self._move_messages(tick)
            self._check_app_threshold(tick)

        end = cfg.duration
        for msg in self.messages:
            if msg.kind == "request":
                rec = self.requests[msg.rid]
                rec.outcome = "failed"
                self._resolve_crossing(msg.rid, end)
        if self.register is not None:
            reg = self.register
            for key in ("blocked_since", "stale_since"):
                if reg[key] is not None:
                    sink = self.report.inconsistency if key == "stale_since" else self.report.unavailability
                    sink.append((reg[key], end))
                    reg[key] = None
            self.report.register = {
                "policy": reg["policy"],
                "commit_sla": reg["commit_sla"],
                "writes": reg["writes"],
                "reads": reg["reads"],
                "max_staleness": reg["max_staleness"],
                "unavailability_total": sum(b - a for a, b in self.report.unavailability),
                "inconsistency_total": sum(b - a for a, b in self.report.inconsistency),
            }
        return self.report


class _ConventionalEngine:
    """Event-heap simulation of a fire-and-forget fabric."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.g = cfg.graph
        master = np.random.SeedSequence(cfg.seed)
        _, links_ss = master.spawn(2)
        self.link_rng = [
            np.random.Generator(np.random.PCG64(ss)) for ss in links_ss.spawn(self.g.num_edges)
        ]
        self.delay = DelayModel(loss_prob=cfg.loss_prob, **cfg.delay)
        self.window = sum(cfg.clos_phases)
        self._transitions = self._edge_transitions()
        self._flap_state: dict[int, tuple[FlappingModel, int]] = {}
        # fire-and-forget links have no slot outcomes to trace
        self.report = MetricsReport(
            scenario=cfg.echo, slot_trace=[] if cfg.trace else None
        )
        self.fault_states: dict[int, _FaultState] = {}
        for fault in cfg.faults:
            st = _FaultState(fault, disconnects=classify_fault(fault, self.g, False) == "H")
            st.record = FaultRecord(
                fid=fault.fid,
                kind=fault.kind,
                target=fault.target_label(self.g),
                start=fault.start,
                duration=fault.duration,
            )
            self.report.faults.append(st.record)
            self.fault_states[fault.fid] = st
        self.requests: dict[int, RequestRecord] = {}
        self.ambiguous: set[int] = set()
        self._pending: dict[int, dict] = {}
        self._next_pid = 0
        self.heap: list[tuple[int, int, str, tuple]] = []
        self._seq = 0

    def _edge_transitions(self) -> list[tuple[list[int], list[bool]]]:
        per_edge: list[list[tuple[int, int]]] = [[] for _ in range(self.g.num_edges)]
        for fault in self.cfg.faults:
            if fault.kind == "link-flap-window":
                continue
            for eid in fault.edges:
                per_edge[eid].append((fault.start, +1))
                if fault.end is not None:
                    per_edge[eid].append((fault.end, -1))
        out = []
        for entries in per_edge:
            entries.sort()
            times, states = [0], [True]
            ref = 0
            for t, d in entries:
                ref += d
                alive = ref == 0
                if t == times[-1]:
                    states[-1] = alive
                else:
                    times.append(t)
                    states.append(alive)
            out.append((times, states))
        return out

    def _real_alive(self, eid: int, t: int) -> bool:
        times, states = self._transitions[eid]
        return states[max(0, bisect_right(times, t) - 1)]  # t<0 reads the initial state

    def _believed_alive(self, eid: int, t: int) -> bool:
        """The control plane's view lags reality by the reconvergence window."""
        return self._real_alive(eid, t - self.window)

    def _flap_dropped(self, eid: int, t: int, fault: FaultEvent) -> bool:
        model, last = self._flap_state.get(eid, (None, fault.start))
        if model is None:
            model = FlappingModel(**fault.flap)
        rng = self.link_rng[eid]
        while last < t:
            model.step(rng)
            last += 1
        self._flap_state[eid] = (model, last)
        p = model.p_bad if model.bad else model.p_good
        return p > 0.0 and rng.random() < p

    def _route(self, src: int, dst: int, t: int) -> list[int] | None:
        """BFS shortest path on the control plane's (lagged) view of the fabric."""
        parent = {src: -1}
        queue = deque([src])
        while queue:
            x = queue.popleft()
            if x == dst:
                break
            for y, eid in self.g.adjacency[x]:
                if y not in parent and self._believed_alive(eid, t):
                    parent[y] = x
                    queue.append(y)
        if dst not in parent:
            return None
        path = [dst]
        while path[-1] != src:
            path.append(parent[path[-1]])
        path.reverse()
        return path

    def _push(self, t: int, kind: str, data: tuple) -> None:
        heapq.heappush(self.heap, (t, self._seq, kind, data))
        self._seq += 1

    def _repair_end(self, fault: FaultEvent) -> int:
        return (fault.end if fault.end is not None else self.cfg.duration) + self.window

    def _active_fault_for(self, path: list[int] | None, t0: int, t1: int) -> int | None:
        """A fault whose links lie on the path and whose fault-through-repair
        window overlaps [t0, t1]; with no path, any overlapping fault."""
        edges_on_path = None
        if path is not None:
            edges_on_path = {self.g.edge_id(path[i], path[i + 1]) for i in range(len(path) - 1)}
        for fid, st in self.fault_states.items():
            fault = st.event
            if edges_on_path is not None and not (edges_on_path & set(fault.edges)):
                continue
            if fault.start <= t1 and t0 <= self._repair_end(fault):
                return fid
        return None

    def _emit_partition(self, tick: int, fault_id: int | None, klass: str) -> None:
        if fault_id is not None:
            st = self.fault_states[fault_id]
            if st.partition is not None:
                st.partition.duration = max(st.partition.duration, tick - st.partition.first_observed)
                return
        rec = PartitionRecord(
            pid=self._next_pid, klass=klass, first_observed=tick, duration=0, fault_id=fault_id
        )
        self._next_pid += 1
        self.report.partitions.append(rec)
        if fault_id is not None:
            st = self.fault_states[fault_id]
            st.partition = rec
            st.record.classification = klass

    def _dispatch(self, rid: int, t: int, attempt: int) -> None:
        rec = self.requests[rid]
        rec.attempts = attempt
        path = self._route(rec.src, rec.dst, t)
        self._pending[rid] = {"path": path, "delivered_at": None, "ack_at": None, "dead": path is None}
        if path is not None:
            self._push(t, "hop", (rid, 0, t, attempt))
        self._push(t + self.cfg.timeout, "timeout", (rid, attempt))

    def _handle_hop(self, rid: int, idx: int, t: int, attempt: int) -> None:
        rec = self.requests[rid]
        state = self._pending.get(rid)
        if state is None or rec.outcome != "pending" or rec.attempts != attempt or state["dead"]:
            return
        path = state["path"]
        u, v = path[idx], path[idx + 1]
        eid = self.g.edge_id(u, v)
        if not self._real_alive(eid, t):
            state["dead"] = True  # silently dropped at the dead element
            return
        for fault in self.cfg.faults:
            if fault.kind == "link-flap-window" and eid in fault.edges:
                if fault.start <= t < (fault.end if fault.end is not None else self.cfg.duration):
                    if self._flap_dropped(eid, t, fault):
                        state["dead"] = True
                        return
        delay = self.delay.sample_delay(self.link_rng[eid])
        if delay is None:
            state["dead"] = True
            return
        arrive = t + delay
        if idx + 1 == len(path) - 1:
            self._push(arrive, "delivered", (rid, attempt, arrive))
        else:
            self._push(arrive, "hop", (rid, idx + 1, arrive, attempt))

    def _handle_delivered(self, rid: int, attempt: int, t: int) -> None:
        rec = self.requests[rid]
        if rec.delivered is None:
            # counts even after the sender gave up: the slow copy did arrive
            rec.delivered = t
            rec.latency = t - rec.issued
        state = self._pending.get(rid)
        if state is None or rec.outcome != "pending" or rec.attempts != attempt:
            return
        state["delivered_at"] = t
        # the acknowledgment rides the reverse path with its own sampled delays
        path = state["path"]
        ack_t = t
        for i in range(len(path) - 1, 0, -1):
            eid = self.g.edge_id(path[i - 1], path[i])
            if not self._real_alive(eid, ack_t):
                return
            d = self.delay.sample_delay(self.link_rng[eid])
            if d is None:
                return
            ack_t += d
        state["ack_at"] = ack_t
        self._push(ack_t, "acked", (rid, attempt))

    def _handle_acked(self, rid: int, attempt: int) -> None:
        rec = self.requests[rid]
        if rec.outcome == "pending" and rec.attempts == attempt:
            rec.outcome = "delivered"
            self._pending.pop(rid, None)

    def _handle_timeout(self, rid: int, attempt: int, t: int) -> None:
        rec = self.requests[rid]
        state = self._pending.get(rid)
        if state is None or rec.outcome != "pending" or rec.attempts != attempt:
            return
        # unresolved send: the sender cannot distinguish slow from lost
        fid = self._active_fault_for(state["path"], rec.issued, t)
        if fid is None and rid not in self.ambiguous:
            self.ambiguous.add(rid)
            self._emit_partition(t, None, "U")
        if attempt <= self.cfg.workload.get("retries", 0):
            self._dispatch(rid, t, attempt + 1)
        else:
            rec.outcome = "failed"
            self._pending.pop(rid, None)

    def _handle_appcheck(self, rid: int, t: int) -> None:
        rec = self.requests[rid]
        if rec.delivered is not None and rec.delivered <= t:
            return
        state = self._pending.get(rid)
        path = state["path"] if state else None
        fid = self._active_fault_for(path, rec.issued, t)
        if fid is not None:
            st = self.fault_states[fid]
            self._emit_partition(t, fid, "H" if st.disconnects else "S")
        elif rid not in self.ambiguous:
            self._emit_partition(t, None, "S")

    def run(self) -> MetricsReport:
        cfg = self.cfg
        wl = cfg.workload
        if wl["kind"] == "requests":
            sources = (
                [v for v in range(self.g.num_vertices) if v != wl["destination"]]
                if wl["sources"] == "all"
                else [v for v in wl["sources"] if v != wl["destination"]]
            )
            rid = 0
            for i, tick in enumerate(range(0, cfg.duration, wl["period"])):
                if (wl["count"] is not None and i >= wl["count"]) or not sources:
                    break
                src = sources[i % len(sources)]
                rec = RequestRecord(rid=rid, src=src, dst=wl["destination"], issued=tick)
                self.requests[rid] = rec
                self.report.requests.append(rec)
                self._push(tick, "issue", (rid,))
                self._push(tick + cfg.app_timeout, "appcheck", (rid,))
                rid += 1

        while self.heap:
            t, _, kind, data = heapq.heappop(self.heap)
            if t >= cfg.duration:
                break
            if kind == "issue":
                self._dispatch(data[0], t, 1)
            elif kind == "hop":
                self._handle_hop(*data)
            elif kind == "delivered":
                self._handle_delivered(*data)
            elif kind == "acked":
                self._handle_acked(*data)
            elif kind == "timeout":
                self._handle_timeout(data[0], data[1], t)
            elif kind == "appcheck":
                self._handle_appcheck(data[0], t)
        return self.report
