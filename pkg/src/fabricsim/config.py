"""Scenario configuration: schema, validation, defaults, round-trip.

Configs are YAML files with nested sections (topology, links, faults,
workload, thresholds, clos, run). Validation errors name the offending
field by its dotted path. `ScenarioConfig.to_dict` returns the fully
defaulted form, so a run's report header echoes every parameter in effect.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import yaml

from .graphs import (
    ClosLayout,
    FabricGraph,
    add_triangle_detour,
    build_chain,
    build_clos,
    build_complete,
    build_grid,
    build_octavalent_mesh,
    from_edge_list_text,
)


class ConfigError(ValueError):
    """Invalid scenario configuration; message names the offending field."""


@dataclass(frozen=True)
class FaultEvent:
    """One scheduled fault: which links die, when, and for how long."""

    fid: int
    kind: str  # link-down | link-flap-window | cell-down | hard-cut
    start: int
    duration: int | None  # None: permanent
    edges: tuple[int, ...]
    cell: int | None = None
    flap: dict | None = None

    @property
    def end(self) -> int | None:
        return None if self.duration is None else self.start + self.duration

    def target_label(self, g: FabricGraph) -> str:
        if self.kind == "cell-down":
            return f"cell {self.cell}"
        if len(self.edges) == 1:
            u, v = g.edges[self.edges[0]]
            return f"link ({u},{v})"
        return f"cut of {len(self.edges)} links"


def _expect_map(value, path: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected a mapping")
    return value


def _get_int(section: dict, key: str, path: str, default=None, minimum=None):
    if key not in section or section[key] is None:
        if default is ...:
            raise ConfigError(f"{path}.{key}: required")
        return default
    v = section[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}.{key}: expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{path}.{key}: must be >= {minimum}, got {v}")
    return v


def _get_float(section: dict, key: str, path: str, default=None, lo=0.0, hi=1.0):
    if key not in section or section[key] is None:
        if default is ...:
            raise ConfigError(f"{path}.{key}: required")
        return default
    v = section[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {v!r}")
    v = float(v)
    if lo is not None and not (lo <= v <= hi):
        raise ConfigError(f"{path}.{key}: must lie in [{lo}, {hi}], got {v}")
    return v


def _get_choice(section: dict, key: str, path: str, choices, default=None):
    v = section.get(key, default)
    if v is None and default is None:
        raise ConfigError(f"{path}.{key}: required, one of {sorted(choices)}")
    if v not in choices:
        raise ConfigError(f"{path}.{key}: expected one of {sorted(choices)}, got {v!r}")
    return v


def _build_topology(section: dict) -> tuple[FabricGraph, ClosLayout | None, dict]:
    family = _get_choice(
        section, "family", "topology", {"grid", "mesh", "chain", "clos", "complete", "file"}
    )
    layout = None
    echo: dict = {"family": family}
    if family == "grid":
        m = _get_int(section, "rows", "topology", ..., minimum=1)
        n = _get_int(section, "cols", "topology", ..., minimum=1)
        g = build_grid(m, n)
        echo.update(rows=m, cols=n)
    elif family == "mesh":
        m = _get_int(section, "rows", "topology", ..., minimum=2)
        n = _get_int(section, "cols", "topology", ..., minimum=2)
        g = build_octavalent_mesh(m, n)
        echo.update(rows=m, cols=n)
    elif family == "chain":
        n = _get_int(section, "cells", "topology", ..., minimum=2)
        g = build_chain(n)
        echo.update(cells=n)
    elif family == "complete":
        n = _get_int(section, "cells", "topology", ..., minimum=2)
        g = build_complete(n)
        echo.update(cells=n)
    elif family == "clos":
        racks = _get_int(section, "racks", "topology", ..., minimum=1)
        leaves = _get_int(section, "leaves", "topology", ..., minimum=1)
        spines = _get_int(section, "spines", "topology", ..., minimum=1)
        hpr = _get_int(section, "hosts_per_rack", "topology", ..., minimum=1)
        g, layout = build_clos(racks, leaves, spines, hpr)
        echo.update(racks=racks, leaves=leaves, spines=spines, hosts_per_rack=hpr)
    else:
        path = section.get("path")
        if not path:
            raise ConfigError("topology.path: required for family 'file'")
        try:
            g = from_edge_list_text(Path(path).read_text(), name=Path(path).stem)
        except OSError as exc:
            raise ConfigError(f"topology.path: cannot read {path}: {exc}") from None
        echo.update(path=str(path))
    detour = section.get("detour")
    if detour is not None:
        if not (isinstance(detour, list) and len(detour) == 3):
            raise ConfigError("topology.detour: expected [u, v, w]")
        g = add_triangle_detour(g, *detour)
        echo.update(detour=list(detour))
    return g, layout, echo


def _edge_ref(g: FabricGraph, ref, path: str) -> int:
    if not (isinstance(ref, list) and len(ref) == 2 and all(isinstance(x, int) for x in ref)):
        raise ConfigError(f"{path}: expected an edge as [u, v]")
    u, v = ref
    if not g.has_edge(u, v):
        raise ConfigError(f"{path}: no link between cells {u} and {v}")
    return g.edge_id(u, v)


def _parse_faults(section: dict, g: FabricGraph) -> tuple[list[FaultEvent], list[dict]]:
    schedule = section.get("schedule", [])
    if schedule is None:
        schedule = []
    if not isinstance(schedule, list):
        raise ConfigError("faults.schedule: expected a list")
    events = []
    echo = []
    for i, entry in enumerate(schedule):
        path = f"faults.schedule[{i}]"
        entry = _expect_map(entry, path)
        kind = _get_choice(
            entry, "kind", path, {"link-down", "link-flap-window", "cell-down", "hard-cut"}
        )
        start = _get_int(entry, "start", path, ..., minimum=0)
        duration = None
        if entry.get("duration") is not None:
            duration = _get_int(entry, "duration", path, ..., minimum=1)
        cell = None
        flap = None
        if kind == "cell-down":
            cell = _get_int(entry, "cell", path, ..., minimum=0)
            if cell >= g.num_vertices:
                raise ConfigError(f"{path}.cell: cell {cell} does not exist")
            eids = tuple(eid for _, eid in g.adjacency[cell])
        elif kind == "hard-cut":
            refs = entry.get("edges")
            if not isinstance(refs, list) or not refs:
                raise ConfigError(f"{path}.edges: non-empty list of [u, v] pairs required")
            eids = tuple(_edge_ref(g, r, f"{path}.edges[{j}]") for j, r in enumerate(refs))
        else:
            eids = (_edge_ref(g, entry.get("edge"), f"{path}.edge"),)
            if kind == "link-flap-window":
                fsec = _expect_map(entry.get("flap"), f"{path}.flap")
                flap = {
                    "to_bad": _get_float(fsec, "to_bad", f"{path}.flap", ...),
                    "to_good": _get_float(fsec, "to_good", f"{path}.flap", ...),
                    "p_good": _get_float(fsec, "p_good", f"{path}.flap", ...),
                    "p_bad": _get_float(fsec, "p_bad", f"{path}.flap", ...),
                }
        events.append(FaultEvent(i, kind, start, duration, eids, cell, flap))
        e: dict = {"kind": kind, "start": start, "duration": duration}
        if cell is not None:
            e["cell"] = cell
        elif kind == "hard-cut":
            e["edges"] = [list(g.edges[eid]) for eid in eids]
        else:
            e["edge"] = list(g.edges[eids[0]])
        if flap is not None:
            e["flap"] = dict(flap)
        echo.append(e)
    return events, echo


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    graph: FabricGraph
    layout: ClosLayout | None
    link_kind: str
    delta: int
    abort_prob: float
    flapping: dict | None
    delay: dict
    loss_prob: float
    timeout: int
    faults: tuple[FaultEvent, ...]
    clos_phases: tuple[int, int, int, int]
    workload: dict
    app_timeout: int
    seed: int
    duration: int
    trace: bool
    echo: dict  # fully defaulted config for the report header

    def to_dict(self) -> dict:
        return self.echo


def parse_config(raw: dict, name: str = "scenario") -> ScenarioConfig:
    raw = _expect_map(raw, "config")
    known = {"name", "topology", "links", "faults", "workload", "thresholds", "clos", "run"}
    for key in raw:
        if key not in known:
            raise ConfigError(f"{key}: unknown section")
    name = raw.get("name", name)

    g, layout, topo_echo = _build_topology(_expect_map(raw.get("topology"), "topology"))

    links = _expect_map(raw.get("links"), "links")
    kind = _get_choice(links, "kind", "links", {"bisync", "conventional"}, default="bisync")
    delta = _get_int(links, "delta", "links", default=1, minimum=1)
    abort_prob = _get_float(links, "abort_prob", "links", default=0.0)
    flapping = None
    if links.get("flapping") is not None:
        fsec = _expect_map(links["flapping"], "links.flapping")
        flapping = {
            "to_bad": _get_float(fsec, "to_bad", "links.flapping", ...),
            "to_good": _get_float(fsec, "to_good", "links.flapping", ...),
            "p_good": _get_float(fsec, "p_good", "links.flapping", ...),
            "p_bad": _get_float(fsec, "p_bad", "links.flapping", ...),
        }
    delay_sec = _expect_map(links.get("delay"), "links.delay")
    delay = {
        "body_mu": _get_float(delay_sec, "body_mu", "links.delay", default=1.0, lo=None),
        "body_sigma": _get_float(delay_sec, "body_sigma", "links.delay", default=0.5, lo=0.0, hi=10.0),
        "tail_prob": _get_float(delay_sec, "tail_prob", "links.delay", default=0.0),
        "tail_alpha": _get_float(delay_sec, "tail_alpha", "links.delay", default=1.5, lo=0.01, hi=100.0),
        "tail_scale": _get_float(delay_sec, "tail_scale", "links.delay", default=50.0, lo=0.0, hi=1e9),
    }
    loss_prob = _get_float(links, "loss_prob", "links", default=0.0)
    timeout = _get_int(links, "timeout", "links", default=1000, minimum=1)

    faults, faults_echo = _parse_faults(_expect_map(raw.get("faults"), "faults"), g)

    clos_sec = _expect_map(raw.get("clos"), "clos")
    phases = (
        _get_int(clos_sec, "keepalive", "clos", default=1000, minimum=0),
        _get_int(clos_sec, "propagation", "clos", default=1000, minimum=0),
        _get_int(clos_sec, "recalculation", "clos", default=2000, minimum=0),
        _get_int(clos_sec, "installation", "clos", default=1000, minimum=0),
    )

    wl = _expect_map(raw.get("workload"), "workload")
    wkind = _get_choice(wl, "kind", "workload", {"requests", "attempts", "register", "none"}, default="none")
    workload: dict = {"kind": wkind}
    if wkind == "requests":
        workload["period"] = _get_int(wl, "period", "workload", default=1, minimum=1)
        workload["destination"] = _get_int(wl, "destination", "workload", default=0, minimum=0)
        if workload["destination"] >= g.num_vertices:
            raise ConfigError(f"workload.destination: cell {workload['destination']} does not exist")
        sources = wl.get("sources", "all")
        if sources != "all":
            if not (isinstance(sources, list) and all(isinstance(s, int) for s in sources)):
                raise ConfigError("workload.sources: expected 'all' or a list of cells")
            for s in sources:
                if not 0 <= s < g.num_vertices:
                    raise ConfigError(f"workload.sources: cell {s} does not exist")
        workload["sources"] = sources
        workload["count"] = _get_int(wl, "count", "workload", default=None, minimum=1)
        workload["retries"] = _get_int(wl, "retries", "workload", default=0, minimum=0)
    elif wkind == "attempts":
        workload["src"] = _get_int(wl, "src", "workload", ..., minimum=0)
        workload["dst"] = _get_int(wl, "dst", "workload", ..., minimum=0)
        for key in ("src", "dst"):
            if workload[key] >= g.num_vertices:
                raise ConfigError(f"workload.{key}: cell {workload[key]} does not exist")
        workload["period"] = _get_int(wl, "period", "workload", default=1, minimum=1)
        workload["count"] = _get_int(wl, "count", "workload", default=None, minimum=1)
        workload["retries"] = _get_int(wl, "retries", "workload", default=0, minimum=0)
        workload["use_detour"] = bool(wl.get("use_detour", False))
    elif wkind == "register":
        replicas = wl.get("replicas")
        if not (isinstance(replicas, list) and len(replicas) == 2 and all(isinstance(r, int) for r in replicas)):
            raise ConfigError("workload.replicas: expected [cell_a, cell_b]")
        for r in replicas:
            if not 0 <= r < g.num_vertices:
                raise ConfigError(f"workload.replicas: cell {r} does not exist")
        if replicas[0] == replicas[1]:
            raise ConfigError("workload.replicas: replicas must be distinct cells")
        workload["replicas"] = list(replicas)
        workload["policy"] = _get_choice(wl, "policy", "workload", {"CP", "AP"})
        workload["write_period"] = _get_int(wl, "write_period", "workload", default=1, minimum=1)
        workload["read_period"] = _get_int(wl, "read_period", "workload", default=1, minimum=1)

    thresholds = _expect_map(raw.get("thresholds"), "thresholds")
    app_timeout = _get_int(thresholds, "app_timeout", "thresholds", default=100, minimum=1)

    run = _expect_map(raw.get("run"), "run")
    seed = _get_int(run, "seed", "run", ...)
    duration = _get_int(run, "duration", "run", ..., minimum=1)
    trace = bool(run.get("trace", False))

    echo = {
        "name": name,
        "topology": topo_echo,
        "links": {
            "kind": kind,
            "delta": delta,
            "abort_prob": abort_prob,
            "flapping": flapping,
            "delay": delay,
            "loss_prob": loss_prob,
            "timeout": timeout,
        },
        "faults": {"schedule": faults_echo},
        "clos": {
            "keepalive": phases[0],
            "propagation": phases[1],
            "recalculation": phases[2],
            "installation": phases[3],
        },
        "workload": workload,
        "thresholds": {"app_timeout": app_timeout},
        "run": {"seed": seed, "duration": duration, "trace": trace},
    }
    return ScenarioConfig(
        name=name,
        graph=g,
        layout=layout,
        link_kind=kind,
        delta=delta,
        abort_prob=abort_prob,
        flapping=flapping,
        delay=delay,
        loss_prob=loss_prob,
        timeout=timeout,
        faults=tuple(faults),
        clos_phases=phases,
        workload=workload,
        app_timeout=app_timeout,
        seed=seed,
        duration=duration,
        trace=trace,
        echo=echo,
    )


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    return parse_config(raw, name=path.stem)


def dump_config(cfg: ScenarioConfig) -> str:
    """Round-trippable YAML of the fully defaulted configuration."""
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True)
