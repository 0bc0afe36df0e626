import copy

import pytest
import yaml

from fabricsim.cli import bundled_scenario_path
from fabricsim.config import ConfigError, load_config, parse_config, dump_config
from fabricsim.graphs import build_grid, build_octavalent_mesh
from fabricsim.metrics import apparent_latency_histogram, percentile
from fabricsim.sim import classify_fault, clos_reconverge, replicated_register_workload, run_scenario

BUNDLED = [
    "mesh-single-fault",
    "mesh-fault-storm",
    "clos-fault-storm",
    "clos-tor-fault",
    "conventional-heavy-tail",
    "conventional-flap",
    "register-cp",
    "register-ap",
    "chain-delivery",
    "triangle-delivery",
]


def bundled(name):
    return load_config(bundled_scenario_path(name))


def bundled_report(name, _cache={}):
    # runs are deterministic, so read-only tests can share one report
    if name not in _cache:
        _cache[name] = run_scenario(bundled(name))
    return _cache[name]


def minimal_config(**overrides):
    raw = {
        "topology": {"family": "chain", "cells": 3},
        "links": {"kind": "bisync"},
        "workload": {"kind": "requests", "destination": 0, "period": 2},
        "run": {"seed": 1, "duration": 50},
    }
    for key, val in overrides.items():
        raw[key] = val
    return raw


# -- config validation ------------------------------------------------------


def test_missing_seed_names_field():
    raw = minimal_config(run={"duration": 10})
    with pytest.raises(ConfigError, match="run.seed"):
        parse_config(raw)


def test_bad_link_kind_names_field():
    raw = minimal_config(links={"kind": "quantum"})
    with pytest.raises(ConfigError, match="links.kind"):
        parse_config(raw)


def test_unknown_section_rejected():
    raw = minimal_config()
    raw["extras"] = {}
    with pytest.raises(ConfigError, match="extras"):
        parse_config(raw)


def test_fault_on_missing_link_names_entry():
    raw = minimal_config(faults={"schedule": [{"kind": "link-down", "edge": [0, 2], "start": 5}]})
    with pytest.raises(ConfigError, match=r"faults.schedule\[0\].edge"):
        parse_config(raw)


def test_workload_destination_must_exist():
    raw = minimal_config(workload={"kind": "requests", "destination": 99})
    with pytest.raises(ConfigError, match="workload.destination"):
        parse_config(raw)


def test_register_needs_two_distinct_replicas():
    raw = minimal_config(workload={"kind": "register", "replicas": [1, 1], "policy": "CP"})
    with pytest.raises(ConfigError, match="workload.replicas"):
        parse_config(raw)


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_configs_round_trip(name):
    cfg = bundled(name)
    reparsed = parse_config(yaml.safe_load(dump_config(cfg)), name=cfg.name)
    assert reparsed.echo == cfg.echo


def test_echo_holds_every_defaulted_parameter():
    cfg = parse_config(minimal_config())
    echo = cfg.to_dict()
    assert echo["links"]["delta"] == 1
    assert echo["links"]["abort_prob"] == 0.0
    assert echo["thresholds"]["app_timeout"] == 100
    assert echo["clos"]["recalculation"] == 2000
    assert echo["workload"]["sources"] == "all"


# -- determinism -------------------------------------------------------------


@pytest.mark.parametrize("name", ["mesh-single-fault", "conventional-heavy-tail", "register-ap"])
def test_identical_seed_gives_identical_outputs(name, tmp_path):
    cfg = bundled(name)
    out1 = run_scenario(cfg).write_outputs(tmp_path / "a")
    out2 = run_scenario(bundled(name)).write_outputs(tmp_path / "b")
    for f1, f2 in zip(out1, out2):
        assert f1.read_bytes() == f2.read_bytes()


def test_different_seed_changes_a_stochastic_run():
    cfg = bundled("conventional-heavy-tail")
    raw = copy.deepcopy(cfg.echo)
    raw["run"]["seed"] = 777
    other = parse_config(raw)
    a = run_scenario(cfg)
    b = run_scenario(other)
    assert a.latency_samples != b.latency_samples


# -- classification ---------------------------------------------------------------


def test_classify_hard_cut():
    g = build_grid(3, 3)
    cfg = parse_config(
        {
            "topology": {"family": "grid", "rows": 3, "cols": 3},
            "links": {"kind": "bisync"},
            "faults": {"schedule": [
                {"kind": "hard-cut", "edges": [[0, 1], [0, 3]], "start": 0, "duration": 5},
            ]},
            "run": {"seed": 1, "duration": 10},
        }
    )
    fault = cfg.faults[0]
    assert classify_fault(fault, g, app_visible=True) == "H"  # corner cut off
    assert classify_fault(fault, g, app_visible=False) == "H"


def test_classify_transient_and_subthreshold():
    g = build_octavalent_mesh(3, 3)
    cfg = parse_config(
        {
            "topology": {"family": "mesh", "rows": 3, "cols": 3},
            "links": {"kind": "bisync"},
            "faults": {"schedule": [{"kind": "link-down", "edge": [0, 1], "start": 0, "duration": 5}]},
            "run": {"seed": 1, "duration": 10},
        }
    )
    fault = cfg.faults[0]
    assert classify_fault(fault, g, app_visible=True) == "S"
    assert classify_fault(fault, g, app_visible=False) == "sub-threshold"
    assert classify_fault(fault, g, app_visible=True, ambiguous=True) == "U"


def test_clos_reconverge_window():
    cfg = bundled("clos-tor-fault")
    assert clos_reconverge(cfg.faults[0], (10, 20, 30, 40)) == 100
    assert clos_reconverge(cfg.faults[0], (0, 0, 0, 0)) == 0
    with pytest.raises(ValueError):
        clos_reconverge(cfg.faults[0], (1, 2, 3))


# -- scenario behavior --------------------------------------------------------------


def test_mesh_single_fault_stays_invisible():
    report = bundled_report("mesh-single-fault")
    assert report.partitions == []
    assert report.class_counts() == {"H": 0, "S": 0, "U": 0, "sub-threshold": 1}
    assert report.max_heal_slots() == 1
    assert all(r.outcome == "delivered" for r in report.requests[:-3])


def test_mesh_storm_all_faults_subthreshold():
    report = bundled_report("mesh-fault-storm")
    assert len(report.faults) == 100
    assert report.partitions == []
    assert report.max_heal_slots() <= 19


def test_clos_storm_every_fault_becomes_visible():
    report = bundled_report("clos-fault-storm")
    s_faults = {p.fault_id for p in report.partitions if p.klass == "S"}
    assert len(report.faults) == 100
    assert s_faults == {f.fid for f in report.faults}
    assert sum(1 for p in report.partitions if p.klass == "U") == 0


def test_clos_tor_fault_soft_partition():
    report = bundled_report("clos-tor-fault")
    assert any(p.klass == "S" for p in report.partitions)


def test_zero_reconvergence_window_hides_fault():
    raw = copy.deepcopy(bundled("clos-tor-fault").echo)
    raw["clos"] = {"keepalive": 0, "propagation": 0, "recalculation": 0, "installation": 0}
    report = run_scenario(parse_config(raw))
    assert report.partitions == []


def test_believed_liveness_lags_reality_by_the_window():
    from fabricsim.sim import _ConventionalEngine

    cfg = parse_config(
        {
            "topology": {"family": "clos", "racks": 2, "leaves": 2, "spines": 1, "hosts_per_rack": 1},
            "links": {"kind": "conventional"},
            "clos": {"keepalive": 100, "propagation": 100, "recalculation": 100, "installation": 100},
            "faults": {"schedule": [{"kind": "link-down", "edge": [0, 2], "start": 5000}]},
            "workload": {"kind": "requests", "destination": 0, "sources": [1], "period": 100},
            "run": {"seed": 1, "duration": 6000},
        }
    )
    eng = _ConventionalEngine(cfg)
    eid = cfg.graph.edge_id(0, 2)
    assert eng._believed_alive(eid, 0)  # a permanent future fault must not leak backward
    assert eng._believed_alive(eid, 5399)  # stale view inside the reconvergence window
    assert not eng._believed_alive(eid, 5400)
    assert eng._real_alive(eid, 4999) and not eng._real_alive(eid, 5000)


def test_heavy_tail_produces_ambiguity_records():
    report = bundled_report("conventional-heavy-tail")
    u_records = [p for p in report.partitions if p.klass == "U"]
    assert len(u_records) >= 1
    hist = apparent_latency_histogram(report)
    assert hist["p999"] >= 100  # late deliveries beyond the sender timeout


def test_conventional_flap_tail_blows_past_timeout():
    report = bundled_report("conventional-flap")
    hist = apparent_latency_histogram(report)
    assert hist["p999"] >= 80


def test_bisync_runs_never_emit_ambiguity():
    for name in BUNDLED:
        if bundled(name).link_kind != "bisync":
            continue
        report = bundled_report(name)
        assert all(p.klass != "U" for p in report.partitions), name


def test_visible_partitions_in_mesh_suite_are_hard_only():
    for name in ("mesh-single-fault", "mesh-fault-storm", "register-cp", "register-ap"):
        report = bundled_report(name)
        assert all(p.klass == "H" for p in report.partitions), name


# -- replicated register -------------------------------------------------------------


def test_cp_blocks_for_cut_duration_with_zero_staleness():
    unavailable, staleness = replicated_register_workload("CP", cut_duration=1000)
    assert unavailable >= 1000
    assert staleness == 0


def test_ap_stays_available_but_goes_stale():
    unavailable, staleness = replicated_register_workload("AP", cut_duration=1000)
    assert unavailable == 0
    assert staleness >= 1000


def test_no_cut_keeps_both_metrics_tiny():
    for policy in ("CP", "AP"):
        unavailable, staleness = replicated_register_workload(policy, cut_duration=0)
        assert unavailable == 0
        assert staleness <= 4  # bounded by the commit round trip


def test_register_reports_include_intervals():
    report = bundled_report("register-cp")
    assert report.register["unavailability_total"] >= 1000
    assert report.register["max_staleness"] == 0
    assert len(report.unavailability) == 1
    start, end = report.unavailability[0]
    assert end - start >= 1000
    report = bundled_report("register-ap")
    assert report.register["unavailability_total"] == 0
    assert report.register["max_staleness"] >= 1000
    assert len(report.inconsistency) == 1


# -- attempts workloads (single-shot delivery statistics) ------------------------------


def delivered_fraction(report):
    done = [r for r in report.requests if r.outcome in ("delivered", "failed")]
    return sum(1 for r in done if r.outcome == "delivered") / len(done)


def test_chain_delivery_rate_matches_product_law():
    report = bundled_report("chain-delivery")
    rate = delivered_fraction(report)
    theory = 0.95**9
    sigma = (theory * (1 - theory) / 2000) ** 0.5
    assert abs(rate - theory) <= 4 * sigma


def test_triangle_delivery_rate_matches_redundancy_law():
    report = bundled_report("triangle-delivery")
    rate = delivered_fraction(report)
    theory = 0.9 + 0.81 - 0.9 * 0.81
    sigma = (theory * (1 - theory) / 2000) ** 0.5
    assert abs(rate - theory) <= 4 * sigma


def test_retry_uplift_matches_formula():
    raw = copy.deepcopy(bundled("chain-delivery").echo)
    raw["workload"]["retries"] = 2  # three attempts total
    raw["workload"]["count"] = 1500
    raw["workload"]["period"] = 30
    raw["run"]["duration"] = 46000
    report = run_scenario(parse_config(raw))
    rate = delivered_fraction(report)
    p_chain = 0.95**9
    theory = 1 - (1 - p_chain) ** 3
    sigma = (theory * (1 - theory) / 1500) ** 0.5
    assert abs(rate - theory) <= 4 * sigma


# -- metrics utilities ----------------------------------------------------------------


def test_histogram_requires_samples():
    report = run_scenario(
        parse_config(
            {
                "topology": {"family": "chain", "cells": 2},
                "links": {"kind": "bisync"},
                "run": {"seed": 0, "duration": 5},
            }
        )
    )
    with pytest.raises(ValueError):
        apparent_latency_histogram(report)


def test_percentile_nearest_rank():
    samples = list(range(1, 101))
    assert percentile(samples, 0.50) == 50
    assert percentile(samples, 0.99) == 99
    assert percentile(samples, 0.999) == 100
    with pytest.raises(ValueError):
        percentile([], 0.5)


def test_latency_bounded_by_path_plus_heal():
    report = bundled_report("mesh-single-fault")
    hist = apparent_latency_histogram(report)
    assert hist["max"] <= 19 + report.max_heal_slots() + 1
