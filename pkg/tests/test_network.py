import math

import pytest

from ogf import synth
from ogf.network import (DecisionGroup, InjectionPoint, Network, Node,
                         OperationMode, Pipe, Valve, WithdrawalPoint, validate)


def two_node_net(**pipe_kwargs):
    pipe = Pipe("p1", "a", "b", length=1000.0, diameter=0.5,
                friction_factor=0.01, **pipe_kwargs)
    return Network(nodes=[Node("a", 1e5, 5e6), Node("b", 1e5, 5e6)], pipes=[pipe])


def test_validate_clean_network():
    report = validate(two_node_net(f_min=-10.0, f_max=10.0))
    assert report.ok
    assert report.errors == []


def test_validate_negative_diameter():
    net = Network(nodes=[Node("a", 1e5, 5e6), Node("b", 1e5, 5e6)],
                  pipes=[Pipe("p1", "a", "b", length=1000.0, diameter=-0.5,
                              friction_factor=0.01)])
    report = validate(net)
    assert any("diameter must be positive" in v.message for v in report.errors)


def test_validate_group_referencing_pipe():
    net = two_node_net()
    group = DecisionGroup("g", ("p1",), (OperationMode(status={"p1": "open"}),))
    bad = Network(nodes=net.nodes, pipes=net.pipes, decision_groups=[group])
    report = validate(bad)
    assert any("decision group arcs must be active arcs" in v.message
               for v in report.errors)


def test_validate_reports_dangling_endpoint_and_duplicate_id():
    net = Network(nodes=[Node("a", 1e5, 5e6), Node("a", 1e5, 5e6)],
                  pipes=[Pipe("p1", "a", "zz", length=10.0, diameter=0.5,
                              friction_factor=0.01)])
    report = validate(net)
    messages = [v.message for v in report.errors]
    assert any("duplicate id" in m for m in messages)
    assert any("unknown endpoint" in m for m in messages)


def test_validate_is_pure_and_idempotent():
    net = synth.fixture_mixed()
    r1 = validate(net)
    r2 = validate(net)
    assert r1 == r2
    assert r1.ok


def test_validate_warns_on_disconnected_graph():
    net = Network(nodes=[Node("a", 1e5, 5e6), Node("b", 1e5, 5e6),
                         Node("iso", 1e5, 5e6)],
                  pipes=[Pipe("p1", "a", "b", length=10.0, diameter=0.5,
                              friction_factor=0.01)])
    report = validate(net)
    assert report.ok  # warning only
    assert any("not weakly connected" in v.message for v in report.warnings)


def test_validate_mode_rules():
    valve = Valve("v1", "a", "b")
    good = OperationMode(status={"v1": "open"})
    missing_status = OperationMode(status={})
    sub_on_valve = OperationMode(status={"v1": "open"}, sub_mode={"v1": "active"})
    dir_on_closed = OperationMode(status={"v1": "closed"}, direction={"v1": 1})
    net = Network(nodes=[Node("a", 1e5, 5e6), Node("b", 1e5, 5e6)],
                  valves=[valve],
                  decision_groups=[DecisionGroup(
                      "g", ("v1",), (good, missing_status, sub_on_valve,
                                     dir_on_closed))])
    messages = [v.message for v in validate(net).errors]
    assert any("must set open/closed status" in m for m in messages)
    assert any("not a compressor or control valve" in m for m in messages)
    assert any("direction given for non-open arc" in m for m in messages)


def test_incidence_path():
    net = Network(
        nodes=[Node(k, 1e5, 5e6) for k in "abc"],
        pipes=[Pipe("ab", "a", "b", length=1.0, diameter=1.0, friction_factor=0.01),
               Pipe("bc", "b", "c", length=1.0, diameter=1.0, friction_factor=0.01)])
    ins, outs = net.incidence("b")
    assert ins == ["ab"]
    assert outs == ["bc"]


def test_incidence_isolated_node():
    net = Network(nodes=[Node("solo", 1e5, 5e6)])
    assert net.incidence("solo") == ([], [])


def test_incidence_parallel_arcs():
    net = Network(
        nodes=[Node("a", 1e5, 5e6), Node("b", 1e5, 5e6)],
        pipes=[Pipe("p1", "a", "b", length=1.0, diameter=1.0, friction_factor=0.01)],
        valves=[Valve("v1", "a", "b")])
    _, outs = net.incidence("a")
    assert sorted(outs) == ["p1", "v1"]


def test_incidence_unknown_node():
    with pytest.raises(KeyError):
        two_node_net().incidence("nope")


def test_every_arc_appears_once_per_side():
    net = synth.fixture_mixed()
    seen_in: list[str] = []
    seen_out: list[str] = []
    for n in net.nodes:
        ins, outs = net.incidence(n.id)
        seen_in += ins
        seen_out += outs
    arc_ids = sorted(a.id for a in net.arcs())
    assert sorted(seen_in) == arc_ids
    assert sorted(seen_out) == arc_ids
    assert len(seen_in) == len(arc_ids)


def test_default_flow_bounds_use_speed_cap():
    net = two_node_net()
    pipe = net.pipes[0]
    lo, hi = net.flow_bounds(pipe)
    rho_max = 5e6 / (net.gas.R_g * net.gas.T)
    cap = rho_max * pipe.area_or_default() * 60.0
    assert hi == pytest.approx(cap)
    assert lo == pytest.approx(-cap)
    lo2, hi2 = net.flow_bounds(pipe, v_cap=30.0)
    assert hi2 == pytest.approx(cap / 2)


def test_area_defaults_to_circle():
    pipe = Pipe("p", "a", "b", length=1.0, diameter=0.5, friction_factor=0.01)
    assert pipe.area_or_default() == pytest.approx(math.pi * 0.25 / 4.0)
    explicit = Pipe("p", "a", "b", length=1.0, diameter=0.5,
                    friction_factor=0.01, area=2.0)
    assert explicit.area_or_default() == 2.0


def test_injection_withdrawal_invariants():
    net = Network(nodes=[Node("a", 1e5, 5e6)],
                  injections=[InjectionPoint("s", "a", s_max=-1.0, cost=-2.0)],
                  withdrawals=[WithdrawalPoint("w", "nope", d=-3.0)])
    messages = [v.message for v in validate(net).errors]
    assert any("s_max" in m for m in messages)
    assert any("cost" in m for m in messages)
    assert any("unknown node" in m for m in messages)
    assert any("d must be nonnegative" in m for m in messages)
