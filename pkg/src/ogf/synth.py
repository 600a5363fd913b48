"""Hand-built benchmark networks and a synthetic instance generator.

All fixtures use a "unit" gas (R_g = T = 1, so the sound speed is 1) and
are meant to be paired with `unit_context`, under which dimensionless and
SI quantities coincide and every coefficient can be checked by hand.
A pipe with friction 2, length 1, diameter 1 and area 1 then has a
friction coefficient of exactly 1.
"""

from __future__ import annotations

import numpy as np

from .eos import NondimContext, build_context
from .network import (Compressor, ControlValve, DecisionGroup, GasConstants,
                      InjectionPoint, LossResistor, Network, Node,
                      OperationMode, Pipe, Resistor, ShortPipe, Valve,
                      WithdrawalPoint)


def unit_gas() -> GasConstants:
    return GasConstants(R_g=1.0, T=1.0, G=0.6, p_atm=101350.0)


def unit_context(network: Network, ideal: bool = True) -> NondimContext:
    """Scaling context with every nominal equal to one."""
    return build_context(network, l0=1.0, p0=1.0, v0=1.0, ideal_eos=ideal)


def _pipe(pid, a, b, beta=1.0, f_min=-4.0, f_max=4.0):
    # friction coefficient = lam*L/(2*D*A^2) = beta with unit context
    return Pipe(pid, a, b, length=1.0, diameter=1.0, friction_factor=2.0 * beta,
                area=1.0, f_min=f_min, f_max=f_max)


def two_node(demand: float = 2.0, s_max: float = 5.0, cost: float = 1.0,
             p_lo: float = 0.1, p_hi: float = 4.0) -> Network:
    """Single pipe with unit friction coefficient feeding one consumer."""
    return Network(
        nodes=[Node("n1", p_lo, p_hi), Node("n2", p_lo, p_hi)],
        pipes=[_pipe("pipe1", "n1", "n2")],
        injections=[InjectionPoint("src1", "n1", s_max=s_max, cost=cost)],
        withdrawals=[WithdrawalPoint("dem1", "n2", d=demand)],
        gas=unit_gas(), name="two_node")


def fixture_line() -> Network:
    """Three nodes in a row, two pipes, no binaries."""
    return Network(
        nodes=[Node("a", 1.0, 2.0), Node("b", 1.0, 2.0), Node("c", 1.0, 2.0)],
        pipes=[_pipe("p1", "a", "b", beta=0.1, f_min=-2, f_max=2),
               _pipe("p2", "b", "c", beta=0.1, f_min=-2, f_max=2)],
        injections=[InjectionPoint("s1", "a", s_max=2.0, cost=1.5)],
        withdrawals=[WithdrawalPoint("w1", "c", d=1.0)],
        gas=unit_gas(), name="fixture_line")


def fixture_compressor() -> Network:
    """Compressor feeding a pipe; three mode binaries."""
    return Network(
        nodes=[Node("a", 1.0, 1.6), Node("b", 1.0, 2.0), Node("c", 1.0, 2.0)],
        pipes=[_pipe("p1", "b", "c", beta=0.1, f_min=-2, f_max=2)],
        compressors=[Compressor("comp1", "a", "b", alpha_min=1.0, alpha_max=1.8,
                                f_min=-2.0, f_max=2.0)],
        injections=[InjectionPoint("s1", "a", s_max=2.0, cost=1.0)],
        withdrawals=[WithdrawalPoint("w1", "c", d=1.0)],
        gas=unit_gas(), name="fixture_compressor")


def fixture_valve_loop() -> Network:
    """Two parallel paths, one gated by a valve in an open/closed group."""
    valve = Valve("v1", "m", "b", delta_p_max=1.0, f_min=-2.0, f_max=2.0)
    group = DecisionGroup(
        "g1", ("v1",),
        (OperationMode(status={"v1": "open"}),
         OperationMode(status={"v1": "closed"})))
    return Network(
        nodes=[Node("a", 1.0, 2.0), Node("b", 1.0, 2.0), Node("m", 1.0, 2.0)],
        pipes=[_pipe("p1", "a", "b", beta=0.2, f_min=-2, f_max=2),
               _pipe("p2", "a", "m", beta=0.1, f_min=-2, f_max=2)],
        valves=[valve],
        decision_groups=[group],
        injections=[InjectionPoint("s1", "a", s_max=3.0, cost=2.0)],
        withdrawals=[WithdrawalPoint("w1", "b", d=1.2)],
        gas=unit_gas(), name="fixture_valve_loop")


def fixture_control_valve() -> Network:
    """High-pressure feed stepped down through a control valve."""
    return Network(
        nodes=[Node("a", 1.4, 2.0), Node("b", 1.4, 2.0), Node("c", 1.0, 1.8),
               Node("d", 1.0, 1.8)],
        pipes=[_pipe("p1", "a", "b", beta=0.05, f_min=-2, f_max=2),
               _pipe("p2", "c", "d", beta=0.05, f_min=-2, f_max=2)],
        control_valves=[ControlValve("cv1", "b", "c", delta_p_min=0.0,
                                     delta_p_max=0.8, f_min=-2.0, f_max=2.0)],
        injections=[InjectionPoint("s1", "a", s_max=2.0, cost=1.0)],
        withdrawals=[WithdrawalPoint("w1", "d", d=0.8)],
        gas=unit_gas(), name="fixture_control_valve")


def fixture_mixed() -> Network:
    """One of each active component plus a loss resistor; 12 binaries.

    Binary count: compressor 3, control valve 3, valve 1, reversible loss
    resistor 1, four-mode decision group 4.
    """
    group = DecisionGroup(
        "g1", ("comp1", "v1"),
        (OperationMode(status={"comp1": "open", "v1": "open"},
                       sub_mode={"comp1": "active"},
                       direction={"comp1": 1}),
         OperationMode(status={"comp1": "open", "v1": "open"},
                       sub_mode={"comp1": "bypass"}),
         OperationMode(status={"comp1": "closed", "v1": "open"}),
         OperationMode(status={"comp1": "closed", "v1": "closed"})))
    return Network(
        nodes=[Node("a", 1.0, 2.0), Node("b", 1.0, 2.0), Node("c", 1.0, 2.0),
               Node("d", 1.0, 2.0), Node("e", 1.0, 2.0), Node("g", 1.0, 2.0)],
        pipes=[_pipe("p1", "b", "c", beta=0.1, f_min=-2, f_max=2),
               _pipe("p2", "e", "g", beta=0.1, f_min=-2, f_max=2)],
        compressors=[Compressor("comp1", "a", "b", alpha_min=1.0, alpha_max=1.5,
                                f_min=-2.0, f_max=2.0)],
        valves=[Valve("v1", "c", "d", delta_p_max=1.0, f_min=-2.0, f_max=2.0)],
        control_valves=[ControlValve("cv1", "d", "e", delta_p_min=0.0,
                                     delta_p_max=0.6, f_min=-2.0, f_max=2.0)],
        loss_resistors=[LossResistor("lr1", "b", "e", delta_p=0.05,
                                     f_min=-2.0, f_max=2.0)],
        decision_groups=[group],
        injections=[InjectionPoint("s1", "a", s_max=3.0, cost=1.0)],
        withdrawals=[WithdrawalPoint("w1", "g", d=1.0)],
        gas=unit_gas(), name="fixture_mixed")


def fixtures() -> list[Network]:
    """The five hand-built solver benchmark networks."""
    return [fixture_line(), fixture_compressor(), fixture_valve_loop(),
            fixture_control_valve(), fixture_mixed()]


def gap_ring() -> Network:
    """Ring where friction physics caps the cheap source below demand.

    Tight pressure bounds limit deliverable flow from the cheap injection
    at `a` to well under the demand at `c`, but the hull relaxation admits
    near-zero friction drops at positive flow, so its optimum undercuts
    every point satisfying the true physics.
    """
    return Network(
        nodes=[Node("a", 1.0, 1.1), Node("b", 0.9, 1.1), Node("c", 0.9, 1.0),
               Node("d", 0.9, 1.1)],
        pipes=[_pipe("p1", "a", "b", beta=1.0, f_min=-3, f_max=3),
               _pipe("p2", "b", "c", beta=1.0, f_min=-3, f_max=3),
               _pipe("p3", "a", "d", beta=1.0, f_min=-3, f_max=3),
               _pipe("p4", "d", "c", beta=1.0, f_min=-3, f_max=3)],
        injections=[InjectionPoint("cheap", "a", s_max=5.0, cost=1.0),
                    InjectionPoint("dear", "c", s_max=5.0, cost=3.0)],
        withdrawals=[WithdrawalPoint("w1", "c", d=2.0)],
        gas=unit_gas(), name="gap_ring")


def infeasible_demand() -> Network:
    """Demand exceeding the only injection capacity."""
    return two_node(demand=6.0, s_max=5.0)


def infeasible_valve_cut() -> Network:
    """The only path to the consumer is a valve forced closed by its group."""
    net = fixture_valve_loop()
    group = DecisionGroup("g1", ("v1",),
                          (OperationMode(status={"v1": "closed"}),))
    return Network(
        nodes=[n for n in net.nodes],
        pipes=[_pipe("p2", "a", "m", beta=0.1, f_min=-2, f_max=2)],
        valves=net.valves,
        decision_groups=[group],
        injections=net.injections,
        withdrawals=[WithdrawalPoint("w1", "b", d=1.2)],
        gas=unit_gas(), name="infeasible_valve_cut")


def synthetic(n_nodes: int = 100, n_arcs: int = 120, n_compressors: int = 2,
              n_valves: int = 4, seed: int = 7) -> Network:
    """Random connected network at a requested size with generous slack.

    A spanning tree of pipes keeps the graph connected; surplus arcs add
    cycles.  Compressors and valves contribute 3 and 1 binaries each.
    """
    rng = np.random.default_rng(seed)
    names = [f"n{k:03d}" for k in range(n_nodes)]
    nodes = [Node(nm, 1.0, 2.0) for nm in names]
    arcs_needed = n_arcs - n_compressors - n_valves
    pipes = []
    for k in range(1, n_nodes):
        parent = int(rng.integers(0, k))
        pipes.append(_pipe(f"tp{k:03d}", names[parent], names[k],
                           beta=float(rng.uniform(0.01, 0.05)),
                           f_min=-3.0, f_max=3.0))
    extra = arcs_needed - len(pipes)
    if extra < 0:
        raise ValueError("n_arcs too small for a connected network")
    short_pipes = []
    for k in range(extra):
        i, j = rng.choice(n_nodes, size=2, replace=False)
        if k % 2:
            short_pipes.append(ShortPipe(f"sp{k:03d}", names[int(i)], names[int(j)],
                                         f_min=-3.0, f_max=3.0))
        else:
            pipes.append(_pipe(f"xp{k:03d}", names[int(i)], names[int(j)],
                               beta=float(rng.uniform(0.01, 0.05)),
                               f_min=-3.0, f_max=3.0))
    compressors = []
    for k in range(n_compressors):
        i = int(rng.integers(0, n_nodes - 1))
        compressors.append(Compressor(f"cs{k:02d}", names[i], names[i + 1],
                                      alpha_min=1.0, alpha_max=1.6,
                                      f_min=-3.0, f_max=3.0))
    valves = []
    for k in range(n_valves):
        i, j = rng.choice(n_nodes, size=2, replace=False)
        valves.append(Valve(f"vl{k:02d}", names[int(i)], names[int(j)],
                            delta_p_max=1.0, f_min=-3.0, f_max=3.0))
    n_src = max(2, n_nodes // 20)
    src_nodes = rng.choice(n_nodes, size=n_src, replace=False)
    injections = [InjectionPoint(f"src{k:02d}", names[int(i)], s_max=8.0,
                                 cost=float(rng.uniform(1.0, 5.0)))
                  for k, i in enumerate(src_nodes)]
    sinks = [i for i in range(n_nodes) if i not in set(int(s) for s in src_nodes)]
    sink_nodes = rng.choice(sinks, size=min(25, len(sinks)), replace=False)
    withdrawals = [WithdrawalPoint(f"dem{k:02d}", names[int(i)],
                                   d=float(rng.uniform(0.05, 0.25)))
                   for k, i in enumerate(sink_nodes)]
    return Network(nodes=nodes, pipes=pipes, short_pipes=short_pipes,
                   compressors=compressors, valves=valves,
                   injections=injections, withdrawals=withdrawals,
                   gas=unit_gas(), name=f"synthetic_{n_nodes}_{n_arcs}")


__all__ = ["unit_gas", "unit_context", "two_node", "fixture_line",
           "fixture_compressor", "fixture_valve_loop", "fixture_control_valve",
           "fixture_mixed", "fixtures", "gap_ring", "infeasible_demand",
           "infeasible_valve_cut", "synthetic"]
