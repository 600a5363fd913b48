"""In-memory pipeline network model.

A network is a directed multigraph of nodes joined by typed arcs (pipes,
short pipes, resistors, loss resistors, compressors, valves, control
valves) plus injection and withdrawal points attached to nodes and
decision groups restricting the joint configuration of active arcs.

Components are plain frozen dataclasses and carry SI quantities.  Invariant
checking is deliberately kept out of the constructors: `validate` returns a
report listing every violation so that callers can surface all data
problems at once instead of failing on the first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

# Active arcs are the controllable components; everything else is passive.
ACTIVE_KINDS = ("compressor", "valve", "control_valve")
PASSIVE_KINDS = ("pipe", "short_pipe", "resistor", "loss_resistor")
ARC_KINDS = PASSIVE_KINDS + ACTIVE_KINDS

# Default cap used when flow bounds are missing: |f| <= rho_max * A * v_cap.
DEFAULT_SPEED_CAP = 60.0  # m/s


@dataclass(frozen=True)
class Node:
    id: str
    p_min: float
    p_max: float


@dataclass(frozen=True)
class Pipe:
    id: str
    from_node: str
    to_node: str
    length: float
    diameter: float
    friction_factor: float
    area: float | None = None
    f_min: float | None = None
    f_max: float | None = None

    kind = "pipe"

    def area_or_default(self) -> float:
        """Cross-section, pi*D^2/4 when not given explicitly."""
        if self.area is not None:
            return self.area
        return math.pi * self.diameter**2 / 4.0


@dataclass(frozen=True)
class ShortPipe:
    id: str
    from_node: str
    to_node: str
    f_min: float | None = None
    f_max: float | None = None

    kind = "short_pipe"


@dataclass(frozen=True)
class Resistor:
    id: str
    from_node: str
    to_node: str
    drag: float
    area: float
    f_min: float | None = None
    f_max: float | None = None

    kind = "resistor"


@dataclass(frozen=True)
class LossResistor:
    id: str
    from_node: str
    to_node: str
    delta_p: float
    f_min: float | None = None
    f_max: float | None = None

    kind = "loss_resistor"


@dataclass(frozen=True)
class Compressor:
    id: str
    from_node: str
    to_node: str
    alpha_min: float = 1.0
    alpha_max: float = 2.0
    f_min: float | None = None
    f_max: float | None = None

    kind = "compressor"


@dataclass(frozen=True)
class Valve:
    id: str
    from_node: str
    to_node: str
    delta_p_max: float | None = None
    f_min: float | None = None
    f_max: float | None = None

    kind = "valve"


@dataclass(frozen=True)
class ControlValve:
    id: str
    from_node: str
    to_node: str
    delta_p_min: float = 0.0
    delta_p_max: float = 0.0
    f_min: float | None = None
    f_max: float | None = None

    kind = "control_valve"


@dataclass(frozen=True)
class InjectionPoint:
    id: str
    node: str
    s_max: float
    cost: float = 0.0


@dataclass(frozen=True)
class WithdrawalPoint:
    id: str
    node: str
    d: float


@dataclass(frozen=True)
class OperationMode:
    """One admissible joint configuration of a decision group.

    `status` must assign "open" or "closed" to every arc of the group,
    `direction` optionally pins the flow sign (+1 forward, -1 reverse, 0
    free) of open arcs, and `sub_mode` optionally selects "active" or
    "bypass" for open compressors and control valves.
    """

    status: dict[str, str] = field(default_factory=dict)
    direction: dict[str, int] = field(default_factory=dict)
    sub_mode: dict[str, str] = field(default_factory=dict)

    def open_arcs(self) -> list[str]:
        return [a for a, s in self.status.items() if s == "open"]

    def closed_arcs(self) -> list[str]:
        return [a for a, s in self.status.items() if s == "closed"]


@dataclass(frozen=True)
class DecisionGroup:
    id: str
    arcs: tuple[str, ...]
    modes: tuple[OperationMode, ...]


@dataclass(frozen=True)
class GasConstants:
    """Gas properties shared by the whole network (isothermal model)."""

    R_g: float = 478.43  # J/(kg K), natural gas at G ~ 0.6
    T: float = 288.706  # K
    G: float = 0.6  # specific gravity relative to air
    p_atm: float = 101350.0  # Pa


@dataclass(frozen=True)
class Violation:
    severity: str  # "error" | "warning"
    component: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def errors(self) -> list[Violation]:
        return [v for v in self.violations if v.severity == "error"]

    @property
    def warnings(self) -> list[Violation]:
        return [v for v in self.violations if v.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors


class Network:
    """Validated-on-demand container for all network components.

    The instance is treated as immutable after construction; formulation
    and solver code only read from it, so one network can safely back many
    concurrent solves.
    """

    def __init__(
        self,
        nodes=(),
        pipes=(),
        short_pipes=(),
        resistors=(),
        loss_resistors=(),
        compressors=(),
        valves=(),
        control_valves=(),
        injections=(),
        withdrawals=(),
        decision_groups=(),
        gas: GasConstants | None = None,
        name: str = "network",
    ):
        self.name = name
        self.nodes = tuple(nodes)
        self.pipes = tuple(pipes)
        self.short_pipes = tuple(short_pipes)
        self.resistors = tuple(resistors)
        self.loss_resistors = tuple(loss_resistors)
        self.compressors = tuple(compressors)
        self.valves = tuple(valves)
        self.control_valves = tuple(control_valves)
        self.injections = tuple(injections)
        self.withdrawals = tuple(withdrawals)
        self.decision_groups = tuple(decision_groups)
        self.gas = gas if gas is not None else GasConstants()

        self.node_by_id = {n.id: n for n in self.nodes}
        self.arc_by_id = {a.id: a for a in self.arcs()}
        self.injection_by_id = {s.id: s for s in self.injections}
        self.withdrawal_by_id = {w.id: w for w in self.withdrawals}
        self._in_arcs: dict[str, list[str]] = {n.id: [] for n in self.nodes}
        self._out_arcs: dict[str, list[str]] = {n.id: [] for n in self.nodes}
        for arc in self.arcs():
            if arc.to_node in self._in_arcs:
                self._in_arcs[arc.to_node].append(arc.id)
            if arc.from_node in self._out_arcs:
                self._out_arcs[arc.from_node].append(arc.id)

    def arcs(self):
        """All arcs in a deterministic order (passive kinds first)."""
        yield from self.pipes
        yield from self.short_pipes
        yield from self.resistors
        yield from self.loss_resistors
        yield from self.compressors
        yield from self.valves
        yield from self.control_valves

    def active_arcs(self):
        yield from self.compressors
        yield from self.valves
        yield from self.control_valves

    def incidence(self, node_id: str) -> tuple[list[str], list[str]]:
        """Arc ids entering and leaving `node_id` as (in_arcs, out_arcs)."""
        if node_id not in self.node_by_id:
            raise KeyError(f"unknown node id {node_id!r}")
        return list(self._in_arcs[node_id]), list(self._out_arcs[node_id])

    def injections_at(self, node_id: str) -> list[InjectionPoint]:
        return [s for s in self.injections if s.node == node_id]

    def withdrawals_at(self, node_id: str) -> list[WithdrawalPoint]:
        return [w for w in self.withdrawals if w.node == node_id]

    def flow_bounds(self, arc, rho_max: float | None = None,
                    v_cap: float = DEFAULT_SPEED_CAP) -> tuple[float, float]:
        """Flow bounds of an arc, with a physical default when absent.

        Missing bounds default to +-rho_max*A*v_cap using the arc area when
        it has one (unit area otherwise), which keeps downstream MILPs
        bounded for data sets that omit flow limits.
        """
        area = 1.0
        if isinstance(arc, Pipe):
            area = arc.area_or_default()
        elif isinstance(arc, Resistor):
            area = arc.area
        if rho_max is None:
            # crude upper density estimate: ideal gas at the largest p_max
            p_hi = max((n.p_max for n in self.nodes), default=1e7)
            rho_max = p_hi / (self.gas.R_g * self.gas.T)
        cap = rho_max * area * v_cap
        lo = arc.f_min if arc.f_min is not None else -cap
        hi = arc.f_max if arc.f_max is not None else cap
        return lo, hi

    def with_demands(self, withdrawals=None, injections=None) -> "Network":
        """Copy of the network with replaced withdrawal/injection points."""
        return Network(
            nodes=self.nodes,
            pipes=self.pipes,
            short_pipes=self.short_pipes,
            resistors=self.resistors,
            loss_resistors=self.loss_resistors,
            compressors=self.compressors,
            valves=self.valves,
            control_valves=self.control_valves,
            injections=self.injections if injections is None else injections,
            withdrawals=self.withdrawals if withdrawals is None else withdrawals,
            decision_groups=self.decision_groups,
            gas=self.gas,
            name=self.name,
        )


def _check_flow_pair(out: list[Violation], comp_id: str, f_min, f_max) -> None:
    if f_min is not None and f_max is not None and f_min > f_max:
        out.append(Violation("error", comp_id, "f_min must not exceed f_max"))


def validate(network: Network) -> ValidationReport:
    """Check every component invariant and cross-reference.

    Pure and idempotent.  A network is acceptable for model building iff
    the report carries no errors; connectivity problems only warn.
    """
    out: list[Violation] = []

    seen: set[str] = set()
    for comp in (*network.nodes, *network.arcs(), *network.injections,
                 *network.withdrawals, *network.decision_groups):
        if comp.id in seen:
            out.append(Violation("error", comp.id, "duplicate id"))
        seen.add(comp.id)

    for n in network.nodes:
        if not (0 < n.p_min <= n.p_max):
            out.append(Violation("error", n.id,
                                 "pressure bounds must satisfy 0 < p_min <= p_max"))

    for arc in network.arcs():
        for end in (arc.from_node, arc.to_node):
            if end not in network.node_by_id:
                out.append(Violation("error", arc.id, f"unknown endpoint node {end!r}"))

    for p in network.pipes:
        if p.length <= 0:
            out.append(Violation("error", p.id, "length must be positive"))
        if p.diameter <= 0:
            out.append(Violation("error", p.id, "diameter must be positive"))
        if p.area is not None and p.area <= 0:
            out.append(Violation("error", p.id, "area must be positive"))
        if p.friction_factor <= 0:
            out.append(Violation("error", p.id, "friction factor must be positive"))
        _check_flow_pair(out, p.id, p.f_min, p.f_max)

    for sp in network.short_pipes:
        _check_flow_pair(out, sp.id, sp.f_min, sp.f_max)

    for r in network.resistors:
        if r.drag <= 0:
            out.append(Violation("error", r.id, "drag must be positive"))
        if r.area <= 0:
            out.append(Violation("error", r.id, "area must be positive"))
        _check_flow_pair(out, r.id, r.f_min, r.f_max)

    for lr in network.loss_resistors:
        if lr.delta_p < 0:
            out.append(Violation("error", lr.id, "delta_p must be nonnegative"))
        _check_flow_pair(out, lr.id, lr.f_min, lr.f_max)

    for c in network.compressors:
        if not (1.0 <= c.alpha_min <= c.alpha_max):
            out.append(Violation("error", c.id,
                                 "compression ratios must satisfy 1 <= alpha_min <= alpha_max"))
        _check_flow_pair(out, c.id, c.f_min, c.f_max)

    for v in network.valves:
        if v.delta_p_max is not None and v.delta_p_max < 0:
            out.append(Violation("error", v.id, "delta_p_max must be nonnegative"))
        _check_flow_pair(out, v.id, v.f_min, v.f_max)

    for cv in network.control_valves:
        if not (0 <= cv.delta_p_min <= cv.delta_p_max):
            out.append(Violation("error", cv.id,
                                 "pressure reduction range must satisfy 0 <= delta_p_min <= delta_p_max"))
        _check_flow_pair(out, cv.id, cv.f_min, cv.f_max)

    for s in network.injections:
        if s.node not in network.node_by_id:
            out.append(Violation("error", s.id, f"unknown node {s.node!r}"))
        if s.s_max < 0:
            out.append(Violation("error", s.id, "s_max must be nonnegative"))
        if s.cost < 0:
            out.append(Violation("error", s.id, "cost must be nonnegative"))

    for w in network.withdrawals:
        if w.node not in network.node_by_id:
            out.append(Violation("error", w.id, f"unknown node {w.node!r}"))
        if w.d < 0:
            out.append(Violation("error", w.id, "d must be nonnegative"))

    active_ids = {a.id for a in network.active_arcs()}
    sub_mode_ids = {a.id for a in network.compressors} | {
        a.id for a in network.control_valves}
    for g in network.decision_groups:
        for a in g.arcs:
            if a not in active_ids:
                out.append(Violation(
                    "error", g.id,
                    f"decision group arcs must be active arcs (got {a!r})"))
        if not g.modes:
            out.append(Violation("error", g.id, "decision group has no operation modes"))
        for k, m in enumerate(g.modes):
            where = f"{g.id}[mode {k}]"
            for a in g.arcs:
                if m.status.get(a) not in ("open", "closed"):
                    out.append(Violation(
                        "error", where, f"mode must set open/closed status of arc {a!r}"))
            for a, st in m.status.items():
                if a not in g.arcs:
                    out.append(Violation("error", where,
                                         f"status given for arc {a!r} outside the group"))
            for a, d in m.direction.items():
                if d not in (-1, 0, 1):
                    out.append(Violation("error", where,
                                         f"direction of {a!r} must be -1, 0 or 1"))
                if m.status.get(a) != "open" and d != 0:
                    out.append(Violation("error", where,
                                         f"direction given for non-open arc {a!r}"))
            for a, sm in m.sub_mode.items():
                if sm not in ("active", "bypass"):
                    out.append(Violation("error", where,
                                         f"sub-mode of {a!r} must be active or bypass"))
                if a not in sub_mode_ids:
                    out.append(Violation(
                        "error", where,
                        f"sub-mode given for {a!r}, which is not a compressor or control valve"))
                elif m.status.get(a) != "open":
                    out.append(Violation("error", where,
                                         f"sub-mode given for non-open arc {a!r}"))
                # compression only pushes gas forward
                if (sm == "active" and a in {c.id for c in network.compressors}
                        and m.direction.get(a, 0) == -1):
                    out.append(Violation("error", where,
                                         f"active compressor {a!r} cannot flow in reverse"))

    if network.nodes:
        unreached = _weakly_disconnected(network)
        if unreached:
            out.append(Violation(
                "warning", network.name,
                f"graph is not weakly connected ({len(unreached)} unreachable nodes)"))

    return ValidationReport(tuple(out))


def _weakly_disconnected(network: Network) -> set[str]:
    ids = [n.id for n in network.nodes]
    adj: dict[str, list[str]] = {i: [] for i in ids}
    for arc in network.arcs():
        if arc.from_node in adj and arc.to_node in adj:
            adj[arc.from_node].append(arc.to_node)
            adj[arc.to_node].append(arc.from_node)
    seen = {ids[0]}
    stack = [ids[0]]
    while stack:
        for nxt in adj[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return set(ids) - seen


__all__ = [
    "Node", "Pipe", "ShortPipe", "Resistor", "LossResistor", "Compressor",
    "Valve", "ControlValve", "InjectionPoint", "WithdrawalPoint",
    "OperationMode", "DecisionGroup", "GasConstants", "Network",
    "Violation", "ValidationReport", "validate",
    "ACTIVE_KINDS", "PASSIVE_KINDS", "ARC_KINDS",
]
