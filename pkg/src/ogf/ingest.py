"""Network, decision-group and nomination ingestion.

Two on-disk formats are understood: the canonical "ogf-net/1" JSON schema
(the toolkit's source of truth, all quantities SI) and a subset of the
GasLib XML family (.net networks, decision-group files, .scn nominations).
The XML import covers only what the optimization model consumes; unknown
elements are skipped with a warning.  GasLib volumetric flows (1000 m^3/h
at norm conditions) are converted to mass flow through the norm density of
the configured gas.
"""

from __future__ import annotations

import json
import logging
import math
import xml.etree.ElementTree as ET
from dataclasses import asdict

import numpy as np

from .eos import cnga_coefficients
from .formulation import Nomination, NominationInjection
from .network import (Compressor, ControlValve, DecisionGroup, GasConstants,
                      InjectionPoint, LossResistor, Network, Node,
                      OperationMode, Pipe, Resistor, ShortPipe, Valve,
                      WithdrawalPoint)

log = logging.getLogger("ogf.ingest")

NET_SCHEMA = "ogf-net/1"

# GasLib norm conditions for volumetric flow
P_NORM = 101325.0  # Pa
T_NORM = 273.15  # K
INJECTION_UPLIFT = 1.05  # headroom factor applied to parsed injection caps


class ParseError(ValueError):
    pass


# -- canonical JSON -------------------------------------------------------

_ARC_LISTS = (
    ("pipes", Pipe),
    ("short_pipes", ShortPipe),
    ("resistors", Resistor),
    ("loss_resistors", LossResistor),
    ("compressors", Compressor),
    ("valves", Valve),
    ("control_valves", ControlValve),
)


def _arc_dict(arc) -> dict:
    doc = asdict(arc)
    doc["from"] = doc.pop("from_node")
    doc["to"] = doc.pop("to_node")
    return {k: v for k, v in doc.items() if v is not None}


def network_to_json(network: Network) -> str:
    doc = {
        "schema": NET_SCHEMA,
        "name": network.name,
        "gas": asdict(network.gas),
        "nodes": [asdict(n) for n in network.nodes],
        "injections": [asdict(s) for s in network.injections],
        "withdrawals": [asdict(w) for w in network.withdrawals],
        "decision_groups": [
            {"id": g.id, "arcs": list(g.arcs),
             "modes": [{"status": m.status, "direction": m.direction,
                        "sub_mode": m.sub_mode} for m in g.modes]}
            for g in network.decision_groups],
    }
    for key, _ in _ARC_LISTS:
        doc[key] = [_arc_dict(a) for a in getattr(network, key)]
    return json.dumps(doc, indent=1, sort_keys=True)


def _build_arc(cls, doc: dict, where: str):
    doc = dict(doc)
    try:
        doc["from_node"] = doc.pop("from")
        doc["to_node"] = doc.pop("to")
        return cls(**doc)
    except (KeyError, TypeError) as exc:
        raise ParseError(f"{where}: {exc}") from exc


def network_from_json(text: str) -> Network:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc}") from exc
    if doc.get("schema") != NET_SCHEMA:
        raise ParseError(f"expected schema {NET_SCHEMA!r}, got {doc.get('schema')!r}")
    try:
        nodes = [Node(**n) for n in doc.get("nodes", [])]
        injections = [InjectionPoint(**s) for s in doc.get("injections", [])]
        withdrawals = [WithdrawalPoint(**w) for w in doc.get("withdrawals", [])]
    except TypeError as exc:
        raise ParseError(f"bad node/injection/withdrawal record: {exc}") from exc
    arcs = {}
    for key, cls in _ARC_LISTS:
        arcs[key] = [_build_arc(cls, a, f"{key} entry") for a in doc.get(key, [])]
    groups = []
    for g in doc.get("decision_groups", []):
        modes = tuple(
            OperationMode(status=dict(m.get("status", {})),
                          direction={k: int(v) for k, v in m.get("direction", {}).items()},
                          sub_mode=dict(m.get("sub_mode", {})))
            for m in g.get("modes", []))
        groups.append(DecisionGroup(g["id"], tuple(g.get("arcs", [])), modes))
    gas = GasConstants(**doc["gas"]) if "gas" in doc else GasConstants()
    return Network(nodes=nodes, injections=injections, withdrawals=withdrawals,
                   decision_groups=groups, gas=gas,
                   name=doc.get("name", "network"), **arcs)


# -- GasLib-style XML -----------------------------------------------------

_UNIT_FACTORS = {
    # target SI unit -> accepted unit spellings and multipliers
    "pressure": {"bar": 1e5, "Pa": 1.0, "pa": 1.0, "barg": 1e5},
    "length": {"m": 1.0, "km": 1e3, "mm": 1e-3, "meter": 1.0},
    "temperature": {"K": None, "Celsius": None, "C": None},
}


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _attr(el: ET.Element, name: str) -> str:
    if name not in el.attrib:
        raise ParseError(f"element {el.attrib.get('id', _local(el.tag))!r} "
                         f"is missing attribute {name!r}")
    return el.attrib[name]


def _child(el: ET.Element, name: str) -> ET.Element | None:
    for ch in el:
        if _local(ch.tag) == name:
            return ch
    return None


def _quantity(el: ET.Element, name: str, kind: str, required: bool = True,
              default: float | None = None) -> float | None:
    ch = _child(el, name)
    if ch is None:
        if required:
            raise ParseError(f"element {el.attrib.get('id', _local(el.tag))!r} "
                             f"is missing child {name!r}")
        return default
    value = float(_attr(ch, "value"))
    unit = ch.attrib.get("unit", "")
    if kind == "flow":
        return value  # converted to kg/s later, needs gas data
    if kind == "temperature":
        if unit in ("Celsius", "C", ""):
            return value + 273.15
        if unit == "K":
            return value
        raise ParseError(f"{name}: unsupported temperature unit {unit!r}")
    if kind == "plain":
        return value
    table = _UNIT_FACTORS[kind]
    if unit not in table:
        raise ParseError(f"{name}: unsupported {kind} unit {unit!r}")
    return value * table[unit]


def norm_density(gas: GasConstants, ideal: bool = False) -> float:
    """Density at GasLib norm conditions used for volumetric conversion."""
    b1, b2 = cnga_coefficients(gas.T, gas.G, gas.p_atm, ideal=ideal)
    return P_NORM * (b1 + b2 * P_NORM) / (gas.R_g * T_NORM)


def flow_to_kgps(value_1000m3h: float, gas: GasConstants) -> float:
    return value_1000m3h * 1000.0 * norm_density(gas) / 3600.0


def parse_network_xml(text: str) -> Network:
    """GasLib-style .net import covering the optimization-relevant subset."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise ParseError(f"malformed XML: {exc}") from exc
    nodes_el = None
    conns_el = None
    for ch in root.iter():
        if _local(ch.tag) == "nodes":
            nodes_el = ch
        elif _local(ch.tag) == "connections":
            conns_el = ch
    if nodes_el is None or conns_el is None:
        raise ParseError("document has no nodes/connections sections")

    gas = GasConstants()
    nodes: list[Node] = []
    injections: list[InjectionPoint] = []
    withdrawals: list[WithdrawalPoint] = []
    raw_source_caps: dict[str, float] = {}
    for el in nodes_el:
        kind = _local(el.tag)
        if kind not in ("source", "sink", "innode"):
            log.warning("ignoring unknown node element <%s>", kind)
            continue
        nid = _attr(el, "id")
        p_min = _quantity(el, "pressureMin", "pressure")
        p_max = _quantity(el, "pressureMax", "pressure")
        nodes.append(Node(nid, p_min, p_max))
        if kind == "source":
            cap = _quantity(el, "flowMax", "flow", required=False, default=0.0)
            raw_source_caps[nid] = cap
            t = _quantity(el, "gasTemperature", "temperature", required=False)
            if t is not None:
                gas = GasConstants(R_g=gas.R_g, T=t, G=gas.G, p_atm=gas.p_atm)
            molar = _quantity(el, "molarMass", "plain", required=False)
            if molar:
                gas = GasConstants(R_g=8314.462618 / molar, T=gas.T,
                                   G=molar / 28.9647, p_atm=gas.p_atm)
        elif kind == "sink":
            withdrawals.append(WithdrawalPoint(f"w_{nid}", nid, d=0.0))

    for nid, cap in raw_source_caps.items():
        injections.append(InjectionPoint(f"s_{nid}", nid,
                                         s_max=flow_to_kgps(cap, gas), cost=0.0))

    pipes, short_pipes, resistors, loss_resistors = [], [], [], []
    compressors, valves, control_valves = [], [], []
    node_bounds = {n.id: (n.p_min, n.p_max) for n in nodes}
    for el in conns_el:
        kind = _local(el.tag)
        if kind == "pipe":
            rough = _quantity(el, "roughness", "length", required=False)
            diam = _quantity(el, "diameter", "length")
            lam_child = _quantity(el, "frictionFactor", "plain", required=False)
            if lam_child is None:
                if not rough:
                    raise ParseError(f"pipe {_attr(el, 'id')!r} needs a roughness "
                                     "or frictionFactor child")
                lam_child = (2.0 * math.log10(diam / rough) + 1.138) ** -2
            pipes.append(Pipe(
                _attr(el, "id"), _attr(el, "from"), _attr(el, "to"),
                length=_quantity(el, "length", "length"),
                diameter=diam, friction_factor=lam_child,
                f_min=_flow_bound(el, "flowMin", gas),
                f_max=_flow_bound(el, "flowMax", gas)))
        elif kind == "shortPipe":
            short_pipes.append(ShortPipe(
                _attr(el, "id"), _attr(el, "from"), _attr(el, "to"),
                f_min=_flow_bound(el, "flowMin", gas),
                f_max=_flow_bound(el, "flowMax", gas)))
        elif kind == "resistor":
            drag = _quantity(el, "dragFactor", "plain", required=False)
            ploss = _quantity(el, "pressureLoss", "pressure", required=False)
            common = (_attr(el, "id"), _attr(el, "from"), _attr(el, "to"))
            if ploss is not None:
                loss_resistors.append(LossResistor(
                    *common, delta_p=ploss,
                    f_min=_flow_bound(el, "flowMin", gas),
                    f_max=_flow_bound(el, "flowMax", gas)))
            elif drag is not None:
                diam = _quantity(el, "diameter", "length")
                resistors.append(Resistor(
                    *common, drag=drag, area=math.pi * diam**2 / 4.0,
                    f_min=_flow_bound(el, "flowMin", gas),
                    f_max=_flow_bound(el, "flowMax", gas)))
            else:
                raise ParseError(f"resistor {common[0]!r} needs a dragFactor or a "
                                 "constant pressureLoss child")
        elif kind == "valve":
            valves.append(Valve(
                _attr(el, "id"), _attr(el, "from"), _attr(el, "to"),
                delta_p_max=_quantity(el, "pressureDifferentialMax", "pressure",
                                      required=False),
                f_min=_flow_bound(el, "flowMin", gas),
                f_max=_flow_bound(el, "flowMax", gas)))
        elif kind == "controlValve":
            control_valves.append(ControlValve(
                _attr(el, "id"), _attr(el, "from"), _attr(el, "to"),
                delta_p_min=_quantity(el, "pressureDifferentialMin", "pressure",
                                      required=False, default=0.0),
                delta_p_max=_quantity(el, "pressureDifferentialMax", "pressure"),
                f_min=_flow_bound(el, "flowMin", gas),
                f_max=_flow_bound(el, "flowMax", gas)))
        elif kind == "compressorStation":
            cid = _attr(el, "id")
            frm, to = _attr(el, "from"), _attr(el, "to")
            a_min = _quantity(el, "alphaMin", "plain", required=False, default=1.0)
            a_max = _quantity(el, "alphaMax", "plain", required=False)
            if a_max is None:
                # fall back to the widest ratio the endpoint bounds allow
                lo_i = node_bounds.get(frm, (1.0, 1.0))[0]
                hi_j = node_bounds.get(to, (1.0, 1.0))[1]
                a_max = max(1.0, hi_j / lo_i)
            compressors.append(Compressor(
                cid, frm, to, alpha_min=a_min, alpha_max=a_max,
                f_min=_flow_bound(el, "flowMin", gas),
                f_max=_flow_bound(el, "flowMax", gas)))
        else:
            log.warning("ignoring unknown connection element <%s>", kind)

    title = "gaslib-import"
    for ch in root.iter():
        if _local(ch.tag) == "title" and ch.text:
            title = ch.text.strip()
            break
    return Network(nodes=nodes, pipes=pipes, short_pipes=short_pipes,
                   resistors=resistors, loss_resistors=loss_resistors,
                   compressors=compressors, valves=valves,
                   control_valves=control_valves, injections=injections,
                   withdrawals=withdrawals, gas=gas, name=title)


def _flow_bound(el: ET.Element, name: str, gas: GasConstants) -> float | None:
    raw = _quantity(el, name, "flow", required=False)
    return None if raw is None else flow_to_kgps(raw, gas)


def parse_network(text: str, fmt: str) -> Network:
    """Dispatch on format: "gaslib-xml" or "json"."""
    if fmt in ("json", "canonical-json"):
        return network_from_json(text)
    if fmt in ("gaslib-xml", "xml"):
        return parse_network_xml(text)
    raise ParseError(f"unknown network format {fmt!r}")


# -- decision groups ------------------------------------------------------

_STATUS_WORDS = {"open": ("open", None), "closed": ("closed", None),
                 "1": ("open", None), "0": ("closed", None),
                 "active": ("open", "active"), "bypass": ("open", "bypass")}


def parse_decision_groups_xml(text: str, network: Network) -> list[DecisionGroup]:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise ParseError(f"malformed XML: {exc}") from exc
    compressor_ids = {c.id for c in network.compressors}
    groups: list[DecisionGroup] = []
    for gel in root.iter():
        if _local(gel.tag) != "decisionGroup":
            continue
        gid = gel.attrib.get("id", f"group{len(groups)}")
        modes: list[OperationMode] = []
        arcs: set[str] = set()
        for mel in gel:
            if _local(mel.tag) not in ("decision", "decisions"):
                continue
            status: dict[str, str] = {}
            direction: dict[str, int] = {}
            sub_mode: dict[str, str] = {}
            for ael in mel:
                aid = _attr(ael, "id")
                if aid not in network.arc_by_id:
                    raise ParseError(f"decision group {gid!r} references unknown "
                                     f"arc {aid!r}")
                word = ael.attrib.get("value", "open")
                if word not in _STATUS_WORDS:
                    raise ParseError(f"decision group {gid!r}: unknown state "
                                     f"{word!r} for arc {aid!r}")
                st, sm = _STATUS_WORDS[word]
                status[aid] = st
                if sm:
                    sub_mode[aid] = sm
                if "flowDirection" in ael.attrib:
                    direction[aid] = int(ael.attrib["flowDirection"])
                arcs.add(aid)
                if (sm == "active" and aid in compressor_ids
                        and direction.get(aid, 0) == -1):
                    raise ParseError(f"decision group {gid!r}: compressor {aid!r} "
                                     "cannot be active against its flow direction")
            modes.append(OperationMode(status=status, direction=direction,
                                       sub_mode=sub_mode))
        if not modes:
            raise ParseError(f"decision group {gid!r} has no operation modes")
        ordered = tuple(sorted(arcs))
        full_modes = []
        for m in modes:
            st = {a: m.status.get(a, "closed") for a in ordered}
            full_modes.append(OperationMode(status=st, direction=m.direction,
                                            sub_mode=m.sub_mode))
        groups.append(DecisionGroup(gid, ordered, tuple(full_modes)))
    return groups


def parse_decision_groups(text: str, network: Network) -> list[DecisionGroup]:
    """Decision groups from GasLib-style XML or the canonical JSON schema."""
    head = text.lstrip()[:1]
    if head == "{":
        doc = json.loads(text)
        net = network_from_json(json.dumps({
            "schema": NET_SCHEMA, "nodes": [], "gas": asdict(network.gas),
            "decision_groups": doc.get("decision_groups", doc.get("groups", [])),
        }))
        groups = list(net.decision_groups)
        for g in groups:
            if not g.modes:
                raise ParseError(f"decision group {g.id!r} has no operation modes")
            for a in g.arcs:
                if a not in network.arc_by_id:
                    raise ParseError(f"decision group {g.id!r} references unknown "
                                     f"arc {a!r}")
        return groups
    return parse_decision_groups_xml(text, network)


# -- nominations ----------------------------------------------------------


def parse_nomination(text: str, network: Network, cost_seed: int = 0,
                     uplift: float = INJECTION_UPLIFT,
                     nomination_id: str | None = None) -> Nomination:
    """Per-instance demands from canonical JSON or a GasLib .scn scenario.

    Parsed injection capacities get `uplift` headroom, and injections with
    no cost data draw one uniformly from [1, 5) with the given seed.  A
    total withdrawal above the total (uplifted) capacity only warns; the
    instance is then expected to come back infeasible from the solver.
    """
    head = text.lstrip()[:1]
    if head == "{":
        doc = json.loads(text)
        nid = nomination_id or doc.get("id", "nomination")
        withdrawals = {str(k): float(v) for k, v in doc.get("withdrawals", {}).items()}
        inj_docs = {str(k): dict(v) for k, v in doc.get("injections", {}).items()}
        feasible_obj = doc.get("feasible_objective")
    else:
        nid, withdrawals, inj_docs = _parse_scn(text, network)
        nid = nomination_id or nid
        feasible_obj = None

    for key in withdrawals:
        if key not in network.withdrawal_by_id:
            raise ParseError(f"nomination references unknown withdrawal {key!r}")
    rng = np.random.default_rng(cost_seed)
    injections: dict[str, NominationInjection] = {}
    for key in sorted(inj_docs):
        if key not in network.injection_by_id:
            raise ParseError(f"nomination references unknown injection {key!r}")
        doc_i = inj_docs[key]
        s_max = float(doc_i["s_max"]) * uplift
        cost = doc_i.get("cost")
        if cost is None:
            cost = float(rng.uniform(1.0, 5.0))
        injections[key] = NominationInjection(s_max=s_max, cost=float(cost))

    total_d = sum(withdrawals.values())
    total_s = sum(injections[s.id].s_max if s.id in injections else s.s_max
                  for s in network.injections)
    if total_d > total_s:
        log.warning("nomination %s withdraws %.6g against capacity %.6g; "
                    "the instance may be infeasible", nid, total_d, total_s)
    return Nomination(nid, withdrawals, injections, seed=cost_seed,
                      feasible_objective=None if feasible_obj is None
                      else float(feasible_obj))


def _parse_scn(text: str, network: Network):
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise ParseError(f"malformed XML: {exc}") from exc
    scen = None
    for el in root.iter():
        if _local(el.tag) == "scenario":
            scen = el
            break
    if scen is None:
        raise ParseError("no scenario element found")
    nid = scen.attrib.get("id", "scenario")
    withdrawals: dict[str, float] = {}
    inj_docs: dict[str, dict] = {}
    for el in scen:
        if _local(el.tag) != "node":
            continue
        ntype = _attr(el, "type")
        node_id = _attr(el, "id")
        flows = {ch.attrib.get("bound", "both"): float(_attr(ch, "value"))
                 for ch in el if _local(ch.tag) == "flow"}
        if not flows:
            raise ParseError(f"scenario node {node_id!r} has no flow element")
        if ntype == "entry":
            cap = flows.get("upper", flows.get("both", 0.0))
            for inj in network.injections_at(node_id):
                inj_docs[inj.id] = {"s_max": flow_to_kgps(cap, network.gas)}
        elif ntype == "exit":
            d = flows.get("both", flows.get("upper", 0.0))
            for w in network.withdrawals_at(node_id):
                withdrawals[w.id] = flow_to_kgps(d, network.gas)
        else:
            log.warning("ignoring scenario node %r of type %r", node_id, ntype)
    return nid, withdrawals, inj_docs


def nomination_to_json(nom: Nomination) -> str:
    doc = {
        "id": nom.id,
        "withdrawals": dict(nom.withdrawals),
        "injections": {k: {"s_max": v.s_max, "cost": v.cost}
                       for k, v in nom.injections.items()},
        "seed": nom.seed,
    }
    if nom.feasible_objective is not None:
        doc["feasible_objective"] = nom.feasible_objective
    return json.dumps(doc, indent=1, sort_keys=True)


__all__ = [
    "ParseError", "NET_SCHEMA", "INJECTION_UPLIFT", "norm_density",
    "flow_to_kgps", "network_to_json", "network_from_json", "parse_network",
    "parse_network_xml", "parse_decision_groups", "parse_nomination",
    "nomination_to_json",
]
