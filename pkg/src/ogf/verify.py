"""Physics verification of solutions, error sweeps and the batch runner.

Relaxation solutions satisfy their model rows by construction; what they
may violate is the nonlinear physics those rows approximate.  `residuals`
recomputes every nonlinear and mode-logic constraint from a solution's
variable values and reports signed defects keyed by constraint family, so
a tight relaxation shows up as a verdict of feasible at tolerance and a
loose one as a quantified violation.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import eos
from .eos import NondimContext
from .formulation import FormulationOptions, Nomination, build
from .network import Network
from .solver import SolveOptions, outer_approx_misoc, solve_milp

log = logging.getLogger("ogf.verify")

REPORT_SCHEMA = "ogf-report/1"
DEFAULT_TOLERANCE = 1e-6


@dataclass
class VerificationReport:
    residuals: dict[str, list[tuple[str, float]]]
    tolerance: float
    relative_gap_pct: float | None = None

    @property
    def max_abs_residual(self) -> float:
        worst = 0.0
        for entries in self.residuals.values():
            for _, r in entries:
                worst = max(worst, abs(r))
        return worst

    @property
    def feasible(self) -> bool:
        return self.max_abs_residual <= self.tolerance

    def worst(self, tag: str) -> float:
        return max((abs(r) for _, r in self.residuals.get(tag, [])), default=0.0)

    def to_json(self) -> str:
        return json.dumps({
            "schema": REPORT_SCHEMA,
            "tolerance": self.tolerance,
            "feasible": self.feasible,
            "max_abs_residual": self.max_abs_residual,
            "relative_gap_pct": self.relative_gap_pct,
            "residuals": {tag: [[eid, r] for eid, r in entries]
                          for tag, entries in sorted(self.residuals.items())},
        }, indent=1)


def _value(values: dict[str, float], name: str) -> float:
    try:
        return values[name]
    except KeyError:
        raise KeyError(f"solution is missing variable {name!r}") from None


def _sign(x: float) -> float:
    return 0.0 if x == 0.0 else math.copysign(1.0, x)


def residuals(network: Network, ctx: NondimContext, values: dict[str, float],
              tolerance: float = DEFAULT_TOLERANCE,
              nomination: Nomination | None = None) -> VerificationReport:
    """Evaluate every nonlinear and mode-logic constraint at a solution.

    `values` holds dimensionless variable values named as the model builder
    names them.  Binary values are rounded before mode logic is checked,
    and `nomination` supplies per-instance demand overrides when the model
    was built with one.
    """
    out: dict[str, list[tuple[str, float]]] = {}

    def demand_of(w) -> float:
        if nomination and w.id in nomination.withdrawals:
            return nomination.withdrawals[w.id]
        return w.d

    def smax_of(s) -> float:
        if nomination and s.id in nomination.injections:
            return nomination.injections[s.id].s_max
        return s.s_max

    def put(tag: str, eid: str, r: float):
        out.setdefault(tag, []).append((eid, float(r)))

    def pres(node_id: str) -> float:
        return _value(values, f"p[{node_id}]")

    def pot(node_id: str) -> float:
        return _value(values, f"pot[{node_id}]")

    def flow(arc_id: str) -> float:
        return _value(values, f"f[{arc_id}]")

    def binary(name: str) -> int:
        return int(round(_value(values, name)))

    for n in network.nodes:
        p = pres(n.id)
        put("node.potential", n.id, pot(n.id) - eos.potential(p, ctx))
        pl, pu = ctx.nd_pressure(n.p_min), ctx.nd_pressure(n.p_max)
        put("node.pressure_bounds", n.id, max(0.0, pl - p, p - pu))

    for n in network.nodes:
        in_arcs, out_arcs = network.incidence(n.id)
        acc = sum(flow(a) for a in in_arcs) - sum(flow(a) for a in out_arcs)
        acc += sum(_value(values, f"s[{s.id}]") for s in network.injections_at(n.id))
        acc -= sum(ctx.nd_flow(demand_of(w)) for w in network.withdrawals_at(n.id))
        put("node.balance", n.id, acc)

    def flow_box(arc) -> tuple[float, float]:
        lo, hi = network.flow_bounds(arc)
        return ctx.nd_flow(lo), ctx.nd_flow(hi)

    for p_ in network.pipes:
        f = flow(p_.id)
        beta = eos.pipe_resistance(p_, ctx)
        put("pipe.potential_drop", p_.id,
            pot(p_.to_node) - pot(p_.from_node) + beta * f * abs(f))
        lo, hi = flow_box(p_)
        put("pipe.flow_bounds", p_.id, max(0.0, lo - f, f - hi))

    for r_ in network.resistors:
        f = flow(r_.id)
        kappa = eos.resistor_coefficient(r_, ctx)
        put("resistor.potential_drop", r_.id,
            pot(r_.from_node) - pot(r_.to_node) - kappa * f * abs(f))
        lo, hi = flow_box(r_)
        put("resistor.flow_bounds", r_.id, max(0.0, lo - f, f - hi))

    for sp in network.short_pipes:
        put("short_pipe.potential_eq", sp.id,
            pot(sp.to_node) - pot(sp.from_node))
        f = flow(sp.id)
        lo, hi = flow_box(sp)
        put("short_pipe.flow_bounds", sp.id, max(0.0, lo - f, f - hi))

    for lr in network.loss_resistors:
        f = flow(lr.id)
        dp = ctx.nd_pressure(lr.delta_p)
        put("loss_resistor.pressure_drop", lr.id,
            pres(lr.from_node) - pres(lr.to_node) - dp * _sign(f))
        lo, hi = flow_box(lr)
        put("loss_resistor.flow_bounds", lr.id, max(0.0, lo - f, f - hi))

    for c in network.compressors:
        f = flow(c.id)
        x = binary(f"x[{c.id}]")
        xac = binary(f"xac[{c.id}]")
        xbp = binary(f"xbp[{c.id}]")
        put("compressor.mode_sum", c.id, x - xac - xbp)
        pi, pj = pres(c.from_node), pres(c.to_node)
        lo, hi = flow_box(c)
        if x == 0:
            put("compressor.mode", c.id, abs(f))
        elif xbp == 1:
            put("compressor.mode", c.id,
                max(abs(pi - pj), max(0.0, lo - f, f - hi)))
        else:  # active
            viol = max(0.0, -f, f - hi,
                       c.alpha_min * pi - pj, pj - c.alpha_max * pi)
            put("compressor.mode", c.id, viol)

    for v in network.valves:
        f = flow(v.id)
        x = binary(f"x[{v.id}]")
        pi, pj = pres(v.from_node), pres(v.to_node)
        lo, hi = flow_box(v)
        if x == 0:
            cap = (ctx.nd_pressure(v.delta_p_max) if v.delta_p_max is not None
                   else math.inf)
            put("valve.mode", v.id, max(abs(f), abs(pi - pj) - cap, 0.0)
                if cap < math.inf else abs(f))
        else:
            put("valve.mode", v.id,
                max(abs(pi - pj), max(0.0, lo - f, f - hi)))

    for cv in network.control_valves:
        f = flow(cv.id)
        x = binary(f"x[{cv.id}]")
        xac = binary(f"xac[{cv.id}]")
        xbp = binary(f"xbp[{cv.id}]")
        put("control_valve.mode_sum", cv.id, x - xac - xbp)
        pi, pj = pres(cv.from_node), pres(cv.to_node)
        lo, hi = flow_box(cv)
        if x == 0:
            put("control_valve.mode", cv.id, abs(f))
        elif xbp == 1:
            put("control_valve.mode", cv.id,
                max(abs(pi - pj), max(0.0, lo - f, f - hi)))
        else:
            d_min = ctx.nd_pressure(cv.delta_p_min)
            d_max = ctx.nd_pressure(cv.delta_p_max)
            viol = max(0.0, -f, f - hi,
                       d_min - (pi - pj), (pi - pj) - d_max)
            put("control_valve.mode", cv.id, viol)

    for s in network.injections:
        sv = _value(values, f"s[{s.id}]")
        put("injection.limit", s.id,
            max(0.0, -sv, sv - ctx.nd_flow(smax_of(s))))

    for g in network.decision_groups:
        sm = [binary(f"sm[{g.id}:{k}]") for k in range(len(g.modes))]
        put("group.mode_choice", g.id, sum(sm) - 1)
        if sum(sm) != 1:
            continue
        mode = g.modes[sm.index(1)]
        worst = 0.0
        for a in g.arcs:
            xa = binary(f"x[{a}]")
            want_open = mode.status.get(a) == "open"
            if xa != (1 if want_open else 0):
                worst = max(worst, 1.0)
            d = mode.direction.get(a, 0)
            if d:
                worst = max(worst, max(0.0, -d * flow(a)))
            sub = mode.sub_mode.get(a)
            if sub == "active" and binary(f"xac[{a}]") != 1:
                worst = max(worst, 1.0)
            if sub == "bypass" and binary(f"xbp[{a}]") != 1:
                worst = max(worst, 1.0)
        put("group.mode", g.id, worst)

    return VerificationReport(out, tolerance)


def relative_gap(z_relax: float, z_feasible: float) -> float:
    """Gap in percent of the relaxation bound, 100 (z_f - z_r)/|z_r|."""
    if z_relax == 0.0:
        if z_feasible == 0.0:
            return 0.0
        raise ValueError("relative gap undefined: relaxation objective is zero")
    return 100.0 * (z_feasible - z_relax) / abs(z_relax)


# -- resistor model error sweep -------------------------------------------


def _grid_shape(points: int) -> tuple[int, int]:
    """Split a point budget into (pressure levels, flow levels)."""
    n_f = max(2, int(round(math.sqrt(points * 1.25))))
    n_p = max(1, points // n_f)
    while n_p * n_f != points and n_f > 2:
        n_f -= 1
        n_p = max(1, points // n_f)
    return n_p, points // n_p


def _standard_outlet(p_in: float, f: float, kappa: float,
                     ctx: NondimContext) -> float | None:
    """Outlet pressure of the density-weighted drop model."""
    if f >= 0.0:
        rho = eos.density(p_in, ctx)
        if rho <= 0.0:
            return None
        return p_in - kappa * f * f / rho
    # reverse flow: kappa f^2 = rho(p_out) (p_out - p_in), cubic in p_out
    target = kappa * f * f

    def g(p):
        return eos.density(p, ctx) * (p - p_in) - target

    lo, hi = p_in, max(2.0 * p_in, p_in + 1.0)
    for _ in range(200):
        if g(hi) >= 0.0:
            break
        hi *= 2.0
    else:
        return None
    p = 0.5 * (lo + hi)
    for _ in range(200):
        val = g(p)
        if abs(val) <= 1e-14 * max(1.0, target):
            return p
        dg = (eos.density(p, ctx) + (ctx.b1n + 2.0 * ctx.b2n * p) * (p - p_in))
        nxt = p - val / dg if dg > 0 else None
        if nxt is None or not (lo <= nxt <= hi):
            nxt = 0.5 * (lo + hi)
        if val > 0:
            hi = p
        else:
            lo = p
        p = nxt
    return p


def _simplified_outlet(p_in: float, f: float, kappa: float,
                       ctx: NondimContext) -> float | None:
    """Outlet pressure of the potential-difference drop model."""
    target = eos.potential(p_in, ctx) - kappa * f * abs(f)
    if target < 0.0:
        return None
    hi = max(2.0 * p_in, p_in + 1.0)
    while eos.potential(hi, ctx) < target:
        hi *= 2.0
    return eos.inverse_potential(target, ctx, lo=0.0, hi=hi)


def resistor_error_sweep(network: Network, arc_id: str, points: int = 500,
                         l0: float = 1000.0, p0: float = 5e6,
                         v0: float = 1.0) -> list[dict]:
    """Outlet-pressure disagreement between the two resistor drop models.

    Sweeps a grid of inlet pressures and flows within the operating limits
    of the given resistor, solving the outlet pressure under the standard
    density-weighted model and under the potential-difference model, once
    per equation of state.  Returns `points` rows for each.
    """
    arc = network.arc_by_id.get(arc_id)
    if arc is None or arc.kind != "resistor":
        raise ValueError(f"{arc_id!r} is not a resistor in this network")
    node = network.node_by_id[arc.from_node]
    to_node = network.node_by_id[arc.to_node]
    n_p, n_f = _grid_shape(points)
    flo, fhi = network.flow_bounds(arc)
    rows: list[dict] = []
    for label, ideal in (("cnga", False), ("ideal", True)):
        ctx = eos.build_context(network, l0=l0, p0=p0, v0=v0, ideal_eos=ideal)
        kappa = eos.resistor_coefficient(arc, ctx)
        p_grid = np.linspace(ctx.nd_pressure(node.p_min),
                             ctx.nd_pressure(node.p_max), n_p)
        f_grid = np.linspace(ctx.nd_flow(flo), ctx.nd_flow(fhi), n_f)
        if flo <= 0.0 <= fhi:
            # pin one level to exactly zero so the zero-flow row is exact
            f_grid[np.argmin(np.abs(f_grid))] = 0.0
        p_lo_out = ctx.nd_pressure(to_node.p_min)
        p_hi_out = ctx.nd_pressure(to_node.p_max)
        for p_in in p_grid:
            for f in f_grid:
                if f == 0.0:
                    std = apx = float(p_in)
                else:
                    std = _standard_outlet(float(p_in), float(f), kappa, ctx)
                    apx = _simplified_outlet(float(p_in), float(f), kappa, ctx)
                ok = (std is not None and apx is not None
                      and p_lo_out - 1e-9 <= std <= p_hi_out + 1e-9)
                rows.append({
                    "eos": label,
                    "p_in": float(p_in),
                    "flow": float(f),
                    "p_out_standard": std if std is not None else math.nan,
                    "p_out_simplified": apx if apx is not None else math.nan,
                    "rel_error": (abs(std - apx) / std if ok else math.nan),
                    "status": "ok" if ok else "infeasible",
                })
    return rows


SWEEP_COLUMNS = ["eos", "p_in", "flow", "p_out_standard", "p_out_simplified",
                 "rel_error", "status"]


def sweep_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write(f"# {REPORT_SCHEMA} resistor-sweep\n")
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS)
    w.writeheader()
    for row in rows:
        w.writerow({k: row[k] for k in SWEEP_COLUMNS})
    return buf.getvalue()


# -- batch runner ----------------------------------------------------------


@dataclass
class BatchRow:
    instance: str
    status: str
    time_sec: float
    objective: float | None
    bound: float | None
    rel_gap_pct: float | None
    message: str = ""


@dataclass
class BatchResult:
    rows: list[BatchRow] = field(default_factory=list)

    def aggregates(self) -> dict[str, dict[str, float]]:
        times = [r.time_sec for r in self.rows]
        gaps = [r.rel_gap_pct for r in self.rows if r.rel_gap_pct is not None]
        out: dict[str, dict[str, float]] = {}
        for name, vals in (("time_sec", times), ("rel_gap_pct", gaps)):
            if vals:
                arr = np.asarray(vals, dtype=float)
                out[name] = {"min": float(arr.min()), "max": float(arr.max()),
                             "mean": float(arr.mean()), "std": float(arr.std())}
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# {REPORT_SCHEMA} batch\n")
        cols = ["instance", "status", "time_sec", "objective", "bound",
                "rel_gap_pct", "message"]
        w = csv.DictWriter(buf, fieldnames=cols)
        w.writeheader()
        for r in self.rows:
            w.writerow({c: getattr(r, c) for c in cols})
        for stat_name, stats in self.aggregates().items():
            for agg in ("min", "max", "mean", "std"):
                w.writerow({"instance": f"aggregate:{agg}", "status": stat_name,
                            "time_sec": stats[agg] if stat_name == "time_sec" else "",
                            "rel_gap_pct": stats[agg] if stat_name == "rel_gap_pct" else ""})
        return buf.getvalue()


def _run_instance(network: Network, nom: Nomination, ctx: NondimContext,
                  options: FormulationOptions, solve_options: SolveOptions) -> BatchRow:
    t0 = time.perf_counter()
    try:
        model = build(network, nom, ctx, options)
        if options.relaxation == "misoc":
            sol = outer_approx_misoc(model, solve_options)
        elif options.relaxation == "lr":
            sol = solve_milp(model, solve_options)
        else:
            raise ValueError("batch runs solve relaxations; use lr or misoc")
        gap = None
        if (sol.status == "optimal" and nom.feasible_objective is not None):
            gap = relative_gap(sol.objective, nom.feasible_objective)
        elif sol.status == "optimal" and sol.objective == 0.0:
            gap = 0.0
        return BatchRow(nom.id, sol.status, time.perf_counter() - t0,
                        sol.objective, sol.bound, gap)
    except Exception as exc:  # per-instance failures must not kill the batch
        log.exception("instance %s failed", nom.id)
        return BatchRow(nom.id, "error", time.perf_counter() - t0,
                        None, None, None, message=str(exc))


def run_batch(network: Network, nominations: list[Nomination], ctx: NondimContext,
              options: FormulationOptions | None = None,
              solve_options: SolveOptions | None = None,
              workers: int = 1) -> BatchResult:
    """Solve one relaxation per nomination and tabulate the outcomes.

    Instances run independently against the shared immutable network (a
    worker pool above 1 runs them concurrently); rows come back sorted by
    instance id regardless of completion order.
    """
    options = options or FormulationOptions()
    solve_options = solve_options or SolveOptions()
    noms = sorted(nominations, key=lambda n: n.id)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(
                lambda nm: _run_instance(network, nm, ctx, options, solve_options),
                noms))
    else:
        rows = [_run_instance(network, nm, ctx, options, solve_options)
                for nm in noms]
    rows.sort(key=lambda r: r.instance)
    return BatchResult(rows)


__all__ = [
    "VerificationReport", "residuals", "relative_gap", "resistor_error_sweep",
    "sweep_to_csv", "BatchRow", "BatchResult", "run_batch",
    "REPORT_SCHEMA", "DEFAULT_TOLERANCE", "SWEEP_COLUMNS",
]
