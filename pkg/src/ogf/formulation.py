"""Build optimization models from a network, demands and a scaling context.

Three variants share all linear machinery (nodal balance, active-arc mode
logic with bound-derived big-M constants, decision-group restrictions,
loss-resistor direction binaries):

- "minlp": the nonlinear node potential and friction-drop equations ride
  along symbolically; only the JSON export can carry this variant.
- "lr": every nonlinear univariate term is replaced by the lambda-form
  convex hull of its tangent/secant triangle relaxation.
- "misoc": friction drops are lifted with a squared-flow variable under a
  quadratic epigraph row plus an exact McCormick product with the flow
  direction binary; node potentials reuse the lambda-form hull.

All quantities entering a model are dimensionless; the scaling context is
recorded in the model metadata so downstream verification can undo it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from . import eos, polyrelax
from .network import Network, validate
from .optmodel import OptModel

log = logging.getLogger("ogf.formulation")

RELAXATIONS = ("minlp", "lr", "misoc")


class BuildError(ValueError):
    pass


@dataclass(frozen=True)
class FormulationOptions:
    relaxation: str = "lr"
    refine_rounds: int = 0
    refine_scheme: str = "bisect-all"
    ideal_eos: bool = False
    speed_cap: float = 60.0  # m/s, caps missing flow bounds

    def __post_init__(self):
        if self.relaxation not in RELAXATIONS:
            raise ValueError(f"relaxation must be one of {RELAXATIONS}")
        if self.refine_rounds < 0:
            raise ValueError("refine_rounds must be nonnegative")


@dataclass(frozen=True)
class NominationInjection:
    s_max: float
    cost: float


@dataclass(frozen=True)
class Nomination:
    """Per-instance demand data overriding the network's stored points.

    `feasible_objective` optionally carries an externally computed cost of
    a point satisfying the full nonlinear model, enabling gap reporting.
    """

    id: str
    withdrawals: dict[str, float] = field(default_factory=dict)
    injections: dict[str, NominationInjection] = field(default_factory=dict)
    seed: int | None = None
    feasible_objective: float | None = None


class _Builder:
    def __init__(self, network: Network, nomination: Nomination | None,
                 ctx: eos.NondimContext, options: FormulationOptions):
        self.net = network
        self.nom = nomination
        self.ctx = ctx
        self.opt = options
        self.model = OptModel(f"{network.name}-{options.relaxation}")
        self.lambda_blocks: dict[str, dict] = {}

    # -- data access -----------------------------------------------------

    def pressure_bounds(self, node_id: str) -> tuple[float, float]:
        n = self.net.node_by_id[node_id]
        return self.ctx.nd_pressure(n.p_min), self.ctx.nd_pressure(n.p_max)

    def flow_bounds(self, arc, widen_to_zero: bool) -> tuple[float, float]:
        lo, hi = self.net.flow_bounds(arc, v_cap=self.opt.speed_cap)
        lo, hi = self.ctx.nd_flow(lo), self.ctx.nd_flow(hi)
        if lo > hi:
            raise BuildError(f"arc {arc.id!r} has inconsistent flow bounds "
                             f"({lo} > {hi} after scaling)")
        if widen_to_zero:
            # mode logic can force f = 0, so the variable box must allow it
            return min(lo, 0.0), max(hi, 0.0)
        return lo, hi

    def demand(self, withdrawal) -> float:
        if self.nom and withdrawal.id in self.nom.withdrawals:
            return self.ctx.nd_flow(self.nom.withdrawals[withdrawal.id])
        return self.ctx.nd_flow(withdrawal.d)

    def supply(self, injection) -> tuple[float, float]:
        if self.nom and injection.id in self.nom.injections:
            spec = self.nom.injections[injection.id]
            return self.ctx.nd_flow(spec.s_max), spec.cost
        return self.ctx.nd_flow(injection.s_max), injection.cost

    # -- lambda machinery --------------------------------------------------

    def add_lambda_block(self, key: str, spec: polyrelax.UnivariateSpec,
                         x_var: str, y_var: str, tag_prefix: str) -> None:
        relax = polyrelax.build_relaxation(spec)
        if self.opt.refine_rounds:
            relax = polyrelax.refine(spec, relax, self.opt.refine_scheme,
                                     self.opt.refine_rounds)
        lam = [self.model.add_variable(f"lam[{key}:{k}]", 0.0, 1.0,
                                       tag=f"{tag_prefix}.hull")
               for k in range(len(relax.vertices))]
        xs = {x_var: 1.0}
        ys = {y_var: 1.0}
        ones = {}
        for j, (wx, wy) in zip(lam, relax.vertices):
            xs[j] = -wx
            ys[j] = -wy
            ones[j] = 1.0
        self.model.add_constraint(xs, "==", 0.0, f"{tag_prefix}.x[{key}]",
                                  tag=f"{tag_prefix}.x")
        self.model.add_constraint(ys, "==", 0.0, f"{tag_prefix}.y[{key}]",
                                  tag=f"{tag_prefix}.y")
        self.model.add_constraint(ones, "==", 1.0, f"{tag_prefix}.hull[{key}]",
                                  tag=f"{tag_prefix}.hull")
        self.lambda_blocks[key] = {
            "x_var": x_var, "y_var": y_var,
            "lambda_vars": [self.model.variables[j].name for j in lam],
            "vertices": [list(v) for v in relax.vertices],
        }

    # -- components --------------------------------------------------------

    def add_nodes(self):
        for n in self.net.nodes:
            pl, pu = self.pressure_bounds(n.id)
            gl = eos.potential(pl, self.ctx)
            gu = eos.potential(pu, self.ctx)
            p = self.model.add_variable(f"p[{n.id}]", pl, pu, tag="node.pressure")
            pot = self.model.add_variable(f"pot[{n.id}]", gl, gu, tag="node.potential")
            if self.opt.relaxation == "minlp":
                self.model.add_nonlinear(
                    "potential",
                    {"p": f"p[{n.id}]", "pot": f"pot[{n.id}]"},
                    {"b1n": self.ctx.b1n, "b2n": self.ctx.b2n},
                    name=f"node.potential[{n.id}]", tag="node.potential")
            else:
                spec = polyrelax.cubic_potential_spec(self.ctx.b1n, self.ctx.b2n, pl, pu)
                self.add_lambda_block(n.id, spec, f"p[{n.id}]", f"pot[{n.id}]",
                                      "node.potential")

    def add_friction_arc(self, arc, coeff: float, kind: str):
        """Shared pipe/resistor model: potential drop = coeff * f|f|."""
        lo, hi = self.flow_bounds(arc, widen_to_zero=False)
        f = f"f[{arc.id}]"
        self.model.add_variable(f, lo, hi, tag=f"{kind}.flow")
        i, j = arc.from_node, arc.to_node
        drop = {f"pot[{j}]": 1.0, f"pot[{i}]": -1.0}
        if self.opt.relaxation == "minlp":
            self.model.add_nonlinear(
                "signed_square_drop",
                {"f": f, "pot_from": f"pot[{i}]", "pot_to": f"pot[{j}]"},
                {"coeff": coeff},
                name=f"{kind}.potential_drop[{arc.id}]", tag=f"{kind}.potential_drop")
        elif self.opt.relaxation == "lr":
            big = f"F[{arc.id}]"
            spec = polyrelax.signed_square_spec(lo, hi)
            # every hull vertex keeps f|f| within its endpoint values
            self.model.add_variable(big, lo * abs(lo), hi * abs(hi),
                                    tag=f"{kind}.flow_square")
            drop[big] = coeff
            self.model.add_constraint(drop, "==", 0.0,
                                      f"{kind}.potential_drop[{arc.id}]",
                                      tag=f"{kind}.potential_drop")
            self.add_lambda_block(arc.id, spec, f, big, f"{kind}.flow_square")
        else:  # misoc
            m2 = max(abs(lo), abs(hi)) ** 2
            fsq = self.model.add_variable(f"fsq[{arc.id}]", 0.0, m2,
                                          tag=f"{kind}.flow_square")
            gam = self.model.add_variable(f"gamma[{arc.id}]", -m2, m2,
                                          tag=f"{kind}.signed_square")
            if lo >= 0.0:
                xl, xu = 1.0, 1.0
            elif hi <= 0.0:
                xl, xu = 0.0, 0.0
            else:
                xl, xu = 0.0, 1.0
            x = self.model.add_variable(f"xdir[{arc.id}]", xl, xu, kind="binary",
                                        tag=f"{kind}.direction")
            drop[gam] = coeff
            self.model.add_constraint(drop, "==", 0.0,
                                      f"{kind}.potential_drop[{arc.id}]",
                                      tag=f"{kind}.potential_drop")
            self.model.add_cone(fsq, f, name=f"{kind}.cone[{arc.id}]",
                                tag=f"{kind}.cone")
            mc = f"{kind}.mccormick"
            self.model.add_constraint({gam: 1.0, fsq: 1.0}, ">=", 0.0,
                                      f"{mc}.a[{arc.id}]", tag=mc)
            self.model.add_constraint({gam: 1.0, fsq: -1.0}, "<=", 0.0,
                                      f"{mc}.b[{arc.id}]", tag=mc)
            self.model.add_constraint({gam: 1.0, fsq: -1.0, x: -2.0 * m2}, ">=",
                                      -2.0 * m2, f"{mc}.c[{arc.id}]", tag=mc)
            self.model.add_constraint({gam: 1.0, fsq: 1.0, x: -2.0 * m2}, "<=",
                                      0.0, f"{mc}.d[{arc.id}]", tag=mc)
            dtag = f"{kind}.direction"
            self.model.add_constraint({f: 1.0, x: lo}, ">=", lo,
                                      f"{dtag}.lb[{arc.id}]", tag=dtag)
            self.model.add_constraint({f: 1.0, x: -hi}, "<=", 0.0,
                                      f"{dtag}.ub[{arc.id}]", tag=dtag)

    def add_pipes(self):
        for p in self.net.pipes:
            self.add_friction_arc(p, eos.pipe_resistance(p, self.ctx), "pipe")

    def add_resistors(self):
        for r in self.net.resistors:
            self.add_friction_arc(r, eos.resistor_coefficient(r, self.ctx), "resistor")

    def add_short_pipes(self):
        for sp in self.net.short_pipes:
            lo, hi = self.flow_bounds(sp, widen_to_zero=False)
            self.model.add_variable(f"f[{sp.id}]", lo, hi, tag="short_pipe.flow")
            self.model.add_constraint(
                {f"pot[{sp.from_node}]": 1.0, f"pot[{sp.to_node}]": -1.0}, "==", 0.0,
                f"short_pipe.potential_eq[{sp.id}]", tag="short_pipe.potential_eq")

    def add_loss_resistors(self):
        for lr in self.net.loss_resistors:
            lo, hi = self.flow_bounds(lr, widen_to_zero=False)
            f = self.model.add_variable(f"f[{lr.id}]", lo, hi,
                                        tag="loss_resistor.flow")
            dp = self.ctx.nd_pressure(lr.delta_p)
            i, j = lr.from_node, lr.to_node
            diff = {f"p[{i}]": 1.0, f"p[{j}]": -1.0}
            if lo >= 0.0:
                self.model.add_constraint(diff, "==", dp,
                                          f"loss_resistor.pressure_drop[{lr.id}]",
                                          tag="loss_resistor.pressure_drop")
            elif hi <= 0.0:
                self.model.add_constraint(diff, "==", -dp,
                                          f"loss_resistor.pressure_drop[{lr.id}]",
                                          tag="loss_resistor.pressure_drop")
            else:
                x = self.model.add_variable(f"xdir[{lr.id}]", 0.0, 1.0,
                                            kind="binary", tag="loss_resistor.direction")
                diff[x] = -2.0 * dp
                self.model.add_constraint(diff, "==", -dp,
                                          f"loss_resistor.pressure_drop[{lr.id}]",
                                          tag="loss_resistor.pressure_drop")
                ftag = "loss_resistor.flow_onoff"
                self.model.add_constraint({f: 1.0, x: lo}, ">=", lo,
                                          f"{ftag}.lb[{lr.id}]", tag=ftag)
                self.model.add_constraint({f: 1.0, x: -hi}, "<=", 0.0,
                                          f"{ftag}.ub[{lr.id}]", tag=ftag)

    def _bypass_rows(self, arc, xbp, prefix: str):
        i, j = arc.from_node, arc.to_node
        pl_i, pu_i = self.pressure_bounds(i)
        pl_j, pu_j = self.pressure_bounds(j)
        k_lo = pl_i - pu_j
        k_hi = pu_i - pl_j
        self.model.add_constraint(
            {f"p[{i}]": 1.0, f"p[{j}]": -1.0, xbp: k_lo}, ">=", k_lo,
            f"{prefix}.bypass_lb[{arc.id}]", tag=f"{prefix}.bypass_lb")
        self.model.add_constraint(
            {f"p[{i}]": 1.0, f"p[{j}]": -1.0, xbp: k_hi}, "<=", k_hi,
            f"{prefix}.bypass_ub[{arc.id}]", tag=f"{prefix}.bypass_ub")

    def add_compressors(self):
        for c in self.net.compressors:
            lo, hi = self.flow_bounds(c, widen_to_zero=True)
            flo, fhi = self.flow_bounds(c, widen_to_zero=False)
            f = self.model.add_variable(f"f[{c.id}]", lo, hi, tag="compressor.flow")
            x = self.model.add_variable(f"x[{c.id}]", 0.0, 1.0, kind="binary",
                                        tag="compressor.status")
            xac = self.model.add_variable(f"xac[{c.id}]", 0.0, 1.0, kind="binary",
                                          tag="compressor.active")
            xbp = self.model.add_variable(f"xbp[{c.id}]", 0.0, 1.0, kind="binary",
                                          tag="compressor.bypass")
            self.model.add_constraint({x: 1.0, xac: -1.0, xbp: -1.0}, "==", 0.0,
                                      f"compressor.mode_sum[{c.id}]",
                                      tag="compressor.mode_sum")
            ftag = "compressor.flow_onoff"
            self.model.add_constraint({f: 1.0, x: -fhi}, "<=", 0.0,
                                      f"{ftag}.ub[{c.id}]", tag=ftag)
            self.model.add_constraint({f: 1.0, xbp: -flo}, ">=", 0.0,
                                      f"{ftag}.lb[{c.id}]", tag=ftag)
            i, j = c.from_node, c.to_node
            pl_i, pu_i = self.pressure_bounds(i)
            pl_j, pu_j = self.pressure_bounds(j)
            m_lb = c.alpha_min * pu_i - pl_j
            m_ub = pu_j - c.alpha_max * pl_i
            if m_lb < 0 or m_ub < 0:
                log.warning("compressor %s: bound-derived big-M was negative and "
                            "was clamped to zero", c.id)
            m_lb, m_ub = max(0.0, m_lb), max(0.0, m_ub)
            # p_j >= alpha_min p_i - (2 - xac - x) m_lb
            self.model.add_constraint(
                {f"p[{j}]": 1.0, f"p[{i}]": -c.alpha_min, xac: -m_lb, x: -m_lb},
                ">=", -2.0 * m_lb,
                f"compressor.boost_lb[{c.id}]", tag="compressor.boost_lb")
            # p_j <= alpha_max p_i + (2 - xac - x) m_ub
            self.model.add_constraint(
                {f"p[{j}]": 1.0, f"p[{i}]": -c.alpha_max, xac: m_ub, x: m_ub},
                "<=", 2.0 * m_ub,
                f"compressor.boost_ub[{c.id}]", tag="compressor.boost_ub")
            self._bypass_rows(c, xbp, "compressor")

    def add_valves(self):
        for v in self.net.valves:
            lo, hi = self.flow_bounds(v, widen_to_zero=True)
            flo, fhi = self.flow_bounds(v, widen_to_zero=False)
            f = self.model.add_variable(f"f[{v.id}]", lo, hi, tag="valve.flow")
            x = self.model.add_variable(f"x[{v.id}]", 0.0, 1.0, kind="binary",
                                        tag="valve.status")
            ftag = "valve.flow_onoff"
            self.model.add_constraint({f: 1.0, x: -fhi}, "<=", 0.0,
                                      f"{ftag}.ub[{v.id}]", tag=ftag)
            self.model.add_constraint({f: 1.0, x: -flo}, ">=", 0.0,
                                      f"{ftag}.lb[{v.id}]", tag=ftag)
            i, j = v.from_node, v.to_node
            pl_i, pu_i = self.pressure_bounds(i)
            pl_j, pu_j = self.pressure_bounds(j)
            if v.delta_p_max is not None:
                cap = self.ctx.nd_pressure(v.delta_p_max)
            else:
                # least restrictive valid cap: the closed-state difference can
                # reach either box corner
                cap = max(pu_i - pl_j, pu_j - pl_i, 0.0)
            diff = {f"p[{i}]": 1.0, f"p[{j}]": -1.0}
            self.model.add_constraint(dict(diff), "<=", cap,
                                      f"valve.dp_cap.ub[{v.id}]", tag="valve.dp_cap")
            self.model.add_constraint(dict(diff), ">=", -cap,
                                      f"valve.dp_cap.lb[{v.id}]", tag="valve.dp_cap")
            k_lo = pl_i - pu_j
            k_hi = pu_i - pl_j
            self.model.add_constraint({**diff, x: k_lo}, ">=", k_lo,
                                      f"valve.open_lb[{v.id}]", tag="valve.open_lb")
            self.model.add_constraint({**diff, x: k_hi}, "<=", k_hi,
                                      f"valve.open_ub[{v.id}]", tag="valve.open_ub")

    def add_control_valves(self):
        for cv in self.net.control_valves:
            lo, hi = self.flow_bounds(cv, widen_to_zero=True)
            flo, fhi = self.flow_bounds(cv, widen_to_zero=False)
            f = self.model.add_variable(f"f[{cv.id}]", lo, hi,
                                        tag="control_valve.flow")
            x = self.model.add_variable(f"x[{cv.id}]", 0.0, 1.0, kind="binary",
                                        tag="control_valve.status")
            xac = self.model.add_variable(f"xac[{cv.id}]", 0.0, 1.0, kind="binary",
                                          tag="control_valve.active")
            xbp = self.model.add_variable(f"xbp[{cv.id}]", 0.0, 1.0, kind="binary",
                                          tag="control_valve.bypass")
            self.model.add_constraint({x: 1.0, xac: -1.0, xbp: -1.0}, "==", 0.0,
                                      f"control_valve.mode_sum[{cv.id}]",
                                      tag="control_valve.mode_sum")
            ftag = "control_valve.flow_onoff"
            self.model.add_constraint({f: 1.0, x: -fhi}, "<=", 0.0,
                                      f"{ftag}.ub[{cv.id}]", tag=ftag)
            self.model.add_constraint({f: 1.0, xbp: -flo}, ">=", 0.0,
                                      f"{ftag}.lb[{cv.id}]", tag=ftag)
            i, j = cv.from_node, cv.to_node
            pl_i, pu_i = self.pressure_bounds(i)
            pl_j, pu_j = self.pressure_bounds(j)
            d_min = self.ctx.nd_pressure(cv.delta_p_min)
            d_max = self.ctx.nd_pressure(cv.delta_p_max)
            k_lo = pl_i - pu_j
            k_hi = pu_i - pl_j
            diff = {f"p[{i}]": 1.0, f"p[{j}]": -1.0}
            # active mode pins the reduction p_i - p_j into [d_min, d_max]
            self.model.add_constraint({**diff, xac: -(d_min - k_lo)}, ">=", k_lo,
                                      f"control_valve.active_lb[{cv.id}]",
                                      tag="control_valve.active_lb")
            self.model.add_constraint({**diff, xac: k_hi - d_max}, "<=", k_hi,
                                      f"control_valve.active_ub[{cv.id}]",
                                      tag="control_valve.active_ub")
            self._bypass_rows(cv, xbp, "control_valve")

    def add_decision_groups(self):
        for g in self.net.decision_groups:
            sm = [self.model.add_variable(f"sm[{g.id}:{k}]", 0.0, 1.0, kind="binary",
                                          tag="group.mode")
                  for k in range(len(g.modes))]
            self.model.add_constraint({v: 1.0 for v in sm}, "==", 1.0,
                                      f"group.mode_choice[{g.id}]",
                                      tag="group.mode_choice")
            compressor_ids = {c.id for c in self.net.compressors}
            for k, mode in enumerate(g.modes):
                for a in mode.open_arcs():
                    self.model.add_constraint({sm[k]: 1.0, f"x[{a}]": -1.0}, "<=", 0.0,
                                              f"group.mode_open[{g.id}:{k}:{a}]",
                                              tag="group.mode_open")
                for a in mode.closed_arcs():
                    self.model.add_constraint({sm[k]: 1.0, f"x[{a}]": 1.0}, "<=", 1.0,
                                              f"group.mode_closed[{g.id}:{k}:{a}]",
                                              tag="group.mode_closed")
                for a, sub in mode.sub_mode.items():
                    var = f"xac[{a}]" if sub == "active" else f"xbp[{a}]"
                    tag = f"group.mode_{sub}"
                    self.model.add_constraint({sm[k]: 1.0, var: -1.0}, "<=", 0.0,
                                              f"{tag}[{g.id}:{k}:{a}]", tag=tag)
                if any(mode.direction.get(a, 0) == -1 and a in compressor_ids
                       and mode.sub_mode.get(a) == "active"
                       for a in g.arcs):
                    raise BuildError(
                        f"group {g.id!r} drives compressor flow against compression")
            for a in g.arcs:
                dirs = [m.direction.get(a, 0) for m in g.modes]
                if not any(dirs):
                    continue
                arc = self.net.arc_by_id[a]
                flo, fhi = self.flow_bounds(arc, widen_to_zero=False)
                lo_row = {f"f[{a}]": 1.0}
                hi_row = {f"f[{a}]": 1.0}
                for k, d in enumerate(dirs):
                    if d:
                        lo_row[sm[k]] = flo * d
                        hi_row[sm[k]] = -fhi * d
                self.model.add_constraint(lo_row, ">=", flo,
                                          f"group.flow_dir.lb[{g.id}:{a}]",
                                          tag="group.flow_dir")
                self.model.add_constraint(hi_row, "<=", fhi,
                                          f"group.flow_dir.ub[{g.id}:{a}]",
                                          tag="group.flow_dir")

    def add_balance_and_objective(self):
        for s in self.net.injections:
            smax, _ = self.supply(s)
            self.model.add_variable(f"s[{s.id}]", 0.0, smax, tag="injection.rate")
        for n in self.net.nodes:
            in_arcs, out_arcs = self.net.incidence(n.id)
            row: dict[str, float] = {}
            for a in in_arcs:
                row[f"f[{a}]"] = row.get(f"f[{a}]", 0.0) + 1.0
            for a in out_arcs:
                row[f"f[{a}]"] = row.get(f"f[{a}]", 0.0) - 1.0
            demand = 0.0
            for s in self.net.injections_at(n.id):
                row[f"s[{s.id}]"] = 1.0
            for w in self.net.withdrawals_at(n.id):
                demand += self.demand(w)
            row = {k: v for k, v in row.items() if v != 0.0} or {f"p[{n.id}]": 0.0}
            self.model.add_constraint(row, "==", demand,
                                      f"node.balance[{n.id}]", tag="node.balance")
        for s in self.net.injections:
            _, cost = self.supply(s)
            # cost data is per SI flow unit; scale back so objectives stay in
            # data units no matter the nominal flow chosen
            self.model.add_objective_term(f"s[{s.id}]", cost * self.ctx.f0)

    def build(self) -> OptModel:
        report = validate(self.net)
        if not report.ok:
            msgs = "; ".join(f"{v.component}: {v.message}" for v in report.errors)
            raise BuildError(f"network failed validation: {msgs}")
        self.add_nodes()
        self.add_pipes()
        self.add_short_pipes()
        self.add_resistors()
        self.add_loss_resistors()
        self.add_compressors()
        self.add_valves()
        self.add_control_valves()
        self.add_balance_and_objective()
        self.add_decision_groups()
        self.model.meta = {
            "network": self.net.name,
            "relaxation": self.opt.relaxation,
            "refine_rounds": self.opt.refine_rounds,
            "refine_scheme": self.opt.refine_scheme,
            "ideal_eos": self.opt.ideal_eos,
            "nomination": self.nom.id if self.nom else None,
            "seed": self.nom.seed if self.nom else None,
            "nomination_data": None if self.nom is None else {
                "withdrawals": dict(self.nom.withdrawals),
                "injections": {k: {"s_max": v.s_max, "cost": v.cost}
                               for k, v in self.nom.injections.items()},
                "feasible_objective": self.nom.feasible_objective,
            },
            "context": {
                "l0": self.ctx.l0, "p0": self.ctx.p0, "v0": self.ctx.v0,
                "rho0": self.ctx.rho0, "f0": self.ctx.f0,
                "b1": self.ctx.b1, "b2": self.ctx.b2,
                "b1n": self.ctx.b1n, "b2n": self.ctx.b2n,
            },
            "lambda_blocks": self.lambda_blocks,
        }
        return self.model.freeze()


def build(network: Network, nomination: Nomination | None,
          ctx: eos.NondimContext, options: FormulationOptions | None = None) -> OptModel:
    """Assemble the optimization model for one demand instance.

    The network must pass validation.  `nomination` overrides stored
    withdrawal rates and injection capacities per instance and may be None
    to use the network's own values.
    """
    options = options or FormulationOptions()
    return _Builder(network, nomination, ctx, options).build()


def fix_discrete(model: OptModel, assignment: dict[str, float]) -> OptModel:
    """Pin a subset of binary variables to given 0/1 values."""
    out = model.copy()
    out.frozen = False
    for name, val in assignment.items():
        j = out.var_index(name)
        var = out.variables[j]
        if var.kind != "binary":
            raise ValueError(f"{name!r} is not a binary variable")
        if val not in (0, 1, 0.0, 1.0):
            raise ValueError(f"binary {name!r} can only be fixed to 0 or 1")
        var.lower = var.upper = float(val)
    if model.frozen:
        out.freeze()
    return out


__all__ = ["FormulationOptions", "Nomination", "NominationInjection",
           "BuildError", "build", "fix_discrete", "RELAXATIONS"]
