"""CPLEX-LP export of the topology design models.

Emits the joint weight/tree/assignment integer program for MTR, and its
virtual-topology extension where designed weights are linear combinations of
the base metric values. No solver is bundled: files are plain LP text for
any external MIP solver (see docs/ilp.md for the naming convention and a
solve recipe). Emission is deterministic: identical inputs give identical
bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import BudgetTooSmall
from .graph import OSPF_WEIGHT_MAX, Network
from .instances import InstanceSpec


@dataclass(frozen=True)
class IlpConfig:
    """Model-size and objective knobs.

    ``t_bar_max`` is the designed-topology variable budget. ``big_m`` guards
    the weight/potential coupling and must exceed any simple-path weight;
    ``None`` selects ``|V| * 65536``. ``penalty_real`` is the objective
    coefficient of real-topology activation in the virtual model.
    ``n_virtual`` splits the budget for the virtual model (defaults to all
    slots virtual). ``literal_ct3`` emits the topology-activation link
    exactly as printed in the source model, which restricts every topology
    to a single demand; the default scales the right-hand side by |K|.
    """

    t_bar_max: int
    big_m: float | None = None
    penalty_real: float = 1000.0
    n_virtual: int | None = None
    literal_ct3: bool = False

    def __post_init__(self):
        if self.t_bar_max < 1:
            raise ValueError("t_bar_max must be >= 1")
        if self.n_virtual is not None and not 0 <= self.n_virtual <= self.t_bar_max:
            raise ValueError("n_virtual must lie in [0, t_bar_max]")


def _resolve_big_m(net: Network, cfg: IlpConfig) -> float:
    if cfg.big_m is None:
        return float(net.n_nodes * (OSPF_WEIGHT_MAX + 1))
    if cfg.big_m <= net.n_nodes * OSPF_WEIGHT_MAX:
        raise ValueError(
            f"big_m must exceed |V|*{OSPF_WEIGHT_MAX} = "
            f"{net.n_nodes * OSPF_WEIGHT_MAX}"
        )
    return float(cfg.big_m)


def _num(x) -> str:
    if isinstance(x, int):
        return str(x)
    f = float(x)
    return repr(int(f)) if f.is_integer() else repr(f)


class _LpWriter:
    def __init__(self, name: str):
        self.header = [f"\\ topoforge {name}"]
        self.objective: list[str] = []
        self.constraints: list[str] = []
        self.binaries: list[str] = []

    def obj_term(self, coef, var: str) -> None:
        sign = "+" if coef >= 0 else "-"
        self.objective.append(f"{sign} {_num(abs(coef))} {var}")

    def constraint(self, name: str, terms: list[tuple], sense: str, rhs) -> None:
        body = " ".join(
            f"{'+' if c >= 0 else '-'} {_num(abs(c))} {v}" for c, v in terms
        )
        self.constraints.append(f" {name}: {body} {sense} {_num(rhs)}")

    def render(self) -> str:
        lines = list(self.header)
        lines.append("Minimize")
        lines.append(" obj: " + " ".join(self.objective))
        lines.append("Subject To")
        lines.extend(self.constraints)
        if self.binaries:
            lines.append("Binaries")
            for name in self.binaries:
                lines.append(f" {name}")
        lines.append("End")
        return "\n".join(lines) + "\n"


def _emit_core(
    writer: _LpWriter,
    inst: InstanceSpec,
    cfg: IlpConfig,
    topo_ids: list[int],
) -> None:
    """Common MTR constraints over the given designed-topology ids."""
    net = inst.network
    demands = inst.demands
    ms = inst.metrics
    dests = sorted({k.dst for k in demands})
    big_m = _resolve_big_m(net, cfg)

    for t in topo_ids:
        writer.binaries.append(f"z_t{t}")
    for k in demands:
        for t in topo_ids:
            writer.binaries.append(f"y_k{k.id}_t{t}")
    for a in net.arcs:
        for k in demands:
            for t in topo_ids:
                writer.binaries.append(f"x_a{a.id}_k{k.id}_t{t}")
    for a in net.arcs:
        for d in dests:
            for t in topo_ids:
                writer.binaries.append(f"u_a{a.id}_d{d}_t{t}")

    # Topology activation: demands may ride a topology only if it is deployed.
    for t in topo_ids:
        terms = [(1, f"y_k{k.id}_t{t}") for k in demands]
        scale = 1 if cfg.literal_ct3 else max(len(demands), 1)
        terms.append((-scale, f"z_t{t}"))
        writer.constraint(f"ct3_t{t}", terms, "<=", 0)

    # Each demand is assigned to at least one designed topology.
    for k in demands:
        terms = [(1, f"y_k{k.id}_t{t}") for t in topo_ids]
        writer.constraint(f"ct4_k{k.id}", terms, ">=", 1)

    # Flow conservation per node, demand and topology; vacuous at nodes
    # without incident arcs.
    for v in range(net.n_nodes):
        for k in demands:
            for t in topo_ids:
                terms = [(1, f"x_a{a.id}_k{k.id}_t{t}") for a in net.out_arcs[v]]
                terms += [(-1, f"x_a{a.id}_k{k.id}_t{t}") for a in net.in_arcs[v]]
                if v == k.src:
                    terms.append((-1, f"y_k{k.id}_t{t}"))
                elif v == k.dst:
                    terms.append((1, f"y_k{k.id}_t{t}"))
                if terms:
                    writer.constraint(f"ct5_v{v}_k{k.id}_t{t}", terms, "=", 0)

    # Routing arcs must lie on the destination's shortest-path arcs.
    for a in net.arcs:
        for k in demands:
            for t in topo_ids:
                writer.constraint(
                    f"ct6_a{a.id}_k{k.id}_t{t}",
                    [(1, f"x_a{a.id}_k{k.id}_t{t}"), (-1, f"u_a{a.id}_d{k.dst}_t{t}")],
                    "<=",
                    0,
                )

    # Tree out-degree: at most one outgoing tree arc per node and destination.
    for v in range(net.n_nodes):
        for d in dests:
            for t in topo_ids:
                terms = [(1, f"u_a{a.id}_d{d}_t{t}") for a in net.out_arcs[v]]
                if terms:
                    writer.constraint(f"ct7_v{v}_d{d}_t{t}", terms, "<=", 1)

    # Tree arcs must support some routed demand towards their destination.
    for a in net.arcs:
        for d in dests:
            for t in topo_ids:
                terms = [(1, f"u_a{a.id}_d{d}_t{t}")]
                terms += [
                    (-1, f"x_a{a.id}_k{k.id}_t{t}")
                    for k in demands
                    if k.dst == d
                ]
                writer.constraint(f"ct8_a{a.id}_d{d}_t{t}", terms, "<=", 0)

    # Weight/potential coupling: tree arcs are tight, others slack >= 1.
    for a in net.arcs:
        for d in dests:
            for t in topo_ids:
                base = [
                    (1, f"w_a{a.id}_t{t}"),
                    (-1, f"pi_v{a.tail}_d{d}_t{t}"),
                    (1, f"pi_v{a.head}_d{d}_t{t}"),
                ]
                writer.constraint(
                    f"ct9_a{a.id}_d{d}_t{t}",
                    base + [(1, f"u_a{a.id}_d{d}_t{t}")],
                    ">=",
                    1,
                )
                writer.constraint(
                    f"ct10_a{a.id}_d{d}_t{t}",
                    base + [(big_m, f"u_a{a.id}_d{d}_t{t}")],
                    "<=",
                    big_m,
                )

    # Resource bounds per demand and metric, active on assigned topologies.
    for k in demands:
        for q in range(ms.n_metrics):
            resource_cap = float(sum(Fraction(x) for x in ms.values[q]))
            guard = resource_cap + float(k.bounds[q]) + 1.0
            for t in topo_ids:
                terms = [
                    (float(Fraction(ms.values[q][a.id])), f"x_a{a.id}_k{k.id}_t{t}")
                    for a in net.arcs
                ]
                terms.append((guard, f"y_k{k.id}_t{t}"))
                writer.constraint(
                    f"ct11_k{k.id}_q{q}_t{t}",
                    terms,
                    "<=",
                    float(k.bounds[q]) + guard,
                )


def export_mtr_ilp(
    inst: InstanceSpec, cfg: IlpConfig, hint_topologies: int | None = None
) -> str:
    """LP text of the MTR design model: minimize deployed topologies.

    ``hint_topologies`` (e.g. the greedy designer's plan size) triggers a
    :class:`BudgetTooSmall` error when the variable budget cannot reach a
    known-feasible solution.
    """
    if hint_topologies is not None and cfg.t_bar_max < hint_topologies:
        raise BudgetTooSmall(
            f"t_bar_max={cfg.t_bar_max} but a known plan needs "
            f"{hint_topologies} topologies"
        )
    writer = _LpWriter("MTR design model")
    topo_ids = list(range(cfg.t_bar_max))
    for t in topo_ids:
        writer.obj_term(1, f"z_t{t}")
    if not inst.demands:
        writer.constraint("ct_void", [(1, f"z_t{topo_ids[0]}")], ">=", 0)
    _emit_core(writer, inst, cfg, topo_ids)
    return writer.render()


def export_vmtr_ilp(
    inst: InstanceSpec, cfg: IlpConfig, hint_topologies: int | None = None
) -> str:
    """LP text of the virtual-topology extension.

    The first ``n_virtual`` topology slots are virtual: their weights are
    tied per arc to a nonnegative combination of the base metric values
    (taken as constants, keeping the model linear), and only real slots pay
    the activation penalty.
    """
    if hint_topologies is not None and cfg.t_bar_max < hint_topologies:
        raise BudgetTooSmall(
            f"t_bar_max={cfg.t_bar_max} but a known plan needs "
            f"{hint_topologies} topologies"
        )
    writer = _LpWriter("vMTR design model")
    topo_ids = list(range(cfg.t_bar_max))
    n_virtual = cfg.t_bar_max if cfg.n_virtual is None else cfg.n_virtual
    virtual_ids = topo_ids[:n_virtual]
    real_ids = topo_ids[n_virtual:]
    for t in virtual_ids:
        writer.obj_term(1, f"z_t{t}")
    for t in real_ids:
        writer.obj_term(cfg.penalty_real, f"z_t{t}")
    if not inst.demands:
        writer.constraint("ct_void", [(1, f"z_t{topo_ids[0]}")], ">=", 0)
    _emit_core(writer, inst, cfg, topo_ids)
    # Virtual weights equal the multiplier combination of base metrics.
    ms = inst.metrics
    for t in virtual_ids:
        for a in inst.network.arcs:
            terms = [(1, f"w_a{a.id}_t{t}")]
            for q in range(ms.n_metrics):
                terms.append(
                    (-float(Fraction(ms.values[q][a.id])), f"lam_q{q}_t{t}")
                )
            writer.constraint(f"ct12_a{a.id}_t{t}", terms, "=", 0)
    return writer.render()
