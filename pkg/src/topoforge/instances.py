"""Instance ingestion and synthesis.

SNDlib native files supply node coordinates and link capacities; from these
the two base metrics are derived (delay proportional to distance, additive
loss from a capacity-inverse loss probability) and demands are generated for
every ordered node pair with bounds tightened so that neither single-metric
shortest path can satisfy them, while an exact constrained path still exists.
A seeded random-geometric generator provides desk-scale instances when no
SNDlib file is at hand.
"""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from .csp import Demand, MetricSet, exact_csp
from .errors import (
    Disconnected,
    InvalidKappa,
    MissingCapacity,
    MissingCoordinates,
    ParseError,
    Unreachable,
)
from .graph import Arc, Network, Node, path_resource, route
from .rational import exact, float_up

log = logging.getLogger(__name__)

EARTH_RADIUS_KM = 6371.0


@dataclass(frozen=True)
class InstanceSpec:
    """A ready-to-design problem instance.

    Every demand is feasible for :func:`topoforge.csp.exact_csp` and
    infeasible on both single-metric shortest paths.
    """

    network: Network
    metrics: MetricSet
    demands: tuple[Demand, ...]
    provenance: dict

    def to_dict(self) -> dict:
        return {
            "network": self.network.to_dict(),
            "metrics": self.metrics.to_dict(),
            "demands": [k.to_dict() for k in self.demands],
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "InstanceSpec":
        return cls(
            Network.from_dict(data["network"]),
            MetricSet.from_dict(data["metrics"]),
            tuple(Demand.from_dict(d) for d in data["demands"]),
            dict(data["provenance"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "InstanceSpec":
        return cls.from_dict(json.loads(text))


def parse_sndlib(text: str) -> Network:
    """Parse an SNDlib native-format document into a Network.

    One directed arc per direction per link. Capacity is the link's
    pre-installed capacity when positive, else the first capacity module.
    Raises :class:`ParseError` (with 1-based line number),
    :class:`MissingCoordinates` or :class:`MissingCapacity`.
    """
    nodes: list[Node] = []
    node_ids: dict[str, int] = {}
    arcs: list[Arc] = []
    section = None
    saw_links_section = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith("?"):
            continue
        upper = line.upper()
        if section is None or section == "skip":
            for name in ("NODES", "LINKS", "DEMANDS", "ADMISSIBLE_PATHS", "META"):
                if upper.startswith(name):
                    section = name.lower() if name in ("NODES", "LINKS") else "skip"
                    if name == "LINKS":
                        saw_links_section = True
                    break
            else:
                if line == ")":
                    section = None
            continue
        if line == ")":
            section = None
            continue
        tokens = line.replace("(", " ( ").replace(")", " ) ").split()
        if section == "nodes":
            if len(tokens) < 5 or tokens[1] != "(" or tokens[-1] != ")":
                raise MissingCoordinates(
                    f"node entry needs 'name ( x y )': {line!r}", lineno
                )
            name = tokens[0]
            try:
                x, y = float(tokens[2]), float(tokens[3])
            except ValueError:
                raise MissingCoordinates(
                    f"non-numeric coordinates in {line!r}", lineno
                ) from None
            if name in node_ids:
                raise ParseError(f"duplicate node {name}", lineno)
            node_ids[name] = len(nodes)
            nodes.append(Node(len(nodes), x, y))
        elif section == "links":
            # linkId ( src dst ) preCap preCapCost routingCost setupCost ( cap cost ... )
            if len(tokens) < 5 or tokens[1] != "(":
                raise ParseError(f"malformed link entry: {line!r}", lineno)
            try:
                close = tokens.index(")", 2)
            except ValueError:
                raise ParseError(f"malformed link entry: {line!r}", lineno) from None
            endpoints = tokens[2:close]
            if len(endpoints) != 2:
                raise ParseError(
                    f"link must name exactly two endpoints: {line!r}", lineno
                )
            try:
                tail, head = (node_ids[e] for e in endpoints)
            except KeyError as err:
                raise ParseError(f"unknown node {err.args[0]}", lineno) from None
            rest = tokens[close + 1 :]
            numbers: list[float] = []
            modules: list[float] = []
            in_modules = False
            module_pos = 0
            for tok in rest:
                if tok == "(":
                    in_modules = True
                    module_pos = 0
                    continue
                if tok == ")":
                    in_modules = False
                    continue
                try:
                    value = float(tok)
                except ValueError:
                    raise ParseError(
                        f"non-numeric link field {tok!r}", lineno
                    ) from None
                if in_modules:
                    if module_pos % 2 == 0:  # capacity, cost pairs
                        modules.append(value)
                    module_pos += 1
                else:
                    numbers.append(value)
            pre_installed = numbers[0] if numbers else 0.0
            if pre_installed > 0:
                capacity = pre_installed
            elif modules and modules[0] > 0:
                capacity = modules[0]
            else:
                raise MissingCapacity(
                    f"link {tokens[0]} has no usable capacity", lineno
                )
            arcs.append(Arc(len(arcs), tail, head, capacity))
            arcs.append(Arc(len(arcs), head, tail, capacity))

    if not saw_links_section:
        raise ParseError("document has no LINKS section")
    if not nodes:
        raise ParseError("document has no NODES section")
    return Network(nodes, arcs)


def serialize_sndlib(net: Network) -> str:
    """Write a Network back out in SNDlib native format.

    Arcs are assumed to come in forward/backward pairs as produced by
    :func:`parse_sndlib`; each pair becomes one link.
    """
    lines = ["?SNDlib native format; type: network; version: 1.0", "", "NODES ("]
    for n in net.nodes:
        lines.append(f"  N{n.id} ( {n.x!r} {n.y!r} )")
    lines.append(")")
    lines.append("")
    lines.append("LINKS (")
    for i in range(0, net.n_arcs, 2):
        a = net.arcs[i]
        lines.append(
            f"  L{i // 2} ( N{a.tail} N{a.head} ) {a.capacity!r} 0.0 0.0 0.0 ( )"
        )
    lines.append(")")
    return "\n".join(lines) + "\n"


def looks_like_lonlat(net: Network) -> bool:
    return all(abs(n.x) <= 180 and abs(n.y) <= 90 for n in net.nodes)


def _haversine_km(x1: float, y1: float, x2: float, y2: float) -> float:
    lon1, lat1, lon2, lat2 = map(math.radians, (x1, y1, x2, y2))
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    h = math.sin(dlat / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(math.sqrt(h))


def default_kappa(net: Network) -> float:
    """Loss constant giving a 2.5% loss probability on the smallest link."""
    return 0.5 * min(a.capacity for a in net.arcs) * 0.05


def derive_metrics(
    net: Network, kappa: float | None = None, distance_mode: str = "euclidean"
) -> MetricSet:
    """Delay and additive-loss metrics from geometry and capacities.

    Per arc: loss probability ``p = kappa / capacity`` made additive as
    ``-ln(1 - p)``; delay is the tail-head distance (kilometres under
    ``haversine``, plain plane distance otherwise). Raises
    :class:`InvalidKappa` when any ``p >= 1``. Zero-length arcs are allowed
    but logged: their delay weight is 0 and routing then leans on the loss
    term, which is always positive.
    """
    if distance_mode not in ("euclidean", "haversine"):
        raise ValueError(f"unknown distance_mode {distance_mode!r}")
    if kappa is None:
        kappa = default_kappa(net)
    delays: list[float] = []
    losses: list[float] = []
    zero_length = 0
    for arc in net.arcs:
        p = kappa / arc.capacity
        if p >= 1:
            raise InvalidKappa(
                f"kappa={kappa} yields loss probability {p} on arc {arc.id}"
            )
        losses.append(-math.log1p(-p))
        t, h = net.nodes[arc.tail], net.nodes[arc.head]
        if distance_mode == "haversine":
            d = _haversine_km(t.x, t.y, h.x, h.y)
        else:
            d = math.hypot(h.x - t.x, h.y - t.y)
        if d == 0.0:
            zero_length += 1
        delays.append(d)
    if zero_length:
        log.warning(
            "%d arcs connect coincident coordinates; their delay metric is 0",
            zero_length,
        )
    return MetricSet.create(("delay", "loss"), [delays, losses])


def generate_demands(
    net: Network,
    ms: MetricSet,
    epsilon_b: float = 0.05,
    bounds_mode: str = "cross",
) -> list[Demand]:
    """All-pairs demands with bounds no basic topology can satisfy.

    For each ordered pair the loss bound is ``(1 - epsilon_b)`` times the
    loss of the delay-shortest route and vice versa, which makes both
    single-metric routes infeasible by construction; pairs without an exact
    constrained path are dropped. ``bounds_mode="literal"`` instead tightens
    each bound against its own metric's shortest path, which leaves every
    pair infeasible; it exists purely for auditing.

    Bounds are rounded up to the nearest float so serialization can never
    flip a feasibility decision.
    """
    if not 0 < epsilon_b < 1:
        raise ValueError("epsilon_b must be in (0, 1)")
    if bounds_mode not in ("cross", "literal"):
        raise ValueError(f"unknown bounds_mode {bounds_mode!r}")
    eps = Fraction(epsilon_b)
    w_delay = ms.weight_vector(0)
    w_loss = ms.weight_vector(1)
    demands: list[Demand] = []
    for s in range(net.n_nodes):
        for d in range(net.n_nodes):
            if s == d:
                continue
            try:
                p_delay = route(net, w_delay, s, d)
                p_loss = route(net, w_loss, s, d)
            except Unreachable:
                continue
            if bounds_mode == "cross":
                bound_delay = (1 - eps) * Fraction(path_resource(p_loss, ms.values[0]))
                bound_loss = (1 - eps) * Fraction(path_resource(p_delay, ms.values[1]))
            else:
                bound_delay = (1 - eps) * Fraction(path_resource(p_delay, ms.values[0]))
                bound_loss = (1 - eps) * Fraction(path_resource(p_loss, ms.values[1]))
            if bound_delay <= 0 or bound_loss <= 0:
                log.debug("pair (%d, %d) has a degenerate zero bound; skipped", s, d)
                continue
            bounds = (exact(float_up(bound_delay)), exact(float_up(bound_loss)))
            k = Demand(len(demands), s, d, bounds)
            if exact_csp(net, ms, k) is None:
                continue
            demands.append(k)
    return demands


def synth_instance(
    n: int,
    density: float = 0.5,
    seed: int = 0,
    kappa: float | None = None,
    epsilon_b: float = 0.05,
    bounds_mode: str = "cross",
) -> InstanceSpec:
    """Random geometric instance on the unit square, deterministic per seed.

    Node pairs closer than ``density * sqrt(2)`` get a symmetric arc pair;
    ``density=1`` yields the complete digraph. Capacities are drawn from
    {10, 40, 100}. Raises :class:`Disconnected` when the draw is not
    connected (retry with another seed or a higher density).
    """
    if n < 4:
        raise ValueError("need at least 4 nodes")
    if not 0 < density <= 1:
        raise ValueError("density must be in (0, 1]")
    rng = random.Random(seed)
    coords = [(rng.random(), rng.random()) for _ in range(n)]
    radius = density * math.sqrt(2)
    nodes = [Node(i, x, y) for i, (x, y) in enumerate(coords)]
    arcs: list[Arc] = []
    neighbors: list[set[int]] = [set() for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if math.dist(coords[i], coords[j]) <= radius:
                capacity = float(rng.choice((10, 40, 100)))
                arcs.append(Arc(len(arcs), i, j, capacity))
                arcs.append(Arc(len(arcs), j, i, capacity))
                neighbors[i].add(j)
                neighbors[j].add(i)
    seen = {0}
    frontier = [0]
    while frontier:
        u = frontier.pop()
        for v in neighbors[u]:
            if v not in seen:
                seen.add(v)
                frontier.append(v)
    if len(seen) != n:
        raise Disconnected(
            f"geometric graph (n={n}, density={density}, seed={seed}) is "
            "disconnected; regenerate with another seed or a higher density"
        )
    net = Network(nodes, arcs)
    if kappa is None:
        kappa = default_kappa(net)
    ms = derive_metrics(net, kappa, "euclidean")
    demands = generate_demands(net, ms, epsilon_b, bounds_mode)
    provenance = {
        "source": f"synthetic:n={n},density={density},seed={seed}",
        "kappa": kappa,
        "epsilon_b": epsilon_b,
        "distance_mode": "euclidean",
        "bounds_mode": bounds_mode,
    }
    return InstanceSpec(net, ms, tuple(demands), provenance)


def instance_from_sndlib(
    text: str,
    source: str = "sndlib",
    kappa: float | None = None,
    epsilon_b: float = 0.05,
    distance_mode: str | None = None,
    bounds_mode: str = "cross",
) -> InstanceSpec:
    """Parse an SNDlib file and build the full instance around it.

    ``distance_mode=None`` autodetects: haversine when all coordinates look
    like lon/lat pairs, euclidean otherwise.
    """
    net = parse_sndlib(text)
    if distance_mode is None:
        distance_mode = "haversine" if looks_like_lonlat(net) else "euclidean"
    if kappa is None:
        kappa = default_kappa(net)
    ms = derive_metrics(net, kappa, distance_mode)
    demands = generate_demands(net, ms, epsilon_b, bounds_mode)
    provenance = {
        "source": source,
        "kappa": kappa,
        "epsilon_b": epsilon_b,
        "distance_mode": distance_mode,
        "bounds_mode": bounds_mode,
    }
    return InstanceSpec(net, ms, tuple(demands), provenance)
