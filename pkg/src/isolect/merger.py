"""Fusing dendrograms that share leaves, and predicting unobserved pairs.

Dendrograms are flattened into segment graphs: trees of vertical (time) and
lateral (chain) segments with explicit depth coordinates.  Two dendrograms
whose shared-leaf substructures agree can then be spliced: the reference
dendrogram keeps its geometry, and the other's exclusive branches are
grafted onto the shared lineages at their original positions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import networkx as nx

from . import chronometry
from .errors import ConsistencyError, DomainError, GraftError, ParseError
from .model import (
    FORMAT_NAME,
    FORMAT_VERSION,
    RESOLVED,
    UNRESOLVED,
    Dendrogram,
    leaf_distance,
    _number,
)
from .modes import PRECISE, check_mode, quantize

VERTICAL = "vertical"
LATERAL = "lateral"
UNRESOLVED_EDGE = "unresolved"

PROV_A = "A"
PROV_B = "B"
PROV_SHARED = "shared"

COINCIDENCE_THRESHOLD = 15.0  # percent; below it the method loses reliability

_EPS = 1e-9


@dataclass(frozen=True)
class SegmentNode:
    id: str
    depth: float
    leaf: str | None = None


@dataclass(frozen=True)
class SegmentEdge:
    a: str
    b: str
    length: float
    kind: str
    provenance: str = PROV_A


@dataclass(frozen=True)
class Prediction:
    pair: tuple[str, str]
    distance: float
    coincidence: float
    below_threshold: bool


@dataclass(frozen=True)
class ConsistencyReport:
    shared: tuple[str, ...]
    rows: tuple[tuple[str, tuple[str, str], float, float, float], ...]
    tolerance: float
    notes: tuple[str, ...] = ()

    @property
    def max_deviation(self) -> float:
        return max((r[4] for r in self.rows), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tolerance


@dataclass(frozen=True)
class SegmentGraph:
    """A tree of measured segments with depth coordinates."""

    nodes: tuple[SegmentNode, ...]
    edges: tuple[SegmentEdge, ...]
    leaves_a: tuple[str, ...]
    leaves_b: tuple[str, ...]
    mode: str = PRECISE

    def __post_init__(self):
        check_mode(self.mode)
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise DomainError("segment graph node ids must be unique")
        if any(e.length < 0 for e in self.edges):
            raise DomainError("segment lengths must be >= 0")
        g = self.graph()
        if g.number_of_nodes() > 1 and not nx.is_tree(g):
            raise DomainError("segment graph must be a tree")

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        for node in self.nodes:
            g.add_node(node.id, depth=node.depth, leaf=node.leaf)
        for edge in self.edges:
            g.add_edge(edge.a, edge.b, length=edge.length, kind=edge.kind,
                       provenance=edge.provenance)
        return g

    def leaves(self) -> tuple[str, ...]:
        return tuple(n.leaf for n in self.nodes if n.leaf is not None)

    def node_of_leaf(self, label: str) -> str:
        for node in self.nodes:
            if node.leaf == label:
                return node.id
        raise DomainError(f"unknown leaf {label!r}")

    def distance(self, a: str, b: str) -> float:
        """Unique tree-path distance between two leaves, in svodesh."""
        return float(
            nx.shortest_path_length(
                self.graph(), self.node_of_leaf(a), self.node_of_leaf(b),
                weight="length",
            )
        )


def segment_graph(dendrogram: Dendrogram, provenance: str = PROV_A) -> SegmentGraph:
    """Flatten a dendrogram into its segment graph.

    Junction anchors become nodes; zero-length vertical runs are collapsed
    so anchors that coincide with a child anchor reuse its node.
    """
    k = len(dendrogram.languages)
    depths = dendrogram._anchor_depths()
    nodes: list[SegmentNode] = []
    edges: list[SegmentEdge] = []
    node_for: dict[int, str] = {}
    for i, label in enumerate(dendrogram.languages.labels):
        nodes.append(SegmentNode(label, dendrogram.languages.depths[i], leaf=label))
        node_for[i] = label

    def add_node(name: str, depth: float) -> str:
        nodes.append(SegmentNode(name, depth))
        return name

    for idx, jn in enumerate(dendrogram.junctions):
        nid = k + idx
        near_node = node_for[jn.near]
        far_node = node_for[jn.far]
        a = depths[jn.near]
        b = depths[jn.far]
        if jn.status == UNRESOLVED:
            edges.append(
                SegmentEdge(near_node, far_node, jn.total_length,
                            UNRESOLVED_EDGE, provenance)
            )
            node_for[nid] = near_node
            continue
        if jn.depth - a > _EPS:
            anchor = add_node(f"j{idx}", jn.depth)
            edges.append(SegmentEdge(near_node, anchor, jn.depth - a,
                                     VERTICAL, provenance))
        else:
            anchor = near_node
        if jn.lateral > _EPS:
            if jn.depth - b > _EPS:
                rise = add_node(f"j{idx}.rise", jn.depth)
                edges.append(SegmentEdge(far_node, rise, jn.depth - b,
                                         VERTICAL, provenance))
            else:
                rise = far_node
            edges.append(SegmentEdge(rise, anchor, jn.lateral, LATERAL, provenance))
        else:
            edges.append(SegmentEdge(far_node, anchor, max(jn.depth - b, 0.0),
                                     VERTICAL, provenance))
        node_for[nid] = anchor
    return SegmentGraph(
        nodes=tuple(nodes),
        edges=tuple(edges),
        leaves_a=dendrogram.languages.labels if provenance != PROV_B else (),
        leaves_b=dendrogram.languages.labels if provenance == PROV_B else (),
        mode=dendrogram.mode,
    )


def chain_widths(graph: SegmentGraph) -> tuple[tuple[float, float, int], ...]:
    """Connected runs of lateral segments per epoch.

    Returns ``(depth, width, segment_count)`` triples, deepest first; the
    width of a run is the total lateral extent of the isolect chain that
    existed at that depth.
    """
    laterals = [e for e in graph.edges if e.kind == LATERAL]
    by_depth: dict[float, list[SegmentEdge]] = {}
    node_depth = {n.id: n.depth for n in graph.nodes}
    for e in laterals:
        d = node_depth[e.a]
        key = next((x for x in by_depth if abs(x - d) <= 1e-6), d)
        by_depth.setdefault(key, []).append(e)
    runs = []
    for depth, group in by_depth.items():
        g = nx.Graph()
        for e in group:
            g.add_edge(e.a, e.b, length=e.length)
        for comp in nx.connected_components(g):
            sub = g.subgraph(comp)
            width = sum(d["length"] for _, _, d in sub.edges(data=True))
            runs.append((float(depth), float(width), sub.number_of_edges()))
    runs.sort(key=lambda r: (-r[0], -r[1]))
    return tuple(runs)


def _lca_geometry(dendrogram: Dendrogram, a: str, b: str):
    node = dendrogram.lca_junction(
        dendrogram.languages.index(a), dendrogram.languages.index(b)
    )
    return dendrogram.junction_at(node)


def shared_consistency(
    a: Dendrogram, b: Dendrogram, tolerance: float = 3.0
) -> ConsistencyReport:
    """Compare the shared-leaf substructures of two dendrograms.

    Checks both restored distances among shared leaves and the depth/lateral
    geometry of the junctions where shared pairs meet.  Equal distances are
    guaranteed by equal inputs; agreeing geometry is the substantive check,
    since each dendrogram's shape is determined by its whole dataset.
    """
    shared = tuple(sorted(set(a.languages.labels) & set(b.languages.labels)))
    if len(shared) < 2:
        raise DomainError(
            "dendrograms share fewer than two leaves; no common frame exists"
        )
    rows = []
    notes = []
    for i in range(len(shared)):
        for j in range(i + 1, len(shared)):
            pair = (shared[i], shared[j])
            da = leaf_distance(a, *pair)
            db = leaf_distance(b, *pair)
            rows.append(("distance", pair, da, db, abs(da - db)))
            ja = _lca_geometry(a, *pair)
            jb = _lca_geometry(b, *pair)
            if ja.status == RESOLVED and jb.status == RESOLVED:
                rows.append(("depth", pair, ja.depth, jb.depth,
                             abs(ja.depth - jb.depth)))
                rows.append(("lateral", pair, ja.lateral, jb.lateral,
                             abs(ja.lateral - jb.lateral)))
            elif ja.status == UNRESOLVED and jb.status == UNRESOLVED:
                rows.append(("total", pair, ja.total_length, jb.total_length,
                             abs(ja.total_length - jb.total_length)))
            else:
                notes.append(
                    f"pair {pair[0]}-{pair[1]}: junction resolved in one "
                    f"dendrogram but not the other; compared by distance only"
                )
    return ConsistencyReport(shared, tuple(rows), tolerance, tuple(notes))


def _shared_edge_set(graph: SegmentGraph, shared: tuple[str, ...]) -> set[frozenset]:
    g = graph.graph()
    covered: set[frozenset] = set()
    for i in range(len(shared)):
        for j in range(i + 1, len(shared)):
            path = nx.shortest_path(
                g, graph.node_of_leaf(shared[i]), graph.node_of_leaf(shared[j]),
                weight="length",
            )
            covered.update(frozenset(p) for p in zip(path, path[1:]))
    return covered


def _with_provenance(graph: SegmentGraph, shared_edges: set[frozenset],
                     shared_label: str, other_label: str) -> SegmentGraph:
    edges = tuple(
        SegmentEdge(
            e.a, e.b, e.length, e.kind,
            shared_label if frozenset((e.a, e.b)) in shared_edges else other_label,
        )
        for e in graph.edges
    )
    return SegmentGraph(graph.nodes, edges, graph.leaves_a, graph.leaves_b,
                        graph.mode)


def _split_point(graph_edges, nodes, path, distances, target, counter):
    """Locate (or create by splitting an edge) the node at ``target`` along a path.

    ``path`` is a node-id list, ``distances`` the cumulative lengths along
    it.  Returns (node_id, nodes, edges, path, distances); the path stays in
    sync with the edge list so several grafts can land on one segment.
    """
    node_depth = {n.id: n for n in nodes}
    for node_id, dist in zip(path, distances):
        if abs(dist - target) <= 1e-6:
            return node_id, nodes, graph_edges, path, distances
    for idx in range(len(path) - 1):
        if distances[idx] < target < distances[idx + 1]:
            a, b = path[idx], path[idx + 1]
            edge = next(
                e for e in graph_edges
                if frozenset((e.a, e.b)) == frozenset((a, b))
            )
            la = target - distances[idx]
            lb = distances[idx + 1] - target
            frac = la / (la + lb) if la + lb > 0 else 0.0
            da, db = node_depth[a].depth, node_depth[b].depth
            new_id = f"graft{counter}"
            new_node = SegmentNode(new_id, da + frac * (db - da))
            edges = [e for e in graph_edges if e is not edge]
            edges.append(SegmentEdge(a, new_id, la, edge.kind, edge.provenance))
            edges.append(SegmentEdge(new_id, b, lb, edge.kind, edge.provenance))
            new_path = path[: idx + 1] + [new_id] + path[idx + 1 :]
            new_dist = distances[: idx + 1] + [target] + distances[idx + 1 :]
            return new_id, nodes + [new_node], edges, new_path, new_dist
    raise GraftError(f"attachment position {target} lies outside the shared path")


def merge(a: Dendrogram, b: Dendrogram, tolerance: float = 3.0) -> SegmentGraph:
    """Splice dendrogram ``b`` onto ``a`` over their shared leaves.

    ``a`` is the reference: its geometry is kept everywhere the two overlap.
    Branches exclusive to ``b`` are grafted at their attachment points on
    the shared structure, re-expressed in ``a``'s frame.  Unresolved links
    carry over as fixed-length edges.
    """
    report = shared_consistency(a, b, tolerance)
    if not report.passed:
        raise ConsistencyError(
            f"shared substructures deviate by {report.max_deviation} svodesh "
            f"(tolerance {tolerance})",
            report,
        )
    shared = report.shared
    ga = segment_graph(a, PROV_A)
    gb = segment_graph(b, PROV_B)
    shared_a = _shared_edge_set(ga, shared)
    shared_b = _shared_edge_set(gb, shared)
    ga = _with_provenance(ga, shared_a, PROV_SHARED, PROV_A)

    only_b = [e for e in gb.edges if frozenset((e.a, e.b)) not in shared_b]
    if not only_b:
        return SegmentGraph(ga.nodes, ga.edges, a.languages.labels,
                            b.languages.labels, ga.mode)

    shared_nodes_b = {n for pair in shared_b for n in pair}
    gb_nx = gb.graph()
    sub = nx.Graph()
    for e in only_b:
        sub.add_edge(e.a, e.b)

    nodes = list(ga.nodes)
    edges = list(ga.edges)
    node_depth_b = {n.id: n for n in gb.nodes}
    graft_counter = 0
    rename: dict[str, str] = {}

    ga_nx = ga.graph()
    if len(shared) == 2:
        s0, s1 = shared
        path_a = nx.shortest_path(ga_nx, ga.node_of_leaf(s0),
                                  ga.node_of_leaf(s1), weight="length")
        dist_a = [0.0]
        for u, v in zip(path_a, path_a[1:]):
            dist_a.append(dist_a[-1] + ga_nx[u][v]["length"])
        path_b = nx.shortest_path(gb_nx, gb.node_of_leaf(s0),
                                  gb.node_of_leaf(s1), weight="length")
        dist_b = {path_b[0]: 0.0}
        acc = 0.0
        for u, v in zip(path_b, path_b[1:]):
            acc += gb_nx[u][v]["length"]
            dist_b[v] = acc
    else:
        shared_nodes_a = {n for pair in shared_a for n in pair}
        sig_a = {
            q: tuple(
                nx.shortest_path_length(ga_nx, q, ga.node_of_leaf(s),
                                        weight="length")
                for s in shared
            )
            for q in shared_nodes_a
        }

    components = sorted(nx.connected_components(sub), key=lambda c: min(c))
    for comp in components:
        attach = sorted(comp & shared_nodes_b)
        if len(attach) != 1:
            raise GraftError(
                "an exclusive branch touches the shared structure at "
                f"{len(attach)} points; expected exactly one"
            )
        p = attach[0]
        if len(shared) == 2:
            if p not in dist_b:
                raise GraftError(
                    f"attachment node {p} is not on the shared path"
                )
            target = min(dist_b[p], dist_a[-1])
            mapped, nodes, edges, path_a, dist_a = _split_point(
                edges, nodes, path_a, dist_a, target, graft_counter
            )
            graft_counter += 1
        else:
            # With three or more shared leaves, attachment points are located
            # by their distance signature to the shared leaves and snapped to
            # the closest existing node of the reference structure.
            sig = tuple(
                nx.shortest_path_length(gb_nx, p, gb.node_of_leaf(s),
                                        weight="length")
                for s in shared
            )
            mapped, miss = None, None
            for q, qsig in sig_a.items():
                dev = max(abs(x - y) for x, y in zip(sig, qsig))
                if miss is None or dev < miss:
                    mapped, miss = q, dev
            if mapped is None or miss > tolerance:
                raise GraftError(
                    "no reference-frame node matches an attachment point "
                    f"within tolerance (best deviation {miss})"
                )
        rename[p] = mapped

    # Carry the exclusive nodes and edges over, renaming internals.
    existing = {n.id for n in nodes}
    for comp in nx.connected_components(sub):
        for nid in comp:
            if nid in rename:
                continue
            node = node_depth_b[nid]
            new_id = node.id if node.leaf is not None else f"b:{node.id}"
            if new_id in existing:
                raise GraftError(f"node id collision while grafting: {new_id}")
            rename[nid] = new_id
            existing.add(new_id)
            nodes.append(SegmentNode(new_id, node.depth, node.leaf))
    for e in only_b:
        edges.append(SegmentEdge(rename[e.a], rename[e.b], e.length, e.kind, PROV_B))

    return SegmentGraph(tuple(nodes), tuple(edges), a.languages.labels,
                        b.languages.labels, ga.mode)


def predict_missing(
    graph: SegmentGraph,
    pairs,
    mode: str | None = None,
    threshold: float = COINCIDENCE_THRESHOLD,
) -> tuple[Prediction, ...]:
    """Predicted distances and coincidences for leaf pairs of a merged graph.

    Coincidences below ``threshold`` percent are annotated: at that range
    the retention-based method stops being reliable on its own, and only
    the presence of intermediate chain links supports the prediction.
    """
    mode = graph.mode if mode is None else mode
    check_mode(mode)
    out = []
    for pair in pairs:
        x, y = pair
        dist = quantize(graph.distance(x, y), mode)
        coin = chronometry.svodesh_to_coincidence(dist, mode)
        out.append(Prediction((x, y), dist, coin, coin < threshold))
    return tuple(out)


def cross_pairs(graph: SegmentGraph) -> tuple[tuple[str, str], ...]:
    """Leaf pairs spanning the two source dendrograms of a merged graph."""
    only_a = [x for x in graph.leaves_a if x not in graph.leaves_b]
    only_b = [x for x in graph.leaves_b if x not in graph.leaves_a]
    return tuple((x, y) for x in only_a for y in only_b)


# -- serialization ----------------------------------------------------------


def serialize_graph(graph: SegmentGraph) -> str:
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": "segment-graph",
        "mode": graph.mode,
        "languages": [
            {"name": n.leaf, "depth": _number(n.depth)}
            for n in graph.nodes
            if n.leaf is not None
        ],
        "leaves_a": list(graph.leaves_a),
        "leaves_b": list(graph.leaves_b),
        "nodes": [
            {"id": n.id, "depth": _number(n.depth), "leaf": n.leaf}
            for n in graph.nodes
        ],
        "edges": [
            {
                "a": e.a,
                "b": e.b,
                "length": _number(e.length),
                "kind": e.kind,
                "provenance": e.provenance,
            }
            for e in graph.edges
        ],
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def deserialize_graph(text: str) -> SegmentGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc.msg}", f"line {exc.lineno}") from None
    if doc.get("format") != FORMAT_NAME or doc.get("kind") != "segment-graph":
        raise ParseError("not a segment-graph document", "format")
    if doc.get("version") != FORMAT_VERSION:
        raise ParseError(f"unsupported version {doc.get('version')!r}", "version")
    try:
        nodes = tuple(
            SegmentNode(str(n["id"]), float(n["depth"]), n.get("leaf"))
            for n in doc["nodes"]
        )
        edges = tuple(
            SegmentEdge(str(e["a"]), str(e["b"]), float(e["length"]),
                        str(e["kind"]), str(e.get("provenance", PROV_A)))
            for e in doc["edges"]
        )
        return SegmentGraph(
            nodes, edges,
            tuple(doc.get("leaves_a", ())), tuple(doc.get("leaves_b", ())),
            doc.get("mode", PRECISE),
        )
    except (KeyError, TypeError, ValueError, DomainError) as exc:
        raise ParseError(f"bad segment-graph payload: {exc}") from None
