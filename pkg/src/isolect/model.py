"""Core data model: labeled matrices, dendrograms, path distances, serialization.

A dendrogram here is a binary merge tree whose junctions carry two geometric
quantities: a depth ``D`` (svodesh before present, measured down the time
axis) and a lateral width ``h`` (svodesh along the synchronic chain axis).
The junction's anchor point sits on the *near* child's lineage at depth
``D``; the far child's lineage rises vertically to depth ``D`` and then runs
laterally ``h`` svodesh to the anchor.  Path lengths between leaves are sums
of vertical and lateral segment lengths.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParseError
from .modes import MODES, PRECISE, check_mode

FORMAT_NAME = "isolect-dendrogram"
FORMAT_VERSION = 1

RESOLVED = "resolved"
UNRESOLVED = "unresolved"

# Junction flags emitted by the builder.
FLAG_PURE_VERTICAL = "pure-vertical"
FLAG_INFEASIBLE = "infeasible"
FLAG_NEGATIVE_REDUCED = "negative-reduced"
FLAG_CROSS_CHECKED = "cross-checked"
FLAG_UNRESOLVED_DECOMPOSITION = "unresolved-decomposition"

CLAMP_FLAGS = (FLAG_PURE_VERTICAL, FLAG_INFEASIBLE, FLAG_NEGATIVE_REDUCED)


@dataclass(frozen=True)
class LanguageSet:
    """Ordered set of unique language labels with optional attestation depths.

    The attestation depth of a language is how far before present it is
    recorded, in svodesh; contemporary languages sit at depth 0.
    """

    labels: tuple[str, ...]
    depths: tuple[float, ...] = ()

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        if not labels:
            raise DomainError("language set must not be empty")
        if any(not lab for lab in labels):
            raise DomainError("language labels must be non-empty")
        if len(set(labels)) != len(labels):
            raise DomainError("language labels must be unique")
        depths = tuple(float(d) for d in self.depths) or (0.0,) * len(labels)
        if len(depths) != len(labels):
            raise DomainError("one attestation depth per language required")
        if any(not np.isfinite(d) or d < 0 for d in depths):
            raise DomainError("attestation depths must be finite and >= 0")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "depths", depths)

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise DomainError(f"unknown language {label!r}") from None


def _as_square(values, k: int) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != (k, k):
        raise DomainError(f"matrix must be {k}x{k}, got {arr.shape}")
    return arr


def _check_symmetry(arr: np.ndarray, labels: tuple[str, ...]) -> None:
    k = arr.shape[0]
    for i in range(k):
        for j in range(i + 1, k):
            a, b = arr[i, j], arr[j, i]
            if np.isnan(a) != np.isnan(b):
                raise DomainError(
                    f"asymmetric presence at ({labels[i]}, {labels[j]})"
                )
            if not np.isnan(a) and abs(a - b) > 1e-9:
                raise DomainError(
                    f"asymmetric at ({labels[i]}, {labels[j]}): {a} vs {b}"
                )


@dataclass(frozen=True)
class CoincidenceMatrix:
    """Symmetric matrix of coincidence percentages over a language set.

    Entries are percentages in (0, 100]; NaN marks an unobserved pair.
    """

    languages: LanguageSet
    values: np.ndarray

    def __post_init__(self):
        k = len(self.languages)
        arr = _as_square(self.values, k)
        _check_symmetry(arr, self.languages.labels)
        for i in range(k):
            if not np.isnan(arr[i, i]) and abs(arr[i, i] - 100.0) > 1e-9:
                raise DomainError(
                    f"diagonal of a coincidence matrix must be absent or 100 "
                    f"(language {self.languages.labels[i]})"
                )
            arr[i, i] = 100.0
        off = ~np.eye(k, dtype=bool)
        bad = off & ~np.isnan(arr) & ((arr <= 0) | (arr > 100))
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise DomainError(
                f"coincidence out of (0, 100] at "
                f"({self.languages.labels[i]}, {self.languages.labels[j]}): {arr[i, j]}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def value(self, a: str, b: str) -> float:
        return float(self.values[self.languages.index(a), self.languages.index(b)])

    def is_complete(self) -> bool:
        return not np.isnan(self.values).any()

    def with_value(self, a: str, b: str, value: float) -> "CoincidenceMatrix":
        """Return a copy with one symmetric entry replaced."""
        i, j = self.languages.index(a), self.languages.index(b)
        if i == j:
            raise DomainError("cannot set a diagonal coincidence")
        arr = np.array(self.values, dtype=float)
        arr[i, j] = arr[j, i] = value
        return CoincidenceMatrix(self.languages, arr)


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric matrix of svodesh distances; NaN marks an unobserved pair."""

    languages: LanguageSet
    values: np.ndarray

    def __post_init__(self):
        k = len(self.languages)
        arr = _as_square(self.values, k)
        _check_symmetry(arr, self.languages.labels)
        for i in range(k):
            if not np.isnan(arr[i, i]) and abs(arr[i, i]) > 1e-9:
                raise DomainError(
                    f"diagonal of a distance matrix must be 0 "
                    f"(language {self.languages.labels[i]})"
                )
            arr[i, i] = 0.0
        off = ~np.eye(k, dtype=bool)
        finite = off & ~np.isnan(arr)
        if (arr[finite] < 0).any() or np.isinf(arr).any():
            raise DomainError("distances must be finite and >= 0")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def value(self, a: str, b: str) -> float:
        return float(self.values[self.languages.index(a), self.languages.index(b)])

    def is_complete(self) -> bool:
        return not np.isnan(self.values).any()


@dataclass(frozen=True)
class WeightVector:
    """Positive per-language weights, aligned with a language set."""

    languages: LanguageSet
    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) != len(self.languages):
            raise DomainError("one weight per language required")
        if any(not np.isfinite(v) or v <= 0 for v in vals):
            raise DomainError("weights must be finite and > 0")
        object.__setattr__(self, "values", vals)

    @classmethod
    def unit(cls, languages: LanguageSet) -> "WeightVector":
        return cls(languages, (1.0,) * len(languages))

    def value(self, label: str) -> float:
        return self.values[self.languages.index(label)]


@dataclass(frozen=True)
class Junction:
    """One merge event of the dendrogram.

    ``near`` and ``far`` are node ids: leaves are indexed 0..k-1 in language
    order, junction j has node id k+j.  The anchor lies on the near child's
    lineage.  An unresolved junction knows only the total path length between
    its children's anchors; ``depth``/``lateral`` then hold the maximum-depth
    nominal decomposition and ``depth_range`` the feasible depth interval.
    """

    near: int
    far: int
    depth: float
    lateral: float
    status: str = RESOLVED
    total_length: float | None = None
    depth_range: tuple[float, float] | None = None
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        if self.status not in (RESOLVED, UNRESOLVED):
            raise DomainError(f"unknown junction status {self.status!r}")
        if self.lateral < 0:
            raise DomainError("lateral width must be >= 0")
        if self.depth < 0:
            raise DomainError("junction depth must be >= 0")
        if self.status == UNRESOLVED:
            if self.total_length is None or self.total_length <= 0:
                raise DomainError("unresolved junction requires total_length > 0")
        object.__setattr__(self, "flags", tuple(self.flags))

    @property
    def resolved(self) -> bool:
        return self.status == RESOLVED


@dataclass(frozen=True)
class Dendrogram:
    """A complete binary merge tree over a language set."""

    languages: LanguageSet
    junctions: tuple[Junction, ...]
    mode: str = PRECISE
    weights: WeightVector | None = None

    def __post_init__(self):
        check_mode(self.mode)
        k = len(self.languages)
        if len(self.junctions) != k - 1:
            raise DomainError(
                f"{k} languages require {k - 1} junctions, got {len(self.junctions)}"
            )
        object.__setattr__(self, "junctions", tuple(self.junctions))
        seen_child: set[int] = set()
        for idx, jn in enumerate(self.junctions):
            nid = k + idx
            for child in (jn.near, jn.far):
                if not (0 <= child < nid):
                    raise DomainError(
                        f"junction {idx} references node {child} out of order"
                    )
                if child in seen_child:
                    raise DomainError(f"node {child} used as a child twice")
                seen_child.add(child)
            if jn.near == jn.far:
                raise DomainError(f"junction {idx} joins a node with itself")
            if jn.status == UNRESOLVED and idx != len(self.junctions) - 1:
                raise DomainError("only the root junction may be unresolved")
        # Exactly one root: every node except the last junction is a child.
        if k > 1 and len(seen_child) != k + len(self.junctions) - 1:
            raise DomainError("dendrogram must have exactly one root")
        depth = self._anchor_depths()
        for idx, jn in enumerate(self.junctions):
            lo = max(depth[jn.near], depth[jn.far])
            if jn.resolved and jn.depth < lo - 1e-9:
                raise DomainError(
                    f"junction {idx} depth {jn.depth} above a child anchor ({lo})"
                )

    # -- structural helpers -------------------------------------------------

    def _anchor_depths(self) -> dict[int, float]:
        k = len(self.languages)
        depth = {i: self.languages.depths[i] for i in range(k)}
        for idx, jn in enumerate(self.junctions):
            depth[k + idx] = jn.depth
        return depth

    def root_id(self) -> int:
        return len(self.languages) + len(self.junctions) - 1

    def junction_at(self, node_id: int) -> Junction:
        k = len(self.languages)
        if node_id < k:
            raise DomainError(f"node {node_id} is a leaf")
        return self.junctions[node_id - k]

    def members(self, node_id: int) -> tuple[int, ...]:
        """Leaf ids under a node, in language order."""
        k = len(self.languages)
        if node_id < k:
            return (node_id,)
        jn = self.junction_at(node_id)
        got = set(self.members(jn.near)) | set(self.members(jn.far))
        return tuple(sorted(got))

    def carrier(self, node_id: int) -> int:
        """The leaf whose lineage carries the node's anchor."""
        while node_id >= len(self.languages):
            node_id = self.junction_at(node_id).near
        return node_id

    def anchor_tables(self) -> dict[int, dict[int, float]]:
        """Per node: leaf id -> path length from the leaf to the node's anchor.

        Unresolved junctions contribute their nominal decomposition here;
        ``leaf_distance`` never consults the table across an unresolved root.
        """
        k = len(self.languages)
        depth = self._anchor_depths()
        tables: dict[int, dict[int, float]] = {
            i: {i: 0.0} for i in range(k)
        }
        for idx, jn in enumerate(self.junctions):
            nid = k + idx
            gain_near = jn.depth - depth[jn.near]
            gain_far = (jn.depth - depth[jn.far]) + jn.lateral
            table = {leaf: d + gain_near for leaf, d in tables[jn.near].items()}
            table.update(
                {leaf: d + gain_far for leaf, d in tables[jn.far].items()}
            )
            tables[nid] = table
        return tables

    def lca_junction(self, a: int, b: int) -> int:
        """Node id of the lowest junction containing both leaves."""
        k = len(self.languages)
        for idx, jn in enumerate(self.junctions):
            nid = k + idx
            mem = self.members(nid)
            if a in mem and b in mem:
                return nid
        raise DomainError("leaves do not share a junction")


# -- path-distance operations ---------------------------------------------


def anchor_distance(dendrogram: Dendrogram, node_id: int, leaf: str) -> float:
    """Path length from a leaf up to the anchor of the cluster at ``node_id``."""
    i = dendrogram.languages.index(leaf)
    k = len(dendrogram.languages)
    if node_id < k:
        if node_id != i:
            raise DomainError(f"leaf {leaf!r} is not in the requested cluster")
        return 0.0
    table = dendrogram.anchor_tables()[node_id]
    if i not in table:
        raise DomainError(f"leaf {leaf!r} is not in the requested cluster")
    return table[i]


def leaf_distance(dendrogram: Dendrogram, a: str, b: str) -> float:
    """Tree-path distance between two leaves, in svodesh.

    An unresolved root contributes its fixed total length, which makes the
    result independent of how that link would split into vertical and
    lateral parts.
    """
    ia = dendrogram.languages.index(a)
    ib = dendrogram.languages.index(b)
    if ia == ib:
        return 0.0
    tables = dendrogram.anchor_tables()
    lca = dendrogram.lca_junction(ia, ib)
    jn = dendrogram.junction_at(lca)
    if jn.status == UNRESOLVED:
        near_t, far_t = tables[jn.near], tables[jn.far]
        first, second = (ia, ib) if ia in near_t else (ib, ia)
        return near_t[first] + jn.total_length + far_t[second]
    table = tables[lca]
    return table[ia] + table[ib]


def restore_distance_matrix(dendrogram: Dendrogram) -> DistanceMatrix:
    """All-pairs leaf distances measured on the dendrogram.

    One sweep over junctions: each leaf pair crosses exactly one junction
    (its lowest common one), where its distance is the sum of the two
    anchor distances.
    """
    k = len(dendrogram.languages)
    arr = np.zeros((k, k))
    tables = dendrogram.anchor_tables()
    for idx, jn in enumerate(dendrogram.junctions):
        near_t, far_t = tables[jn.near], tables[jn.far]
        if jn.status == UNRESOLVED:
            for a, da in near_t.items():
                for b, db in far_t.items():
                    arr[a, b] = arr[b, a] = da + jn.total_length + db
        else:
            table = tables[k + idx]
            for a in near_t:
                for b in far_t:
                    arr[a, b] = arr[b, a] = table[a] + table[b]
    return DistanceMatrix(dendrogram.languages, arr)


def restore_coincidence_matrix(dendrogram: Dendrogram) -> CoincidenceMatrix:
    """Leaf distances converted back to coincidence percentages."""
    from . import chronometry

    return chronometry.matrix_to_coincidences(
        restore_distance_matrix(dendrogram), dendrogram.mode
    )


# -- serialization ----------------------------------------------------------


def _number(x: float):
    """Render integral floats as ints so documents diff cleanly."""
    f = float(x)
    return int(f) if f.is_integer() else f


def _junction_payload(dendrogram: Dendrogram, jn: Junction) -> dict:
    k = len(dendrogram.languages)

    def ref(node_id: int):
        return dendrogram.languages.labels[node_id] if node_id < k else node_id - k

    if jn.status == RESOLVED:
        status = {"state": RESOLVED}
    else:
        status = {
            "state": UNRESOLVED,
            "total_length": _number(jn.total_length),
            "depth_min": _number(jn.depth_range[0]),
            "depth_max": _number(jn.depth_range[1]),
        }
    return {
        "near": ref(jn.near),
        "far": ref(jn.far),
        "depth": _number(jn.depth),
        "lateral": _number(jn.lateral),
        "status": status,
        "flags": list(jn.flags),
    }


def serialize(dendrogram: Dendrogram) -> str:
    """Serialize to the versioned JSON document format (stable field order)."""
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": "dendrogram",
        "mode": dendrogram.mode,
        "languages": [
            {"name": name, "depth": _number(depth)}
            for name, depth in zip(
                dendrogram.languages.labels, dendrogram.languages.depths
            )
        ],
        "weights": (
            [_number(w) for w in dendrogram.weights.values]
            if dendrogram.weights is not None
            else None
        ),
        "junctions": [_junction_payload(dendrogram, jn) for jn in dendrogram.junctions],
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _expect(doc: dict, key: str, location: str):
    if key not in doc:
        raise ParseError(f"missing field {key!r}", location)
    return doc[key]


def deserialize(text: str) -> Dendrogram:
    """Parse a dendrogram document, enforcing all structural invariants."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc.msg}", f"line {exc.lineno}") from None
    if not isinstance(doc, dict):
        raise ParseError("document must be a JSON object", "$")
    if doc.get("format") != FORMAT_NAME:
        raise ParseError(f"unknown format {doc.get('format')!r}", "format")
    if doc.get("version") != FORMAT_VERSION:
        raise ParseError(f"unsupported version {doc.get('version')!r}", "version")
    if doc.get("kind", "dendrogram") != "dendrogram":
        raise ParseError(f"not a dendrogram document: kind={doc.get('kind')!r}", "kind")
    mode = _expect(doc, "mode", "mode")
    if mode not in MODES:
        raise ParseError(f"unknown mode {mode!r}", "mode")

    langs_doc = _expect(doc, "languages", "languages")
    if not isinstance(langs_doc, list) or not langs_doc:
        raise ParseError("languages must be a non-empty list", "languages")
    names, depths = [], []
    for i, entry in enumerate(langs_doc):
        loc = f"languages[{i}]"
        if not isinstance(entry, dict):
            raise ParseError("language entry must be an object", loc)
        names.append(str(_expect(entry, "name", loc)))
        depths.append(float(entry.get("depth", 0.0)))
    try:
        languages = LanguageSet(tuple(names), tuple(depths))
    except DomainError as exc:
        raise ParseError(str(exc), "languages") from None

    weights_doc = doc.get("weights")
    weights = None
    if weights_doc is not None:
        try:
            weights = WeightVector(languages, tuple(float(w) for w in weights_doc))
        except (TypeError, ValueError, DomainError) as exc:
            raise ParseError(f"bad weights: {exc}", "weights") from None

    k = len(languages)
    juncs_doc = _expect(doc, "junctions", "junctions")
    if not isinstance(juncs_doc, list):
        raise ParseError("junctions must be a list", "junctions")
    junctions = []
    unresolved_seen = 0
    for idx, entry in enumerate(juncs_doc):
        loc = f"junctions[{idx}]"
        if not isinstance(entry, dict):
            raise ParseError("junction must be an object", loc)

        def node_ref(value, field_name):
            if isinstance(value, str):
                try:
                    return languages.index(value)
                except DomainError:
                    raise ParseError(
                        f"unknown leaf {value!r}", f"{loc}.{field_name}"
                    ) from None
            if isinstance(value, bool) or not isinstance(value, int):
                raise ParseError(
                    "node reference must be a leaf name or junction index",
                    f"{loc}.{field_name}",
                )
            if not (0 <= value < len(juncs_doc)):
                raise ParseError(
                    f"junction index {value} out of range", f"{loc}.{field_name}"
                )
            return k + value

        near = node_ref(_expect(entry, "near", loc), "near")
        far = node_ref(_expect(entry, "far", loc), "far")
        depth = float(_expect(entry, "depth", loc))
        lateral = float(_expect(entry, "lateral", loc))
        if lateral < 0:
            raise ParseError("lateral width must be >= 0", f"{loc}.lateral")
        status_doc = _expect(entry, "status", loc)
        if not isinstance(status_doc, dict) or "state" not in status_doc:
            raise ParseError("status must carry a state", f"{loc}.status")
        state = status_doc["state"]
        total = None
        depth_range = None
        if state == UNRESOLVED:
            unresolved_seen += 1
            if unresolved_seen > 1:
                raise ParseError(
                    "at most one junction may be unresolved", f"{loc}.status"
                )
            total = float(_expect(status_doc, "total_length", f"{loc}.status"))
            depth_range = (
                float(_expect(status_doc, "depth_min", f"{loc}.status")),
                float(_expect(status_doc, "depth_max", f"{loc}.status")),
            )
        elif state != RESOLVED:
            raise ParseError(f"unknown state {state!r}", f"{loc}.status")
        flags = entry.get("flags", [])
        if not isinstance(flags, list):
            raise ParseError("flags must be a list", f"{loc}.flags")
        try:
            junctions.append(
                Junction(
                    near=near,
                    far=far,
                    depth=depth,
                    lateral=lateral,
                    status=state,
                    total_length=total,
                    depth_range=depth_range,
                    flags=tuple(str(f) for f in flags),
                )
            )
        except DomainError as exc:
            raise ParseError(str(exc), loc) from None
    try:
        return Dendrogram(languages, tuple(junctions), mode=mode, weights=weights)
    except DomainError as exc:
        raise ParseError(str(exc), "junctions") from None
