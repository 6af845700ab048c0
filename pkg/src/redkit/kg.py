"""Knowledge graphs as canonical label sets, a bit-exact binary codec, and
set-difference edit scripts.

A graph is canonical when it holds no duplicate triples (guaranteed by the
set representation), no unused relations, and no unused entities other than
explicitly pinned ones. The binary encoding is defined only on canonical
graphs so that encode/decode is a bijection and re-encoding a decoded graph
is byte-identical.

Binary layout: magic 0x4B47, version 0x01, then unsigned LEB128 varints --
entity count and sorted length-prefixed UTF-8 labels, relation count and
sorted labels, pin count and ascending pinned entity indices, triple count
and triples sorted by (head, relation, tail) index with the head index
delta-encoded against the previous triple.

Edit scripts are ordered operation lists over labels. Serialization: varint
operation count, then per operation one tag byte (3-bit tag 0..5, zero
padded to the byte boundary) followed by operands -- varint indices into the
source graph's canonical tables (extended by labels the script itself adds,
in script order) or length-prefixed labels for additions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .bitio import read_uvarint, write_uvarint
from .errors import EditApplyError, InputError, KgParseError

KG_MAGIC = b"\x4b\x47"
KG_VERSION = 1

Triple = tuple[str, str, str]

_OP_TAGS = {
    "add_entity": 0,
    "del_entity": 1,
    "add_relation": 2,
    "del_relation": 3,
    "add_triple": 4,
    "del_triple": 5,
}


def _check_label(label, kind: str) -> None:
    if not isinstance(label, str) or not label:
        raise InputError(f"{kind} label must be a non-empty string, got {label!r}")


@dataclass(frozen=True)
class KnowledgeGraph:
    """Immutable entities/relations/triples value, optionally with pinned
    entities that survive canonicalization while unreferenced."""

    entities: frozenset[str] = frozenset()
    relations: frozenset[str] = frozenset()
    triples: frozenset[Triple] = frozenset()
    pinned: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "entities", frozenset(self.entities))
        object.__setattr__(self, "relations", frozenset(self.relations))
        object.__setattr__(self, "triples", frozenset(tuple(t) for t in self.triples))
        object.__setattr__(self, "pinned", frozenset(self.pinned))
        for e in self.entities:
            _check_label(e, "entity")
        for r in self.relations:
            _check_label(r, "relation")
        for p in self.pinned:
            if p not in self.entities:
                raise InputError(f"pinned label {p!r} is not a declared entity")
        for t in self.triples:
            if len(t) != 3:
                raise InputError(f"triple must have three components, got {t!r}")
            head, rel, tail = t
            if head not in self.entities:
                raise InputError(f"triple {t!r} references undeclared entity {head!r}")
            if tail not in self.entities:
                raise InputError(f"triple {t!r} references undeclared entity {tail!r}")
            if rel not in self.relations:
                raise InputError(f"triple {t!r} references undeclared relation {rel!r}")

    @classmethod
    def from_triples(cls, triples, pinned=()) -> "KnowledgeGraph":
        """Builds a graph declaring exactly the labels the triples (and pins) use."""
        triples = [tuple(t) for t in triples]
        entities = {t[0] for t in triples} | {t[2] for t in triples} | set(pinned)
        relations = {t[1] for t in triples}
        return cls(frozenset(entities), frozenset(relations), frozenset(triples), frozenset(pinned))

    @property
    def sorted_entities(self) -> tuple[str, ...]:
        return tuple(sorted(self.entities))

    @property
    def sorted_relations(self) -> tuple[str, ...]:
        return tuple(sorted(self.relations))

    @property
    def sorted_triples(self) -> tuple[Triple, ...]:
        # label sort order equals index order into the sorted tables
        return tuple(sorted(self.triples))

    def referenced_entities(self) -> frozenset[str]:
        return frozenset(x for t in self.triples for x in (t[0], t[2]))

    def referenced_relations(self) -> frozenset[str]:
        return frozenset(t[1] for t in self.triples)

    def is_canonical(self) -> bool:
        used_e = self.referenced_entities()
        if any(e not in used_e and e not in self.pinned for e in self.entities):
            return False
        used_r = self.referenced_relations()
        return all(r in used_r for r in self.relations)


def canonicalize(g: KnowledgeGraph) -> KnowledgeGraph:
    """Drops unreferenced, unpinned entities and unreferenced relations.

    Idempotent, and independent of any input ordering since graphs are sets.
    """
    used_e = g.referenced_entities()
    used_r = g.referenced_relations()
    return KnowledgeGraph(
        entities=frozenset(e for e in g.entities if e in used_e or e in g.pinned),
        relations=frozenset(r for r in g.relations if r in used_r),
        triples=g.triples,
        pinned=g.pinned,
    )


def union(a: KnowledgeGraph, b: KnowledgeGraph) -> KnowledgeGraph:
    """Set union of two graphs; canonical whenever both inputs are."""
    return KnowledgeGraph(
        a.entities | b.entities,
        a.relations | b.relations,
        a.triples | b.triples,
        a.pinned | b.pinned,
    )


# ---------------------------------------------------------------------------
# Binary codec


def encode(g: KnowledgeGraph) -> bytes:
    if not g.is_canonical():
        raise InputError("graph must be canonical before encoding; call canonicalize() first")
    entities = g.sorted_entities
    relations = g.sorted_relations
    e_index = {e: i for i, e in enumerate(entities)}
    r_index = {r: i for i, r in enumerate(relations)}

    out = bytearray(KG_MAGIC)
    out.append(KG_VERSION)
    write_uvarint(out, len(entities))
    for label in entities:
        raw = label.encode("utf-8")
        write_uvarint(out, len(raw))
        out += raw
    write_uvarint(out, len(relations))
    for label in relations:
        raw = label.encode("utf-8")
        write_uvarint(out, len(raw))
        out += raw
    pins = sorted(e_index[p] for p in g.pinned)
    write_uvarint(out, len(pins))
    for idx in pins:
        write_uvarint(out, idx)
    indexed = sorted((e_index[h], r_index[r], e_index[t]) for h, r, t in g.triples)
    write_uvarint(out, len(indexed))
    prev_head = 0
    for head, rel, tail in indexed:
        write_uvarint(out, head - prev_head)
        write_uvarint(out, rel)
        write_uvarint(out, tail)
        prev_head = head
    return bytes(out)


def _read_varint(data: bytes, pos: int, what: str) -> tuple[int, int]:
    try:
        return read_uvarint(data, pos)
    except ValueError as exc:
        raise KgParseError(f"{what}: {exc}", pos) from None


def _read_label_table(data: bytes, pos: int, kind: str) -> tuple[tuple[str, ...], int]:
    count, pos = _read_varint(data, pos, f"{kind} count")
    labels = []
    previous = None
    for _ in range(count):
        length, pos = _read_varint(data, pos, f"{kind} label length")
        if pos + length > len(data):
            raise KgParseError(f"truncated {kind} label", pos)
        raw = data[pos : pos + length]
        try:
            label = raw.decode("utf-8")
        except UnicodeDecodeError:
            raise KgParseError(f"{kind} label is not valid UTF-8", pos) from None
        if not label:
            raise KgParseError(f"empty {kind} label", pos)
        if previous is not None and label <= previous:
            raise KgParseError(f"{kind} labels out of canonical order", pos)
        labels.append(label)
        previous = label
        pos += length
    return tuple(labels), pos


def decode(data: bytes) -> KnowledgeGraph:
    """Inverse of encode; rejects anything a canonical encode cannot produce."""
    data = bytes(data)
    if len(data) < 2 or data[:2] != KG_MAGIC:
        raise KgParseError("bad magic", 0)
    if len(data) < 3:
        raise KgParseError("truncated header", 2)
    if data[2] != KG_VERSION:
        raise KgParseError(f"unsupported version {data[2]}", 2)
    pos = 3
    entities, pos = _read_label_table(data, pos, "entity")
    relations, pos = _read_label_table(data, pos, "relation")

    pin_count, pos = _read_varint(data, pos, "pin count")
    pins = []
    prev = -1
    for _ in range(pin_count):
        idx, pos = _read_varint(data, pos, "pin index")
        if idx >= len(entities):
            raise KgParseError(f"pin index {idx} out of range", pos)
        if idx <= prev:
            raise KgParseError("pin indices out of canonical order", pos)
        pins.append(entities[idx])
        prev = idx

    triple_count, pos = _read_varint(data, pos, "triple count")
    triples = []
    prev_key = None
    prev_head = 0
    for _ in range(triple_count):
        delta, pos = _read_varint(data, pos, "triple head delta")
        rel, pos = _read_varint(data, pos, "triple relation index")
        tail, pos = _read_varint(data, pos, "triple tail index")
        head = prev_head + delta
        if head >= len(entities):
            raise KgParseError(f"head index {head} out of range", pos)
        if rel >= len(relations):
            raise KgParseError(f"relation index {rel} out of range", pos)
        if tail >= len(entities):
            raise KgParseError(f"tail index {tail} out of range", pos)
        key = (head, rel, tail)
        if prev_key is not None and key <= prev_key:
            raise KgParseError("triples out of canonical order", pos)
        triples.append((entities[head], relations[rel], entities[tail]))
        prev_key = key
        prev_head = head
    if pos != len(data):
        raise KgParseError("trailing bytes after graph", pos)
    try:
        graph = KnowledgeGraph(
            frozenset(entities), frozenset(relations), frozenset(triples), frozenset(pins)
        )
    except InputError as exc:
        raise KgParseError(str(exc), pos) from None
    if not graph.is_canonical():
        raise KgParseError("encoded graph is not canonical", pos)
    reencoded = encode(graph)
    if reencoded != data:
        # e.g. a padded (non-minimal) varint; decode accepts only the exact
        # bytes encode produces, keeping the codec a bijection
        offset = next(
            (i for i, (p, q) in enumerate(zip(reencoded, data)) if p != q),
            min(len(reencoded), len(data)),
        )
        raise KgParseError("non-canonical encoding", offset)
    return graph


# ---------------------------------------------------------------------------
# Text format


def kg_from_text(text: str) -> KnowledgeGraph:
    """Parses the tab-separated triple format.

    Lines are ``head<TAB>relation<TAB>tail``; ``#pin<TAB>label`` pins an
    entity; blank lines are ignored.
    """
    triples = []
    pins = []
    for line_no, raw in enumerate(text.splitlines(), 1):
        if not raw.strip():
            continue
        if raw.startswith("#pin\t"):
            label = raw[len("#pin\t") :]
            if not label:
                raise InputError(f"line {line_no}: #pin needs a label")
            pins.append(label)
            continue
        if raw.startswith("#"):
            raise InputError(f"line {line_no}: unknown directive {raw.split(chr(9))[0]!r}")
        parts = raw.split("\t")
        if len(parts) != 3 or not all(parts):
            raise InputError(f"line {line_no}: expected head<TAB>relation<TAB>tail")
        triples.append(tuple(parts))
    return KnowledgeGraph.from_triples(triples, pins)


# ---------------------------------------------------------------------------
# Edit scripts


@dataclass(frozen=True)
class EditScript:
    """Ordered operations plus the canonical source graph they index into."""

    ops: tuple[tuple, ...]
    source: KnowledgeGraph = field(default_factory=KnowledgeGraph)


@dataclass(frozen=True)
class NovelMarks:
    """Entities and triples flagged as learned after the novelty."""

    entities: frozenset[str] = frozenset()
    triples: frozenset[Triple] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "entities", frozenset(self.entities))
        object.__setattr__(self, "triples", frozenset(tuple(t) for t in self.triples))


def edit_script(a: KnowledgeGraph, b: KnowledgeGraph) -> EditScript:
    """Canonical set-difference script: deletions (triples, then orphaned
    labels) followed by additions (labels, then triples), each group sorted.

    Pins sit outside the edit model: the target's pins must be exactly the
    source pins that survive, otherwise the difference is not expressible.
    """
    for g, name in ((a, "source"), (b, "target")):
        if not g.is_canonical():
            raise InputError(f"{name} graph must be canonical")
    if b.pinned != (a.pinned & b.entities):
        raise InputError("pin changes are not expressible as edit operations")
    ops: list[tuple] = []
    ops += [("del_triple",) + t for t in sorted(a.triples - b.triples)]
    ops += [("del_entity", e) for e in sorted(a.entities - b.entities)]
    ops += [("del_relation", r) for r in sorted(a.relations - b.relations)]
    ops += [("add_entity", e) for e in sorted(b.entities - a.entities)]
    ops += [("add_relation", r) for r in sorted(b.relations - a.relations)]
    ops += [("add_triple",) + t for t in sorted(b.triples - a.triples)]
    return EditScript(tuple(ops), a)


def apply_script(script: EditScript, a: KnowledgeGraph) -> KnowledgeGraph:
    """Applies the operations to ``a``; the result is canonicalized.

    Raises EditApplyError naming the first operation invalid for the current
    graph state.
    """
    entities = set(a.entities)
    relations = set(a.relations)
    triples = set(a.triples)
    pins = set(a.pinned)

    def fail(i, kind, message):
        raise EditApplyError(f"operation {i} ({kind}): {message}", i)

    for i, op in enumerate(script.ops):
        kind = op[0]
        if kind == "del_triple":
            t = op[1:]
            if t not in triples:
                fail(i, kind, f"triple {t!r} not present")
            triples.discard(t)
        elif kind == "del_entity":
            e = op[1]
            if e not in entities:
                fail(i, kind, f"entity {e!r} not present")
            if any(e in (h, t) for h, _, t in triples):
                fail(i, kind, f"entity {e!r} is still referenced")
            entities.discard(e)
            pins.discard(e)
        elif kind == "del_relation":
            r = op[1]
            if r not in relations:
                fail(i, kind, f"relation {r!r} not present")
            if any(rel == r for _, rel, _ in triples):
                fail(i, kind, f"relation {r!r} is still referenced")
            relations.discard(r)
        elif kind == "add_entity":
            e = op[1]
            if e in entities:
                fail(i, kind, f"entity {e!r} already present")
            entities.add(e)
        elif kind == "add_relation":
            r = op[1]
            if r in relations:
                fail(i, kind, f"relation {r!r} already present")
            relations.add(r)
        elif kind == "add_triple":
            h, r, t = op[1:]
            if (h, r, t) in triples:
                fail(i, kind, f"triple {(h, r, t)!r} already present")
            if h not in entities or t not in entities:
                fail(i, kind, f"triple {(h, r, t)!r} references an undeclared entity")
            if r not in relations:
                fail(i, kind, f"triple {(h, r, t)!r} references an undeclared relation")
            triples.add((h, r, t))
        else:
            fail(i, kind, "unknown operation")
    result = KnowledgeGraph(
        frozenset(entities), frozenset(relations), frozenset(triples), frozenset(pins & entities)
    )
    return canonicalize(result)


def serialize_script(script: EditScript) -> bytes:
    """Byte serialization used for script code lengths.

    Index tables start from the source graph's canonical tables and grow as
    the script adds labels, so added labels are addressable by later triple
    operations.
    """
    e_index = {e: i for i, e in enumerate(script.source.sorted_entities)}
    r_index = {r: i for i, r in enumerate(script.source.sorted_relations)}

    def entity_ref(label):
        if label not in e_index:
            raise InputError(f"script references unknown entity {label!r}")
        return e_index[label]

    def relation_ref(label):
        if label not in r_index:
            raise InputError(f"script references unknown relation {label!r}")
        return r_index[label]

    out = bytearray()
    write_uvarint(out, len(script.ops))
    for op in script.ops:
        kind = op[0]
        if kind not in _OP_TAGS:
            raise InputError(f"unknown edit operation {kind!r}")
        out.append(_OP_TAGS[kind])
        if kind in ("add_entity", "add_relation"):
            raw = op[1].encode("utf-8")
            write_uvarint(out, len(raw))
            out += raw
            table = e_index if kind == "add_entity" else r_index
            if op[1] in table:
                raise InputError(f"script adds already-indexed label {op[1]!r}")
            table[op[1]] = len(table)
        elif kind == "del_entity":
            write_uvarint(out, entity_ref(op[1]))
        elif kind == "del_relation":
            write_uvarint(out, relation_ref(op[1]))
        else:  # add_triple / del_triple
            h, r, t = op[1:]
            write_uvarint(out, entity_ref(h))
            write_uvarint(out, relation_ref(r))
            write_uvarint(out, entity_ref(t))
    return bytes(out)


def script_codelength(script: EditScript) -> float:
    """Exact bit length of the serialized script."""
    return float(8 * len(serialize_script(script)))


def strip_novel(post: KnowledgeGraph, marks: NovelMarks) -> KnowledgeGraph:
    """Removes marked triples and entities (with any triples touching marked
    entities) from the post graph and re-canonicalizes."""
    missing_entities = marks.entities - post.entities
    if missing_entities:
        raise InputError(f"marked entities absent from graph: {sorted(missing_entities)}")
    missing_triples = marks.triples - post.triples
    if missing_triples:
        raise InputError(f"marked triples absent from graph: {sorted(missing_triples)}")
    kept = frozenset(
        t
        for t in post.triples
        if t not in marks.triples and t[0] not in marks.entities and t[2] not in marks.entities
    )
    return canonicalize(
        KnowledgeGraph(
            post.entities - marks.entities,
            post.relations,
            kept,
            post.pinned - marks.entities,
        )
    )
