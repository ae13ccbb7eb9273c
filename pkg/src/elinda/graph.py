"""Immutable, fully indexed in-memory RDF graph.

Terms are interned to dense integer ids; triples are stored once and reachable
through subject/predicate/object and pair indexes, plus derived class-hierarchy
and label indexes. A graph never mutates in place: `extend` builds a new graph
with a bumped version, so concurrent readers of the old version are unaffected.
"""

from __future__ import annotations

from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Set, Tuple

from .errors import ElindaError
from .terms import (
    CLASS_DECL_URIS,
    RDF_TYPE,
    RDFS_LABEL,
    RDFS_SUBCLASSOF,
    Term,
    local_name,
    uri,
)
from .ntriples import TripleOfTerms

DEFAULT_LABEL_PREFERENCE: Tuple[str, ...] = ("en", "", "*")


class Graph:
    def __init__(self, triples: Iterable[TripleOfTerms], version: int = 1):
        self.version = version
        self._terms: List[Term] = []
        self._ids: Dict[Term, int] = {}
        self._triples: List[Tuple[int, int, int]] = []
        self._triple_set: Set[Tuple[int, int, int]] = set()
        self._by_s: Dict[int, List[int]] = {}
        self._by_p: Dict[int, List[int]] = {}
        self._by_o: Dict[int, List[int]] = {}
        self._sp: Dict[Tuple[int, int], List[int]] = {}
        self._po: Dict[Tuple[int, int], List[int]] = {}
        self._class_index: Dict[int, Set[int]] = {}
        self._subclass_index: Dict[int, Set[int]] = {}
        self._labels: Dict[int, List[Term]] = {}
        self._declared_classes: Set[int] = set()
        self._instance_uris: Optional[FrozenSet[str]] = None

        type_id = self._intern(uri(RDF_TYPE))
        subclass_id = self._intern(uri(RDFS_SUBCLASSOF))
        label_id = self._intern(uri(RDFS_LABEL))
        decl_ids = {self._intern(uri(u)) for u in CLASS_DECL_URIS}

        intern = self._intern
        for s, p, o in triples:
            if not s.is_uri or not p.is_uri:
                raise ElindaError(
                    f"subject and predicate must be URIs: {s.lexical} {p.lexical}"
                )
            sid, pid, oid = intern(s), intern(p), intern(o)
            key = (sid, pid, oid)
            if key in self._triple_set:
                continue
            self._triple_set.add(key)
            idx = len(self._triples)
            self._triples.append(key)
            self._by_s.setdefault(sid, []).append(idx)
            self._by_p.setdefault(pid, []).append(idx)
            self._by_o.setdefault(oid, []).append(idx)
            self._sp.setdefault((sid, pid), []).append(idx)
            self._po.setdefault((pid, oid), []).append(idx)
            if pid == type_id:
                self._class_index.setdefault(oid, set()).add(sid)
                if oid in decl_ids:
                    self._declared_classes.add(sid)
            elif pid == subclass_id:
                self._subclass_index.setdefault(oid, set()).add(sid)
            elif pid == label_id and o.is_literal:
                self._labels.setdefault(sid, []).append(o)

    # interning -------------------------------------------------------------

    def _intern(self, term: Term) -> int:
        tid = self._ids.get(term)
        if tid is None:
            tid = len(self._terms)
            self._ids[term] = tid
            self._terms.append(term)
        return tid

    def _uri_id(self, u: str) -> Optional[int]:
        return self._ids.get(uri(u))

    def term(self, tid: int) -> Term:
        return self._terms[tid]

    # basic access ----------------------------------------------------------

    def __len__(self) -> int:
        return len(self._triples)

    def __contains__(self, triple: TripleOfTerms) -> bool:
        ids = tuple(self._ids.get(t) for t in triple)
        return None not in ids and ids in self._triple_set

    def triples(self) -> Iterator[TripleOfTerms]:
        terms = self._terms
        for s, p, o in self._triples:
            yield (terms[s], terms[p], terms[o])

    def triple_slice(self, start: int, stop: int) -> Iterator[TripleOfTerms]:
        """Triples by physical position, used for chunked incremental evaluation."""
        terms = self._terms
        for s, p, o in self._triples[start:stop]:
            yield (terms[s], terms[p], terms[o])

    def match(
        self,
        s: Optional[Term] = None,
        p: Optional[Term] = None,
        o: Optional[Term] = None,
    ) -> Iterator[TripleOfTerms]:
        """All triples matching the pattern; None is a wildcard."""
        sid = pid = oid = None
        if s is not None:
            sid = self._ids.get(s)
            if sid is None:
                return
        if p is not None:
            pid = self._ids.get(p)
            if pid is None:
                return
        if o is not None:
            oid = self._ids.get(o)
            if oid is None:
                return
        if sid is not None and pid is not None and oid is not None:
            if (sid, pid, oid) in self._triple_set:
                yield (self._terms[sid], self._terms[pid], self._terms[oid])
            return
        if sid is not None and pid is not None:
            idxs = self._sp.get((sid, pid), ())
        elif pid is not None and oid is not None:
            idxs = self._po.get((pid, oid), ())
        elif sid is not None:
            idxs = self._by_s.get(sid, ())
        elif oid is not None:
            idxs = self._by_o.get(oid, ())
        elif pid is not None:
            idxs = self._by_p.get(pid, ())
        else:
            idxs = range(len(self._triples))
        terms = self._terms
        for i in idxs:
            ts, tp, to = self._triples[i]
            if oid is not None and to != oid:
                continue
            if sid is not None and ts != sid:
                continue
            yield (terms[ts], terms[tp], terms[to])

    # typed accessors -------------------------------------------------------

    def objects_of(self, subject: str, predicate: str) -> List[Term]:
        sid, pid = self._uri_id(subject), self._uri_id(predicate)
        if sid is None or pid is None:
            return []
        return [self._terms[self._triples[i][2]] for i in self._sp.get((sid, pid), ())]

    def subjects_with(self, predicate: str, obj: Term) -> Set[str]:
        pid, oid = self._uri_id(predicate), self._ids.get(obj)
        if pid is None or oid is None:
            return set()
        return {
            self._terms[self._triples[i][0]].lexical
            for i in self._po.get((pid, oid), ())
        }

    def out_edges(self, subject: str) -> Iterator[Tuple[str, Term]]:
        sid = self._uri_id(subject)
        if sid is None:
            return
        for i in self._by_s.get(sid, ()):
            _, p, o = self._triples[i]
            yield (self._terms[p].lexical, self._terms[o])

    def in_edges(self, obj: str) -> Iterator[Tuple[str, str]]:
        oid = self._uri_id(obj)
        if oid is None:
            return
        for i in self._by_o.get(oid, ()):
            s, p, _ = self._triples[i]
            yield (self._terms[s].lexical, self._terms[p].lexical)

    # class hierarchy -------------------------------------------------------

    def instances_of(self, class_uri: str) -> FrozenSet[str]:
        cid = self._uri_id(class_uri)
        if cid is None:
            return frozenset()
        return frozenset(self._terms[i].lexical for i in self._class_index.get(cid, ()))

    def classes_of(self, u: str) -> FrozenSet[str]:
        return frozenset(t.lexical for t in self.objects_of(u, RDF_TYPE) if t.is_uri)

    def direct_subclasses(self, class_uri: str) -> FrozenSet[str]:
        cid = self._uri_id(class_uri)
        if cid is None:
            return frozenset()
        return frozenset(
            self._terms[i].lexical for i in self._subclass_index.get(cid, ())
        )

    def superclasses_of(self, class_uri: str) -> FrozenSet[str]:
        return frozenset(
            t.lexical for t in self.objects_of(class_uri, RDFS_SUBCLASSOF) if t.is_uri
        )

    def subclass_closure(self, class_uri: str, include_self: bool = True) -> Set[str]:
        """Transitive subclasses, cycle-safe."""
        seen: Set[str] = set()
        stack = [class_uri]
        while stack:
            c = stack.pop()
            if c in seen:
                continue
            seen.add(c)
            stack.extend(self.direct_subclasses(c))
        if not include_self:
            seen.discard(class_uri)
        return seen

    def total_subclass_count(self, class_uri: str) -> int:
        return len(self.subclass_closure(class_uri, include_self=False))

    def transitive_instances(self, class_uri: str) -> FrozenSet[str]:
        out: Set[str] = set()
        for c in self.subclass_closure(class_uri):
            out |= self.instances_of(c)
        return frozenset(out)

    def declared_classes(self) -> FrozenSet[str]:
        return frozenset(self._terms[i].lexical for i in self._declared_classes)

    def top_level_classes(self) -> List[str]:
        return sorted(
            c for c in self.declared_classes() if not self.superclasses_of(c)
        )

    def instance_uris(self) -> FrozenSet[str]:
        """Subjects typed with at least one non-declaration class."""
        if self._instance_uris is None:
            decl = set(CLASS_DECL_URIS)
            out: Set[str] = set()
            for cid, subjects in self._class_index.items():
                if self._terms[cid].lexical in decl:
                    continue
                out.update(self._terms[s].lexical for s in subjects)
            self._instance_uris = frozenset(out)
        return self._instance_uris

    def has_uri(self, u: str) -> bool:
        return self._uri_id(u) is not None

    # labels ----------------------------------------------------------------

    def labels_for(self, u: str) -> List[Term]:
        tid = self._uri_id(u)
        if tid is None:
            return []
        return list(self._labels.get(tid, ()))

    def label_of(
        self, u: str, preference: Sequence[str] = DEFAULT_LABEL_PREFERENCE
    ) -> str:
        labels = self.labels_for(u)
        for pref in preference:
            if pref == "*":
                candidates = labels
            elif pref == "":
                candidates = [t for t in labels if not t.language]
            else:
                candidates = [t for t in labels if t.language == pref]
            if candidates:
                return min(t.lexical for t in candidates)
        return local_name(u)

    # mutation --------------------------------------------------------------

    def extend(self, triples: Iterable[TripleOfTerms]) -> "Graph":
        """New graph with the extra triples appended; version bumped by one."""
        def chain() -> Iterator[TripleOfTerms]:
            yield from self.triples()
            yield from triples

        return Graph(chain(), version=self.version + 1)


def build_graph(triples: Iterable[TripleOfTerms]) -> Graph:
    return Graph(triples, version=1)


def dataset_stats(g: Graph) -> Dict[str, int]:
    return {
        "triple_count": len(g),
        "class_count": len(g.declared_classes()),
    }


def list_classes(
    g: Graph, preference: Sequence[str] = DEFAULT_LABEL_PREFERENCE
) -> List[Dict[str, str]]:
    entries = [
        {"uri": c, "label": g.label_of(c, preference)} for c in g.declared_classes()
    ]
    entries.sort(key=lambda e: (e["label"], e["uri"]))
    return entries
