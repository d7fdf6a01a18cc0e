"""Relational export: the library ontology over the translated corpus.

Every declaration gets a class assertion and a source reference, every
theory a declares-edge per declaration, and every statement-bearing
declaration a uses-edge per constant occurring in its statement plus,
for theorems, one per recorded dependency.  The vocabulary is the small
subset frozen in docs/ulo-subset.md; output formats are RDF/XML and an
optional line-per-triple format for diffing.
"""

from __future__ import annotations

import lzma
from collections import Counter
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Optional, Sequence, Union
from xml.sax.saxutils import escape, quoteattr

from .kernel import constants, spine, Pi, Const, SORT_TYPE
from .omdoc import FormalConstant, NestedTheory, OmdocDoc
from .uris import Uri

ULO = "https://mathhub.info/ulo#"
RDF_TYPE = "rdf:type"
USES = "ulo:uses"
DECLARES = "ulo:declares"
INDUCTIVE_ON = "ulo:inductive-on"
SOURCEREF = "ulo:sourceref"

PREDICATES = (RDF_TYPE, DECLARES, USES, INDUCTIVE_ON, SOURCEREF)

_PRED_IRIS = {
    RDF_TYPE: "http://www.w3.org/1999/02/22-rdf-syntax-ns#type",
    USES: ULO + "uses",
    DECLARES: ULO + "declares",
    INDUCTIVE_ON: ULO + "inductive-on",
    SOURCEREF: ULO + "sourceref",
}

# statement-bearing kinds whose classifiers feed the dependency graph
_FACT_KINDS = {"thm", "axiom", "classrel", "arity"}


class OntologyError(Exception):
    pass


class UnknownUri(OntologyError):
    pass


@dataclass(frozen=True)
class RdfTriple:
    subject: Uri
    predicate: str
    obj: Union[Uri, str]

    def sort_key(self) -> tuple[str, str, str]:
        o = self.obj.render() if isinstance(self.obj, Uri) else self.obj
        return (self.subject.render(), self.predicate, o)


def _class_iri(kind: str) -> str:
    if kind in ("classrel", "arity"):
        kind = "axiom"
    return ULO + kind


def _inductive_target(c: FormalConstant) -> Optional[Uri]:
    """Head type constructor of the first curried argument, when there is
    one: the type the specification recurses over."""
    e = c.classifier
    while isinstance(e, Pi) and e.domain == SORT_TYPE:
        e = e.codomain
    if not isinstance(e, Pi):
        return None
    head, _ = spine(e.domain)
    if isinstance(head, Const):
        return head.uri
    return None


def emit_rdf(docs: Sequence[OmdocDoc]) -> list[RdfTriple]:
    """The full triple set for a corpus, deduplicated and in
    deterministic (subject, predicate, object) order."""
    declared: set[str] = set()
    for doc in docs:
        for theory in doc.theories():
            declared.add(theory.uri.render())
            for c in theory.items:
                if isinstance(c, FormalConstant):
                    declared.add(c.uri.render())

    triples: set[RdfTriple] = set()
    for doc in docs:
        for theory in doc.theories():
            kind = theory.uri.kind if theory.uri.kind in ("theory", "locale") \
                else "theory"
            triples.add(RdfTriple(theory.uri, RDF_TYPE, _class_iri(kind)))
            for item in theory.items:
                if isinstance(item, NestedTheory):
                    triples.add(RdfTriple(theory.uri, DECLARES,
                                          item.doc.uri))
                    continue
                if not isinstance(item, FormalConstant):
                    continue
                c = item
                triples.add(RdfTriple(c.uri, RDF_TYPE, _class_iri(c.uri.kind)))
                triples.add(RdfTriple(theory.uri, DECLARES, c.uri))
                file = c.meta("file")
                if file:
                    triples.add(RdfTriple(
                        c.uri, SOURCEREF,
                        f"{file}:{c.meta('line') or 0}:{c.meta('offset') or 0}"))
                if c.uri.kind in _FACT_KINDS:
                    for used in constants(c.classifier):
                        if used.render() in declared:
                            triples.add(RdfTriple(c.uri, USES, used))
                if c.uri.kind == "thm" and c.deps:
                    for dep in c.deps:
                        try:
                            dep_uri = Uri.parse(dep)
                        except Exception:
                            continue
                        if dep.strip() and dep in declared:
                            triples.add(RdfTriple(c.uri, USES, dep_uri))
                if c.meta("spec_kind"):
                    target = _inductive_target(c)
                    if target is not None and target.render() in declared:
                        triples.add(RdfTriple(c.uri, INDUCTIVE_ON, target))
    return sorted(triples, key=RdfTriple.sort_key)


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------

def uses_closure(start: Uri, triples: Iterable[RdfTriple],
                 transitive: bool = False) -> list[Uri]:
    """Direct uses-neighbors, or the reflexive-transitive closure.

    Output is deterministic: sorted by rendered URI."""
    adjacency: dict[str, list[Uri]] = {}
    known: set[str] = set()
    for t in triples:
        known.add(t.subject.render())
        if isinstance(t.obj, Uri):
            known.add(t.obj.render())
        if t.predicate == USES and isinstance(t.obj, Uri):
            adjacency.setdefault(t.subject.render(), []).append(t.obj)
    key = start.render()
    if key not in known:
        raise UnknownUri(key)
    if not transitive:
        out = {u.render(): u for u in adjacency.get(key, [])}
        return [out[k] for k in sorted(out)]
    seen: dict[str, Uri] = {key: start}
    work = [start]
    while work:
        u = work.pop()
        for v in adjacency.get(u.render(), []):
            if v.render() not in seen:
                seen[v.render()] = v
                work.append(v)
    return [seen[k] for k in sorted(seen)]


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------

@dataclass
class StatsReport:
    theories: int = 0
    locales: int = 0
    classes: int = 0
    types: int = 0
    consts: int = 0
    axioms: int = 0
    thms: int = 0
    relations: Counter = field(default_factory=Counter)

    @property
    def individuals(self) -> int:
        return self.classes + self.types + self.consts + self.axioms + self.thms

    @property
    def relations_total(self) -> int:
        return sum(self.relations.values())

    def rows(self) -> list[tuple[str, int]]:
        out = [
            ("theories", self.theories),
            ("locales", self.locales),
            ("classes", self.classes),
            ("types", self.types),
            ("consts", self.consts),
            ("axioms", self.axioms),
            ("thms", self.thms),
            ("individuals", self.individuals),
            ("relations", self.relations_total),
        ]
        for pred in PREDICATES:
            out.append((pred, self.relations.get(pred, 0)))
        return out

    def format(self) -> str:
        return "".join(f"{k}\t{v}\n" for k, v in self.rows())


def stats(docs: Sequence[OmdocDoc],
          triples: Optional[Sequence[RdfTriple]] = None) -> StatsReport:
    """Exact corpus counts; stable across input permutations."""
    report = StatsReport()
    for doc in docs:
        for theory in doc.theories():
            if theory.uri.kind == "locale":
                report.locales += 1
            else:
                report.theories += 1
            for item in theory.items:
                if not isinstance(item, FormalConstant):
                    continue
                kind = item.uri.kind
                if kind == "type":
                    report.types += 1
                elif kind == "const":
                    report.consts += 1
                elif kind in ("axiom", "classrel", "arity"):
                    report.axioms += 1
                elif kind == "thm":
                    report.thms += 1
                elif kind == "class":
                    report.classes += 1
    if triples is None:
        triples = emit_rdf(docs)
    for t in triples:
        report.relations[t.predicate] += 1
    return report


# ---------------------------------------------------------------------------
# Output formats
# ---------------------------------------------------------------------------

def _open_sink(sink: Union[str, BinaryIO], compress: bool):
    close = False
    if isinstance(sink, (str, bytes)):
        sink = open(sink, "wb")
        close = True
    out = lzma.LZMAFile(sink, "wb") if compress else sink
    return sink, out, close


def write_rdf_xml(triples: Sequence[RdfTriple], sink: Union[str, BinaryIO],
                  compress: bool = False) -> None:
    """RDF/XML grouped by subject, deterministic byte-for-byte."""
    raw, out, close = _open_sink(sink, compress)
    try:
        lines = ["<?xml version='1.0' encoding='utf-8'?>\n",
                 '<rdf:RDF xmlns:rdf="http://www.w3.org/1999/02/22-rdf-syntax-ns#" '
                 f'xmlns:ulo="{ULO}">\n']
        by_subject: dict[str, list[RdfTriple]] = {}
        for t in triples:
            by_subject.setdefault(t.subject.render(), []).append(t)
        for subject in sorted(by_subject):
            lines.append(f"  <rdf:Description rdf:about={quoteattr(subject)}>\n")
            for t in sorted(by_subject[subject], key=RdfTriple.sort_key):
                pred = t.predicate
                if isinstance(t.obj, Uri):
                    lines.append(f"    <{pred} rdf:resource="
                                 f"{quoteattr(t.obj.render())}/>\n")
                elif t.predicate == RDF_TYPE:
                    lines.append(f"    <{pred} rdf:resource={quoteattr(t.obj)}/>\n")
                else:
                    lines.append(f"    <{pred}>{escape(t.obj)}</{pred}>\n")
            lines.append("  </rdf:Description>\n")
            if len(lines) > 4096:
                out.write("".join(lines).encode("utf-8"))
                lines.clear()
        lines.append("</rdf:RDF>\n")
        out.write("".join(lines).encode("utf-8"))
    finally:
        if compress:
            out.close()
        if close:
            raw.close()


def _nt_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")


def write_ntriples(triples: Sequence[RdfTriple], sink: Union[str, BinaryIO],
                   compress: bool = False) -> None:
    """One triple per line, diff-friendly."""
    raw, out, close = _open_sink(sink, compress)
    try:
        lines = []
        for t in triples:
            pred = _PRED_IRIS[t.predicate]
            if isinstance(t.obj, Uri):
                obj = f"<{t.obj.render()}>"
            elif t.predicate == RDF_TYPE:
                obj = f"<{t.obj}>"
            else:
                obj = f'"{_nt_escape(t.obj)}"'
            lines.append(f"<{t.subject.render()}> <{pred}> {obj} .\n")
            if len(lines) > 8192:
                out.write("".join(lines).encode("utf-8"))
                lines.clear()
        out.write("".join(lines).encode("utf-8"))
    finally:
        if compress:
            out.close()
        if close:
            raw.close()
