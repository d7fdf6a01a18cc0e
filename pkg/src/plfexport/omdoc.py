"""Serialization of translated theories as an OMDoc-subset XML stream.

One document per theory: formal constants (with full-URI symbols,
OpenMath-style expression markup, and source references) interleaved with
narrative fragments carrying the verbatim command source, plus includes,
nested locale theories, and morphisms.  Writing is streaming, one item at
a time, and optionally XZ-compressed; `read_omdoc` restores a document
that compares structurally equal.  The exact element inventory is frozen
in docs/omdoc-subset.md.
"""

from __future__ import annotations

import io
import lzma
import xml.etree.ElementTree as etree
from dataclasses import dataclass, field
from typing import BinaryIO, Iterator, Optional, Union
from xml.sax.saxutils import escape, quoteattr

from .content import XZ_MAGIC, _Pushback
from .kernel import (
    App, Bound, Const, Decl, Expr, Lam, Morphism, Pi, SORT_KIND, SORT_TYPE,
    Sort, Theory, Var,
)
from .translator import PLF_LONG, TheoryTranslation
from .uris import Uri, make_uri


class OmdocError(Exception):
    pass


class SerializationError(OmdocError):
    pass


class SinkError(OmdocError):
    pass


class OmdocSyntaxError(OmdocError):
    pass


class OmdocSchemaError(OmdocError):
    def __init__(self, message: str, path: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# ---------------------------------------------------------------------------
# Document model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NarrativeFragment:
    text: str
    file: str = ""
    line: int = 0
    offset: int = 0


@dataclass(frozen=True)
class FormalConstant:
    uri: Uri
    classifier: Expr
    definiens: Optional[Expr] = None
    unchecked: bool = False
    deps: Optional[tuple[str, ...]] = None
    metadata: tuple[tuple[str, str], ...] = ()

    def meta(self, key: str) -> Optional[str]:
        for k, v in self.metadata:
            if k == key:
                return v
        return None


@dataclass(frozen=True)
class Include:
    uri: Uri


@dataclass
class NestedTheory:
    doc: "OmdocDoc"

    def __eq__(self, other):
        return isinstance(other, NestedTheory) and self.doc == other.doc


@dataclass
class MorphismItem:
    uri: Uri
    dom: Uri
    cod: Uri
    assignments: tuple[tuple[Uri, Expr], ...] = ()

    def __eq__(self, other):
        return (isinstance(other, MorphismItem)
                and (self.uri, self.dom, self.cod, self.assignments)
                == (other.uri, other.dom, other.cod, other.assignments))


OmdocItem = Union[NarrativeFragment, FormalConstant, Include, NestedTheory,
                  MorphismItem]


@dataclass
class OmdocDoc:
    uri: Uri
    meta: Uri
    items: list[OmdocItem] = field(default_factory=list)

    def constants(self) -> Iterator[FormalConstant]:
        for item in self.items:
            if isinstance(item, FormalConstant):
                yield item
            elif isinstance(item, NestedTheory):
                yield from item.doc.constants()

    def theories(self) -> Iterator["OmdocDoc"]:
        yield self
        for item in self.items:
            if isinstance(item, NestedTheory):
                yield from item.doc.theories()

    def morphisms(self) -> Iterator[MorphismItem]:
        for item in self.items:
            if isinstance(item, MorphismItem):
                yield item
            elif isinstance(item, NestedTheory):
                yield from item.doc.morphisms()

    def __eq__(self, other):
        return (isinstance(other, OmdocDoc)
                and (self.uri, self.meta, self.items)
                == (other.uri, other.meta, other.items))


# ---------------------------------------------------------------------------
# Building documents from translations
# ---------------------------------------------------------------------------

def _constant_of(decl: Decl) -> FormalConstant:
    deps = decl.metadata.get("deps")
    meta = tuple(sorted((k, v) for k, v in decl.metadata.items()
                        if k not in ("deps", "src") and isinstance(v, str)))
    return FormalConstant(
        uri=decl.uri,
        classifier=decl.classifier,
        definiens=decl.definiens,
        unchecked=decl.unchecked,
        deps=tuple(deps) if isinstance(deps, tuple) else None,
        metadata=meta,
    )


def build_document(translation: TheoryTranslation, meta: Uri) -> OmdocDoc:
    doc = OmdocDoc(uri=translation.theory.uri, meta=meta)
    for tag, payload in translation.items:
        if tag == "include":
            doc.items.append(Include(payload))
        elif tag == "narrative":
            file, line, offset, text = payload
            doc.items.append(NarrativeFragment(text, file, line, offset))
        elif tag == "decl":
            doc.items.append(_constant_of(payload))
        elif tag == "locale":
            doc.items.append(NestedTheory(build_document(payload, meta)))
        elif tag == "morphism":
            m = payload
            doc.items.append(MorphismItem(m.uri, m.dom, m.cod,
                                          tuple(m.assignments)))
    return doc


def bootstrap_document(theory: Theory) -> OmdocDoc:
    doc = OmdocDoc(uri=theory.uri, meta=theory.uri)
    for d in theory.decls:
        doc.items.append(_constant_of(d))
    return doc


def doc_to_graph(doc: OmdocDoc) -> list:
    """Rebuild kernel theories and morphisms from a document, for
    re-checking previously written output."""
    out: list = []

    def walk(d: OmdocDoc) -> None:
        theory = Theory(uri=d.uri, meta=d.meta)
        nested: list[OmdocDoc] = []
        morphisms: list[MorphismItem] = []
        for item in d.items:
            if isinstance(item, Include):
                theory.includes += (item.uri,)
            elif isinstance(item, FormalConstant):
                metadata: dict[str, object] = dict(item.metadata)
                if item.deps is not None:
                    metadata["deps"] = item.deps
                theory.decls.append(Decl(item.uri, item.classifier,
                                         item.definiens, item.unchecked,
                                         metadata))
            elif isinstance(item, NestedTheory):
                nested.append(item.doc)
            elif isinstance(item, MorphismItem):
                morphisms.append(item)
        out.append(theory)
        for n in nested:
            walk(n)
        for m in morphisms:
            out.append(Morphism(m.uri, m.dom, m.cod, list(m.assignments)))

    walk(doc)
    return out


# ---------------------------------------------------------------------------
# Writing
# ---------------------------------------------------------------------------

def _binder_uris(meta: Uri) -> tuple[str, str]:
    base = meta.base
    return (make_uri("binder", PLF_LONG, "lambda", base).render(),
            make_uri("binder", PLF_LONG, "Pi", base).render())


def _expr_xml(e: Expr, lam_uri: str, pi_uri: str) -> str:
    if isinstance(e, Sort):
        if e == SORT_KIND:
            raise SerializationError(
                "framework-internal symbol (the kind sort) cannot be serialized")
        return "<omt/>"
    if isinstance(e, Const):
        return f"<oms uri={quoteattr(e.uri.render())}/>"
    if isinstance(e, Var):
        return f"<omv name={quoteattr(e.name)}/>"
    if isinstance(e, Bound):
        return f"<omb i=\"{e.index}\"/>"
    if isinstance(e, App):
        return (f"<oma>{_expr_xml(e.fun, lam_uri, pi_uri)}"
                f"{_expr_xml(e.arg, lam_uri, pi_uri)}</oma>")
    if isinstance(e, Lam):
        return (f"<ombind binder={quoteattr(lam_uri)} name={quoteattr(e.bound)}>"
                f"{_expr_xml(e.annot, lam_uri, pi_uri)}"
                f"{_expr_xml(e.body, lam_uri, pi_uri)}</ombind>")
    if isinstance(e, Pi):
        return (f"<ombind binder={quoteattr(pi_uri)} name={quoteattr(e.bound)}>"
                f"{_expr_xml(e.domain, lam_uri, pi_uri)}"
                f"{_expr_xml(e.codomain, lam_uri, pi_uri)}</ombind>")
    raise SerializationError(f"unknown expression node {type(e).__name__}")


def _item_xml(item: OmdocItem, lam: str, pi: str, indent: str) -> Iterator[str]:
    if isinstance(item, Include):
        yield f"{indent}<include uri={quoteattr(item.uri.render())}/>\n"
    elif isinstance(item, NarrativeFragment):
        yield (f"{indent}<narrative file={quoteattr(item.file)} "
               f"line=\"{item.line}\" offset=\"{item.offset}\">"
               f"{escape(item.text)}</narrative>\n")
    elif isinstance(item, FormalConstant):
        attrs = f"uri={quoteattr(item.uri.render())}"
        if item.unchecked:
            attrs += " unchecked=\"true\""
        yield f"{indent}<constant {attrs}>\n"
        yield f"{indent}  <type>{_expr_xml(item.classifier, lam, pi)}</type>\n"
        if item.definiens is not None:
            yield (f"{indent}  <definiens>"
                   f"{_expr_xml(item.definiens, lam, pi)}</definiens>\n")
        if item.deps is not None:
            if item.deps:
                yield f"{indent}  <deps>\n"
                for d in item.deps:
                    yield f"{indent}    <dep uri={quoteattr(d)}/>\n"
                yield f"{indent}  </deps>\n"
            else:
                yield f"{indent}  <deps/>\n"
        if item.metadata:
            yield f"{indent}  <meta>\n"
            for key, value in item.metadata:
                yield (f"{indent}    <item key={quoteattr(key)}>"
                       f"{escape(value)}</item>\n")
            yield f"{indent}  </meta>\n"
        yield f"{indent}</constant>\n"
    elif isinstance(item, NestedTheory):
        yield from _theory_xml(item.doc, lam, pi, indent)
    elif isinstance(item, MorphismItem):
        yield (f"{indent}<morphism uri={quoteattr(item.uri.render())} "
               f"from={quoteattr(item.dom.render())} "
               f"to={quoteattr(item.cod.render())}>\n")
        for uri, expr in item.assignments:
            yield (f"{indent}  <assign uri={quoteattr(uri.render())}>"
                   f"{_expr_xml(expr, lam, pi)}</assign>\n")
        yield f"{indent}</morphism>\n"
    else:
        raise SerializationError(f"unknown item {type(item).__name__}")


def _theory_xml(doc: OmdocDoc, lam: str, pi: str, indent: str) -> Iterator[str]:
    yield (f"{indent}<theory uri={quoteattr(doc.uri.render())} "
           f"meta={quoteattr(doc.meta.render())}>\n")
    for item in doc.items:
        yield from _item_xml(item, lam, pi, indent + "  ")
    yield f"{indent}</theory>\n"


def omdoc_chunks(doc: OmdocDoc) -> Iterator[str]:
    lam, pi = _binder_uris(doc.meta)
    yield "<?xml version='1.0' encoding='utf-8'?>\n<omdoc version=\"1\">\n"
    yield from _theory_xml(doc, lam, pi, "  ")
    yield "</omdoc>\n"


def write_omdoc(doc: OmdocDoc, sink: Union[str, BinaryIO],
                compress: bool = False) -> int:
    """Stream a document to `sink`; returns the byte count written.

    Items are emitted one at a time, so peak memory is bounded by the
    largest single item, not the document.
    """
    close = False
    if isinstance(sink, (str, bytes)):
        try:
            sink = open(sink, "wb")
        except OSError as e:
            raise SinkError(str(e)) from e
        close = True
    written = 0

    class _Counter:
        def write(self, data: bytes) -> int:
            nonlocal written
            written += len(data)
            try:
                sink.write(data)
            except OSError as e:
                raise SinkError(str(e)) from e
            return len(data)

        def flush(self) -> None:
            pass

    counter = _Counter()
    out = lzma.LZMAFile(counter, "wb") if compress else counter
    try:
        batch: list[str] = []
        size = 0
        for chunk in omdoc_chunks(doc):
            batch.append(chunk)
            size += len(chunk)
            if size >= 1 << 16:
                out.write("".join(batch).encode("utf-8"))
                batch.clear()
                size = 0
        if batch:
            out.write("".join(batch).encode("utf-8"))
    finally:
        if compress:
            out.close()
        if close:
            sink.close()
    return written


# ---------------------------------------------------------------------------
# Reading
# ---------------------------------------------------------------------------

def _open(source: Union[str, BinaryIO]) -> BinaryIO:
    if isinstance(source, (str, bytes)):
        stream: BinaryIO = open(source, "rb")
    else:
        stream = source
    head = stream.read(len(XZ_MAGIC))
    raw = io.BufferedReader(_Pushback(head, stream))
    if head == XZ_MAGIC:
        return lzma.LZMAFile(raw)  # type: ignore[return-value]
    return raw


def _read_uri(el, attr: str, path: str) -> Uri:
    v = el.get(attr)
    if v is None:
        raise OmdocSchemaError(f"missing attribute {attr!r}", path)
    try:
        return Uri.parse(v)
    except Exception as e:
        raise OmdocSchemaError(f"bad uri in {attr!r}: {e}", path) from e


def _read_expr(el, lam: str, pi: str, path: str) -> Expr:
    tag = el.tag
    p = f"{path}/{tag}"
    if tag == "omt":
        return SORT_TYPE
    if tag == "oms":
        return Const(_read_uri(el, "uri", p))
    if tag == "omv":
        name = el.get("name")
        if name is None:
            raise OmdocSchemaError("missing attribute 'name'", p)
        return Var(name)
    if tag == "omb":
        i = el.get("i")
        if i is None:
            raise OmdocSchemaError("missing attribute 'i'", p)
        return Bound(int(i))
    if tag == "oma":
        kids = list(el)
        if len(kids) != 2:
            raise OmdocSchemaError("<oma> needs two children", p)
        return App(_read_expr(kids[0], lam, pi, p),
                   _read_expr(kids[1], lam, pi, p))
    if tag == "ombind":
        binder = el.get("binder")
        name = el.get("name", "_")
        kids = list(el)
        if len(kids) != 2:
            raise OmdocSchemaError("<ombind> needs two children", p)
        a = _read_expr(kids[0], lam, pi, p)
        b = _read_expr(kids[1], lam, pi, p)
        if binder == lam:
            return Lam(name, a, b)
        if binder == pi:
            return Pi(name, a, b)
        raise OmdocSchemaError(f"unknown binder {binder!r}", p)
    raise OmdocSchemaError(f"unknown expression element <{tag}>", path)


def _only_expr(el, wrapper_path: str, lam: str, pi: str) -> Expr:
    kids = list(el)
    if len(kids) != 1:
        raise OmdocSchemaError("expected exactly one expression child",
                               wrapper_path)
    return _read_expr(kids[0], lam, pi, wrapper_path)


def _read_theory(el, lam: str, pi: str, path: str) -> OmdocDoc:
    doc = OmdocDoc(uri=_read_uri(el, "uri", path),
                   meta=_read_uri(el, "meta", path))
    for child in el:
        tag = child.tag
        p = f"{path}/{tag}"
        if tag == "include":
            doc.items.append(Include(_read_uri(child, "uri", p)))
        elif tag == "narrative":
            doc.items.append(NarrativeFragment(
                text=child.text or "",
                file=child.get("file", ""),
                line=int(child.get("line", "0")),
                offset=int(child.get("offset", "0"))))
        elif tag == "constant":
            uri = _read_uri(child, "uri", p)
            for a in child.keys():
                if a not in ("uri", "unchecked"):
                    raise OmdocSchemaError(f"unknown attribute {a!r}", p)
            classifier = None
            definiens = None
            deps: Optional[tuple[str, ...]] = None
            metadata: list[tuple[str, str]] = []
            for sub in child:
                sp = f"{p}/{sub.tag}"
                if sub.tag == "type":
                    classifier = _only_expr(sub, sp, lam, pi)
                elif sub.tag == "definiens":
                    definiens = _only_expr(sub, sp, lam, pi)
                elif sub.tag == "deps":
                    deps = tuple(d.get("uri", "") for d in sub
                                 if d.tag == "dep")
                elif sub.tag == "meta":
                    for it in sub:
                        if it.tag != "item":
                            raise OmdocSchemaError(
                                f"unknown element <{it.tag}>", sp)
                        metadata.append((it.get("key", ""), it.text or ""))
                else:
                    raise OmdocSchemaError(f"unknown element <{sub.tag}>", p)
            if classifier is None:
                raise OmdocSchemaError("constant without <type>", p)
            doc.items.append(FormalConstant(
                uri=uri, classifier=classifier, definiens=definiens,
                unchecked=child.get("unchecked") == "true",
                deps=deps, metadata=tuple(metadata)))
        elif tag == "theory":
            doc.items.append(NestedTheory(_read_theory(child, lam, pi, p)))
        elif tag == "morphism":
            assignments = []
            for a in child:
                if a.tag != "assign":
                    raise OmdocSchemaError(f"unknown element <{a.tag}>", p)
                assignments.append((_read_uri(a, "uri", p),
                                    _only_expr(a, p, lam, pi)))
            doc.items.append(MorphismItem(
                uri=_read_uri(child, "uri", p),
                dom=_read_uri(child, "from", p),
                cod=_read_uri(child, "to", p),
                assignments=tuple(assignments)))
        else:
            raise OmdocSchemaError(f"unknown element <{tag}>", path)
    return doc


def read_omdoc(source: Union[str, BinaryIO]) -> OmdocDoc:
    stream = _open(source)
    try:
        try:
            root = etree.parse(stream).getroot()
        except etree.ParseError as e:
            raise OmdocSyntaxError(str(e)) from e
        except lzma.LZMAError as e:
            raise OmdocSyntaxError(f"bad compressed stream: {e}") from e
    finally:
        stream.close()
    if root.tag != "omdoc":
        raise OmdocSchemaError("root element must be <omdoc>", "/")
    theories = [c for c in root if c.tag == "theory"]
    if len(theories) != 1:
        raise OmdocSchemaError("expected exactly one top-level <theory>",
                               "/omdoc")
    meta = _read_uri(theories[0], "meta", "/omdoc/theory")
    lam, pi = _binder_uris(meta)
    return _read_theory(theories[0], lam, pi, "/omdoc/theory")
