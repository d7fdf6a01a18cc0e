"""Theory Content Interchange (TCI): the pipeline's input format.

TCI is an XML dialect carrying the exported entity model of one or more
source theories: types, constants, axioms, theorems (with dependency
records and optional proof terms), typedefs, constant-definition
relations, locales, locale dependency edges, type classes, subclass
relations, and type arities.  The exact element and attribute inventory
is frozen in docs/tci.md; files may be XZ-compressed and are recognized
by the 6-byte XZ magic.

Parsing is streaming: a multi-theory file is consumed one <theory>
element at a time, so peak memory is bounded by the largest single
theory, not the file size.
"""

from __future__ import annotations

import io
import lzma
import xml.etree.ElementTree as etree
from dataclasses import dataclass, field
from typing import BinaryIO, Iterator, Optional, Sequence, Union

XZ_MAGIC = b"\xfd7zXZ\x00"

# Distinguished type constructors: `fun` is the binary function-space
# constructor, `prop` the nullary type of propositions.
FUN = "fun"
PROP = "prop"

# Distinguished constant: top-level chains of this constant in a statement
# are imported as framework arrows between judgment types.
PURE_IMP = "Pure.imp"

# Distinguished pseudo-type inside proofs: a proof abstraction annotated
# with <TCon name="type"/> binds a type variable rather than a term variable.
TYPE_BINDER = "type"


# ---------------------------------------------------------------------------
# Errors and diagnostics
# ---------------------------------------------------------------------------

class TciError(Exception):
    pass


class TciSyntaxError(TciError):
    """Malformed XML; `position` is (line, column) where known."""

    def __init__(self, message: str, position=None):
        super().__init__(message if position is None
                         else f"{message} at {position[0]}:{position[1]}")
        self.position = position


class TciSchemaError(TciError):
    """Structurally valid XML that violates the TCI schema; `path` locates
    the offending element."""

    def __init__(self, message: str, path: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class CompressionError(TciError):
    pass


class CycleError(TciError):
    def __init__(self, cycle: list[str]):
        super().__init__("theory import cycle: " + " -> ".join(cycle))
        self.cycle = cycle


@dataclass(frozen=True)
class Diagnostic:
    code: str
    where: str
    message: str

    def __str__(self) -> str:
        return f"{self.code} [{self.where}]: {self.message}"


# ---------------------------------------------------------------------------
# Types, terms, proofs
# ---------------------------------------------------------------------------

class TciType:
    __slots__ = ()


@dataclass(frozen=True)
class TFree(TciType):
    name: str
    sort: tuple[str, ...] = ()


@dataclass(frozen=True)
class TVar(TciType):
    name: str
    index: int
    sort: tuple[str, ...] = ()


@dataclass(frozen=True)
class TCon(TciType):
    name: str
    args: tuple[TciType, ...] = ()


class TciTerm:
    __slots__ = ()


@dataclass(frozen=True)
class TConst(TciTerm):
    name: str
    typargs: tuple[TciType, ...] = ()


@dataclass(frozen=True)
class TFreeVar(TciTerm):
    name: str
    typ: TciType


@dataclass(frozen=True)
class TSchematic(TciTerm):
    name: str
    index: int
    typ: TciType


@dataclass(frozen=True)
class TBound(TciTerm):
    index: int


@dataclass(frozen=True)
class TAbs(TciTerm):
    comment: str
    typ: TciType
    body: TciTerm


@dataclass(frozen=True)
class TApp(TciTerm):
    fun: TciTerm
    arg: TciTerm


class TciProof:
    __slots__ = ()


@dataclass(frozen=True)
class PAxiom(TciProof):
    name: str
    typargs: tuple[TciType, ...] = ()


@dataclass(frozen=True)
class PThm(TciProof):
    name: str
    typargs: tuple[TciType, ...] = ()


@dataclass(frozen=True)
class PBoundP(TciProof):
    index: int


@dataclass(frozen=True)
class PAbsT(TciProof):
    comment: str
    typ: TciType
    body: TciProof


@dataclass(frozen=True)
class PAbsP(TciProof):
    comment: str
    prop: TciTerm
    body: TciProof


@dataclass(frozen=True)
class PAppT(TciProof):
    proof: TciProof
    term: TciTerm


@dataclass(frozen=True)
class PAppP(TciProof):
    fun: TciProof
    arg: TciProof


# ---------------------------------------------------------------------------
# Entities and theory content
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Entity:
    kind: str
    full_name: str
    external_name: str
    file: str = ""
    line: int = 0
    offset: int = 0
    command_span: int = 0
    source_text: Optional[str] = None


@dataclass(frozen=True)
class TypeDecl:
    entity: Entity
    arity: int
    abbrev: Optional[TciType] = None


@dataclass(frozen=True)
class ConstDecl:
    entity: Entity
    typargs: tuple[str, ...]
    typ: TciType
    abbrev: Optional[TciTerm] = None
    spec_kind: Optional[str] = None


Typarg = tuple[str, Optional[int], tuple[str, ...]]  # name, schematic index, sort


@dataclass(frozen=True)
class AxiomDecl:
    entity: Entity
    typargs: tuple[Typarg, ...]
    prop: TciTerm


@dataclass(frozen=True)
class ThmDecl:
    entity: Entity
    typargs: tuple[Typarg, ...]
    prop: TciTerm
    deps: tuple[str, ...] = ()
    proof: Optional[TciProof] = None


@dataclass(frozen=True)
class TypedefRecord:
    name: str
    rep_type: TciType
    abs_type: TciType
    rep_morphism: str
    abs_morphism: str
    axiom_name: str


@dataclass(frozen=True)
class ConstdefRecord:
    const_name: str
    axiom_names: tuple[str, ...]


@dataclass(frozen=True)
class LocaleRecord:
    entity: Entity
    typargs: tuple[tuple[str, tuple[str, ...]], ...]  # (name, sort)
    fixes: tuple[tuple[str, TciType, Optional[str]], ...]  # (name, typ, syntax)
    assumes: tuple[tuple[str, TciTerm], ...]
    defines: tuple[tuple[str, TciTerm], ...]  # (global const name, rhs)
    notes: tuple[str, ...] = ()  # global thm names


@dataclass(frozen=True)
class LocaleDep:
    source_locale: str
    target_locale: str
    type_assignment: tuple[tuple[str, TciType], ...]
    term_assignment: tuple[tuple[str, TciTerm], ...]


@dataclass(frozen=True)
class ClassRecord:
    class_name: str
    locale_name: str
    params: tuple[str, ...]


@dataclass(frozen=True)
class ClassRel:
    sub: str
    super: str


@dataclass(frozen=True)
class Arity:
    tycon: str
    domain: tuple[tuple[str, ...], ...]  # one sort (class list) per argument
    range: str


@dataclass
class TheoryContent:
    session: str
    theory_name: str
    parents: tuple[tuple[str, str], ...] = ()
    types: list[TypeDecl] = field(default_factory=list)
    consts: list[ConstDecl] = field(default_factory=list)
    axioms: list[AxiomDecl] = field(default_factory=list)
    thms: list[ThmDecl] = field(default_factory=list)
    typedefs: list[TypedefRecord] = field(default_factory=list)
    constdefs: list[ConstdefRecord] = field(default_factory=list)
    locales: list[LocaleRecord] = field(default_factory=list)
    locale_deps: list[LocaleDep] = field(default_factory=list)
    classes: list[ClassRecord] = field(default_factory=list)
    classrels: list[ClassRel] = field(default_factory=list)
    arities: list[Arity] = field(default_factory=list)

    @property
    def key(self) -> tuple[str, str]:
        return (self.session, self.theory_name)

    def entities(self) -> Iterator[Entity]:
        for t in self.types:
            yield t.entity
        for c in self.consts:
            yield c.entity
        for a in self.axioms:
            yield a.entity
        for t in self.thms:
            yield t.entity
        for l in self.locales:
            yield l.entity


# ---------------------------------------------------------------------------
# Input handling
# ---------------------------------------------------------------------------

class _Pushback(io.RawIOBase):
    """Read-only stream that replays a sniffed prefix before the underlying
    stream."""

    def __init__(self, head: bytes, stream):
        self._head = head
        self._stream = stream

    def readable(self) -> bool:
        return True

    def readinto(self, b) -> int:
        if self._head:
            n = min(len(b), len(self._head))
            b[:n] = self._head[:n]
            self._head = self._head[n:]
            return n
        data = self._stream.read(len(b))
        if not data:
            return 0
        b[: len(data)] = data
        return len(data)


def open_input(source: Union[str, BinaryIO]) -> BinaryIO:
    """Open a TCI source, transparently decompressing XZ data."""
    if isinstance(source, (str, bytes)):
        stream: BinaryIO = open(source, "rb")
    else:
        stream = source
    head = stream.read(len(XZ_MAGIC))
    raw = io.BufferedReader(_Pushback(head, stream))
    if head == XZ_MAGIC:
        return lzma.LZMAFile(raw)  # type: ignore[return-value]
    return raw


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_ENTITY_KINDS = {"type": "type", "const": "const", "axiom": "axiom",
                 "thm": "thm", "locale": "locale"}

_SECTION_TAGS = ("parents", "types", "consts", "axioms", "thms", "typedefs",
                 "constdefs", "locales", "locale_deps", "classes",
                 "classrels", "arities")

_TYPE_TAGS = {"TFree", "TVar", "TCon"}
_TERM_TAGS = {"Const", "Free", "SVar", "Bound", "Abs", "App"}
_PROOF_TAGS = {"PAxiom", "PThm", "PBound", "PAbsT", "PAbsP", "PAppT", "PAppP"}


class _Reader:
    def __init__(self, strict: bool, warnings: Optional[list[Diagnostic]]):
        self.strict = strict
        self.warnings = warnings if warnings is not None else []

    def unknown(self, what: str, path: str) -> None:
        if self.strict:
            raise TciSchemaError(f"unknown element <{what}>", path)
        self.warnings.append(Diagnostic("UnknownElement", path, f"<{what}> ignored"))

    # -- leaf decoders ------------------------------------------------------

    def sort_of(self, text: Optional[str]) -> tuple[str, ...]:
        if not text:
            return ()
        return tuple(s for s in text.split(",") if s)

    def typ(self, el, path: str) -> TciType:
        tag = el.tag
        p = f"{path}/{tag}"
        if tag == "TFree":
            return TFree(self.attr(el, "name", p), self.sort_of(el.get("sort")))
        if tag == "TVar":
            return TVar(self.attr(el, "name", p), int(self.attr(el, "index", p)),
                        self.sort_of(el.get("sort")))
        if tag == "TCon":
            return TCon(self.attr(el, "name", p),
                        tuple(self.typ(c, p) for c in el))
        self.unknown(tag, path)
        raise TciSchemaError(f"expected a type element, got <{tag}>", path)

    def term(self, el, path: str) -> TciTerm:
        tag = el.tag
        p = f"{path}/{tag}"
        if tag == "Const":
            return TConst(self.attr(el, "name", p),
                          tuple(self.typ(c, p) for c in el))
        if tag == "Free":
            kids = list(el)
            if len(kids) != 1:
                raise TciSchemaError("<Free> needs exactly one type child", p)
            return TFreeVar(self.attr(el, "name", p), self.typ(kids[0], p))
        if tag == "SVar":
            kids = list(el)
            if len(kids) != 1:
                raise TciSchemaError("<SVar> needs exactly one type child", p)
            return TSchematic(self.attr(el, "name", p),
                              int(self.attr(el, "index", p)), self.typ(kids[0], p))
        if tag == "Bound":
            return TBound(int(self.attr(el, "index", p)))
        if tag == "Abs":
            kids = list(el)
            if len(kids) != 2:
                raise TciSchemaError("<Abs> needs a type child and a body child", p)
            return TAbs(self.attr(el, "name", p), self.typ(kids[0], p),
                        self.term(kids[1], p))
        if tag == "App":
            kids = list(el)
            if len(kids) != 2:
                raise TciSchemaError("<App> needs two term children", p)
            return TApp(self.term(kids[0], p), self.term(kids[1], p))
        self.unknown(tag, path)
        raise TciSchemaError(f"expected a term element, got <{tag}>", path)

    def proof(self, el, path: str) -> TciProof:
        tag = el.tag
        p = f"{path}/{tag}"
        if tag == "PAxiom":
            return PAxiom(self.attr(el, "name", p),
                          tuple(self.typ(c, p) for c in el))
        if tag == "PThm":
            return PThm(self.attr(el, "name", p),
                        tuple(self.typ(c, p) for c in el))
        if tag == "PBound":
            return PBoundP(int(self.attr(el, "index", p)))
        if tag == "PAbsT":
            kids = list(el)
            if len(kids) != 2:
                raise TciSchemaError("<PAbsT> needs a type child and a proof child", p)
            return PAbsT(self.attr(el, "name", p), self.typ(kids[0], p),
                         self.proof(kids[1], p))
        if tag == "PAbsP":
            kids = list(el)
            if len(kids) != 2:
                raise TciSchemaError("<PAbsP> needs a term child and a proof child", p)
            return PAbsP(self.attr(el, "name", p), self.term(kids[0], p),
                         self.proof(kids[1], p))
        if tag == "PAppT":
            kids = list(el)
            if len(kids) != 2:
                raise TciSchemaError("<PAppT> needs a proof child and a term child", p)
            return PAppT(self.proof(kids[0], p), self.term(kids[1], p))
        if tag == "PAppP":
            kids = list(el)
            if len(kids) != 2:
                raise TciSchemaError("<PAppP> needs two proof children", p)
            return PAppP(self.proof(kids[0], p), self.proof(kids[1], p))
        self.unknown(tag, path)
        raise TciSchemaError(f"expected a proof element, got <{tag}>", path)

    def attr(self, el, name: str, path: str) -> str:
        v = el.get(name)
        if v is None:
            raise TciSchemaError(f"missing attribute {name!r}", path)
        return v

    def entity(self, el, kind: str, path: str) -> Entity:
        name = self.attr(el, "name", path)
        src = el.find("src")
        return Entity(
            kind=kind,
            full_name=name,
            external_name=el.get("xname", name.rsplit(".", 1)[-1]),
            file=el.get("file", ""),
            line=int(el.get("line", "0")),
            offset=int(el.get("offset", "0")),
            command_span=int(el.get("span", "0")),
            source_text=src.text if src is not None else None,
        )

    def only_child(self, el, wrapper: str, path: str):
        w = el.find(wrapper)
        if w is None:
            return None
        kids = list(w)
        if len(kids) != 1:
            raise TciSchemaError(f"<{wrapper}> needs exactly one child", f"{path}/{wrapper}")
        return kids[0]

    def typargs_with_sorts(self, el, path: str) -> tuple[Typarg, ...]:
        wrapper = el.find("typargs")
        if wrapper is None:
            return ()
        out = []
        for c in wrapper:
            if c.tag != "typarg":
                self.unknown(c.tag, f"{path}/typargs")
                continue
            idx = c.get("index")
            out.append((self.attr(c, "name", f"{path}/typargs"),
                        int(idx) if idx is not None else None,
                        self.sort_of(c.get("sort"))))
        return tuple(out)

    # -- theory sections ----------------------------------------------------

    def theory(self, el, path: str) -> TheoryContent:
        tc = TheoryContent(session=self.attr(el, "session", path),
                           theory_name=self.attr(el, "name", path))
        for section in el:
            tag = section.tag
            spath = f"{path}/{tag}"
            if tag == "parents":
                parents = []
                for c in section:
                    if c.tag != "parent":
                        self.unknown(c.tag, spath)
                        continue
                    parents.append((self.attr(c, "session", spath),
                                    self.attr(c, "name", spath)))
                tc.parents = tuple(parents)
            elif tag == "types":
                for c in section:
                    if c.tag != "type":
                        self.unknown(c.tag, spath)
                        continue
                    ab = self.only_child(c, "abbrev", spath)
                    tc.types.append(TypeDecl(
                        self.entity(c, "type", spath),
                        arity=int(self.attr(c, "arity", spath)),
                        abbrev=self.typ(ab, spath) if ab is not None else None))
            elif tag == "consts":
                for c in section:
                    if c.tag != "const":
                        self.unknown(c.tag, spath)
                        continue
                    ty = self.only_child(c, "type", spath)
                    if ty is None:
                        raise TciSchemaError("<const> needs a <type>", spath)
                    ab = self.only_child(c, "abbrev", spath)
                    raw = c.get("typargs", "")
                    tc.consts.append(ConstDecl(
                        self.entity(c, "const", spath),
                        typargs=tuple(t for t in raw.split(",") if t),
                        typ=self.typ(ty, spath),
                        abbrev=self.term(ab, spath) if ab is not None else None,
                        spec_kind=c.get("spec_kind")))
            elif tag == "axioms":
                for c in section:
                    if c.tag != "axiom":
                        self.unknown(c.tag, spath)
                        continue
                    pr = self.only_child(c, "prop", spath)
                    if pr is None:
                        raise TciSchemaError("<axiom> needs a <prop>", spath)
                    tc.axioms.append(AxiomDecl(
                        self.entity(c, "axiom", spath),
                        typargs=self.typargs_with_sorts(c, spath),
                        prop=self.term(pr, spath)))
            elif tag == "thms":
                for c in section:
                    if c.tag != "thm":
                        self.unknown(c.tag, spath)
                        continue
                    pr = self.only_child(c, "prop", spath)
                    if pr is None:
                        raise TciSchemaError("<thm> needs a <prop>", spath)
                    deps = []
                    deps_el = c.find("deps")
                    if deps_el is not None:
                        for d in deps_el:
                            if d.tag != "dep":
                                self.unknown(d.tag, spath)
                                continue
                            deps.append(self.attr(d, "name", spath))
                    proof_el = self.only_child(c, "proof", spath)
                    tc.thms.append(ThmDecl(
                        self.entity(c, "thm", spath),
                        typargs=self.typargs_with_sorts(c, spath),
                        prop=self.term(pr, spath),
                        deps=tuple(deps),
                        proof=self.proof(proof_el, spath) if proof_el is not None else None))
            elif tag == "typedefs":
                for c in section:
                    if c.tag != "typedef":
                        self.unknown(c.tag, spath)
                        continue
                    rep = self.only_child(c, "rep", spath)
                    ab = self.only_child(c, "abs", spath)
                    if rep is None or ab is None:
                        raise TciSchemaError("<typedef> needs <rep> and <abs>", spath)
                    tc.typedefs.append(TypedefRecord(
                        name=self.attr(c, "name", spath),
                        rep_type=self.typ(rep, spath),
                        abs_type=self.typ(ab, spath),
                        rep_morphism=self.attr(c, "rep_morphism", spath),
                        abs_morphism=self.attr(c, "abs_morphism", spath),
                        axiom_name=self.attr(c, "axiom", spath)))
            elif tag == "constdefs":
                for c in section:
                    if c.tag != "constdef":
                        self.unknown(c.tag, spath)
                        continue
                    axioms = tuple(self.attr(a, "name", spath)
                                   for a in c if a.tag == "axiom")
                    tc.constdefs.append(ConstdefRecord(
                        const_name=self.attr(c, "const", spath),
                        axiom_names=axioms))
            elif tag == "locales":
                for c in section:
                    if c.tag != "locale":
                        self.unknown(c.tag, spath)
                        continue
                    tc.locales.append(self.locale(c, spath))
            elif tag == "locale_deps":
                for c in section:
                    if c.tag != "locale_dep":
                        self.unknown(c.tag, spath)
                        continue
                    tc.locale_deps.append(self.locale_dep(c, spath))
            elif tag == "classes":
                for c in section:
                    if c.tag != "class":
                        self.unknown(c.tag, spath)
                        continue
                    tc.classes.append(ClassRecord(
                        class_name=self.attr(c, "name", spath),
                        locale_name=self.attr(c, "locale", spath),
                        params=tuple(self.attr(p, "name", spath)
                                     for p in c if p.tag == "param")))
            elif tag == "classrels":
                for c in section:
                    if c.tag != "classrel":
                        self.unknown(c.tag, spath)
                        continue
                    tc.classrels.append(ClassRel(
                        sub=self.attr(c, "sub", spath),
                        super=self.attr(c, "super", spath)))
            elif tag == "arities":
                for c in section:
                    if c.tag != "arity":
                        self.unknown(c.tag, spath)
                        continue
                    dom_el = c.find("domain")
                    domain: list[tuple[str, ...]] = []
                    if dom_el is not None:
                        for s in dom_el:
                            if s.tag != "sort":
                                self.unknown(s.tag, spath)
                                continue
                            domain.append(self.sort_of(s.get("classes")))
                    tc.arities.append(Arity(
                        tycon=self.attr(c, "tycon", spath),
                        domain=tuple(domain),
                        range=self.attr(c, "range", spath)))
            else:
                self.unknown(tag, path)
        return tc

    def locale(self, el, path: str) -> LocaleRecord:
        p = f"{path}/locale"
        typargs = []
        ta = el.find("typargs")
        if ta is not None:
            for c in ta:
                if c.tag != "typarg":
                    self.unknown(c.tag, p)
                    continue
                typargs.append((self.attr(c, "name", p), self.sort_of(c.get("sort"))))
        fixes = []
        fx = el.find("fixes")
        if fx is not None:
            for c in fx:
                if c.tag != "fix":
                    self.unknown(c.tag, p)
                    continue
                ty = self.only_child(c, "type", p)
                if ty is None:
                    raise TciSchemaError("<fix> needs a <type>", p)
                fixes.append((self.attr(c, "name", p), self.typ(ty, p),
                              c.get("syntax")))
        assumes = []
        asm = el.find("assumes")
        if asm is not None:
            for c in asm:
                if c.tag != "assume":
                    self.unknown(c.tag, p)
                    continue
                pr = self.only_child(c, "prop", p)
                if pr is None:
                    raise TciSchemaError("<assume> needs a <prop>", p)
                assumes.append((self.attr(c, "name", p), self.term(pr, p)))
        defines = []
        df = el.find("defines")
        if df is not None:
            for c in df:
                if c.tag != "define":
                    self.unknown(c.tag, p)
                    continue
                rhs = self.only_child(c, "rhs", p)
                if rhs is None:
                    raise TciSchemaError("<define> needs a <rhs>", p)
                defines.append((self.attr(c, "const", p), self.term(rhs, p)))
        notes = []
        nt = el.find("notes")
        if nt is not None:
            for c in nt:
                if c.tag != "note":
                    self.unknown(c.tag, p)
                    continue
                notes.append(self.attr(c, "thm", p))
        return LocaleRecord(
            entity=self.entity(el, "locale", p),
            typargs=tuple(typargs),
            fixes=tuple(fixes),
            assumes=tuple(assumes),
            defines=tuple(defines),
            notes=tuple(notes))

    def locale_dep(self, el, path: str) -> LocaleDep:
        p = f"{path}/locale_dep"
        tas = []
        ta = el.find("type_assignment")
        if ta is not None:
            for c in ta:
                if c.tag != "assign":
                    self.unknown(c.tag, p)
                    continue
                kids = list(c)
                if len(kids) != 1:
                    raise TciSchemaError("<assign> needs exactly one child", p)
                tas.append((self.attr(c, "name", p), self.typ(kids[0], p)))
        tes = []
        te = el.find("term_assignment")
        if te is not None:
            for c in te:
                if c.tag != "assign":
                    self.unknown(c.tag, p)
                    continue
                kids = list(c)
                if len(kids) != 1:
                    raise TciSchemaError("<assign> needs exactly one child", p)
                tes.append((self.attr(c, "name", p), self.term(kids[0], p)))
        return LocaleDep(
            source_locale=self.attr(el, "source", p),
            target_locale=self.attr(el, "target", p),
            type_assignment=tuple(tas),
            term_assignment=tuple(tes))


def iter_tci(source: Union[str, BinaryIO], strict: bool = True,
             warnings: Optional[list[Diagnostic]] = None) -> Iterator[TheoryContent]:
    """Stream theories out of a TCI file one at a time."""
    reader = _Reader(strict, warnings)
    stream = open_input(source)
    try:
        root_seen = False
        depth = 0
        try:
            for event, el in etree.iterparse(stream, events=("start", "end")):
                if event == "start":
                    depth += 1
                    if depth == 1:
                        if el.tag != "tci":
                            raise TciSchemaError("root element must be <tci>", "/")
                        if el.get("version") != "1":
                            raise TciSchemaError("unsupported tci version", "/tci")
                        root_seen = True
                    elif depth == 2 and el.tag != "theory":
                        reader.unknown(el.tag, "/tci")
                    continue
                depth -= 1
                if depth == 1 and el.tag == "theory":
                    yield reader.theory(el, "/tci/theory")
                    el.clear()
        except etree.ParseError as e:
            raise TciSyntaxError(str(e), getattr(e, "position", None)) from e
        except lzma.LZMAError as e:
            raise CompressionError(str(e)) from e
        if not root_seen:
            raise TciSyntaxError("empty input")
    finally:
        stream.close()


def parse_tci(source: Union[str, BinaryIO], strict: bool = True,
              warnings: Optional[list[Diagnostic]] = None) -> TheoryContent:
    """Parse a single-theory TCI file."""
    found = list(iter_tci(source, strict=strict, warnings=warnings))
    if not found:
        raise TciSchemaError("no <theory> element", "/tci")
    if len(found) > 1:
        raise TciSchemaError("expected exactly one <theory>", "/tci")
    return found[0]


# ---------------------------------------------------------------------------
# Writing (canonical form; used for fixtures, round-trips, generators)
# ---------------------------------------------------------------------------

def _sort_attr(sort: Sequence[str]) -> str:
    return ",".join(sorted(sort))


def _typ_el(t: TciType) -> etree.Element:
    if isinstance(t, TFree):
        el = etree.Element("TFree", name=t.name)
        if t.sort:
            el.set("sort", _sort_attr(t.sort))
        return el
    if isinstance(t, TVar):
        el = etree.Element("TVar", name=t.name, index=str(t.index))
        if t.sort:
            el.set("sort", _sort_attr(t.sort))
        return el
    if isinstance(t, TCon):
        el = etree.Element("TCon", name=t.name)
        el.extend(_typ_el(a) for a in t.args)
        return el
    raise TypeError(t)


def _term_el(t: TciTerm) -> etree.Element:
    if isinstance(t, TConst):
        el = etree.Element("Const", name=t.name)
        el.extend(_typ_el(a) for a in t.typargs)
        return el
    if isinstance(t, TFreeVar):
        el = etree.Element("Free", name=t.name)
        el.append(_typ_el(t.typ))
        return el
    if isinstance(t, TSchematic):
        el = etree.Element("SVar", name=t.name, index=str(t.index))
        el.append(_typ_el(t.typ))
        return el
    if isinstance(t, TBound):
        return etree.Element("Bound", index=str(t.index))
    if isinstance(t, TAbs):
        el = etree.Element("Abs", name=t.comment)
        el.append(_typ_el(t.typ))
        el.append(_term_el(t.body))
        return el
    if isinstance(t, TApp):
        el = etree.Element("App")
        el.append(_term_el(t.fun))
        el.append(_term_el(t.arg))
        return el
    raise TypeError(t)


def _proof_el(p: TciProof) -> etree.Element:
    if isinstance(p, PAxiom):
        el = etree.Element("PAxiom", name=p.name)
        el.extend(_typ_el(a) for a in p.typargs)
        return el
    if isinstance(p, PThm):
        el = etree.Element("PThm", name=p.name)
        el.extend(_typ_el(a) for a in p.typargs)
        return el
    if isinstance(p, PBoundP):
        return etree.Element("PBound", index=str(p.index))
    if isinstance(p, PAbsT):
        el = etree.Element("PAbsT", name=p.comment)
        el.append(_typ_el(p.typ))
        el.append(_proof_el(p.body))
        return el
    if isinstance(p, PAbsP):
        el = etree.Element("PAbsP", name=p.comment)
        el.append(_term_el(p.prop))
        el.append(_proof_el(p.body))
        return el
    if isinstance(p, PAppT):
        el = etree.Element("PAppT")
        el.append(_proof_el(p.proof))
        el.append(_term_el(p.term))
        return el
    if isinstance(p, PAppP):
        el = etree.Element("PAppP")
        el.append(_proof_el(p.fun))
        el.append(_proof_el(p.arg))
        return el
    raise TypeError(p)


def _entity_attrs(el: etree.Element, e: Entity) -> None:
    el.set("name", e.full_name)
    el.set("xname", e.external_name)
    if e.file:
        el.set("file", e.file)
    el.set("line", str(e.line))
    el.set("offset", str(e.offset))
    el.set("span", str(e.command_span))


def _entity_src(el: etree.Element, e: Entity) -> None:
    if e.source_text is not None:
        src = etree.SubElement(el, "src")
        src.text = e.source_text


def _typargs_el(parent: etree.Element, typargs: Sequence[Typarg]) -> None:
    if not typargs:
        return
    wrapper = etree.SubElement(parent, "typargs")
    for name, index, sort in typargs:
        t = etree.SubElement(wrapper, "typarg", name=name)
        if index is not None:
            t.set("index", str(index))
        if sort:
            t.set("sort", _sort_attr(sort))


def theory_element(tc: TheoryContent) -> etree.Element:
    th = etree.Element("theory", session=tc.session, name=tc.theory_name)
    if tc.parents:
        ps = etree.SubElement(th, "parents")
        for session, name in tc.parents:
            etree.SubElement(ps, "parent", session=session, name=name)
    if tc.types:
        sec = etree.SubElement(th, "types")
        for t in tc.types:
            el = etree.SubElement(sec, "type")
            _entity_attrs(el, t.entity)
            el.set("arity", str(t.arity))
            if t.abbrev is not None:
                etree.SubElement(el, "abbrev").append(_typ_el(t.abbrev))
            _entity_src(el, t.entity)
    if tc.consts:
        sec = etree.SubElement(th, "consts")
        for c in tc.consts:
            el = etree.SubElement(sec, "const")
            _entity_attrs(el, c.entity)
            if c.typargs:
                el.set("typargs", ",".join(c.typargs))
            if c.spec_kind:
                el.set("spec_kind", c.spec_kind)
            etree.SubElement(el, "type").append(_typ_el(c.typ))
            if c.abbrev is not None:
                etree.SubElement(el, "abbrev").append(_term_el(c.abbrev))
            _entity_src(el, c.entity)
    if tc.axioms:
        sec = etree.SubElement(th, "axioms")
        for a in tc.axioms:
            el = etree.SubElement(sec, "axiom")
            _entity_attrs(el, a.entity)
            _typargs_el(el, a.typargs)
            etree.SubElement(el, "prop").append(_term_el(a.prop))
            _entity_src(el, a.entity)
    if tc.thms:
        sec = etree.SubElement(th, "thms")
        for t in tc.thms:
            el = etree.SubElement(sec, "thm")
            _entity_attrs(el, t.entity)
            _typargs_el(el, t.typargs)
            etree.SubElement(el, "prop").append(_term_el(t.prop))
            deps = etree.SubElement(el, "deps")
            for d in t.deps:
                etree.SubElement(deps, "dep", name=d)
            if t.proof is not None:
                etree.SubElement(el, "proof").append(_proof_el(t.proof))
            _entity_src(el, t.entity)
    if tc.typedefs:
        sec = etree.SubElement(th, "typedefs")
        for td in tc.typedefs:
            el = etree.SubElement(sec, "typedef", name=td.name,
                                  rep_morphism=td.rep_morphism,
                                  abs_morphism=td.abs_morphism,
                                  axiom=td.axiom_name)
            etree.SubElement(el, "rep").append(_typ_el(td.rep_type))
            etree.SubElement(el, "abs").append(_typ_el(td.abs_type))
    if tc.constdefs:
        sec = etree.SubElement(th, "constdefs")
        for cd in tc.constdefs:
            el = etree.SubElement(sec, "constdef", const=cd.const_name)
            for a in cd.axiom_names:
                etree.SubElement(el, "axiom", name=a)
    if tc.locales:
        sec = etree.SubElement(th, "locales")
        for loc in tc.locales:
            el = etree.SubElement(sec, "locale")
            _entity_attrs(el, loc.entity)
            if loc.typargs:
                ta = etree.SubElement(el, "typargs")
                for name, sort in loc.typargs:
                    t = etree.SubElement(ta, "typarg", name=name)
                    if sort:
                        t.set("sort", _sort_attr(sort))
            if loc.fixes:
                fx = etree.SubElement(el, "fixes")
                for name, typ, syntax in loc.fixes:
                    f = etree.SubElement(fx, "fix", name=name)
                    if syntax:
                        f.set("syntax", syntax)
                    etree.SubElement(f, "type").append(_typ_el(typ))
            if loc.assumes:
                asm = etree.SubElement(el, "assumes")
                for name, prop in loc.assumes:
                    a = etree.SubElement(asm, "assume", name=name)
                    etree.SubElement(a, "prop").append(_term_el(prop))
            if loc.defines:
                df = etree.SubElement(el, "defines")
                for const, rhs in loc.defines:
                    d = etree.SubElement(df, "define", const=const)
                    etree.SubElement(d, "rhs").append(_term_el(rhs))
            if loc.notes:
                nt = etree.SubElement(el, "notes")
                for thm in loc.notes:
                    etree.SubElement(nt, "note", thm=thm)
            _entity_src(el, loc.entity)
    if tc.locale_deps:
        sec = etree.SubElement(th, "locale_deps")
        for dep in tc.locale_deps:
            el = etree.SubElement(sec, "locale_dep", source=dep.source_locale,
                                  target=dep.target_locale)
            if dep.type_assignment:
                ta = etree.SubElement(el, "type_assignment")
                for name, typ in dep.type_assignment:
                    a = etree.SubElement(ta, "assign", name=name)
                    a.append(_typ_el(typ))
            if dep.term_assignment:
                te = etree.SubElement(el, "term_assignment")
                for name, term in dep.term_assignment:
                    a = etree.SubElement(te, "assign", name=name)
                    a.append(_term_el(term))
    if tc.classes:
        sec = etree.SubElement(th, "classes")
        for cls in tc.classes:
            el = etree.SubElement(sec, "class", name=cls.class_name,
                                  locale=cls.locale_name)
            for p in cls.params:
                etree.SubElement(el, "param", name=p)
    if tc.classrels:
        sec = etree.SubElement(th, "classrels")
        for cr in tc.classrels:
            etree.SubElement(sec, "classrel", sub=cr.sub, super=cr.super)
    if tc.arities:
        sec = etree.SubElement(th, "arities")
        for ar in tc.arities:
            el = etree.SubElement(sec, "arity", tycon=ar.tycon, range=ar.range)
            dom = etree.SubElement(el, "domain")
            for sort in ar.domain:
                s = etree.SubElement(dom, "sort")
                if sort:
                    s.set("classes", _sort_attr(sort))
    return th


def write_tci(contents: Union[TheoryContent, Sequence[TheoryContent]],
              sink: Union[str, BinaryIO], compress: bool = False) -> None:
    """Serialize theories as TCI-XML, optionally XZ-compressed."""
    if isinstance(contents, TheoryContent):
        contents = [contents]
    root = etree.Element("tci", version="1")
    root.extend(theory_element(tc) for tc in contents)
    etree.indent(root)
    data = etree.tostring(root, encoding="utf-8", xml_declaration=True)
    if compress:
        data = lzma.compress(data)
    if isinstance(sink, (str, bytes)):
        with open(sink, "wb") as f:
            f.write(data)
    else:
        sink.write(data)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

class TciEnv:
    """Name tables of the theories visible through the parent graph."""

    def __init__(self) -> None:
        self.type_arities: dict[str, int] = {FUN: 2, PROP: 0}
        self.const_typargs: dict[str, int] = {}
        self.facts: set[str] = set()  # axiom and thm names
        self.axioms: set[str] = set()
        self.classes: set[str] = set()
        self.locales: dict[str, LocaleRecord] = {}

    def absorb(self, tc: TheoryContent) -> None:
        for t in tc.types:
            self.type_arities[t.entity.full_name] = t.arity
        for c in tc.consts:
            self.const_typargs[c.entity.full_name] = len(c.typargs)
        for a in tc.axioms:
            self.facts.add(a.entity.full_name)
            self.axioms.add(a.entity.full_name)
        for t in tc.thms:
            self.facts.add(t.entity.full_name)
        for cls in tc.classes:
            self.classes.add(cls.class_name)
        for loc in tc.locales:
            self.locales[loc.entity.full_name] = loc

    @classmethod
    def from_contents(cls, parents: Sequence[TheoryContent]) -> "TciEnv":
        env = cls()
        for tc in parents:
            env.absorb(tc)
        return env


def _scan_types(t: TciType):
    yield t
    if isinstance(t, TCon):
        for a in t.args:
            yield from _scan_types(a)


def _scan_term(t: TciTerm):
    yield t
    if isinstance(t, TAbs):
        yield from _scan_term(t.body)
    elif isinstance(t, TApp):
        yield from _scan_term(t.fun)
        yield from _scan_term(t.arg)


def _term_types(t: TciTerm):
    for node in _scan_term(t):
        if isinstance(node, TConst):
            for ty in node.typargs:
                yield from _scan_types(ty)
        elif isinstance(node, (TFreeVar, TSchematic)):
            yield from _scan_types(node.typ)
        elif isinstance(node, TAbs):
            yield from _scan_types(node.typ)


def validate_tci(tc: TheoryContent, env: TciEnv) -> list[Diagnostic]:
    """Semantic validation against the visible environment.

    Returns every diagnostic found; an empty list means the content is
    ready for translation.
    """
    diags: list[Diagnostic] = []
    local = TciEnv.from_contents([tc])

    def arity_of(name: str) -> Optional[int]:
        if name in local.type_arities:
            return local.type_arities[name]
        return env.type_arities.get(name)

    def typarg_count(name: str) -> Optional[int]:
        if name in local.const_typargs:
            return local.const_typargs[name]
        return env.const_typargs.get(name)

    def check_types(where: str, types) -> None:
        for node in types:
            if isinstance(node, TCon):
                n = arity_of(node.name)
                if n is None:
                    diags.append(Diagnostic("UnknownTypeConstructor", where, node.name))
                elif n != len(node.args):
                    diags.append(Diagnostic(
                        "ArityMismatch", where,
                        f"{node.name} expects {n} arguments, got {len(node.args)}"))
            elif isinstance(node, (TFree, TVar)):
                if len(set(node.sort)) != len(node.sort):
                    diags.append(Diagnostic("DuplicateSort", where, node.name))

    def check_term(where: str, term: TciTerm) -> None:
        check_types(where, _term_types(term))
        for node in _scan_term(term):
            if isinstance(node, TConst):
                n = typarg_count(node.name)
                if n is None:
                    diags.append(Diagnostic("UnknownConstant", where, node.name))
                elif n != len(node.typargs):
                    diags.append(Diagnostic(
                        "TypargCount", where,
                        f"{node.name} takes {n} type arguments, got {len(node.typargs)}"))

    seen: set[tuple[str, str]] = set()
    for entity in tc.entities():
        key = (entity.kind, entity.full_name)
        if key in seen:
            diags.append(Diagnostic("DuplicateEntity", entity.full_name,
                                    f"duplicate {entity.kind}"))
        seen.add(key)

    for t in tc.types:
        if t.abbrev is not None:
            check_types(t.entity.full_name, _scan_types(t.abbrev))
    for c in tc.consts:
        check_types(c.entity.full_name, _scan_types(c.typ))
        if c.abbrev is not None:
            check_term(c.entity.full_name, c.abbrev)
    for a in tc.axioms:
        check_term(a.entity.full_name, a.prop)
    for t in tc.thms:
        check_term(t.entity.full_name, t.prop)
        for dep in t.deps:
            if dep not in local.facts and dep not in env.facts:
                diags.append(Diagnostic("DanglingDependency", t.entity.full_name, dep))

    for td in tc.typedefs:
        check_types(td.name, _scan_types(td.rep_type))
        check_types(td.name, _scan_types(td.abs_type))
        if td.axiom_name not in local.axioms and td.axiom_name not in env.axioms:
            diags.append(Diagnostic("UnknownAxiom", td.name, td.axiom_name))
        for morphism in (td.rep_morphism, td.abs_morphism):
            if typarg_count(morphism) is None:
                diags.append(Diagnostic("UnknownConstant", td.name, morphism))

    for cd in tc.constdefs:
        if typarg_count(cd.const_name) is None:
            diags.append(Diagnostic("UnknownConstant", cd.const_name,
                                    "constdef names an unknown constant"))
        for a in cd.axiom_names:
            if a not in local.axioms and a not in env.axioms:
                diags.append(Diagnostic("UnknownAxiom", cd.const_name, a))

    for loc in tc.locales:
        where = loc.entity.full_name
        declared = {name for name, _ in loc.typargs}
        for name, typ, _ in loc.fixes:
            check_types(where, _scan_types(typ))
            for node in _scan_types(typ):
                if isinstance(node, TFree) and node.name not in declared:
                    diags.append(Diagnostic("UnboundLocaleTypeVariable", where,
                                            f"{node.name} in fix {name}"))
        for name, prop in loc.assumes:
            check_term(where, prop)
            for node in _term_types(prop):
                if isinstance(node, TFree) and node.name not in declared:
                    diags.append(Diagnostic("UnboundLocaleTypeVariable", where,
                                            f"{node.name} in assume {name}"))
        for const, rhs in loc.defines:
            check_term(where, rhs)
            if typarg_count(const) is None:
                diags.append(Diagnostic("UnknownConstant", where,
                                        f"define targets unknown constant {const}"))
        for thm in loc.notes:
            if thm not in local.facts and thm not in env.facts:
                diags.append(Diagnostic("DanglingDependency", where,
                                        f"note targets unknown theorem {thm}"))

    known_locales = dict(env.locales)
    known_locales.update(local.locales)
    for dep in tc.locale_deps:
        where = f"{dep.source_locale}->{dep.target_locale}"
        src = known_locales.get(dep.source_locale)
        tgt = known_locales.get(dep.target_locale)
        if src is None:
            diags.append(Diagnostic("UnknownLocale", where, dep.source_locale))
        if tgt is None:
            diags.append(Diagnostic("UnknownLocale", where, dep.target_locale))
        if tgt is not None:
            names = ({n for n, _ in tgt.typargs} | {n for n, _, _ in tgt.fixes}
                     | {n for n, _ in tgt.assumes})
            for n, _ in dep.type_assignment:
                if n not in names:
                    diags.append(Diagnostic("UnknownAssignTarget", where, n))
            for n, _ in dep.term_assignment:
                if n not in names:
                    diags.append(Diagnostic("UnknownAssignTarget", where, n))

    known_classes = env.classes | local.classes
    for cls in tc.classes:
        if cls.locale_name not in known_locales:
            diags.append(Diagnostic("UnknownLocale", cls.class_name, cls.locale_name))
        for p in cls.params:
            if typarg_count(p) is None:
                diags.append(Diagnostic("UnknownConstant", cls.class_name, p))
    for cr in tc.classrels:
        for c in (cr.sub, cr.super):
            if c not in known_classes:
                diags.append(Diagnostic("UnknownClass", f"{cr.sub}<{cr.super}", c))
    for ar in tc.arities:
        where = f"{ar.tycon}::{ar.range}"
        n = arity_of(ar.tycon)
        if n is None:
            diags.append(Diagnostic("UnknownTypeConstructor", where, ar.tycon))
        elif n != len(ar.domain):
            diags.append(Diagnostic("ArityMismatch", where,
                                    f"{ar.tycon} has arity {n}, domain lists {len(ar.domain)}"))
        for sort in ar.domain:
            for c in sort:
                if c not in known_classes:
                    diags.append(Diagnostic("UnknownClass", where, c))
        if ar.range not in known_classes:
            diags.append(Diagnostic("UnknownClass", where, ar.range))

    return diags


# ---------------------------------------------------------------------------
# Theory ordering
# ---------------------------------------------------------------------------

def topo_order(graph: Sequence[TheoryContent]) -> list[TheoryContent]:
    """Order theories so parents precede children.

    Stable: ties are broken by (session, theory name).  Parents that are
    not part of the input are assumed to be available elsewhere and do not
    constrain the order.
    """
    by_key = {tc.key: tc for tc in graph}
    out: list[TheoryContent] = []
    state: dict[tuple[str, str], int] = {}

    def visit(tc: TheoryContent, stack: list[tuple[str, str]]) -> None:
        st = state.get(tc.key)
        if st == 1:
            return
        if st == 0:
            cycle = stack[stack.index(tc.key):] + [tc.key]
            raise CycleError([f"{s}.{n}" for s, n in cycle])
        state[tc.key] = 0
        stack.append(tc.key)
        for parent in sorted(tc.parents):
            dep = by_key.get(parent)
            if dep is not None:
                visit(dep, stack)
        stack.pop()
        state[tc.key] = 1
        out.append(tc)

    for tc in sorted(graph, key=lambda t: t.key):
        visit(tc, [])
    return out
