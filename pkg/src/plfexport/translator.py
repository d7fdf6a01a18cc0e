"""Translation of theory content into the logical framework.

The target language is the two-sorted framework of `kernel`.  The
bootstrap theory declares the judgment infrastructure (the type of
propositions, the proofs-of family, and the proof oracle used for
theorems whose proofs were checked upstream); everything else arrives by
translating interchange records:

  * type operators of arity n  ->  constants  type -> ... -> type
  * polymorphic constants      ->  constants  Pi a1:type ... An
  * axioms and theorems        ->  constants  Pi ... ded F
  * locales                    ->  both their elaborated global constants
                                   and a reconstructed nested theory,
                                   plus morphisms for locale dependencies
  * type classes               ->  predicates over types, with subclass
                                   relations and arities as implications

Statement import performs the standard adaptations: constants occur
applied to their type arguments, schematic variables are renamed to
deterministic fresh free variables and universally closed, bound-variable
comments are renamed away from free names, type-class constraints become
judgment-typed preconditions, and top-level entailment chains become
framework arrows between judgment types.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import content as tci
from . import kernel as k
from .content import (
    Arity, AxiomDecl, ClassRecord, ClassRel, ConstDecl, Diagnostic,
    LocaleDep, LocaleRecord, TheoryContent, ThmDecl, TypeDecl,
)
from .kernel import (
    App, Bound, Const, Decl, Expr, Lam, Morphism, Pi, SORT_TYPE, Theory, Var,
    abstract, app, arrow, constants, instantiate, mk_lam, mk_pi, normalize,
    spine,
)
from .uris import DEFAULT_BASE, Uri, long_theory_name, make_uri

PLF_LONG = "PLF"


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class TranslationError(Exception):
    code = "TranslationError"

    def __init__(self, message: str, where: str = ""):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


class UnknownTypeConstructor(TranslationError):
    code = "UnknownTypeConstructor"


class UnboundTypeVariable(TranslationError):
    code = "UnboundTypeVariable"


class UnknownConstant(TranslationError):
    code = "UnknownConstant"


class ArityMismatch(TranslationError):
    code = "ArityMismatch"


class UnknownClass(TranslationError):
    code = "UnknownClass"


class DanglingDep(TranslationError):
    code = "DanglingDep"


class MissingElaboratedCounterpart(TranslationError):
    code = "MissingElaboratedCounterpart"


class UnsupportedProof(TranslationError):
    code = "UnsupportedProof"


# ---------------------------------------------------------------------------
# State
# ---------------------------------------------------------------------------

@dataclass
class _Entry:
    uri: Uri
    typargs: int = 0
    decl: Optional[Decl] = None


@dataclass
class LocaleInfo:
    """Everything later records need to know about a translated locale."""

    uri: Uri
    long: str  # long theory name of the nested theory
    record: LocaleRecord
    typarg_uris: list[tuple[str, Uri]] = field(default_factory=list)
    fix_uris: list[tuple[str, Uri]] = field(default_factory=list)
    assume_uris: list[tuple[str, Uri]] = field(default_factory=list)
    locals: dict[str, _Entry] = field(default_factory=dict)
    inst_args: list[Expr] = field(default_factory=list)
    pred: Optional[Uri] = None

    def component_uri(self, name: str) -> Optional[Uri]:
        for n, u in self.typarg_uris + self.fix_uris + self.assume_uris:
            if n == name:
                return u
        return None


class TransState:
    """Symbol tables shared across one translation run.

    The bootstrap theory is registered before any user content.  The
    per-declaration uses-sets record every constant emitted into a
    declaration's classifier or definiens.
    """

    def __init__(self, base: str = DEFAULT_BASE):
        self.base = base
        self.decls: dict[str, Decl] = {}
        self.names: dict[tuple[str, str], _Entry] = {}
        self.locales: dict[str, LocaleInfo] = {}
        self.current_theory: Optional[Uri] = None
        self.uses: dict[str, set[Uri]] = {}
        self.fresh_counter = 0

    def register(self, decl: Decl, name: Optional[str] = None,
                 typargs: int = 0, named: bool = True) -> None:
        self.decls[decl.uri.render()] = decl
        if named:
            key = (decl.uri.kind, name if name is not None else decl.uri.name)
            self.names[key] = _Entry(decl.uri, typargs, decl)

    def entry(self, kind: str, name: str) -> Optional[_Entry]:
        return self.names.get((kind, name))


@dataclass
class TheoryTranslation:
    """One translated theory: the kernel value plus document structure.

    `items` drives serialization order: ("include", Uri),
    ("narrative", (file, line, offset, text)), ("decl", Decl),
    ("locale", TheoryTranslation), ("morphism", Morphism).
    """

    theory: Theory
    items: list[tuple[str, object]] = field(default_factory=list)
    locales: list["TheoryTranslation"] = field(default_factory=list)
    morphisms: list[Morphism] = field(default_factory=list)

    def graph(self) -> list:
        """This theory and its nested theories and morphisms, check-ready."""
        out: list = [self.theory]
        for loc in self.locales:
            out.extend(loc.graph())
        out.extend(self.morphisms)
        return out


# ---------------------------------------------------------------------------
# Statement import environment
# ---------------------------------------------------------------------------

def _tyvar_base(name: str, index: Optional[int] = None) -> str:
    base = name.lstrip("'")
    if index is not None:
        base += str(index)
    return base


def _fresh(name: str, taken: set[str]) -> str:
    while name in taken:
        name += "'"
    return name


class _Env:
    """Per-statement import state: variable maps and the name pool."""

    def __init__(self, locale: Optional[LocaleInfo] = None,
                 allow_facts: bool = False):
        self.tyvars: dict[tuple[str, Optional[int]], Expr] = {}
        self.terms: dict[str, Expr] = {}
        self.closables: list[tuple[str, tci.TciType]] = []
        self.closable_names: dict[tuple, str] = {}
        self.pool: set[str] = set()
        self.bound: list[Var] = []
        self.pbound: list[Var] = []
        self.locale = locale
        self.allow_facts = allow_facts

    def binder_names(self) -> set[str]:
        return {v.name for v in self.bound} | {v.name for v in self.pbound}


def _scan_free_names(term: tci.TciTerm, pool: set[str]) -> None:
    for node in tci._scan_term(term):
        if isinstance(node, tci.TFreeVar):
            pool.add(node.name)


class Translator:
    """Stateful translation of interchange records into kernel values."""

    def __init__(self, base: str = DEFAULT_BASE, include_proofs: bool = False):
        self.state = TransState(base)
        self.include_proofs = include_proofs
        self._current_uses: Optional[set[Uri]] = None
        self.bootstrap = self.bootstrap_pure()

    # -- bootstrap ----------------------------------------------------------

    def bootstrap_pure(self) -> Theory:
        """The framework theory: prop, ded, and the proof oracle.

        The logical connectives themselves are not declared here; they
        arrive with the regular export of the Pure theory.
        """
        base = self.state.base
        uri = make_uri("theory", PLF_LONG, "PLF", base)
        prop = Decl(make_uri("type", PLF_LONG, "prop", base), SORT_TYPE,
                    metadata={"kind": "type", "external": "prop"})
        self.prop_uri = prop.uri
        ded = Decl(make_uri("type", PLF_LONG, "ded", base),
                   arrow(Const(prop.uri), SORT_TYPE),
                   metadata={"kind": "type", "external": "ded"})
        self.ded_uri = ded.uri
        oracle = Decl(make_uri("const", PLF_LONG, "oracle", base),
                      Pi("phi", Const(prop.uri), App(Const(ded.uri), Bound(0))),
                      metadata={"kind": "const", "external": "oracle",
                                "internal": "oracle"})
        self.oracle_uri = oracle.uri
        theory = Theory(uri=uri, meta=uri, decls=[prop, ded, oracle])
        for d in theory.decls:
            self.state.register(d)
            self.state.uses[d.uri.render()] = constants(d.classifier)
        return theory

    def _ded(self, prop_expr: Expr) -> Expr:
        return App(self._const(self.ded_uri), prop_expr)

    def _const(self, uri: Uri) -> Const:
        if self._current_uses is not None:
            self._current_uses.add(uri)
        return Const(uri)

    def _begin_decl(self, uri: Uri) -> None:
        self._current_uses = set()
        self.state.uses[uri.render()] = self._current_uses

    def _end_decl(self) -> None:
        self._current_uses = None

    # -- resolution ---------------------------------------------------------

    def _resolve(self, kind: str, name: str, where: str) -> _Entry:
        e = self.state.entry(kind, name)
        if e is None:
            cls = {"type": UnknownTypeConstructor, "class": UnknownClass}.get(
                kind, UnknownConstant)
            raise cls(f"unknown {kind} {name!r}", where)
        return e

    def _resolve_term_const(self, name: str, env: _Env, where: str) -> _Entry:
        if env.locale is not None:
            local = env.locale.locals.get(name)
            if local is not None:
                return local
        kinds = ("const", "axiom", "thm") if env.allow_facts else ("const",)
        for kind in kinds:
            e = self.state.entry(kind, name)
            if e is not None:
                return e
        raise UnknownConstant(f"unknown constant {name!r}", where)

    def _note_env_expr(self, e: Expr) -> Expr:
        # constants resolved through a pre-built environment still count
        # as uses of the current declaration
        if self._current_uses is not None:
            self._current_uses.update(constants(e))
        return e

    # -- types --------------------------------------------------------------

    def import_type(self, t: tci.TciType, env: _Env, where: str = "") -> Expr:
        """TFree/TVar via the type-variable environment, `fun` as the
        framework arrow, other constructors as constant applications.
        Sorts on variables are deliberately dropped here."""
        if isinstance(t, tci.TFree):
            e = env.tyvars.get((t.name, None))
            if e is None:
                raise UnboundTypeVariable(f"type variable {t.name!r}", where)
            return self._note_env_expr(e)
        if isinstance(t, tci.TVar):
            e = env.tyvars.get((t.name, t.index))
            if e is None:
                raise UnboundTypeVariable(f"type variable {t.name!r}.{t.index}", where)
            return self._note_env_expr(e)
        if isinstance(t, tci.TCon):
            if t.name == tci.FUN:
                if len(t.args) != 2:
                    raise ArityMismatch("fun expects two arguments", where)
                return arrow(self.import_type(t.args[0], env, where),
                             self.import_type(t.args[1], env, where))
            if t.name == tci.PROP:
                if t.args:
                    raise ArityMismatch("prop is nullary", where)
                return self._const(self.prop_uri)
            entry = self._resolve("type", t.name, where)
            if entry.typargs != len(t.args):
                raise ArityMismatch(
                    f"{t.name} expects {entry.typargs} arguments, got {len(t.args)}",
                    where)
            return app(self._const(entry.uri),
                       *(self.import_type(a, env, where) for a in t.args))
        raise TranslationError(f"bad type node {t!r}", where)

    # -- terms --------------------------------------------------------------

    def import_term(self, t: tci.TciTerm, env: _Env, where: str = "") -> Expr:
        if isinstance(t, tci.TConst):
            entry = self._resolve_term_const(t.name, env, where)
            if entry.typargs != len(t.typargs):
                raise ArityMismatch(
                    f"{t.name} takes {entry.typargs} type arguments, "
                    f"got {len(t.typargs)}", where)
            return app(self._const(entry.uri),
                       *(self.import_type(a, env, where) for a in t.typargs))
        if isinstance(t, tci.TFreeVar):
            fixed = env.terms.get(t.name)
            if fixed is not None:
                return self._note_env_expr(fixed)
            rendered = env.closable_names.get(("f", t.name))
            if rendered is not None:
                return Var(rendered)
            raise UnknownConstant(f"free variable {t.name!r} has no binding", where)
        if isinstance(t, tci.TSchematic):
            rendered = env.closable_names.get(("s", t.name, t.index))
            if rendered is not None:
                return Var(rendered)
            raise UnknownConstant(f"schematic ?{t.name}.{t.index} has no binding", where)
        if isinstance(t, tci.TBound):
            if t.index >= len(env.bound):
                raise TranslationError(f"bound index {t.index} out of scope", where)
            return env.bound[-1 - t.index]
        if isinstance(t, tci.TAbs):
            comment = t.comment
            if comment in env.pool:
                comment = _fresh(comment, env.pool | env.binder_names())
            open_name = _fresh(comment, env.pool | env.binder_names())
            annot = self.import_type(t.typ, env, where)
            env.bound.append(Var(open_name))
            try:
                body = self.import_term(t.body, env, where)
            finally:
                env.bound.pop()
            return Lam(comment, annot, abstract(body, open_name))
        if isinstance(t, tci.TApp):
            return App(self.import_term(t.fun, env, where),
                       self.import_term(t.arg, env, where))
        raise TranslationError(f"bad term node {t!r}", where)

    # -- statements ---------------------------------------------------------

    def _collect_closables(self, t: tci.TciTerm, env: _Env) -> None:
        """Assign deterministic names to free/schematic term variables, in
        traversal order of first occurrence."""
        for node in tci._scan_term(t):
            if isinstance(node, tci.TFreeVar):
                if node.name in env.terms:
                    continue
                key = ("f", node.name)
                if key not in env.closable_names:
                    env.closable_names[key] = node.name
                    env.closables.append((node.name, node.typ))
            elif isinstance(node, tci.TSchematic):
                key = ("s", node.name, node.index)
                if key not in env.closable_names:
                    rendered = _fresh(_tyvar_base(node.name) + str(node.index),
                                      env.pool)
                    env.pool.add(rendered)
                    env.closable_names[key] = rendered
                    env.closables.append((rendered, node.typ))

    def _split_imp(self, t: tci.TciTerm) -> tuple[list[tci.TciTerm], tci.TciTerm]:
        premises: list[tci.TciTerm] = []
        while (isinstance(t, tci.TApp) and isinstance(t.fun, tci.TApp)
               and isinstance(t.fun.fun, tci.TConst)
               and t.fun.fun.name == tci.PURE_IMP):
            premises.append(t.fun.arg)
            t = t.arg
        return premises, t

    def import_prop(self, typargs: Sequence[tci.Typarg], prop: tci.TciTerm,
                    locale: Optional[LocaleInfo] = None, where: str = "") -> Expr:
        """Classifier of a statement.

        Binder order, outermost first: one Pi per type argument, one Pi per
        renamed free/schematic term variable (first occurrence order), one
        judgment-typed precondition arrow per (type argument, class) pair
        (type argument order, then lexicographic class order), then the
        premises of a top-level entailment chain, then the judgment of the
        conclusion.  In locale context the type arguments resolve to the
        locale's fixed types instead of being bound here.
        """
        env = _Env(locale)
        _scan_free_names(prop, env.pool)
        if locale is not None:
            env.tyvars = dict(self._locale_tyenv(locale))
            env.terms = dict(self._locale_terms(locale))
            env.pool |= set(env.terms)

        ty_binders: list[str] = []
        for name, index, _sort in typargs:
            if locale is not None:
                continue  # fixed by the enclosing locale theory
            rendered = _fresh(_tyvar_base(name, index), env.pool)
            env.pool.add(rendered)
            env.tyvars[(name, index)] = Var(rendered)
            ty_binders.append(rendered)

        self._collect_closables(prop, env)
        premises, conclusion = self._split_imp(prop)

        body = self._ded(self.import_term(conclusion, env, where))
        for premise in reversed(premises):
            body = arrow(self._ded(self.import_term(premise, env, where)), body)
        if locale is None:
            for (name, index, sort), rendered in reversed(list(zip(typargs, ty_binders))):
                for cls in sorted(sort, reverse=True):
                    entry = self._resolve("class", cls, where)
                    body = arrow(self._ded(App(self._const(entry.uri),
                                               Var(rendered))), body)
        for rendered, typ in reversed(env.closables):
            body = mk_pi(rendered, self.import_type(typ, env, where), body)
        for rendered in reversed(ty_binders):
            body = mk_pi(rendered, SORT_TYPE, body)
        return body

    # -- proofs -------------------------------------------------------------

    def translate_proof(self, p: tci.TciProof, env: Optional[_Env] = None,
                        where: str = "") -> Expr:
        """Curry-Howard import of a proof term.

        Proof abstractions become lambdas: over a type (when annotated with
        the distinguished `type` constructor), over a term, or over a
        hypothesis (a judgment-typed variable).  Axiom and theorem
        references become constants applied to their type arguments.
        """
        if env is None:
            env = _Env()
            for node in _scan_proof_terms(p):
                _scan_free_names(node, env.pool)
        if isinstance(p, tci.PAxiom) or isinstance(p, tci.PThm):
            kind = "axiom" if isinstance(p, tci.PAxiom) else "thm"
            entry = self._resolve(kind, p.name, where)
            return app(self._const(entry.uri),
                       *(self.import_type(a, env, where) for a in p.typargs))
        if isinstance(p, tci.PBoundP):
            if p.index >= len(env.pbound):
                raise TranslationError(f"proof variable {p.index} out of scope", where)
            return env.pbound[-1 - p.index]
        if isinstance(p, tci.PAbsT):
            comment = p.comment
            is_type = isinstance(p.typ, tci.TCon) and p.typ.name == tci.TYPE_BINDER \
                and not p.typ.args
            if is_type:
                # binds a type variable; embedded types refer to it by name,
                # so it stays out of the positional term-variable space
                base = _tyvar_base(comment)
                open_tyvars = {v.name for v in env.tyvars.values()
                               if isinstance(v, Var)}
                open_name = _fresh(base, env.pool | env.binder_names() | open_tyvars)
                saved = env.tyvars.get((comment, None))
                env.tyvars[(comment, None)] = Var(open_name)
                try:
                    body = self.translate_proof(p.body, env, where)
                finally:
                    if saved is None:
                        del env.tyvars[(comment, None)]
                    else:
                        env.tyvars[(comment, None)] = saved
                return Lam(base, SORT_TYPE, abstract(body, open_name))
            if comment in env.pool:
                comment = _fresh(comment, env.pool | env.binder_names())
            open_name = _fresh(comment, env.pool | env.binder_names())
            annot = self.import_type(p.typ, env, where)
            env.bound.append(Var(open_name))
            try:
                body = self.translate_proof(p.body, env, where)
            finally:
                env.bound.pop()
            return Lam(comment, annot, abstract(body, open_name))
        if isinstance(p, tci.PAbsP):
            comment = p.comment
            if comment in env.pool:
                comment = _fresh(comment, env.pool | env.binder_names())
            open_name = _fresh(comment, env.pool | env.binder_names())
            annot = self._ded(self.import_term(p.prop, env, where))
            env.pbound.append(Var(open_name))
            try:
                body = self.translate_proof(p.body, env, where)
            finally:
                env.pbound.pop()
            return Lam(comment, annot, abstract(body, open_name))
        if isinstance(p, tci.PAppT):
            return App(self.translate_proof(p.proof, env, where),
                       self.import_term(p.term, env, where))
        if isinstance(p, tci.PAppP):
            return App(self.translate_proof(p.fun, env, where),
                       self.translate_proof(p.arg, env, where))
        raise TranslationError(f"bad proof node {p!r}", where)

    # -- foundational declarations ------------------------------------------

    def translate_type_decl(self, t: TypeDecl, long: str) -> Decl:
        uri = make_uri("type", long, t.entity.full_name, self.state.base)
        self._begin_decl(uri)
        classifier: Expr = SORT_TYPE
        for _ in range(t.arity):
            classifier = arrow(SORT_TYPE, classifier)
        definiens = None
        if t.abbrev is not None:
            env = _Env()
            params: list[str] = []
            for node in tci._scan_types(t.abbrev):
                if isinstance(node, tci.TFree) and (node.name, None) not in env.tyvars:
                    rendered = _fresh(_tyvar_base(node.name), env.pool)
                    env.pool.add(rendered)
                    env.tyvars[(node.name, None)] = Var(rendered)
                    params.append(rendered)
            while len(params) < t.arity:
                # abbreviation ignores trailing parameters
                rendered = _fresh(f"_a{len(params)}", env.pool)
                env.pool.add(rendered)
                params.append(rendered)
            if len(params) > t.arity:
                raise ArityMismatch(
                    f"abbreviation of {t.entity.full_name} uses more type "
                    f"variables than its arity", t.entity.full_name)
            definiens = self.import_type(t.abbrev, env, t.entity.full_name)
            for p in reversed(params):
                definiens = mk_lam(p, SORT_TYPE, definiens)
        decl = Decl(uri, classifier, definiens,
                    metadata=self._meta(t.entity))
        self._end_decl()
        self.state.register(decl, name=t.entity.full_name, typargs=t.arity)
        return decl

    def translate_const_decl(self, c: ConstDecl, long: str,
                             defining_axioms: Sequence[str] = ()) -> Decl:
        uri = make_uri("const", long, c.entity.full_name, self.state.base)
        self._begin_decl(uri)
        env = _Env()
        for name in c.typargs:
            rendered = _fresh(_tyvar_base(name), env.pool)
            env.pool.add(rendered)
            env.tyvars[(name, None)] = Var(rendered)
        body = self.import_type(c.typ, env, c.entity.full_name)
        classifier = body
        for name in reversed(c.typargs):
            classifier = mk_pi(env.tyvars[(name, None)].name, SORT_TYPE, classifier)  # type: ignore[union-attr]
        definiens = None
        if c.abbrev is not None:
            definiens = self.import_term(c.abbrev, env, c.entity.full_name)
            for name in reversed(c.typargs):
                definiens = mk_lam(env.tyvars[(name, None)].name, SORT_TYPE, definiens)  # type: ignore[union-attr]
        meta = self._meta(c.entity)
        sorts = _sort_constraints(c.typ)
        if sorts:
            meta["sorts"] = sorts
        if c.spec_kind:
            meta["spec_kind"] = c.spec_kind
        if defining_axioms:
            meta["defining-axioms"] = " ".join(defining_axioms)
        decl = Decl(uri, classifier, definiens, metadata=meta)
        self._end_decl()
        self.state.register(decl, name=c.entity.full_name, typargs=len(c.typargs))
        return decl

    def translate_axiom_decl(self, a: AxiomDecl, long: str) -> Decl:
        uri = make_uri("axiom", long, a.entity.full_name, self.state.base)
        self._begin_decl(uri)
        classifier = self.import_prop(a.typargs, a.prop, where=a.entity.full_name)
        decl = Decl(uri, classifier, metadata=self._meta(a.entity))
        self._end_decl()
        self.state.register(decl, name=a.entity.full_name, typargs=len(a.typargs))
        return decl

    def translate_thm_decl(self, t: ThmDecl, long: str) -> Decl:
        uri = make_uri("thm", long, t.entity.full_name, self.state.base)
        self._begin_decl(uri)
        classifier = self.import_prop(t.typargs, t.prop, where=t.entity.full_name)
        deps = tuple(self._resolve_fact(d, t.entity.full_name).render()
                     for d in t.deps)
        meta = self._meta(t.entity)
        meta["deps"] = deps
        if t.proof is not None and self.include_proofs:
            if any(sort for _, _, sort in t.typargs):
                raise UnsupportedProof(
                    "proof terms for class-constrained statements are not supported",
                    t.entity.full_name)
            definiens = self.translate_proof(t.proof, where=t.entity.full_name)
            decl = Decl(uri, classifier, definiens, unchecked=False, metadata=meta)
        else:
            definiens = App(self._const(self.oracle_uri), classifier)
            decl = Decl(uri, classifier, definiens, unchecked=True, metadata=meta)
        self._end_decl()
        self.state.register(decl, name=t.entity.full_name, typargs=len(t.typargs))
        return decl

    def _resolve_fact(self, name: str, where: str) -> Uri:
        for kind in ("thm", "axiom"):
            e = self.state.entry(kind, name)
            if e is not None:
                return e.uri
        raise DanglingDep(f"dependency {name!r} does not resolve", where)

    # -- locales --------------------------------------------------------------

    def _locale_tyenv(self, info: LocaleInfo) -> dict:
        return {(name, None): Const(uri)
                for (name, _), (_, uri) in zip(info.record.typargs, info.typarg_uris)}

    def _locale_terms(self, info: LocaleInfo) -> dict:
        return {name: Const(uri) for name, uri in info.fix_uris}

    def translate_locale(self, lr: LocaleRecord, long: str,
                         enclosing: Uri) -> tuple[Theory, LocaleInfo]:
        """Reconstruct a locale as a nested theory.

        Local declarations, in order: one fixed type per type argument, one
        constant per fix, one primitive judgment constant per assume, then
        a defined constant for every define and note.  Classifiers of
        defines and notes are obtained from their elaborated global
        counterparts by instantiating the structure parameters with the
        local fixed types and operations, folding applied occurrences of
        global defines back to the local constants, and stripping the
        leading membership precondition from notes.
        """
        name = lr.entity.full_name
        uri = make_uri("locale", long, name, self.state.base)
        local_long = f"{long}.{name}"
        info = LocaleInfo(uri=uri, long=local_long, record=lr)
        theory = Theory(uri=uri, meta=self.bootstrap.uri, includes=(enclosing,))

        for tv, sort in lr.typargs:
            short = _tyvar_base(tv)
            turi = make_uri("type", local_long, short, self.state.base)
            meta = {"kind": "type", "external": short}
            if sort:
                meta["sorts"] = ",".join(sorted(sort))
            decl = Decl(turi, SORT_TYPE, metadata=meta)
            theory.decls.append(decl)
            self.state.uses[turi.render()] = set()
            info.typarg_uris.append((tv, turi))
            info.locals[short] = _Entry(turi, 0, decl)
            info.locals[f"{name}.{short}"] = info.locals[short]
            self.state.decls[turi.render()] = decl

        env = _Env(info)
        env.tyvars = self._locale_tyenv(info)

        for fname, typ, syntax in lr.fixes:
            furi = make_uri("const", local_long, fname, self.state.base)
            self._begin_decl(furi)
            classifier = self.import_type(typ, env, f"{name}.{fname}")
            meta = {"kind": "const", "external": fname}
            if syntax:
                meta["syntax"] = syntax
            decl = Decl(furi, classifier, metadata=meta)
            self._end_decl()
            theory.decls.append(decl)
            info.fix_uris.append((fname, furi))
            info.locals[fname] = _Entry(furi, 0, decl)
            info.locals[f"{name}.{fname}"] = info.locals[fname]
            self.state.decls[furi.render()] = decl

        for aname, prop in lr.assumes:
            auri = make_uri("axiom", local_long, aname, self.state.base)
            self._begin_decl(auri)
            classifier = self.import_prop((), prop, locale=info,
                                          where=f"{name}.{aname}")
            decl = Decl(auri, classifier, metadata={"kind": "axiom",
                                                    "external": aname})
            self._end_decl()
            theory.decls.append(decl)
            info.assume_uris.append((aname, auri))
            info.locals[aname] = _Entry(auri, 0, decl)
            info.locals[f"{name}.{aname}"] = info.locals[aname]
            self.state.decls[auri.render()] = decl

        info.inst_args = [Const(u) for _, u in info.typarg_uris] + \
                         [Const(u) for _, u in info.fix_uris]
        env.terms = self._locale_terms(info)
        env.pool |= set(env.terms)
        pred_entry = self.state.entry("const", name)
        info.pred = pred_entry.uri if pred_entry is not None else None

        define_folds: list[tuple[Expr, Expr]] = []
        for gname, rhs in lr.defines:
            gentry = self.state.entry("const", gname)
            if gentry is None or gentry.decl is None:
                raise MissingElaboratedCounterpart(
                    f"no elaborated constant {gname!r} for define", name)
            short = gname.rsplit(".", 1)[-1]
            duri = make_uri("const", local_long, short, self.state.base)
            self._begin_decl(duri)
            classifier = _apply_classifier(gentry.decl.classifier, info.inst_args,
                                           gname)
            for pat, rep in define_folds:
                classifier = _rewrite(classifier, pat, rep)
            self._current_uses.update(constants(classifier))
            definiens = self.import_term(rhs, env, f"{name}.{short}")
            decl = Decl(duri, classifier, definiens,
                        metadata={"kind": "const", "external": short,
                                  "counterpart": gentry.uri.render()})
            self._end_decl()
            theory.decls.append(decl)
            define_folds.append((app(Const(gentry.uri), *info.inst_args),
                                 Const(duri)))
            info.locals[short] = _Entry(duri, 0, decl)
            info.locals[gname] = info.locals[short]
            self.state.decls[duri.render()] = decl

        for gname in lr.notes:
            gentry = self.state.entry("thm", gname)
            if gentry is None or gentry.decl is None:
                raise MissingElaboratedCounterpart(
                    f"no elaborated theorem {gname!r} for note", name)
            short = gname.rsplit(".", 1)[-1]
            nuri = make_uri("thm", local_long, short, self.state.base)
            self._begin_decl(nuri)
            classifier = self._localize_note(gentry.decl, info, define_folds)
            self._current_uses.update(constants(classifier))
            definiens = App(self._const(self.oracle_uri), classifier)
            deps = gentry.decl.deps() or ()
            decl = Decl(nuri, classifier, definiens, unchecked=True,
                        metadata={"kind": "thm", "external": short,
                                  "counterpart": gentry.uri.render(),
                                  "deps": tuple(deps)})
            self._end_decl()
            theory.decls.append(decl)
            info.locals[short] = _Entry(nuri, 0, decl)
            info.locals[gname] = info.locals[short]
            self.state.decls[nuri.render()] = decl

        self.state.locales[name] = info
        return theory, info

    def _localize_note(self, gdecl: Decl, info: LocaleInfo,
                       define_folds: Sequence[tuple[Expr, Expr]]) -> Expr:
        classifier = _apply_classifier(gdecl.classifier, info.inst_args,
                                       gdecl.uri.name)
        for pat, rep in define_folds:
            classifier = _rewrite(classifier, pat, rep)
        classifier = self._strip_membership(classifier, info)
        return normalize(classifier)

    def _strip_membership(self, classifier: Expr, info: LocaleInfo) -> Expr:
        if info.pred is None:
            return classifier
        pattern = App(Const(self.ded_uri),
                      app(Const(info.pred), *info.inst_args))
        while (isinstance(classifier, Pi)
               and not k.uses_bound(classifier.codomain, 0)
               and normalize(classifier.domain) == normalize(pattern)):
            classifier = k.shift(classifier.codomain, -1)
        return classifier

    def check_locale_consistency(self, lr: LocaleRecord,
                                 theory: Theory) -> list[Diagnostic]:
        """Validate the reconstructed locale against its elaboration.

        For every note, the instantiated-and-relativization-stripped global
        statement must be alpha-equal (after normalization) to the local
        classifier.
        """
        diags: list[Diagnostic] = []
        info = self.state.locales.get(lr.entity.full_name)
        if info is None:
            return [Diagnostic("UnknownLocale", lr.entity.full_name,
                               "locale was never translated")]
        define_folds = []
        for gname, _ in lr.defines:
            gentry = self.state.entry("const", gname)
            local = info.locals.get(gname)
            if gentry is None or local is None:
                diags.append(Diagnostic("MissingElaboratedCounterpart",
                                        lr.entity.full_name, gname))
                continue
            define_folds.append((app(Const(gentry.uri), *info.inst_args),
                                 Const(local.uri)))
        by_uri = {d.uri.render(): d for d in theory.decls}
        for gname in lr.notes:
            gentry = self.state.entry("thm", gname)
            local = info.locals.get(gname)
            if gentry is None or gentry.decl is None or local is None:
                diags.append(Diagnostic("MissingElaboratedCounterpart",
                                        lr.entity.full_name, gname))
                continue
            stored = by_uri.get(local.uri.render())
            if stored is None:
                diags.append(Diagnostic("LocaleMismatch", gname,
                                        "local declaration missing"))
                continue
            expected = self._localize_note(gentry.decl, info, define_folds)
            if normalize(stored.classifier) != expected:
                diags.append(Diagnostic(
                    "LocaleMismatch", gname,
                    f"local statement {k.pretty(stored.classifier)} differs "
                    f"from relativized global {k.pretty(expected)}"))
        return diags

    def translate_locale_dep(self, dep: LocaleDep, long: str) -> Morphism:
        """A locale dependency names a source locale that interprets the
        target locale: the morphism maps the target's primitives to
        expressions over the source."""
        src = self.state.locales.get(dep.source_locale)
        tgt = self.state.locales.get(dep.target_locale)
        if src is None or tgt is None:
            missing = dep.source_locale if src is None else dep.target_locale
            raise TranslationError(f"unknown locale {missing!r}",
                                   f"{dep.source_locale}->{dep.target_locale}")
        uri = make_uri("morphism", long,
                       f"{dep.target_locale}->{dep.source_locale}",
                       self.state.base)
        env = _Env(src, allow_facts=True)
        env.tyvars = self._locale_tyenv(src)
        env.terms = self._locale_terms(src)
        assignments: list[tuple[Uri, Expr]] = []
        where = uri.name
        for name, typ in dep.type_assignment:
            target = tgt.component_uri(name)
            if target is None:
                raise TranslationError(f"no component {name!r} in target locale", where)
            assignments.append((target, self.import_type(typ, env, where)))
        for name, term in dep.term_assignment:
            target = tgt.component_uri(name)
            if target is None:
                raise TranslationError(f"no component {name!r} in target locale", where)
            assignments.append((target, self.import_term(term, env, where)))
        return Morphism(uri=uri, dom=tgt.uri, cod=src.uri, assignments=assignments)

    # -- classes --------------------------------------------------------------

    def translate_class(self, cls: ClassRecord, classrels: Sequence[ClassRel],
                        arities: Sequence[Arity], long: str,
                        locale_uri: Optional[Uri] = None) -> list[Decl]:
        """Class predicate plus the order-sorted algebra involving it.

        The predicate classifies types; each subclass edge becomes an
        implication between predicates, each arity an implication from the
        argument constraints to membership of the constructed type."""
        out: list[Decl] = []
        existing = self.state.entry("class", cls.class_name)
        if existing is None:
            curi = make_uri("class", long, cls.class_name, self.state.base)
            self._begin_decl(curi)
            classifier = arrow(SORT_TYPE, self._const(self.prop_uri))
            meta = {"kind": "class", "external": cls.class_name.rsplit(".", 1)[-1]}
            if locale_uri is None:
                locale = self.state.locales.get(cls.locale_name)
                locale_uri = locale.uri if locale is not None else None
            if locale_uri is not None:
                meta["class-locale"] = locale_uri.render()
            if cls.params:
                # class parameters are always declared alongside the class
                meta["params"] = " ".join(
                    make_uri("const", long, p, self.state.base).render()
                    for p in cls.params)
            decl = Decl(curi, classifier, metadata=meta)
            self._end_decl()
            self.state.register(decl, name=cls.class_name)
            out.append(decl)

        for rel in classrels:
            if rel.sub != cls.class_name:
                continue
            out.append(self.translate_classrel(rel, long))
        for ar in arities:
            if ar.range != cls.class_name:
                continue
            out.append(self.translate_arity(ar, long))
        return out

    def translate_classrel(self, rel: ClassRel, long: str) -> Decl:
        uri = make_uri("classrel", long, f"{rel.sub}<{rel.super}", self.state.base)
        self._begin_decl(uri)
        sub = self._resolve("class", rel.sub, uri.name)
        sup = self._resolve("class", rel.super, uri.name)
        body = arrow(self._ded(App(self._const(sub.uri), Var("a"))),
                     self._ded(App(self._const(sup.uri), Var("a"))))
        decl = Decl(uri, mk_pi("a", SORT_TYPE, body),
                    metadata={"kind": "classrel", "external": uri.name})
        self._end_decl()
        self.state.register(decl)
        return decl

    def translate_arity(self, ar: Arity, long: str) -> Decl:
        uri = make_uri("arity", long, f"{ar.tycon}::{ar.range}", self.state.base)
        self._begin_decl(uri)
        tycon = self._resolve("type", ar.tycon, uri.name)
        if tycon.typargs != len(ar.domain):
            raise ArityMismatch(
                f"{ar.tycon} has arity {tycon.typargs}, domain lists "
                f"{len(ar.domain)}", uri.name)
        names = ["a"] if len(ar.domain) == 1 else \
            [f"a{i + 1}" for i in range(len(ar.domain))]
        rng = self._resolve("class", ar.range, uri.name)
        body = self._ded(App(self._const(rng.uri),
                             app(self._const(tycon.uri), *(Var(n) for n in names))))
        for name, sort in zip(reversed(names), reversed(ar.domain)):
            for cls in sorted(sort, reverse=True):
                centry = self._resolve("class", cls, uri.name)
                body = arrow(self._ded(App(self._const(centry.uri), Var(name))),
                             body)
        for name in reversed(names):
            body = mk_pi(name, SORT_TYPE, body)
        decl = Decl(uri, body, metadata={"kind": "arity", "external": uri.name})
        self._end_decl()
        self.state.register(decl)
        return decl

    # -- whole theories --------------------------------------------------------

    def translate_theory(self, tc: TheoryContent) -> TheoryTranslation:
        """Translate one theory, arranging output by command span.

        Within a span, records keep the interchange category order (types,
        consts, axioms, thms, locales, classes); the subclass/arity algebra
        and locale dependency morphisms close the theory.
        """
        long = long_theory_name(tc.session, tc.theory_name)
        uri = make_uri("theory", long, tc.theory_name, self.state.base)
        self.state.current_theory = uri
        includes = tuple(
            make_uri("theory", long_theory_name(s, n), n, self.state.base)
            for s, n in tc.parents)
        theory = Theory(uri=uri, meta=self.bootstrap.uri, includes=includes)
        result = TheoryTranslation(theory=theory)
        for inc in includes:
            result.items.append(("include", inc))

        defining = {cd.const_name: cd.axiom_names for cd in tc.constdefs}
        defined_by: dict[str, list[str]] = {}
        for cd in tc.constdefs:
            for a in cd.axiom_names:
                defined_by.setdefault(a, []).append(cd.const_name)
        typedefs = {td.name: td for td in tc.typedefs}

        END = (1 << 62)
        records: list[tuple[int, int, int, object]] = []
        seq = 0
        for cat, items in ((0, tc.types), (1, tc.consts), (2, tc.axioms),
                           (3, tc.thms), (4, tc.locales), (5, tc.classes)):
            for rec in items:
                span = rec.entity.command_span if cat != 5 else \
                    self._class_span(rec, tc)
                records.append((span, cat, seq, rec))
                seq += 1
        for rec in tc.classrels:
            records.append((END, 6, seq, rec))
            seq += 1
        for rec in tc.arities:
            records.append((END, 7, seq, rec))
            seq += 1
        records.sort(key=lambda r: (r[0], r[1], r[2]))

        # Class predicates depend only on the framework, and constraint
        # preconditions in ordinary statements depend on them, so classes
        # are translated first.  Locales in turn may refer to elaborated
        # constants from later command spans (the begin/end block), so
        # they come after the ordinary declarations.  Slots keep every
        # record at its span position regardless of translation pass.
        slots: list = [None] * len(records)
        for i, (_span, cat, _seq, rec) in enumerate(records):
            if cat == 5:
                locale_uri = None
                if any(l.entity.full_name == rec.locale_name for l in tc.locales):
                    locale_uri = make_uri("locale", long, rec.locale_name,
                                          self.state.base)
                slots[i] = [("decl", d)
                            for d in self.translate_class(rec, (), (), long,
                                                          locale_uri)]
        for i, (_span, cat, _seq, rec) in enumerate(records):
            if cat == 0:
                decl = self.translate_type_decl(rec, long)
                td = typedefs.get(rec.entity.full_name)
                if td is not None:
                    self._attach_typedef(decl, td, long)
                slots[i] = [("decl", decl)]
            elif cat == 1:
                axioms = tuple(
                    make_uri("axiom", long, a, self.state.base).render()
                    for a in defining.get(rec.entity.full_name, ()))
                slots[i] = [("decl", self.translate_const_decl(rec, long, axioms))]
            elif cat == 2:
                decl = self.translate_axiom_decl(rec, long)
                for const in defined_by.get(rec.entity.full_name, ()):
                    decl.metadata["defines-const"] = \
                        make_uri("const", long, const, self.state.base).render()
                slots[i] = [("decl", decl)]
            elif cat == 3:
                slots[i] = [("decl", self.translate_thm_decl(rec, long))]
        for i, (_span, cat, _seq, rec) in enumerate(records):
            if cat == 4:
                nested, _info = self.translate_locale(rec, long, uri)
                sub = TheoryTranslation(theory=nested)
                sub.items.append(("include", uri))
                for d in nested.decls:
                    sub.items.append(("decl", d))
                result.locales.append(sub)
                slots[i] = [("locale", sub)]
        for i, (_span, cat, _seq, rec) in enumerate(records):
            if cat == 6:
                slots[i] = [("decl", self.translate_classrel(rec, long))]
            elif cat == 7:
                slots[i] = [("decl", self.translate_arity(rec, long))]

        narrated: set[int] = set()
        for (_span, cat, _seq, rec), slot in zip(records, slots):
            entity = getattr(rec, "entity", None)
            if entity is not None and entity.source_text is not None \
                    and entity.command_span not in narrated:
                narrated.add(entity.command_span)
                result.items.append(("narrative", (entity.file, entity.line,
                                                   entity.offset,
                                                   entity.source_text)))
            for item in slot or []:
                result.items.append(item)
                if item[0] == "decl":
                    theory.decls.append(item[1])

        for dep in tc.locale_deps:
            m = self.translate_locale_dep(dep, long)
            result.morphisms.append(m)
            result.items.append(("morphism", m))

        self.state.current_theory = None
        return result

    def _class_span(self, cls: ClassRecord, tc: TheoryContent) -> int:
        for loc in tc.locales:
            if loc.entity.full_name == cls.locale_name:
                return loc.entity.command_span
        return 0

    def _attach_typedef(self, decl: Decl, td: tci.TypedefRecord, long: str) -> None:
        decl.metadata["typedef-rep-morphism"] = \
            make_uri("const", long, td.rep_morphism, self.state.base).render()
        decl.metadata["typedef-abs-morphism"] = \
            make_uri("const", long, td.abs_morphism, self.state.base).render()
        decl.metadata["typedef-axiom"] = \
            make_uri("axiom", long, td.axiom_name, self.state.base).render()

    def _meta(self, entity: tci.Entity) -> dict:
        meta: dict[str, object] = {"kind": entity.kind,
                                   "external": entity.external_name}
        if entity.file:
            meta["file"] = entity.file
        meta["line"] = str(entity.line)
        meta["offset"] = str(entity.offset)
        meta["span"] = str(entity.command_span)
        if entity.source_text is not None:
            meta["src"] = entity.source_text
        return meta


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _apply_classifier(classifier: Expr, args: Sequence[Expr], where: str) -> Expr:
    for a in args:
        if not isinstance(classifier, Pi):
            raise MissingElaboratedCounterpart(
                "elaborated counterpart abstracts over fewer parameters than "
                "the locale fixes", where)
        classifier = instantiate(classifier.codomain, a)
    return classifier


def _rewrite(e: Expr, pattern: Expr, replacement: Expr) -> Expr:
    if e == pattern:
        return replacement
    if isinstance(e, App):
        return App(_rewrite(e.fun, pattern, replacement),
                   _rewrite(e.arg, pattern, replacement))
    if isinstance(e, Lam):
        return Lam(e.bound, _rewrite(e.annot, pattern, replacement),
                   _rewrite(e.body, pattern, replacement))
    if isinstance(e, Pi):
        return Pi(e.bound, _rewrite(e.domain, pattern, replacement),
                  _rewrite(e.codomain, pattern, replacement))
    return e


def _sort_constraints(typ: tci.TciType) -> str:
    pairs = []
    seen = set()
    for node in tci._scan_types(typ):
        if isinstance(node, (tci.TFree, tci.TVar)) and node.sort:
            key = node.name
            if key not in seen:
                seen.add(key)
                pairs.append(f"{node.name}:{','.join(sorted(node.sort))}")
    return ";".join(pairs)


def _scan_proof_terms(p: tci.TciProof):
    if isinstance(p, tci.PAbsT):
        yield from _scan_proof_terms(p.body)
    elif isinstance(p, tci.PAbsP):
        yield p.prop
        yield from _scan_proof_terms(p.body)
    elif isinstance(p, tci.PAppT):
        yield p.term
        yield from _scan_proof_terms(p.proof)
    elif isinstance(p, tci.PAppP):
        yield from _scan_proof_terms(p.fun)
        yield from _scan_proof_terms(p.arg)


def bootstrap_pure(base: str = DEFAULT_BASE) -> Theory:
    """The framework bootstrap theory on its own."""
    return Translator(base).bootstrap
