"""Minimal pure-type-system kernel for the polymorphic logical framework.

The expression language is a two-sorted PTS: the sort of types, its
classifier (the kind sort), constants, variables, application, lambda,
and Pi.  All four Pi-formation rules are allowed, which gives the
lambda-C style rule set needed for type operators (type -> ... -> type),
judgment families (prop -> type), polymorphism (Pi a:type. ...), and
dependent proof types.

Bound variables are positional (de Bruijn indices); the name stored on a
binder is a printing comment and never affects equality.  Free variables
are named and resolved against a Context, constants against a Signature.
Definitional equality is beta-eta, with definientia of defined constants
unfolded only during comparison, never in returned normal forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Union

from .uris import Uri


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

class Expr:
    """Base class of framework expressions (terms, types, kinds)."""

    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Sort(Expr):
    name: str


SORT_TYPE = Sort("type")
SORT_KIND = Sort("kind")


@dataclass(frozen=True, slots=True)
class Const(Expr):
    uri: Uri


@dataclass(frozen=True, slots=True)
class Var(Expr):
    """A free, named variable (resolved against a Context)."""

    name: str


@dataclass(frozen=True, slots=True)
class Bound(Expr):
    """A positional occurrence of an enclosing binder (0 = innermost)."""

    index: int


@dataclass(frozen=True, slots=True)
class App(Expr):
    fun: Expr
    arg: Expr


@dataclass(frozen=True, slots=True)
class Lam(Expr):
    bound: str = field(compare=False)
    annot: Expr
    body: Expr


@dataclass(frozen=True, slots=True)
class Pi(Expr):
    bound: str = field(compare=False)
    domain: Expr
    codomain: Expr


def arrow(domain: Expr, codomain: Expr) -> Expr:
    """Non-dependent function space: sugar for Pi with an unused binder."""
    return Pi("_", domain, codomain)


def app(fun: Expr, *args: Expr) -> Expr:
    for a in args:
        fun = App(fun, a)
    return fun


def spine(e: Expr) -> tuple[Expr, list[Expr]]:
    """Decompose nested applications into head and argument list."""
    args: list[Expr] = []
    while isinstance(e, App):
        args.append(e.arg)
        e = e.fun
    args.reverse()
    return e, args


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class KernelError(Exception):
    """Base class for kernel failures; `code` names the error kind."""

    code = "KernelError"


class IllFormed(KernelError):
    code = "IllFormed"


class UnboundVariable(KernelError):
    code = "UnboundVariable"


class UnknownConstant(KernelError):
    code = "UnknownConstant"


class SortViolation(KernelError):
    code = "SortViolation"


class TypeMismatch(KernelError):
    code = "TypeMismatch"


class Mismatch(TypeMismatch):
    """check() failure carrying both classifiers pretty-printed."""

    code = "Mismatch"

    def __init__(self, inferred: str, expected: str):
        super().__init__(f"inferred {inferred} but expected {expected}")
        self.inferred = inferred
        self.expected = expected


class DuplicateUri(KernelError):
    code = "DuplicateUri"


# ---------------------------------------------------------------------------
# Index manipulation
# ---------------------------------------------------------------------------

def shift(e: Expr, by: int, cutoff: int = 0) -> Expr:
    if isinstance(e, Bound):
        if e.index >= cutoff:
            if e.index + by < cutoff:
                raise IllFormed("negative shift crossed its cutoff")
            return Bound(e.index + by)
        return e
    if isinstance(e, App):
        return App(shift(e.fun, by, cutoff), shift(e.arg, by, cutoff))
    if isinstance(e, Lam):
        return Lam(e.bound, shift(e.annot, by, cutoff), shift(e.body, by, cutoff + 1))
    if isinstance(e, Pi):
        return Pi(e.bound, shift(e.domain, by, cutoff), shift(e.codomain, by, cutoff + 1))
    return e


def instantiate(body: Expr, value: Expr, depth: int = 0) -> Expr:
    """Substitute `value` for Bound(depth) in `body`, closing one binder."""
    if isinstance(body, Bound):
        if body.index == depth:
            return shift(value, depth)
        if body.index > depth:
            return Bound(body.index - 1)
        return body
    if isinstance(body, App):
        return App(instantiate(body.fun, value, depth), instantiate(body.arg, value, depth))
    if isinstance(body, Lam):
        return Lam(body.bound, instantiate(body.annot, value, depth),
                   instantiate(body.body, value, depth + 1))
    if isinstance(body, Pi):
        return Pi(body.bound, instantiate(body.domain, value, depth),
                  instantiate(body.codomain, value, depth + 1))
    return body


def abstract(e: Expr, name: str, depth: int = 0) -> Expr:
    """Turn free Var(name) into Bound(depth): the inverse of opening a binder."""
    if isinstance(e, Var):
        return Bound(depth) if e.name == name else e
    if isinstance(e, Bound):
        return Bound(e.index + 1) if e.index >= depth else e
    if isinstance(e, App):
        return App(abstract(e.fun, name, depth), abstract(e.arg, name, depth))
    if isinstance(e, Lam):
        return Lam(e.bound, abstract(e.annot, name, depth), abstract(e.body, name, depth + 1))
    if isinstance(e, Pi):
        return Pi(e.bound, abstract(e.domain, name, depth), abstract(e.codomain, name, depth + 1))
    return e


def mk_pi(name: str, domain: Expr, body: Expr) -> Expr:
    """Pi binder over the free variable `name` occurring in `body`."""
    return Pi(name, domain, abstract(body, name))


def mk_lam(name: str, annot: Expr, body: Expr) -> Expr:
    return Lam(name, annot, abstract(body, name))


def free_vars(e: Expr) -> set[str]:
    out: set[str] = set()
    stack = [e]
    while stack:
        x = stack.pop()
        if isinstance(x, Var):
            out.add(x.name)
        elif isinstance(x, App):
            stack.append(x.fun)
            stack.append(x.arg)
        elif isinstance(x, Lam):
            stack.append(x.annot)
            stack.append(x.body)
        elif isinstance(x, Pi):
            stack.append(x.domain)
            stack.append(x.codomain)
    return out


def constants(e: Expr) -> set[Uri]:
    """All Const URIs occurring in an expression."""
    out: set[Uri] = set()
    stack = [e]
    while stack:
        x = stack.pop()
        if isinstance(x, Const):
            out.add(x.uri)
        elif isinstance(x, App):
            stack.append(x.fun)
            stack.append(x.arg)
        elif isinstance(x, Lam):
            stack.append(x.annot)
            stack.append(x.body)
        elif isinstance(x, Pi):
            stack.append(x.domain)
            stack.append(x.codomain)
    return out


def uses_bound(e: Expr, index: int) -> bool:
    if isinstance(e, Bound):
        return e.index == index
    if isinstance(e, App):
        return uses_bound(e.fun, index) or uses_bound(e.arg, index)
    if isinstance(e, Lam):
        return uses_bound(e.annot, index) or uses_bound(e.body, index + 1)
    if isinstance(e, Pi):
        return uses_bound(e.domain, index) or uses_bound(e.codomain, index + 1)
    return False


def _max_loose(e: Expr, depth: int = 0) -> int:
    """Largest loose Bound index relative to `depth` binders, or -1."""
    if isinstance(e, Bound):
        return e.index - depth
    if isinstance(e, App):
        return max(_max_loose(e.fun, depth), _max_loose(e.arg, depth))
    if isinstance(e, Lam):
        return max(_max_loose(e.annot, depth), _max_loose(e.body, depth + 1))
    if isinstance(e, Pi):
        return max(_max_loose(e.domain, depth), _max_loose(e.codomain, depth + 1))
    return -1


def is_closed(e: Expr) -> bool:
    return _max_loose(e) < 0


# ---------------------------------------------------------------------------
# Declarations, theories, morphisms
# ---------------------------------------------------------------------------

Metadata = dict[str, object]


@dataclass
class Decl:
    """One declared constant: classifier plus optional definiens.

    `unchecked` marks definientia that stand in for proofs verified
    elsewhere; the kernel validates their classifier and dependency
    metadata but never the definiens itself.  Metadata values are strings
    except for the key "deps", which holds a tuple of rendered URIs.
    """

    uri: Uri
    classifier: Expr
    definiens: Optional[Expr] = None
    unchecked: bool = False
    metadata: Metadata = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return self.uri.kind

    def deps(self) -> Optional[tuple[str, ...]]:
        d = self.metadata.get("deps")
        return d if isinstance(d, tuple) else None


@dataclass
class Theory:
    uri: Uri
    meta: Uri
    includes: tuple[Uri, ...] = ()
    decls: list[Decl] = field(default_factory=list)


@dataclass
class Morphism:
    """A theory morphism: assignments for the domain's primitive constants."""

    uri: Uri
    dom: Uri
    cod: Uri
    assignments: list[tuple[Uri, Expr]] = field(default_factory=list)


@dataclass(frozen=True)
class Context:
    """Ordered typing context for open expressions."""

    entries: tuple[tuple[str, Expr], ...] = ()

    def extend(self, name: str, classifier: Expr) -> "Context":
        return Context(self.entries + ((name, classifier),))

    def lookup(self, name: str) -> Optional[Expr]:
        for n, c in reversed(self.entries):
            if n == name:
                return c
        return None

    def names(self) -> set[str]:
        return {n for n, _ in self.entries}

    def __iter__(self) -> Iterator[tuple[str, Expr]]:
        return iter(self.entries)


EMPTY_CONTEXT = Context()


class Signature:
    """Lookup table of visible declarations, keyed by rendered URI."""

    def __init__(self) -> None:
        self._decls: dict[str, Decl] = {}

    def declare(self, decl: Decl) -> None:
        key = decl.uri.render()
        if key in self._decls:
            raise DuplicateUri(key)
        self._decls[key] = decl

    def lookup(self, uri: Uri) -> Optional[Decl]:
        return self._decls.get(uri.render())

    def __contains__(self, uri: Uri) -> bool:
        return uri.render() in self._decls

    def __len__(self) -> int:
        return len(self._decls)

    def decls(self) -> Iterable[Decl]:
        return self._decls.values()


class _View:
    """A signature restricted to the theories visible at a use site."""

    def __init__(self, sig: Signature, owners: dict[str, str], visible: set[str]):
        self._sig = sig
        self._owners = owners
        self._visible = visible

    def lookup(self, uri: Uri) -> Optional[Decl]:
        decl = self._sig.lookup(uri)
        if decl is None:
            return None
        owner = self._owners.get(uri.render())
        if owner is not None and owner not in self._visible:
            return None
        return decl


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

def normalize(e: Expr) -> Expr:
    """Beta-normal, eta-contracted form; constants stay folded.

    Input must not contain loose bound indices (IllFormed otherwise).
    Terminating on well-typed input by strong normalization of the PTS.
    """
    if _max_loose(e) >= 0:
        raise IllFormed("expression has loose bound variables")
    return _norm(e)


def _norm(e: Expr) -> Expr:
    if isinstance(e, App):
        f = _norm(e.fun)
        a = _norm(e.arg)
        if isinstance(f, Lam):
            return _norm(instantiate(f.body, a))
        return App(f, a)
    if isinstance(e, Lam):
        annot = _norm(e.annot)
        body = _norm(e.body)
        # eta: lam x. f x  ->  f  when x does not occur in f
        if isinstance(body, App) and body.arg == Bound(0) and not uses_bound(body.fun, 0):
            return shift(body.fun, -1)
        return Lam(e.bound, annot, body)
    if isinstance(e, Pi):
        return Pi(e.bound, _norm(e.domain), _norm(e.codomain))
    return e


def _unfold(sig, e: Expr, *, _depth: int = 0) -> Expr:
    """Replace every defined (non-unchecked) constant by its definiens."""
    if _depth > 10_000:
        raise IllFormed("definition unfolding did not terminate")
    if isinstance(e, Const):
        decl = sig.lookup(e.uri)
        if decl is not None and decl.definiens is not None and not decl.unchecked:
            return _unfold(sig, decl.definiens, _depth=_depth + 1)
        return e
    if isinstance(e, App):
        return App(_unfold(sig, e.fun, _depth=_depth), _unfold(sig, e.arg, _depth=_depth))
    if isinstance(e, Lam):
        return Lam(e.bound, _unfold(sig, e.annot, _depth=_depth),
                   _unfold(sig, e.body, _depth=_depth))
    if isinstance(e, Pi):
        return Pi(e.bound, _unfold(sig, e.domain, _depth=_depth),
                  _unfold(sig, e.codomain, _depth=_depth))
    return e


def equivalent(sig, a: Expr, b: Expr) -> bool:
    """Definitional equality: beta-eta, unfolding definientia only when the
    folded normal forms differ."""
    na = _norm(a)
    nb = _norm(b)
    if na == nb:
        return True
    return _norm(_unfold(sig, na)) == _norm(_unfold(sig, nb))


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

def _whnf_sorted(sig, e: Expr) -> Expr:
    """Normalize, unfolding definitions when the head hides a Sort or Pi."""
    n = _norm(e)
    if isinstance(n, (Sort, Pi)):
        return n
    return _norm(_unfold(sig, n))


def _fresh(name: str, taken: set[str]) -> str:
    while name in taken:
        name += "'"
    return name


def infer(sig, ctx: Context, e: Expr) -> Expr:
    """Classifier of `e` in `ctx`, unique up to definitional equality.

    Deterministic: the same input yields an alpha-identical classifier.
    """
    if isinstance(e, Sort):
        if e == SORT_TYPE:
            return SORT_KIND
        raise SortViolation("the kind sort has no classifier")
    if isinstance(e, Var):
        c = ctx.lookup(e.name)
        if c is None:
            raise UnboundVariable(e.name)
        return c
    if isinstance(e, Bound):
        raise IllFormed(f"loose bound variable #{e.index}")
    if isinstance(e, Const):
        decl = sig.lookup(e.uri)
        if decl is None:
            raise UnknownConstant(e.uri.render())
        return decl.classifier
    if isinstance(e, App):
        tf = _whnf_sorted(sig, infer(sig, ctx, e.fun))
        if not isinstance(tf, Pi):
            raise TypeMismatch(
                f"applied non-function of classifier {pretty(tf)}")
        ta = infer(sig, ctx, e.arg)
        if not equivalent(sig, ta, tf.domain):
            raise TypeMismatch(
                f"argument has classifier {pretty(ta)} "
                f"but the function expects {pretty(tf.domain)}")
        return instantiate(tf.codomain, e.arg)
    if isinstance(e, Lam):
        _sort_of(sig, ctx, e.annot)
        fresh = _fresh(e.bound, ctx.names() | free_vars(e.body) | free_vars(e.annot))
        body_cl = infer(sig, ctx.extend(fresh, e.annot),
                        instantiate(e.body, Var(fresh)))
        return Pi(e.bound, e.annot, abstract(body_cl, fresh))
    if isinstance(e, Pi):
        _sort_of(sig, ctx, e.domain)
        fresh = _fresh(e.bound, ctx.names() | free_vars(e.codomain) | free_vars(e.domain))
        cod_sort = _sort_of(sig, ctx.extend(fresh, e.domain),
                            instantiate(e.codomain, Var(fresh)))
        # all four Pi-formation rules are allowed: the result lives in the
        # sort of the codomain
        return cod_sort
    raise IllFormed(f"unknown expression node {type(e).__name__}")


def _sort_of(sig, ctx: Context, e: Expr) -> Sort:
    if e == SORT_TYPE:
        return SORT_KIND
    cl = _whnf_sorted(sig, infer(sig, ctx, e))
    if not isinstance(cl, Sort):
        raise SortViolation(
            f"{pretty(e)} classifies as {pretty(cl)}, not as a sort")
    return cl


def check(sig, ctx: Context, e: Expr, expected: Expr) -> None:
    """Succeeds iff infer(ctx, e) is definitionally equal to `expected`."""
    actual = infer(sig, ctx, e)
    if not equivalent(sig, actual, expected):
        raise Mismatch(pretty(actual), pretty(expected))


# ---------------------------------------------------------------------------
# Pretty printing
# ---------------------------------------------------------------------------

def pretty(e: Expr) -> str:
    """Canonical rendering. Binder comments are freshened by appending
    apostrophes until they clash with no visible name."""
    return _pp(e, free_vars(e), [])


def _pp(e: Expr, taken: set[str], binders: list[str]) -> str:
    if isinstance(e, Sort):
        return e.name
    if isinstance(e, Const):
        return e.uri.name
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Bound):
        if e.index < len(binders):
            return binders[-1 - e.index]
        return f"#{e.index}"
    if isinstance(e, App):
        head, args = spine(e)
        parts = [_pp_atom(head, taken, binders)]
        parts += [_pp_atom(a, taken, binders) for a in args]
        return " ".join(parts)
    if isinstance(e, Lam):
        name = _fresh(e.bound, taken | set(binders))
        return (f"λ{name}:{_pp(e.annot, taken, binders)}. "
                f"{_pp(e.body, taken, binders + [name])}")
    if isinstance(e, Pi):
        if uses_bound(e.codomain, 0):
            name = _fresh(e.bound, taken | set(binders))
            return (f"Π{name}:{_pp(e.domain, taken, binders)}. "
                    f"{_pp(e.codomain, taken, binders + [name])}")
        left = _pp(e.domain, taken, binders)
        if isinstance(e.domain, (Pi, Lam)):
            left = f"({left})"
        # non-dependent: drop the dead binder before rendering the codomain
        right = _pp(shift(e.codomain, -1), taken, binders)
        return f"{left} → {right}"
    return "?"


def _pp_atom(e: Expr, taken: set[str], binders: list[str]) -> str:
    s = _pp(e, taken, binders)
    if isinstance(e, (App, Lam, Pi)):
        return f"({s})"
    return s


# ---------------------------------------------------------------------------
# Theory graph checking
# ---------------------------------------------------------------------------

@dataclass
class CheckError:
    uri: str
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code} at {self.uri}: {self.message}"


@dataclass
class TheoryReport:
    uri: str
    decl_count: int = 0
    error_count: int = 0


@dataclass
class Report:
    theories: list[TheoryReport] = field(default_factory=list)
    errors: list[CheckError] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def errors_at(self, uri: str) -> list[CheckError]:
        return [e for e in self.errors if e.uri == uri]

    def summary(self) -> str:
        return (f"{len(self.theories)} theories, "
                f"{sum(t.decl_count for t in self.theories)} declarations, "
                f"{len(self.errors)} errors")


def _topo_theories(theories: list[Theory], report: Report) -> list[Theory]:
    by_uri = {t.uri.render(): t for t in theories}
    order: list[Theory] = []
    state: dict[str, int] = {}  # 0 visiting, 1 done

    def visit(t: Theory, stack: list[str]) -> None:
        key = t.uri.render()
        st = state.get(key)
        if st == 1:
            return
        if st == 0:
            cycle = stack[stack.index(key):] + [key]
            report.errors.append(CheckError(key, "CyclicIncludes",
                                            " -> ".join(cycle)))
            return
        state[key] = 0
        stack.append(key)
        deps = list(t.includes)
        if t.meta.render() != key:
            deps.append(t.meta)
        for inc in deps:
            ikey = inc.render()
            dep = by_uri.get(ikey)
            if dep is None:
                report.errors.append(CheckError(
                    key, "UnresolvedInclude", f"include {ikey} not in graph"))
                continue
            visit(dep, stack)
        stack.pop()
        state[key] = 1
        order.append(t)

    for t in sorted(theories, key=lambda t: t.uri.render()):
        visit(t, [])
    return order


def _visible_set(theory: Theory, by_uri: dict[str, Theory]) -> set[str]:
    seen: set[str] = set()
    work = [theory.uri.render()]
    while work:
        key = work.pop()
        if key in seen:
            continue
        seen.add(key)
        t = by_uri.get(key)
        if t is None:
            continue
        for inc in t.includes:
            work.append(inc.render())
        work.append(t.meta.render())
    return seen


def check_theory_graph(graph: list[Union[Theory, Morphism]]) -> Report:
    """Re-check every declaration of every theory, in dependency order.

    Unchecked definientia are skipped but their dependency metadata must
    name URIs visible at the declaration site.  All errors are collected;
    nothing raises.
    """
    report = Report()
    theories = [g for g in graph if isinstance(g, Theory)]
    morphisms = [g for g in graph if isinstance(g, Morphism)]

    by_uri: dict[str, Theory] = {}
    for t in theories:
        key = t.uri.render()
        if key in by_uri:
            report.errors.append(CheckError(key, "DuplicateUri", "duplicate theory"))
            continue
        by_uri[key] = t

    sig = Signature()
    owners: dict[str, str] = {}
    checked: set[str] = set()

    for theory in _topo_theories(list(by_uri.values()), report):
        tkey = theory.uri.render()
        treport = TheoryReport(uri=tkey, decl_count=len(theory.decls))
        visible = _visible_set(theory, by_uri)
        view = _View(sig, owners, visible)
        for decl in theory.decls:
            errs = _check_decl(view, decl)
            treport.error_count += len(errs)
            report.errors.extend(errs)
            key = decl.uri.render()
            if key in owners:
                report.errors.append(CheckError(key, "DuplicateUri", "duplicate declaration"))
                treport.error_count += 1
                continue
            sig.declare(decl)
            owners[key] = tkey
        report.theories.append(treport)
        checked.add(tkey)

    for m in morphisms:
        report.errors.extend(_check_morphism(m, by_uri, sig, owners, checked))
    return report


def _check_decl(view, decl: Decl) -> list[CheckError]:
    errs: list[CheckError] = []
    key = decl.uri.render()
    try:
        cl_sort = infer(view, EMPTY_CONTEXT, decl.classifier)
        cl_sort = _whnf_sorted(view, cl_sort)
        if not isinstance(cl_sort, Sort):
            raise SortViolation("classifier is not a type or kind")
        if decl.kind == "type":
            if cl_sort != SORT_KIND:
                raise SortViolation("type operators must have kind-level classifiers")
        elif cl_sort != SORT_TYPE:
            raise SortViolation(
                f"{decl.kind} declarations need a type-level classifier, "
                f"got one of sort {cl_sort.name}")
    except KernelError as e:
        errs.append(CheckError(key, e.code, str(e)))
        return errs

    if decl.definiens is not None:
        if decl.unchecked:
            deps = decl.deps()
            if deps is None:
                errs.append(CheckError(key, "MissingDeps",
                                       "unchecked definiens without dependency metadata"))
            else:
                for dep in deps:
                    try:
                        dep_uri = Uri.parse(dep)
                    except Exception:
                        errs.append(CheckError(key, "DanglingDependency",
                                               f"unparsable dependency {dep!r}"))
                        continue
                    if view.lookup(dep_uri) is None:
                        errs.append(CheckError(key, "DanglingDependency",
                                               f"dependency {dep} not visible"))
        else:
            try:
                check(view, EMPTY_CONTEXT, decl.definiens, decl.classifier)
            except KernelError as e:
                errs.append(CheckError(key, e.code, str(e)))
    return errs


def _check_morphism(m: Morphism, by_uri: dict[str, Theory], sig: Signature,
                    owners: dict[str, str], checked: set[str]) -> list[CheckError]:
    errs: list[CheckError] = []
    mkey = m.uri.render()
    dom = by_uri.get(m.dom.render())
    cod = by_uri.get(m.cod.render())
    if dom is None or m.dom.render() not in checked:
        errs.append(CheckError(mkey, "UnresolvedReference",
                               f"domain theory {m.dom} not checked"))
        return errs
    if cod is None or m.cod.render() not in checked:
        errs.append(CheckError(mkey, "UnresolvedReference",
                               f"codomain theory {m.cod} not checked"))
        return errs

    assignment = {u.render(): e for u, e in m.assignments}
    if len(assignment) != len(m.assignments):
        errs.append(CheckError(mkey, "DuplicateUri",
                               "morphism assigns the same constant twice"))
    dom_decls = {d.uri.render(): d for d in dom.decls}
    for key in assignment:
        if key not in dom_decls:
            errs.append(CheckError(mkey, "UnresolvedReference",
                                   f"assignment target {key} not in domain theory"))

    cod_visible = _visible_set(cod, by_uri)
    view = _View(sig, owners, cod_visible)

    translated: dict[str, Expr] = {}

    def translate(e: Expr) -> Expr:
        if isinstance(e, Const):
            key = e.uri.render()
            if key in assignment:
                return assignment[key]
            d = dom_decls.get(key)
            if d is not None:
                if d.definiens is None or d.unchecked:
                    raise KernelError(f"no assignment for domain constant {key}")
                if key not in translated:
                    translated[key] = translate(d.definiens)
                return translated[key]
            return e
        if isinstance(e, App):
            return App(translate(e.fun), translate(e.arg))
        if isinstance(e, Lam):
            return Lam(e.bound, translate(e.annot), translate(e.body))
        if isinstance(e, Pi):
            return Pi(e.bound, translate(e.domain), translate(e.codomain))
        return e

    for d in dom.decls:
        if d.definiens is not None:
            continue
        key = d.uri.render()
        image = assignment.get(key)
        if image is None:
            errs.append(CheckError(mkey, "MissingAssignment",
                                   f"no assignment for {key}"))
            continue
        try:
            expected = translate(d.classifier)
            check(view, EMPTY_CONTEXT, image, expected)
        except KernelError as e:
            errs.append(CheckError(mkey, e.code, f"assignment for {key}: {e}"))
    return errs
