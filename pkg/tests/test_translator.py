import pytest

from plfexport import content as tci
from plfexport.kernel import (
    App, Const, EMPTY_CONTEXT, Lam, Pi, SORT_TYPE, Signature, Var, app, arrow,
    check, constants, equivalent, infer, mk_lam, mk_pi, pretty, spine,
)
from plfexport.translator import (
    ArityMismatch, DanglingDep, Translator, UnboundTypeVariable,
    UnknownConstant, UnknownTypeConstructor, _Env, bootstrap_pure,
)
from plfexport.uris import make_uri


# -- bootstrap --------------------------------------------------------------

def test_bootstrap_contains_exactly_three():
    theory = bootstrap_pure()
    assert [d.uri.name for d in theory.decls] == ["prop", "ded", "oracle"]


def test_bootstrap_classifiers():
    theory = bootstrap_pure()
    by_name = {d.uri.name: d for d in theory.decls}
    assert by_name["prop"].classifier == SORT_TYPE
    assert pretty(by_name["ded"].classifier) == "prop → type"
    assert pretty(by_name["oracle"].classifier) == "Πphi:prop. ded phi"


def test_bootstrap_oracle_flagged_internal():
    theory = bootstrap_pure()
    oracle = theory.decls[-1]
    assert oracle.metadata.get("internal") == "oracle"


def test_pure_translation_on_top(corpus):
    eq = corpus.decl("Pure.eq", "const")
    assert pretty(eq.classifier) == "Πa:type. a → a → prop"
    alls = corpus.decl("Pure.all", "const")
    assert pretty(alls.classifier) == "Πa:type. (a → prop) → prop"
    imp = corpus.decl("Pure.imp", "const")
    assert pretty(imp.classifier) == "prop → prop → prop"


# -- type import ------------------------------------------------------------

@pytest.fixture()
def loaded():
    """A translator with the whole fixture corpus already registered."""
    from plfexport.content import parse_tci, topo_order
    from conftest import fixture_path, FIXTURE_NAMES
    tr = Translator(include_proofs=True)
    for tc in topo_order([parse_tci(fixture_path(n)) for n in FIXTURE_NAMES]):
        tr.translate_theory(tc)
    return tr


def _tyenv(tr, names=("'a",)):
    env = _Env()
    for n in names:
        env.tyvars[(n, None)] = Var(n.lstrip("'"))
        env.pool.add(n.lstrip("'"))
    return env


def test_import_type_arrow(loaded):
    env = _tyenv(loaded)
    t = tci.TCon("fun", (tci.TFree("'a"), tci.TFree("'a")))
    assert loaded.import_type(t, env) == arrow(Var("a"), Var("a"))


def test_import_type_nullary_constructor(loaded):
    env = _tyenv(loaded)
    e = loaded.import_type(tci.TCon("HOL.bool"), env)
    assert isinstance(e, Const)
    assert e.uri.render().endswith("?HOL.HOL?HOL.bool|type")


def test_import_type_errors(loaded):
    env = _tyenv(loaded)
    with pytest.raises(UnknownTypeConstructor):
        loaded.import_type(tci.TCon("No.Such"), env)
    with pytest.raises(UnboundTypeVariable):
        loaded.import_type(tci.TFree("'zz"), env)
    with pytest.raises(ArityMismatch):
        loaded.import_type(tci.TCon("Order.list"), env)


# -- term import ------------------------------------------------------------

def test_polymorphic_constant_occurrence(loaded):
    # a constant occurs applied to its type arguments
    env = _tyenv(loaded)
    term = tci.TConst("Pure.all", (tci.TFree("'a"),))
    e = loaded.import_term(term, env)
    head, args = spine(e)
    assert isinstance(head, Const) and head.uri.name == "Pure.all"
    assert args == [Var("a")]


def test_abs_identity(loaded):
    env = _tyenv(loaded)
    term = tci.TAbs("x", tci.TFree("'a"), tci.TBound(0))
    e = loaded.import_term(term, env)
    assert e == mk_lam("x", Var("a"), Var("x"))
    assert e.bound == "x"


def test_abs_comment_renamed_away_from_free_vars(loaded):
    env = _tyenv(loaded)
    env.pool.add("x")
    env.terms["x"] = Var("x")
    term = tci.TAbs("x", tci.TFree("'a"),
                    tci.TApp(tci.TFreeVar("x", tci.TFree("'a")),
                             tci.TBound(0)))
    e = loaded.import_term(term, env)
    assert e.bound == "x'"
    assert e.body == App(Var("x"), Var("x'")) or e.body == App(
        Var("x"), __import__("plfexport.kernel", fromlist=["Bound"]).Bound(0))


def test_typarg_count_mismatch(loaded):
    env = _tyenv(loaded)
    with pytest.raises(ArityMismatch):
        loaded.import_term(tci.TConst("Pure.eq", ()), env)
    with pytest.raises(UnknownConstant):
        loaded.import_term(tci.TConst("No.Such", ()), env)


# -- statement import -------------------------------------------------------

def _ded_body(classifier):
    """Strip leading Pi binders (opening them with their comment names);
    return the list of arrow domains and the final judgment body."""
    from plfexport.kernel import instantiate, shift, uses_bound
    while isinstance(classifier, Pi) and uses_bound(classifier.codomain, 0):
        classifier = instantiate(classifier.codomain, Var(classifier.bound))
    domains = []
    while isinstance(classifier, Pi) and not uses_bound(classifier.codomain, 0):
        domains.append(classifier.domain)
        classifier = shift(classifier.codomain, -1)
    return domains, classifier


def test_import_prop_no_typargs(loaded):
    prop = tci.TApp(tci.TConst("HOL.Trueprop"), tci.TConst("HOL.True"))
    e = loaded.import_prop((), prop)
    assert pretty(e) == "ded (HOL.Trueprop HOL.True)"


def test_import_prop_constraint(loaded):
    # one (type variable, class) pair: one judgment-typed precondition
    prop = tci.TApp(tci.TConst("HOL.Trueprop"),
                    tci.TApp(tci.TApp(
                        tci.TConst("Order.ord_class.le", (tci.TFree("'a"),)),
                        tci.TSchematic("x", 0, tci.TFree("'a"))),
                        tci.TSchematic("x", 0, tci.TFree("'a"))))
    e = loaded.import_prop((("'a", None, ("Order.order",)),), prop)
    assert pretty(e) == ("Πa:type. Πx0:a. ded (Order.order a) → "
                         "ded (HOL.Trueprop (Order.ord_class.le a x0 x0))")


def test_constraint_count_matches_pairs(loaded):
    prop = tci.TApp(tci.TConst("HOL.Trueprop"), tci.TConst("HOL.True"))
    typargs = (("'a", None, ("Order.order", "Order.linorder")),
               ("'b", None, ("Order.wellorder",)))
    e = loaded.import_prop(typargs, prop)
    domains, _ = _ded_body(e)
    assert len(domains) == 3
    rendered = [pretty(d) for d in domains]
    assert rendered == ["ded (Order.linorder a)", "ded (Order.order a)",
                        "ded (Order.wellorder b)"]


def test_schematic_renaming_clash_and_determinism(loaded):
    nat = tci.TCon("HOL.bool")
    prop = tci.TApp(
        tci.TApp(tci.TConst("Pure.eq", (nat,)),
                 tci.TSchematic("x", 10, nat)),
        tci.TFreeVar("x10", nat))
    e1 = loaded.import_prop((), prop)
    e2 = loaded.import_prop((), prop)
    assert e1 == e2
    # free x10 wins the name; the schematic gets a fresh one
    assert pretty(e1) == ("Πx10':HOL.bool. Πx10:HOL.bool. "
                          "ded (Pure.eq HOL.bool x10' x10)")


def test_schematic_closure_is_index_independent(loaded):
    nat = tci.TCon("HOL.bool")

    def prop(i):
        return tci.TApp(
            tci.TApp(tci.TConst("Pure.eq", (nat,)),
                     tci.TSchematic("x", i, nat)),
            tci.TSchematic("x", i, nat))

    e1 = loaded.import_prop((), prop(0))
    e2 = loaded.import_prop((), prop(23))
    # binder names differ, but the statements are alpha-identical
    assert e1 == e2


def test_entailment_chain_becomes_arrows(loaded):
    tp = lambda t: tci.TApp(tci.TConst("HOL.Trueprop"), t)  # noqa: E731
    imp = lambda p, q: tci.TApp(  # noqa: E731
        tci.TApp(tci.TConst("Pure.imp"), p), q)
    prop = imp(tp(tci.TConst("HOL.True")),
               imp(tp(tci.TConst("HOL.True")), tp(tci.TConst("HOL.True"))))
    e = loaded.import_prop((), prop)
    domains, body = _ded_body(e)
    assert len(domains) == 2
    assert pretty(body) == "ded (HOL.Trueprop HOL.True)"


# -- declaration translators --------------------------------------------------

def test_type_decl_arities(loaded):
    ent = tci.Entity("type", "X.t0", "t0", "X.thy", 1, 0, 1)
    d0 = loaded.translate_type_decl(tci.TypeDecl(ent, arity=0), "X.X")
    assert d0.classifier == SORT_TYPE
    ent2 = tci.Entity("type", "X.t2", "t2", "X.thy", 1, 0, 1)
    d2 = loaded.translate_type_decl(tci.TypeDecl(ent2, arity=2), "X.X")
    assert pretty(d2.classifier) == "type → type → type"


def test_type_abbreviation_definiens_checks(loaded):
    ent = tci.Entity("type", "X.blist", "blist", "X.thy", 2, 10, 2)
    abbrev = tci.TCon("Order.list", (tci.TFree("'a"),))
    decl = loaded.translate_type_decl(tci.TypeDecl(ent, arity=1, abbrev=abbrev),
                                      "X.X")
    assert decl.definiens is not None
    sig = Signature()
    for d in loaded.state.decls.values():
        if d.uri.render() not in ("",) and sig.lookup(d.uri) is None:
            sig.declare(d)
    check(sig, EMPTY_CONTEXT, decl.definiens, decl.classifier)


def test_overloaded_const_links_axioms(corpus):
    dflt = corpus.decl("Typedef.dflt", "const")
    assert dflt.definiens is None
    axioms = dflt.metadata["defining-axioms"].split()
    assert len(axioms) == 2
    for a in axioms:
        assert a.endswith("|axiom")
    bool_def = corpus.decl("Typedef.dflt_bool_def", "axiom")
    assert bool_def.metadata["defines-const"].endswith("?Typedef.dflt|const")


def test_typedef_axiom_mentions_morphisms(corpus):
    axiom = corpus.decl("Typedef.u1_def", "axiom")
    names = {u.name for u in constants(axiom.classifier)}
    assert {"Typedef.Rep_u1", "Typedef.Abs_u1"} <= names
    u1 = corpus.decl("Typedef.u1", "type")
    assert u1.metadata["typedef-rep-morphism"].endswith("?Typedef.Rep_u1|const")
    assert u1.metadata["typedef-abs-morphism"].endswith("?Typedef.Abs_u1|const")
    assert u1.metadata["typedef-axiom"].endswith("?Typedef.u1_def|axiom")


def test_thm_dummy_definiens_shape(corpus):
    thm = corpus.decl("HOL.true_copy", "thm")
    assert thm.unchecked
    head, args = spine(thm.definiens)
    assert isinstance(head, Const) and head.uri.name == "oracle"
    assert args == [thm.classifier]
    assert thm.metadata["deps"] == (
        make_uri("axiom", "HOL.HOL", "HOL.TrueI").render(),)


def test_thm_empty_deps_present(corpus):
    thm = corpus.decl("HOL.true_nodeps", "thm")
    assert thm.unchecked
    assert thm.metadata["deps"] == ()


def test_dangling_dep_raises(loaded):
    ent = tci.Entity("thm", "X.bad", "bad", "X.thy", 9, 0, 9)
    rec = tci.ThmDecl(ent, (), tci.TApp(tci.TConst("HOL.Trueprop"),
                                        tci.TConst("HOL.True")),
                      deps=("Nothing.Here",))
    with pytest.raises(DanglingDep):
        loaded.translate_thm_decl(rec, "X.X")


# -- invariants over the corpus -----------------------------------------------

def test_naming_injectivity(corpus):
    rendered = [d.uri.render() for d in corpus.translator.state.decls.values()]
    assert len(rendered) == len(set(rendered))
    components = [(d.uri.kind, d.uri.long_theory, d.uri.name)
                  for d in corpus.translator.state.decls.values()]
    assert len(components) == len(set(components))


def test_kernel_closure(checked_report):
    assert checked_report.ok, checked_report.errors


def test_uses_accumulator_matches_scan(corpus):
    state = corpus.translator.state
    for key, decl in state.decls.items():
        expected = constants(decl.classifier)
        if decl.definiens is not None:
            expected |= constants(decl.definiens)
        assert state.uses.get(key, set()) == expected, key


def test_type_argument_adequacy(corpus, ordered_contents):
    """Instantiating a constant's declared scheme with its type arguments
    gives the kernel-inferred type of the translated occurrence."""
    tr = corpus.translator
    sig = Signature()
    for d in tr.state.decls.values():
        sig.declare(d)
    bool_t = tci.TCon("HOL.bool")

    def tci_subst(t, mapping):
        if isinstance(t, tci.TFree):
            return mapping.get(t.name, bool_t)
        if isinstance(t, tci.TVar):
            return mapping.get(t.name, bool_t)
        return tci.TCon(t.name, tuple(tci_subst(a, mapping) for a in t.args))

    checked = 0
    for tc in ordered_contents:
        for a in list(tc.axioms) + list(tc.thms):
            for node in tci._scan_term(a.prop):
                if not isinstance(node, tci.TConst) or not node.typargs:
                    continue
                entry = tr.state.entry("const", node.name)
                const_rec = next(
                    (c for t2 in ordered_contents for c in t2.consts
                     if c.entity.full_name == node.name), None)
                if entry is None or const_rec is None:
                    continue
                env = _Env()
                # ground every type variable at bool
                grounded = tuple(tci_subst(t, {}) for t in node.typargs)
                occurrence = app(Const(entry.uri),
                                 *(tr.import_type(t, env) for t in grounded))
                inferred = infer(sig, EMPTY_CONTEXT, occurrence)
                scheme_inst = tci_subst(
                    const_rec.typ,
                    dict(zip(const_rec.typargs, grounded)))
                expected = tr.import_type(scheme_inst, env)
                assert equivalent(sig, inferred, expected), node.name
                checked += 1
    assert checked >= 10
