import copy

import pytest

from plfexport import content as tci
from plfexport.content import TciEnv, validate_tci
from plfexport.kernel import (
    App, Const, Morphism, SORT_TYPE, Var, app, arrow, check_theory_graph,
    mk_lam, mk_pi, pretty,
)
from plfexport.translator import MissingElaboratedCounterpart, Translator
from plfexport.uris import make_uri

from _synth import gen_locale_theory


def _sg_translation(corpus):
    res = corpus.translations[("Locales", "Semigroup")]
    sg = next(l for l in res.locales if l.theory.uri.name == "Semigroup.sg")
    return res, sg


def _sg_uris(base="https://isabelle.in.tum.de"):
    long = "Locales.Semigroup"
    local = f"{long}.Semigroup.sg"
    return {
        "a": make_uri("type", local, "a", base),
        "op": make_uri("const", local, "op", base),
        "assoc": make_uri("axiom", local, "assoc", base),
        "sq": make_uri("const", local, "sq", base),
        "sqsq": make_uri("thm", local, "sqsq", base),
        "eq": make_uri("const", "Pure", "Pure.eq", base),
        "all": make_uri("const", "Pure", "Pure.all", base),
        "g_sg": make_uri("const", long, "Semigroup.sg", base),
        "g_sq": make_uri("const", long, "Semigroup.sg.sq", base),
        "prop": make_uri("type", "PLF", "prop", base),
        "ded": make_uri("type", "PLF", "ded", base),
    }


def test_reconstructed_locale_has_the_five_declarations(corpus):
    _res, sg = _sg_translation(corpus)
    names = [(d.uri.name, d.uri.kind) for d in sg.theory.decls]
    assert names == [("a", "type"), ("op", "const"), ("assoc", "axiom"),
                     ("sq", "const"), ("sqsq", "thm")]


def test_locale_declaration_shapes(corpus):
    _res, sg = _sg_translation(corpus)
    u = _sg_uris()
    a, op = Const(u["a"]), Const(u["op"])
    eq, all_, ded = Const(u["eq"]), Const(u["all"]), Const(u["ded"])
    by = {d.uri.name: d for d in sg.theory.decls}

    assert by["a"].classifier == SORT_TYPE
    assert by["op"].classifier == arrow(a, arrow(a, a))

    def star(x, y):
        return app(op, x, y)

    def fa(body):
        return app(all_, a, body)

    x, y, z = Var("x"), Var("y"), Var("z")
    assoc_stmt = fa(mk_lam("x", a, fa(mk_lam("y", a, fa(mk_lam(
        "z", a, app(eq, a, star(star(x, y), z), star(x, star(y, z)))))))))
    assert by["assoc"].classifier == App(ded, assoc_stmt)

    assert by["sq"].classifier == arrow(a, a)
    assert by["sq"].definiens == mk_lam("x", a, star(x, x))

    sq = Const(u["sq"])
    sqsq_stmt = fa(mk_lam("x", a, app(
        eq, a, App(sq, App(sq, x)), star(star(x, App(sq, x)), x))))
    assert by["sqsq"].classifier == App(ded, sqsq_stmt)
    assert by["sqsq"].unchecked
    assert by["sqsq"].metadata["counterpart"].endswith("Semigroup.sg.sqsq|thm")


def test_fix_type_uses_locale_fixed_type(corpus):
    _res, sg = _sg_translation(corpus)
    sq = next(d for d in sg.theory.decls if d.uri.name == "sq")
    assert pretty(sq.classifier) == "a → a"


def test_locale_without_assumes_or_defines(corpus):
    res = corpus.translations[("Locales", "Semigroup")]
    carrier = next(l for l in res.locales
                   if l.theory.uri.name == "Semigroup.carrier")
    names = [(d.uri.name, d.uri.kind) for d in carrier.theory.decls]
    assert names == [("a", "type"), ("pt", "const")]


def test_locale_theory_includes_enclosing(corpus):
    res, sg = _sg_translation(corpus)
    assert sg.theory.includes == (res.theory.uri,)
    assert sg.theory.meta == corpus.translator.bootstrap.uri


# -- morphisms ----------------------------------------------------------------

def test_sublocale_morphism_assignments(corpus):
    res, _sg = _sg_translation(corpus)
    assert len(res.morphisms) == 1
    m = res.morphisms[0]
    assert m.dom.name == "Semigroup.dsg"
    assert m.cod.name == "Semigroup.sg"
    u = _sg_uris()
    assigned = {target.name: expr for target, expr in m.assignments}
    assert assigned["a"] == Const(u["a"])
    assert assigned["dop"] == Const(u["op"])
    assert assigned["dassoc"] == Const(u["assoc"])


def test_sublocale_morphism_kernel_checks(corpus, checked_report):
    assert checked_report.ok
    # and breaking one assignment is detected
    graph = copy.deepcopy(corpus.graph)
    m = next(g for g in graph if isinstance(g, Morphism))
    u = _sg_uris()
    m.assignments = [(t, Const(u["assoc"]) if t.name == "dop" else e)
                     for t, e in m.assignments]
    report = check_theory_graph(graph)
    assert any(e.uri == m.uri.render() for e in report.errors)


# -- consistency ----------------------------------------------------------------

def test_locale_consistency_on_fixture(corpus):
    tr = corpus.translator
    sem = corpus.contents[("Locales", "Semigroup")]
    res, sg = _sg_translation(corpus)
    for lr, loc in zip(sem.locales, res.locales):
        assert tr.check_locale_consistency(lr, loc.theory) == []


def test_locale_consistency_detects_corruption(corpus):
    tr = corpus.translator
    sem = corpus.contents[("Locales", "Semigroup")]
    res, sg = _sg_translation(corpus)
    bad = copy.deepcopy(sg.theory)
    for d in bad.decls:
        if d.uri.name == "sqsq":
            d.classifier = arrow(d.classifier, d.classifier)
    diags = tr.check_locale_consistency(sem.locales[0], bad)
    assert len(diags) == 1
    assert diags[0].code == "LocaleMismatch"
    assert "sqsq" in diags[0].where


def test_missing_elaborated_counterpart(corpus):
    sem = corpus.contents[("Locales", "Semigroup")]
    lr = sem.locales[0]
    broken = tci.LocaleRecord(
        entity=tci.Entity("locale", "Semigroup.broken", "broken",
                          "Semigroup.thy", 1, 0, 1),
        typargs=lr.typargs, fixes=lr.fixes, assumes=lr.assumes,
        defines=(("Semigroup.not_elaborated", lr.defines[0][1]),),
        notes=())
    tr = Translator()
    tr.translate_theory(corpus.contents[("Pure", "Pure")])
    with pytest.raises(MissingElaboratedCounterpart):
        tr.translate_locale(broken, "Locales.Semigroup",
                            make_uri("theory", "Locales.Semigroup", "Semigroup"))


def test_ten_randomized_locales_are_consistent():
    for seed in range(10):
        tc = gen_locale_theory(seed)
        tr = Translator()
        pure = tci.TheoryContent(session="Pure", theory_name="Pure")
        pure.consts.append(tci.ConstDecl(
            tci.Entity("const", "Pure.eq", "eq", "Pure.thy", 1, 0, 1),
            ("'a",),
            tci.TCon("fun", (tci.TFree("'a"),
                             tci.TCon("fun", (tci.TFree("'a"),
                                              tci.TCon("prop")))))))
        pure.consts.append(tci.ConstDecl(
            tci.Entity("const", "Pure.all", "all", "Pure.thy", 2, 0, 2),
            ("'a",),
            tci.TCon("fun", (tci.TCon("fun", (tci.TFree("'a"),
                                              tci.TCon("prop"))),
                             tci.TCon("prop")))))
        pure.consts.append(tci.ConstDecl(
            tci.Entity("const", "Pure.imp", "imp", "Pure.thy", 3, 0, 3),
            (),
            tci.TCon("fun", (tci.TCon("prop"),
                             tci.TCon("fun", (tci.TCon("prop"),
                                              tci.TCon("prop")))))))
        env = TciEnv()
        assert validate_tci(pure, env) == []
        env.absorb(pure)
        assert validate_tci(tc, env) == [], seed
        graph = [tr.bootstrap]
        graph.extend(tr.translate_theory(pure).graph())
        res = tr.translate_theory(tc)
        graph.extend(res.graph())
        assert tr.check_locale_consistency(tc.locales[0],
                                           res.locales[0].theory) == [], seed
        report = check_theory_graph(graph)
        assert report.ok, (seed, report.errors)


# -- type classes ---------------------------------------------------------------

def test_class_predicate_declared(corpus):
    pred = corpus.decl("Semigroup.sg", "class")
    assert pretty(pred.classifier) == "type → prop"
    assert pred.metadata["class-locale"].endswith("?Semigroup.sg|locale")
    assert pred.metadata["params"].endswith("?Semigroup.sg_class.op|const")


def test_class_style_globals(corpus):
    op = corpus.decl("Semigroup.sg_class.op", "const")
    assert pretty(op.classifier) == "Πa:type. a → a → a"
    assoc = corpus.decl("Semigroup.sg_class.assoc", "axiom")
    printed = pretty(assoc.classifier)
    assert printed.startswith(
        "Πa:type. ded (Semigroup.sg a (Semigroup.sg_class.op a)) → ")


def test_classrel_encoding(corpus):
    rel = corpus.decl("Order.linorder<Order.order", "classrel")
    assert pretty(rel.classifier) == \
        "Πa:type. ded (Order.linorder a) → ded (Order.order a)"


def test_arity_encoding_single(corpus):
    ar = corpus.decl("Order.list::Order.order", "arity")
    assert pretty(ar.classifier) == \
        "Πa:type. ded (Order.order a) → ded (Order.order (Order.list a))"


def test_arity_encoding_multi_class_domains(corpus):
    ar = corpus.decl("Order.pr::Order.linorder", "arity")
    assert pretty(ar.classifier) == (
        "Πa1:type. Πa2:type. ded (Order.order a1) → "
        "ded (Order.linorder a2) → ded (Order.order a2) → "
        "ded (Order.linorder (Order.pr a1 a2))")


def _implication_edge(decl):
    """Read (sub, super) back out of a generated subclass implication, by
    destructuring the classifier syntactically."""
    from plfexport.kernel import Pi, instantiate, shift, spine
    cl = decl.classifier
    assert isinstance(cl, Pi)
    cl = instantiate(cl.codomain, Var("a"))
    assert isinstance(cl, Pi)
    dom, cod = cl.domain, shift(cl.codomain, -1)
    _, dom_args = spine(dom)
    _, cod_args = spine(cod)
    sub_head, _ = spine(dom_args[0])
    sup_head, _ = spine(cod_args[0])
    return sub_head.uri.name, sup_head.uri.name


def test_subclass_reachability_matches_generated_implications(corpus):
    order_tc = corpus.contents[("Classes", "Order")]
    # oracle: reachability over the raw interchange records
    direct = {(r.sub, r.super) for r in order_tc.classrels}
    classes = {c.class_name for c in order_tc.classes}
    reach = {(c, c) for c in classes}
    changed = True
    while changed:
        changed = False
        for (a, b) in list(reach):
            for (c, d) in direct:
                if b == c and (a, d) not in reach:
                    reach.add((a, d))
                    changed = True
    # derivability: compose the generated implications syntactically
    edges = set()
    for d in corpus.translator.state.decls.values():
        if d.uri.kind == "classrel":
            edges.add(_implication_edge(d))
    derivable = {(c, c) for c in classes}
    changed = True
    while changed:
        changed = False
        for (a, b) in list(derivable):
            for (c, d) in edges:
                if b == c and (a, d) not in derivable:
                    derivable.add((a, d))
                    changed = True
    assert derivable == reach
    assert ("Order.wellorder", "Order.order") in derivable
