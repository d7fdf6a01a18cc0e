import pytest

from plfexport import content as tci
from plfexport.kernel import (
    App, Const, EMPTY_CONTEXT, Lam, SORT_TYPE, Signature, check, pretty, spine,
)
from plfexport.translator import Translator, UnsupportedProof
from plfexport.uris import make_uri

from conftest import fixture_path
from plfexport.content import parse_tci, topo_order


@pytest.fixture(scope="module")
def hol():
    tr = Translator(include_proofs=True)
    for tc in topo_order([parse_tci(fixture_path("pure")),
                          parse_tci(fixture_path("minihol")),
                          parse_tci(fixture_path("order"))]):
        tr.translate_theory(tc)
    sig = Signature()
    for d in tr.state.decls.values():
        sig.declare(d)
    return tr, sig


def test_assumption_rule(hol):
    tr, sig = hol
    # proof (lambda h. h) of True ==> True
    tp_true = tci.TApp(tci.TConst("HOL.Trueprop"), tci.TConst("HOL.True"))
    proof = tci.PAbsP("h", tp_true, tci.PBoundP(0))
    e = tr.translate_proof(proof)
    imp = lambda p, q: tci.TApp(tci.TApp(tci.TConst("Pure.imp"), p), q)  # noqa: E731
    statement = tr.import_prop((), imp(tp_true, tp_true))
    check(sig, EMPTY_CONTEXT, e, statement)
    assert pretty(e) == "λh:ded (HOL.Trueprop HOL.True). h"


def test_axiom_reference_with_typarg(hol):
    tr, sig = hol
    proof = tci.PAxiom("HOL.spec", (tci.TCon("HOL.bool"),))
    e = tr.translate_proof(proof)
    head, args = spine(e)
    assert isinstance(head, Const)
    assert head.uri == make_uri("axiom", "HOL.HOL", "HOL.spec")
    assert len(args) == 1 and args[0].uri.name == "HOL.bool"


def test_disjunction_intro_proof_rechecks(hol):
    tr, sig = hol
    thm = tr.state.decls[make_uri("thm", "HOL.HOL",
                                  "HOL.disj_intro_left").render()]
    assert not thm.unchecked
    check(sig, EMPTY_CONTEXT, thm.definiens, thm.classifier)


def test_theorem_reference_proof_rechecks(hol):
    tr, sig = hol
    thm = tr.state.decls[make_uri("thm", "HOL.HOL",
                                  "HOL.disj_intro_left_again").render()]
    assert not thm.unchecked
    check(sig, EMPTY_CONTEXT, thm.definiens, thm.classifier)
    assert thm.metadata["deps"] == (
        make_uri("thm", "HOL.HOL", "HOL.disj_intro_left").render(),)


def test_polymorphic_proof_binds_a_type(hol):
    tr, sig = hol
    thm = tr.state.decls[make_uri("thm", "HOL.HOL", "HOL.spec_self").render()]
    assert not thm.unchecked
    assert isinstance(thm.definiens, Lam)
    assert thm.definiens.annot == SORT_TYPE
    check(sig, EMPTY_CONTEXT, thm.definiens, thm.classifier)


def test_proofs_disabled_yields_dummy():
    tr = Translator(include_proofs=False)
    for tc in topo_order([parse_tci(fixture_path("pure")),
                          parse_tci(fixture_path("minihol"))]):
        tr.translate_theory(tc)
    thm = tr.state.decls[make_uri("thm", "HOL.HOL",
                                  "HOL.disj_intro_left").render()]
    assert thm.unchecked
    head, args = spine(thm.definiens)
    assert head.uri.name == "oracle"
    assert args == [thm.classifier]


def test_constrained_statement_with_proof_rejected(hol):
    tr, _sig = hol
    tp_true = tci.TApp(tci.TConst("HOL.Trueprop"), tci.TConst("HOL.True"))
    rec = tci.ThmDecl(
        tci.Entity("thm", "X.bad", "bad", "X.thy", 1, 0, 1),
        (("'a", None, ("Order.order",)),),
        tp_true,
        proof=tci.PAbsP("h", tp_true, tci.PBoundP(0)))
    with pytest.raises(UnsupportedProof):
        tr.translate_thm_decl(rec, "X.X")
