import dataclasses
import io
import lzma
import random

import pytest

from plfexport.content import (
    CycleError, Diagnostic, LocaleRecord, TFree, TciEnv, TciSchemaError,
    TciSyntaxError, TheoryContent, iter_tci, parse_tci, topo_order,
    validate_tci, write_tci,
)

from conftest import fixture_path, FIXTURE_NAMES


def _read_bytes(name):
    with open(fixture_path(name), "rb") as f:
        return f.read()


# -- parsing ----------------------------------------------------------------

def test_parse_pure_fixture():
    tc = parse_tci(fixture_path("pure"))
    assert tc.session == "Pure" and tc.theory_name == "Pure"
    eq = next(c for c in tc.consts if c.entity.full_name == "Pure.eq")
    assert eq.typargs == ("'a",)
    # 'a => 'a => prop
    typ = eq.typ
    assert typ.name == "fun" and typ.args[0] == TFree("'a")
    assert typ.args[1].name == "fun"
    assert typ.args[1].args[1].name == "prop"


def test_parse_empty_theory():
    data = b"<?xml version='1.0'?><tci version=\"1\"><theory session=\"S\" name=\"T\"/></tci>"
    tc = parse_tci(io.BytesIO(data))
    assert tc.session == "S" and tc.theory_name == "T"
    assert not tc.types and not tc.consts and not tc.axioms and not tc.thms
    assert not tc.locales and not tc.classes and not tc.arities


def test_source_text_preserved_byte_exact():
    tc = parse_tci(fixture_path("semigroup"))
    sg = next(l for l in tc.locales if l.entity.full_name == "Semigroup.sg")
    assert sg.entity.source_text == (
        'locale sg =\n  fixes op :: "\'a => \'a => \'a"  (infixl "*" 70)\n'
        '  assumes assoc: "(x * y) * z = x * (y * z)"')


def test_xz_detection_by_magic():
    plain = _read_bytes("pure")
    packed = lzma.compress(plain)
    assert packed[:6] == b"\xfd7zXZ\x00"
    tc_plain = parse_tci(io.BytesIO(plain))
    tc_packed = parse_tci(io.BytesIO(packed))
    assert tc_plain == tc_packed


def test_truncated_input_gives_syntax_error():
    data = _read_bytes("semigroup")
    rng = random.Random(5)
    offsets = sorted(rng.sample(range(40, len(data) - 10), 20))
    for cut in offsets:
        with pytest.raises(TciSyntaxError) as exc:
            parse_tci(io.BytesIO(data[:cut]))
        assert exc.value.position is not None or "empty" in str(exc.value)


def test_unknown_element_strict_vs_lenient():
    data = (b"<tci version=\"1\"><theory session=\"S\" name=\"T\">"
            b"<wibble/></theory></tci>")
    with pytest.raises(TciSchemaError) as exc:
        parse_tci(io.BytesIO(data))
    assert "wibble" in str(exc.value)
    warnings = []
    tc = parse_tci(io.BytesIO(data), strict=False, warnings=warnings)
    assert tc.theory_name == "T"
    assert warnings and warnings[0].code == "UnknownElement"


def test_bad_root_rejected():
    with pytest.raises(TciSchemaError):
        parse_tci(io.BytesIO(b"<nope/>"))
    with pytest.raises(TciSchemaError):
        parse_tci(io.BytesIO(b"<tci version=\"2\"><theory session=\"s\" name=\"n\"/></tci>"))


def test_multi_theory_stream():
    a = TheoryContent(session="S", theory_name="A")
    b = TheoryContent(session="S", theory_name="B", parents=(("S", "A"),))
    buf = io.BytesIO()
    write_tci([a, b], buf)
    buf.seek(0)
    out = list(iter_tci(buf))
    assert [t.key for t in out] == [("S", "A"), ("S", "B")]
    buf.seek(0)
    with pytest.raises(TciSchemaError):
        parse_tci(buf)  # parse_tci insists on a single theory


# -- writer round-trip ------------------------------------------------------

@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_writer_round_trips_fixture(name):
    tc = parse_tci(fixture_path(name))
    buf = io.BytesIO()
    write_tci(tc, buf)
    buf.seek(0)
    assert parse_tci(buf) == tc


def test_writer_round_trips_compressed():
    tc = parse_tci(fixture_path("order"))
    buf = io.BytesIO()
    write_tci(tc, buf, compress=True)
    raw = buf.getvalue()
    assert raw[:6] == b"\xfd7zXZ\x00"
    assert parse_tci(io.BytesIO(raw)) == tc


# -- validation -------------------------------------------------------------

def test_fixtures_validate_clean(ordered_contents):
    env = TciEnv()
    for tc in ordered_contents:
        assert validate_tci(tc, env) == [], tc.key
        env.absorb(tc)


def _env_through(ordered, upto_key):
    env = TciEnv()
    for tc in ordered:
        if tc.key == upto_key:
            return env
        env.absorb(tc)
    return env


def test_dangling_dep_diagnosed(ordered_contents):
    sem = next(t for t in ordered_contents if t.theory_name == "Semigroup")
    env = _env_through(ordered_contents, sem.key)
    thm = sem.thms[0]
    bad = dataclasses.replace(thm, deps=thm.deps + ("No.Such.Axiom",))
    mutated = dataclasses.replace(sem)
    mutated.thms = [bad]
    diags = validate_tci(mutated, env)
    assert any(d.code == "DanglingDependency" for d in diags)


def test_unbound_locale_type_variable_diagnosed(ordered_contents):
    sem = next(t for t in ordered_contents if t.theory_name == "Semigroup")
    env = _env_through(ordered_contents, sem.key)
    loc = sem.locales[0]
    bad_fix = (("op2", TFree("'b"), None),)
    bad = LocaleRecord(entity=loc.entity, typargs=loc.typargs,
                       fixes=loc.fixes + bad_fix, assumes=loc.assumes,
                       defines=loc.defines, notes=loc.notes)
    mutated = dataclasses.replace(sem)
    mutated.locales = [bad] + sem.locales[1:]
    diags = validate_tci(mutated, env)
    assert any(d.code == "UnboundLocaleTypeVariable" for d in diags)


def test_arity_mismatch_diagnosed():
    data = (b"<tci version=\"1\"><theory session=\"S\" name=\"T\">"
            b"<types><type name=\"T.pair\" line=\"1\" offset=\"0\" span=\"1\" arity=\"2\"/></types>"
            b"<consts><const name=\"T.c\" line=\"2\" offset=\"9\" span=\"2\">"
            b"<type><TCon name=\"T.pair\"><TCon name=\"prop\"/></TCon></type>"
            b"</const></consts></theory></tci>")
    tc = parse_tci(io.BytesIO(data))
    diags = validate_tci(tc, TciEnv())
    assert any(d.code == "ArityMismatch" for d in diags)


def test_diagnostics_are_data():
    d = Diagnostic("DanglingDependency", "X.t", "whatever")
    assert "DanglingDependency" in str(d)


# -- topological order ------------------------------------------------------

def test_topo_single():
    pure = TheoryContent(session="Pure", theory_name="Pure")
    assert topo_order([pure]) == [pure]


def test_topo_linear_chain_any_input_order():
    pure = TheoryContent(session="Pure", theory_name="Pure")
    hol = TheoryContent(session="HOL", theory_name="HOL",
                        parents=(("Pure", "Pure"),))
    nat = TheoryContent(session="HOL", theory_name="Nat",
                        parents=(("HOL", "HOL"),))
    for perm in ([nat, hol, pure], [hol, pure, nat], [pure, nat, hol]):
        assert [t.key for t in topo_order(perm)] == \
            [("Pure", "Pure"), ("HOL", "HOL"), ("HOL", "Nat")]


def test_topo_stable_tie_break():
    a = TheoryContent(session="S", theory_name="B")
    b = TheoryContent(session="S", theory_name="A")
    c = TheoryContent(session="R", theory_name="Z")
    assert [t.key for t in topo_order([a, b, c])] == \
        [("R", "Z"), ("S", "A"), ("S", "B")]


def test_topo_cycle_reported():
    a = TheoryContent(session="S", theory_name="A", parents=(("S", "B"),))
    b = TheoryContent(session="S", theory_name="B", parents=(("S", "A"),))
    with pytest.raises(CycleError) as exc:
        topo_order([a, b])
    assert "S.A" in str(exc.value) and "S.B" in str(exc.value)
