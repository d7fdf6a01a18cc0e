from __future__ import annotations

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from plfexport import kernel
from plfexport.content import TciEnv, parse_tci, topo_order, validate_tci
from plfexport.omdoc import bootstrap_document, build_document
from plfexport.translator import Translator

FIXTURE_DIR = os.path.join(os.path.dirname(__file__), "fixtures")
FIXTURE_NAMES = ("pure", "minihol", "typedef", "order", "semigroup")


def fixture_path(name: str) -> str:
    return os.path.join(FIXTURE_DIR, f"{name}.tci")


@pytest.fixture(scope="session")
def fixture_contents():
    return {name: parse_tci(fixture_path(name)) for name in FIXTURE_NAMES}


@pytest.fixture(scope="session")
def ordered_contents(fixture_contents):
    return topo_order(list(fixture_contents.values()))


@pytest.fixture(scope="session")
def validated(ordered_contents):
    env = TciEnv()
    for tc in ordered_contents:
        diags = validate_tci(tc, env)
        assert diags == [], f"{tc.key}: {diags}"
        env.absorb(tc)
    return env


class Corpus:
    """Everything the fixture corpus yields, translated once per session."""

    def __init__(self, ordered):
        self.translator = Translator(include_proofs=True)
        self.translations = {}
        self.graph = [self.translator.bootstrap]
        self.docs = [bootstrap_document(self.translator.bootstrap)]
        self.contents = {}
        for tc in ordered:
            res = self.translator.translate_theory(tc)
            self.translations[tc.key] = res
            self.contents[tc.key] = tc
            self.graph.extend(res.graph())
            self.docs.append(build_document(res, self.translator.bootstrap.uri))

    def decl(self, uri_name: str, kind: str) -> kernel.Decl:
        for key, d in self.translator.state.decls.items():
            if d.uri.name == uri_name and d.uri.kind == kind:
                return d
        raise KeyError((uri_name, kind))


@pytest.fixture(scope="session")
def corpus(ordered_contents, validated):
    return Corpus(ordered_contents)


@pytest.fixture(scope="session")
def checked_report(corpus):
    return kernel.check_theory_graph(corpus.graph)
