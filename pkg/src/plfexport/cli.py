"""Command-line pipeline: parse, translate, check, serialize, query.

Subcommands:
  import  full pipeline from interchange files to OMDoc (+ RDF) output
  check   re-check previously written OMDoc output with the kernel
  stats   corpus statistics (delimited on stdout, optional figures)
  deps    dependency queries over the uses-graph

Exit codes: 0 success, 1 validation or type errors, 2 I/O errors,
64 usage errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import content as tci
from . import kernel, omdoc, ontology
from .content import Diagnostic, TciError, TheoryContent
from .translator import TranslationError, Translator
from .uris import DEFAULT_BASE, Uri, UriError

BASE_ENV_VAR = "PLF_EXPORT_BASE_URI"

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_IO = 2
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    inputs: list[str]
    out_dir: str
    xz: bool = False
    rdf: bool = False
    ntriples: bool = False
    proofs: bool = False
    strict: bool = True
    jobs: int = field(default_factory=lambda: os.cpu_count() or 1)
    base_uri: str = DEFAULT_BASE
    json_summary: bool = False

    def __post_init__(self):
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")


def _default_base() -> str:
    return os.environ.get(BASE_ENV_VAR, DEFAULT_BASE)


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _atomic_write(path: str, writer) -> None:
    """Write via temp-and-rename so failures leave no partial output."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    tmp = f"{path}.tmp{os.getpid()}"
    try:
        with open(tmp, "wb") as f:
            writer(f)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _collect_inputs(paths: Sequence[str], suffixes: tuple[str, ...]) -> list[str]:
    out = []
    for p in paths:
        if os.path.isdir(p):
            for root, _dirs, files in os.walk(p):
                for f in sorted(files):
                    if f.endswith(suffixes):
                        out.append(os.path.join(root, f))
        else:
            out.append(p)
    return sorted(out)


def _theory_path(out_dir: str, session: str, theory: str, xz: bool) -> str:
    name = f"{theory}.omdoc.xz" if xz else f"{theory}.omdoc"
    return os.path.join(out_dir, session, name)


# ---------------------------------------------------------------------------
# import
# ---------------------------------------------------------------------------

def run_import(config: RunConfig) -> int:
    t_start = time.perf_counter()
    files = _collect_inputs(config.inputs, (".tci", ".tci.xz"))
    if not files:
        _log("no input files")
        return EXIT_INVALID

    contents: list[TheoryContent] = []
    warnings: list[Diagnostic] = []
    for path in files:
        try:
            contents.extend(tci.iter_tci(path, strict=config.strict,
                                         warnings=warnings))
        except FileNotFoundError as e:
            _log(f"cannot read {path}: {e}")
            return EXIT_IO
        except TciError as e:
            _log(f"{path}: {e}")
            return EXIT_INVALID
    for w in warnings:
        _log(f"warning: {w}")

    try:
        ordered = tci.topo_order(contents)
    except tci.CycleError as e:
        _log(str(e))
        return EXIT_INVALID

    env = tci.TciEnv()
    ok = True
    for tc in ordered:
        for d in tci.validate_tci(tc, env):
            _log(f"{tc.session}.{tc.theory_name}: {d}")
            ok = False
        env.absorb(tc)
    if not ok:
        return EXIT_INVALID

    translator = Translator(config.base_uri, include_proofs=config.proofs)
    translations = []
    graph: list = [translator.bootstrap]
    for tc in ordered:
        t0 = time.perf_counter()
        try:
            res = translator.translate_theory(tc)
        except (TranslationError, UriError) as e:
            _log(f"{tc.session}.{tc.theory_name}: {e}")
            return EXIT_INVALID
        translations.append((tc, res))
        graph.extend(res.graph())
        ms = (time.perf_counter() - t0) * 1000
        _log(f"translated {tc.session}.{tc.theory_name}: "
             f"{len(res.theory.decls)} declarations, "
             f"{len(res.locales)} locales in {ms:.1f} ms")

    report = kernel.check_theory_graph(graph)
    for err in report.errors:
        _log(str(err))
    if not report.ok:
        _log(f"check failed: {len(report.errors)} errors")
        return EXIT_INVALID

    docs = [("PLF", "PLF", omdoc.bootstrap_document(translator.bootstrap))]
    for tc, res in translations:
        docs.append((tc.session, tc.theory_name,
                     omdoc.build_document(res, translator.bootstrap.uri)))

    outputs = []

    def write_doc(entry) -> str:
        session, theory, doc = entry
        path = _theory_path(config.out_dir, session, theory, config.xz)
        _atomic_write(path, lambda f: omdoc.write_omdoc(doc, f, config.xz))
        return path

    try:
        if config.jobs > 1:
            with ThreadPoolExecutor(max_workers=config.jobs) as pool:
                outputs.extend(pool.map(write_doc, docs))
        else:
            outputs.extend(write_doc(d) for d in docs)

        triples = None
        if config.rdf or config.ntriples:
            triples = ontology.emit_rdf([d for _, _, d in docs])
        if config.rdf:
            path = os.path.join(config.out_dir,
                                "ontology.rdf.xz" if config.xz else "ontology.rdf")
            _atomic_write(path, lambda f: ontology.write_rdf_xml(
                triples, f, config.xz))
            outputs.append(path)
        if config.ntriples:
            path = os.path.join(config.out_dir,
                                "ontology.nt.xz" if config.xz else "ontology.nt")
            _atomic_write(path, lambda f: ontology.write_ntriples(
                triples, f, config.xz))
            outputs.append(path)
    except (OSError, omdoc.SinkError) as e:
        _log(f"write failed: {e}")
        return EXIT_IO

    elapsed = time.perf_counter() - t_start
    decls = sum(t.decl_count for t in report.theories)
    _log(f"imported {len(translations)} theories, {decls} declarations "
         f"in {elapsed:.2f} s")
    if config.json_summary:
        print(json.dumps({
            "theories": len(translations),
            "declarations": decls,
            "errors": 0,
            "outputs": sorted(outputs),
        }, indent=None, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------
# check / stats / deps
# ---------------------------------------------------------------------------

def _load_corpus(corpus: str) -> list[omdoc.OmdocDoc]:
    files = _collect_inputs([corpus], (".omdoc", ".omdoc.xz"))
    if not files:
        raise FileNotFoundError(f"no .omdoc files under {corpus}")
    return [omdoc.read_omdoc(path) for path in files]


def run_check(corpus: str, base_uri: str, json_summary: bool = False) -> int:
    try:
        docs = _load_corpus(corpus)
    except FileNotFoundError as e:
        _log(str(e))
        return EXIT_IO
    except omdoc.OmdocError as e:
        _log(str(e))
        return EXIT_INVALID
    graph: list = []
    for doc in docs:
        graph.extend(omdoc.doc_to_graph(doc))
    if not any(t.uri.long_theory == "PLF" for t in graph
               if isinstance(t, kernel.Theory)):
        graph.insert(0, Translator(base_uri).bootstrap)
    report = kernel.check_theory_graph(graph)
    for err in report.errors:
        _log(str(err))
    _log(report.summary())
    if json_summary:
        print(json.dumps({
            "theories": len(report.theories),
            "declarations": sum(t.decl_count for t in report.theories),
            "errors": len(report.errors),
        }, sort_keys=True))
    return EXIT_OK if report.ok else EXIT_INVALID


def run_stats(corpus: str, figures: Optional[str] = None,
              json_summary: bool = False) -> int:
    try:
        docs = _load_corpus(corpus)
    except FileNotFoundError as e:
        _log(str(e))
        return EXIT_IO
    except omdoc.OmdocError as e:
        _log(str(e))
        return EXIT_INVALID
    report = ontology.stats(docs)
    if json_summary:
        print(json.dumps(dict(report.rows()), sort_keys=True))
    else:
        sys.stdout.write(report.format())
    if figures:
        from .figures import render_stats_figures
        for path in render_stats_figures(report, figures):
            _log(f"wrote {path}")
    return EXIT_OK


def run_deps(uri_text: str, corpus: str, transitive: bool = False) -> int:
    try:
        uri = Uri.parse(uri_text)
    except UriError as e:
        _log(str(e))
        return EXIT_INVALID
    try:
        docs = _load_corpus(corpus)
    except FileNotFoundError as e:
        _log(str(e))
        return EXIT_IO
    triples = ontology.emit_rdf(docs)
    try:
        closure = ontology.uses_closure(uri, triples, transitive=transitive)
    except ontology.UnknownUri as e:
        _log(f"unknown uri: {e}")
        return EXIT_INVALID
    for u in closure:
        print(u.render())
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="plf-export",
                     description="Theory export pipeline: interchange XML to "
                                 "framework-checked OMDoc and RDF.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_import = sub.add_parser("import", help="run the full pipeline")
    p_import.add_argument("inputs", nargs="+",
                          help="interchange files or directories")
    p_import.add_argument("--out", required=True, help="output directory")
    p_import.add_argument("--xz", action="store_true",
                          help="XZ-compress all outputs")
    p_import.add_argument("--rdf", action="store_true",
                          help="also write the RDF/XML ontology")
    p_import.add_argument("--nt", action="store_true",
                          help="also write the ontology as one triple per line")
    p_import.add_argument("--proofs", action="store_true",
                          help="translate proof terms when present")
    mode = p_import.add_mutually_exclusive_group()
    mode.add_argument("--strict", dest="strict", action="store_true",
                      default=True, help="reject unknown elements (default)")
    mode.add_argument("--lenient", dest="strict", action="store_false",
                      help="collect unknown elements as warnings")
    p_import.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                          metavar="N", help="parallel output writers")
    p_import.add_argument("--base-uri", default=None,
                          help=f"identifier base (default from "
                               f"${BASE_ENV_VAR} or {DEFAULT_BASE})")
    p_import.add_argument("--json-summary", action="store_true",
                          help="machine-readable summary on stdout")

    p_check = sub.add_parser("check", help="re-check existing output")
    p_check.add_argument("corpus", help="directory of .omdoc files")
    p_check.add_argument("--base-uri", default=None)
    p_check.add_argument("--json-summary", action="store_true")

    p_stats = sub.add_parser("stats", help="corpus statistics")
    p_stats.add_argument("corpus", help="directory of .omdoc files")
    p_stats.add_argument("--figures", metavar="DIR",
                         help="also render charts into DIR")
    p_stats.add_argument("--json-summary", action="store_true")

    p_deps = sub.add_parser("deps", help="dependency query")
    p_deps.add_argument("uri", help="declaration URI")
    p_deps.add_argument("--corpus", required=True,
                        help="directory of .omdoc files")
    p_deps.add_argument("--transitive", action="store_true",
                        help="reflexive-transitive closure")
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "import":
        if args.jobs < 1:
            parser.error("--jobs must be >= 1")
        config = RunConfig(
            inputs=args.inputs,
            out_dir=args.out,
            xz=args.xz,
            rdf=args.rdf,
            ntriples=args.nt,
            proofs=args.proofs,
            strict=args.strict,
            jobs=args.jobs,
            base_uri=args.base_uri or _default_base(),
            json_summary=args.json_summary,
        )
        return run_import(config)
    if args.command == "check":
        return run_check(args.corpus, args.base_uri or _default_base(),
                         args.json_summary)
    if args.command == "stats":
        return run_stats(args.corpus, args.figures, args.json_summary)
    if args.command == "deps":
        return run_deps(args.uri, args.corpus, args.transitive)
    return EXIT_USAGE


def main() -> None:
    sys.exit(run())
