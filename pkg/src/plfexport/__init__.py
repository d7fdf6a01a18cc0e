"""Prover-library export pipeline.

Reads theory content in the TCI interchange format, translates it into a
polymorphic logical framework, re-checks every declaration with a small
dependent-type kernel, and serializes the result as OMDoc-subset XML plus
an RDF dependency ontology.
"""

from .uris import DEFAULT_BASE, Uri, make_uri

__version__ = "0.1.0"

__all__ = ["DEFAULT_BASE", "Uri", "make_uri", "__version__"]
