"""Global naming scheme for exported declarations.

Every declaration, theory, and morphism is addressed by a URI of the form

    <base>?<long-theory-name>?<entity-name>|<entity-kind>

The long theory name is the session-qualified theory name (for example
``HOL.Nat``), the entity name is the declaration's full name within the
theory, and the kind tags the namespace (``type``, ``const``, ``thm``, ...).
The three variable components are percent-escaped so that rendering is
injective and parse(render(u)) == u.
"""

from __future__ import annotations

from dataclasses import dataclass, field

DEFAULT_BASE = "https://isabelle.in.tum.de"

# Reserved characters inside components: the scheme's own separators,
# the escape character itself, and whitespace.
_ESCAPES = {
    "%": "%25",
    "?": "%3F",
    "|": "%7C",
    " ": "%20",
    "\t": "%09",
    "\n": "%0A",
    "\r": "%0D",
}

_HEX = set("0123456789abcdefABCDEF")
_ESCAPE_TABLE = {ord(k): v for k, v in _ESCAPES.items()}


class UriError(ValueError):
    """Malformed URI text or component."""


class EmptyComponent(UriError):
    """A URI component that must be non-empty was empty."""


def _escape(component: str) -> str:
    return component.translate(_ESCAPE_TABLE)


def _unescape(component: str) -> str:
    out = []
    i = 0
    n = len(component)
    while i < n:
        c = component[i]
        if c == "%":
            code = component[i + 1 : i + 3]
            if len(code) != 2 or code[0] not in _HEX or code[1] not in _HEX:
                raise UriError(f"bad percent escape in {component!r}")
            out.append(chr(int(code, 16)))
            i += 3
        else:
            out.append(c)
            i += 1
    return "".join(out)


@dataclass(frozen=True, slots=True)
class Uri:
    """A parsed declaration identifier.

    ``base`` must not contain '?' or '|'; the other components may contain
    anything (reserved characters are escaped on render).
    """

    base: str
    long_theory: str
    name: str
    kind: str
    _rendered: "str | None" = field(default=None, init=False, repr=False,
                                    compare=False)

    def render(self) -> str:
        r = self._rendered
        if r is None:
            r = (f"{self.base}?{_escape(self.long_theory)}"
                 f"?{_escape(self.name)}|{_escape(self.kind)}")
            object.__setattr__(self, "_rendered", r)
        return r

    def __str__(self) -> str:
        return self.render()

    @classmethod
    def parse(cls, text: str) -> "Uri":
        base, q1, rest = text.partition("?")
        if not q1:
            raise UriError(f"missing '?' separators: {text!r}")
        long_theory, q2, tail = rest.partition("?")
        if not q2:
            raise UriError(f"missing second '?' separator: {text!r}")
        name, bar, kind = tail.rpartition("|")
        if not bar:
            raise UriError(f"missing '|' kind separator: {text!r}")
        if not base or not long_theory or not name or not kind:
            raise UriError(f"empty component in {text!r}")
        return cls(base, _unescape(long_theory), _unescape(name), _unescape(kind))


def make_uri(kind: str, long_theory: str, name: str, base: str = DEFAULT_BASE) -> Uri:
    """Build a declaration URI, rejecting empty components."""
    for label, value in (("kind", kind), ("long_theory", long_theory),
                         ("name", name), ("base", base)):
        if not value:
            raise EmptyComponent(f"empty uri component: {label}")
    if "?" in base or "|" in base:
        raise UriError("base must not contain '?' or '|'")
    return Uri(base, long_theory, name, kind)


def long_theory_name(session: str, theory: str) -> str:
    """Session-qualified theory name.

    Theories of the Pure session keep their unqualified name; this mirrors
    the naming of the bootstrap framework content, whose identifiers are
    never session-qualified.
    """
    if session == "Pure":
        return theory
    return f"{session}.{theory}"
