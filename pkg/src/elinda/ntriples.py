"""Streaming N-Triples parser and serializer.

One triple per line, `.`-terminated; `#` comment lines and blank lines are
skipped. Blank nodes are rejected: the data model is URIs and literals only.
"""

from __future__ import annotations

from typing import IO, Iterable, Iterator, Tuple, Union

from .errors import NTriplesSyntaxError, UnsupportedFeature
from .terms import Term, literal, uri

TripleOfTerms = Tuple[Term, Term, Term]

_ESCAPES = {
    "t": "\t",
    "b": "\b",
    "n": "\n",
    "r": "\r",
    "f": "\f",
    '"': '"',
    "'": "'",
    "\\": "\\",
}


class _LineScanner:
    def __init__(self, text: str, lineno: int):
        self.text = text
        self.pos = 0
        self.lineno = lineno

    def error(self, message: str) -> NTriplesSyntaxError:
        return NTriplesSyntaxError(message, self.lineno)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def _unescape(self, raw: str) -> str:
        out = []
        i = 0
        while i < len(raw):
            ch = raw[i]
            if ch != "\\":
                out.append(ch)
                i += 1
                continue
            if i + 1 >= len(raw):
                raise self.error("dangling backslash in escape sequence")
            code = raw[i + 1]
            if code in _ESCAPES:
                out.append(_ESCAPES[code])
                i += 2
            elif code == "u" or code == "U":
                width = 4 if code == "u" else 8
                hexpart = raw[i + 2 : i + 2 + width]
                if len(hexpart) != width:
                    raise self.error(f"truncated \\{code} escape")
                try:
                    out.append(chr(int(hexpart, 16)))
                except ValueError:
                    raise self.error(f"bad hex in \\{code} escape: {hexpart!r}")
                i += 2 + width
            else:
                raise self.error(f"unknown escape sequence \\{code}")
        return "".join(out)

    def read_iri(self) -> Term:
        if self.peek() != "<":
            raise self.error("expected '<' starting an IRI")
        end = self.text.find(">", self.pos + 1)
        if end < 0:
            raise self.error("unterminated IRI")
        raw = self.text[self.pos + 1 : end]
        self.pos = end + 1
        if any(c in raw for c in " <\"{}|^`"):
            raise self.error(f"illegal character in IRI <{raw}>")
        return uri(self._unescape(raw))

    def read_literal(self) -> Term:
        # opening quote already peeked
        i = self.pos + 1
        while True:
            if i >= len(self.text):
                raise self.error("unterminated literal")
            ch = self.text[i]
            if ch == "\\":
                i += 2
                continue
            if ch == '"':
                break
            i += 1
        raw = self.text[self.pos + 1 : i]
        self.pos = i + 1
        lex = self._unescape(raw)
        language = None
        datatype = None
        if self.peek() == "@":
            self.pos += 1
            start = self.pos
            while self.pos < len(self.text) and (
                self.text[self.pos].isalnum() or self.text[self.pos] == "-"
            ):
                self.pos += 1
            language = self.text[start : self.pos]
            if not language:
                raise self.error("empty language tag")
        elif self.text[self.pos : self.pos + 2] == "^^":
            self.pos += 2
            datatype = self.read_iri().lexical
        return literal(lex, language, datatype)

    def read_subject_or_predicate(self, role: str) -> Term:
        self.skip_ws()
        ch = self.peek()
        if ch == "<":
            return self.read_iri()
        if self.text[self.pos : self.pos + 2] == "_:":
            raise UnsupportedFeature(
                f"line {self.lineno}: blank node in {role} position is not supported"
            )
        raise self.error(f"expected IRI in {role} position")

    def read_object(self) -> Term:
        self.skip_ws()
        ch = self.peek()
        if ch == "<":
            return self.read_iri()
        if ch == '"':
            return self.read_literal()
        if self.text[self.pos : self.pos + 2] == "_:":
            raise UnsupportedFeature(
                f"line {self.lineno}: blank node in object position is not supported"
            )
        raise self.error("expected IRI or literal in object position")

    def expect_dot(self) -> None:
        self.skip_ws()
        if self.peek() != ".":
            raise self.error("expected '.' terminating the triple")
        self.pos += 1
        self.skip_ws()
        rest = self.text[self.pos :]
        if rest and not rest.startswith("#"):
            raise self.error(f"trailing content after '.': {rest!r}")


def parse_ntriples(source: Union[str, bytes, IO]) -> Iterator[TripleOfTerms]:
    """Yield (subject, predicate, object) Term triples from N-Triples input."""
    if isinstance(source, bytes):
        lines: Iterable[str] = source.decode("utf-8").splitlines()
    elif isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = (
            ln.decode("utf-8") if isinstance(ln, bytes) else ln for ln in source
        )
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        scanner = _LineScanner(line.rstrip("\n"), lineno)
        s = scanner.read_subject_or_predicate("subject")
        p = scanner.read_subject_or_predicate("predicate")
        o = scanner.read_object()
        scanner.expect_dot()
        yield (s, p, o)


def _escape(lex: str) -> str:
    out = []
    for ch in lex:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\t":
            out.append("\\t")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04X}")
        else:
            out.append(ch)
    return "".join(out)


def term_to_nt(t: Term) -> str:
    if t.is_uri:
        return f"<{t.lexical}>"
    base = f'"{_escape(t.lexical)}"'
    if t.language:
        return f"{base}@{t.language}"
    if t.datatype:
        return f"{base}^^<{t.datatype}>"
    return base


def serialize_ntriples(triples: Iterable[TripleOfTerms]) -> str:
    return "".join(
        f"{term_to_nt(s)} {term_to_nt(p)} {term_to_nt(o)} .\n" for s, p, o in triples
    )
