"""RDF terms (URIs and literals) and well-known vocabulary URIs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
RDFS_SUBCLASSOF = "http://www.w3.org/2000/01/rdf-schema#subClassOf"
RDFS_LABEL = "http://www.w3.org/2000/01/rdf-schema#label"
OWL_CLASS = "http://www.w3.org/2002/07/owl#Class"
RDFS_CLASS = "http://www.w3.org/2000/01/rdf-schema#Class"
OWL_THING = "http://www.w3.org/2002/07/owl#Thing"

XSD_INTEGER = "http://www.w3.org/2001/XMLSchema#integer"
XSD_DECIMAL = "http://www.w3.org/2001/XMLSchema#decimal"
XSD_DOUBLE = "http://www.w3.org/2001/XMLSchema#double"

CLASS_DECL_URIS = (OWL_CLASS, RDFS_CLASS)

URI = "uri"
LITERAL = "literal"


@dataclass(frozen=True)
class Term:
    """A URI or a literal. Literals may carry a language tag or a datatype URI."""

    kind: str
    lexical: str
    language: Optional[str] = None
    datatype: Optional[str] = None

    @property
    def is_uri(self) -> bool:
        return self.kind == URI

    @property
    def is_literal(self) -> bool:
        return self.kind == LITERAL

    def display(self) -> str:
        """Human-facing string: the URI itself, or the literal's lexical form."""
        return self.lexical

    def numeric_value(self) -> Optional[float]:
        if self.kind != LITERAL:
            return None
        try:
            return float(self.lexical)
        except ValueError:
            return None

    def sort_key(self):
        n = self.numeric_value()
        if n is not None:
            return (0, n, self.lexical)
        return (1, self.lexical, self.kind)

    def __str__(self) -> str:
        return self.lexical


def uri(value: str) -> Term:
    return Term(URI, value)


def literal(value: str, language: Optional[str] = None, datatype: Optional[str] = None) -> Term:
    return Term(LITERAL, value, language, datatype)


def integer_literal(n: int) -> Term:
    return Term(LITERAL, str(n), datatype=XSD_INTEGER)


def double_literal(x: float) -> Term:
    return Term(LITERAL, repr(x), datatype=XSD_DOUBLE)


def local_name(u: str) -> str:
    """Text after the last '/' or '#'; fallback label for unlabeled URIs."""
    for sep in ("#", "/"):
        idx = u.rfind(sep)
        if idx >= 0 and idx + 1 < len(u):
            return u[idx + 1:]
    return u
