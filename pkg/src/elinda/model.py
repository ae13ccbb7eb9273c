"""Value types of the exploration model: bars, charts, filters, ancestry paths."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Tuple, Union

from .errors import InvalidComparator
from .terms import Term

PSEUDO_LITERAL = "«literal»"
PSEUDO_UNTYPED = "«untyped»"
PSEUDO_LABELS = (PSEUDO_LITERAL, PSEUDO_UNTYPED)

OUTGOING = "outgoing"
INCOMING = "incoming"


class BarType(enum.Enum):
    CLASS = "class"
    PROPERTY = "property"


class Comparator(enum.Enum):
    EQUALS = "equals"
    CONTAINS = "contains"
    LT = "lt"
    GT = "gt"


@dataclass(frozen=True)
class FilterCondition:
    property: str
    comparator: Comparator
    value: Term
    direction: str = OUTGOING

    def __post_init__(self):
        if self.comparator in (Comparator.LT, Comparator.GT):
            if self.value.numeric_value() is None:
                raise InvalidComparator(
                    f"{self.comparator.value} requires a numeric value, "
                    f"got {self.value.lexical!r}"
                )

    def matches(self, value: Term) -> bool:
        if self.comparator is Comparator.EQUALS:
            if self.value.is_uri:
                return value.is_uri and value.lexical == self.value.lexical
            return value.is_literal and value.lexical == self.value.lexical
        if self.comparator is Comparator.CONTAINS:
            return self.value.lexical in value.lexical
        bound = self.value.numeric_value()
        actual = value.numeric_value()
        if actual is None:
            return False
        if self.comparator is Comparator.LT:
            return actual < bound
        return actual > bound


# Ancestry path steps: how a bar's member set was derived from the graph.
# The SPARQL generator walks these to reconstruct the set as graph patterns.

@dataclass(frozen=True)
class RootStep:
    """Initial instance set: all instances of any of `classes`, or every
    typed instance subject when classes is None (dataset without a root)."""
    classes: Optional[Tuple[str, ...]]


@dataclass(frozen=True)
class SubclassStep:
    class_uri: str


@dataclass(frozen=True)
class PropertyStep:
    predicate: str
    direction: str


@dataclass(frozen=True)
class ObjectStep:
    predicate: str
    direction: str
    class_uri: str


@dataclass(frozen=True)
class FilterStep:
    conditions: Tuple[FilterCondition, ...]


@dataclass(frozen=True)
class PseudoStep:
    """Marks a pseudo-bar («literal»/«untyped»); has no query representation."""
    label: str


PathStep = Union[RootStep, SubclassStep, PropertyStep, ObjectStep, FilterStep, PseudoStep]


@dataclass(frozen=True)
class Bar:
    members: FrozenSet[str]
    label: str
    bar_type: BarType
    path: Tuple[PathStep, ...] = ()

    @property
    def is_pseudo(self) -> bool:
        return self.label in PSEUDO_LABELS


@dataclass(frozen=True)
class BarMetrics:
    instance_count: int
    coverage: float
    average_per_instance: float
    direct_subclass_count: Optional[int] = None
    total_subclass_count: Optional[int] = None


@dataclass
class Chart:
    """Ordered label -> bar map; iteration order is display order."""

    bars: Dict[str, Bar] = field(default_factory=dict)
    metrics: Dict[str, BarMetrics] = field(default_factory=dict)

    def labels(self) -> List[str]:
        return list(self.bars)

    def __len__(self) -> int:
        return len(self.bars)

    def __contains__(self, label: str) -> bool:
        return label in self.bars

    def __getitem__(self, label: str) -> Bar:
        return self.bars[label]


class ExpansionOp(enum.Enum):
    SUBCLASS = "subclass"
    PROPERTY_OUT = "prop_out"
    PROPERTY_IN = "prop_in"
    OBJECT_OUT = "object_out"
    OBJECT_IN = "object_in"
    FILTER = "filter"


@dataclass(frozen=True)
class ExpansionKind:
    op: ExpansionOp
    conditions: Tuple[FilterCondition, ...] = ()

    @property
    def requires(self) -> BarType:
        if self.op in (ExpansionOp.OBJECT_OUT, ExpansionOp.OBJECT_IN):
            return BarType.PROPERTY
        return BarType.CLASS


def sort_chart_by_size(entries: List[Tuple[str, Bar, BarMetrics]]) -> Chart:
    """Decreasing instance_count, ties broken lexicographically by label."""
    entries.sort(key=lambda e: (-e[2].instance_count, e[0]))
    return _assemble(entries)


def sort_chart_by_coverage(entries: List[Tuple[str, Bar, BarMetrics]]) -> Chart:
    entries.sort(key=lambda e: (-e[2].coverage, e[0]))
    return _assemble(entries)


def _assemble(entries: List[Tuple[str, Bar, BarMetrics]]) -> Chart:
    chart = Chart()
    for label, bar, metrics in entries:
        chart.bars[label] = bar
        chart.metrics[label] = metrics
    return chart
