"""
vche2d Report Models

Time series, fitted exponents, verdicts and warnings gathered by a run.
"""

import math
import threading
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple


@dataclass
class ReportWarning:
    """Aggregated non-fatal diagnostic (boundary decay, tail bounds, ...)."""
    category: str
    message: str
    count: int = 1
    first_time: Optional[float] = None
    max_value: Optional[float] = None

    def merge(self, time: Optional[float], value: Optional[float]) -> None:
        self.count += 1
        if self.first_time is None:
            self.first_time = time
        if value is not None and (self.max_value is None or value > self.max_value):
            self.max_value = value


@dataclass
class Verdict:
    """Pass/fail row referencing a named acceptance criterion."""
    name: str
    criterion: str
    value: float
    threshold: float
    comparison: str = "<="
    passed: bool = field(init=False)

    _COMPARATORS = {
        "<=": lambda v, t: v <= t,
        "<": lambda v, t: v < t,
        ">=": lambda v, t: v >= t,
        ">": lambda v, t: v > t,
    }

    def __post_init__(self):
        if self.comparison not in self._COMPARATORS:
            raise ValueError(f"Unknown comparison '{self.comparison}'")
        value = float(self.value)
        self.passed = math.isfinite(value) and bool(
            self._COMPARATORS[self.comparison](value, float(self.threshold)))


@dataclass
class FittedExponent:
    """Least-squares decay exponent with its window and max residual."""
    name: str
    slope: float
    residual: float
    window: Tuple[float, float]
    mode: str
    samples: int


@dataclass
class SeriesTable:
    """Named columns sampled over time; first column is the time axis."""
    name: str
    columns: List[str]
    rows: List[Tuple[float, ...]] = field(default_factory=list)

    def __post_init__(self):
        if not self.columns:
            raise ValueError("Series table needs at least one column")

    def add_row(self, values: Mapping[str, float]) -> None:
        missing = [c for c in self.columns if c not in values]
        if missing:
            raise ValueError(f"Row is missing columns: {missing}")
        self.rows.append(tuple(float(values[c]) for c in self.columns))

    def column(self, name: str) -> List[float]:
        index = self.columns.index(name)
        return [row[index] for row in self.rows]

    def pairs(self, column: str) -> List[Tuple[float, float]]:
        """(time, value) pairs for one column."""
        return list(zip(self.column(self.columns[0]), self.column(column)))

    def __len__(self) -> int:
        return len(self.rows)


@dataclass
class DecayReport:
    """Everything an experiment produces apart from raw fields."""
    experiment: str
    config: Dict[str, Any] = field(default_factory=dict)
    series: Dict[str, SeriesTable] = field(default_factory=dict)
    exponents: List[FittedExponent] = field(default_factory=list)
    verdicts: List[Verdict] = field(default_factory=list)
    warnings: List[ReportWarning] = field(default_factory=list)
    notes: Dict[str, Any] = field(default_factory=dict)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def table(self, name: str, columns: Sequence[str]) -> SeriesTable:
        """Get or create a series table."""
        with self._lock:
            if name not in self.series:
                self.series[name] = SeriesTable(name, list(columns))
            return self.series[name]

    def add_warning(self, category: str, message: str,
                    time: Optional[float] = None, value: Optional[float] = None) -> None:
        with self._lock:
            for existing in self.warnings:
                if existing.category == category and existing.message == message:
                    existing.merge(time, value)
                    return
            self.warnings.append(ReportWarning(category, message, 1, time, value))

    def add_verdict(self, name: str, criterion: str, value: float, threshold: float,
                    comparison: str = "<=") -> Verdict:
        verdict = Verdict(name, criterion, value, threshold, comparison)
        with self._lock:
            self.verdicts.append(verdict)
        return verdict

    def add_exponent(self, exponent: FittedExponent) -> None:
        with self._lock:
            self.exponents.append(exponent)

    def note(self, key: str, value: Any) -> None:
        with self._lock:
            self.notes[key] = value

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    @property
    def failed_verdicts(self) -> List[Verdict]:
        return [v for v in self.verdicts if not v.passed]

    def exit_code(self) -> int:
        return 0 if self.passed else 1
