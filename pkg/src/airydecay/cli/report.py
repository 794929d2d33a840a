from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterator, Optional

from ..constants import SCHEMA_VERSION


class Status(Enum):
    passed = "pass"
    failed = "fail"
    skipped = "skip"


@dataclass
class CriterionResult:
    """Outcome of a single acceptance criterion

    Parameters
    ----------
    criterion : int
        The criterion number
    title : str
        Short description
    status : Status
        Pass, fail or skip
    detail : Optional str
        What was measured, or why the criterion was skipped or failed
    measured : Optional dict
        Machine-readable measurements
    seconds : Optional float
        Wall time spent on the criterion
    slow : Optional bool
        Whether the criterion is skipped by ``--quick``
    """

    criterion: int
    title: str
    status: Status
    detail: str = ""
    measured: Dict[str, Any] = field(default_factory=dict)
    seconds: float = 0.0
    slow: bool = False

    def __str__(self) -> str:
        return f"[{self.status.value}] {self.criterion:>2}. {self.title}: {self.detail}"

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "title": self.title,
            "status": self.status.value,
            "detail": self.detail,
            "measured": self.measured,
            "seconds": round(self.seconds, 3),
            "slow": self.slow,
        }


class Report:
    """An ordered collection of `CriterionResult` entries, one per criterion"""

    def __init__(self, quick: Optional[bool] = False):
        self.quick = quick
        self.results = []

    def add_result(self, result: CriterionResult):
        """Adds a result to the end of the report

        Raises
        ------
        ValueError
            If the criterion is already in the report
        """

        if self.get(result.criterion) is not None:
            raise ValueError(f"Criterion {result.criterion} is already reported")
        self.results.append(result)

    def get(self, criterion: int) -> Optional[CriterionResult]:
        for result in self.results:
            if result.criterion == criterion:
                return result
        return None

    def __iter__(self) -> Iterator[CriterionResult]:
        return iter(self.results)

    def __len__(self) -> int:
        return len(self.results)

    @property
    def passed(self) -> bool:
        """True when no criterion failed; skipped criteria do not count as failures"""

        return all(result.status is not Status.failed for result in self.results)

    def count(self, status: Status) -> int:
        return sum(1 for result in self.results if result.status is status)

    def summary(self) -> str:
        line = f"{self.count(Status.passed)} passed, {self.count(Status.failed)} failed, {self.count(Status.skipped)} skipped"
        if self.quick:
            line += " (--quick: slow criteria skipped)"
        return line

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "quick": self.quick,
            "passed": self.passed,
            "criteria": [result.to_dict() for result in self.results],
        }
