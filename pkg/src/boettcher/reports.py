"""Structured pass/fail reports shared by all verification checks."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Witness:
    """One checked instance: what was expected at an index, what was found."""

    index: object
    expected: str
    actual: str
    passed: bool


@dataclass
class CheckReport:
    """Outcome of one check over a declared range of witnesses.

    The verdict is positive exactly when every witness passed; checks must
    emit a witness for every index of their declared range rather than
    narrowing it.
    """

    check_name: str
    params: dict
    witnesses: list[Witness] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(w.passed for w in self.witnesses)

    @property
    def failure_count(self) -> int:
        return sum(1 for w in self.witnesses if not w.passed)

    def first_failure(self) -> Witness | None:
        for w in self.witnesses:
            if not w.passed:
                return w
        return None

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f", {self.failure_count} failed" if self.failure_count else ""
        where = " ".join(f"{k}={v}" for k, v in self.params.items())
        return f"[{status}] {self.check_name} {where} ({len(self.witnesses)} witnesses{extra})"


def merge_reports(name: str, params: dict, parts: list[CheckReport]) -> CheckReport:
    """Concatenate the witnesses of several reports under one name."""
    merged = CheckReport(name, params)
    for part in parts:
        merged.witnesses.extend(part.witnesses)
        merged.notes.update(part.notes)
    return merged


def residue(x: int, p: int) -> str:
    return f"{x} mod {p}"


def residue_power(x: int, p: int, t: int) -> str:
    return f"{x} mod {p}^{t}"
