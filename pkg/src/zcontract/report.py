from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass(frozen=True)
class CheckEntry:
    """Outcome of one axiom or inequality check.

    ``witness`` is ``None`` on success, otherwise the offending tuple
    (pair, triple, index, ...). ``value`` holds the quantity that decided
    the verdict when one exists (e.g. the most negative zeta value).
    """

    name: str
    passed: bool
    witness: Any = None
    value: float | None = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "witness": _plain(self.witness),
            "value": _plain(self.value),
            "detail": self.detail,
        }


@dataclass(frozen=True)
class VerificationReport:
    subject: str
    entries: tuple[CheckEntry, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def failures(self) -> list[CheckEntry]:
        return [e for e in self.entries if not e.passed]

    def __getitem__(self, name: str) -> CheckEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    def to_dict(self) -> dict:
        return {
            "subject": self.subject,
            "passed": self.passed,
            "entries": [e.to_dict() for e in self.entries],
        }

    def format(self) -> str:
        lines = [f"{self.subject}: {'PASS' if self.passed else 'FAIL'}"]
        for e in self.entries:
            line = f"  [{'ok' if e.passed else 'FAIL'}] {e.name}"
            if e.value is not None:
                line += f"  value={e.value:.6g}"
            if e.witness is not None:
                line += f"  witness={_fmt_witness(e.witness)}"
            if e.detail:
                line += f"  ({e.detail})"
            lines.append(line)
        return "\n".join(lines)


def _plain(obj):
    """Convert numpy scalars and tuples into JSON-friendly builtins."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, (list, tuple)):
        return [_plain(o) for o in obj]
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if hasattr(obj, "item"):
        obj = obj.item()
    if isinstance(obj, int):
        return obj
    return float(obj)


def _fmt_witness(w) -> str:
    if isinstance(w, (list, tuple)):
        return "(" + ", ".join(_fmt_witness(v) for v in w) + ")"
    if isinstance(w, dict):
        return "{" + ", ".join(f"{k}: {_fmt_witness(v)}" for k, v in w.items()) + "}"
    if isinstance(w, float):
        return f"{w:.6g}"
    return str(w)
