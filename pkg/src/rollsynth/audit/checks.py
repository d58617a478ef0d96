from __future__ import annotations

from dataclasses import asdict, dataclass

LINT_CATEGORIES = (
    "structural",
    "security",
    "mask",
    "bounds",
    "division",
    "info-usage",
    "return-path",
    "control-logic",
)
SEVERITIES = ("error", "warning", "info")
STATUSES = ("pass", "warn", "fail")


@dataclass(frozen=True)
class CheckResult:
    id: str
    category: str
    severity: str
    status: str
    message: str
    location: tuple[int, int] | None = None
    witness: dict | None = None

    def __post_init__(self):
        if self.severity not in SEVERITIES:
            raise ValueError(f"bad severity {self.severity!r}")
        if self.status not in STATUSES:
            raise ValueError(f"bad status {self.status!r}")

    @property
    def is_error(self) -> bool:
        return self.status == "fail" and self.severity == "error"

    def to_dict(self) -> dict:
        data = asdict(self)
        if self.location is not None:
            data["location"] = list(self.location)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "CheckResult":
        loc = data.get("location")
        return cls(
            data["id"],
            data["category"],
            data["severity"],
            data["status"],
            data["message"],
            tuple(loc) if loc is not None else None,
            data.get("witness"),
        )


def verdict(check_id: str, category: str, severity: str, ok: bool, message: str, location=None, witness=None) -> CheckResult:
    """Pass when ``ok``; otherwise fail for errors and warn for anything milder."""
    if ok:
        status = "pass"
    else:
        status = "fail" if severity == "error" else "warn"
    return CheckResult(check_id, category, severity, status, message, location, witness)
