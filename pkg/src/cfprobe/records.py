"""Domain types for per-image ground-truth metadata."""

from __future__ import annotations

from dataclasses import dataclass, field

SEXES = ("male", "female")
RACES = ("asian", "white", "black")
AGE_BINS = ("young", "middle", "old")
FINDINGS = ("pleural_effusion", "cardiomegaly")
NO_FINDING = "no_finding"
DEVICES = ("none", "pacemaker", "tube")

AGE_MIN, AGE_MAX = 18, 95
# young < 40, middle 40..65, old > 65
AGE_BIN_RANGES = {"young": (18, 39), "middle": (40, 65), "old": (66, 95)}

ATTRIBUTES = ("age_bin", "sex", "race", "pleural_effusion", "cardiomegaly", "device")


def age_to_bin(age: int) -> str:
    if age < 40:
        return "young"
    if age <= 65:
        return "middle"
    return "old"


def canonical_findings(findings) -> tuple[str, ...]:
    """Normalize a findings collection: canonical order, no_finding exclusive and never-empty."""
    items = set(findings)
    if not items or items == {NO_FINDING}:
        return (NO_FINDING,)
    if NO_FINDING in items:
        raise ValueError(f"no_finding is mutually exclusive with other findings: {sorted(items)}")
    unknown = items - set(FINDINGS)
    if unknown:
        raise ValueError(f"unknown findings: {sorted(unknown)}")
    return tuple(f for f in FINDINGS if f in items)


@dataclass(frozen=True)
class AttributeRecord:
    """Ground truth for one image: demographics, findings, support device and render seed."""

    id: str
    age: int
    sex: str
    race: str
    findings: tuple[str, ...]
    device: str
    seed: int

    def __post_init__(self):
        if not self.id:
            raise ValueError("record id must be non-empty")
        if not (AGE_MIN <= self.age <= AGE_MAX):
            raise ValueError(f"age {self.age} outside [{AGE_MIN}, {AGE_MAX}]")
        if self.sex not in SEXES:
            raise ValueError(f"unknown sex {self.sex!r}")
        if self.race not in RACES:
            raise ValueError(f"unknown race {self.race!r}")
        if self.device not in DEVICES:
            raise ValueError(f"unknown device {self.device!r}")
        object.__setattr__(self, "findings", canonical_findings(self.findings))

    @property
    def age_bin(self) -> str:
        return age_to_bin(self.age)

    def has_finding(self, finding: str) -> bool:
        return finding in self.findings

    def attribute_value(self, attribute: str) -> str:
        """Value of one of the six probe attributes, as the classifier class name."""
        if attribute == "age_bin":
            return self.age_bin
        if attribute == "sex":
            return self.sex
        if attribute == "race":
            return self.race
        if attribute == "device":
            return self.device
        if attribute in FINDINGS:
            return "present" if self.has_finding(attribute) else "absent"
        raise ValueError(f"unknown attribute {attribute!r}")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "age": self.age,
            "sex": self.sex,
            "race": self.race,
            "findings": list(self.findings),
            "device": self.device,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AttributeRecord":
        return cls(
            id=d["id"],
            age=int(d["age"]),
            sex=d["sex"],
            race=d["race"],
            findings=tuple(d["findings"]),
            device=d["device"],
            seed=int(d["seed"]),
        )


ATTRIBUTE_CLASSES = {
    "sex": SEXES,
    "race": RACES,
    "age_bin": AGE_BINS,
    "pleural_effusion": ("absent", "present"),
    "cardiomegaly": ("absent", "present"),
    "device": DEVICES,
}
