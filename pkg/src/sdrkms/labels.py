"""Classification labels: an ordered level plus an optional compartment tag.

A clearance dominates a label when its level is at least as high and, if
the label carries a compartment, the clearance carries the same one.  Labels
in different compartments never mix (NATO vs national material).
"""

from dataclasses import dataclass
from enum import IntEnum

from .errors import FormatError


class Level(IntEnum):
    UNCLASSIFIED = 0
    NATIONAL_CONFIDENTIAL = 1
    NATO_SECRET = 2


class Compartment(IntEnum):
    NONE = 0
    NATO = 1
    NATIONAL = 2


@dataclass(frozen=True, order=True)
class ClassificationLabel:
    level: Level = Level.UNCLASSIFIED
    compartment: Compartment = Compartment.NONE

    def dominates(self, other: "ClassificationLabel") -> bool:
        if self.level < other.level:
            return False
        return other.compartment == Compartment.NONE or other.compartment == self.compartment

    def to_byte(self) -> int:
        return int(self.compartment) << 4 | int(self.level)

    @classmethod
    def from_byte(cls, b: int) -> "ClassificationLabel":
        try:
            return cls(Level(b & 0x0F), Compartment(b >> 4))
        except ValueError as exc:
            raise FormatError(f"invalid classification byte {b:#04x}") from exc

    def __str__(self):
        if self.compartment == Compartment.NONE:
            return self.level.name
        return f"{self.level.name}/{self.compartment.name}"

    @classmethod
    def parse(cls, text: str) -> "ClassificationLabel":
        level, _, comp = text.strip().partition("/")
        try:
            return cls(Level[level.strip().upper()],
                       Compartment[comp.strip().upper()] if comp else Compartment.NONE)
        except KeyError as exc:
            raise FormatError(f"unknown classification {text!r}") from exc


UNCLASSIFIED = ClassificationLabel()
NATIONAL_CONFIDENTIAL = ClassificationLabel(Level.NATIONAL_CONFIDENTIAL)
NATO_SECRET = ClassificationLabel(Level.NATO_SECRET)
