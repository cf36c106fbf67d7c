from importlib import resources
from types import MappingProxyType

from ..errors import CapabilityDenied, FormatError

ROLES = ("RSMS", "RNMS", "NGDM", "KDMS", "DEVICE", "OPERATOR")


class CapabilityList:
    """White list role -> permitted operation names.  Absence means deny."""

    def __init__(self, grants=None):
        self._grants = {role: frozenset(ops) for role, ops in (grants or {}).items()}

    @property
    def grants(self):
        return MappingProxyType(self._grants)

    def allows(self, role: str, operation: str) -> bool:
        return operation in self._grants.get(role, frozenset())

    def grant(self, role: str, *operations: str) -> "CapabilityList":
        grants = dict(self._grants)
        grants[role] = grants.get(role, frozenset()) | frozenset(operations)
        return CapabilityList(grants)

    def require(self, role: str, operation: str) -> None:
        if not self.allows(role, operation):
            raise CapabilityDenied(f"role {role} may not {operation}")

    def __eq__(self, other):
        return isinstance(other, CapabilityList) and self._grants == other._grants

    def to_text(self) -> str:
        return "".join(f"{role}: {', '.join(sorted(ops))}\n" for role, ops in sorted(self._grants.items()))

    @classmethod
    def parse(cls, text: str) -> "CapabilityList":
        grants: dict[str, set] = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            role, sep, ops = line.partition(":")
            if not sep or not role.strip():
                raise FormatError(f"line {lineno}: expected 'role: op1, op2'")
            grants.setdefault(role.strip(), set()).update(o.strip() for o in ops.split(",") if o.strip())
        return cls(grants)


def check_capability(caps: CapabilityList, role: str, operation: str) -> bool:
    return caps.allows(role, operation)


def default_capabilities() -> CapabilityList:
    text = resources.files(__package__).joinpath("default_capabilities.txt").read_text()
    return CapabilityList.parse(text)
