from dataclasses import dataclass, field
from types import MappingProxyType

from ..errors import SuiteConflict, SuiteNotFound
from .suite import AlgorithmSuite


@dataclass(frozen=True)
class SuiteRegistry:
    """Immutable map of suite_id -> suite with one active entry.

    ``pending_id`` names a registered suite that becomes active at the next
    key-update boundary (see :func:`activate_pending`).
    """

    suites: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))
    active_id: int | None = None
    pending_id: int | None = None

    def __post_init__(self):
        if not isinstance(self.suites, MappingProxyType):
            object.__setattr__(self, "suites", MappingProxyType(dict(self.suites)))
        if self.active_id is not None and self.active_id not in self.suites:
            raise SuiteNotFound(f"active suite {self.active_id} is not registered")

    @classmethod
    def of(cls, *suites: AlgorithmSuite) -> "SuiteRegistry":
        reg = cls()
        for s in suites:
            reg = register_suite(reg, s)
        return reg

    @property
    def active(self) -> AlgorithmSuite:
        return lookup_suite(self, self.active_id)

    def __contains__(self, suite_id) -> bool:
        return suite_id in self.suites


def register_suite(reg: SuiteRegistry, suite: AlgorithmSuite, activate: bool = False) -> SuiteRegistry:
    existing = reg.suites.get(suite.suite_id)
    if existing is not None and existing != suite:
        raise SuiteConflict(f"suite id {suite.suite_id} already bound to different parameters")
    suites = dict(reg.suites)
    suites[suite.suite_id] = suite
    active = reg.active_id
    if active is None or activate:
        active = suite.suite_id
    return SuiteRegistry(suites, active, reg.pending_id)


def lookup_suite(reg: SuiteRegistry, suite_id) -> AlgorithmSuite:
    try:
        return reg.suites[suite_id]
    except KeyError:
        raise SuiteNotFound(f"unknown suite id {suite_id}") from None


def schedule_activation(reg: SuiteRegistry, suite_id: int) -> SuiteRegistry:
    lookup_suite(reg, suite_id)
    return SuiteRegistry(reg.suites, reg.active_id, suite_id)


def activate_pending(reg: SuiteRegistry) -> SuiteRegistry:
    if reg.pending_id is None:
        return reg
    return SuiteRegistry(reg.suites, reg.pending_id, None)
