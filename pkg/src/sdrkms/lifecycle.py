"""Key validity, cyclic-update reminders, standby rollover and suite updates.

ASM keys carry a fixed validity window; OSM and session keys are valid for
as long as the organisation keeps them ACTIVE.  Every infrastructure keeps
exactly one STANDBY key to promote when the active one is suspected broken.
"""

from dataclasses import dataclass, field
from enum import Enum

from .cryptosuite.registry import SuiteRegistry, register_suite, schedule_activation
from .cryptosuite.suite import AlgorithmSuite
from .encoding import Reader, Writer
from .errors import FormatError, KeyStateError, ParameterError, UnrecoverableCompromise
from .labels import ClassificationLabel

DEFAULT_ASM_PERIOD = 10_000
DEFAULT_OSM_PERIOD = 100
WARNING_FRACTION = 0.10


class KeyKind(str, Enum):
    ASM = "ASM"
    OSM = "OSM"
    SESSION = "SESSION"


class KeyState(str, Enum):
    ACTIVE = "ACTIVE"
    STANDBY = "STANDBY"
    EXPIRED = "EXPIRED"
    DESTROYED = "DESTROYED"


_TRANSITIONS = {
    KeyState.ACTIVE: {KeyState.EXPIRED, KeyState.DESTROYED},
    KeyState.STANDBY: {KeyState.ACTIVE, KeyState.DESTROYED},
    KeyState.EXPIRED: {KeyState.DESTROYED},
    KeyState.DESTROYED: set(),
}


@dataclass
class KeyRecord:
    key_id: str
    kind: KeyKind
    role: str
    key_bytes: bytearray
    classification: ClassificationLabel
    infrastructure_id: str
    state: KeyState = KeyState.ACTIVE
    valid_from: int | None = None
    valid_to: int | None = None

    def __post_init__(self):
        self.key_bytes = bytearray(self.key_bytes)
        self.kind, self.state = KeyKind(self.kind), KeyState(self.state)
        if self.state == KeyState.DESTROYED:
            self.key_bytes = bytearray()
        if self.kind == KeyKind.ASM and (self.valid_from is None or self.valid_to is None):
            raise ParameterError("ASM keys need a fixed validity window")
        if self.valid_from is not None and self.valid_to is not None and self.valid_from >= self.valid_to:
            raise ParameterError("empty validity window")

    def transition(self, new: KeyState) -> None:
        new = KeyState(new)
        if new == self.state:
            return
        if new not in _TRANSITIONS[self.state]:
            raise KeyStateError(f"{self.key_id}: {self.state.value} -> {new.value} not allowed")
        self.state = new
        if new == KeyState.DESTROYED:
            for i in range(len(self.key_bytes)):
                self.key_bytes[i] = 0
            self.key_bytes = bytearray()

    def destroy(self) -> None:
        self.transition(KeyState.DESTROYED)

    def to_bytes(self) -> bytes:
        w = Writer().text(self.key_id).text(self.kind.value).text(self.role).blob(bytes(self.key_bytes))
        w.u8(self.classification.to_byte()).text(self.infrastructure_id).text(self.state.value)
        for v in (self.valid_from, self.valid_to):
            w.blob(b"" if v is None else v.to_bytes(8, "big", signed=True))
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "KeyRecord":
        r = Reader(data)
        rec = cls._read(r)
        r.done()
        return rec

    @classmethod
    def _read(cls, r: Reader) -> "KeyRecord":
        try:
            key_id, kind, role, key = r.text(), KeyKind(r.text()), r.text(), r.blob()
            label = ClassificationLabel.from_byte(r.u8())
            infra, state = r.text(), KeyState(r.text())
            window = []
            for _ in range(2):
                b = r.blob()
                if len(b) not in (0, 8):
                    raise FormatError("validity bound is 0 or 8 bytes")
                window.append(int.from_bytes(b, "big", signed=True) if b else None)
            return cls(key_id, kind, role, key, label, infra, state, *window)
        except (ValueError, ParameterError) as exc:
            raise FormatError(f"bad key record: {exc}") from exc


KEYSTORE_MAGIC = b"KEYS"


def encode_key_store(records) -> bytes:
    records = list(records.values()) if isinstance(records, dict) else list(records)
    w = Writer().raw(KEYSTORE_MAGIC).u16(1).u32(len(records))
    for rec in records:
        w.blob(rec.to_bytes())
    return w.getvalue()


def decode_key_store(data: bytes) -> dict[str, KeyRecord]:
    r = Reader(data)
    r.expect(KEYSTORE_MAGIC)
    if r.u16() != 1:
        raise FormatError("unsupported key store version")
    out = {}
    for _ in range(r.u32()):
        rec = KeyRecord.from_bytes(r.blob())
        out[rec.key_id] = rec
    r.done()
    return out


def validity_check(record: KeyRecord, now: int) -> bool:
    """True when the key may be used at ``now``."""
    if record.state != KeyState.ACTIVE:
        return False
    if record.valid_from is not None and now < record.valid_from:
        return False
    if record.valid_to is not None and now > record.valid_to:
        return False
    return True


# -- schedules and reminders ---------------------------------------------------

@dataclass(frozen=True)
class InfraSchedule:
    infrastructure_id: str
    kind: KeyKind
    period: int
    next_due: int


@dataclass(frozen=True)
class UpdateSchedule:
    entries: tuple = ()

    def __post_init__(self):
        asm = [e.period for e in self.entries if e.kind == KeyKind.ASM]
        osm = [e.period for e in self.entries if e.kind != KeyKind.ASM]
        if any(e.period <= 0 for e in self.entries):
            raise ParameterError("periods must be positive")
        if asm and osm and min(asm) <= max(osm):
            raise ParameterError("ASM update periods must exceed OSM periods")

    def advanced(self, infrastructure_id: str) -> "UpdateSchedule":
        """Schedule after ``infrastructure_id`` completed its cyclic update."""
        return UpdateSchedule(tuple(
            InfraSchedule(e.infrastructure_id, e.kind, e.period, e.next_due + e.period)
            if e.infrastructure_id == infrastructure_id else e for e in self.entries))


class Severity(str, Enum):
    UPCOMING = "UPCOMING"
    OVERDUE = "OVERDUE"


@dataclass(frozen=True)
class Reminder:
    infrastructure_id: str
    due: int
    severity: Severity


def tick_reminders(schedule: UpdateSchedule, now: int, warning_fraction: float = WARNING_FRACTION) -> list[Reminder]:
    out = []
    for e in schedule.entries:
        horizon = e.period * warning_fraction
        if e.next_due - now <= horizon:
            sev = Severity.OVERDUE if now > e.next_due else Severity.UPCOMING
            out.append(Reminder(e.infrastructure_id, e.next_due, sev))
    return out


# -- rollover ---------------------------------------------------------------------

@dataclass
class RolloverReport:
    infrastructure_id: str
    tick: int
    retired: list = field(default_factory=list)   # key ids ACTIVE -> DESTROYED/EXPIRED
    promoted: str | None = None                   # key id STANDBY -> ACTIVE

    def audit_lines(self, node: str) -> list[str]:
        lines = [f"{self.tick}|{node}|ROLLOVER_RETIRE|{self.infrastructure_id} {k}" for k in self.retired]
        lines.append(f"{self.tick}|{node}|ROLLOVER_PROMOTE|{self.infrastructure_id} {self.promoted}")
        return lines


def _rollover(store: dict, infrastructure_id: str, now: int, retire_to: KeyState) -> RolloverReport:
    standby = [r for r in store.values()
               if r.infrastructure_id == infrastructure_id and r.state == KeyState.STANDBY]
    if not standby:
        raise UnrecoverableCompromise(f"no standby key for {infrastructure_id}")
    if len(standby) > 1:
        raise KeyStateError(f"{infrastructure_id} holds {len(standby)} standby keys")
    report = RolloverReport(infrastructure_id, now)
    for rec in store.values():
        if rec.infrastructure_id == infrastructure_id and rec.state == KeyState.ACTIVE:
            rec.transition(retire_to)
            if retire_to == KeyState.EXPIRED:
                rec.destroy()
            report.retired.append(rec.key_id)
    standby[0].transition(KeyState.ACTIVE)
    report.promoted = standby[0].key_id
    return report


def emergency_rollover(store: dict, infrastructure_id: str, now: int) -> tuple[dict, RolloverReport]:
    """Destroy the active key(s) of one infrastructure and promote its standby.

    Mutates ``store`` in place (single writer) and returns it with a report.
    Raises UnrecoverableCompromise when no standby is held.
    """
    return store, _rollover(store, infrastructure_id, now, KeyState.DESTROYED)


def planned_rollover(store: dict, infrastructure_id: str, now: int) -> tuple[dict, RolloverReport]:
    """Cyclic update: the active key expires (and is wiped), the standby takes over."""
    return store, _rollover(store, infrastructure_id, now, KeyState.EXPIRED)


# -- algorithm updates ------------------------------------------------------------

@dataclass(frozen=True)
class ActivationReport:
    suite_id: int
    previous_active: int | None
    activates_at: str = "next-key-boundary"


def apply_algorithm_update(registry: SuiteRegistry, entries) -> tuple[SuiteRegistry, ActivationReport]:
    """Register the suite carried by exactly one ALGORITHM_UPDATE entry.

    The suite becomes active only at the next key-update boundary
    (:func:`sdrkms.cryptosuite.activate_pending`).
    """
    from .container import EntryType

    updates = [e for e in entries if e.entry_type == EntryType.ALGORITHM_UPDATE]
    if len(updates) != 1:
        raise FormatError(f"expected exactly one algorithm update entry, found {len(updates)}")
    try:
        suite = AlgorithmSuite.from_bytes(updates[0].content)
    except ParameterError as exc:
        raise FormatError(f"algorithm update does not describe a valid suite: {exc}") from exc
    reg = register_suite(registry, suite)
    if reg.active_id != suite.suite_id:
        reg = schedule_activation(reg, suite.suite_id)
    return reg, ActivationReport(suite.suite_id, registry.active_id)
