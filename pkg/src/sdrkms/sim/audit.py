"""Audit log: records ordered by (tick, sequence), persisted as ``tick|node|event|detail``."""

from dataclasses import dataclass, field

from ..errors import FormatError


@dataclass(frozen=True, order=True)
class EventRecord:
    tick: int
    seq: int
    node: str = field(compare=False)
    event: str = field(compare=False)
    detail: str = field(default="", compare=False)

    def line(self) -> str:
        detail = self.detail.replace("\n", " ").replace("|", "/")
        return f"{self.tick}|{self.node}|{self.event}|{detail}"


@dataclass
class SimClock:
    now: int = 0

    def advance(self, tick: int) -> None:
        if tick < self.now:
            raise ValueError(f"clock cannot go back from {self.now} to {tick}")
        self.now = tick


class AuditLog:
    def __init__(self):
        self.records: list[EventRecord] = []

    def append(self, tick: int, node: str, event: str, detail: str = "") -> EventRecord:
        if self.records and tick < self.records[-1].tick:
            raise ValueError("audit records must be appended in tick order")
        rec = EventRecord(tick, len(self.records), node, event, detail)
        self.records.append(rec)
        return rec

    def lines(self) -> list[str]:
        return [r.line() for r in self.records]

    def text(self) -> str:
        return "".join(line + "\n" for line in self.lines())

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.text())

    def query(self, node=None, event=None, since=None, until=None, contains=None) -> list[EventRecord]:
        return query_records(self.records, node, event, since, until, contains)

    def __len__(self):
        return len(self.records)


def parse_log(text: str) -> list[EventRecord]:
    out = []
    for i, line in enumerate(text.splitlines()):
        if not line:
            continue
        parts = line.split("|", 3)
        if len(parts) != 4:
            raise FormatError(f"log line {i + 1}: expected tick|node|event|detail")
        try:
            tick = int(parts[0])
        except ValueError:
            raise FormatError(f"log line {i + 1}: bad tick {parts[0]!r}") from None
        out.append(EventRecord(tick, i, parts[1], parts[2], parts[3]))
    return out


def read_log(path) -> list[EventRecord]:
    with open(path, encoding="utf-8") as fh:
        return parse_log(fh.read())


def query_records(records, node=None, event=None, since=None, until=None, contains=None):
    return [r for r in records
            if (node is None or r.node == node)
            and (event is None or r.event == event)
            and (since is None or r.tick >= since)
            and (until is None or r.tick <= until)
            and (contains is None or contains in r.detail)]
