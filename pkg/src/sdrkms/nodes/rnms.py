"""Radio network management stations: blind routing and replicated planning data.

An RNMS never holds key material.  It reads only the outer container and
header fields needed to address a delivery.

Planning entries replicate by anti-entropy.  Each entry keeps the write
stamp (the version vector at the moment of writing) and the merged
knowledge vector.  The winner is the entry ranked highest by
(stamp total, writer id, stamp, value).  A causally later write always has
a larger total; concurrent writes fall to the higher peer id.  Rank is a
total order and the knowledge vector merges by pointwise max, so every
sync schedule that connects all peers ends in identical stores.
"""

import copy
from dataclasses import dataclass, field

from ..container import FullContainer, inspect_header, inspect_outer
from ..encoding import Reader, Writer
from ..errors import FormatError
from .base import Channel, Message, MsgType, NodeContext, Quarantine


def _vv_items(vv: dict) -> tuple:
    return tuple(sorted((k, v) for k, v in vv.items() if v))


def vv_leq(a: dict, b: dict) -> bool:
    return all(v <= b.get(k, 0) for k, v in a.items())


def vv_join(a: dict, b: dict) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = max(out.get(k, 0), v)
    return out


@dataclass(frozen=True)
class PlanEntry:
    value: bytes
    stamp: tuple     # version vector of the winning write, sorted items
    writer: str
    vv: tuple        # merged knowledge, sorted items

    def rank(self) -> tuple:
        return (sum(v for _, v in self.stamp), self.writer, self.stamp, self.value)


def merge_entries(a: PlanEntry | None, b: PlanEntry | None) -> PlanEntry:
    if a is None or b is None:
        return a if b is None else b
    win = a if a.rank() >= b.rank() else b
    return PlanEntry(win.value, win.stamp, win.writer, _vv_items(vv_join(dict(a.vv), dict(b.vv))))


@dataclass
class RnmsState:
    peer_id: str
    planning_store: dict = field(default_factory=dict)   # key -> PlanEntry
    containers: dict = field(default_factory=dict)       # container id hex -> serialized container
    waiting: dict = field(default_factory=dict)          # container id hex -> [recipient]
    forwarded: list = field(default_factory=list)        # (container id hex, recipient)
    routing_log: list = field(default_factory=list)
    quarantine: list = field(default_factory=list)
    outbox: list = field(default_factory=list)

    def write(self, key: str, value: bytes) -> PlanEntry:
        old = self.planning_store.get(key)
        vv = dict(old.vv) if old else {}
        vv[self.peer_id] = vv.get(self.peer_id, 0) + 1
        stamp = _vv_items(vv)
        entry = PlanEntry(bytes(value), stamp, self.peer_id, stamp)
        self.planning_store[key] = entry
        return entry

    def planning_bytes(self) -> bytes:
        w = Writer().raw(b"PLAN").u32(len(self.planning_store))
        for key in sorted(self.planning_store):
            _encode_entry(w, key, self.planning_store[key])
        return w.getvalue()

    def snapshot(self) -> bytes:
        """Full serialized state; used for blindness scans."""
        w = Writer().raw(b"RNMS").u16(1).text(self.peer_id).blob(self.planning_bytes())
        w.u32(len(self.containers))
        for cid in sorted(self.containers):
            w.text(cid).blob(self.containers[cid])
        w.u32(len(self.routing_log))
        for line in self.routing_log:
            w.text(line)
        w.u32(len(self.quarantine))
        for line in self.quarantine:
            w.text(line)
        return w.getvalue()


def _encode_entry(w: Writer, key: str, e: PlanEntry) -> None:
    w.text(key).blob(e.value).text(e.writer)
    for vec in (e.stamp, e.vv):
        w.u32(len(vec))
        for peer, n in vec:
            w.text(peer).u64(n)


def _decode_entry(r: Reader) -> tuple[str, PlanEntry]:
    key, value, writer = r.text(), r.blob(), r.text()
    vecs = []
    for _ in range(2):
        vecs.append(tuple((r.text(), r.u64()) for _ in range(r.u32())))
    return key, PlanEntry(value, vecs[0], writer, vecs[1])


def encode_entries(entries: dict) -> bytes:
    w = Writer().u32(len(entries))
    for key in sorted(entries):
        _encode_entry(w, key, entries[key])
    return w.getvalue()


def decode_entries(data: bytes) -> dict:
    r = Reader(data)
    out = dict(_decode_entry(r) for _ in range(r.u32()))
    r.done()
    return out


def merge_into(state: RnmsState, entries: dict) -> int:
    changed = 0
    for key in sorted(entries):
        merged = merge_entries(state.planning_store.get(key), entries[key])
        if merged != state.planning_store.get(key):
            state.planning_store[key] = merged
            changed += 1
    return changed


def rms_sync(a: RnmsState, b: RnmsState) -> tuple[RnmsState, RnmsState]:
    """Anti-entropy between two stations; returns updated copies."""
    a2, b2 = copy.deepcopy(a), copy.deepcopy(b)
    merge_into(a2, b.planning_store)
    merge_into(b2, a.planning_store)
    return a2, b2


def digest(state: RnmsState) -> bytes:
    w = Writer().u32(len(state.planning_store))
    for key in sorted(state.planning_store):
        vv = state.planning_store[key].vv
        w.text(key).u32(len(vv))
        for peer, n in vv:
            w.text(peer).u64(n)
    return w.getvalue()


def delta_for(state: RnmsState, remote_digest: bytes) -> dict:
    """Entries the remote side (described by its digest) has not fully seen."""
    r = Reader(remote_digest)
    remote = {}
    for _ in range(r.u32()):
        key = r.text()
        remote[key] = {r.text(): r.u64() for _ in range(r.u32())}
    r.done()
    return {k: e for k, e in state.planning_store.items()
            if k not in remote or not vv_leq(dict(e.vv), remote[k])}


# -- routing ----------------------------------------------------------------------

def _send(state: RnmsState, ctx: NodeContext | None, msg_type: MsgType, to: str, body: bytes) -> Message:
    msg = Message(msg_type, state.peer_id, to, Channel.WIRED, body)
    state.outbox.append(msg)
    if ctx is not None:
        ctx.send(msg_type, to, Channel.WIRED, body)
    return msg


def rnms_route(state: RnmsState, msg: Message, ctx: NodeContext | None = None) -> list[Message]:
    """Forward containers and headers by their outer metadata only.

    Unparseable input is quarantined and raises :class:`Quarantine`.
    """
    out: list[Message] = []
    try:
        if msg.msg_type == MsgType.CONTAINER:
            info = inspect_outer(msg.body)
            cid = info.container_id.hex()
            if cid not in state.containers:
                state.containers[cid] = bytes(msg.body)
                state.routing_log.append(f"STORE {cid} from={msg.sender} suite={info.suite_id} "
                                         f"len={info.payload_length}")
                state.write(f"container/{cid}", f"suite={info.suite_id}".encode())
            for rid in state.waiting.pop(cid, []):
                out.append(_deliver_container(state, ctx, cid, rid))
        elif msg.msg_type == MsgType.HEADER:
            hdr = inspect_header(msg.body)
            cid, rid = hdr.container_id.hex(), hdr.recipient_id
            out.append(_send(state, ctx, MsgType.HEADER, rid, msg.body))
            state.routing_log.append(f"HEADER {cid} -> {rid}")
            state.write(f"route/{cid}/{rid}", b"header")
            if cid in state.containers:
                if (cid, rid) not in state.forwarded:
                    out.append(_deliver_container(state, ctx, cid, rid))
            else:
                state.waiting.setdefault(cid, []).append(rid)
        else:
            raise FormatError(f"RNMS does not route {msg.msg_type.value}")
    except FormatError as exc:
        line = f"QUARANTINE #{msg.msg_id} {msg.msg_type.value} from={msg.sender}: {exc}"
        state.quarantine.append(line)
        state.routing_log.append(line)
        raise Quarantine(str(exc)) from exc
    return out


def _deliver_container(state, ctx, cid: str, rid: str) -> Message:
    state.forwarded.append((cid, rid))
    state.routing_log.append(f"CONTAINER {cid} -> {rid}")
    return _send(state, ctx, MsgType.CONTAINER, rid, state.containers[cid])


def stored_container(state: RnmsState, cid: str) -> FullContainer:
    return FullContainer.from_bytes(state.containers[cid])
