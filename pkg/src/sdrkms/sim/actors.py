"""Message handlers wrapping each node state for the simulator."""

from ..container import FullContainer, RecipientHeader
from ..errors import ChannelBusy, FormatError, SdrKmsError
from ..lifecycle import KeyState
from ..nodes.base import Channel, Message, MsgType, NodeContext, Quarantine
from ..nodes.device import DeviceState, Phase, device_load_fill
from ..nodes.join import handle_join_message, join_timer, start_join
from ..nodes.kdms import subtree
from ..nodes.packaging import KeyPackage
from ..nodes.rnms import RnmsState, decode_entries, delta_for, digest, encode_entries, merge_into, rnms_route
from ..encoding import Reader, Writer

JOIN_TYPES = (MsgType.JOIN_REQUEST, MsgType.JOIN_CHALLENGE, MsgType.SESSION_ESTABLISH,
              MsgType.NET_KEY_TRANSFER)


class Actor:
    node_id: str

    def handle(self, msg: Message, ctx: NodeContext) -> None:
        raise Quarantine(f"{self.node_id} accepts no {msg.msg_type.value}")

    def on_timer(self, token, ctx: NodeContext) -> None:
        pass


class PassiveActor(Actor):
    """RSMS and NGDM stations: offline, reached only by timeline events."""

    def __init__(self, node_id: str, state):
        self.node_id = node_id
        self.state = state


class DeviceActor(Actor):
    def __init__(self, device: DeviceState, join_timeout: int, max_retries: int, retry_backoff: int):
        self.device = device
        self.node_id = device.device_id
        self.join_timeout = join_timeout
        self.max_retries = max_retries
        self.retry_backoff = retry_backoff
        self.containers: dict[str, FullContainer] = {}
        self.headers: dict[str, RecipientHeader] = {}
        self.completed: list[str] = []      # nets joined during the last handled message

    def handle(self, msg, ctx):
        self.completed = []
        try:
            if msg.msg_type == MsgType.CONTAINER:
                c = FullContainer.from_bytes(msg.body)
                self.containers[c.container_id.hex()] = c
                self._try_load(c.container_id.hex(), ctx)
            elif msg.msg_type == MsgType.HEADER:
                self._take_header(msg.body)
                self._try_load(RecipientHeader.from_bytes(msg.body).container_id.hex(), ctx)
            elif msg.msg_type == MsgType.KEY_PACKAGE:
                pkg = KeyPackage.from_bytes(msg.body)
                c = FullContainer.from_bytes(pkg.container)
                cid = c.container_id.hex()
                mine = [h for rid, h in pkg.headers if rid == self.node_id]
                if not mine:
                    raise FormatError("package carries no header for this device")
                self.containers[cid] = c
                self._take_header(mine[0])
                self._try_load(cid, ctx)
            elif msg.msg_type in JOIN_TYPES:
                js = self.device.join
                if handle_join_message(self.device, msg, ctx) == "JOIN_COMPLETE":
                    self.completed.append(js.net_id)
                    self._maybe_operate(ctx)
            else:
                raise Quarantine(f"device does not accept {msg.msg_type.value}")
        except FormatError as exc:
            raise Quarantine(str(exc)) from exc

    def _take_header(self, raw: bytes) -> None:
        h = RecipientHeader.from_bytes(raw)
        if h.recipient_id != self.node_id:
            raise FormatError(f"header addressed to {h.recipient_id}")
        self.headers[h.container_id.hex()] = h

    def _try_load(self, cid: str, ctx) -> None:
        if cid not in self.containers or cid not in self.headers:
            return
        c, h = self.containers.pop(cid), self.headers.pop(cid)
        ctx.log("DECRYPT", f"container={cid}")
        before = {k.key_id for ch in self.device.channels for k in self.device.key_info(ch)}
        try:
            device_load_fill(self.device, h, c, ctx.now)
        except SdrKmsError as exc:
            ctx.log("LOAD_REJECT", f"container={cid} reason={exc.reason} {exc}")
            return
        after = sorted({k.key_id for ch in self.device.channels for k in self.device.key_info(ch)} - before)
        ctx.log("LOAD_OK", f"container={cid} new_keys={','.join(after) or '-'}")
        self._maybe_operate(ctx)

    def _maybe_operate(self, ctx) -> None:
        dev = self.device
        if dev.phase == Phase.PREPARATION and any(
                info.state == KeyState.ACTIVE and info.role == "net" for info in dev.key_info("x")):
            dev.advance_phase(Phase.OPERATION)
            ctx.log("PHASE", Phase.OPERATION.value)

    def begin_join(self, lead: str, net: str, ctx, attempt: int = 0) -> None:
        try:
            start_join(self.device, lead, net, ctx, self.join_timeout, self.max_retries, attempt)
        except ChannelBusy as exc:
            ctx.log("JOIN_BUSY", f"net={net} attempt={attempt} {exc}")
            self._schedule_retry(lead, net, attempt, ctx)

    def _schedule_retry(self, lead, net, attempt, ctx) -> None:
        if attempt < self.max_retries:
            ctx.log("JOIN_RETRY", f"net={net} lead={lead} next_attempt={attempt + 1} in={self.retry_backoff}")
            ctx.set_timer(self.retry_backoff, ("join-retry", net, lead, attempt + 1))
        else:
            ctx.log("JOIN_GIVEUP", f"net={net} lead={lead} attempts={attempt + 1}")

    def on_timer(self, token, ctx):
        self.completed = []
        if token[0] == "join":
            js = self.device.join
            if js is None or js.seq != token[1]:
                return
            join_timer(self.device, token, ctx)
            if js.role == "joiner":
                self._schedule_retry(js.peer, js.net_id, js.attempt, ctx)
        elif token[0] == "join-retry":
            _, net, lead, attempt = token
            self.begin_join(lead, net, ctx, attempt)


class RnmsActor(Actor):
    def __init__(self, state: RnmsState):
        self.state = state
        self.node_id = state.peer_id

    def handle(self, msg, ctx):
        if msg.msg_type in (MsgType.CONTAINER, MsgType.HEADER):
            rnms_route(self.state, msg, ctx)
        elif msg.msg_type == MsgType.SYNC_DIGEST:
            try:
                r = Reader(msg.body)
                initial, remote = r.u8(), r.blob()
                r.done()
                delta = delta_for(self.state, remote)
            except FormatError as exc:
                raise Quarantine(str(exc)) from exc
            ctx.send(MsgType.SYNC_DELTA, msg.sender, Channel.WIRED, encode_entries(delta))
            if initial:
                self.start_sync(msg.sender, ctx, initial=False)
        elif msg.msg_type == MsgType.SYNC_DELTA:
            try:
                entries = decode_entries(msg.body)
            except FormatError as exc:
                raise Quarantine(str(exc)) from exc
            changed = merge_into(self.state, entries)
            ctx.log("SYNC_MERGE", f"from={msg.sender} entries={len(entries)} changed={changed}")
        else:
            raise Quarantine(f"RNMS does not accept {msg.msg_type.value}")

    def start_sync(self, peer: str, ctx, initial: bool = True) -> None:
        body = Writer().u8(int(initial)).blob(digest(self.state)).getvalue()
        ctx.send(MsgType.SYNC_DIGEST, peer, Channel.WIRED, body)


class KdmsActor(Actor):
    def __init__(self, node_id: str, tree: dict):
        self.node_id = node_id
        self.tree = tree

    @property
    def station(self):
        return self.tree[self.node_id]

    def handle(self, msg, ctx):
        if msg.msg_type != MsgType.KEY_PACKAGE:
            raise Quarantine(f"KDMS does not accept {msg.msg_type.value}")
        try:
            pkg = KeyPackage.from_bytes(msg.body)
        except FormatError as exc:
            raise Quarantine(str(exc)) from exc
        below = subtree(self.tree, self.node_id)
        targets = [t for t in pkg.targets if t in below]
        self.station.pending.append(pkg)
        ctx.log("KDMS_RECEIVE", f"targets={','.join(targets) or '-'}")
        for child in self.station.children:
            mine = [t for t in targets if t in subtree(self.tree, child)]
            if mine:
                ctx.send(MsgType.KEY_PACKAGE, child, Channel.WIRED, pkg.restricted(mine).to_bytes())
