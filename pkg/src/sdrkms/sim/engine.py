"""Deterministic discrete-event run of a scenario.

Events live in a heap keyed by (tick, sequence).  Handlers never touch the
network directly: their sends, timers and log lines are buffered and applied
after the handler returns, so a quarantined message leaves no trace beyond
its QUARANTINE record.  Every run is a pure function of (config, seed).
"""

import heapq
import random
from collections import Counter
from dataclasses import dataclass, field

from ..container import ArchiveEntry, EntryType
from ..cryptosuite.audit import watching
from ..cryptosuite.registry import SuiteRegistry, activate_pending, register_suite, schedule_activation
from ..cryptosuite.suite import generate_suite
from ..errors import InvariantViolation, SdrKmsError, TrafficError, UnrecoverableCompromise
from ..identity.capabilities import default_capabilities
from ..identity.certificates import TrustStore
from ..identity.dongle import authenticate_operator, provision_dongle
from ..labels import NATO_SECRET, UNCLASSIFIED
from ..lifecycle import KeyKind, KeyRecord, KeyState, emergency_rollover, planned_rollover
from ..nodes.base import Channel, Message, MsgType, NodeContext, Quarantine, enroll, self_enroll_rsms
from ..nodes.device import DeviceState, decrypt_traffic, encrypt_traffic, share_role
from ..nodes.kdms import build_tree, validate_tree
from ..nodes.ngdm import BatchSpec, ngdm_generate_batch
from ..nodes.packaging import KeyPackage, key_entry, seal_for_recipients
from ..nodes.rnms import RnmsState
from ..nodes.rsms import RsmsState, rsms_package_update
from ..rng import Drbg, derive
from .actors import DeviceActor, KdmsActor, PassiveActor, RnmsActor
from .audit import AuditLog, SimClock
from .scenario import NET_LABEL, ScenarioConfig

SIM = "sim"
OUTCOMES = ("DELIVER", "LOST", "QUARANTINE")


class SimContext(NodeContext):
    def __init__(self, sim: "Simulation", node_id: str):
        self.sim = sim
        self.node_id = node_id
        self.now = sim.clock.now
        self.actions: list[tuple] = []

    def send(self, msg_type, receiver, channel, body):
        self.actions.append(("send", MsgType(msg_type), receiver, Channel(channel), bytes(body)))

    def set_timer(self, delay, token):
        self.actions.append(("timer", delay, token))

    def log(self, event, detail=""):
        self.actions.append(("log", event, detail))

    def secret(self, data, label):
        self.sim.secrets.setdefault(bytes(data), label)

    def flush(self) -> None:
        for action in self.actions:
            if action[0] == "log":
                self.sim.log.append(self.sim.clock.now, self.node_id, action[1], action[2])
            elif action[0] == "send":
                self.sim.send(self.node_id, *action[1:])
            else:
                self.sim.schedule(self.sim.clock.now + action[1], "timer", (self.node_id, action[2]))
        self.actions.clear()


@dataclass
class RunResult:
    config: ScenarioConfig
    seed: int
    log: AuditLog
    devices: dict
    rnms: dict
    kdms: dict
    rsms: RsmsState
    wire: list
    crypto_ops: dict
    unrecoverable: list = field(default_factory=list)
    secrets: dict = field(default_factory=dict, repr=False)

    def log_text(self) -> str:
        return self.log.text()


class Simulation:
    def __init__(self, cfg: ScenarioConfig, seed: int | None = None):
        self.cfg = cfg
        self.seed = cfg.seed if seed is None else seed
        self.master = derive(b"sdrkms-scenario", cfg.name, self.seed)
        self.loss_rng = random.Random(int.from_bytes(derive(self.master, "loss")[:8], "big"))
        self.log = AuditLog()
        self.clock = SimClock()
        self.queue: list = []
        self.seq = 0
        self.msg_seq = 0
        self.wire: list[Message] = []
        self.outcome: dict[int, str] = {}
        self.crypto_ops: dict[str, Counter] = {nid: Counter() for nid in cfg.nodes}
        self.current = SIM
        self.secrets: dict[bytes, str] = {}
        self.unrecoverable: list[str] = []
        self._setup()

    # -- setup -----------------------------------------------------------------------

    def _setup(self) -> None:
        cfg, master = self.cfg, self.master
        self.caps = default_capabilities()
        self.suite = generate_suite(cfg.security_bits, derive(master, "suite", 1), suite_id=1,
                                    depth=cfg.gmr_depth)
        registry = SuiteRegistry.of(self.suite)
        rsms_id = cfg.ids_with_role("RSMS")[0]
        rsms_ident = self_enroll_rsms(rsms_id, self.suite, master, NATO_SECRET, 0, cfg.cert_validity,
                                      self.caps, depth=max(cfg.gmr_depth, 10))
        self.rsms = RsmsState(rsms_ident, registry, TrustStore([rsms_ident.cert]),
                              Drbg(derive(master, "rsms-rng")), self.caps)
        self.rsms_outbox: list = []
        self.identities = {rsms_id: rsms_ident}
        for spec in cfg.nodes.values():
            if spec.role != "RSMS":
                clearance = spec.clearance or NATO_SECRET
                self.identities[spec.node_id] = enroll(rsms_ident.issuer, spec.node_id, spec.role, self.suite,
                                                       master, clearance, 0, cfg.cert_validity, self.caps,
                                                       depth=cfg.gmr_depth)
        self.certs = {nid: ident.cert for nid, ident in self.identities.items()}
        for cert in self.certs.values():
            if cert.subject_id != rsms_id:
                self.rsms.trust_store.cache(cert, 0)

        self.tree = build_tree(cfg.kdms) if cfg.kdms else {}
        if self.tree:
            validate_tree(self.tree)
        self.actors: dict = {}
        self.devices: dict[str, DeviceState] = {}
        self.rnms: dict[str, RnmsState] = {}
        self.ngdm_rng: dict[str, Drbg] = {}
        for spec in cfg.nodes.values():
            nid = spec.node_id
            if spec.role == "DEVICE":
                ts = TrustStore([rsms_ident.cert])
                for cert in self.certs.values():
                    if cert.subject_id != rsms_id:
                        ts.cache(cert, 0)
                dev = DeviceState(self.identities[nid], ts, registry, self.caps, seed=master)
                dev.join_timeout = cfg.join_timeout
                password = derive(master, "password", nid).hex()
                dongle = provision_dongle(f"op-{nid}", password, derive(master, "share", nid), "OPERATOR",
                                          spec.clearance)
                dev.session = authenticate_operator(dongle, password, dev)
                self.devices[nid] = dev
                self.actors[nid] = DeviceActor(dev, cfg.join_timeout, cfg.max_retries, cfg.retry_backoff)
            elif spec.role == "RNMS":
                self.rnms[nid] = RnmsState(nid)
                self.actors[nid] = RnmsActor(self.rnms[nid])
            elif spec.role == "KDMS":
                self.tree.setdefault(nid, build_tree({nid: []})[nid])
                self.actors[nid] = KdmsActor(nid, self.tree)
            elif spec.role == "NGDM":
                self.ngdm_rng[nid] = Drbg(derive(master, "ngdm-rng", nid))
                self.actors[nid] = PassiveActor(nid, self.identities[nid])
            else:
                self.actors[nid] = PassiveActor(nid, self.rsms)
        self.log.append(0, SIM, "START", f"scenario={cfg.name} seed={self.seed} "
                        f"suite={self.suite.suite_id} bits={cfg.security_bits} nodes={len(cfg.nodes)}")
        for nid, dev in self.devices.items():
            self.log.append(0, nid, "OPERATOR_LOGIN", f"clearance={dev.session.clearance}")
        for ev in cfg.timeline:
            self.schedule(ev.tick, "event", ev)

    # -- scheduling -------------------------------------------------------------------

    def schedule(self, tick: int, kind: str, payload) -> None:
        self.seq += 1
        heapq.heappush(self.queue, (tick, self.seq, kind, payload))

    def send(self, sender: str, msg_type: MsgType, receiver: str, channel: Channel, body: bytes) -> Message:
        self.msg_seq += 1
        msg = Message(msg_type, sender, receiver, channel, body, self.msg_seq)
        self.wire.append(msg)
        self._scan_wire(msg)
        self.log.append(self.clock.now, sender, "SEND", msg.summary())
        model = self.cfg.channels[channel.value.lower()]
        lost = channel != Channel.MANUAL and (model.loss >= 1.0 or (
            model.loss > 0.0 and self.loss_rng.random() < model.loss))
        if lost:
            self.outcome[msg.msg_id] = "LOST"
            self.log.append(self.clock.now, receiver, "LOST", msg.summary())
        else:
            self.schedule(self.clock.now + model.latency, "deliver", msg)
        return msg

    def _run_as(self, node: str, fn, *args):
        prev, self.current = self.current, node
        try:
            return fn(*args)
        finally:
            self.current = prev

    def _count(self, op: str) -> None:
        self.crypto_ops.setdefault(self.current, Counter())[op] += 1

    def run(self) -> RunResult:
        with watching(self._count):
            while self.queue:
                tick, _, kind, payload = heapq.heappop(self.queue)
                self.clock.advance(tick)
                if kind == "deliver":
                    self._deliver(payload)
                elif kind == "timer":
                    node, token = payload
                    ctx = SimContext(self, node)
                    self._run_as(node, self.actors[node].on_timer, token, ctx)
                    ctx.flush()
                else:
                    self._event(payload)
                self._after_step()
        self._finish()
        return RunResult(self.cfg, self.seed, self.log, self.devices, self.rnms, self.tree, self.rsms,
                         self.wire, {k: dict(v) for k, v in self.crypto_ops.items()}, self.unrecoverable,
                         self.secrets)

    def _deliver(self, msg: Message) -> None:
        actor = self.actors.get(msg.receiver)
        ctx = SimContext(self, msg.receiver)
        try:
            if actor is None:
                raise Quarantine(f"unknown receiver {msg.receiver}")
            self._run_as(msg.receiver, actor.handle, msg, ctx)
        except Quarantine as exc:
            self.outcome[msg.msg_id] = "QUARANTINE"
            self.log.append(self.clock.now, msg.receiver, "QUARANTINE", f"{msg.summary()} reason={exc}")
            return
        self.outcome[msg.msg_id] = "DELIVER"
        self.log.append(self.clock.now, msg.receiver, "DELIVER", msg.summary())
        ctx.flush()
        if isinstance(actor, DeviceActor):
            for net in actor.completed:
                self._probe(net, [actor.node_id])

    # -- timeline events ---------------------------------------------------------------

    def _event(self, ev) -> None:
        handler = getattr(self, f"_ev_{ev.kind.lower()}")
        self.log.append(self.clock.now, SIM, "EVENT", f"{ev.kind} " + " ".join(f"{k}={v}" for k, v in ev.params))
        handler(ev)

    def _ev_package_update(self, ev) -> None:
        name = ev.get("waveform", "waveform")
        size = int(ev.get("size", "256"))
        blob = Drbg(derive(self.master, "waveform", name)).randbytes(size)
        entries = [ArchiveEntry(EntryType.WAVEFORM, name, UNCLASSIFIED, blob)]
        self._package(entries, ev.ids("targets"), "PACKAGE")

    def _ev_algorithm_update(self, ev) -> None:
        suite_id = int(ev.get("suite_id"))
        bits = int(ev.get("security_bits", str(self.cfg.security_bits)))
        suite = generate_suite(bits, derive(self.master, "suite", suite_id), suite_id=suite_id,
                               depth=self.cfg.gmr_depth)
        reg = register_suite(self.rsms.registry, suite)
        self.rsms.registry = schedule_activation(reg, suite_id)
        entries = [ArchiveEntry(EntryType.ALGORITHM_UPDATE, f"suite/{suite_id}", UNCLASSIFIED, suite.to_bytes())]
        self._package(entries, ev.ids("targets"), "ALGORITHM_PACKAGE")

    def _package(self, entries, targets, event: str) -> None:
        recipients = [self.certs[t] for t in targets]
        try:
            container, headers = self._run_as(self.rsms.node_id, rsms_package_update, self.rsms, entries,
                                              recipients, self.clock.now)
        except SdrKmsError as exc:
            self.log.append(self.clock.now, self.rsms.node_id, "PACKAGE_FAIL", f"reason={exc.reason} {exc}")
            return
        self.rsms_outbox.append((container, headers))
        self.log.append(self.clock.now, self.rsms.node_id, event,
                        f"container={container.container_id.hex()} suite={container.suite_id} "
                        f"headers={len(headers)} targets={','.join(targets) or '-'}")

    def _ev_manual_transfer(self, ev) -> None:
        src, dst = ev.get("from"), ev.get("to")
        dst_role = self.cfg.nodes[dst].role
        if self.cfg.nodes[src].role == "RSMS":
            items, self.rsms_outbox = self.rsms_outbox, []
        else:
            items = [self._ngdm_share(src, ev)]
        for container, headers in items:
            if dst_role == "KDMS":
                self.send(src, MsgType.KEY_PACKAGE, dst, Channel.MANUAL,
                          KeyPackage.build(container, headers).to_bytes())
            else:
                self.send(src, MsgType.CONTAINER, dst, Channel.MANUAL, container.to_bytes())
                for h in headers:
                    self.send(src, MsgType.HEADER, dst, Channel.MANUAL, h.to_bytes())

    def _ngdm_share(self, src: str, ev):
        net = self.cfg.nets[ev.get("net")]
        slot, state = ev.get("slot"), KeyState(ev.get("state", "ACTIVE"))
        index = net.generators.index(src)
        targets = ev.ids("targets") or [net.lead]
        spec = BatchSpec(1, NET_LABEL, self.suite.suite_id, net.net_id, share_role(slot, index, net.shares), state)
        rec = self._run_as(src, ngdm_generate_batch, spec, derive(self.master, "ngdm", src, net.net_id, slot),
                           self.rsms.registry)[0]
        rec = KeyRecord(f"{net.net_id}/{slot}/share{index}", rec.kind, rec.role, rec.key_bytes,
                        rec.classification, rec.infrastructure_id, rec.state)
        self.secrets.setdefault(bytes(rec.key_bytes), f"{src}:{rec.key_id}")
        ident = self.identities[src]
        container, headers = self._run_as(
            src, seal_for_recipients, ident.issuer, self.suite, [key_entry(rec.key_id, [rec])],
            [self.certs[t] for t in targets], self.ngdm_rng[src], self.rsms.trust_store, self.clock.now)
        rec.destroy()
        self.log.append(self.clock.now, src, "SHARE_SEALED",
                        f"net={net.net_id} slot={slot} index={index}/{net.shares} state={state.value} "
                        f"container={container.container_id.hex()} targets={','.join(targets)}")
        return container, headers

    def _ev_net_join(self, ev) -> None:
        net = self.cfg.nets[ev.get("net")]
        joiner = ev.get("joiner")
        actor = self.actors[joiner]
        ctx = SimContext(self, joiner)
        self._run_as(joiner, actor.begin_join, net.lead, net.net_id, ctx)
        ctx.flush()

    def _authorised(self, ev) -> bool:
        who = ev.get("authorized_by", self.rsms.node_id)
        role = self.cfg.nodes[who].role
        if role != self.cfg.rollover_authority or not self.caps.allows(role, "authorize_rollover"):
            self.log.append(self.clock.now, who, "ROLLOVER_DENIED", f"role={role} net={ev.get('net')}")
            return False
        return True

    def _rollover(self, ev, fn, label: str) -> None:
        net = self.cfg.nets[ev.get("net")]
        for member in net.members:
            dev = self.devices[member]
            store = dev.channels["x"].store
            held = [r for r in store.values() if r.infrastructure_id == net.net_id
                    and r.state in (KeyState.ACTIVE, KeyState.STANDBY)]
            if not held:
                self.log.append(self.clock.now, member, f"{label}_SKIP", f"net={net.net_id} no keys held")
                continue
            try:
                _, report = fn(store, net.net_id, self.clock.now)
            except UnrecoverableCompromise as exc:
                for r in held:
                    if r.state == KeyState.ACTIVE:
                        r.destroy()
                self.unrecoverable.append(f"{member}:{net.net_id}")
                self.log.append(self.clock.now, member, "UNRECOVERABLE", f"net={net.net_id} reason={exc.reason} {exc}")
                continue
            for line in report.audit_lines(member):
                tick, node, event, detail = line.split("|", 3)
                self.log.append(self.clock.now, node, event, detail)

    def _ev_compromise(self, ev) -> None:
        if not self._authorised(ev):
            return
        self._rollover(ev, emergency_rollover, "ROLLOVER")
        net = self.cfg.nets[ev.get("net")]
        self._probe(net.net_id, [m for m in net.members if m != net.lead])

    def _ev_rollover(self, ev) -> None:
        self._rollover(ev, planned_rollover, "ROLLOVER")
        holders = [("rsms", self.rsms)] + list(self.devices.items())
        for nid, holder in holders:
            before = holder.registry.active_id
            holder.registry = activate_pending(holder.registry)
            if holder.registry.active_id != before:
                node = self.rsms.node_id if nid == "rsms" else nid
                self.log.append(self.clock.now, node, "SUITE_ACTIVE", f"suite={holder.registry.active_id} "
                                f"previous={before}")
        net = self.cfg.nets[ev.get("net")]
        self._probe(net.net_id, [m for m in net.members if m != net.lead])

    def _ev_sync(self, ev) -> None:
        a = ev.get("a")
        ctx = SimContext(self, a)
        self.actors[a].start_sync(ev.get("b"), ctx)
        ctx.flush()

    def _probe(self, net_id: str, members) -> None:
        """Encrypted round trip lead -> member on the net key."""
        lead = self.devices[self.cfg.nets[net_id].lead]
        text = f"probe net={net_id} tick={self.clock.now}".encode()
        try:
            frame = self._run_as(lead.device_id, encrypt_traffic, lead, net_id, text)
        except TrafficError as exc:
            self.log.append(self.clock.now, lead.device_id, "TRAFFIC_FAIL", f"net={net_id} sender {exc}")
            return
        for m in members:
            try:
                ok = self._run_as(m, decrypt_traffic, self.devices[m], net_id, frame) == text
            except TrafficError as exc:
                self.log.append(self.clock.now, m, "TRAFFIC_FAIL", f"net={net_id} from={lead.device_id} {exc}")
                continue
            self.log.append(self.clock.now, m, "TRAFFIC_OK" if ok else "TRAFFIC_FAIL",
                            f"net={net_id} from={lead.device_id}")

    # -- invariants --------------------------------------------------------------------

    def _violation(self, what: str) -> None:
        rec = self.log.append(self.clock.now, SIM, "INVARIANT", what)
        exc = InvariantViolation(f"{rec.line()}")
        exc.log = self.log
        raise exc

    def _after_step(self) -> None:
        for nid, dev in self.devices.items():
            seen = {}
            for channel, rec in dev.records():
                if rec.state != KeyState.DESTROYED:
                    if rec.key_bytes:
                        self.secrets.setdefault(bytes(rec.key_bytes), f"{nid}:{rec.key_id}")
                elif rec.key_bytes:
                    self._violation(f"{nid}: destroyed key {rec.key_id} still holds bytes")
                if rec.kind == KeyKind.SESSION and rec.state == KeyState.ACTIVE and dev.join is None:
                    self._violation(f"{nid}: session key {rec.key_id} active outside a join")
                if rec.kind != KeyKind.SESSION and rec.state in (KeyState.ACTIVE, KeyState.STANDBY) \
                        and not rec.role.startswith("share/"):
                    slot = (channel, rec.infrastructure_id, rec.state)
                    if slot in seen:
                        self._violation(f"{nid}: two {rec.state.value} keys for {rec.infrastructure_id} "
                                        f"({seen[slot]}, {rec.key_id})")
                    seen[slot] = rec.key_id
            for requested, key_id, served in dev.access_log:
                if served and key_id not in dev.channels[requested].store:
                    self._violation(f"{nid}: key {key_id} served through channel {requested}")
        for nid in self.rnms:
            if sum(self.crypto_ops.get(nid, Counter()).values()):
                self._violation(f"{nid}: RNMS performed a secret-key operation")

    def _scan_wire(self, msg: Message) -> None:
        for secret, label in self.secrets.items():
            if secret in msg.body:
                self._violation(f"red key {label} on the wire in {msg.summary()}")

    def _finish(self) -> None:
        for msg in self.wire:
            self._scan_wire(msg)
            if self.outcome.get(msg.msg_id) not in OUTCOMES:
                self._violation(f"message #{msg.msg_id} has no outcome")
        for nid, state in self.rnms.items():
            snap = state.snapshot()
            for secret, label in self.secrets.items():
                if secret in snap:
                    self._violation(f"{nid} state holds red key {label}")
        for nid in self.cfg.nodes:
            ops = self.crypto_ops.get(nid, Counter())
            self.log.append(self.clock.now, nid, "CRYPTO_OPS",
                            f"decapsulate={ops['decapsulate']} keystream={ops['keystream']}")
        counts = Counter(self.outcome.values())
        self.log.append(self.clock.now, SIM, "END",
                        f"messages={len(self.wire)} delivered={counts['DELIVER']} lost={counts['LOST']} "
                        f"quarantined={counts['QUARANTINE']} unrecoverable={len(self.unrecoverable)}")


def run_scenario(config: ScenarioConfig, seed: int | None = None) -> RunResult:
    """Run ``config`` to quiescence; ``seed`` overrides the scenario's master seed."""
    return Simulation(config, seed).run()
