"""Radio device: channel compartments, fill loading, zeroisation, net traffic.

Each channel owns a private key store.  Plaintext key bytes leave a
compartment only through :meth:`DeviceState.read_key`, which refuses to serve
a key from any channel other than the one named, and records every call.
"""

import hashlib
import hmac
from dataclasses import dataclass, field
from enum import Enum

from ..container import EntryType, FullContainer, RecipientHeader, open_container
from ..cryptosuite.keystream import SymmetricKey, keystream, potp_xor
from ..cryptosuite.registry import SuiteRegistry, lookup_suite
from ..encoding import Reader, Writer
from ..errors import (ClearanceError, CompartmentError, FormatError, KeyStateError, RekeyError,
                      TrafficError)
from ..identity.capabilities import CapabilityList
from ..identity.certificates import Certificate, TrustStore
from ..identity.dongle import OperatorSession
from ..labels import NATIONAL_CONFIDENTIAL, NATO_SECRET, ClassificationLabel
from ..lifecycle import (KeyKind, KeyRecord, KeyState, apply_algorithm_update, decode_key_store,
                         encode_key_store)
from ..rng import Drbg, derive
from .base import NodeIdentity
from .ngdm import combine_operational_keys

SHARE_PREFIX = "share/"
TRAFFIC_NONCE = 8
TRAFFIC_TAG = 16


class Phase(str, Enum):
    PREPARATION = "PREPARATION"
    OPERATION = "OPERATION"
    RECOVERY = "RECOVERY"


_NEXT_PHASE = {Phase.PREPARATION: Phase.OPERATION, Phase.OPERATION: Phase.RECOVERY,
               Phase.RECOVERY: Phase.PREPARATION}

DEFAULT_CHANNELS = (("x", NATO_SECRET), ("y", NATIONAL_CONFIDENTIAL))


@dataclass
class ChannelCompartment:
    name: str
    label: ClassificationLabel
    store: dict = field(default_factory=dict, repr=False)
    shares: dict = field(default_factory=dict, repr=False)
    busy: bool = False


@dataclass(frozen=True)
class KeyInfo:
    """Key metadata without the key bytes."""

    key_id: str
    kind: KeyKind
    role: str
    infrastructure_id: str
    state: KeyState
    classification: ClassificationLabel


def share_role(slot: str, index: int, total: int) -> str:
    return f"{SHARE_PREFIX}{slot}/{index}/{total}"


def parse_share_role(role: str) -> tuple[str, int, int]:
    try:
        slot, index, total = role[len(SHARE_PREFIX):].split("/")
        index, total = int(index), int(total)
    except ValueError:
        raise FormatError(f"bad share role {role!r}") from None
    if not 0 <= index < total:
        raise FormatError(f"share index out of range in {role!r}")
    return slot, index, total


class DeviceState:
    def __init__(self, identity: NodeIdentity, trust_store: TrustStore, registry: SuiteRegistry,
                 caps: CapabilityList | None = None, channels=DEFAULT_CHANNELS, seed: bytes = b""):
        if len(channels) < 2:
            raise ValueError("a device has at least two channels")
        self.identity = identity
        self.trust_store = trust_store
        self.registry = registry
        self.caps = caps
        self.channels = {name: ChannelCompartment(name, label) for name, label in channels}
        self.session: OperatorSession | None = None
        self.phase = Phase.PREPARATION
        self.tampered = False
        self.loaded: list[str] = []
        self.files: dict[str, bytes] = {}
        self.access_log: list[tuple] = []
        self.join = None
        self.join_seq = 0
        self.rng = Drbg(derive(seed, "device", identity.node_id))

    @property
    def device_id(self) -> str:
        return self.identity.node_id

    # -- compartment accessors --------------------------------------------------

    def read_key(self, channel: str, key_id: str) -> bytes:
        comp = self.channels.get(channel)
        rec = comp.store.get(key_id) if comp is not None else None
        self.access_log.append((channel, key_id, rec is not None))
        if rec is None:
            raise CompartmentError(f"no key {key_id!r} in channel {channel!r}")
        if rec.state == KeyState.DESTROYED:
            raise KeyStateError(f"{key_id} is destroyed")
        return bytes(rec.key_bytes)

    def key_info(self, channel: str) -> list[KeyInfo]:
        return [KeyInfo(r.key_id, r.kind, r.role, r.infrastructure_id, r.state, r.classification)
                for r in self.channels[channel].store.values()]

    def find_key(self, channel: str, infrastructure_id: str, state=KeyState.ACTIVE) -> str | None:
        for rec in self.channels[channel].store.values():
            if rec.infrastructure_id == infrastructure_id and rec.state == state:
                return rec.key_id
        return None

    def channel_for(self, label: ClassificationLabel) -> str:
        for name, comp in self.channels.items():
            if comp.label == label:
                return name
        raise ClearanceError(f"no channel compartment handles {label}")

    def install_key(self, channel: str, record: KeyRecord) -> None:
        """Place a record, retiring whatever it supersedes in the same slot."""
        comp = self.channels[channel]
        if record.classification != comp.label:
            raise ClearanceError(f"{record.key_id} labelled {record.classification}, channel {channel} "
                                 f"holds {comp.label}")
        old = comp.store.get(record.key_id)
        if old is not None:
            old.destroy()
        if record.state in (KeyState.ACTIVE, KeyState.STANDBY) and record.kind != KeyKind.SESSION:
            for other in comp.store.values():
                if (other.infrastructure_id == record.infrastructure_id and other.state == record.state
                        and other.kind == record.kind):
                    other.destroy()
        comp.store[record.key_id] = record

    def records(self):
        """(channel, record) pairs; for invariant scans inside the package."""
        for name, comp in self.channels.items():
            for rec in comp.store.values():
                yield name, rec
            for rec in comp.shares.values():
                yield name, rec

    # -- phases ---------------------------------------------------------------------

    def advance_phase(self, target: Phase) -> None:
        target = Phase(target)
        if _NEXT_PHASE[self.phase] != target:
            raise KeyStateError(f"phase {self.phase.value} -> {target.value} not allowed")
        self.phase = target

    def snapshot(self) -> bytes:
        w = Writer().raw(b"DEVS").u16(1).text(self.device_id).text(self.phase.value)
        w.u8(int(self.tampered)).u8(int(self.session is not None)).u32(len(self.channels))
        for name, comp in self.channels.items():
            w.text(name).u8(comp.label.to_byte()).u8(int(comp.busy))
            w.blob(encode_key_store(comp.store)).blob(encode_key_store(comp.shares))
        w.u32(len(self.loaded))
        for cid in self.loaded:
            w.text(cid)
        w.u32(len(self.files))
        for name in sorted(self.files):
            w.text(name).blob(self.files[name])
        return w.getvalue()


# -- fill loading ----------------------------------------------------------------

def _combine_shares(device: DeviceState, channel: str) -> list[str]:
    comp = device.channels[channel]
    groups: dict[tuple, list[KeyRecord]] = {}
    for rec in comp.shares.values():
        slot, _, total = parse_share_role(rec.role)
        groups.setdefault((rec.infrastructure_id, slot, total), []).append(rec)
    made = []
    for (infra, slot, total), recs in groups.items():
        indices = {parse_share_role(r.role)[1] for r in recs}
        if len(indices) < total:
            continue
        recs = sorted(recs, key=lambda r: parse_share_role(r.role)[1])
        combined = combine_operational_keys([bytes(r.key_bytes) for r in recs])
        first = recs[0]
        key_id = f"{infra}:{slot}"
        device.install_key(channel, KeyRecord(key_id, KeyKind.OSM, "net", combined, first.classification,
                                              infra, first.state))
        for r in recs:
            r.destroy()
            del comp.shares[r.key_id]
        made.append(key_id)
    return made


def device_load_fill(device: DeviceState, header: RecipientHeader, container: FullContainer, now: int):
    """Open a fill container and load it, all or nothing.

    KEY_MATERIAL entries hold key stores; each record lands in the channel
    compartment whose label equals the entry label.  A container already
    loaded is verified again and then ignored.
    """
    if device.tampered:
        raise KeyStateError("device is marked tampered")
    if device.session is None:
        raise ClearanceError("no operator session")
    entries = open_container(container, header, device.identity.encaps, device.trust_store, now,
                             device.registry, recipient_id=device.device_id, caps=device.caps)
    cid = container.container_id.hex()
    if cid in device.loaded:
        return device
    allowed = [device.session.clearance, device.identity.cert.clearance]
    planned, registry, certs, files = [], device.registry, [], {}
    for e in entries:
        for who in allowed:
            if not who.dominates(e.classification):
                raise ClearanceError(f"entry {e.name!r} is {e.classification}; clearance is {who}")
        if e.entry_type == EntryType.KEY_MATERIAL:
            channel = device.channel_for(e.classification)
            for rec in decode_key_store(e.content).values():
                if rec.classification != e.classification:
                    raise ClearanceError(f"{rec.key_id} label differs from its entry label")
                if rec.kind == KeyKind.SESSION or rec.state not in (KeyState.ACTIVE, KeyState.STANDBY):
                    raise KeyStateError(f"{rec.key_id}: cannot load a {rec.kind.value}/{rec.state.value} key")
                if rec.role.startswith(SHARE_PREFIX):
                    parse_share_role(rec.role)
                planned.append((channel, rec))
        elif e.entry_type == EntryType.ALGORITHM_UPDATE:
            registry, _ = apply_algorithm_update(registry, [e])
        elif e.entry_type == EntryType.CERTIFICATE:
            certs.append(e.content)
        else:
            files[e.name] = e.content

    # commit
    touched = []
    for channel, rec in planned:
        if rec.role.startswith(SHARE_PREFIX):
            comp = device.channels[channel]
            if rec.key_id in comp.shares:
                comp.shares[rec.key_id].destroy()
            comp.shares[rec.key_id] = rec
        else:
            device.install_key(channel, rec)
        if channel not in touched:
            touched.append(channel)
    for channel in touched:
        _combine_shares(device, channel)
    device.registry = registry
    device.files.update(files)
    for raw in certs:
        device.trust_store.cache(Certificate.from_bytes(raw), now)
    device.loaded.append(cid)
    return device


# -- zeroisation -----------------------------------------------------------------------

def device_zeroize(device: DeviceState, scope: str = "mission"):
    """Destroy every key in ``scope`` (a channel name or "mission")."""
    names = list(device.channels) if scope == "mission" else [scope]
    for name in names:
        comp = device.channels[name]
        for rec in comp.store.values():
            if rec.state != KeyState.DESTROYED:
                rec.destroy()
        for rec in comp.shares.values():
            rec.destroy()
        comp.shares.clear()
        comp.busy = False
    if device.join is not None and (scope == "mission" or device.join.channel in names):
        device.join = None
    if scope == "mission" and device.phase == Phase.OPERATION:
        device.phase = Phase.RECOVERY
    return device


def mark_tampered(device: DeviceState):
    device.tampered = True
    device.session = None
    return device_zeroize(device, "mission")


# -- net traffic ------------------------------------------------------------------------

def _traffic_keys(device: DeviceState, net_id: str, nonce: bytes):
    key_id = device.find_key("x", net_id)
    if key_id is None:
        raise TrafficError(f"{device.device_id} holds no active key for net {net_id}")
    key = device.read_key("x", key_id)
    enc = hashlib.sha256(b"sdrkms-traffic-enc" + key + nonce).digest()
    mac = hashlib.sha256(b"sdrkms-traffic-mac" + key).digest()
    return enc, mac


def encrypt_traffic(device: DeviceState, net_id: str, plaintext: bytes) -> bytes:
    suite = device.registry.active
    for _ in range(16):
        nonce = device.rng.randbytes(TRAFFIC_NONCE)
        enc, mac = _traffic_keys(device, net_id, nonce)
        try:
            body = potp_xor(keystream(SymmetricKey(enc, suite.suite_id), suite, len(plaintext)), plaintext)
            break
        except RekeyError:
            continue
    else:  # pragma: no cover - needs 16 degenerate draws in a row
        raise RekeyError("could not find a usable traffic nonce")
    head = Writer().u16(suite.suite_id).raw(nonce).getvalue()
    tag = hmac.new(mac, head + body, "sha256").digest()[:TRAFFIC_TAG]
    return head + body + tag


def decrypt_traffic(device: DeviceState, net_id: str, frame: bytes) -> bytes:
    try:
        r = Reader(frame)
        suite = lookup_suite(device.registry, r.u16())
        nonce = r.raw(TRAFFIC_NONCE)
        body = r.raw(r.remaining - TRAFFIC_TAG)
        tag = r.raw(TRAFFIC_TAG)
    except (FormatError, KeyError) as exc:
        raise TrafficError(f"malformed traffic frame: {exc}") from exc
    enc, mac = _traffic_keys(device, net_id, nonce)
    head = frame[:2 + TRAFFIC_NONCE]
    if not hmac.compare_digest(hmac.new(mac, head + body, "sha256").digest()[:TRAFFIC_TAG], tag):
        raise TrafficError("traffic authentication failed")
    try:
        return potp_xor(keystream(SymmetricKey(enc, suite.suite_id), suite, len(body)), body)
    except RekeyError as exc:
        raise TrafficError(str(exc)) from exc
