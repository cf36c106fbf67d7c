"""Certificate-based net join over the borrowed channel y.

    joiner -> lead  JOIN_REQUEST       cert_j, nonce_j, sig_j(request)
    lead -> joiner  JOIN_CHALLENGE     cert_l, KEM ciphertext, nonce_l, sig_l(th2)
    joiner -> lead  SESSION_ESTABLISH  sig_j(th3), mac_s(th3)
    lead -> joiner  NET_KEY_TRANSFER   sealed box of the net key store under s

th1..th3 chain SHA-256 over every message so far; s is the KEM shared key.
Both ends hold s as a SESSION record in channel y and destroy it when the
exchange ends, whichever way it ends.  Channel y stays busy meanwhile.
"""

import hashlib
import hmac
from dataclasses import dataclass

from ..cryptosuite.cramer_shoup import CsCiphertext, cs_decapsulate, cs_encapsulate
from ..cryptosuite.gmr import verify_encoded
from ..cryptosuite.keystream import SymmetricKey, initial_state, keystream, potp_xor
from ..cryptosuite.registry import lookup_suite
from ..encoding import Reader, Writer
from ..errors import (ChannelBusy, DecapsulationError, FormatError, JoinAborted, RekeyError,
                      SdrKmsError, SuiteNotFound)
from ..identity.certificates import Certificate, verify_certificate
from ..lifecycle import KeyKind, KeyRecord, KeyState, decode_key_store, encode_key_store
from .base import BOX_MAGIC, Channel, LocalContext, Message, MsgType, NodeContext
from .device import DeviceState

NONCE_BYTES = 16
TAG_BYTES = 32
JOIN_CHANNEL = "y"
NET_CHANNEL = "x"
DEFAULT_TIMEOUT = 20


@dataclass
class JoinState:
    role: str              # "joiner" or "lead"
    net_id: str
    peer: str
    seq: int
    step: str
    th: bytes = b""
    session_key_id: str | None = None
    peer_cert: Certificate | None = None
    attempt: int = 0
    max_retries: int = 0
    timeout: int = DEFAULT_TIMEOUT
    channel: str = JOIN_CHANNEL


def _h(*parts: bytes) -> bytes:
    h = hashlib.sha256(b"sdrkms-join")
    for p in parts:
        h.update(len(p).to_bytes(4, "big") + p)
    return h.digest()


def _session_keys(session: bytes, th: bytes) -> tuple[bytes, bytes]:
    return _h(b"enc", session, th), _h(b"mac", session, th)


def seal_box(session: bytes, th: bytes, plaintext: bytes, suite) -> bytes:
    """Encrypt-then-MAC under a join session key; the only NET_KEY_TRANSFER body."""
    enc, mac = _session_keys(session, th)
    ctr = 0
    while True:
        k = _h(b"stream", enc, ctr.to_bytes(4, "big"))
        try:
            initial_state(k, suite)
            break
        except RekeyError:
            ctr += 1
    ct = potp_xor(keystream(SymmetricKey(k, suite.suite_id), suite, len(plaintext)), plaintext)
    body = Writer().raw(BOX_MAGIC).u32(ctr).blob(ct).getvalue()
    return body + hmac.new(mac, body, "sha256").digest()


def open_box(session: bytes, th: bytes, box: bytes, suite) -> bytes:
    enc, mac = _session_keys(session, th)
    body, tag = box[:-TAG_BYTES], box[-TAG_BYTES:]
    if len(box) < TAG_BYTES or not hmac.compare_digest(hmac.new(mac, body, "sha256").digest(), tag):
        raise FormatError("session box authentication failed")
    r = Reader(body)
    r.expect(BOX_MAGIC)
    ctr, ct = r.u32(), r.blob()
    r.done()
    k = _h(b"stream", enc, ctr.to_bytes(4, "big"))
    return potp_xor(keystream(SymmetricKey(k, suite.suite_id), suite, len(ct)), ct)


# -- bookkeeping --------------------------------------------------------------------

def _store_session(device: DeviceState, js: JoinState, key: bytes, ctx: NodeContext) -> None:
    key_id = f"session/{js.net_id}/{js.peer}/{js.seq}"
    comp = device.channels[js.channel]
    rec = KeyRecord(key_id, KeyKind.SESSION, "session", key, comp.label, f"join:{js.net_id}",
                    KeyState.ACTIVE)
    device.install_key(js.channel, rec)
    js.session_key_id = key_id
    ctx.secret(key, f"{device.device_id}:{key_id}")


def _finish(device: DeviceState, ctx: NodeContext, event: str, detail: str) -> str | None:
    js = device.join
    if js is None:
        return None
    if js.session_key_id is not None:
        rec = device.channels[js.channel].store.get(js.session_key_id)
        if rec is not None and rec.state != KeyState.DESTROYED:
            rec.destroy()
            ctx.log("SESSION_DESTROY", js.session_key_id)
    device.channels[js.channel].busy = False
    device.join = None
    ctx.log(event, detail)
    return event


def _sign(device: DeviceState, data: bytes) -> bytes:
    return device.identity.issuer.sign(data)


def _peer_ok(device: DeviceState, cert: Certificate, claimed: str, now: int) -> str | None:
    verdict = verify_certificate(cert, device.trust_store, now)
    if not verdict:
        return f"certificate {verdict.reason.value}"
    if cert.subject_id != claimed:
        return "certificate subject does not match sender"
    if cert.role != "DEVICE":
        return f"certificate role {cert.role} may not join"
    return None


# -- joiner side --------------------------------------------------------------------------

def start_join(device: DeviceState, lead_id: str, net_id: str, ctx: NodeContext,
               timeout: int = DEFAULT_TIMEOUT, max_retries: int = 0, attempt: int = 0) -> None:
    comp = device.channels[JOIN_CHANNEL]
    if comp.busy or device.join is not None:
        raise ChannelBusy(f"{device.device_id}: channel {JOIN_CHANNEL} is occupied")
    comp.busy = True
    device.join_seq += 1
    js = JoinState("joiner", net_id, lead_id, device.join_seq, "requested", attempt=attempt,
                   max_retries=max_retries, timeout=timeout)
    nonce = device.rng.randbytes(NONCE_BYTES)
    cert = device.identity.cert.to_bytes()
    sig = _sign(device, _h(b"request", net_id.encode(), cert, nonce))
    body = Writer().text(net_id).blob(cert).blob(nonce).blob(sig).getvalue()
    js.th = _h(b"th1", body)
    device.join = js
    ctx.log("JOIN_START", f"net={net_id} lead={lead_id} attempt={attempt}")
    ctx.send(MsgType.JOIN_REQUEST, lead_id, Channel.Y, body)
    ctx.set_timer(timeout, ("join", js.seq))


def _on_challenge(device: DeviceState, msg: Message, ctx: NodeContext) -> str | None:
    js = device.join
    if js is None or js.role != "joiner" or js.step != "requested" or msg.sender != js.peer:
        ctx.log("JOIN_STRAY", msg.msg_type.value)
        return
    try:
        r = Reader(msg.body)
        cert_raw, ct_raw, nonce, sig = r.blob(), r.blob(), r.blob(), r.blob()
        r.done()
        cert = Certificate.from_bytes(cert_raw)
    except FormatError as exc:
        return _finish(device, ctx, "JOIN_ABORT", f"step=2 malformed challenge: {exc}")
    problem = _peer_ok(device, cert, msg.sender, ctx.now)
    if problem:
        return _finish(device, ctx, "JOIN_ABORT", f"step=2 lead {problem}")
    th2 = _h(b"th2", js.th, cert_raw, ct_raw, nonce)
    if not verify_encoded(cert.sig_public, th2, sig):
        return _finish(device, ctx, "JOIN_ABORT", "step=2 transcript signature mismatch")
    try:
        suite = lookup_suite(device.registry, cert.suite_id)
        shared = cs_decapsulate(device.identity.encaps.secret, CsCiphertext.from_bytes(ct_raw, suite), suite)
    except (SdrKmsError, FormatError) as exc:
        return _finish(device, ctx, "JOIN_ABORT", f"step=2 {exc}")
    _store_session(device, js, shared.key_bytes, ctx)
    js.th = _h(b"th3", th2)
    js.peer_cert = cert
    js.step = "established"
    _, mac = _session_keys(shared.key_bytes, js.th)
    body = Writer().blob(_sign(device, js.th)).blob(hmac.new(mac, js.th, "sha256").digest()).getvalue()
    ctx.send(MsgType.SESSION_ESTABLISH, msg.sender, Channel.Y, body)


def _on_transfer(device: DeviceState, msg: Message, ctx: NodeContext) -> str | None:
    js = device.join
    if js is None or js.role != "joiner" or js.step != "established" or msg.sender != js.peer:
        ctx.log("JOIN_STRAY", msg.msg_type.value)
        return
    session = device.read_key(js.channel, js.session_key_id)
    try:
        suite = lookup_suite(device.registry, js.peer_cert.suite_id)
        records = decode_key_store(open_box(session, js.th, msg.body, suite))
        for rec in records.values():
            if rec.infrastructure_id != js.net_id or rec.kind == KeyKind.SESSION:
                raise FormatError(f"unexpected record {rec.key_id}")
            if rec.classification != device.channels[NET_CHANNEL].label:
                raise FormatError(f"record {rec.key_id} does not belong in channel {NET_CHANNEL}")
    except (SdrKmsError, FormatError) as exc:
        return _finish(device, ctx, "JOIN_ABORT", f"step=4 {exc}")
    for rec in records.values():
        ctx.secret(bytes(rec.key_bytes), f"{device.device_id}:{rec.key_id}")
        device.install_key(NET_CHANNEL, rec)
    return _finish(device, ctx, "JOIN_COMPLETE", f"net={js.net_id} keys={','.join(sorted(records))}")


# -- lead side --------------------------------------------------------------------------------

def _on_request(device: DeviceState, msg: Message, ctx: NodeContext) -> str | None:
    try:
        r = Reader(msg.body)
        net_id, cert_raw, nonce, sig = r.text(), r.blob(), r.blob(), r.blob()
        r.done()
        cert = Certificate.from_bytes(cert_raw)
    except FormatError as exc:
        ctx.log("JOIN_REJECT", f"step=1 from={msg.sender} malformed request: {exc}")
        return
    problem = _peer_ok(device, cert, msg.sender, ctx.now)
    if problem is None and not verify_encoded(cert.sig_public, _h(b"request", net_id.encode(), cert_raw, nonce), sig):
        problem = "request signature mismatch"
    net_key = device.find_key(NET_CHANNEL, net_id)
    if problem is None and net_key is None:
        problem = f"no key for net {net_id}"
    if problem is None and not cert.clearance.dominates(device.channels[NET_CHANNEL].label):
        problem = f"clearance {cert.clearance} below {device.channels[NET_CHANNEL].label}"
    try:
        suite = lookup_suite(device.registry, cert.suite_id) if problem is None else None
    except SuiteNotFound:
        problem = f"unknown suite {cert.suite_id}"
    if problem is None and (device.join is not None or device.channels[JOIN_CHANNEL].busy):
        problem = "busy"
    if problem is not None:
        ctx.log("JOIN_REJECT", f"step=1 from={msg.sender} {problem}")
        return

    device.channels[JOIN_CHANNEL].busy = True
    device.join_seq += 1
    js = JoinState("lead", net_id, msg.sender, device.join_seq, "challenged", peer_cert=cert,
                   timeout=getattr(device, "join_timeout", DEFAULT_TIMEOUT))
    device.join = js
    ct, shared = cs_encapsulate(cert.encaps_public, suite, device.rng.randbytes(32))
    _store_session(device, js, shared.key_bytes, ctx)
    own = device.identity.cert.to_bytes()
    ct_raw, nonce_l = ct.to_bytes(suite), device.rng.randbytes(NONCE_BYTES)
    th2 = _h(b"th2", _h(b"th1", msg.body), own, ct_raw, nonce_l)
    js.th = _h(b"th3", th2)
    body = Writer().blob(own).blob(ct_raw).blob(nonce_l).blob(_sign(device, th2)).getvalue()
    ctx.log("JOIN_ACCEPT", f"net={net_id} joiner={msg.sender}")
    ctx.send(MsgType.JOIN_CHALLENGE, msg.sender, Channel.Y, body)
    ctx.set_timer(js.timeout, ("join", js.seq))


def _on_establish(device: DeviceState, msg: Message, ctx: NodeContext) -> str | None:
    js = device.join
    if js is None or js.role != "lead" or js.step != "challenged" or msg.sender != js.peer:
        ctx.log("JOIN_STRAY", msg.msg_type.value)
        return
    session = device.read_key(js.channel, js.session_key_id)
    try:
        r = Reader(msg.body)
        sig, tag = r.blob(), r.blob()
        r.done()
    except FormatError as exc:
        return _finish(device, ctx, "JOIN_ABORT", f"step=3 malformed establish: {exc}")
    _, mac = _session_keys(session, js.th)
    if not verify_encoded(js.peer_cert.sig_public, js.th, sig):
        return _finish(device, ctx, "JOIN_ABORT", "step=3 transcript signature mismatch")
    if not hmac.compare_digest(hmac.new(mac, js.th, "sha256").digest(), tag):
        return _finish(device, ctx, "JOIN_ABORT", "step=3 key confirmation failed")
    comp = device.channels[NET_CHANNEL]
    records = [KeyRecord(rec.key_id, rec.kind, rec.role, bytes(rec.key_bytes), rec.classification,
                         rec.infrastructure_id, rec.state, rec.valid_from, rec.valid_to)
               for rec in comp.store.values()
               if rec.infrastructure_id == js.net_id and rec.state in (KeyState.ACTIVE, KeyState.STANDBY)]
    suite = lookup_suite(device.registry, js.peer_cert.suite_id)
    box = seal_box(session, js.th, encode_key_store(records), suite)
    ctx.send(MsgType.NET_KEY_TRANSFER, msg.sender, Channel.Y, box)
    return _finish(device, ctx, "JOIN_SERVED", f"net={js.net_id} joiner={js.peer} keys={len(records)}")


# -- dispatch ---------------------------------------------------------------------------------

HANDLERS = {
    MsgType.JOIN_REQUEST: _on_request,
    MsgType.JOIN_CHALLENGE: _on_challenge,
    MsgType.SESSION_ESTABLISH: _on_establish,
    MsgType.NET_KEY_TRANSFER: _on_transfer,
}


def handle_join_message(device: DeviceState, msg: Message, ctx: NodeContext) -> str | None:
    """Dispatch one join message; returns the closing event name when the exchange ended."""
    return HANDLERS[msg.msg_type](device, msg, ctx)


def join_timer(device: DeviceState, token, ctx: NodeContext) -> bool:
    """Handle a ("join", seq) timer.  Returns True when the joiner should retry."""
    js = device.join
    if js is None or js.seq != token[1]:
        return False
    _finish(device, ctx, "JOIN_TIMEOUT", f"net={js.net_id} peer={js.peer} step={js.step}")
    return js.role == "joiner" and js.attempt < js.max_retries


def net_join(joiner: DeviceState, lead: DeviceState, net_id: str, now: int) -> list[Message]:
    """Run the whole exchange synchronously between two devices.

    Returns the transcript; raises JoinAborted (carrying the transcript) if
    the joiner does not end up with the net key.
    """
    if lead.channels[JOIN_CHANNEL].busy or lead.join is not None:
        raise ChannelBusy(f"{lead.device_id}: channel {JOIN_CHANNEL} is occupied")
    parties = {joiner.device_id: joiner, lead.device_id: lead}
    ctxs = {pid: LocalContext(pid, now) for pid in parties}
    start_join(joiner, lead.device_id, net_id, ctxs[joiner.device_id])
    transcript: list[Message] = []
    pending = list(ctxs[joiner.device_id].outbox)
    ctxs[joiner.device_id].outbox.clear()
    while pending:
        msg = pending.pop(0)
        msg = Message(msg.msg_type, msg.sender, msg.receiver, msg.channel, msg.body, len(transcript) + 1)
        transcript.append(msg)
        target = parties.get(msg.receiver)
        if target is None:
            break
        ctx = ctxs[msg.receiver]
        handle_join_message(target, msg, ctx)
        pending.extend(ctx.outbox)
        ctx.outbox.clear()
    events = [e for c in ctxs.values() for e in c.events]
    done = any(e[2] == "JOIN_COMPLETE" for e in ctxs[joiner.device_id].events)
    for device in parties.values():
        if device.join is not None:
            _finish(device, ctxs[device.device_id], "JOIN_ABORT", "transcript ended early")
    if not done:
        reasons = [f"{node}:{ev} {detail}" for _, node, ev, detail in events
                   if ev in ("JOIN_REJECT", "JOIN_ABORT")]
        raise JoinAborted("; ".join(reasons) or "join did not complete", transcript, len(transcript))
    return transcript
