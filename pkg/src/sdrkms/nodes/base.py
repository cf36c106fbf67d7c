"""Messages, the node execution context and enrolled identities."""

from dataclasses import dataclass, field
from enum import Enum

from ..cryptosuite.cramer_shoup import EncapsKeyPair, cs_keygen
from ..cryptosuite.gmr import gmr_keygen
from ..cryptosuite.suite import AlgorithmSuite
from ..identity.certificates import Certificate, Issuer, SubjectInfo, issue_certificate
from ..labels import ClassificationLabel
from ..rng import derive

BOX_MAGIC = b"SBOX"


class MsgType(str, Enum):
    CONTAINER = "CONTAINER"
    HEADER = "HEADER"
    KEY_PACKAGE = "KEY_PACKAGE"
    JOIN_REQUEST = "JOIN_REQUEST"
    JOIN_CHALLENGE = "JOIN_CHALLENGE"
    SESSION_ESTABLISH = "SESSION_ESTABLISH"
    NET_KEY_TRANSFER = "NET_KEY_TRANSFER"
    SYNC_DIGEST = "SYNC_DIGEST"
    SYNC_DELTA = "SYNC_DELTA"


class Channel(str, Enum):
    X = "x"
    Y = "y"
    WIRED = "WIRED"
    MANUAL = "MANUAL"


@dataclass(frozen=True)
class Message:
    msg_type: MsgType
    sender: str
    receiver: str
    channel: Channel
    body: bytes
    msg_id: int = 0

    def __post_init__(self):
        if self.msg_type == MsgType.NET_KEY_TRANSFER and not self.body.startswith(BOX_MAGIC):
            raise ValueError("NET_KEY_TRANSFER bodies are sealed session boxes")

    def summary(self) -> str:
        return (f"#{self.msg_id} {self.msg_type.value} {self.sender}->{self.receiver} "
                f"ch={self.channel.value} len={len(self.body)}")


class Quarantine(Exception):
    """Raised by a handler to refuse an incoming message without processing it."""


class NodeContext:
    """Everything a handler may do besides touching its own state.

    The simulator supplies a network-backed implementation; :class:`LocalContext`
    collects effects for direct, synchronous use.
    """

    now: int = 0

    def send(self, msg_type: MsgType, receiver: str, channel: Channel, body: bytes) -> None:
        raise NotImplementedError

    def set_timer(self, delay: int, token) -> None:
        raise NotImplementedError

    def log(self, event: str, detail: str = "") -> None:
        raise NotImplementedError

    def secret(self, data: bytes, label: str) -> None:
        """Declare red key material so wire scans can look for it."""


@dataclass
class LocalContext(NodeContext):
    node_id: str
    now: int = 0
    outbox: list = field(default_factory=list)
    timers: list = field(default_factory=list)
    events: list = field(default_factory=list)
    secrets: list = field(default_factory=list)

    def send(self, msg_type, receiver, channel, body):
        self.outbox.append(Message(MsgType(msg_type), self.node_id, receiver, Channel(channel), bytes(body)))

    def set_timer(self, delay, token):
        self.timers.append((self.now + delay, token))

    def log(self, event, detail=""):
        self.events.append((self.now, self.node_id, event, detail))

    def secret(self, data, label):
        self.secrets.append((bytes(data), label))


@dataclass
class NodeIdentity:
    """A node's signing identity, encapsulation key pair and certificate."""

    issuer: Issuer
    encaps: EncapsKeyPair
    cert: Certificate

    @property
    def node_id(self) -> str:
        return self.cert.subject_id

    @property
    def role(self) -> str:
        return self.cert.role


def enroll(rsms: Issuer, node_id: str, role: str, suite: AlgorithmSuite, seed: bytes,
           clearance: ClassificationLabel, valid_from: int, valid_to: int, caps=None,
           depth: int | None = None) -> NodeIdentity:
    """Generate keys for ``node_id`` and have ``rsms`` certify them."""
    sig = gmr_keygen(suite, derive(seed, "sig", node_id), depth)
    enc = cs_keygen(suite, derive(seed, "enc", node_id))
    subject = SubjectInfo(node_id, role, suite.suite_id, sig.public, enc.public, clearance)
    cert = issue_certificate(rsms, subject, valid_from, valid_to, caps)
    return NodeIdentity(Issuer(node_id, role, sig), enc, cert)


def self_enroll_rsms(node_id: str, suite: AlgorithmSuite, seed: bytes, clearance: ClassificationLabel,
                     valid_from: int, valid_to: int, caps=None, depth: int | None = None) -> NodeIdentity:
    sig = gmr_keygen(suite, derive(seed, "sig", node_id), depth)
    enc = cs_keygen(suite, derive(seed, "enc", node_id))
    issuer = Issuer(node_id, "RSMS", sig)
    subject = SubjectInfo(node_id, "RSMS", suite.suite_id, sig.public, enc.public, clearance)
    return NodeIdentity(issuer, enc, issue_certificate(issuer, subject, valid_from, valid_to, caps))
