"""Certificates, trust store and issuance.

Chains are two deep: a self-signed RSMS root signs end-entity certificates.
"""

import threading
from dataclasses import dataclass, replace
from enum import Enum

from ..cryptosuite.cramer_shoup import CsPublicKey
from ..cryptosuite.gmr import GmrPublicKey, SignatureKeyPair, gmr_sign, verify_encoded
from ..encoding import Reader, Writer
from ..errors import FormatError, ParameterError
from ..labels import ClassificationLabel
from .capabilities import ROLES, CapabilityList, default_capabilities

CERT_MAGIC = b"CERT"
CERT_VERSION = 1


class Rejection(str, Enum):
    EXPIRED = "expired"
    NOT_YET_VALID = "not-yet-valid"
    BAD_SIGNATURE = "bad-signature"
    UNKNOWN_ISSUER = "unknown-issuer"


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: Rejection | None = None

    def __bool__(self):
        return self.accepted


ACCEPT = Verdict(True)


@dataclass(frozen=True)
class Certificate:
    subject_id: str
    role: str
    suite_id: int
    sig_public: GmrPublicKey
    encaps_public: CsPublicKey
    clearance: ClassificationLabel
    valid_from: int
    valid_to: int
    issuer_id: str
    issuer_signature: bytes = b""

    def tbs_bytes(self) -> bytes:
        w = Writer().raw(CERT_MAGIC).u16(CERT_VERSION)
        w.text(self.subject_id).text(self.role).integer(self.suite_id)
        w.blob(self.sig_public.to_bytes()).blob(self.encaps_public.to_bytes())
        w.blob(bytes([self.clearance.to_byte()]))
        w.integer(self.valid_from).integer(self.valid_to).text(self.issuer_id)
        return w.getvalue()

    def to_bytes(self) -> bytes:
        return self.tbs_bytes() + Writer().blob(self.issuer_signature).getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "Certificate":
        r = Reader(data)
        r.expect(CERT_MAGIC)
        if r.u16() != CERT_VERSION:
            raise FormatError("unsupported certificate version")
        subject, role, suite_id = r.text(), r.text(), r.integer()
        sig_pub = GmrPublicKey.from_bytes(r.blob())
        enc_pub = CsPublicKey.from_bytes(r.blob())
        label = r.blob()
        if len(label) != 1:
            raise FormatError("clearance is one byte")
        cert = cls(subject, role, suite_id, sig_pub, enc_pub, ClassificationLabel.from_byte(label[0]),
                   r.integer(), r.integer(), r.text(), r.blob())
        r.done()
        return cert

    @property
    def self_signed(self) -> bool:
        return self.issuer_id == self.subject_id


@dataclass(frozen=True)
class SubjectInfo:
    subject_id: str
    role: str
    suite_id: int
    sig_public: GmrPublicKey
    encaps_public: CsPublicKey
    clearance: ClassificationLabel


@dataclass
class Issuer:
    """A signing identity: id, role and the stateful GMR key pair."""

    subject_id: str
    role: str
    keys: SignatureKeyPair

    def sign(self, data: bytes) -> bytes:
        sig = gmr_sign(self.keys, data)
        return sig.to_bytes(self.keys.public.n)


def issue_certificate(issuer: Issuer, subject: SubjectInfo, valid_from: int, valid_to: int,
                      caps: CapabilityList | None = None) -> Certificate:
    caps = default_capabilities() if caps is None else caps
    caps.require(issuer.role, "issue_certificate")
    if valid_from >= valid_to:
        raise ParameterError(f"validity window ({valid_from}, {valid_to}) is empty")
    if subject.role not in ROLES:
        raise ParameterError(f"unknown role {subject.role!r}")
    if subject.subject_id == issuer.subject_id and subject.role != "RSMS":
        raise ParameterError("only an RSMS may self-sign")
    cert = Certificate(subject.subject_id, subject.role, subject.suite_id, subject.sig_public,
                       subject.encaps_public, subject.clearance, valid_from, valid_to,
                       issuer.subject_id)
    return replace(cert, issuer_signature=issuer.sign(cert.tbs_bytes()))


class TrustStore:
    """RSMS roots plus a cache of verified end-entity certificates.

    Lookups take no lock; mutations are serialised by an internal lock.
    """

    def __init__(self, roots=()):
        self._lock = threading.Lock()
        self._roots: dict[str, Certificate] = {}
        self._cache: dict[str, Certificate] = {}
        for root in roots:
            self.add_root(root)

    @property
    def roots(self) -> dict:
        return dict(self._roots)

    def add_root(self, cert: Certificate) -> None:
        if cert.role != "RSMS" or not cert.self_signed:
            raise ParameterError("roots must be self-signed RSMS certificates")
        if not verify_encoded(cert.sig_public, cert.tbs_bytes(), cert.issuer_signature):
            raise ParameterError("root self-signature does not verify")
        with self._lock:
            self._roots[cert.subject_id] = cert

    def cache(self, cert: Certificate, now: int) -> Verdict:
        verdict = verify_certificate(cert, self, now)
        if verdict:
            with self._lock:
                self._cache[cert.subject_id] = cert
        return verdict

    def lookup(self, subject_id: str, now: int) -> Certificate | None:
        """Cached or root certificate valid at ``now``; never an expired one."""
        cert = self._roots.get(subject_id) or self._cache.get(subject_id)
        if cert is None or not cert.valid_from <= now <= cert.valid_to:
            return None
        return cert

    def cached_ids(self) -> list[str]:
        return sorted(self._cache)


def verify_certificate(cert: Certificate, trust_store: TrustStore, now: int) -> Verdict:
    roots = trust_store._roots
    issuer = roots.get(cert.issuer_id)
    if issuer is None:
        return Verdict(False, Rejection.UNKNOWN_ISSUER)
    if cert.self_signed and cert != issuer:
        return Verdict(False, Rejection.UNKNOWN_ISSUER)
    if not verify_encoded(issuer.sig_public, cert.tbs_bytes(), cert.issuer_signature):
        return Verdict(False, Rejection.BAD_SIGNATURE)
    for c in (cert, issuer):
        if now < c.valid_from:
            return Verdict(False, Rejection.NOT_YET_VALID)
        if now > c.valid_to:
            return Verdict(False, Rejection.EXPIRED)
    return ACCEPT
