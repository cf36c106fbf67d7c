"""Exchange container: one signed ciphertext shared by every recipient plus a
small signed header per recipient carrying the wrapped transport key.

Wire layouts (all integers big-endian)::

    SDRC | ver u16 | container_id[16] | suite_id u16 | len u64 payload
         | len u32 signer_id | len u32 signature
    SDRH | ver u16 | container_id[16] | len u32 recipient_id | suite_id u16
         | len u32 wrapped_key | len u32 issuer_id | len u32 issuer_signature
    SDRA | ver u16 | count u16 | { type u8 | len u16 name | class u8 | len u64 content }*

The signature covers the ciphertext span, so a receiver holding the signer's
certificate rejects a tampered container before decrypting anything.
"""

import hashlib
from dataclasses import dataclass
from enum import IntEnum

from .cryptosuite.cramer_shoup import CsPublicKey, EncapsKeyPair, cs_decapsulate, cs_encapsulate
from .cryptosuite.gmr import verify_encoded
from .cryptosuite.keystream import SymmetricKey, keystream, potp_xor
from .cryptosuite.registry import SuiteRegistry, lookup_suite
from .cryptosuite.suite import AlgorithmSuite
from .encoding import Reader, Writer
from .errors import (ArchiveError, CertificateError, ContainerSignatureError, DecapsulationError,
                     FormatError, HeaderDecapsulationError, HeaderSignatureError, NestingError,
                     ParameterError, RoutingError, SuiteNotFound)
from .identity.capabilities import CapabilityList
from .identity.certificates import Certificate, Issuer, TrustStore, verify_certificate
from .labels import ClassificationLabel

CONTAINER_MAGIC = b"SDRC"
HEADER_MAGIC = b"SDRH"
ARCHIVE_MAGIC = b"SDRA"
FORMAT_VERSION = 1
ID_BYTES = 16


class EntryType(IntEnum):
    WAVEFORM = 0x01
    POLICY = 0x02
    KEY_MATERIAL = 0x03
    CERTIFICATE = 0x04
    ALGORITHM_UPDATE = 0x05


@dataclass(frozen=True)
class ArchiveEntry:
    entry_type: EntryType
    name: str
    classification: ClassificationLabel
    content: bytes


def _check_entries(entries) -> None:
    if not entries:
        raise ArchiveError("an archive holds at least one entry")
    if len(entries) >= 1 << 16:
        raise ArchiveError("too many entries")
    certs = 0
    for e in entries:
        if bytes(e.content[:4]) == CONTAINER_MAGIC:
            raise NestingError(f"entry {e.name!r} is itself a container; stacking is forbidden")
        if e.entry_type == EntryType.CERTIFICATE:
            certs += 1
            try:
                Certificate.from_bytes(e.content)
            except FormatError as exc:
                raise ArchiveError(f"certificate entry {e.name!r} does not parse") from exc
        if len(e.name.encode("utf-8")) >= 1 << 16:
            raise ArchiveError("entry name too long")
    if certs > 1:
        raise ArchiveError("at most one certificate entry")


def build_inner_archive(entries) -> bytes:
    entries = list(entries)
    _check_entries(entries)
    w = Writer().raw(ARCHIVE_MAGIC).u16(FORMAT_VERSION).u16(len(entries))
    for e in entries:
        name = e.name.encode("utf-8")
        w.u8(int(e.entry_type)).u16(len(name)).raw(name)
        w.u8(e.classification.to_byte()).u64(len(e.content)).raw(e.content)
    return w.getvalue()


def parse_inner_archive(data: bytes) -> list[ArchiveEntry]:
    try:
        r = Reader(data)
        r.expect(ARCHIVE_MAGIC)
        if r.u16() != FORMAT_VERSION:
            raise FormatError("unsupported archive version")
        entries = []
        for _ in range(r.u16()):
            etype = EntryType(r.u8())
            name = r.raw(r.u16()).decode("utf-8")
            label = ClassificationLabel.from_byte(r.u8())
            entries.append(ArchiveEntry(etype, name, label, r.raw(r.u64())))
        r.done()
    except NestingError:
        raise
    except (FormatError, ValueError) as exc:
        raise ArchiveError(f"archive does not parse: {exc}") from exc
    _check_entries(entries)
    return entries


def container_id_for(payload: bytes) -> bytes:
    return hashlib.sha256(payload).digest()[:ID_BYTES]


@dataclass(frozen=True)
class FullContainer:
    container_id: bytes
    suite_id: int
    payload: bytes
    signer_id: str
    signature: bytes = b""

    def signed_bytes(self) -> bytes:
        return (Writer().raw(CONTAINER_MAGIC).u16(FORMAT_VERSION).raw(self.container_id)
                .u16(self.suite_id).raw(self.payload).getvalue())

    def to_bytes(self) -> bytes:
        w = Writer().raw(CONTAINER_MAGIC).u16(FORMAT_VERSION).raw(self.container_id)
        w.u16(self.suite_id).u64(len(self.payload)).raw(self.payload)
        return w.text(self.signer_id).blob(self.signature).getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "FullContainer":
        r = Reader(data)
        r.expect(CONTAINER_MAGIC)
        if r.u16() != FORMAT_VERSION:
            raise FormatError("unsupported container version")
        cid, suite_id = r.raw(ID_BYTES), r.u16()
        payload = r.raw(r.u64())
        c = cls(cid, suite_id, payload, r.text(), r.blob())
        r.done()
        return c


@dataclass(frozen=True)
class RecipientHeader:
    container_id: bytes
    recipient_id: str
    suite_id: int
    wrapped_key: bytes
    issuer_id: str
    issuer_signature: bytes = b""

    def signed_bytes(self) -> bytes:
        return (Writer().raw(HEADER_MAGIC).u16(FORMAT_VERSION).raw(self.container_id)
                .text(self.recipient_id).u16(self.suite_id).blob(self.wrapped_key)
                .text(self.issuer_id).getvalue())

    def to_bytes(self) -> bytes:
        return self.signed_bytes() + Writer().blob(self.issuer_signature).getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "RecipientHeader":
        r = Reader(data)
        r.expect(HEADER_MAGIC)
        if r.u16() != FORMAT_VERSION:
            raise FormatError("unsupported header version")
        h = cls(r.raw(ID_BYTES), r.text(), r.u16(), r.blob(), r.text(), r.blob())
        r.done()
        return h


@dataclass(frozen=True)
class OuterInfo:
    container_id: bytes
    suite_id: int
    signer_id: str
    payload_length: int


def inspect_outer(data: bytes) -> OuterInfo:
    """Routing metadata of a serialized container.  Takes no key material."""
    c = FullContainer.from_bytes(data)
    return OuterInfo(c.container_id, c.suite_id, c.signer_id, len(c.payload))


def inspect_header(data: bytes) -> RecipientHeader:
    """Public fields of a serialized header; the wrapped key stays opaque."""
    return RecipientHeader.from_bytes(data)


def seal_container(archive: bytes, signer: Issuer, suite: AlgorithmSuite,
                   transport_key: SymmetricKey) -> FullContainer:
    parse_inner_archive(archive)  # refuse to seal anything we would refuse to open
    if transport_key.suite_id != suite.suite_id:
        raise ParameterError("transport key belongs to a different suite")
    payload = potp_xor(keystream(transport_key, suite, len(archive)), archive)
    unsigned = FullContainer(container_id_for(payload), suite.suite_id, payload, signer.subject_id)
    return FullContainer(unsigned.container_id, unsigned.suite_id, payload, signer.subject_id,
                         signer.sign(unsigned.signed_bytes()))


def _wrap_transport_key(pk: CsPublicKey, suite: AlgorithmSuite, transport_key: SymmetricKey,
                        randomness: bytes) -> bytes:
    ct, shared = cs_encapsulate(pk, suite, randomness)
    mask = bytes(a ^ b for a, b in zip(transport_key.key_bytes, shared.key_bytes))
    return ct.to_bytes(suite) + mask


def _unwrap_transport_key(wrapped: bytes, keys: EncapsKeyPair, suite: AlgorithmSuite) -> SymmetricKey:
    ct, mask = wrapped[:-32], wrapped[-32:]
    if len(mask) != 32:
        raise DecapsulationError("wrapped key too short")
    shared = cs_decapsulate(keys.secret, ct, suite)
    return SymmetricKey(bytes(a ^ b for a, b in zip(mask, shared.key_bytes)), suite.suite_id)


def issue_header(container: FullContainer, transport_key: SymmetricKey, recipient_cert: Certificate,
                 issuer: Issuer, suite: AlgorithmSuite, randomness: bytes,
                 trust_store: TrustStore | None = None, now: int | None = None) -> RecipientHeader:
    """Header letting ``recipient_cert``'s holder open ``container``.

    When a trust store is given the recipient certificate is verified first.
    """
    if trust_store is not None:
        verdict = verify_certificate(recipient_cert, trust_store, now if now is not None else 0)
        if not verdict:
            raise CertificateError(f"recipient certificate rejected: {verdict.reason.value}",
                                   verdict.reason)
    if not (container.suite_id == suite.suite_id == recipient_cert.suite_id
            == recipient_cert.encaps_public.suite_id == transport_key.suite_id):
        raise ParameterError("suite mismatch between container and recipient keys")
    wrapped = _wrap_transport_key(recipient_cert.encaps_public, suite, transport_key, randomness)
    h = RecipientHeader(container.container_id, recipient_cert.subject_id, suite.suite_id, wrapped,
                        issuer.subject_id)
    return RecipientHeader(h.container_id, h.recipient_id, h.suite_id, h.wrapped_key, h.issuer_id,
                           issuer.sign(h.signed_bytes()))


def _signer_cert_from_entries(entries, signer_id, trust_store, now) -> Certificate:
    for e in entries:
        if e.entry_type == EntryType.CERTIFICATE:
            cert = Certificate.from_bytes(e.content)
            if cert.subject_id != signer_id:
                raise ContainerSignatureError("embedded certificate names a different signer")
            verdict = verify_certificate(cert, trust_store, now)
            if not verdict:
                raise ContainerSignatureError(f"embedded certificate rejected: {verdict.reason.value}")
            return cert
    raise ContainerSignatureError(f"no certificate available for signer {signer_id!r}")


def open_container(container: FullContainer, header: RecipientHeader, recipient_keys: EncapsKeyPair,
                   trust_store: TrustStore, now: int, suites: SuiteRegistry | AlgorithmSuite,
                   recipient_id: str | None = None,
                   caps: CapabilityList | None = None) -> list[ArchiveEntry]:
    """Verify and decrypt; either every check passes or nothing is returned.

    Order: routing match, header signature, container signature (against a
    cached or root certificate when available, else after decryption via the
    embedded certificate), decapsulation, archive parse.
    """
    if header.container_id != container.container_id:
        raise RoutingError("header belongs to a different container")
    if recipient_id is not None and header.recipient_id != recipient_id:
        raise RoutingError(f"header addressed to {header.recipient_id!r}")
    if header.suite_id != container.suite_id:
        raise RoutingError("header and container suites differ")
    try:
        suite = suites if isinstance(suites, AlgorithmSuite) else lookup_suite(suites, container.suite_id)
    except SuiteNotFound as exc:
        raise RoutingError(str(exc)) from exc
    if suite.suite_id != container.suite_id:
        raise RoutingError("container sealed under a different suite")

    # (a) header
    issuer = trust_store.lookup(header.issuer_id, now)
    if issuer is None or not verify_encoded(issuer.sig_public, header.signed_bytes(), header.issuer_signature):
        raise HeaderSignatureError("header signature does not verify")
    if caps is not None and not caps.allows(issuer.role, "issue_header"):
        raise HeaderSignatureError(f"{issuer.role} may not issue headers")

    # (b) container, early path
    if container_id_for(container.payload) != container.container_id:
        raise ContainerSignatureError("container id does not match payload")
    signer = trust_store.lookup(container.signer_id, now)
    if signer is not None:
        _check_container_signature(container, signer, caps)

    # (c) transport key
    try:
        transport_key = _unwrap_transport_key(header.wrapped_key, recipient_keys, suite)
    except DecapsulationError as exc:
        raise HeaderDecapsulationError(str(exc)) from exc

    # (d) archive
    archive = potp_xor(keystream(transport_key, suite, len(container.payload)), container.payload)
    entries = parse_inner_archive(archive)

    if signer is None:
        signer = _signer_cert_from_entries(entries, container.signer_id, trust_store, now)
        _check_container_signature(container, signer, caps)
    return entries


def _check_container_signature(container, signer: Certificate, caps) -> None:
    if not verify_encoded(signer.sig_public, container.signed_bytes(), container.signature):
        raise ContainerSignatureError("container signature does not verify")
    if caps is not None and not caps.allows(signer.role, "seal_container"):
        raise ContainerSignatureError(f"{signer.role} may not seal containers")


def open_container_bytes(container: bytes, header: bytes, *args, **kwargs) -> list[ArchiveEntry]:
    """Like :func:`open_container` but starting from wire bytes."""
    return open_container(FullContainer.from_bytes(container), RecipientHeader.from_bytes(header),
                          *args, **kwargs)


__all__ = [
    "ARCHIVE_MAGIC", "CONTAINER_MAGIC", "HEADER_MAGIC", "ArchiveEntry", "EntryType", "FullContainer",
    "OuterInfo", "RecipientHeader", "build_inner_archive", "container_id_for", "inspect_header",
    "inspect_outer", "issue_header", "open_container", "open_container_bytes", "parse_inner_archive",
    "seal_container",
]
