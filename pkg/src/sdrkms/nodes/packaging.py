"""Sealing fills for a recipient list, and KDMS key packages."""

from dataclasses import dataclass

from ..container import (ArchiveEntry, EntryType, FullContainer, RecipientHeader, build_inner_archive,
                         issue_header, seal_container)
from ..cryptosuite.keystream import KEY_BYTES, SymmetricKey, initial_state
from ..cryptosuite.suite import AlgorithmSuite
from ..encoding import Reader, Writer
from ..errors import RekeyError
from ..identity.certificates import Certificate, Issuer, TrustStore
from ..labels import UNCLASSIFIED
from ..lifecycle import encode_key_store
from ..rng import Drbg

PACKAGE_MAGIC = b"KPKG"


def fresh_transport_key(suite: AlgorithmSuite, rng: Drbg) -> SymmetricKey:
    while True:
        raw = rng.randbytes(KEY_BYTES)
        try:
            initial_state(raw, suite)
            return SymmetricKey(raw, suite.suite_id)
        except RekeyError:
            continue


def key_entry(name: str, records) -> ArchiveEntry:
    """One KEY_MATERIAL entry holding a bulk key store; all records share a label."""
    records = list(records)
    labels = {r.classification for r in records}
    if len(labels) != 1:
        raise ValueError("a key entry carries records of one classification")
    return ArchiveEntry(EntryType.KEY_MATERIAL, name, labels.pop(), encode_key_store(records))


def seal_for_recipients(issuer: Issuer, suite: AlgorithmSuite, entries, recipients, rng: Drbg,
                        trust_store: TrustStore | None = None,
                        now: int | None = None) -> tuple[FullContainer, list[RecipientHeader]]:
    """Seal once and issue one header per recipient certificate."""
    tk = fresh_transport_key(suite, rng)
    container = seal_container(build_inner_archive(entries), issuer, suite, tk)
    headers = [issue_header(container, tk, cert, issuer, suite, rng.randbytes(32), trust_store, now)
               for cert in recipients]
    return container, headers


@dataclass(frozen=True)
class KeyPackage:
    """A container plus the headers of the final nodes it is meant for."""

    container: bytes
    headers: tuple  # (recipient_id, header bytes)

    @property
    def targets(self) -> list[str]:
        return [rid for rid, _ in self.headers]

    def restricted(self, targets) -> "KeyPackage":
        keep = set(targets)
        return KeyPackage(self.container, tuple((r, h) for r, h in self.headers if r in keep))

    def to_bytes(self) -> bytes:
        w = Writer().raw(PACKAGE_MAGIC).u16(1).blob(self.container).u32(len(self.headers))
        for rid, h in self.headers:
            w.text(rid).blob(h)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "KeyPackage":
        r = Reader(data)
        r.expect(PACKAGE_MAGIC)
        r.u16()
        container = r.blob()
        headers = tuple((r.text(), r.blob()) for _ in range(r.u32()))
        r.done()
        return cls(container, headers)

    @classmethod
    def build(cls, container: FullContainer, headers) -> "KeyPackage":
        return cls(container.to_bytes(), tuple((h.recipient_id, h.to_bytes()) for h in headers))


def certificate_entry(cert: Certificate) -> ArchiveEntry:
    return ArchiveEntry(EntryType.CERTIFICATE, f"cert/{cert.subject_id}", UNCLASSIFIED, cert.to_bytes())
