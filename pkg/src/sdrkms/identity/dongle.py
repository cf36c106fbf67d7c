"""Operator dongle: ownership (secret share) plus knowledge (password).

The admin credentials are wrapped under a key derived from both factors, so
neither factor alone yields a session.
"""

import hashlib
import hmac
from dataclasses import dataclass

from ..encoding import Reader, Writer
from ..errors import DongleAbsent, DongleLocked, FormatError, WrongPassword
from ..labels import ClassificationLabel

MAX_FAILURES = 3
_PBKDF2_ROUNDS = 2_000


@dataclass(frozen=True)
class OperatorSession:
    operator_id: str
    role: str
    clearance: ClassificationLabel


@dataclass
class Dongle:
    operator_id: str
    secret_share: bytes
    wrapped_admin_credentials: bytes
    present: bool = True
    failures: int = 0

    @property
    def locked(self) -> bool:
        return self.failures >= MAX_FAILURES


def _wrapping_key(operator_id: str, share: bytes, password: str) -> bytes:
    pw = hashlib.pbkdf2_hmac("sha256", password.encode("utf-8"),
                             b"sdrkms-dongle" + operator_id.encode("utf-8"), _PBKDF2_ROUNDS)
    return hashlib.sha256(b"sdrkms-dongle-kek" + share + pw).digest()


def _pad(kek: bytes, n: int) -> bytes:
    return hashlib.shake_256(b"pad" + kek).digest(n)


def provision_dongle(operator_id: str, password: str, secret_share: bytes,
                     role: str = "OPERATOR", clearance: ClassificationLabel = ClassificationLabel()) -> Dongle:
    if len(secret_share) != 32:
        raise ValueError("secret share is 32 bytes")
    creds = Writer().text(operator_id).text(role).u8(clearance.to_byte()).getvalue()
    kek = _wrapping_key(operator_id, secret_share, password)
    body = bytes(a ^ b for a, b in zip(creds, _pad(kek, len(creds))))
    tag = hmac.new(kek, body, "sha256").digest()
    return Dongle(operator_id, bytes(secret_share), body + tag)


def authenticate_operator(dongle: Dongle | None, password: str, device=None) -> OperatorSession:
    """Open an operator session or raise; three straight failures lock the dongle.

    ``device`` may carry a ``tampered`` flag; a tampered device never
    authenticates anyone.
    """
    if dongle is None or not dongle.present:
        raise DongleAbsent("no dongle present")
    if dongle.locked:
        raise DongleLocked(f"dongle {dongle.operator_id} is locked")
    if device is not None and getattr(device, "tampered", False):
        raise DongleAbsent("device trust state forbids authentication")
    kek = _wrapping_key(dongle.operator_id, dongle.secret_share, password)
    body, tag = dongle.wrapped_admin_credentials[:-32], dongle.wrapped_admin_credentials[-32:]
    if not hmac.compare_digest(hmac.new(kek, body, "sha256").digest(), tag):
        dongle.failures += 1
        if dongle.locked:
            raise DongleLocked(f"dongle {dongle.operator_id} locked after {MAX_FAILURES} failures")
        raise WrongPassword("password rejected")
    dongle.failures = 0
    creds = bytes(a ^ b for a, b in zip(body, _pad(kek, len(body))))
    try:
        r = Reader(creds)
        operator_id, role, label = r.text(), r.text(), r.u8()
        r.done()
    except FormatError as exc:  # pragma: no cover - tag already authenticated the body
        raise WrongPassword("credential block corrupt") from exc
    return OperatorSession(operator_id, role, ClassificationLabel.from_byte(label))
