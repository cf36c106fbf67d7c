"""Cramer-Shoup used as a key encapsulation mechanism.

The sender encrypts a random subgroup element m and both sides derive the
32-byte shared key as H("sdrkms-kem" || m).  Decapsulation re-checks
subgroup membership of every element and the v-equation before touching z.
"""

from dataclasses import dataclass

from ..encoding import Reader, Writer, int_to_bytes
from ..errors import DecapsulationError, FormatError, ParameterError
from ..rng import Drbg, derive
from .audit import observe
from .keystream import SymmetricKey
from .suite import AlgorithmSuite


@dataclass(frozen=True)
class CsPublicKey:
    suite_id: int
    g1: int
    g2: int
    c: int
    d: int
    h: int

    def to_bytes(self) -> bytes:
        w = Writer().raw(b"CSPK").u16(1).u16(self.suite_id)
        for v in (self.g1, self.g2, self.c, self.d, self.h):
            w.integer(v)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "CsPublicKey":
        r = Reader(data)
        r.expect(b"CSPK")
        if r.u16() != 1:
            raise FormatError("unsupported public key version")
        pk = cls(r.u16(), *(r.integer() for _ in range(5)))
        r.done()
        return pk


@dataclass(frozen=True)
class CsSecretKey:
    suite_id: int
    x1: int
    x2: int
    y1: int
    y2: int
    z: int

    def __repr__(self):
        return f"CsSecretKey(suite_id={self.suite_id}, <redacted>)"


@dataclass(frozen=True)
class EncapsKeyPair:
    public: CsPublicKey
    secret: CsSecretKey

    def check(self, suite: AlgorithmSuite) -> bool:
        p = suite.enc.p
        pk, sk = self.public, self.secret
        return (pk.c == pow(pk.g1, sk.x1, p) * pow(pk.g2, sk.x2, p) % p
                and pk.d == pow(pk.g1, sk.y1, p) * pow(pk.g2, sk.y2, p) % p
                and pk.h == pow(pk.g1, sk.z, p))

    def to_bytes(self) -> bytes:
        w = Writer().raw(b"CSKP").u16(1).blob(self.public.to_bytes())
        for v in (self.secret.x1, self.secret.x2, self.secret.y1, self.secret.y2, self.secret.z):
            w.integer(v)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "EncapsKeyPair":
        r = Reader(data)
        r.expect(b"CSKP")
        if r.u16() != 1:
            raise FormatError("unsupported key pair version")
        pub = CsPublicKey.from_bytes(r.blob())
        sec = CsSecretKey(pub.suite_id, *(r.integer() for _ in range(5)))
        r.done()
        return cls(pub, sec)


@dataclass(frozen=True)
class CsCiphertext:
    u1: int
    u2: int
    e: int
    v: int

    def to_bytes(self, suite: AlgorithmSuite) -> bytes:
        w = element_width(suite)
        return b"".join(int_to_bytes(x, w) for x in (self.u1, self.u2, self.e, self.v))

    @classmethod
    def from_bytes(cls, data: bytes, suite: AlgorithmSuite) -> "CsCiphertext":
        w = element_width(suite)
        if len(data) != 4 * w:
            raise FormatError(f"ciphertext must be {4 * w} bytes")
        return cls(*(int.from_bytes(data[i * w:(i + 1) * w], "big") for i in range(4)))


def element_width(suite: AlgorithmSuite) -> int:
    return (suite.enc.p.bit_length() + 7) // 8


def _in_subgroup(x: int, suite: AlgorithmSuite) -> bool:
    p, q = suite.enc.p, suite.enc.q
    return 0 < x < p and pow(x, q, p) == 1


def _alpha(suite: AlgorithmSuite, u1: int, u2: int, e: int) -> int:
    w = element_width(suite)
    data = b"sdrkms-cs-alpha" + b"".join(int_to_bytes(x, w) for x in (u1, u2, e))
    return int.from_bytes(suite.hash(data), "big") % suite.enc.q


def _kdf(suite: AlgorithmSuite, m: int) -> SymmetricKey:
    data = b"sdrkms-kem" + int_to_bytes(m, element_width(suite))
    return SymmetricKey(suite.hash(data), suite.suite_id)


def cs_keygen(suite: AlgorithmSuite, seed: bytes) -> EncapsKeyPair:
    e = suite.enc
    rng = Drbg(derive(seed, "cs-keygen"))
    x1, x2, y1, y2, z = (rng.randbelow(e.q) for _ in range(5))
    p = e.p
    pk = CsPublicKey(
        suite.suite_id, e.g1, e.g2,
        pow(e.g1, x1, p) * pow(e.g2, x2, p) % p,
        pow(e.g1, y1, p) * pow(e.g2, y2, p) % p,
        pow(e.g1, z, p),
    )
    return EncapsKeyPair(pk, CsSecretKey(suite.suite_id, x1, x2, y1, y2, z))


def cs_encapsulate(pk: CsPublicKey, suite: AlgorithmSuite, randomness: bytes) -> tuple[CsCiphertext, SymmetricKey]:
    if pk.suite_id != suite.suite_id or (pk.g1, pk.g2) != (suite.enc.g1, suite.enc.g2):
        raise ParameterError("public key belongs to a different suite")
    for x in (pk.c, pk.d, pk.h):
        if not _in_subgroup(x, suite):
            raise ParameterError("public key element outside the subgroup")
    p, q = suite.enc.p, suite.enc.q
    rng = Drbg(derive(randomness, "cs-encapsulate"))
    r = rng.randrange(1, q)
    m = pow(pk.g1, rng.randrange(1, q), p)
    u1, u2 = pow(pk.g1, r, p), pow(pk.g2, r, p)
    e = pow(pk.h, r, p) * m % p
    a = _alpha(suite, u1, u2, e)
    v = pow(pk.c, r, p) * pow(pk.d, r * a % q, p) % p
    return CsCiphertext(u1, u2, e, v), _kdf(suite, m)


def cs_decapsulate(sk: CsSecretKey, wrapped: CsCiphertext | bytes, suite: AlgorithmSuite) -> SymmetricKey:
    observe("decapsulate")
    if sk.suite_id != suite.suite_id:
        raise DecapsulationError("secret key belongs to a different suite")
    if isinstance(wrapped, (bytes, bytearray)):
        try:
            wrapped = CsCiphertext.from_bytes(bytes(wrapped), suite)
        except FormatError as exc:
            raise DecapsulationError(str(exc)) from exc
    u1, u2, e, v = wrapped.u1, wrapped.u2, wrapped.e, wrapped.v
    if not all(_in_subgroup(x, suite) for x in (u1, u2, e, v)):
        raise DecapsulationError("ciphertext element outside the order-q subgroup")
    p, q = suite.enc.p, suite.enc.q
    a = _alpha(suite, u1, u2, e)
    check = pow(u1, (sk.x1 + sk.y1 * a) % q, p) * pow(u2, (sk.x2 + sk.y2 * a) % q, p) % p
    if check != v:
        raise DecapsulationError("validity check failed")
    m = e * pow(pow(u1, sk.z, p), -1, p) % p
    return _kdf(suite, m)
