"""Algorithm suites: the versioned parameter bundle that makes the crypto swappable."""

import hashlib
from dataclasses import dataclass

from sympy import factorint, isprime

from ..encoding import Reader, Writer
from ..errors import FormatError, ParameterError
from ..rng import Drbg, derive
from .numtheory import blum_modulus, blum_williams_modulus, jacobi, schnorr_group, subgroup_generator

SUITE_MAGIC = b"SUIT"
SUITE_FORMAT_VERSION = 1
SUPPORTED_BITS = (32, 512, 1024, 2048)
DEFAULT_DEPTH = 10
HASHES = ("sha256", "sha3_256", "blake2s")

# order-q subgroup bit size for the larger levels; 32 uses a safe prime
_Q_BITS = {512: 160, 1024: 224, 2048: 256}
# above this size the factor-based invariants are only spot-checked
_FACTOR_LIMIT = 1 << 64


@dataclass(frozen=True)
class SigParams:
    n_sig: int  # reference Blum-Williams modulus; fixes the key-pair modulus size
    depth: int


@dataclass(frozen=True)
class EncParams:
    p: int
    q: int
    g1: int
    g2: int
    hash_name: str = "sha256"


@dataclass(frozen=True)
class StreamParams:
    n_str: int
    bits_per_iteration: int = 1


@dataclass(frozen=True)
class AlgorithmSuite:
    suite_id: int
    version: int
    sig: SigParams
    enc: EncParams
    stream: StreamParams
    security_bits: int = 32

    def hash(self, data: bytes) -> bytes:
        return hashlib.new(self.enc.hash_name, data).digest()

    def to_bytes(self) -> bytes:
        w = Writer().raw(SUITE_MAGIC).u16(SUITE_FORMAT_VERSION)
        w.integer(self.suite_id).integer(self.version).integer(self.security_bits)
        w.integer(self.sig.n_sig).integer(self.sig.depth)
        w.integer(self.enc.p).integer(self.enc.q).integer(self.enc.g1).integer(self.enc.g2)
        w.text(self.enc.hash_name)
        w.integer(self.stream.n_str).integer(self.stream.bits_per_iteration)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "AlgorithmSuite":
        r = Reader(data)
        r.expect(SUITE_MAGIC)
        if r.u16() != SUITE_FORMAT_VERSION:
            raise FormatError("unsupported suite format version")
        suite_id, version, bits = r.integer(), r.integer(), r.integer()
        sig = SigParams(r.integer(), r.integer())
        enc = EncParams(r.integer(), r.integer(), r.integer(), r.integer(), r.text())
        stream = StreamParams(r.integer(), r.integer())
        r.done()
        suite = cls(suite_id, version, sig, enc, stream, bits)
        validate_suite(suite)
        return suite


def validate_suite(suite: AlgorithmSuite) -> None:
    """Raise ParameterError unless every suite invariant holds."""
    if not (0 <= suite.suite_id < 1 << 16 and 0 <= suite.version < 1 << 16):
        raise ParameterError("suite_id and version are 16-bit")
    e = suite.enc
    if e.hash_name not in HASHES:
        raise ParameterError(f"unsupported hash {e.hash_name!r}")
    if not (isprime(e.p) and isprime(e.q)):
        raise ParameterError("p and q must be prime")
    if (e.p - 1) % e.q:
        raise ParameterError("q must divide p - 1")
    for name, g in (("g1", e.g1), ("g2", e.g2)):
        if not (1 < g < e.p) or pow(g, e.q, e.p) != 1:
            raise ParameterError(f"{name} does not have order q")
    if e.g1 == e.g2:
        raise ParameterError("g1 and g2 must differ")
    if suite.sig.depth < 1 or suite.sig.depth > 20:
        raise ParameterError("tree depth must lie in [1, 20]")
    if suite.stream.bits_per_iteration != 1:
        raise ParameterError("keystream emits one bit per squaring")
    _check_modulus(suite.sig.n_sig, "n_sig", ((3, 8), (7, 8)))
    _check_modulus(suite.stream.n_str, "n_str", ((3, 4), (3, 4)))


def _check_modulus(n: int, name: str, classes) -> None:
    if n < 15 or n % 2 == 0:
        raise ParameterError(f"{name} must be an odd composite")
    if n < _FACTOR_LIMIT:
        f = factorint(n)
        if sorted(f.values()) != [1, 1]:
            raise ParameterError(f"{name} must be a product of two distinct primes")
        p, q = sorted(f)
        ok = any(p % m1 == r1 and q % m2 == r2 for (r1, m1), (r2, m2) in (classes, classes[::-1]))
        if not ok:
            raise ParameterError(f"{name} factors fall in the wrong residue classes")
        return
    # public necessary conditions only
    if jacobi(-1, n) != 1:
        raise ParameterError(f"{name} is not a Blum integer")
    if classes[0][1] == 8 and jacobi(2, n) != -1:
        raise ParameterError(f"{name} is not a Blum-Williams integer")


def toy_suite(suite_id: int = 1, version: int = 1) -> AlgorithmSuite:
    """Hand-sized parameters for exhaustive oracle tests.

    n_sig = 3 * 7, n_str = 7 * 11, and the order-11 subgroup of Z_23^*
    generated by 4 and 9.  Too small for end-to-end signing properties.
    """
    suite = AlgorithmSuite(
        suite_id, version,
        SigParams(21, 4),
        EncParams(23, 11, 4, 9, "sha256"),
        StreamParams(77),
        security_bits=0,
    )
    validate_suite(suite)
    return suite


def generate_suite(security_bits: int, seed: bytes, suite_id: int = 1, version: int = 1,
                   depth: int = DEFAULT_DEPTH, hash_name: str = "sha256") -> AlgorithmSuite:
    """Deterministic suite for ``security_bits`` in {32, 512, 1024, 2048}.

    The number is the modulus size; 32 is the desk-scale test level.
    """
    if security_bits not in SUPPORTED_BITS:
        raise ParameterError(f"unsupported security_bits {security_bits}; choose from {SUPPORTED_BITS}")
    if len(seed) != 32:
        raise ParameterError("seed must be 32 bytes")
    rng = Drbg(derive(seed, "suite", security_bits))
    n_sig = _product(blum_williams_modulus(security_bits, rng.child("sig")))
    n_str = _product(blum_modulus(security_bits, rng.child("stream")))
    q_bits = _Q_BITS.get(security_bits, security_bits - 1)
    grng = rng.child("group")
    p, q = schnorr_group(security_bits, q_bits, grng)
    g1 = subgroup_generator(p, q, grng)
    g2 = subgroup_generator(p, q, grng, avoid=(g1,))
    suite = AlgorithmSuite(
        suite_id, version,
        SigParams(n_sig, depth),
        EncParams(p, q, g1, g2, hash_name),
        StreamParams(n_str),
        security_bits,
    )
    validate_suite(suite)
    return suite


def _product(pq):
    return pq[0] * pq[1]
