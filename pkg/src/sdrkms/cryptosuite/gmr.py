"""Stateful tree signatures over the claw-free pair f0(x) = x^2, f1(x) = 4x^2 mod n.

n is a Blum-Williams integer and both maps permute the quadratic residues
QR_n.  For a k-bit message m (bit i applied i-th from the outside)

    f_m = f_{m_0} o f_{m_1} o ... o f_{m_{k-1}},   f_m(x) = 4^m * x^(2^k) mod n,

and the trapdoor (p, q) inverts it with one exponentiation in QR_n.

Every tree node owns a reference value in QR_n.  An internal node signs the
hash of its two children's references; a leaf signs one message digest.
Each reference is therefore used for exactly one message, and the signer
walks leaves left to right.  Node messages and leaf messages are both
257 bits with a distinct top bit, so the encoding is prefix-free.
"""

import hashlib
from dataclasses import dataclass, field
from math import gcd

from ..encoding import Reader, Writer, int_to_bytes
from ..errors import CapacityExhausted, FormatError, ParameterError
from ..rng import Drbg, derive
from .numtheory import blum_williams_modulus, jacobi
from .suite import AlgorithmSuite

MESSAGE_BITS = 257
LEAF_TAG = 1 << 256
KEY_MAGIC = b"GMRK"
PUB_MAGIC = b"GMRP"


def f_bit(bit: int, x: int, n: int) -> int:
    return (4 if bit else 1) * x * x % n


def f_forward(m: int, k: int, x: int, n: int) -> int:
    return pow(4, m, n) * pow(x, 1 << k, n) % n


def f_inverse(m: int, k: int, y: int, p: int, q: int) -> int:
    """The unique x in QR_n with f_m(x) = y, for y in QR_n."""
    n = p * q
    order = (p - 1) * (q - 1) // 4  # |QR_n|, odd for Blum integers
    e = pow(2, -k, order) if order > 1 else 0
    z = y * pow(pow(4, -1, n), m % order, n) % n
    return pow(z, e, n)


def canonical(x: int, n: int) -> int:
    """Representative of {x, n - x} below n/2; f_m cannot tell them apart."""
    return min(x, n - x)


def _digest(hash_name: str, *parts: bytes) -> int:
    h = hashlib.new(hash_name)
    for part in parts:
        h.update(len(part).to_bytes(4, "big") + part)
    return int.from_bytes(h.digest(), "big")


def _width(n: int) -> int:
    return (n.bit_length() + 7) // 8


@dataclass(frozen=True)
class GmrPublicKey:
    n: int
    root: int
    depth: int
    hash_name: str = "sha256"

    @property
    def capacity(self) -> int:
        return 1 << self.depth

    def leaf_message(self, message: bytes) -> int:
        return LEAF_TAG | _digest(self.hash_name, b"gmr-msg", bytes(message))

    def pair_message(self, left: int, right: int) -> int:
        w = _width(self.n)
        return _digest(self.hash_name, b"gmr-node", int_to_bytes(left, w), int_to_bytes(right, w))

    def to_bytes(self) -> bytes:
        w = Writer().raw(PUB_MAGIC).u16(1)
        return w.integer(self.n).integer(self.root).integer(self.depth).text(self.hash_name).getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "GmrPublicKey":
        r = Reader(data)
        r.expect(PUB_MAGIC)
        if r.u16() != 1:
            raise FormatError("unsupported public key version")
        pk = cls(r.integer(), r.integer(), r.integer(), r.text())
        r.done()
        return pk


@dataclass(frozen=True)
class Signature:
    leaf: int
    levels: tuple  # ((left, right, tau), ...) root first
    sigma: int

    def to_bytes(self, n: int) -> bytes:
        w = _width(n)
        out = Writer().u32(self.leaf).u8(len(self.levels)).u16(w)
        for triple in self.levels:
            for v in triple:
                out.raw(int_to_bytes(v, w))
        out.raw(int_to_bytes(self.sigma, w))
        return out.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "Signature":
        r = Reader(data)
        leaf, depth, w = r.u32(), r.u8(), r.u16()
        if w == 0:
            raise FormatError("zero element width")

        def el():
            return int.from_bytes(r.raw(w), "big")

        levels = tuple((el(), el(), el()) for _ in range(depth))
        sigma = el()
        r.done()
        return cls(leaf, levels, sigma)


@dataclass
class SignatureKeyPair:
    public: GmrPublicKey
    p: int
    q: int
    ref_seed: bytes
    next_leaf: int = 0
    _memo: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.p * self.q != self.public.n:
            raise ParameterError("factorisation does not match modulus")

    @property
    def remaining(self) -> int:
        return self.public.capacity - self.next_leaf

    def reference(self, level: int, index: int) -> int:
        n = self.public.n
        ctr = 0
        while True:
            s = int.from_bytes(derive(self.ref_seed, "ref", level, index, ctr), "big") % n
            if s and gcd(s, n) == 1:
                return s * s % n
            ctr += 1

    def _node_auth(self, level: int, index: int) -> tuple:
        key = (level, index)
        if key not in self._memo:
            pk = self.public
            left = self.reference(level + 1, 2 * index)
            right = self.reference(level + 1, 2 * index + 1)
            x = f_inverse(pk.pair_message(left, right), MESSAGE_BITS,
                          self.reference(level, index), self.p, self.q)
            self._memo[key] = (left, right, canonical(x, pk.n))
        return self._memo[key]

    def to_bytes(self) -> bytes:
        w = Writer().raw(KEY_MAGIC).u16(1).blob(self.public.to_bytes())
        w.integer(self.p).integer(self.q).blob(self.ref_seed).integer(self.next_leaf)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "SignatureKeyPair":
        r = Reader(data)
        r.expect(KEY_MAGIC)
        if r.u16() != 1:
            raise FormatError("unsupported key version")
        pub = GmrPublicKey.from_bytes(r.blob())
        kp = cls(pub, r.integer(), r.integer(), r.blob(), r.integer())
        r.done()
        return kp


def gmr_keygen(suite: AlgorithmSuite, seed: bytes, depth: int | None = None) -> SignatureKeyPair:
    """Fresh Blum-Williams modulus the size of the suite's reference modulus."""
    depth = suite.sig.depth if depth is None else depth
    if not 1 <= depth <= 20:
        raise ParameterError("depth must lie in [1, 20]")
    rng = Drbg(derive(seed, "gmr-keygen"))
    p, q = blum_williams_modulus(suite.sig.n_sig.bit_length(), rng)
    ref_seed = rng.randbytes(32)
    probe = SignatureKeyPair(GmrPublicKey(p * q, 0, depth, suite.enc.hash_name), p, q, ref_seed)
    pub = GmrPublicKey(p * q, probe.reference(0, 0), depth, suite.enc.hash_name)
    return SignatureKeyPair(pub, p, q, ref_seed)


def gmr_sign(kp: SignatureKeyPair, message: bytes) -> Signature:
    pk = kp.public
    if kp.next_leaf >= pk.capacity:
        raise CapacityExhausted(f"all {pk.capacity} leaves used")
    leaf = kp.next_leaf
    kp.next_leaf += 1
    d = pk.depth
    levels = tuple(kp._node_auth(level, leaf >> (d - level)) for level in range(d))
    x = f_inverse(pk.leaf_message(message), MESSAGE_BITS, kp.reference(d, leaf), kp.p, kp.q)
    return Signature(leaf, levels, canonical(x, pk.n))


def _authenticator_ok(v: int, n: int) -> bool:
    return 0 < v and 2 * v < n and gcd(v, n) == 1 and jacobi(v, n) == 1


def gmr_verify(public: GmrPublicKey, message: bytes, signature: Signature | bytes) -> bool:
    """Stateless check; malformed input is a plain rejection."""
    n, d = public.n, public.depth
    if isinstance(signature, (bytes, bytearray)):
        return verify_encoded(public, message, bytes(signature))
    if len(signature.levels) != d or not 0 <= signature.leaf < public.capacity:
        return False
    cur = public.root
    for level, (left, right, tau) in enumerate(signature.levels):
        if not (0 < left < n and 0 < right < n and _authenticator_ok(tau, n)):
            return False
        if f_forward(public.pair_message(left, right), MESSAGE_BITS, tau, n) != cur:
            return False
        cur = right if (signature.leaf >> (d - 1 - level)) & 1 else left
    if not _authenticator_ok(signature.sigma, n):
        return False
    return f_forward(public.leaf_message(message), MESSAGE_BITS, signature.sigma, n) == cur


def encode_signature(sig: Signature, public: GmrPublicKey) -> bytes:
    return sig.to_bytes(public.n)


def verify_encoded(public: GmrPublicKey, message: bytes, data: bytes) -> bool:
    """Verify a wire-encoded signature, insisting on the key's element width."""
    try:
        sig = Signature.from_bytes(data)
    except FormatError:
        return False
    if sig.to_bytes(public.n) != bytes(data):
        return False
    return gmr_verify(public, message, sig)
