from math import gcd

import pytest
from hypothesis import given, settings, strategies as st

from sdrkms.cryptosuite import GmrPublicKey, Signature, SignatureKeyPair, gmr_keygen, gmr_sign, gmr_verify
from sdrkms.cryptosuite.gmr import MESSAGE_BITS, f_bit, f_forward, f_inverse
from sdrkms.errors import CapacityExhausted, ParameterError


def qr(n):
    return sorted({x * x % n for x in range(1, n) if gcd(x, n) == 1})


def compose(m, k, x, n):
    """f_{m_0}(f_{m_1}(... f_{m_{k-1}}(x))) with m_0 the low bit."""
    for i in reversed(range(k)):
        x = f_bit((m >> i) & 1, x, n)
    return x


@pytest.mark.parametrize("p,q", [(3, 7), (7, 11), (11, 23)])
def test_both_maps_permute_qr(p, q):
    n = p * q
    residues = qr(n)
    for bit in (0, 1):
        assert sorted(f_bit(bit, x, n) for x in residues) == residues


@pytest.mark.parametrize("p,q", [(3, 7), (7, 11)])
def test_inverse_is_exact_on_small_moduli(p, q):
    n = p * q
    for k in range(1, 7):
        for m in range(1 << k):
            for y in qr(n):
                x = f_inverse(m, k, y, p, q)
                assert x in qr(n)
                assert compose(m, k, x, n) == y


def test_forward_matches_bitwise_composition():
    n = 77
    for m in range(64):
        for x in qr(n):
            assert f_forward(m, 6, x, n) == compose(m, 6, x, n)


@pytest.fixture(scope="module")
def signer(suite32):
    return gmr_keygen(suite32, b"g" * 32, depth=3)


def test_sign_verify_and_reject_other_message(suite32):
    kp = gmr_keygen(suite32, b"a" * 32, depth=3)
    sig = gmr_sign(kp, b"hello")
    assert gmr_verify(kp.public, b"hello", sig)
    assert gmr_verify(kp.public, b"hello", sig.to_bytes(kp.public.n))
    assert not gmr_verify(kp.public, b"hellp", sig)


def test_capacity_is_enforced(suite32):
    kp = gmr_keygen(suite32, b"b" * 32, depth=2)
    sigs = [gmr_sign(kp, bytes([i])) for i in range(4)]
    assert [s.leaf for s in sigs] == [0, 1, 2, 3]
    assert all(gmr_verify(kp.public, bytes([i]), s) for i, s in enumerate(sigs))
    with pytest.raises(CapacityExhausted):
        gmr_sign(kp, b"one more")
    assert kp.remaining == 0


def test_every_bit_flip_of_an_encoded_signature_is_rejected(suite32):
    kp = gmr_keygen(suite32, b"c" * 32, depth=3)
    enc = gmr_sign(kp, b"msg").to_bytes(kp.public.n)
    for i in range(len(enc) * 8):
        bad = bytearray(enc)
        bad[i // 8] ^= 1 << (i % 8)
        assert not gmr_verify(kp.public, b"msg", bytes(bad)), i


def test_negated_authenticator_is_rejected(suite32):
    kp = gmr_keygen(suite32, b"d" * 32, depth=2)
    sig = gmr_sign(kp, b"m")
    n = kp.public.n
    flipped = Signature(sig.leaf, sig.levels, n - sig.sigma)
    # n - x and x have the same image under every f_m
    assert f_forward(kp.public.leaf_message(b"m"), MESSAGE_BITS, flipped.sigma, n) == \
        f_forward(kp.public.leaf_message(b"m"), MESSAGE_BITS, sig.sigma, n)
    assert not gmr_verify(kp.public, b"m", flipped)


def test_signature_from_another_leaf_is_rejected(suite32):
    kp = gmr_keygen(suite32, b"e" * 32, depth=2)
    sig = gmr_sign(kp, b"m")
    moved = Signature(1, sig.levels, sig.sigma)
    assert not gmr_verify(kp.public, b"m", moved)


def test_key_pair_serialisation_keeps_the_counter(suite32):
    kp = gmr_keygen(suite32, b"f" * 32, depth=3)
    gmr_sign(kp, b"x")
    clone = SignatureKeyPair.from_bytes(kp.to_bytes())
    assert clone.next_leaf == 1
    assert GmrPublicKey.from_bytes(kp.public.to_bytes()) == kp.public
    assert gmr_verify(kp.public, b"y", gmr_sign(clone, b"y"))


def test_keygen_is_deterministic(suite32):
    assert gmr_keygen(suite32, b"h" * 32, depth=3).public == gmr_keygen(suite32, b"h" * 32, depth=3).public
    pub = gmr_keygen(suite32, bytes(32)).public
    assert (pub.n, pub.root, pub.depth) == (2354329909, 2139480127, 10)


def test_bad_depth(suite32):
    with pytest.raises(ParameterError):
        gmr_keygen(suite32, b"x" * 32, depth=0)


@settings(max_examples=25, deadline=None)
@given(st.binary(max_size=64))
def test_any_message_verifies(signer, msg):
    if signer.remaining == 0:
        return
    assert gmr_verify(signer.public, msg, gmr_sign(signer, msg))
