"""Seeded prime searches for the three modulus families a suite needs."""

from sympy import isprime, jacobi_symbol

from ..rng import Drbg


def random_prime(bits: int, rng: Drbg, residue: int = 1, modulus: int = 2) -> int:
    """Uniform-ish prime of exactly ``bits`` bits with p % modulus == residue."""
    if bits < 2:
        raise ValueError("need at least 2 bits")
    lo, hi = 1 << (bits - 1), 1 << bits
    if hi - lo <= 4096:
        # tiny ranges: enumerate so the search always terminates
        cands = [p for p in range(lo, hi) if p % modulus == residue and isprime(p)]
        if not cands:
            raise ValueError(f"no {bits}-bit prime = {residue} mod {modulus}")
        return cands[rng.randbelow(len(cands))]
    while True:
        x = rng.randrange(lo, hi)
        x += (residue - x) % modulus
        if x < hi and isprime(x):
            return x


def blum_williams_modulus(bits: int, rng: Drbg) -> tuple[int, int]:
    """Primes (p, q) with p = 3 mod 8, q = 7 mod 8 and p*q of exactly ``bits`` bits."""
    for _ in range(10_000):
        p = random_prime(bits // 2, rng, 3, 8)
        q = random_prime(bits - bits // 2, rng, 7, 8)
        if p != q and (p * q).bit_length() == bits:
            return p, q
    raise ValueError(f"no Blum-Williams modulus of {bits} bits")


def blum_modulus(bits: int, rng: Drbg) -> tuple[int, int]:
    """Primes (p, q), both = 3 mod 4, p != q, product of exactly ``bits`` bits."""
    for _ in range(10_000):
        p = random_prime(bits // 2, rng, 3, 4)
        q = random_prime(bits - bits // 2, rng, 3, 4)
        if p != q and (p * q).bit_length() == bits:
            return p, q
    raise ValueError(f"no Blum modulus of {bits} bits")


def schnorr_group(p_bits: int, q_bits: int, rng: Drbg) -> tuple[int, int]:
    """Primes (p, q) with q | p - 1; a safe prime when q_bits == p_bits - 1."""
    if q_bits == p_bits - 1:
        while True:
            q = random_prime(q_bits, rng, 1, 2)
            p = 2 * q + 1
            if p.bit_length() == p_bits and isprime(p):
                return p, q
    q = random_prime(q_bits, rng, 1, 2)
    lo, hi = 1 << (p_bits - 1), 1 << p_bits
    while True:
        k = rng.randrange((lo + q - 1) // q, hi // q)
        k -= k % 2  # p = kq + 1 odd
        p = k * q + 1
        if lo <= p < hi and isprime(p):
            return p, q


def subgroup_generator(p: int, q: int, rng: Drbg, avoid=()) -> int:
    """Element of multiplicative order exactly q in Z_p^*."""
    cofactor = (p - 1) // q
    while True:
        h = rng.randrange(2, p - 1)
        g = pow(h, cofactor, p)
        if g != 1 and g not in avoid:
            return g


def jacobi(a: int, n: int) -> int:
    return int(jacobi_symbol(a % n, n))
