"""Reference algorithm suite: GMR signatures, Cramer-Shoup KEM, x^2 mod n pad."""

from .cramer_shoup import (CsCiphertext, CsPublicKey, CsSecretKey, EncapsKeyPair,
                           cs_decapsulate, cs_encapsulate, cs_keygen)
from .gmr import (GmrPublicKey, Signature, SignatureKeyPair, gmr_keygen, gmr_sign,
                  gmr_verify, verify_encoded)
from .keystream import SymmetricKey, keystream, keystream_many, potp_encrypt, potp_xor
from .registry import (SuiteRegistry, activate_pending, lookup_suite, register_suite,
                       schedule_activation)
from .suite import (AlgorithmSuite, EncParams, SigParams, StreamParams, generate_suite,
                    toy_suite, validate_suite)

__all__ = [
    "AlgorithmSuite", "CsCiphertext", "CsPublicKey", "CsSecretKey", "EncParams",
    "EncapsKeyPair", "GmrPublicKey", "SigParams", "Signature", "SignatureKeyPair",
    "StreamParams", "SuiteRegistry", "SymmetricKey", "activate_pending", "cs_decapsulate",
    "cs_encapsulate", "cs_keygen", "generate_suite", "gmr_keygen", "gmr_sign", "gmr_verify",
    "keystream", "keystream_many", "lookup_suite", "potp_encrypt", "potp_xor",
    "register_suite", "schedule_activation", "toy_suite", "validate_suite", "verify_encoded",
]
