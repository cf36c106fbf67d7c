from dataclasses import replace

import pytest

from sdrkms.cryptosuite import cs_keygen, gmr_keygen
from sdrkms.errors import CapabilityDenied, DongleAbsent, DongleLocked, FormatError, ParameterError, WrongPassword
from sdrkms.identity import (CapabilityList, Certificate, Issuer, Rejection, SubjectInfo, TrustStore,
                             authenticate_operator, default_capabilities, provision_dongle)
from sdrkms.identity.certificates import issue_certificate, verify_certificate
from sdrkms.labels import NATIONAL_CONFIDENTIAL, NATO_SECRET
from sdrkms.nodes import enroll, self_enroll_rsms


@pytest.fixture(scope="module")
def root(suite32):
    return self_enroll_rsms("rsms", suite32, b"r" * 32, NATO_SECRET, 0, 1000, depth=6)


def test_default_whitelist():
    caps = default_capabilities()
    assert caps.allows("RSMS", "issue_certificate")
    assert not caps.allows("RNMS", "decrypt_payload")
    assert not caps.allows("DEVICE", "issue_certificate")
    assert not caps.allows("NOBODY", "anything")
    with pytest.raises(CapabilityDenied):
        caps.require("KDMS", "seal_container")


def test_capability_text_round_trip():
    caps = default_capabilities().grant("KDMS", "audit")
    assert CapabilityList.parse(caps.to_text()) == caps
    with pytest.raises(FormatError):
        CapabilityList.parse("no colon here")


def test_certificate_issue_and_verify(suite32, root):
    ident = enroll(root.issuer, "d1", "DEVICE", suite32, b"s" * 32, NATIONAL_CONFIDENTIAL, 10, 500)
    ts = TrustStore([root.cert])
    assert verify_certificate(ident.cert, ts, 10)
    assert Certificate.from_bytes(ident.cert.to_bytes()) == ident.cert
    assert verify_certificate(ident.cert, ts, 9).reason == Rejection.NOT_YET_VALID
    assert verify_certificate(ident.cert, ts, 501).reason == Rejection.EXPIRED
    assert verify_certificate(ident.cert, TrustStore(), 10).reason == Rejection.UNKNOWN_ISSUER
    forged = replace(ident.cert, clearance=NATO_SECRET)
    assert verify_certificate(forged, ts, 10).reason == Rejection.BAD_SIGNATURE


def test_trust_store_caches_only_valid_certs(suite32, root):
    ts = TrustStore([root.cert])
    good = enroll(root.issuer, "good", "DEVICE", suite32, b"s" * 32, NATO_SECRET, 0, 100).cert
    assert ts.cache(good, 50)
    assert ts.lookup("good", 50) == good
    assert ts.lookup("good", 101) is None
    bad = replace(good, subject_id="evil")
    assert not ts.cache(bad, 50)
    assert ts.cached_ids() == ["good"]


def test_only_rsms_roots_and_self_signatures(suite32, root):
    with pytest.raises(ParameterError):
        TrustStore([enroll(root.issuer, "x", "DEVICE", suite32, b"s" * 32, NATO_SECRET, 0, 9).cert])
    dev = enroll(root.issuer, "dev", "DEVICE", suite32, b"s" * 32, NATO_SECRET, 0, 9)
    subject = SubjectInfo("dev", "DEVICE", 1, dev.cert.sig_public, dev.cert.encaps_public, NATO_SECRET)
    with pytest.raises(CapabilityDenied):
        issue_certificate(dev.issuer, subject, 0, 9)
    with pytest.raises(ParameterError):
        issue_certificate(root.issuer, subject, 9, 9)


def test_issuing_requires_capability(suite32):
    caps = CapabilityList({"RSMS": {"package_update"}})
    sig = gmr_keygen(suite32, b"q" * 32, depth=2)
    enc = cs_keygen(suite32, b"q" * 32)
    issuer = Issuer("rsms", "RSMS", sig)
    with pytest.raises(CapabilityDenied):
        issue_certificate(issuer, SubjectInfo("rsms", "RSMS", 1, sig.public, enc.public, NATO_SECRET), 0, 5, caps)
    assert sig.next_leaf == 0


def test_dongle_login_and_lockout():
    dongle = provision_dongle("op", "secret", b"s" * 32, clearance=NATO_SECRET)
    session = authenticate_operator(dongle, "secret")
    assert session.operator_id == "op" and session.clearance == NATO_SECRET
    for _ in range(2):
        with pytest.raises(WrongPassword):
            authenticate_operator(dongle, "guess")
    with pytest.raises(DongleLocked):
        authenticate_operator(dongle, "guess")
    with pytest.raises(DongleLocked):
        authenticate_operator(dongle, "secret")


def test_dongle_absent_or_tampered_device():
    dongle = provision_dongle("op", "pw", b"s" * 32)
    with pytest.raises(DongleAbsent):
        authenticate_operator(None, "pw")

    class Tampered:
        tampered = True

    with pytest.raises(DongleAbsent):
        authenticate_operator(dongle, "pw", Tampered())
    dongle.present = False
    with pytest.raises(DongleAbsent):
        authenticate_operator(dongle, "pw")


def test_success_resets_failure_count():
    dongle = provision_dongle("op", "pw", b"s" * 32)
    for _ in range(2):
        with pytest.raises(WrongPassword):
            authenticate_operator(dongle, "x")
    authenticate_operator(dongle, "pw")
    assert dongle.failures == 0
