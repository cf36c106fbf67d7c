from dataclasses import replace

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from sdrkms.container import (ArchiveEntry, EntryType, FullContainer, RecipientHeader, build_inner_archive,
                              container_id_for, inspect_outer, issue_header, open_container,
                              open_container_bytes, parse_inner_archive, seal_container)
from sdrkms.cryptosuite import potp_encrypt
from sdrkms.encoding import Writer
from sdrkms.errors import (ArchiveError, CertificateError, ContainerSignatureError, HeaderDecapsulationError, HeaderSignatureError,
                           NestingError, RoutingError)
from sdrkms.identity import CapabilityList, TrustStore
from sdrkms.labels import UNCLASSIFIED, ClassificationLabel, Compartment, Level
from sdrkms.nodes import certificate_entry, seal_for_recipients
from sdrkms.nodes.packaging import fresh_transport_key
from sdrkms.rng import Drbg
from world import make_world

entry_types = st.sampled_from([t for t in EntryType if t != EntryType.CERTIFICATE])
label_st = st.builds(ClassificationLabel, st.sampled_from(Level), st.sampled_from(Compartment))
entries_st = st.lists(st.builds(ArchiveEntry, entry_types, st.text(max_size=12), label_st,
                                st.binary(max_size=200).filter(lambda b: b[:4] != b"SDRC")),
                      min_size=1, max_size=5)


@pytest.fixture(scope="module")
def fleet(suite32):
    return make_world(suite32, ("d1", "d2"))


def open_for(w, device_id, container, header):
    dev = w.devices[device_id]
    return open_container(container, header, dev.identity.encaps, dev.trust_store, 1, w.registry,
                          recipient_id=device_id)


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(entries_st)
def test_archive_round_trip(entries):
    assert parse_inner_archive(build_inner_archive(entries)) == entries


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(entries_st)
def test_seal_open_round_trip(fleet, entries):
    container, headers = seal_for_recipients(fleet.rsms.identity.issuer, fleet.suite, entries,
                                             [fleet.certs["d1"]], Drbg(b"rt"))
    assert open_for(fleet, "d1", container, headers[0]) == entries
    wire_c, wire_h = container.to_bytes(), headers[0].to_bytes()
    assert FullContainer.from_bytes(wire_c) == container
    assert RecipientHeader.from_bytes(wire_h) == headers[0]


def test_every_recipient_opens_the_same_payload(fleet):
    entries = [ArchiveEntry(EntryType.POLICY, "p", UNCLASSIFIED, b"policy")]
    container, headers = seal_for_recipients(fleet.rsms.identity.issuer, fleet.suite, entries,
                                             [fleet.certs["d1"], fleet.certs["d2"]], Drbg(b"x"))
    assert [h.recipient_id for h in headers] == ["d1", "d2"]
    assert open_for(fleet, "d1", container, headers[0]) == open_for(fleet, "d2", container, headers[1])
    with pytest.raises(RoutingError):
        open_for(fleet, "d2", container, headers[0])
    # d2 cannot use d1's header even when it ignores the recipient field
    dev = fleet.devices["d2"]
    with pytest.raises(HeaderDecapsulationError):
        open_container(container, headers[0], dev.identity.encaps, dev.trust_store, 1, fleet.registry)


def test_header_from_other_container_is_rejected(fleet):
    entries = [ArchiveEntry(EntryType.POLICY, "p", UNCLASSIFIED, b"a")]
    c1, h1 = seal_for_recipients(fleet.rsms.identity.issuer, fleet.suite, entries, [fleet.certs["d1"]], Drbg(b"1"))
    c2, _ = seal_for_recipients(fleet.rsms.identity.issuer, fleet.suite, entries, [fleet.certs["d1"]], Drbg(b"2"))
    with pytest.raises(RoutingError):
        open_for(fleet, "d1", c2, h1[0])


def test_nesting_rejected_when_building(fleet):
    inner, _ = seal_for_recipients(fleet.rsms.identity.issuer, fleet.suite,
                                   [ArchiveEntry(EntryType.POLICY, "p", UNCLASSIFIED, b"a")], [], Drbg(b"n"))
    nested = [ArchiveEntry(EntryType.WAVEFORM, "inner", UNCLASSIFIED, inner.to_bytes())]
    with pytest.raises(NestingError):
        build_inner_archive(nested)
    with pytest.raises(NestingError):
        seal_for_recipients(fleet.rsms.identity.issuer, fleet.suite, nested, [fleet.certs["d1"]], Drbg(b"n"))


def forge_nested(w, recipient):
    """Hand-built archive around a real container, sealed without the builder's checks."""
    inner, _ = seal_for_recipients(w.rsms.identity.issuer, w.suite,
                                   [ArchiveEntry(EntryType.POLICY, "p", UNCLASSIFIED, b"a")], [], Drbg(b"f"))
    blob, name = inner.to_bytes(), b"inner"
    archive = (Writer().raw(b"SDRA").u16(1).u16(1).u8(EntryType.WAVEFORM).u16(len(name)).raw(name)
               .u8(0).u64(len(blob)).raw(blob).getvalue())
    tk = fresh_transport_key(w.suite, Drbg(b"tk"))
    payload = potp_encrypt(tk, w.suite, archive)
    signer = w.rsms.identity.issuer
    unsigned = FullContainer(container_id_for(payload), w.suite.suite_id, payload, signer.subject_id)
    container = replace(unsigned, signature=signer.sign(unsigned.signed_bytes()))
    header = issue_header(container, tk, w.certs[recipient], signer, w.suite, b"r" * 32)
    return archive, container, header


def test_nesting_rejected_when_opening(fleet):
    archive, container, header = forge_nested(fleet, "d1")
    with pytest.raises(NestingError):
        parse_inner_archive(archive)
    with pytest.raises(NestingError):
        open_for(fleet, "d1", container, header)
    with pytest.raises(NestingError):
        open_container_bytes(container.to_bytes(), header.to_bytes(), fleet.devices["d1"].identity.encaps,
                             fleet.devices["d1"].trust_store, 1, fleet.registry)


def test_unsigned_or_resigned_payload_is_rejected(fleet):
    entries = [ArchiveEntry(EntryType.POLICY, "p", UNCLASSIFIED, b"abc")]
    container, headers = seal_for_recipients(fleet.rsms.identity.issuer, fleet.suite, entries,
                                             [fleet.certs["d1"]], Drbg(b"s"))
    stripped = replace(container, signature=b"")
    with pytest.raises(ContainerSignatureError):
        open_for(fleet, "d1", stripped, headers[0])
    other = fleet.devices["d2"].identity.issuer
    impostor = replace(container, signer_id="d2", signature=other.sign(replace(container, signer_id="d2").signed_bytes()))
    caps = CapabilityList({"RSMS": {"issue_header", "seal_container"}, "DEVICE": set()})
    dev = fleet.devices["d1"]
    with pytest.raises(ContainerSignatureError):
        open_container(impostor, headers[0], dev.identity.encaps, dev.trust_store, 1, fleet.registry, caps=caps)


def test_header_signature_and_issuer_checks(fleet):
    entries = [ArchiveEntry(EntryType.POLICY, "p", UNCLASSIFIED, b"abc")]
    container, headers = seal_for_recipients(fleet.rsms.identity.issuer, fleet.suite, entries,
                                             [fleet.certs["d1"]], Drbg(b"h"))
    with pytest.raises(HeaderSignatureError):
        open_for(fleet, "d1", container, replace(headers[0], issuer_id="nobody"))
    with pytest.raises(HeaderSignatureError):
        open_for(fleet, "d1", container, replace(headers[0], wrapped_key=headers[0].wrapped_key[::-1]))


def test_embedded_signer_certificate(fleet, suite32):
    """A signer unknown to the recipient is accepted through a verified embedded certificate."""
    w = make_world(suite32, ("d1",), extra=[("gen", "NGDM")])
    gen = w.identities["gen"]
    dev = w.devices["d1"]
    fresh = TrustStore(list(dev.trust_store.roots.values()))
    entries = [certificate_entry(gen.cert), ArchiveEntry(EntryType.POLICY, "p", UNCLASSIFIED, b"x")]
    container, headers = seal_for_recipients(gen.issuer, suite32, entries, [w.certs["d1"]], Drbg(b"e"))
    # the header issuer (gen) must be known for the header check, so cache it ...
    fresh.cache(gen.cert, 0)
    assert open_container(container, headers[0], dev.identity.encaps, fresh, 1, w.registry) == entries
    # ... and without any certificate for gen nothing opens
    bare = TrustStore(list(dev.trust_store.roots.values()))
    with pytest.raises(HeaderSignatureError):
        open_container(container, headers[0], dev.identity.encaps, bare, 1, w.registry)


def test_recipient_certificate_checked_when_issuing(fleet, suite32):
    other = make_world(suite32, ("d9",), seed=b"o" * 32)
    c, _ = seal_for_recipients(fleet.rsms.identity.issuer, suite32,
                               [ArchiveEntry(EntryType.POLICY, "p", UNCLASSIFIED, b"x")], [], Drbg(b"i"))
    tk = fresh_transport_key(suite32, Drbg(b"i"))
    with pytest.raises(CertificateError):
        issue_header(c, tk, other.certs["d9"], fleet.rsms.identity.issuer, suite32, b"r" * 32,
                     fleet.rsms.trust_store, 0)


def test_archive_rejects_garbage_and_duplicate_certificates(fleet):
    with pytest.raises(ArchiveError):
        parse_inner_archive(b"SDRA\x00\x01\x00\x01\x09")
    with pytest.raises(ArchiveError):
        build_inner_archive([])
    cert = certificate_entry(fleet.certs["d1"])
    with pytest.raises(ArchiveError):
        build_inner_archive([cert, cert])


def test_inspect_outer_needs_no_keys(fleet):
    container, _ = seal_for_recipients(fleet.rsms.identity.issuer, fleet.suite,
                                       [ArchiveEntry(EntryType.POLICY, "p", UNCLASSIFIED, b"x" * 50)], [],
                                       Drbg(b"q"))
    info = inspect_outer(container.to_bytes())
    assert info.container_id == container_id_for(container.payload)
    assert info.signer_id == "rsms" and info.payload_length == len(container.payload)


def test_unknown_suite_is_a_routing_error(fleet):
    container, headers = seal_for_recipients(fleet.rsms.identity.issuer, fleet.suite,
                                             [ArchiveEntry(EntryType.POLICY, "p", UNCLASSIFIED, b"x")],
                                             [fleet.certs["d1"]], Drbg(b"u"))
    moved = replace(container, suite_id=7)
    with pytest.raises(RoutingError):
        open_for(fleet, "d1", moved, replace(headers[0], suite_id=7))
