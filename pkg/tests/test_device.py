import pytest

from sdrkms.container import ArchiveEntry, EntryType
from sdrkms.errors import ClearanceError, CompartmentError, KeyStateError, RoutingError, TrafficError
from sdrkms.labels import NATIONAL_CONFIDENTIAL, NATO_SECRET, UNCLASSIFIED
from sdrkms.lifecycle import KeyKind, KeyRecord, KeyState
from sdrkms.nodes import (DeviceState, Phase, decrypt_traffic, device_load_fill, device_zeroize,
                          encrypt_traffic, key_entry, mark_tampered, rsms_package_update)
from sdrkms.nodes.device import parse_share_role, share_role
from world import give_net_keys, make_world, net_key


def fill(w, targets, entries):
    container, headers = rsms_package_update(w.rsms, entries, [w.certs[t] for t in targets], 0)
    return container, dict(zip(targets, headers))


def test_keys_land_in_the_compartment_matching_their_label(world):
    national = KeyRecord("nat", KeyKind.OSM, "net", b"n" * 32, NATIONAL_CONFIDENTIAL, "beta")
    entries = [key_entry("x-keys", [net_key("alpha:g1")]), key_entry("y-keys", [national])]
    container, headers = fill(world, ["d1"], entries)
    dev = world.devices["d1"]
    device_load_fill(dev, headers["d1"], container, 1)
    assert [k.key_id for k in dev.key_info("x")] == ["alpha:g1"]
    assert [k.key_id for k in dev.key_info("y")] == ["nat"]
    assert dev.read_key("y", "nat") == b"n" * 32
    with pytest.raises(CompartmentError):
        dev.read_key("x", "nat")
    assert dev.access_log[-1] == ("x", "nat", False)


def test_load_is_all_or_nothing(world):
    bad = KeyRecord("s", KeyKind.SESSION, "session", b"s" * 32, NATO_SECRET, "alpha")
    entries = [key_entry("good", [net_key("alpha:g1")]), key_entry("bad", [bad]),
               ArchiveEntry(EntryType.WAVEFORM, "wf", UNCLASSIFIED, b"w")]
    container, headers = fill(world, ["d1"], entries)
    dev = world.devices["d1"]
    with pytest.raises(KeyStateError):
        device_load_fill(dev, headers["d1"], container, 1)
    assert dev.key_info("x") == [] and dev.files == {} and dev.loaded == []


def test_clearance_of_operator_and_certificate_both_apply(suite32):
    w = make_world(suite32, ("low",), clearance=NATIONAL_CONFIDENTIAL)
    container, headers = fill(w, ["low"], [key_entry("k", [net_key("alpha:g1")])])
    with pytest.raises(ClearanceError):
        device_load_fill(w.devices["low"], headers["low"], container, 1)


def test_loading_twice_is_harmless_and_wrong_recipient_fails(world):
    container, headers = fill(world, ["d1", "d2"], [ArchiveEntry(EntryType.WAVEFORM, "wf", UNCLASSIFIED, b"w")])
    dev = world.devices["d1"]
    device_load_fill(dev, headers["d1"], container, 1)
    device_load_fill(dev, headers["d1"], container, 2)
    assert dev.loaded == [container.container_id.hex()] and dev.files == {"wf": b"w"}
    with pytest.raises(RoutingError):
        device_load_fill(dev, headers["d2"], container, 1)


def test_no_session_or_tampered_device_refuses(world):
    container, headers = fill(world, ["d1", "d2"], [ArchiveEntry(EntryType.WAVEFORM, "wf", UNCLASSIFIED, b"w")])
    world.devices["d1"].session = None
    with pytest.raises(ClearanceError):
        device_load_fill(world.devices["d1"], headers["d1"], container, 1)
    dev = world.devices["d2"]
    give_net_keys(dev)
    mark_tampered(dev)
    assert all(r.state == KeyState.DESTROYED and not r.key_bytes for _, r in dev.records())
    with pytest.raises(KeyStateError):
        device_load_fill(dev, headers["d2"], container, 1)


def test_shares_combine_only_when_complete(world):
    dev = world.devices["d1"]
    shares = [KeyRecord(f"alpha/g1/share{i}", KeyKind.OSM, share_role("g1", i, 3), bytes([i + 1]) * 32,
                        NATO_SECRET, "alpha") for i in range(3)]
    c1, h1 = fill(world, ["d1"], [key_entry("s01", shares[:2])])
    device_load_fill(dev, h1["d1"], c1, 1)
    assert dev.find_key("x", "alpha") is None
    assert len(dev.channels["x"].shares) == 2
    c2, h2 = fill(world, ["d1"], [key_entry("s2", shares[2:])])
    device_load_fill(dev, h2["d1"], c2, 2)
    assert dev.find_key("x", "alpha") == "alpha:g1"
    assert dev.read_key("x", "alpha:g1") == bytes([1 ^ 2 ^ 3]) * 32
    assert dev.channels["x"].shares == {}


def test_share_role_round_trip():
    assert parse_share_role(share_role("g1", 2, 3)) == ("g1", 2, 3)
    with pytest.raises(Exception):
        parse_share_role("share/g1/3/3")


def test_install_supersedes_same_slot(world):
    dev = world.devices["d1"]
    first = net_key("alpha:a")
    dev.install_key("x", first)
    dev.install_key("x", net_key("alpha:b"))
    assert first.state == KeyState.DESTROYED and dev.find_key("x", "alpha") == "alpha:b"
    with pytest.raises(ClearanceError):
        dev.install_key("y", net_key("alpha:c"))


def test_traffic_round_trip_and_tamper(world):
    lead, d1 = world.devices["lead"], world.devices["d1"]
    give_net_keys(lead)
    give_net_keys(d1)
    frame = encrypt_traffic(lead, "alpha", b"hello net")
    assert decrypt_traffic(d1, "alpha", frame) == b"hello net"
    bad = bytearray(frame)
    bad[12] ^= 1
    with pytest.raises(TrafficError):
        decrypt_traffic(d1, "alpha", bytes(bad))
    with pytest.raises(TrafficError):
        decrypt_traffic(world.devices["d2"], "alpha", frame)


def test_zeroize_scopes(world):
    dev = world.devices["d1"]
    give_net_keys(dev)
    dev.install_key("y", KeyRecord("nat", KeyKind.OSM, "net", b"n" * 32, NATIONAL_CONFIDENTIAL, "beta"))
    dev.advance_phase(Phase.OPERATION)
    device_zeroize(dev, "y")
    assert dev.channels["x"].store["alpha:g1"].state == KeyState.ACTIVE
    assert dev.channels["y"].store["nat"].state == KeyState.DESTROYED
    device_zeroize(dev)
    assert dev.phase == Phase.RECOVERY
    assert all(r.state == KeyState.DESTROYED for _, r in dev.records())


def test_phase_order(world):
    dev = world.devices["d1"]
    with pytest.raises(KeyStateError):
        dev.advance_phase(Phase.RECOVERY)
    dev.advance_phase(Phase.OPERATION)
    dev.advance_phase(Phase.RECOVERY)


def test_snapshot_holds_no_destroyed_bytes(world):
    dev = world.devices["d1"]
    give_net_keys(dev)
    secret = bytes(dev.channels["x"].store["alpha:g1"].key_bytes)
    assert secret in dev.snapshot()
    device_zeroize(dev)
    assert secret not in dev.snapshot()


def test_device_needs_two_channels(world):
    ident = world.identities["d1"]
    with pytest.raises(ValueError):
        DeviceState(ident, world.devices["d1"].trust_store, world.registry, channels=(("x", NATO_SECRET),))
