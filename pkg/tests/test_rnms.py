import random

import pytest
from hypothesis import given, settings, strategies as st

from sdrkms.container import ArchiveEntry, EntryType
from sdrkms.cryptosuite.audit import watching
from sdrkms.labels import UNCLASSIFIED
from sdrkms.nodes import Message, MsgType, Quarantine, seal_for_recipients
from sdrkms.nodes.base import Channel
from sdrkms.nodes.rnms import (PlanEntry, RnmsState, decode_entries, delta_for, digest, encode_entries,
                               merge_entries, merge_into, rms_sync, rnms_route)
from sdrkms.rng import Drbg

PEERS = ["p0", "p1", "p2", "p3", "p4"]
vv_st = st.dictionaries(st.sampled_from(PEERS), st.integers(1, 5)).map(lambda d: tuple(sorted(d.items())))
entry_st = st.builds(lambda v, stamp, w, extra: PlanEntry(v, stamp, w, tuple(sorted({**dict(extra), **dict(stamp)}.items()))),
                     st.binary(max_size=3), vv_st, st.sampled_from(PEERS), vv_st)


@given(entry_st, entry_st, entry_st)
def test_merge_is_a_semilattice(a, b, c):
    assert merge_entries(a, a) == a
    assert merge_entries(a, b) == merge_entries(b, a)
    assert merge_entries(merge_entries(a, b), c) == merge_entries(a, merge_entries(b, c))


def test_causally_later_write_wins():
    a, b = RnmsState("p4"), RnmsState("p0")
    a.write("k", b"old")
    a, b = rms_sync(a, b)
    b.write("k", b"new")        # p0 < p4, yet it saw the old value
    a, b = rms_sync(a, b)
    assert a.planning_store["k"].value == b.planning_store["k"].value == b"new"


def test_concurrent_writes_resolve_identically():
    a, b = RnmsState("p0"), RnmsState("p1")
    a.write("k", b"from-a")
    b.write("k", b"from-b")
    a, b = rms_sync(a, b)
    assert a.planning_bytes() == b.planning_bytes()
    assert a.planning_store["k"].value == b"from-b"


def run_trial(seed: int, writes: int = 200) -> list[RnmsState]:
    rnd = random.Random(seed)
    peers = {p: RnmsState(p) for p in PEERS}
    for _ in range(writes):
        p = rnd.choice(PEERS)
        peers[p].write(f"k{rnd.randrange(12)}", rnd.randbytes(4))
        if rnd.random() < 0.3:
            x, y = rnd.sample(PEERS, 2)
            peers[x], peers[y] = rms_sync(peers[x], peers[y])
    # quiescence: random pairwise rounds until every pair has met along a connected schedule
    met = {p: {p} for p in PEERS}
    while any(len(m) < len(PEERS) for m in met.values()):
        x, y = rnd.sample(PEERS, 2)
        peers[x], peers[y] = rms_sync(peers[x], peers[y])
        met[x] = met[y] = met[x] | met[y]
    return list(peers.values())


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_random_schedules_converge(seed):
    stores = run_trial(seed)
    assert len({s.planning_bytes() for s in stores}) == 1


def test_digest_delta_sync_matches_full_sync():
    a, b = RnmsState("p0"), RnmsState("p1")
    for i in range(5):
        a.write(f"a{i}", b"x")
        b.write(f"b{i}", b"y")
    a.write("shared", b"1")
    delta = delta_for(a, digest(b))
    assert set(delta) == {f"a{i}" for i in range(5)} | {"shared"}
    merge_into(b, decode_entries(encode_entries(delta)))
    merge_into(a, delta_for(b, digest(a)))
    assert a.planning_bytes() == b.planning_bytes()
    assert delta_for(a, digest(b)) == {}


@pytest.fixture(scope="module")
def sealed(suite32):
    from world import make_world
    w = make_world(suite32, ("d1", "d2"))
    entries = [ArchiveEntry(EntryType.WAVEFORM, "wf", UNCLASSIFIED, b"payload")]
    container, headers = seal_for_recipients(w.rsms.identity.issuer, w.suite, entries,
                                             [w.certs["d1"], w.certs["d2"]], Drbg(b"r"))
    return container, headers


def msg(kind, body, i=1):
    return Message(kind, "rsms", "rnms1", Channel.MANUAL, body, i)


def test_headers_wait_for_their_container(sealed):
    container, headers = sealed
    st_ = RnmsState("rnms1")
    ops = []
    with watching(ops.append):
        out = rnms_route(st_, msg(MsgType.HEADER, headers[0].to_bytes()))
        assert [(m.msg_type, m.receiver) for m in out] == [(MsgType.HEADER, "d1")]
        out = rnms_route(st_, msg(MsgType.CONTAINER, container.to_bytes()))
        assert [(m.msg_type, m.receiver) for m in out] == [(MsgType.CONTAINER, "d1")]
        out = rnms_route(st_, msg(MsgType.HEADER, headers[1].to_bytes()))
        assert [m.receiver for m in out] == ["d2", "d2"]
        rnms_route(st_, msg(MsgType.CONTAINER, container.to_bytes()))
    assert ops == []
    assert len(st_.containers) == 1
    assert all(m.channel == Channel.WIRED for m in st_.outbox)


def test_malformed_input_is_quarantined():
    st_ = RnmsState("rnms1")
    with pytest.raises(Quarantine):
        rnms_route(st_, msg(MsgType.CONTAINER, b"SDRC garbage"))
    with pytest.raises(Quarantine):
        rnms_route(st_, msg(MsgType.JOIN_REQUEST, b""))
    assert len(st_.quarantine) == 2 and st_.containers == {}
