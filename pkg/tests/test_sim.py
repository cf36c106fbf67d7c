from importlib import resources

import pytest

from sdrkms.errors import ConfigError, InvariantViolation
from sdrkms.lifecycle import KeyKind, KeyState
from sdrkms.sim.audit import AuditLog, EventRecord, SimClock, parse_log, query_records
from sdrkms.sim.engine import Simulation, run_scenario
from sdrkms.sim.scenario import format_config, validate_config


def bundled(name: str) -> str:
    return resources.files("sdrkms").joinpath("scenarios", name).read_text()


@pytest.fixture(scope="module")
def netjoin_run():
    return run_scenario(validate_config(bundled("netjoin.scn")))


SMALL = """
[scenario]
name = small
seed = 3
gmr_depth = 6
join_timeout = 10
max_retries = 2
retry_backoff = 4

[channels]
y.loss = {yloss}

[nodes]
rsms = RSMS
lead = DEVICE clearance=NATO_SECRET
d1 = DEVICE clearance=NATO_SECRET
ngdm1 = NGDM
k1 = KDMS

[kdms]
k1 = lead, d1

[nets]
alpha.lead = lead
alpha.members = lead, d1
alpha.shares = 1
alpha.generators = ngdm1

[timeline]
0 = MANUAL_TRANSFER from=ngdm1 to=k1 net=alpha slot=g1 state=ACTIVE
20 = NET_JOIN joiner=d1 net=alpha
"""


def test_every_bundled_scenario_validates_and_round_trips():
    for entry in resources.files("sdrkms").joinpath("scenarios").iterdir():
        if entry.name.endswith(".scn"):
            cfg = validate_config(entry.read_text())
            assert validate_config(format_config(cfg)) == cfg


@pytest.mark.parametrize("text,fragment", [
    ("[scenario]\nseed = x\n", "line 2"),
    ("[nodes]\na = WIZARD\n", "line 2"),
    ("[nodes]\nrsms = RSMS\n[timeline]\n5 = SYNC a=r1 b=r2\n1 = NET_JOIN joiner=d net=n\n", "line 5"),
    ("[channels]\nx.loss = 1.5\n", "line 2"),
    ("[channels]\nmanual.loss = 0.5\n", "line 2"),
    ("key = value\n", "line 1"),
    ("[nodes]\nrsms = RSMS\nk1 = KDMS\nk2 = KDMS\n[kdms]\nk1 = k2\nk2 = k1\n", "cycle"),
    ("[nodes]\nrsms = RSMS\n[timeline]\n1 = EXPLODE\n", "line 4"),
])
def test_validation_reports_line_numbers(text, fragment):
    with pytest.raises(ConfigError) as exc:
        validate_config(text)
    assert any(fragment in e for e in exc.value.errors), exc.value.errors


def test_validation_collects_all_errors():
    with pytest.raises(ConfigError) as exc:
        validate_config("[scenario]\nseed = x\ngmr_depth = y\n[bogus]\n")
    assert len(exc.value.errors) >= 3


def test_netjoin_completes(netjoin_run):
    log = netjoin_run.log
    completes = log.query(event="JOIN_COMPLETE")
    assert sorted(r.node for r in completes) == ["d1", "d2", "d3"]
    assert len(log.query(event="TRAFFIC_OK")) == 3
    assert not log.query(event="INVARIANT")
    lead = netjoin_run.devices["lead"]
    for d in ("d1", "d2", "d3"):
        dev = netjoin_run.devices[d]
        assert dev.read_key("x", "alpha:g1") == lead.read_key("x", "alpha:g1")


def test_message_conservation(netjoin_run):
    end = netjoin_run.log.query(event="END")[0].detail
    n = len(netjoin_run.wire)
    assert f"messages={n} delivered={n}" in end
    assert len(netjoin_run.log.query(event="SEND")) == n


def test_no_session_key_survives(netjoin_run):
    for dev in netjoin_run.devices.values():
        for _, rec in dev.records():
            if rec.kind == KeyKind.SESSION:
                assert rec.state == KeyState.DESTROYED and not rec.key_bytes


def test_rnms_stays_blind(netjoin_run):
    for nid, state in netjoin_run.rnms.items():
        assert sum(netjoin_run.crypto_ops.get(nid, {}).values()) == 0
        snap = state.snapshot()
        assert not any(secret in snap for secret in netjoin_run.secrets)
    assert netjoin_run.rnms["rnms1"].planning_bytes() == netjoin_run.rnms["rnms2"].planning_bytes()


def test_determinism_and_seed_override():
    cfg = validate_config(bundled("netjoin.scn"))
    a, b = run_scenario(cfg).log_text(), run_scenario(cfg).log_text()
    assert a == b
    assert run_scenario(cfg, seed=8).log_text() != a


def test_lossless_small_scenario():
    run = run_scenario(validate_config(SMALL.format(yloss=0.0)))
    assert run.log.query(event="JOIN_COMPLETE")


def test_total_loss_retries_then_gives_up():
    run = run_scenario(validate_config(SMALL.format(yloss=1.0)))
    log = run.log
    assert not log.query(event="JOIN_COMPLETE")
    assert len(log.query(node="d1", event="JOIN_START")) == 3      # first try plus two retries
    assert len(log.query(event="JOIN_RETRY")) == 2
    assert len(log.query(event="JOIN_GIVEUP")) == 1
    n = len(run.wire)
    assert f"messages={n} delivered={n - 3} lost=3" in log.query(event="END")[0].detail
    lost = log.query(event="LOST")
    assert len(lost) == 3 and all("JOIN_REQUEST" in r.detail for r in lost)
    assert not run.devices["d1"].channels["y"].busy


def test_partial_loss_is_reproducible():
    cfg = validate_config(SMALL.format(yloss=0.5))
    assert run_scenario(cfg).log_text() == run_scenario(cfg).log_text()


def test_rollover_scenario():
    run = run_scenario(validate_config(bundled("rollover.scn")))
    log = run.log
    assert len(log.query(event="ROLLOVER_PROMOTE", since=130, until=130)) == 4
    assert len(log.query(event="TRAFFIC_OK", since=130, until=130)) == 3
    assert len(log.query(event="UNRECOVERABLE")) == 4
    assert log.query(event="TRAFFIC_FAIL", since=170)
    assert sorted(run.unrecoverable) == ["d1:alpha", "d2:alpha", "d3:alpha", "lead:alpha"]


def test_agility_scenario():
    run = run_scenario(validate_config(bundled("agility.scn")))
    log = run.log
    assert not log.query(event="SUITE_ACTIVE", until=149)
    assert {r.node for r in log.query(event="SUITE_ACTIVE")} == {"rsms", "lead", "d1", "d2", "d3"}
    assert len(log.query(event="TRAFFIC_OK", since=150)) == 3
    assert all(dev.registry.active_id == 2 for dev in run.devices.values())


def test_unauthorised_compromise_is_refused():
    text = bundled("rollover.scn").replace("authorized_by=rsms", "authorized_by=kdms-a", 1)
    log = run_scenario(validate_config(text)).log
    assert log.query(event="ROLLOVER_DENIED", since=130, until=130)
    assert not log.query(event="ROLLOVER_PROMOTE", since=130, until=130)


def test_invariant_violation_is_logged_and_raised():
    sim = Simulation(validate_config(SMALL.format(yloss=0.0)))
    dev = sim.devices["d1"]
    from world import net_key
    rec = net_key("alpha:x")
    dev.channels["x"].store["alpha:x"] = rec
    rec.state = KeyState.DESTROYED      # bypass the state machine: bytes stay behind
    with pytest.raises(InvariantViolation) as exc:
        sim.run()
    assert exc.value.log.records[-1].event == "INVARIANT"


def test_audit_log_round_trip_and_query():
    log = AuditLog()
    log.append(0, "a", "START", "x|y")
    log.append(2, "b", "SEND", "#1 m")
    recs = parse_log(log.text())
    assert [r.line() for r in recs] == log.lines()
    assert [r.node for r in query_records(recs, since=1)] == ["b"]
    with pytest.raises(ValueError):
        log.append(1, "c", "LATE")
    clock = SimClock()
    clock.advance(3)
    with pytest.raises(ValueError):
        clock.advance(2)
    assert EventRecord(1, 0, "n", "e") < EventRecord(1, 1, "m", "d")
