import json

import pytest

from sdrkms.cli import main


@pytest.fixture(scope="module")
def pki(tmp_path_factory):
    d = tmp_path_factory.mktemp("pki")
    p = lambda name: str(d / name)
    assert main(["suite", "gen", "--bits", "32", "--seed", "s", "--out", p("suite")]) == 0
    assert main(["keygen", "--suite", p("suite"), "--id", "rsms", "--role", "RSMS", "--depth", "8",
                 "--seed", "a", "--out", p("rsms.key")]) == 0
    assert main(["keygen", "--suite", p("suite"), "--id", "r1", "--role", "DEVICE", "--depth", "4",
                 "--seed", "b", "--out", p("r1.key")]) == 0
    assert main(["cert", "issue", "--issuer", p("rsms.key"), "--subject", p("rsms.key"),
                 "--out", p("rsms.cert")]) == 0
    assert main(["cert", "issue", "--issuer", p("rsms.key"), "--subject", p("r1.key"),
                 "--out", p("r1.cert")]) == 0
    (d / "wave.bin").write_bytes(bytes(range(256)) * 3)
    assert main(["pack", "--in", p("wave.bin"), "--signer", p("rsms.key"), "--signer-cert", p("rsms.cert"),
                 "--seed", "c", "--out", p("c.sdrc")]) == 0
    assert main(["header", "--container", p("c.sdrc"), "--tk", p("c.sdrc.tk"), "--recipient", p("r1.cert"),
                 "--issuer", p("rsms.key"), "--trust", p("rsms.cert"), "--seed", "d",
                 "--out", p("r1.hdr")]) == 0
    return p


def open_args(p, container, out):
    return ["open", "--container", container, "--header", p("r1.hdr"), "--key", p("r1.key"),
            "--trust", p("rsms.cert"), "--out", out]


def test_cert_verify(pki, capsys):
    assert main(["cert", "verify", "--cert", pki("r1.cert"), "--trust", pki("rsms.cert")]) == 0
    assert main(["cert", "verify", "--cert", pki("r1.cert"), "--trust", pki("rsms.cert"),
                 "--now", "10000000"]) == 1
    assert "error: " in capsys.readouterr().err


def test_pack_header_open_round_trip(pki, tmp_path):
    out = str(tmp_path / "wave.out")
    assert main(open_args(pki, pki("c.sdrc"), out)) == 0
    assert (tmp_path / "wave.out").read_bytes() == bytes(range(256)) * 3


def test_tampered_container_exits_one(pki, tmp_path, capsys):
    data = bytearray(open(pki("c.sdrc"), "rb").read())
    data[-5] ^= 1
    bad = tmp_path / "bad.sdrc"
    bad.write_bytes(bytes(data))
    assert main(open_args(pki, str(bad), str(tmp_path / "x"))) == 1
    assert capsys.readouterr().err.startswith("error: ")
    assert not (tmp_path / "x").exists()


def test_inspect_shows_only_public_fields(pki, capsys):
    assert main(["inspect", pki("c.sdrc")]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["type"] == "container" and info["signer_id"] == "rsms"
    assert main(["inspect", pki("r1.key")]) == 0
    assert json.loads(capsys.readouterr().out)["signatures_left"] == 16
    assert main(["inspect", pki("wave.bin")]) == 1


def test_usage_errors_exit_two(capsys):
    assert main(["frobnicate"]) == 2
    assert main(["keygen", "--id", "x"]) == 2
    capsys.readouterr()


def test_missing_file_is_io_error(tmp_path, capsys):
    assert main(["inspect", str(tmp_path / "absent")]) == 1
    assert "error: io" in capsys.readouterr().err


def test_run_is_deterministic_and_queryable(tmp_path, capsys):
    a, b = str(tmp_path / "a.log"), str(tmp_path / "b.log")
    assert main(["run", "netjoin", "--seed", "7", "--log", a]) == 0
    assert main(["run", "netjoin", "--seed", "7", "--log", b]) == 0
    assert open(a, "rb").read() == open(b, "rb").read()
    capsys.readouterr()
    assert main(["log", "query", a, "--event", "JOIN_COMPLETE"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3 and all("|JOIN_COMPLETE|" in line for line in lines)


def test_run_rejects_bad_scenario(tmp_path, capsys):
    bad = tmp_path / "bad.scn"
    bad.write_text("[nodes]\nx = WIZARD\n")
    assert main(["run", str(bad)]) == 1
    assert "line 2" in capsys.readouterr().err
