"""Command-line front end.

Exit status: 0 success, 1 domain error (``error: <reason>: <message>`` on
stderr), 2 usage error.
"""

import argparse
import json
import os
import sys
from importlib import resources

from .container import (ArchiveEntry, EntryType, FullContainer, RecipientHeader, build_inner_archive,
                        inspect_outer, issue_header, open_container, seal_container)
from .cryptosuite.cramer_shoup import cs_keygen
from .cryptosuite.gmr import gmr_keygen
from .cryptosuite.keystream import SymmetricKey
from .cryptosuite.suite import AlgorithmSuite, generate_suite
from .encoding import Reader, Writer
from .errors import CertificateError, FormatError, SdrKmsError
from .identity.capabilities import ROLES
from .identity.certificates import Certificate, SubjectInfo, TrustStore, issue_certificate, verify_certificate
from .keyfile import NodeKeyFile, load_key_file, save_key_file
from .labels import ClassificationLabel
from .nodes.packaging import certificate_entry, fresh_transport_key
from .rng import Drbg, derive, seed_from_text
from .sim.audit import query_records, read_log
from .sim.engine import run_scenario
from .sim.scenario import validate_config

TK_MAGIC = b"SDRT"


def _seed(args) -> bytes | None:
    text = args.seed if getattr(args, "seed", None) is not None else os.environ.get("SDRKMS_SEED")
    return None if text is None else seed_from_text(str(text))


def _rng(args, label: str) -> Drbg:
    seed = _seed(args)
    return Drbg(None if seed is None else derive(seed, label))


def _read(path) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _write(path, data: bytes) -> None:
    with open(path, "wb") as fh:
        fh.write(data)


def _trust(args, now: int) -> TrustStore:
    store = TrustStore([Certificate.from_bytes(_read(p)) for p in args.trust])
    for p in args.cert or ():
        verdict = store.cache(Certificate.from_bytes(_read(p)), now)
        if not verdict:
            raise CertificateError(f"{p}: {verdict.reason.value}", verdict.reason)
    return store


# -- subcommands ----------------------------------------------------------------

def cmd_suite_gen(args):
    seed = _seed(args) or os.urandom(32)
    suite = generate_suite(args.bits, derive(seed, "suite-gen"), args.suite_id, depth=args.depth)
    _write(args.out, suite.to_bytes())
    print(f"suite {suite.suite_id} ({args.bits} bits) -> {args.out}")


def cmd_keygen(args):
    suite = AlgorithmSuite.from_bytes(_read(args.suite))
    seed = _seed(args) or os.urandom(32)
    kf = NodeKeyFile(args.id, args.role, suite, gmr_keygen(suite, derive(seed, "sig", args.id), args.depth),
                     cs_keygen(suite, derive(seed, "enc", args.id)))
    save_key_file(args.out, kf)
    print(f"{args.role} {args.id}: {kf.sig.public.capacity} signatures -> {args.out}")


def cmd_cert_issue(args):
    issuer = load_key_file(args.issuer)
    same = os.path.abspath(args.subject) == os.path.abspath(args.issuer)
    subject = issuer if same else load_key_file(args.subject)
    info = SubjectInfo(subject.node_id, subject.role, subject.suite.suite_id, subject.sig.public,
                       subject.encaps.public, ClassificationLabel.parse(args.clearance))
    cert = issue_certificate(issuer.issuer, info, args.valid_from, args.valid_to)
    save_key_file(args.issuer, issuer)
    _write(args.out, cert.to_bytes())
    print(f"certificate for {cert.subject_id} issued by {cert.issuer_id} -> {args.out}")


def cmd_cert_verify(args):
    store = TrustStore([Certificate.from_bytes(_read(p)) for p in args.trust])
    cert = Certificate.from_bytes(_read(args.cert))
    verdict = verify_certificate(cert, store, args.now)
    if not verdict:
        raise CertificateError(f"{cert.subject_id}: {verdict.reason.value}", verdict.reason)
    print(f"accepted {cert.subject_id} ({cert.role}, clearance {cert.clearance})")


def cmd_pack(args):
    signer = load_key_file(args.signer)
    entries = [ArchiveEntry(EntryType[args.type], args.name or os.path.basename(args.input),
                            ClassificationLabel.parse(args.classification), _read(args.input))]
    if args.signer_cert:
        entries.append(certificate_entry(Certificate.from_bytes(_read(args.signer_cert))))
    tk = fresh_transport_key(signer.suite, _rng(args, "pack"))
    container = seal_container(build_inner_archive(entries), signer.issuer, signer.suite, tk)
    save_key_file(args.signer, signer)
    _write(args.out, container.to_bytes())
    _write(args.out + ".tk", Writer().raw(TK_MAGIC).u16(tk.suite_id).raw(tk.key_bytes).getvalue())
    print(f"container {container.container_id.hex()} -> {args.out} (transport key {args.out}.tk)")


def _read_tk(path) -> SymmetricKey:
    r = Reader(_read(path))
    r.expect(TK_MAGIC)
    suite_id, key = r.u16(), r.raw(32)
    r.done()
    return SymmetricKey(key, suite_id)


def cmd_header(args):
    issuer = load_key_file(args.issuer)
    container = FullContainer.from_bytes(_read(args.container))
    recipient = Certificate.from_bytes(_read(args.recipient))
    store = _trust(args, args.now) if args.trust else None
    header = issue_header(container, _read_tk(args.tk), recipient, issuer.issuer, issuer.suite,
                          _rng(args, "header").randbytes(32), store, args.now)
    save_key_file(args.issuer, issuer)
    _write(args.out, header.to_bytes())
    print(f"header for {header.recipient_id} -> {args.out}")


def cmd_open(args):
    keys = load_key_file(args.key)
    store = _trust(args, args.now)
    entries = open_container(FullContainer.from_bytes(_read(args.container)),
                             RecipientHeader.from_bytes(_read(args.header)), keys.encaps, store, args.now,
                             keys.suite, recipient_id=keys.node_id)
    payload = [e for e in entries if e.entry_type != EntryType.CERTIFICATE]
    if len(payload) == 1 and not os.path.isdir(args.out):
        _write(args.out, payload[0].content)
    else:
        os.makedirs(args.out, exist_ok=True)
        for e in payload:
            _write(os.path.join(args.out, os.path.basename(e.name) or "entry"), e.content)
    for e in entries:
        print(f"{e.entry_type.name} {e.name} {e.classification} {len(e.content)} bytes")


def _describe(data: bytes) -> dict:
    magic = data[:4]
    if magic == b"SDRC":
        info = inspect_outer(data)
        return {"type": "container", "container_id": info.container_id.hex(), "suite_id": info.suite_id,
                "signer_id": info.signer_id, "payload_length": info.payload_length}
    if magic == b"SDRH":
        h = RecipientHeader.from_bytes(data)
        return {"type": "header", "container_id": h.container_id.hex(), "recipient_id": h.recipient_id,
                "suite_id": h.suite_id, "issuer_id": h.issuer_id, "size": len(data)}
    if magic == b"CERT":
        c = Certificate.from_bytes(data)
        return {"type": "certificate", "subject_id": c.subject_id, "role": c.role, "suite_id": c.suite_id,
                "clearance": str(c.clearance), "valid_from": c.valid_from, "valid_to": c.valid_to,
                "issuer_id": c.issuer_id}
    if magic == b"SKEY":
        k = NodeKeyFile.from_bytes(data)
        return {"type": "key", "node_id": k.node_id, "role": k.role, "suite_id": k.suite.suite_id,
                "signatures_left": k.sig.remaining}
    if magic == b"SUIT":
        s = AlgorithmSuite.from_bytes(data)
        return {"type": "suite", "suite_id": s.suite_id, "version": s.version,
                "security_bits": s.security_bits, "n_sig_bits": s.sig.n_sig.bit_length(),
                "p_bits": s.enc.p.bit_length(), "q_bits": s.enc.q.bit_length(),
                "n_str_bits": s.stream.n_str.bit_length(), "tree_depth": s.sig.depth}
    raise FormatError(f"unrecognised file magic {magic!r}")


def cmd_inspect(args):
    print(json.dumps(_describe(_read(args.file)), indent=2, sort_keys=True))


def _scenario_text(name: str) -> str:
    if os.path.exists(name):
        with open(name, encoding="utf-8") as fh:
            return fh.read()
    base = os.path.basename(name)
    for candidate in (base, base + ".scn"):
        bundled = resources.files("sdrkms").joinpath("scenarios", candidate)
        if bundled.is_file():
            return bundled.read_text(encoding="utf-8")
    raise FileNotFoundError(name)


def cmd_run(args):
    cfg = validate_config(_scenario_text(args.scenario))
    seed = args.seed
    if seed is None and os.environ.get("SDRKMS_SEED"):
        seed = int(os.environ["SDRKMS_SEED"])
    result = run_scenario(cfg, seed)
    if args.log:
        result.log.write(args.log)
        print(f"{len(result.log)} records -> {args.log}")
    else:
        sys.stdout.write(result.log_text())


def cmd_log_query(args):
    for rec in query_records(read_log(args.file), args.node, args.event, args.since, args.until, args.contains):
        print(rec.line())


# -- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sdrkms", description="SDR key management toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    suite = sub.add_parser("suite", help="algorithm suites").add_subparsers(dest="action", required=True)
    g = suite.add_parser("gen", help="generate a suite")
    g.add_argument("--bits", type=int, default=32, choices=(32, 512, 1024, 2048))
    g.add_argument("--suite-id", type=int, default=1)
    g.add_argument("--depth", type=int, default=10)
    g.add_argument("--seed")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_suite_gen)

    k = sub.add_parser("keygen", help="node key pair")
    k.add_argument("--suite", required=True)
    k.add_argument("--id", required=True)
    k.add_argument("--role", required=True, choices=ROLES)
    k.add_argument("--depth", type=int)
    k.add_argument("--seed")
    k.add_argument("--out", required=True)
    k.set_defaults(func=cmd_keygen)

    cert = sub.add_parser("cert", help="certificates").add_subparsers(dest="action", required=True)
    ci = cert.add_parser("issue")
    ci.add_argument("--issuer", required=True, help="issuer key file (rewritten)")
    ci.add_argument("--subject", required=True, help="subject key file; same as --issuer to self-sign")
    ci.add_argument("--clearance", default="NATO_SECRET")
    ci.add_argument("--from", dest="valid_from", type=int, default=0)
    ci.add_argument("--to", dest="valid_to", type=int, default=100_000)
    ci.add_argument("--out", required=True)
    ci.set_defaults(func=cmd_cert_issue)
    cv = cert.add_parser("verify")
    cv.add_argument("--cert", required=True)
    cv.add_argument("--trust", action="append", required=True)
    cv.add_argument("--now", type=int, default=0)
    cv.set_defaults(func=cmd_cert_verify)

    pk = sub.add_parser("pack", help="build and seal a container")
    pk.add_argument("--in", dest="input", required=True)
    pk.add_argument("--signer", required=True)
    pk.add_argument("--signer-cert")
    pk.add_argument("--type", default="WAVEFORM", choices=[t.name for t in EntryType if t != EntryType.CERTIFICATE])
    pk.add_argument("--name")
    pk.add_argument("--classification", default="UNCLASSIFIED")
    pk.add_argument("--seed")
    pk.add_argument("--out", required=True)
    pk.set_defaults(func=cmd_pack)

    h = sub.add_parser("header", help="issue a recipient header")
    h.add_argument("--container", required=True)
    h.add_argument("--tk", required=True, help="transport key sidecar written by pack")
    h.add_argument("--recipient", required=True, help="recipient certificate")
    h.add_argument("--issuer", required=True)
    h.add_argument("--trust", action="append")
    h.add_argument("--cert", action="append")
    h.add_argument("--now", type=int, default=0)
    h.add_argument("--seed")
    h.add_argument("--out", required=True)
    h.set_defaults(func=cmd_header)

    o = sub.add_parser("open", help="verify and decrypt a container")
    o.add_argument("--container", required=True)
    o.add_argument("--header", required=True)
    o.add_argument("--key", required=True)
    o.add_argument("--trust", action="append", required=True)
    o.add_argument("--cert", action="append", help="extra verified certificates (signer, header issuer)")
    o.add_argument("--now", type=int, default=0)
    o.add_argument("--out", required=True)
    o.set_defaults(func=cmd_open)

    i = sub.add_parser("inspect", help="print public fields of any sdrkms file")
    i.add_argument("file")
    i.set_defaults(func=cmd_inspect)

    r = sub.add_parser("run", help="run a scenario")
    r.add_argument("scenario", help="path, or the name of a bundled scenario")
    r.add_argument("--seed", type=int)
    r.add_argument("--log")
    r.set_defaults(func=cmd_run)

    lg = sub.add_parser("log", help="audit logs").add_subparsers(dest="action", required=True)
    q = lg.add_parser("query")
    q.add_argument("file")
    q.add_argument("--node")
    q.add_argument("--event")
    q.add_argument("--since", type=int)
    q.add_argument("--until", type=int)
    q.add_argument("--contains")
    q.set_defaults(func=cmd_log_query)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except SdrKmsError as exc:
        print(f"error: {exc.reason}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 1
    return 0
