"""Encoded header and container sizes against recipient count and signer tree depth."""

import argparse

from sdrkms.container import ArchiveEntry, EntryType
from sdrkms.cryptosuite import generate_suite
from sdrkms.identity import default_capabilities
from sdrkms.labels import NATO_SECRET, UNCLASSIFIED
from sdrkms.nodes import enroll, seal_for_recipients, self_enroll_rsms
from sdrkms.rng import Drbg


def measure(suite, recipients: int, depth: int, payload: int) -> tuple[int, int]:
    caps = default_capabilities()
    root = self_enroll_rsms("rsms", suite, b"h" * 32, NATO_SECRET, 0, 10_000, caps, depth=depth)
    certs = [enroll(root.issuer, f"r{i:03d}", "DEVICE", suite, b"h" * 32, NATO_SECRET, 0, 10_000, caps,
                    depth=1).cert for i in range(recipients)]
    entries = [ArchiveEntry(EntryType.WAVEFORM, "wf", UNCLASSIFIED, bytes(payload))]
    container, headers = seal_for_recipients(root.issuer, suite, entries, certs, Drbg(b"seal"))
    return len(container.payload), sum(len(h.to_bytes()) for h in headers)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--bits", type=int, default=32, choices=(32, 512, 1024, 2048))
    ap.add_argument("--payload", type=int, default=4096)
    ap.add_argument("--recipients", type=int, nargs="+", default=[1, 5, 10, 16, 25, 50])
    args = ap.parse_args()
    suite = generate_suite(args.bits, bytes(32))
    print("recipients depth payload_bytes header_bytes per_header ratio")
    for n in args.recipients:
        depth = (2 * n + 1).bit_length()  # leaves for the root cert, n certs, the container and n headers
        payload, headers = measure(suite, n, depth, args.payload)
        print(f"{n:10d} {depth:5d} {payload:13d} {headers:12d} {headers // n:10d} {headers / payload:5.2f}")


if __name__ == "__main__":
    main()
