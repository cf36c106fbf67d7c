"""Operational keys per second from the batch generator, scalar and vector paths."""

import argparse
import time

from sdrkms.cryptosuite import SuiteRegistry, generate_suite
from sdrkms.labels import NATO_SECRET
from sdrkms.nodes import BatchSpec, ngdm_generate_batch


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--bits", type=int, default=32, choices=(32, 512, 1024, 2048))
    ap.add_argument("--count", type=int, default=1000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    suite = generate_suite(args.bits, bytes(32))
    reg = SuiteRegistry.of(suite)
    spec = BatchSpec(args.count, NATO_SECRET, suite.suite_id, "bench")
    best = float("inf")
    for i in range(args.repeat):
        start = time.perf_counter()
        batch = ngdm_generate_batch(spec, i.to_bytes(32, "big"), reg)
        best = min(best, time.perf_counter() - start)
    assert len({bytes(r.key_bytes) for r in batch}) == args.count
    print(f"{args.bits}-bit suite: {args.count} keys in {best:.3f} s ({args.count / best:.0f} keys/s)")


if __name__ == "__main__":
    main()
