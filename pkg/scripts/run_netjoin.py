"""Run a bundled scenario and print a short summary of the audit log."""

import argparse
from collections import Counter
from importlib import resources

from sdrkms.sim.engine import run_scenario
from sdrkms.sim.scenario import validate_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", default="netjoin.scn")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--log", help="write the full audit log here")
    args = ap.parse_args()
    text = resources.files("sdrkms").joinpath("scenarios", args.scenario).read_text()
    run = run_scenario(validate_config(text), args.seed)
    if args.log:
        run.log.write(args.log)
    events = Counter(r.event for r in run.log.records)
    for name in ("JOIN_COMPLETE", "JOIN_GIVEUP", "TRAFFIC_OK", "TRAFFIC_FAIL", "ROLLOVER_PROMOTE",
                 "UNRECOVERABLE", "SUITE_ACTIVE", "LOAD_OK", "LOAD_REJECT"):
        print(f"{name:18s} {events[name]}")
    print(run.log.query(event="END")[0].detail)
    for nid in sorted(run.crypto_ops):
        ops = run.crypto_ops[nid]
        print(f"{nid:10s} decapsulate={ops.get('decapsulate', 0):3d} keystream={ops.get('keystream', 0):3d}")


if __name__ == "__main__":
    main()
