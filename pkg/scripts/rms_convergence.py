"""Anti-entropy convergence: sync rounds needed until all peers hold identical stores."""

import argparse
import random
import statistics

from sdrkms.nodes import RnmsState, rms_sync


def trial(seed: int, peers: int, writes: int, sync_rate: float) -> int:
    rnd = random.Random(seed)
    names = [f"p{i}" for i in range(peers)]
    state = {p: RnmsState(p) for p in names}
    for _ in range(writes):
        state[rnd.choice(names)].write(f"k{rnd.randrange(12)}", rnd.randbytes(4))
        if rnd.random() < sync_rate:
            x, y = rnd.sample(names, 2)
            state[x], state[y] = rms_sync(state[x], state[y])
    rounds = 0
    while len({s.planning_bytes() for s in state.values()}) > 1:
        x, y = rnd.sample(names, 2)
        state[x], state[y] = rms_sync(state[x], state[y])
        rounds += 1
    return rounds


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--peers", type=int, default=5)
    ap.add_argument("--writes", type=int, default=200)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--sync-rate", type=float, default=0.3)
    args = ap.parse_args()
    rounds = [trial(s, args.peers, args.writes, args.sync_rate) for s in range(args.trials)]
    print(f"{args.trials} trials, {args.peers} peers, {args.writes} writes: "
          f"sync rounds to convergence mean {statistics.mean(rounds):.1f}, "
          f"median {statistics.median(rounds)}, max {max(rounds)}")


if __name__ == "__main__":
    main()
