"""Train the four-arm toy comparison and print per-round sparsity.

Equivalent to `collapse-lab train --preset norm-variants`, but prints a
compact table instead of writing files. Useful for eyeballing how the
plain-BN arms die while the post-shifted arm stays dense.
"""

import argparse
import sys
from collections import defaultdict

from collapse_lab.net.train import multi_round_experiment, preset_arms


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", default="norm-variants")
    ap.add_argument("--seeds", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0, help="first seed")
    args = ap.parse_args()

    arms = preset_arms(args.preset)
    seeds = [args.seed + i for i in range(args.seeds)]
    result = multi_round_experiment(arms, seeds)

    by_cell = defaultdict(dict)
    rounds = set()
    for row in result.rows:
        by_cell[(row["arm"], row["seed"])][row["round"]] = row
        rounds.add(row["round"])
    round_list = sorted(rounds)

    print(f"{'arm':>14} {'seed':>4} " + " ".join(f"r{r + 1:<2} spars" for r in round_list) + "  final val_acc")
    for (arm, seed), per_round in sorted(by_cell.items()):
        cells = " ".join(f"{per_round[r]['sparsity_ratio']:9.3f}" if r in per_round else f"{'-':>9}" for r in round_list)
        last = per_round[max(per_round)]
        print(f"{arm:>14} {seed:>4} {cells}  {last['val_acc']:.4f}")
    for arm, seed, message in result.failures:
        print(f"FAILED {arm} seed {seed}: {message}", file=sys.stderr)
    return 0 if result.rows else 1


if __name__ == "__main__":
    sys.exit(main())
