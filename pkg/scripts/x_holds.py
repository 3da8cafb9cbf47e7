"""Print the hold intervals and upper-density proxies of the X builder for a config.

    python scripts/x_holds.py configs/rational_x.json
"""

import sys

from htlab.config import RunConfig
from htlab.frequency import build_upper_dense, verify_holds
from htlab.tree import build_tree


def main(path: str) -> None:
    cfg = RunConfig.load(path)
    t, space = build_tree(cfg.tree), cfg.value_space()
    balls = cfg.x.build_balls(t, space)
    held, log = build_upper_dense(t, cfg.x.seed_function.build(t, space), balls, cfg.x.theta_min, cfg.x.rounds)
    for v in log.visits:
        print(f"round {v.round} ball {v.ball + 1}: levels {v.start}..{v.end} (theta {v.theta}, distance {v.achieved})")
    for b, rep in enumerate(log.reports):
        print(f"ball {b + 1}: " + (f"upper proxy {rep.upper:.4f}" if rep else "no usable window"))
    print(f"stop: {log.stop_reason}")
    print("holds verified" if not verify_holds(held, log, balls, t) else "hold check FAILED")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "configs/rational_x.json")
