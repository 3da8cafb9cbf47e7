"""Build a universal certificate on a uniform tree and show how stage levels grow.

    python scripts/universal_demo.py --depth 16 --targets 6 --field rational
"""

import argparse
import time

from htlab.boundary import dense_target
from htlab.constructors import build_universal, verify_certificate
from htlab.errors import DepthExhausted
from htlab.fields import FieldSpec
from htlab.harmonic import TreeFunction
from htlab.space import ValueSpace
from htlab.tree import uniform_tree


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--depth", type=int, default=14)
    ap.add_argument("--targets", type=int, default=5)
    ap.add_argument("--field", choices=["gf2", "rational"], default="gf2")
    args = ap.parse_args()

    if args.field == "gf2":
        field, space, w = FieldSpec.gf2(), ValueSpace(FieldSpec.gf2()), "ones"
    else:
        field = FieldSpec.rational()
        space, w = ValueSpace(field, 1, "sup_abs"), "q"
    t = uniform_tree(args.depth, 2, field, w=w)
    targets = [dense_target(t, space, j) for j in range(1, args.targets + 1)]
    start = time.perf_counter()
    try:
        F, cert = build_universal(t, TreeFunction.zero(space, t, 0), targets=targets)
    except DepthExhausted as e:
        print(f"stopped: {e}")
        F, cert = e.partial
        targets = targets[: len(cert.entries)]
    elapsed = time.perf_counter() - start
    print(f"{'stage':>5} {'level':>5} {'slot mass':>12} {'achieved':>14} {'bound':>6}")
    for e in cert.entries:
        print(f"{e.index:>5} {e.level:>5} {str(e.slot_measure):>12} {str(e.achieved):>14} {str(e.bound):>6}")
    fails = verify_certificate(F, cert, t, targets)
    print(f"re-verified: {'ok' if not fails else fails}  ({elapsed:.2f}s)")


if __name__ == "__main__":
    main()
