#!/usr/bin/env python3
"""Exact and sampled frequency of the two reference flow paths.

The exact value comes from forward propagation over the state space; the
sampled one from seeds 0..N-1.  Useful when retuning family weights.

    python3 scripts/path_probability.py [--seeds 10000] [--budget 12] [--rules FILE]
"""

from __future__ import annotations

import argparse
import time
from collections import Counter

from phatic.conversation import (MONOLOGUE_SIGNATURE, NORMATIVE_SIGNATURE, build_ruleset,
                                 path_signature, signature_probability)
from phatic.engine import run
from phatic.scenario import default_scenario


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=10_000)
    ap.add_argument("--budget", type=int, default=None)
    ap.add_argument("--rules", default=None)
    args = ap.parse_args(argv)

    sc = default_scenario()
    if args.budget:
        sc = sc.with_budget(args.budget)
    program = build_ruleset(args.rules)

    t0 = time.perf_counter()
    sigs = Counter(path_signature(run(sc, program, s)) for s in range(args.seeds))
    sampled_s = time.perf_counter() - t0

    print(f"{'path':<10} {'exact p':>12} {'expected':>10} {'observed':>9}   (n={args.seeds})")
    for name, sig in (("normative", NORMATIVE_SIGNATURE), ("monologue", MONOLOGUE_SIGNATURE)):
        p = float(signature_probability(program, sc, sig))
        print(f"{name:<10} {p:12.3e} {p * args.seeds:10.2f} {sigs[sig]:9d}")
    print(f"distinct signatures: {len(sigs)}; sampling took {sampled_s:.1f}s")
    print("most common:")
    for sig, n in sigs.most_common(5):
        print(f"  {n:6d}  {' > '.join(sig)}")


if __name__ == "__main__":
    main()
