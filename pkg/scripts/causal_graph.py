#!/usr/bin/env python3
"""Write the causal graph of one conversation as Graphviz DOT.

    python3 scripts/causal_graph.py --seed 7 > conv.dot
    python3 scripts/causal_graph.py --reference > dominated_exit.dot   # the dominated-exit example
    python3 scripts/causal_graph.py --trace run.jsonl        # first record of a trace file
"""

from __future__ import annotations

import argparse
import sys

from phatic.conversation import DOMINATED_EXIT, build_ruleset
from phatic.engine import Trace, causal_links, replay, run
from phatic.scenario import default_scenario

# read-only tokens re-produced by every step would swamp the picture
DEFAULT_HIDE = ("phase", "budget", "partner", "opinion", "related", "opposite", "upset")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    src = ap.add_mutually_exclusive_group()
    src.add_argument("--seed", type=int, default=0)
    src.add_argument("--reference", action="store_true")
    src.add_argument("--trace")
    ap.add_argument("--all-edges", action="store_true", help="keep edges via read-only tokens")
    args = ap.parse_args(argv)

    program, sc = build_ruleset(), default_scenario()
    if args.trace:
        with open(args.trace, encoding="utf-8") as fh:
            trace = Trace.loads(fh.readline())
    elif args.reference:
        trace = replay(sc, program, DOMINATED_EXIT)
    else:
        trace = run(sc, program, args.seed)
    graph = causal_links(trace)
    if not args.all_edges:
        graph.edges = [e for e in graph.edges if e.atom.pred not in DEFAULT_HIDE]
    sys.stdout.write(graph.to_dot(trace))
    return 0


if __name__ == "__main__":
    sys.exit(main())
