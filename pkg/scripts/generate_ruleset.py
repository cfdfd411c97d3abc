#!/usr/bin/env python3
"""Write the conversation ruleset (src/phatic/data/conversation.phatic).

Move rules are ground in their topic (and, for greetings and goodbyes, in the
agent pair) so that rule names alone identify the move, e.g.
``change_topic_weather_baseball``.  Everything else is expressed with rule
variables.  The output is committed; tests check it is in sync with this
script.

    python3 scripts/generate_ruleset.py [--scenario FILE] [--out FILE] [--check]
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from phatic.dsl import parse_program
from phatic.scenario import POLARITIES, Scenario, default_scenario, load_scenario

OUT = Path(__file__).resolve().parents[1] / "src" / "phatic" / "data" / "conversation.phatic"
STYLES = ("typical", "enthusiastic")

# One utterance spends one turn.  Two turns are always held back for goodbyes.
SPEND = "spoken(C, N) * clock(K) * $budget(B) * (K + 2 < B)"
SPENT = "spoken(C, N + 1) * clock(K + 1)"
OPEN = "$phase(open) * !absent unsettled"

# Choice is uniform over rule instances, so a family with many instances
# (12 possible topic changes out of weather) would swamp one with few (a
# single continue_talking).  Weights divide each family's mass by its typical
# instance count so that, in a typical state, every applicable move family is
# about equally likely.
FAMILY_MASS = {
    "topic_talk": Fraction(1, 2),  # 2 agents x 2 styles; the staple move, so double mass
    "answer": Fraction(1, 2),  # 2 styles
    "question": Fraction(1, 2),  # either agent may ask
    "change_topic": Fraction(1, 2),  # divided again by the number of related topics
    "continue_talking": Fraction(1),
    "reciprocate": Fraction(1),
    "wind_down": Fraction(2),  # closing is favoured once the window opens
    "disagree": Fraction(1, 4),  # vocal disagreement is the marked reaction
}


def rule(name: str, pre: list[str], post: list[str], weight=1) -> str:
    head = f"rule {name}:"
    if Fraction(weight) != 1:
        head += f" weight {Fraction(weight)}:"
    lines = [head]
    lines.append("    " + "\n  * ".join(pre))
    lines.append("  -o " + ("\n  * ".join(post) if post else "()") + ".")
    return "\n".join(lines)


def section(title: str) -> str:
    return f"\n% {'-' * 70}\n% {title}\n% {'-' * 70}\n"


def generate(sc: Scenario, mass: dict | None = None) -> str:
    m = {**FAMILY_MASS, **(mass or {})}
    a, b = sc.agents
    pairs = [(a, b), (b, a)]
    topics = list(sc.topics)
    out = [
        "% Conversation ruleset.  Generated by scripts/generate_ruleset.py; edit that.",
        "%",
        "% Flow tokens: phase(greeting|open|closing), topic(T), floor(free|C),",
        "% asked(C, C', T), and the transient `unsettled` token that a statement",
        "% leaves behind until a listener-reaction rule clears it.",
    ]

    out.append(section("greetings"))
    for x, y in pairs:
        out.append(rule(
            f"greet_{x}_{y}",
            ["$phase(greeting)", f"to_greet({x}, {y})", "clock(K)", "$budget(B)", "(K + 2 < B)"],
            [f"greeted({x}, {y})", "clock(K + 1)"],
        ))

    out.append(section("small talk: only once both have greeted"))
    for t in sc.small_talk_topics:
        out.append(rule(
            f"small_talk_{t}",
            ["phase(greeting)", "greeted(C, C')", "greeted(C', C)", SPEND],
            ["phase(open)", f"topic({t})", "floor(free)", SPENT],
        ))

    out.append(section("topic talk: state an opinion on the current topic"))
    for t in topics:
        for style in STYLES:
            for pol in POLARITIES:
                post = ["floor(C)", f"stated(C, {t}, {pol})", "unsettled"]
                if style == "enthusiastic":
                    post += [f"gusto(C, {t})", "unsettled"]
                out.append(rule(
                    f"topic_talk_{t}_{style}_{pol}",
                    [f"$topic({t})", OPEN, "floor(X)", "!absent floor(C)",
                     f"$opinion(C, {t}, {pol})", SPEND],
                    post + [SPENT],
                    m["topic_talk"],
                ))

    out.append(section("continue talking: only the speaker holding the floor"))
    for t in topics:
        out.append(rule(
            f"continue_talking_{t}",
            [f"$topic({t})", OPEN, "$floor(C)", SPEND],
            [SPENT],
            m["continue_talking"],
        ))

    out.append(section("questions, answers, reciprocation"))
    for t in topics:
        out.append(rule(
            f"ask_question_{t}",
            [f"$topic({t})", OPEN, "floor(X)", "$partner(C, C')", SPEND],
            [f"asked(C, C', {t})", SPENT],
            m["question"],
        ))
    for t in topics:
        for style in STYLES:
            for pol in POLARITIES:
                post = ["floor(C)", f"stated(C, {t}, {pol})", "unsettled"]
                if style == "enthusiastic":
                    post += [f"gusto(C, {t})", "unsettled"]
                out.append(rule(
                    f"answer_question_{t}_{style}_{pol}",
                    ["$phase(open)", f"asked(C', C, {t})", f"$opinion(C, {t}, {pol})", SPEND],
                    post + [SPENT],
                    m["answer"],
                ))
        out.append(rule(
            f"answer_question_{t}_neutral",
            ["$phase(open)", f"asked(C', C, {t})", f"!absent opinion(C, {t}, O)", SPEND],
            ["floor(C)", SPENT],
        ))
    for t in topics:
        for pol in POLARITIES:
            out.append(rule(
                f"reciprocate_question_{t}_{pol}",
                ["$phase(open)", f"asked(C', C, {t})", f"$opinion(C, {t}, {pol})",
                 "affinity(C', C, A)", SPEND],
                ["floor(C')", f"stated(C, {t}, {pol})", "unsettled",
                 "affinity(C', C, A + 1)", SPENT],
                m["reciprocate"],
            ))

    out.append(section("topic change: only to a related topic"))
    for t in topics:
        # either agent may change to any related topic
        w = m["change_topic"] / max(1, len(sc.related_to(t)))
        for u in topics:
            if u == t:
                continue
            out.append(rule(
                f"change_topic_{t}_{u}",
                [f"topic({t})", f"$related({t}, {u})", OPEN, "floor(X)", f"$opinion(C, {u}, O)", SPEND],
                [f"topic({u})", "floor(free)", SPENT],
                w,
            ))

    out.append(section("listener reactions to a stated opinion"))
    for t in topics:
        for pol in POLARITIES:
            other = "negative" if pol == "positive" else "positive"
            out.append(rule(
                f"disagree_strongly_{t}_{pol}",
                ["$phase(open)", f"stated(C', {t}, {other})", "unsettled", "$partner(C', C)",
                 f"$opinion(C, {t}, {pol})", "floor(Y)", SPEND],
                ["floor(C)", "disagreed(C, C')", "unsettled", SPENT],
                m["disagree"],
            ))
    out.append(rule(
        "keep_disagreement_private",
        ["stated(C, T, O)", "unsettled", "$partner(C, C')", "$opinion(C', T, P)", "$opposite(O, P)"],
        [],
    ))
    out.append(rule(
        "like_from_agreement",
        ["stated(C, T, O)", "unsettled", "$partner(C, C')", "$opinion(C', T, O)",
         "affinity(C', C, A)"],
        ["affinity(C', C, A + 1)"],
    ))
    out.append(rule(
        "no_shared_opinion",
        ["stated(C, T, O)", "unsettled", "$partner(C, C')", "!absent opinion(C', T, P)"],
        [],
    ))
    out.append(rule(
        "dislike_from_disagreement",
        ["disagreed(C', C)", "unsettled", "affinity(C, C', A)", "feels(C, F)"],
        ["affinity(C, C', A - 2)", "feels(C, sad)"],
    ))
    out.append(rule(
        "happy_from_enthusiastic_agreement",
        ["gusto(C, T)", "unsettled", "$partner(C, C')", "$opinion(C, T, O)",
         "$opinion(C', T, O)", "feels(C', content)"],
        ["feels(C', happy)"],
    ))
    out.append(rule(
        "enthusiasm_not_shared",
        ["gusto(C, T)", "unsettled", "$partner(C, C')", "$opinion(C, T, O)",
         "$opinion(C', T, P)", "$opposite(O, P)"],
        [],
    ))
    out.append(rule(
        "enthusiasm_lost_on_listener",
        ["gusto(C, T)", "unsettled", "$partner(C, C')", "!absent opinion(C', T, P)"],
        [],
    ))
    out.append(rule(
        "enthusiasm_unmatched_mood",
        ["gusto(C, T)", "unsettled", "$partner(C, C')", "$opinion(C, T, O)",
         "$opinion(C', T, O)", "!absent feels(C', content)"],
        [],
    ))

    out.append(section("participation balance and leaving"))
    out.append(rule(
        "annoyed_by_unfair_participation",
        ["$phase(open)", "feels(C, content)", "$partner(C, C')", "$spoken(C', N)", "$clock(K)",
         "(3 * N > 2 * K)"],
        ["feels(C, annoyed)"],
    ))
    out.append(rule(
        "terminate_conversation",
        ["phase(open)", "!absent unsettled", "$feels(C, F)", "$upset(F)", SPEND],
        ["phase(closing)", SPENT],
    ))
    out.append(rule(
        "wind_down",
        ["phase(open)", "!absent unsettled", "$clock(K)", "$budget(B)", "(K + 4 >= B)"],
        ["phase(closing)"],
        m["wind_down"],
    ))

    out.append(section("goodbyes"))
    for x, y in pairs:
        out.append(rule(
            f"say_goodbye_{x}_{y}",
            ["$phase(closing)", f"to_part({x}, {y})", "clock(K)"],
            ["clock(K + 1)"],
        ))
    return "\n".join(out) + "\n"


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", help="scenario JSON (default: shipped scenario)")
    ap.add_argument("--out", default=str(OUT))
    ap.add_argument("--check", action="store_true", help="fail if the output file is stale")
    args = ap.parse_args(argv)

    sc = load_scenario(args.scenario) if args.scenario else default_scenario()
    text = generate(sc)
    program = parse_program(text)
    if args.check:
        current = Path(args.out).read_text(encoding="utf-8") if Path(args.out).exists() else ""
        if current != text:
            print(f"{args.out} is stale; rerun scripts/generate_ruleset.py", file=sys.stderr)
            return 1
        return 0
    Path(args.out).write_text(text, encoding="utf-8")
    print(f"wrote {len(program)} rules to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
