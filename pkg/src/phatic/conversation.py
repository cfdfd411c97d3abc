"""The shipped conversation model: ruleset loading, move families, norms.

Rule names carry their move family as a prefix (``topic_talk_baseball_...``),
and the classifier and surface layer both key off those names.  Anything not
in the inventory below is rejected as a malformed trace.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Optional, Sequence

from .dsl import Program, load_program, parse_program
from .engine import Trace, TraceStep
from .kernel import State
from .scenario import Scenario

DOMINATION = "domination"
VOCALIZED_DISAGREEMENT = "vocalized_disagreement"
EARLY_TERMINATION = "early_termination"
VIOLATIONS = (DOMINATION, VOCALIZED_DISAGREEMENT, EARLY_TERMINATION)

# (family, pattern); order matters only where prefixes overlap
_FAMILIES = [
    ("greet", re.compile(r"greet_([a-z0-9]+)_([a-z0-9]+)")),
    ("small_talk", re.compile(r"small_talk_([a-z0-9]+)")),
    ("topic_talk", re.compile(r"topic_talk_([a-z0-9]+)_(typical|enthusiastic)_(positive|negative)")),
    ("continue_talking", re.compile(r"continue_talking_([a-z0-9]+)")),
    ("question", re.compile(r"ask_question_([a-z0-9]+)")),
    ("answer", re.compile(r"answer_question_([a-z0-9]+)_(?:(typical|enthusiastic)_(positive|negative)|neutral)")),
    ("reciprocate", re.compile(r"reciprocate_question_([a-z0-9]+)_(positive|negative)")),
    ("change_topic", re.compile(r"change_topic_([a-z0-9]+)_([a-z0-9]+)")),
    ("disagree", re.compile(r"disagree_strongly_([a-z0-9]+)_(positive|negative)")),
    ("terminate", re.compile(r"terminate_conversation")),
    ("goodbye", re.compile(r"say_goodbye_([a-z0-9]+)_([a-z0-9]+)")),
]
BOOKKEEPING = frozenset({
    "keep_disagreement_private", "like_from_agreement", "no_shared_opinion",
    "dislike_from_disagreement", "happy_from_enthusiastic_agreement",
    "enthusiasm_not_shared", "enthusiasm_lost_on_listener", "enthusiasm_unmatched_mood",
    "annoyed_by_unfair_participation", "wind_down",
})
MOVE_FAMILIES = tuple(f for f, _ in _FAMILIES)


class MalformedTrace(ValueError):
    pass


class EmptyBatch(ValueError):
    pass


def move_family(rule_name: str) -> Optional[str]:
    """Family of an utterance rule, ``None`` for silent bookkeeping.

    Raises MalformedTrace for names outside the inventory.
    """
    if rule_name in BOOKKEEPING:
        return None
    for family, rx in _FAMILIES:
        if rx.fullmatch(rule_name):
            return family
    raise MalformedTrace(f"rule {rule_name!r} is not part of the conversation inventory")


def in_inventory(rule_name: str) -> bool:
    try:
        move_family(rule_name)
    except MalformedTrace:
        return False
    return True


def speaker(step: TraceStep) -> Optional[str]:
    """Who utters the line for this step (``None`` for silent steps)."""
    fam = move_family(step.rule)
    if fam is None:
        return None
    if fam in ("greet", "goodbye"):
        return _FAMILIES[MOVE_FAMILIES.index(fam)][1].fullmatch(step.rule).group(1)
    return step.binding.get("C")


def addressee(step: TraceStep, scenario: Scenario) -> Optional[str]:
    who = speaker(step)
    return scenario.partner(who) if who in scenario.agents else None


def topic_of(step: TraceStep) -> Optional[str]:
    fam = move_family(step.rule)
    if fam in (None, "greet", "goodbye", "terminate"):
        return None
    m = _FAMILIES[MOVE_FAMILIES.index(fam)][1].fullmatch(step.rule)
    return m.group(2) if fam == "change_topic" else m.group(1)


# --------------------------------------------------------------------------
# Ruleset


def ruleset_source() -> str:
    return resources.files("phatic.data").joinpath("conversation.phatic").read_text("utf-8")


_CACHE: dict = {}


def build_ruleset(path=None) -> Program:
    """The shipped conversation program, or one loaded from ``path``."""
    if path is not None:
        return load_program(path)
    if "default" not in _CACHE:
        _CACHE["default"] = parse_program(ruleset_source())
    return _CACHE["default"]


def annoyance_condition(spoken_by_other: int, total_turns_so_far: int) -> bool:
    """Has the partner spoken more than two thirds of the turns so far?"""
    return 3 * spoken_by_other > 2 * total_turns_so_far


# --------------------------------------------------------------------------
# Norm classification


@dataclass(frozen=True)
class NormReport:
    violations: tuple = ()
    feelings: dict = field(default_factory=dict)
    affinity: dict = field(default_factory=dict)  # (from, to) -> int

    @property
    def adherent(self) -> bool:
        return not self.violations


def _counter(state: State, pred: str) -> dict:
    return {a.args[:-1]: a.args[-1] for a in state.with_pred(pred)}


def classify(trace: Trace) -> NormReport:
    found = set()
    for st in trace.steps:
        fam = move_family(st.rule)
        if st.rule == "annoyed_by_unfair_participation":
            found.add(DOMINATION)
        elif fam == "disagree":
            mine = st.rule.rsplit("_", 1)[1]
            theirs = [a.args[2] for a in st.consumed if a.pred == "stated"]
            if theirs and theirs[0] != mine:
                found.add(VOCALIZED_DISAGREEMENT)
        elif fam == "terminate":
            clock = [a.args[0] for a in st.consumed if a.pred == "clock"]
            budget = [a.args[0] for a in st.consumed if a.pred == "budget"]
            if clock and budget and clock[0] < budget[0]:
                found.add(EARLY_TERMINATION)
    final = trace.final
    feelings = {a.args[0]: a.args[1] for a in final.with_pred("feels")}
    affinity = {k: v for k, v in _counter(final, "affinity").items()}
    return NormReport(tuple(v for v in VIOLATIONS if v in found), feelings, affinity)


# --------------------------------------------------------------------------
# Flow conformance


def family_sequence(trace: Trace) -> list[str]:
    """Utterance families in order, bookkeeping dropped."""
    return [f for f in (move_family(s.rule) for s in trace.steps) if f is not None]


# Leaving early is said as a goodbye ("I have to go now. Goodbye."), so the
# flow diagram has no separate state for it.
_FLOW_STATE = {"terminate": "goodbye"}


def flow_state(family: Optional[str]) -> Optional[str]:
    return _FLOW_STATE.get(family, family)


def path_signature(trace: Trace) -> tuple:
    """Flow-diagram states visited, with the greeting and goodbye exchanges collapsed."""
    out: list[str] = []
    for f in family_sequence(trace):
        _extend_signature(out, flow_state(f))
    return tuple(out)


def _extend_signature(out: list, state: str) -> None:
    if not (state in ("greet", "goodbye") and out and out[-1] == state):
        out.append(state)


def flow_violations(trace: Trace, scenario: Scenario) -> list[str]:
    """Ways in which a trace breaks the conversation's ordering constraints."""
    fams = family_sequence(trace)
    problems = []
    n_greet = sum(1 for f in fams if f == "greet")
    if fams and fams[: min(2, len(fams))] != ["greet"] * min(2, len(fams)):
        problems.append("does not open with the greetings")
    if n_greet != min(2, len(fams)) and fams:
        problems.append("greeting outside the opening exchange")
    if fams and trace.termination == "quiescence" and fams[-1] != "goodbye":
        problems.append("does not end with a goodbye")
    seen_goodbye = False
    for f in fams:
        if seen_goodbye and f != "goodbye":
            problems.append(f"{f} after goodbye")
        seen_goodbye |= f == "goodbye"
    if "topic_talk" in fams and ("small_talk" not in fams or fams.index("small_talk") > fams.index("topic_talk")):
        problems.append("topic talk before small talk")
    pending = False
    for f in fams:
        if f == "question":
            pending = True
        elif f in ("answer", "reciprocate"):
            pending = False
        elif pending and f in ("continue_talking", "change_topic", "question", "topic_talk"):
            problems.append(f"{f} while a question is pending")
    for st in trace.steps:
        if move_family(st.rule) == "change_topic":
            m = _FAMILIES[MOVE_FAMILIES.index("change_topic")][1].fullmatch(st.rule)
            if not scenario.is_related(m.group(1), m.group(2)):
                problems.append(f"unrelated topic change {st.rule}")
    return problems


# --------------------------------------------------------------------------
# Batch statistics


@dataclass(frozen=True)
class BatchSummary:
    n: int
    adherent_fraction: Fraction
    violation_rates: dict
    mean_length: Fraction  # utterance steps per conversation
    mean_steps: Fraction  # all steps, bookkeeping included
    rule_frequencies: dict  # rule -> mean firings per conversation
    final_feelings: dict  # feeling -> fraction of agent-conversations

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "adherent_fraction": float(self.adherent_fraction),
            "violation_rates": {k: float(v) for k, v in self.violation_rates.items()},
            "mean_length": float(self.mean_length),
            "mean_steps": float(self.mean_steps),
            "rule_frequencies": {k: float(v) for k, v in self.rule_frequencies.items()},
            "final_feelings": {k: float(v) for k, v in self.final_feelings.items()},
        }


def batch_stats(traces: Sequence[Trace]) -> BatchSummary:
    if not traces:
        raise EmptyBatch("batch_stats needs at least one trace")
    n = len(traces)
    reports = [classify(t) for t in traces]
    rules: Counter = Counter()
    feelings: Counter = Counter()
    utterances = steps = 0
    for t, r in zip(traces, reports):
        rules.update(s.rule for s in t.steps)
        feelings.update(r.feelings.values())
        utterances += len(family_sequence(t))
        steps += len(t.steps)
    n_feel = sum(feelings.values()) or 1
    return BatchSummary(
        n=n,
        adherent_fraction=Fraction(sum(r.adherent for r in reports), n),
        violation_rates={v: Fraction(sum(v in r.violations for r in reports), n) for v in VIOLATIONS},
        mean_length=Fraction(utterances, n),
        mean_steps=Fraction(steps, n),
        rule_frequencies={k: Fraction(c, n) for k, c in sorted(rules.items())},
        final_feelings={k: Fraction(c, n_feel) for k, c in sorted(feelings.items())},
    )


# --------------------------------------------------------------------------
# Reference conversations (replay sequences)

# Bob dominates, Alice gets annoyed and leaves.  The silent
# keep_disagreement_private step lets the conversation move on after Bob's
# opinion (Alice disagrees but says nothing); three continue_talking steps
# stand in for the omitted lines that take Bob from 3 to 6 utterances.
DOMINATED_EXIT = (
    "greet_bob_alice",
    "greet_alice_bob",
    ("small_talk_weather", {"C": "bob"}),
    ("change_topic_weather_baseball", {"C": "bob"}),
    ("topic_talk_baseball_typical_positive", {"C": "bob"}),
    "keep_disagreement_private",
    ("continue_talking_baseball", {"C": "bob"}),
    ("continue_talking_baseball", {"C": "bob"}),
    ("continue_talking_baseball", {"C": "bob"}),
    ("annoyed_by_unfair_participation", {"C": "alice"}),
    ("terminate_conversation", {"C": "alice"}),
    "say_goodbye_bob_alice",
)

# greet, small talk, topic talk, question, reciprocate, change topic,
# topic talk, question, goodbye
NORMATIVE_PATH = (
    "greet_bob_alice",
    "greet_alice_bob",
    ("small_talk_weather", {"C": "bob"}),
    ("topic_talk_weather_typical_positive", {"C": "bob"}),
    ("like_from_agreement", {"C": "bob"}),
    ("ask_question_weather", {"C": "bob"}),
    ("reciprocate_question_weather_positive", {"C": "alice"}),
    ("like_from_agreement", {"C": "alice"}),
    ("change_topic_weather_soccer", {"C": "alice"}),
    ("topic_talk_soccer_enthusiastic_positive", {"C": "alice"}),
    "no_shared_opinion",
    "enthusiasm_lost_on_listener",
    ("ask_question_soccer", {"C": "alice"}),
    "wind_down",
    "say_goodbye_bob_alice",
    "say_goodbye_alice_bob",
)

# greet, small talk, topic talk, continue talking x4, goodbye
MONOLOGUE_PATH = (
    "greet_bob_alice",
    "greet_alice_bob",
    ("small_talk_weather", {"C": "bob"}),
    ("topic_talk_weather_typical_positive", {"C": "bob"}),
    ("like_from_agreement", {"C": "bob"}),
    ("continue_talking_weather", {"C": "bob"}),
    ("continue_talking_weather", {"C": "bob"}),
    ("continue_talking_weather", {"C": "bob"}),
    ("annoyed_by_unfair_participation", {"C": "alice"}),
    ("continue_talking_weather", {"C": "bob"}),
    "wind_down",
    "say_goodbye_bob_alice",
    "say_goodbye_alice_bob",
)

NORMATIVE_SIGNATURE = ("greet", "small_talk", "topic_talk", "question", "reciprocate",
                       "change_topic", "topic_talk", "question", "goodbye")
MONOLOGUE_SIGNATURE = ("greet", "small_talk", "topic_talk", "continue_talking",
                       "continue_talking", "continue_talking", "continue_talking", "goodbye")


def signature_probability(program: Program, scenario: Scenario, signature: Sequence[str],
                          max_states: int = 10**6) -> Fraction:
    """Exact probability that a run's path_signature equals ``signature``.

    Forward propagation of probability mass over (state, progress) pairs,
    pruning any branch whose utterances leave the target path.
    """
    from .engine import _choices, apply_instance

    target = tuple(signature)
    done = Fraction(0)
    init = scenario.initial_state()
    frontier = {(frozenset(init._counts.items()), 0, None): (init, Fraction(1))}
    seen = 0
    while frontier:
        nxt: dict = {}
        for (_, pos, last), (state, mass) in frontier.items():
            instances, weights = _choices(state, program)
            if not instances:
                if pos == len(target):
                    done += mass
                continue
            total = sum(weights)
            for inst, w in zip(instances, weights):
                fam = flow_state(move_family(inst.rule.name))
                p, l = pos, last
                if fam is not None:
                    if fam in ("greet", "goodbye") and last == fam:
                        pass
                    elif pos < len(target) and target[pos] == fam:
                        p, l = pos + 1, fam
                    else:
                        continue
                s2 = apply_instance(state, inst)
                key = (frozenset(s2._counts.items()), p, l)
                m = mass * Fraction(w, total)
                if key in nxt:
                    nxt[key] = (s2, nxt[key][1] + m)
                else:
                    nxt[key] = (s2, m)
        seen += len(nxt)
        if seen > max_states:
            raise RuntimeError("signature_probability: state budget exhausted")
        frontier = nxt
    return done
