"""Turn traces into dialogue lines with a social guideline beside each.

Every rule name maps to a bank entry holding utterance variants and
guideline variants.  Silent (bookkeeping) rules produce no dialogue line in a
transcript; their guideline is attached as a note to the next spoken line.
Pass ``seed=None`` (or ``rng=None``) to always take variant 0, which is what
the golden tests pin.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional, Sequence

from .conversation import move_family, topic_of
from .conversation import speaker as step_speaker
from .dsl import Program
from .engine import Trace, TraceStep
from .rng import SplitMix64, derive_seed

NARRATOR = "narrator"
SURFACE_STREAM = 1
PLACEHOLDER = re.compile(r"\{([A-Za-z_]+)\}")
SLOTS = frozenset({"speaker", "addressee", "topic", "Topic", "old_topic", "agent", "partner"})


class UnknownRule(KeyError):
    def __init__(self, rule: str):
        super().__init__(rule)
        self.rule = rule

    def __str__(self) -> str:
        return f"no bank entry for rule {self.rule!r}"


class BankError(ValueError):
    pass


@dataclass(frozen=True)
class BankEntry:
    utterances: tuple[str, ...]
    guidelines: tuple[str, ...]
    silent: bool = False


@dataclass(frozen=True)
class Bank:
    entries: dict
    opening_guidelines: tuple = ()
    topic_names: dict = field(default_factory=dict)

    def __getitem__(self, rule: str) -> BankEntry:
        try:
            return self.entries[rule]
        except KeyError:
            raise UnknownRule(rule) from None

    def __contains__(self, rule: str) -> bool:
        return rule in self.entries

    def without(self, *rules: str) -> "Bank":
        return Bank({k: v for k, v in self.entries.items() if k not in rules},
                    self.opening_guidelines, self.topic_names)

    def topic_text(self, topic: Optional[str]) -> str:
        return self.topic_names.get(topic, topic or "")

    # -- (de)serialization --
    @classmethod
    def from_json(cls, d: dict) -> "Bank":
        try:
            entries = {}
            for name, e in d["rules"].items():
                entry = BankEntry(tuple(e.get("utterances", ())), tuple(e.get("guidelines", ())),
                                  bool(e.get("silent", False)))
                for text in entry.utterances + entry.guidelines:
                    bad = set(PLACEHOLDER.findall(text)) - SLOTS
                    if bad:
                        raise BankError(f"{name}: unknown placeholder {{{sorted(bad)[0]}}}")
                entries[name] = entry
            return cls(entries, tuple(d.get("opening_guidelines", ())), dict(d.get("topic_names", {})))
        except (KeyError, TypeError, AttributeError) as e:
            raise BankError(f"malformed bank: {e}") from e

    def to_json(self) -> dict:
        return {
            "format": "phatic-bank-v1",
            "topic_names": self.topic_names,
            "opening_guidelines": list(self.opening_guidelines),
            "rules": {k: {"silent": e.silent, "utterances": list(e.utterances),
                          "guidelines": list(e.guidelines)} for k, e in self.entries.items()},
        }


def load_bank(path=None) -> Bank:
    """The shipped bank, or one read from ``path``."""
    if path is None:
        text = resources.files("phatic.data").joinpath("bank.json").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    try:
        return Bank.from_json(json.loads(text))
    except json.JSONDecodeError as e:
        raise BankError(f"bank is not valid JSON: {e}") from e


@dataclass(frozen=True)
class TranscriptLine:
    speaker: str  # agent id, or NARRATOR
    utterance: str
    guideline: str
    step: int
    notes: tuple[str, ...] = ()

    def tagged(self) -> str:
        if self.speaker == NARRATOR:
            return self.utterance
        return f"{display(self.speaker)}: {self.utterance}"


def display(symbol: Optional[str]) -> str:
    return symbol.capitalize() if symbol else ""


def _slots(step: TraceStep, bank: Bank) -> dict:
    fam = move_family(step.rule)
    b = step.binding
    who = step_speaker(step)
    agent, partner = b.get("C"), b.get("C'")
    if fam in ("greet", "goodbye"):
        agent, partner = step.rule.split("_")[-2:]
    if who is not None and partner is None:
        partner = _partner_from(step, who)
    topic, old = topic_of(step), None
    if fam == "change_topic":
        old = step.rule.split("_")[2]
    text = bank.topic_text(topic)
    return {
        "speaker": display(who),
        "addressee": display(partner),
        "topic": text,
        "Topic": text[:1].upper() + text[1:],
        "old_topic": bank.topic_text(old),
        "agent": display(agent),
        "partner": display(partner),
    }


def _partner_from(step: TraceStep, who: str) -> Optional[str]:
    for a in step.consumed + step.produced:
        if a.pred in ("partner", "to_part", "greeted", "affinity", "asked") and a.args[0] == who:
            return a.args[1]
    for a in step.consumed:
        if a.pred == "spoken" and a.args[0] != who:
            return a.args[0]
    return None


def _fill(template: str, slots: dict) -> str:
    return PLACEHOLDER.sub(lambda m: slots.get(m.group(1), m.group(0)), template)


def _pick(variants: Sequence[str], rng: Optional[SplitMix64]) -> str:
    if not variants:
        return ""
    return variants[0] if rng is None else variants[rng.below(len(variants))]


def realize_step(step: TraceStep, bank: Bank, rng: Optional[SplitMix64] = None,
                 guideline_pool: Sequence[str] = ()) -> TranscriptLine:
    """One line for one step; silent steps come back as narrator lines.

    ``guideline_pool`` is prepended to the rule's own guidelines (used for
    context guidelines on the first line).
    """
    entry = bank[step.rule]
    slots = _slots(step, bank)
    utterance = _fill(_pick(entry.utterances, rng), slots)
    guideline = _fill(_pick(tuple(guideline_pool) + entry.guidelines, rng), slots)
    who = NARRATOR if entry.silent else (step_speaker(step) or NARRATOR)
    return TranscriptLine(who, utterance, guideline, step.index)


def realize_trace(trace: Trace, bank: Bank, seed: Optional[int] = 0) -> list[TranscriptLine]:
    """Spoken lines in step order; ``seed=None`` selects variant 0 throughout."""
    rng = None if seed is None else SplitMix64(derive_seed(seed, SURFACE_STREAM))
    lines: list[TranscriptLine] = []
    pending: list[str] = []
    for st in trace.steps:
        entry = bank[st.rule]
        pool = bank.opening_guidelines if not lines and not entry.silent else ()
        line = realize_step(st, bank, rng, pool)
        if entry.silent:
            if line.guideline and line.guideline not in pending:
                pending.append(line.guideline)
            continue
        lines.append(TranscriptLine(line.speaker, line.utterance, line.guideline, line.step,
                                    tuple(pending)))
        pending = []
    if pending and lines:
        last = lines[-1]
        lines[-1] = TranscriptLine(last.speaker, last.utterance, last.guideline, last.step,
                                   last.notes + tuple(pending))
    return lines


def coverage_check(bank: Bank, program: Program) -> list[str]:
    """Rules lacking an utterance (unless silent) or a guideline, in program order."""
    missing = []
    for r in program.rules:
        e = bank.entries.get(r.name)
        if e is None or not e.guidelines or (not e.silent and not e.utterances):
            missing.append(r.name)
    return missing


# -- plain-text renderings --


def render_transcript(lines: Sequence[TranscriptLine]) -> str:
    out = []
    for ln in lines:
        out.append(ln.tagged())
        for n in ln.notes:
            out.append(f"    note: {n}")
        out.append(f"    guideline: {ln.guideline}")
    return "\n".join(out) + ("\n" if out else "")


def render_table(lines: Sequence[TranscriptLine], header: bool = True) -> str:
    out = ["Dialogue | Guideline"] if header else []
    for ln in lines:
        guide = " ".join((ln.guideline,) + ln.notes)
        out.append(f"{ln.tagged()} | {guide}")
    return "\n".join(out) + "\n"
