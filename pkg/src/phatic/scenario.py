"""Scenarios: who is talking, about what, and what they think of it."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import cached_property
from importlib import resources
from typing import Optional

from .kernel import Atom, State, symbol

FEELINGS = ("happy", "sad", "annoyed", "content")
UPSET_FEELINGS = ("annoyed", "sad")
POLARITIES = ("positive", "negative")
TOPIC_KINDS = ("small_talk", "sport", "music")
MIN_BUDGET = 5  # two greetings, one small-talk line, two goodbyes


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    name: str
    agents: tuple[str, str]
    topics: dict  # topic -> kind
    opinions: tuple  # (agent, topic, polarity)
    related: frozenset  # unordered pairs, stored as sorted tuples
    feelings: dict = field(default_factory=dict)
    affinity: dict = field(default_factory=dict)  # (from, to) -> int
    turn_budget: int = 12

    def __post_init__(self):
        self.validate()

    def __hash__(self):
        return hash((self.name, self.agents, self.opinions, self.related, self.turn_budget))

    # -- checks --
    def validate(self) -> None:
        if len(self.agents) != 2 or self.agents[0] == self.agents[1]:
            raise ScenarioError("a scenario needs exactly two distinct agents")
        for a in self.agents:
            symbol(a)
        for t, kind in self.topics.items():
            symbol(t)
            if kind not in TOPIC_KINDS:
                raise ScenarioError(f"topic {t}: unknown kind {kind!r}")
        seen = set()
        for agent, topic, pol in self.opinions:
            if agent not in self.agents or topic not in self.topics:
                raise ScenarioError(f"opinion ({agent}, {topic}) names an unknown agent or topic")
            if pol not in POLARITIES:
                raise ScenarioError(f"opinion polarity must be positive or negative, got {pol!r}")
            if (agent, topic) in seen:
                raise ScenarioError(f"{agent} has two opinions about {topic}")
            seen.add((agent, topic))
        for a, b in self.related:
            if a == b:
                raise ScenarioError(f"topic {a} cannot be related to itself")
            if a not in self.topics or b not in self.topics:
                raise ScenarioError(f"relatedness ({a}, {b}) names an unknown topic")
        small = {t for t, k in self.topics.items() if k == "small_talk"}
        if not small:
            raise ScenarioError("at least one small-talk topic is required")
        for t, k in self.topics.items():
            if k != "small_talk" and not any(self.is_related(t, s) for s in small):
                raise ScenarioError(f"topic {t} is unreachable: not related to any small-talk topic")
        for a, f in self.feelings.items():
            if a not in self.agents or f not in FEELINGS:
                raise ScenarioError(f"bad initial feeling {a}: {f}")
        for (a, b), v in self.affinity.items():
            if a not in self.agents or b not in self.agents or a == b:
                raise ScenarioError(f"bad affinity pair ({a}, {b})")
            if not -255 <= v <= 255:
                raise ScenarioError("affinity must lie in -255..255")
        if not MIN_BUDGET <= self.turn_budget <= 255:
            raise ScenarioError(f"turn_budget must lie in {MIN_BUDGET}..255")

    # -- queries --
    def is_related(self, a: str, b: str) -> bool:
        return tuple(sorted((a, b))) in self.related

    def related_to(self, topic: str) -> list[str]:
        return [t for t in self.topics if t != topic and self.is_related(topic, t)]

    def opinion(self, agent: str, topic: str) -> Optional[str]:
        for a, t, p in self.opinions:
            if a == agent and t == topic:
                return p
        return None

    def partner(self, agent: str) -> str:
        a, b = self.agents
        return b if agent == a else a

    @property
    def small_talk_topics(self) -> list[str]:
        return [t for t, k in self.topics.items() if k == "small_talk"]

    def with_budget(self, turn_budget: int) -> "Scenario":
        return replace(self, turn_budget=turn_budget)

    # -- encoding --
    def initial_state(self) -> State:
        """The fact multiset a conversation starts from."""
        return self._initial.copy()

    @cached_property
    def _initial(self) -> State:
        a, b = self.agents
        atoms = [Atom.make("phase", "greeting"), Atom.make("clock", 0),
                 Atom.make("budget", self.turn_budget)]
        for x, y in ((a, b), (b, a)):
            atoms += [
                Atom.make("partner", x, y),
                Atom.make("to_greet", x, y),
                Atom.make("to_part", x, y),
                Atom.make("affinity", x, y, self.affinity.get((x, y), 0)),
            ]
        for x in self.agents:
            atoms += [Atom.make("feels", x, self.feelings.get(x, "content")),
                      Atom.make("spoken", x, 0)]
        atoms += [Atom.make("opinion", *o) for o in self.opinions]
        for t in self.topics:
            for u in self.related_to(t):
                atoms.append(Atom.make("related", t, u))
        atoms += [Atom.make("opposite", "positive", "negative"),
                  Atom.make("opposite", "negative", "positive")]
        atoms += [Atom.make("upset", f) for f in UPSET_FEELINGS]
        return State(atoms)

    # -- (de)serialization --
    def to_json(self) -> dict:
        return {
            "name": self.name,
            "agents": list(self.agents),
            "topics": dict(self.topics),
            "opinions": [list(o) for o in self.opinions],
            "related": [list(p) for p in sorted(self.related)],
            "feelings": dict(self.feelings),
            "affinity": [[a, b, v] for (a, b), v in self.affinity.items()],
            "turn_budget": self.turn_budget,
        }

    @classmethod
    def from_json(cls, d: dict) -> "Scenario":
        try:
            return cls(
                name=d.get("name", "scenario"),
                agents=tuple(d["agents"]),
                topics=dict(d["topics"]),
                opinions=tuple(tuple(o) for o in d.get("opinions", [])),
                related=frozenset(tuple(sorted(p)) for p in d.get("related", [])),
                feelings=dict(d.get("feelings", {})),
                affinity={(a, b): int(v) for a, b, v in d.get("affinity", [])},
                turn_budget=int(d.get("turn_budget", 12)),
            )
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, ScenarioError):
                raise
            raise ScenarioError(f"malformed scenario: {e}") from e


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return Scenario.from_json(json.load(fh))


def default_scenario() -> Scenario:
    text = resources.files("phatic.data").joinpath("default_scenario.json").read_text("utf-8")
    return Scenario.from_json(json.loads(text))
