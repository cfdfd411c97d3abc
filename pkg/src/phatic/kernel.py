"""Ground atoms and the multiset state that rules rewrite.

Arguments are constants: lowercase symbols or small integers.  Integers are
how counters (times spoken, affinity, the turn clock) are stored; a counter is
updated by consuming the old atom and producing a new one.
"""

from __future__ import annotations

import re
import sys
from typing import Iterable, Iterator, NamedTuple, Union

Const = Union[str, int]

SYMBOL_RE = re.compile(r"[a-z][a-z0-9_]*\Z")
ATOM_RE = re.compile(r"\s*([a-z][a-z0-9_]*)\s*(?:\((.*)\))?\s*\Z")

MAX_ARITY = 3
# Counters live in this range.  Affinity can go negative after a vocalized
# disagreement, hence the signed lower bound.
NUM_MIN, NUM_MAX = -255, 255


class AtomAbsent(KeyError):
    """Raised when removing an atom that is not in the state."""


def symbol(name: str) -> str:
    if not SYMBOL_RE.match(name):
        raise ValueError(f"invalid symbol {name!r}")
    return sys.intern(name)


def parse_const(text: str) -> Const:
    text = text.strip()
    if re.fullmatch(r"-?\d+", text):
        value = int(text)
        if not NUM_MIN <= value <= NUM_MAX:
            raise ValueError(f"number {value} outside {NUM_MIN}..{NUM_MAX}")
        return value
    return symbol(text)


class Atom(NamedTuple):
    pred: str
    args: tuple = ()

    @classmethod
    def make(cls, pred: str, *args: Const) -> "Atom":
        if len(args) > MAX_ARITY:
            raise ValueError(f"arity {len(args)} exceeds {MAX_ARITY}")
        checked = []
        for a in args:
            if isinstance(a, bool) or not isinstance(a, (int, str)):
                raise TypeError(f"bad argument {a!r}")
            checked.append(parse_const(str(a)))
        return cls(symbol(pred), tuple(checked))

    @classmethod
    def parse(cls, text: str) -> "Atom":
        m = ATOM_RE.match(text)
        if not m:
            raise ValueError(f"cannot parse atom {text!r}")
        args = m.group(2)
        if args is None:
            return cls.make(m.group(1))
        return cls.make(m.group(1), *(parse_const(a) for a in args.split(",")))

    def __str__(self) -> str:
        if not self.args:
            return self.pred
        return f"{self.pred}({','.join(str(a) for a in self.args)})"

    def __repr__(self) -> str:
        return f"Atom({self})"


class State:
    """A multiset of atoms.

    The public ``insert``/``remove`` return new states.  ``add``/``discard``
    mutate in place and are meant for a single owner (the engine's working
    copy).  Iteration follows first-insertion order, so identical histories
    iterate identically.
    """

    __slots__ = ("_counts", "_by_pred")

    def __init__(self, atoms: Iterable[Atom] = ()):
        self._counts: dict[Atom, int] = {}
        self._by_pred: dict[str, dict[Atom, None]] = {}
        for a in atoms:
            self.add(a)

    # -- mutation (single owner) --
    def add(self, atom: Atom, n: int = 1) -> None:
        c = self._counts.get(atom, 0)
        if c == 0:
            self._by_pred.setdefault(atom.pred, {})[atom] = None
        self._counts[atom] = c + n

    def discard(self, atom: Atom) -> None:
        c = self._counts.get(atom, 0)
        if c == 0:
            raise AtomAbsent(str(atom))
        if c == 1:
            del self._counts[atom]
            bucket = self._by_pred[atom.pred]
            del bucket[atom]
            if not bucket:
                del self._by_pred[atom.pred]
        else:
            self._counts[atom] = c - 1

    # -- persistent API --
    def copy(self) -> "State":
        s = State()
        s._counts = dict(self._counts)
        s._by_pred = {p: dict(b) for p, b in self._by_pred.items()}
        return s

    def insert(self, atom: Atom) -> "State":
        s = self.copy()
        s.add(atom)
        return s

    def remove(self, atom: Atom) -> "State":
        s = self.copy()
        s.discard(atom)
        return s

    def count(self, atom: Atom) -> int:
        return self._counts.get(atom, 0)

    def with_pred(self, pred: str) -> Iterable[Atom]:
        return self._by_pred.get(pred, ())

    def items(self) -> Iterable[tuple[Atom, int]]:
        return self._counts.items()

    def occurrences(self) -> Iterator[Atom]:
        for a, c in self._counts.items():
            for _ in range(c):
                yield a

    def __contains__(self, atom: object) -> bool:
        return atom in self._counts

    def __iter__(self) -> Iterator[Atom]:
        return iter(self._counts)

    def __len__(self) -> int:
        return sum(self._counts.values())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, State):
            return NotImplemented
        return self._counts == other._counts

    def __hash__(self):
        return hash(frozenset(self._counts.items()))

    def __repr__(self) -> str:
        return f"State({{{', '.join(self.lines())}}})"

    def lines(self) -> list[str]:
        out = [str(a) if c == 1 else f"{a} x{c}" for a, c in self._counts.items()]
        return sorted(out)

    def serialize(self) -> str:
        """One atom per line, ``xN`` suffix for multiplicity, sorted."""
        return "".join(line + "\n" for line in self.lines())

    @classmethod
    def parse(cls, text: str) -> "State":
        s = cls()
        for line in text.splitlines():
            line = line.split("%", 1)[0].strip()
            if not line:
                continue
            m = re.fullmatch(r"(.*?)\s+x(\d+)", line)
            if m:
                atom, n = Atom.parse(m.group(1)), int(m.group(2))
            else:
                atom, n = Atom.parse(line), 1
            if n < 1:
                raise ValueError(f"bad multiplicity in {line!r}")
            s.add(atom, n)
        return s


def state_insert(s: State, a: Atom) -> State:
    return s.insert(a)


def state_remove(s: State, a: Atom) -> State:
    return s.remove(a)


def state_count(s: State, a: Atom) -> int:
    return s.count(a)
