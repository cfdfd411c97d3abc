"""Rule language: data types, parser, serializer, static checks.

Surface syntax, one rule per block::

    % comment to end of line
    rule NAME: P1 * P2 * ... -o Q1 * Q2 * ... .
    rule NAME: weight 1/4: P1 * ... -o () .

A precondition item is one of

    pred(a, X)          consumed
    $pred(a, X)         consumed and produced again (read-only use)
    !absent pred(a, X)  holds when no atom matches; unbound variables are wildcards
    (3 * N > 2 * K)     guard over variables bound earlier in the list

Lowercase identifiers and integers are constants, capitalised identifiers are
variables (``C'`` is allowed).  Effect arguments may be affine expressions
such as ``N + 1`` or ``N - 2``; ``()`` is the empty effect.  ``-o`` reads as
linear implication: the premises are used up and the effects appear.
"""

from __future__ import annotations

import operator
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Union

from .kernel import MAX_ARITY, NUM_MAX, NUM_MIN, Atom, State

CONSUME, PRESERVE, ABSENT = "consume", "preserve", "absent"
COMPARATORS = ("<=", ">=", "<", ">", "=")


class ProgramError(ValueError):
    """A program failed to parse or check; ``diagnostics`` has the details."""

    def __init__(self, diagnostics: list["Diagnostic"]):
        self.diagnostics = diagnostics
        first = next((d for d in diagnostics if d.severity == "error"), diagnostics[0])
        super().__init__(f"{first.line}:{first.col}: {first.message}")


class BudgetExceeded(RuntimeError):
    pass


# --------------------------------------------------------------------------
# Data types


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Affine:
    """``coef * var + const``; ``var`` is None for a pure constant."""

    coef: Fraction
    var: Optional[str]
    const: Fraction

    def __post_init__(self):
        # integer fast path; most expressions are N + 1 or 3 * N
        integral = self.coef.denominator == 1 and self.const.denominator == 1
        object.__setattr__(self, "_int", (int(self.coef), int(self.const)) if integral else None)

    def value(self, binding: dict):
        """Value under ``binding``; None if the variable is bound to a symbol."""
        if self.var is None:
            return self.const
        x = binding[self.var]
        if type(x) is not int:
            return None
        if self._int is not None:
            c, k = self._int
            return c * x + k
        return self.coef * x + self.const

    def __str__(self) -> str:
        if self.var is None or self.coef == 0:
            return str(self.const)
        head = self.var if self.coef == 1 else f"{self.coef}*{self.var}"
        if self.const > 0:
            return f"{head} + {self.const}"
        if self.const < 0:
            return f"{head} - {-self.const}"
        return head


Term = Union[str, int, Var, Affine]


def normalize_term(t: Affine) -> Term:
    if t.var is None or t.coef == 0:
        if t.const.denominator != 1:
            raise ValueError("constant argument must be an integer")
        return int(t.const)
    if t.coef == 1 and t.const == 0:
        return Var(t.var)
    return t


def term_vars(t: Term) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, Affine) and t.var is not None:
        return {t.var}
    return set()


@dataclass(frozen=True)
class Pattern:
    pred: str
    args: tuple = ()
    mode: str = CONSUME

    @property
    def variables(self) -> set[str]:
        out: set[str] = set()
        for a in self.args:
            out |= term_vars(a)
        return out

    def instantiate(self, binding: dict) -> Optional[Atom]:
        """Ground atom under ``binding``; None when an expression leaves the numeric range."""
        args = []
        for a in self.args:
            if isinstance(a, Var):
                args.append(binding[a.name])
            elif isinstance(a, Affine):
                v = a.value(binding)
                if v is None or v.denominator != 1 or not NUM_MIN <= v <= NUM_MAX:
                    return None
                args.append(int(v))
            else:
                args.append(a)
        return Atom(self.pred, tuple(args))

    def __str__(self) -> str:
        prefix = {CONSUME: "", PRESERVE: "$", ABSENT: "!absent "}[self.mode]
        if not self.args:
            return prefix + self.pred
        return f"{prefix}{self.pred}({', '.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class Guard:
    lhs: Affine
    op: str
    rhs: Affine

    @property
    def variables(self) -> set[str]:
        return {v for v in (self.lhs.var, self.rhs.var) if v is not None}

    def holds(self, binding: dict) -> bool:
        a, b = self.lhs.value(binding), self.rhs.value(binding)
        if a is None or b is None:
            return False
        return _COMPARE[self.op](a, b)

    def __str__(self) -> str:
        return f"({self.lhs} {self.op} {self.rhs})"


_COMPARE = {"<": operator.lt, "<=": operator.le, "=": operator.eq, ">=": operator.ge, ">": operator.gt}

Premise = Union[Pattern, Guard]


@dataclass(frozen=True)
class Rule:
    name: str
    premises: tuple
    effects: tuple
    weight: Fraction = Fraction(1)

    @property
    def positives(self) -> tuple[Pattern, ...]:
        return tuple(p for p in self.premises if isinstance(p, Pattern) and p.mode != ABSENT)

    @property
    def absents(self) -> tuple[Pattern, ...]:
        return tuple(p for p in self.premises if isinstance(p, Pattern) and p.mode == ABSENT)

    @property
    def guards(self) -> tuple[Guard, ...]:
        return tuple(p for p in self.premises if isinstance(p, Guard))

    @property
    def variables(self) -> set[str]:
        out: set[str] = set()
        for p in self.positives:
            out |= p.variables
        return out


@dataclass
class Program:
    rules: tuple = ()
    diagnostics: list = field(default_factory=list, compare=False, repr=False)
    _compiled: object = field(default=None, compare=False, repr=False)

    @property
    def signature(self) -> dict[str, int]:
        sig: dict[str, int] = {}
        for r in self.rules:
            for p in (*r.positives, *r.absents, *r.effects):
                sig.setdefault(p.pred, len(p.args))
        return sig

    def rule(self, name: str) -> Rule:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)

    @property
    def names(self) -> list[str]:
        return [r.name for r in self.rules]

    def __len__(self) -> int:
        return len(self.rules)


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    rule: Optional[str]
    line: int
    col: int
    message: str
    offset: int = 0

    def format(self, filename: str = "<input>") -> str:
        return f"{filename}:{self.line}:{self.col}: {self.severity}: {self.message}"


# --------------------------------------------------------------------------
# Lexer

TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|%[^\n]*)
  | (?P<lolli>-o\b)
  | (?P<absent>!absent\b)
  | (?P<cmp><=|>=|<|>|=)
  | (?P<punct>[*(),.:$/+\-])
  | (?P<int>\d+)
  | (?P<lower>[a-z][a-z0-9_]*)
  | (?P<upper>[A-Z][A-Za-z0-9_]*'*)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    offset: int


class _SyntaxError(Exception):
    def __init__(self, message: str, offset: int):
        super().__init__(message)
        self.message = message
        self.offset = offset


def tokenize(source: str) -> Iterator[Token]:
    pos = 0
    while pos < len(source):
        m = TOKEN_RE.match(source, pos)
        if not m:
            raise _SyntaxError(f"unexpected character {source[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            yield Token(kind if kind != "punct" else m.group(), m.group(), pos)
        pos = m.end()
    yield Token("eof", "", len(source))


def _position(source: str, offset: int) -> tuple[int, int, int]:
    if source:
        offset = max(0, min(offset, len(source) - 1))
    else:
        offset = 0
    line = source.count("\n", 0, offset) + 1
    col = offset - (source.rfind("\n", 0, offset) + 1) + 1
    return line, col, offset


# --------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = list(tokenize(source))
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, kind: str, what: Optional[str] = None) -> Token:
        if self.tok.kind != kind:
            found = self.tok.text or "end of input"
            raise _SyntaxError(f"expected {what or repr(kind)}, found {found!r}", self.tok.offset)
        return self.advance()

    def recover(self, start: int) -> None:
        """Skip past the end of the broken rule."""
        if self.i == start:
            self.advance()
        while self.tok.kind != "eof":
            if self.tok.kind == ".":
                self.advance()
                return
            if self.tok.kind == "lower" and self.tok.text == "rule":
                return
            self.advance()

    # numbers & expressions
    def number(self) -> Fraction:
        n = Fraction(int(self.expect("int", "number").text))
        if self.tok.kind == "/":
            self.advance()
            d = int(self.expect("int", "denominator").text)
            if d == 0:
                raise _SyntaxError("division by zero", self.tokens[self.i - 1].offset)
            n /= d
        return n

    def affine(self) -> Affine:
        start = self.tok.offset
        sign = Fraction(1)
        if self.tok.kind == "-":
            self.advance()
            sign = Fraction(-1)
        coef, var, const = Fraction(0), None, Fraction(0)
        while True:
            if self.tok.kind == "int":
                k = self.number()
                if self.tok.kind == "*":
                    self.advance()
                    name = self.expect("upper", "variable").text
                    if var not in (None, name):
                        raise _SyntaxError("affine expression may mention only one variable", start)
                    var, coef = name, coef + sign * k
                else:
                    const += sign * k
            elif self.tok.kind == "upper":
                name = self.advance().text
                if var not in (None, name):
                    raise _SyntaxError("affine expression may mention only one variable", start)
                var, coef = name, coef + sign
            else:
                raise _SyntaxError(f"expected number or variable, found {self.tok.text or 'end of input'!r}", self.tok.offset)
            if self.tok.kind == "+":
                self.advance()
                sign = Fraction(1)
            elif self.tok.kind == "-":
                self.advance()
                sign = Fraction(-1)
            else:
                break
        if var is not None and coef == 0:
            var = None
        return Affine(coef, var, const)

    def pattern(self, mode: str, effect: bool) -> tuple[Pattern, int]:
        start = self.tok.offset
        pred = sys.intern(self.expect("lower", "predicate name").text)
        args: list = []
        if self.tok.kind == "(":
            self.advance()
            while True:
                if self.tok.kind == "lower":
                    args.append(sys.intern(self.advance().text))
                elif effect:
                    at = self.tok.offset
                    try:
                        args.append(normalize_term(self.affine()))
                    except ValueError as e:
                        raise _SyntaxError(str(e), at) from None
                elif self.tok.kind == "upper":
                    args.append(Var(self.advance().text))
                elif self.tok.kind in ("int", "-"):
                    neg = self.tok.kind == "-"
                    if neg:
                        self.advance()
                    v = int(self.expect("int", "integer").text)
                    args.append(-v if neg else v)
                else:
                    raise _SyntaxError(f"expected argument, found {self.tok.text or 'end of input'!r}", self.tok.offset)
                if self.tok.kind == ",":
                    self.advance()
                    continue
                self.expect(")", "',' or ')'")
                break
        for a in args:
            if isinstance(a, int) and not NUM_MIN <= a <= NUM_MAX:
                raise _SyntaxError(f"number {a} outside {NUM_MIN}..{NUM_MAX}", start)
        return Pattern(pred, tuple(args), mode), start

    def rule(self) -> tuple[Rule, dict]:
        """Parse one rule; also returns offsets for semantic diagnostics."""
        kw = self.expect("lower", "'rule'")
        if kw.text != "rule":
            raise _SyntaxError(f"expected 'rule', found {kw.text!r}", kw.offset)
        name_tok = self.expect("lower", "rule name")
        self.expect(":", "':'")
        weight = Fraction(1)
        weight_offset = None
        if self.tok.kind == "lower" and self.tok.text == "weight" and self.peek().kind == "int":
            weight_offset = self.advance().offset
            weight = self.number()
            self.expect(":", "':' after weight")
        premises: list = []
        offsets: dict = {"name": name_tok.offset, "weight": weight_offset, "premises": [], "effects": []}
        while True:
            if self.tok.kind == "$":
                self.advance()
                p, off = self.pattern(PRESERVE, effect=False)
            elif self.tok.kind == "absent":
                self.advance()
                p, off = self.pattern(ABSENT, effect=False)
            elif self.tok.kind == "(":
                off = self.advance().offset
                lhs = self.affine()
                if self.tok.kind != "cmp":
                    raise _SyntaxError(f"expected comparison, found {self.tok.text or 'end of input'!r}", self.tok.offset)
                op = self.advance().text
                rhs = self.affine()
                self.expect(")", "')'")
                p = Guard(lhs, op, rhs)
            else:
                p, off = self.pattern(CONSUME, effect=False)
            premises.append(p)
            offsets["premises"].append(off)
            if self.tok.kind == "*":
                self.advance()
                continue
            break
        self.expect("lolli", "'*' or '-o'")
        effects: list = []
        if self.tok.kind == "(" and self.peek().kind == ")":
            self.advance()
            self.advance()
        else:
            while True:
                p, off = self.pattern(CONSUME, effect=True)
                effects.append(p)
                offsets["effects"].append(off)
                if self.tok.kind == "*":
                    self.advance()
                    continue
                break
        self.expect(".", "'.' at end of rule")
        return Rule(name_tok.text, tuple(premises), tuple(effects), weight), offsets


def _check_rule(rule: Rule, offsets: dict, sig: dict, sig_from: dict, diag) -> None:
    bound: set[str] = set()
    if not rule.positives:
        diag("error", offsets["name"], "rule has no preconditions to consume")
    if rule.weight <= 0:
        diag("error", offsets["weight"] or offsets["name"], "weight must be positive")
    for p, off in zip(rule.premises, offsets["premises"]):
        if isinstance(p, Guard):
            missing = sorted(p.variables - bound)
            if missing:
                diag("error", off, f"guard uses variable {missing[0]} before it is bound")
            continue
        if p.mode != ABSENT:
            bound |= p.variables
    for p, off in zip(rule.effects, offsets["effects"]):
        for v in sorted(p.variables - bound):
            diag("error", off, f"unbound variable {v} in effect")
    for p, off in [*zip(rule.premises, offsets["premises"]), *zip(rule.effects, offsets["effects"])]:
        if not isinstance(p, Pattern):
            continue
        if len(p.args) > MAX_ARITY:
            diag("error", off, f"predicate {p.pred} has arity {len(p.args)} (max {MAX_ARITY})")
        elif p.pred in sig and sig[p.pred] != len(p.args):
            line = sig_from[p.pred]
            diag("error", off, f"arity conflict: {p.pred} used with {len(p.args)} arguments, "
                               f"earlier with {sig[p.pred]} (line {line})")
        else:
            sig.setdefault(p.pred, len(p.args))
            sig_from.setdefault(p.pred, offsets["line_of"](off))
    consumed = sorted(str(Pattern(p.pred, p.args)) for p in rule.positives)
    produced = sorted(str(Pattern(p.pred, p.args)) for p in rule.positives if p.mode == PRESERVE)
    produced += [str(p) for p in rule.effects]
    if consumed == sorted(produced):
        diag("warning", offsets["name"], "rule does not change the state and can fire forever")


def parse_program(source: str) -> Program:
    """Parse and check ``source``.

    Raises ProgramError carrying every diagnostic when there is at least one
    error.  Warnings ride along on ``Program.diagnostics``.
    """
    diagnostics: list[Diagnostic] = []
    current: list[Optional[str]] = [None]

    def diag(severity: str, offset: int, message: str) -> None:
        line, col, off = _position(source, offset)
        diagnostics.append(Diagnostic(severity, current[0], line, col, message, off))

    try:
        parser = _Parser(source)
    except _SyntaxError as e:
        diag("error", e.offset, e.message)
        raise ProgramError(diagnostics) from None

    rules: list[Rule] = []
    names: set[str] = set()
    sig: dict[str, int] = {}
    sig_from: dict[str, int] = {}
    while parser.tok.kind != "eof":
        current[0] = parser.peek().text if parser.tok.text == "rule" and parser.peek().kind == "lower" else None
        start = parser.i
        try:
            rule, offsets = parser.rule()
        except _SyntaxError as e:
            diag("error", e.offset, e.message)
            parser.recover(start)
            continue
        offsets["line_of"] = lambda off: _position(source, off)[0]
        if rule.name in names:
            diag("error", offsets["name"], f"duplicate rule name {rule.name}")
        names.add(rule.name)
        _check_rule(rule, offsets, sig, sig_from, diag)
        rules.append(rule)
    if any(d.severity == "error" for d in diagnostics):
        raise ProgramError(diagnostics)
    return Program(tuple(rules), diagnostics)


def load_program(path) -> Program:
    with open(path, encoding="utf-8") as fh:
        return parse_program(fh.read())


# --------------------------------------------------------------------------
# Serializer


def serialize_rule(rule: Rule, width: int = 88) -> str:
    head = f"rule {rule.name}:"
    if rule.weight != 1:
        head += f" weight {rule.weight}:"
    pre = [str(p) for p in rule.premises]
    post = [str(p) for p in rule.effects] or ["()"]
    one_line = f"{head} {' * '.join(pre)} -o {' * '.join(post)}."
    if len(one_line) <= width:
        return one_line
    lines = [head, "    " + "\n  * ".join(pre), "  -o " + "\n  * ".join(post) + "."]
    return "\n".join(lines)


def serialize_program(program: Program) -> str:
    return "".join(serialize_rule(r) + "\n" for r in program.rules)


# --------------------------------------------------------------------------
# Reachability


def check_reachability(program: Program, init: State, depth: int,
                       max_states: int = 10**6) -> dict[str, bool]:
    """Which rules can fire within ``depth`` steps of ``init``.

    Exhaustive breadth-first rewriting over distinct states, so the answer is
    exact inside the bound.  Raises BudgetExceeded past ``max_states``.
    """
    from .engine import applicable_instances, apply_instance

    if not 0 <= depth <= 12:
        raise ValueError("depth must be in 0..12")
    reached = {r.name: False for r in program.rules}
    frontier = [init]
    seen = {init}
    for _ in range(depth):
        nxt = []
        for s in frontier:
            for inst in applicable_instances(s, program):
                reached[inst.rule.name] = True
                t = apply_instance(s, inst)
                if t not in seen:
                    seen.add(t)
                    if len(seen) > max_states:
                        raise BudgetExceeded(f"more than {max_states} states explored")
                    nxt.append(t)
        frontier = nxt
        if not frontier:
            break
    return reached
