"""Forward-chaining multiset rewriting.

At each step the engine lists every applicable rule instance, draws one with
probability proportional to its rule weight, and rewrites the state: consumed
atoms out, produced atoms in.  A run stops when nothing applies (quiescence)
or at the step cap.
"""

from __future__ import annotations

import json
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .dsl import ABSENT, PRESERVE, Guard, Pattern, Program, Rule, Var
from .kernel import Atom, State
from .rng import SplitMix64, integer_weights

TRACE_SCHEMA = "trace-v1"
QUIESCENCE, STEP_CAP = "quiescence", "step-cap"

_MISSING = object()


class InapplicableStep(ValueError):
    def __init__(self, index: int, reason: str = ""):
        self.index = index
        self.reason = reason
        super().__init__(f"step {index} is not applicable" + (f": {reason}" if reason else ""))


class TraceMismatch(ValueError):
    """A recorded step disagrees with what the engine recomputes."""

    def __init__(self, index: int, reason: str):
        self.index = index
        self.reason = reason
        super().__init__(f"step {index}: {reason}")


def _value_key(v):
    return (0, v, "") if isinstance(v, int) else (1, 0, v)


def binding_key(binding: Mapping) -> tuple:
    return tuple((k, _value_key(binding[k])) for k in sorted(binding))


@dataclass(frozen=True)
class Instance:
    rule: Rule
    binding: tuple  # sorted (variable, value) pairs
    consumed: tuple
    produced: tuple

    @property
    def bindings(self) -> dict:
        return dict(self.binding)

    @property
    def name(self) -> str:
        return self.rule.name

    def rewrite_key(self) -> tuple:
        return (self.rule.name, frozenset(Counter(self.consumed).items()),
                frozenset(Counter(self.produced).items()))


# --------------------------------------------------------------------------
# Matching


class _CompiledRule:
    __slots__ = ("rule", "ops", "ground", "preds", "absents", "blockers", "effects",
                 "preserved_idx", "n_positive")

    def __init__(self, rule: Rule):
        self.rule = rule
        self.ops = []
        self.ground = []
        self.preds = set()
        self.preserved_idx = []
        i = 0
        for p in rule.premises:
            if isinstance(p, Guard):
                self.ops.append(("g", p))
            elif p.mode != ABSENT:
                if p.variables:
                    spec = tuple((True, a.name) if isinstance(a, Var) else (False, a) for a in p.args)
                    self.ops.append(("p", (i, p.pred, len(p.args), spec)))
                else:
                    self.ops.append(("a", (i, p.pred, len(p.args), Atom(p.pred, p.args))))
                self.preds.add(p.pred)
                if not p.variables:
                    self.ground.append(Atom(p.pred, p.args))
                if p.mode == PRESERVE:
                    self.preserved_idx.append(i)
                i += 1
        self.n_positive = i
        self.absents = rule.absents
        self.blockers = [Atom(p.pred, p.args) for p in rule.absents if not p.variables]
        self.effects = rule.effects

    def match(self, state: State, out: list) -> None:
        counts = state._counts
        by_pred = state._by_pred
        for p in self.preds:
            if p not in by_pred:
                return
        for a in self.ground:
            if a not in counts:
                return
        for a in self.blockers:
            if a in counts:
                return
        ops = self.ops
        n_ops = len(ops)
        binding: dict = {}
        used: dict = {}
        chosen: list = [None] * self.n_positive

        def rec(k: int) -> None:
            if k == n_ops:
                self._finish(state, binding, chosen, out)
                return
            kind, obj = ops[k]
            if kind == "g":
                if obj.holds(binding):
                    rec(k + 1)
                return
            idx, pred, arity, spec = obj
            if kind == "a":  # ground pattern: no search needed
                if used.get(spec, 0) < counts.get(spec, 0):
                    used[spec] = used.get(spec, 0) + 1
                    chosen[idx] = spec
                    rec(k + 1)
                    used[spec] -= 1
                return
            for atom in by_pred.get(pred, ()):
                args = atom.args
                if len(args) != arity or used.get(atom, 0) >= counts[atom]:
                    continue
                newly = []
                ok = True
                for (is_var, val), x in zip(spec, args):
                    if is_var:
                        b = binding.get(val, _MISSING)
                        if b is _MISSING:
                            binding[val] = x
                            newly.append(val)
                        elif b != x:
                            ok = False
                            break
                    elif val != x:
                        ok = False
                        break
                if ok:
                    used[atom] = used.get(atom, 0) + 1
                    chosen[idx] = atom
                    rec(k + 1)
                    used[atom] -= 1
                for v in newly:
                    del binding[v]

        rec(0)

    def _finish(self, state: State, binding: dict, chosen: list, out: list) -> None:
        for p in self.absents:
            if _exists(state, p, binding):
                return
        produced = [chosen[i] for i in self.preserved_idx]
        for p in self.effects:
            a = p.instantiate(binding)
            if a is None:
                return
            produced.append(a)
        out.append(Instance(self.rule, tuple((k, binding[k]) for k in sorted(binding)),
                            tuple(chosen), tuple(produced)))


def _exists(state: State, p: Pattern, binding: dict) -> bool:
    """Does some atom in ``state`` match ``p``?  Unbound variables are wildcards."""
    for atom in state.with_pred(p.pred):
        if len(atom.args) != len(p.args):
            continue
        local: dict = {}
        for t, x in zip(p.args, atom.args):
            if isinstance(t, Var):
                v = binding.get(t.name, local.get(t.name, _MISSING))
                if v is _MISSING:
                    local[t.name] = x
                elif v != x:
                    break
            elif t != x:
                break
        else:
            return True
    return False


class _Executable:
    """Per-program matcher plus a memo of instance lists keyed by state.

    Batches of runs from one scenario revisit the same states constantly, so
    the memo pays for itself quickly; it is cleared when it grows too large.
    """

    __slots__ = ("rules", "memo", "keyed", "unkeyed")
    MEMO_LIMIT = 1 << 17

    def __init__(self, program: Program):
        self.rules = [_CompiledRule(r) for r in program.rules]
        self.memo: dict = {}
        # Index rules by one required ground atom, preferring atoms whose
        # predicate some rule rewrites (static facts are always present and
        # filter nothing) and, among those, the one shared by fewest rules.
        dynamic = set()
        for r in program.rules:
            dynamic |= {p.pred for p in r.positives if p.mode != PRESERVE}
            dynamic |= {p.pred for p in r.effects}
        uses = Counter(a for cr in self.rules for a in set(cr.ground))
        self.keyed: dict = {}
        self.unkeyed = []
        for cr in self.rules:
            if not cr.ground:
                self.unkeyed.append(cr)
                continue
            key = min(cr.ground, key=lambda a: (a.pred not in dynamic, uses[a], str(a)))
            self.keyed.setdefault(key, []).append(cr)

    def candidates(self, state: State) -> list:
        out = list(self.unkeyed)
        keyed = self.keyed
        if len(keyed) < len(state._counts):
            out += [cr for a, crs in keyed.items() if a in state._counts for cr in crs]
        else:
            for a in state._counts:
                crs = keyed.get(a)
                if crs:
                    out += crs
        return out


def _executable(program: Program) -> _Executable:
    if program._compiled is None:
        program._compiled = _Executable(program)
    return program._compiled


def _order(instances: list[Instance]) -> list[Instance]:
    instances.sort(key=lambda inst: (inst.rule.name, tuple((k, _value_key(v)) for k, v in inst.binding)))
    seen = set()
    out = []
    for inst in instances:
        key = inst.rewrite_key()
        if key not in seen:
            seen.add(key)
            out.append(inst)
    return out


def applicable_instances(state: State, program: Program) -> list[Instance]:
    """Every applicable (rule, binding), sorted by rule name then binding.

    Instances with identical rewrites (same rule, same consumed and produced
    multisets) collapse to the one with the smallest binding.
    """
    return list(_choices(state, program)[0])


def _choices(state: State, program: Program) -> tuple:
    """(instances, integer weights), memoized per distinct state."""
    ex = _executable(program)
    key = frozenset(state._counts.items())
    hit = ex.memo.get(key)
    if hit is None:
        out: list[Instance] = []
        for cr in ex.candidates(state):
            cr.match(state, out)
        instances = tuple(_order(out))
        weights = integer_weights([i.rule.weight for i in instances]) if instances else ()
        hit = (instances, weights)
        if len(ex.memo) >= ex.MEMO_LIMIT:
            ex.memo.clear()
        ex.memo[key] = hit
    return hit


def rule_instances(state: State, program: Program, name: str) -> list[Instance]:
    out: list[Instance] = []
    for cr in _executable(program).rules:
        if cr.rule.name == name:
            cr.match(state, out)
    return _order(out)


def apply_instance(state: State, inst: Instance) -> State:
    s = state.copy()
    _apply_in_place(s, inst)
    return s


def _apply_in_place(s: State, inst: Instance) -> None:
    for a in inst.consumed:
        s.discard(a)
    for a in inst.produced:
        s.add(a)


# --------------------------------------------------------------------------
# Traces


@dataclass
class TraceStep:
    index: int
    rule: str
    binding: dict
    consumed: list
    produced: list

    def to_json(self) -> dict:
        return {
            "index": self.index,
            "rule": self.rule,
            "binding": {k: self.binding[k] for k in sorted(self.binding)},
            "consumed": [str(a) for a in self.consumed],
            "produced": [str(a) for a in self.produced],
        }

    @classmethod
    def from_json(cls, d: dict) -> "TraceStep":
        return cls(int(d["index"]), d["rule"], dict(d.get("binding", {})),
                   [Atom.parse(a) for a in d.get("consumed", [])],
                   [Atom.parse(a) for a in d.get("produced", [])])


@dataclass
class Trace:
    scenario: str
    seed: int
    initial: State
    steps: list = field(default_factory=list)
    final: Optional[State] = None
    termination: str = QUIESCENCE
    step_cap: Optional[int] = None

    def __post_init__(self):
        if self.final is None:
            self.final = self.initial.copy()

    def states(self) -> Iterable[State]:
        """Initial state, then the state after each step."""
        s = self.initial.copy()
        yield s.copy()
        for st in self.steps:
            for a in st.consumed:
                s.discard(a)
            for a in st.produced:
                s.add(a)
            yield s.copy()

    @property
    def rules(self) -> list[str]:
        return [s.rule for s in self.steps]

    def to_json(self) -> dict:
        return {
            "schema": TRACE_SCHEMA,
            "scenario": self.scenario,
            "seed": self.seed,
            "step_cap": self.step_cap,
            "termination": self.termination,
            "initial_state": self.initial.lines(),
            "steps": [s.to_json() for s in self.steps],
            "final_state": self.final.lines(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))

    @classmethod
    def from_json(cls, d: dict) -> "Trace":
        if d.get("schema") != TRACE_SCHEMA:
            raise ValueError(f"expected schema {TRACE_SCHEMA!r}, got {d.get('schema')!r}")
        initial = State.parse("\n".join(d.get("initial_state", [])))
        final = State.parse("\n".join(d["final_state"])) if "final_state" in d else None
        return cls(d.get("scenario", ""), int(d.get("seed", 0)), initial,
                   [TraceStep.from_json(s) for s in d.get("steps", [])],
                   final, d.get("termination", QUIESCENCE), d.get("step_cap"))

    @classmethod
    def loads(cls, text: str) -> "Trace":
        return cls.from_json(json.loads(text))


def _initial_of(scenario) -> tuple[str, State]:
    if isinstance(scenario, State):
        return "", scenario
    return scenario.name, scenario.initial_state()


def _record(index: int, inst: Instance) -> TraceStep:
    return TraceStep(index, inst.rule.name, dict(inst.binding), list(inst.consumed), list(inst.produced))


def step(state: State, program: Program, rng: SplitMix64) -> Optional[tuple[State, Instance]]:
    """One nondeterministic step, or None when the state is quiescent."""
    instances, weights = _choices(state, program)
    if not instances:
        return None
    inst = instances[rng.pick(weights)]
    return apply_instance(state, inst), inst


def run(scenario, program: Program, seed: int, step_cap: int = 200) -> Trace:
    """Run ``scenario`` (a Scenario or a bare State) to quiescence or the cap."""
    if step_cap < 1:
        raise ValueError("step_cap must be at least 1")
    name, initial = _initial_of(scenario)
    rng = SplitMix64(seed)
    state = initial.copy()
    steps: list[TraceStep] = []
    termination = STEP_CAP
    for i in range(step_cap):
        instances, weights = _choices(state, program)
        if not instances:
            termination = QUIESCENCE
            break
        inst = instances[rng.pick(weights)]
        _apply_in_place(state, inst)
        steps.append(_record(i, inst))
    else:
        if not _choices(state, program)[0]:
            termination = QUIESCENCE
    return Trace(name, seed, initial, steps, state, termination, step_cap)


def replay(scenario, program: Program, steps: Sequence, seed: int = 0) -> Trace:
    """Apply the given (rule, binding) pairs in order, with no random choice.

    A binding may be partial as long as it singles out one instance.
    """
    name, initial = _initial_of(scenario)
    state = initial.copy()
    out: list[TraceStep] = []
    for i, item in enumerate(steps):
        rule_name, partial = (item, {}) if isinstance(item, str) else (item[0], dict(item[1] or {}))
        if rule_name not in program.names:
            raise InapplicableStep(i, f"unknown rule {rule_name}")
        matches = [inst for inst in rule_instances(state, program, rule_name)
                   if all(k in inst.bindings and inst.bindings[k] == v for k, v in partial.items())]
        if not matches:
            raise InapplicableStep(i, f"{rule_name} does not apply")
        if len(matches) > 1:
            raise InapplicableStep(i, f"{rule_name} is ambiguous under {partial}")
        _apply_in_place(state, matches[0])
        out.append(_record(i, matches[0]))
    termination = QUIESCENCE if not applicable_instances(state, program) else STEP_CAP
    return Trace(name, seed, initial, out, state, termination)


def validate(trace: Trace, program: Program) -> Trace:
    """Recompute ``trace`` from its initial state; raise TraceMismatch at the first divergence."""
    state = trace.initial.copy()
    for st in trace.steps:
        matches = [inst for inst in rule_instances(state, program, st.rule)
                   if inst.bindings == st.binding] if st.rule in program.names else []
        if not matches:
            raise TraceMismatch(st.index, f"{st.rule} with {st.binding} does not apply")
        inst = matches[0]
        if Counter(inst.consumed) != Counter(st.consumed):
            raise TraceMismatch(st.index, "consumed atoms differ from the recomputed step")
        if Counter(inst.produced) != Counter(st.produced):
            raise TraceMismatch(st.index, "produced atoms differ from the recomputed step")
        _apply_in_place(state, inst)
    if trace.final is not None and trace.final != state:
        raise TraceMismatch(len(trace.steps), "final state differs")
    return Trace(trace.scenario, trace.seed, trace.initial, list(trace.steps), state,
                 trace.termination, trace.step_cap)


# --------------------------------------------------------------------------
# Causal structure


@dataclass(frozen=True)
class CausalEdge:
    producer: int
    atom: Atom
    consumer: int


@dataclass
class CausalGraph:
    edges: list = field(default_factory=list)

    def parents(self, index: int) -> list[int]:
        return sorted({e.producer for e in self.edges if e.consumer == index})

    def ancestors(self, index: int) -> set[int]:
        todo, seen = [index], set()
        while todo:
            for p in self.parents(todo.pop()):
                if p not in seen:
                    seen.add(p)
                    todo.append(p)
        return seen

    def to_dot(self, trace: Optional[Trace] = None) -> str:
        lines = ["digraph trace {", "  rankdir=TB;"]
        if trace is not None:
            for s in trace.steps:
                lines.append(f'  s{s.index} [label="{s.index}: {s.rule}"];')
        for e in self.edges:
            lines.append(f'  s{e.producer} -> s{e.consumer} [label="{e.atom}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def causal_links(trace: Trace) -> CausalGraph:
    """Link each consumed occurrence to the step that produced it.

    Occurrences are tracked per atom in FIFO order; occurrences that came
    from the initial state have no producer and yield no edge.
    """
    pool: dict[Atom, deque] = {}
    for a, c in trace.initial.items():
        pool[a] = deque([None] * c)
    edges = []
    for st in trace.steps:
        for a in st.consumed:
            q = pool.get(a)
            producer = q.popleft() if q else None
            if producer is not None:
                edges.append(CausalEdge(producer, a, st.index))
        for a in st.produced:
            pool.setdefault(a, deque()).append(st.index)
    return CausalGraph(edges)
