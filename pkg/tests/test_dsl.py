from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from oracle import random_program_source
from phatic.conversation import build_ruleset, ruleset_source
from phatic.dsl import (ABSENT, PRESERVE, BudgetExceeded, Guard, ProgramError, Var,
                        check_reachability, parse_program, serialize_program)
from phatic.kernel import Atom, State
from phatic.scenario import default_scenario


def errors_of(source):
    with pytest.raises(ProgramError) as info:
        parse_program(source)
    return [d.message for d in info.value.diagnostics]


def test_single_rule_shape():
    p = parse_program("rule greet_bob_alice: met(bob,alice) * ready(bob) "
                      "-o greeted(bob,alice) * ready(bob).")
    (r,) = p.rules
    assert r.name == "greet_bob_alice"
    assert len(r.premises) == 2 and len(r.effects) == 2
    assert r.weight == 1


def test_unbound_effect_variable():
    assert errors_of("rule bad: a(X) -o b(Y).") == ["unbound variable Y in effect"]


def test_empty_source():
    p = parse_program("")
    assert len(p) == 0 and p.diagnostics == []


def test_comments_and_weights():
    p = parse_program("% header\nrule w: weight 1/4: a -o ().  % trailing\n")
    assert p.rules[0].weight == Fraction(1, 4)
    assert p.rules[0].effects == ()


def test_premise_modes_and_guard():
    r = parse_program("rule r: $a(X) * !absent b(X, Y) * n(N) * (3 * N > 2) -o n(N + 1).").rules[0]
    assert [p.mode for p in r.premises[:2]] == [PRESERVE, ABSENT]
    assert isinstance(r.premises[3], Guard)
    assert r.variables == {"X", "N"}  # Y in an !absent pattern is a wildcard


def test_primed_variables():
    r = parse_program("rule r: partner(C, C') -o partner(C', C).").rules[0]
    assert r.effects[0].args == (Var("C'"), Var("C"))


@pytest.mark.parametrize("source, fragment", [
    ("rule x: a(X) -o b. rule y: a(X, Y) -o ().", "arity conflict"),
    ("rule x: a -o b.\nrule x: a -o b.", "duplicate rule name x"),
    ("rule x: -o b.", "expected predicate name"),
    ("rule x a -o b", "expected ':'"),
    ("rule g: n(N) * (N > M) -o ().", "before it is bound"),
    ("rule w: weight 0: a -o b.", "weight must be positive"),
    ("rule big: a(X) -o n(X + 300).", None),  # fine statically; instantiation filters it
])
def test_static_errors(source, fragment):
    if fragment is None:
        parse_program(source)
    else:
        assert any(fragment in m for m in errors_of(source))


def test_errors_in_several_rules_are_all_reported():
    msgs = errors_of("rule a: x -o y(Z).\nrule b x.\nrule c: p -o q(W).")
    assert len(msgs) == 3


def test_no_op_rule_is_only_a_warning():
    p = parse_program("rule idle: $a -o ().")
    assert [d.severity for d in p.diagnostics] == ["warning"]


def test_diagnostic_format():
    with pytest.raises(ProgramError) as info:
        parse_program("\n  rule bad: a(X) -o b(Y).")
    assert info.value.diagnostics[0].format("r.phatic") == \
        "r.phatic:2:21: error: unbound variable Y in effect"


# -- serialization --


def test_serialize_weight_annotation():
    text = serialize_program(parse_program("rule w: weight 2: a -o b."))
    assert text == "rule w: weight 2: a -o b.\n"


def test_shipped_ruleset_round_trips():
    p = build_ruleset()
    assert parse_program(serialize_program(p)) == p
    assert parse_program(ruleset_source()) == p


@settings(max_examples=200)
@given(st.randoms(use_true_random=False))
def test_round_trip_property(rng):
    p = parse_program(random_program_source(rng))
    assert parse_program(serialize_program(p)) == p


@settings(max_examples=200)
@given(st.randoms(use_true_random=False), st.data())
def test_diagnostic_spans_inside_source(rng, data):
    source = random_program_source(rng)
    i = data.draw(st.integers(0, len(source)))
    j = data.draw(st.integers(i, min(len(source), i + 6)))
    junk = data.draw(st.text(alphabet="a(X)*-o.:$!% \n1", max_size=4))
    mutated = source[:i] + junk + source[j:]
    try:
        diags = parse_program(mutated).diagnostics
    except ProgramError as e:
        diags = e.diagnostics
    lines = mutated.split("\n")
    for d in diags:
        assert 0 <= d.offset <= len(mutated)
        assert 1 <= d.line <= len(lines)
        assert 1 <= d.col <= len(lines[d.line - 1]) + 1


# -- reachability --


def test_depth_one_reaches_only_greetings():
    reach = check_reachability(build_ruleset(), default_scenario().initial_state(), 1)
    assert sorted(k for k, v in reach.items() if v) == ["greet_alice_bob", "greet_bob_alice"]


def test_depth_zero_reaches_nothing():
    reach = check_reachability(build_ruleset(), default_scenario().initial_state(), 0)
    assert not any(reach.values())


def test_vacuous_precondition_never_reachable():
    p = parse_program("rule step: a -o b.\nrule never: ghost -o a.")
    reach = check_reachability(p, State([Atom.make("a")]), 12)
    assert reach == {"step": True, "never": False}


def test_reachability_monotone_in_depth():
    p, init = build_ruleset(), default_scenario().initial_state()
    prev = set()
    for d in range(6):
        now = {k for k, v in check_reachability(p, init, d).items() if v}
        assert prev <= now
        prev = now
    assert {"small_talk_weather", "topic_talk_weather_typical_positive"} <= prev


def test_reachability_budget():
    p = parse_program("rule grow: n(N) * (N < 200) -o n(N + 1) * m(N).")
    with pytest.raises(BudgetExceeded):
        check_reachability(p, State([Atom.make("n", 0)]), 12, max_states=5)
    with pytest.raises(ValueError):
        check_reachability(p, State(), 13)
