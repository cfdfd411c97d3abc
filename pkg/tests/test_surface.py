import json

import pytest
from hypothesis import given, settings, strategies as st

from phatic.conversation import BOOKKEEPING, DOMINATED_EXIT, NORMATIVE_PATH, build_ruleset
from phatic.dsl import Program
from phatic.engine import replay, run
from phatic.scenario import default_scenario
from phatic.surface import (NARRATOR, PLACEHOLDER, Bank, BankError, UnknownRule, coverage_check,
                            load_bank, realize_step, realize_trace, render_table, render_transcript)

PROGRAM = build_ruleset()
SC = default_scenario()
BANK = load_bank()

REFERENCE_LINES = [
    "Bob: Good morning, Alice!",
    "Alice: Good morning, Bob!",
    "Bob: This weather today is really nice--good for playing sports",
    "Bob: I did a lot of playing baseball on Saturday It was nice out, just like today.",
    "Bob: I think baseball is a lot more interesting than people give it credit for.",
    "Bob: Some of the people I know like baseball.",
    "Alice: Uh-huh, well...I have to go now. Goodbye.",
    "Bob: Take care.",
]


def is_subsequence(needles, haystack):
    it = iter(haystack)
    return all(any(n == h for h in it) for n in needles)


@pytest.fixture(scope="module")
def dominated_exit():
    return replay(SC, PROGRAM, DOMINATED_EXIT)


def test_greet_step(dominated_exit):
    line = realize_step(dominated_exit.steps[0], BANK)
    assert (line.speaker, line.utterance) == ("bob", "Good morning, Alice!")
    assert line.guideline == \
        "Greeting someone acknowledges them and lets them know you are open to conversation."


def test_goodbye_step(dominated_exit):
    assert realize_step(dominated_exit.steps[-1], BANK).utterance == "Take care."


def test_dominated_exit_transcript(dominated_exit):
    lines = [ln.tagged() for ln in realize_trace(dominated_exit, BANK, seed=None)]
    assert lines[0] == REFERENCE_LINES[0] and lines[-1] == REFERENCE_LINES[-1]
    assert is_subsequence(REFERENCE_LINES, lines)
    # three reconstructed continue_talking lines stand where one was shown
    assert len(lines) == len(REFERENCE_LINES) + 2


def test_pinned_strings():
    assert BANK.opening_guidelines[0].startswith("Good places to start a conversation")
    assert BANK["small_talk_weekend"].utterances[0] == \
        "I love time at home listening to my music. Wish the weekend didn't go by so quickly"
    assert BANK["small_talk_weekend"].guidelines[0] == \
        "Small talk makes people more comfortable around each other."
    assert BANK["ask_question_weekend"].utterances[0] == "How was your weekend, {addressee}?"
    assert BANK["ask_question_weekend"].guidelines[0].startswith("Avoid only asking questions")


def test_first_line_draws_context_guideline(dominated_exit):
    (first, *_) = realize_trace(dominated_exit, BANK, seed=None)
    assert first.guideline.startswith("Good places to start a conversation")


def test_annoyed_exit_line(dominated_exit):
    lines = realize_trace(dominated_exit, BANK, seed=None)
    exit_line = next(ln for ln in lines if "I have to go now" in ln.utterance)
    assert exit_line.speaker == "alice"
    assert any("annoyed" in n for n in exit_line.notes)


def test_silent_steps_become_notes(dominated_exit):
    lines = realize_trace(dominated_exit, BANK, seed=None)
    assert all(ln.speaker != NARRATOR for ln in lines)
    assert sum(len(ln.notes) for ln in lines) == sum(s.rule in BOOKKEEPING for s in dominated_exit.steps)


def test_empty_trace():
    assert realize_trace(replay(SC, PROGRAM, []), BANK) == []
    assert render_transcript([]) == ""


def test_determinism_and_variety():
    t = run(SC, PROGRAM, 11)
    assert realize_trace(t, BANK, 5) == realize_trace(t, BANK, 5)
    variants = {tuple(ln.utterance for ln in realize_trace(t, BANK, s)) for s in range(20)}
    assert len(variants) > 1


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**64 - 1), st.one_of(st.none(), st.integers(0, 2**64 - 1)))
def test_slot_totality(seed, surface_seed):
    t = run(SC, PROGRAM, seed)
    for ln in realize_trace(t, BANK, surface_seed):
        for text in (ln.utterance, ln.guideline, *ln.notes):
            assert not PLACEHOLDER.search(text) and "{" not in text
        assert ln.utterance


def test_coverage():
    assert coverage_check(BANK, PROGRAM) == []
    assert coverage_check(BANK.without("greet_bob_alice", "greet_alice_bob"), PROGRAM) == \
        ["greet_bob_alice", "greet_alice_bob"]
    assert coverage_check(BANK, Program()) == []


def test_variant_counts():
    for rule in ("greet_bob_alice", "small_talk_weather", "topic_talk_rock_typical_positive",
                 "ask_question_pop", "say_goodbye_alice_bob"):
        assert len(BANK[rule].utterances) >= 2, rule


def test_unknown_rule(dominated_exit):
    with pytest.raises(UnknownRule):
        realize_trace(dominated_exit, BANK.without("small_talk_weather"))


def test_bank_rejects_unknown_placeholder(tmp_path):
    d = BANK.to_json()
    d["rules"]["greet_bob_alice"]["utterances"] = ["Hi {nickname}"]
    with pytest.raises(BankError):
        Bank.from_json(d)
    bad = tmp_path / "bank.json"
    bad.write_text("{not json")
    with pytest.raises(BankError):
        load_bank(bad)
    good = tmp_path / "good.json"
    good.write_text(json.dumps(BANK.to_json()))
    assert load_bank(good) == BANK


def test_table_layout():
    t = replay(SC, PROGRAM, NORMATIVE_PATH)
    table = render_table(realize_trace(t, BANK, seed=None)).splitlines()
    assert table[0] == "Dialogue | Guideline"
    assert all(" | " in row for row in table)
    assert table[1].startswith("Bob: Good morning, Alice! | ")
