import pytest
from hypothesis import given, strategies as st

from phatic.kernel import NUM_MAX, NUM_MIN, Atom, AtomAbsent, State, state_count, state_insert, state_remove

TURN = Atom.make("turn")
ANNOYED = Atom.make("feels", "alice", "annoyed")


def test_insert_into_empty():
    s = state_insert(State(), ANNOYED)
    assert s.count(ANNOYED) == 1 and len(s) == 1


def test_insert_duplicate_counts():
    assert state_count(state_insert(State([TURN]), TURN), TURN) == 2


def test_insert_then_remove_is_identity():
    s = State([ANNOYED, TURN])
    assert state_remove(state_insert(s, TURN), TURN) == s


def test_remove_decrements_and_empties():
    assert State([TURN, TURN]).remove(TURN).count(TURN) == 1
    content = Atom.make("feels", "alice", "content")
    assert len(State([content]).remove(content)) == 0


def test_remove_absent_raises():
    with pytest.raises(AtomAbsent):
        State().remove(TURN)


def test_count_defaults_to_zero_and_tracks_inserts():
    assert State().count(Atom.make("anything", 1)) == 0
    s = State()
    for _ in range(5):
        s = s.insert(TURN)
    assert s.count(TURN) == 5


def test_persistent_operations_do_not_mutate():
    s = State([TURN])
    s.insert(TURN)
    s.remove(TURN)
    assert s.count(TURN) == 1


@pytest.mark.parametrize("text", ["Feels(a)", "feels(a, B)", "f(1,2,3,4)", "f(300)", "f(a"])
def test_bad_atoms_rejected(text):
    with pytest.raises(ValueError):
        Atom.parse(text)


def test_signed_counter_range():
    assert Atom.parse("affinity(bob, alice, -2)").args[-1] == -2
    with pytest.raises(ValueError):
        Atom.make("n", NUM_MAX + 1)
    with pytest.raises(ValueError):
        Atom.make("n", NUM_MIN - 1)


consts = st.one_of(st.integers(NUM_MIN, NUM_MAX), st.sampled_from(["a", "bob", "x_1"]))
atoms = st.builds(lambda p, args: Atom.make(p, *args),
                  st.sampled_from(["p", "q", "feels"]), st.lists(consts, max_size=3))
states = st.lists(atoms, max_size=12).map(State)


@given(atoms)
def test_atom_text_round_trip(a):
    assert Atom.parse(str(a)) == a


@given(states)
def test_state_serialization_round_trip(s):
    assert State.parse(s.serialize()) == s


@given(states, atoms)
def test_insert_remove_inverse(s, a):
    assert s.insert(a).remove(a) == s
    assert s.insert(a).count(a) == s.count(a) + 1


@given(st.lists(atoms, max_size=12))
def test_size_is_number_of_occurrences(xs):
    s = State(xs)
    assert len(s) == len(xs) == len(list(s.occurrences()))


@given(st.lists(atoms, max_size=8))
def test_equality_ignores_insertion_order(xs):
    assert State(xs) == State(reversed(xs))
    assert hash(State(xs)) == hash(State(reversed(xs)))
