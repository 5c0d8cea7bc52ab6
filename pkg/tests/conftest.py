import pytest

from playlab.arena import make_arena, parse_type

from oracles import play_of

# The two running example plays over unit -> unit -> unit: run the first
# argument to completion, then the second (legal sequentially and
# concurrently), and the interleaved variant that opens both arguments
# before either answer arrives (legal concurrently only).
SEQ_COMPOSITION_PLAY = play_of(
    ("q@ε", None),
    ("q@1", 0),
    ("a@1", 1),
    ("q@2", 0),
    ("a@2", 3),
    ("a@ε", 0),
)

PAR_COMPOSITION_PLAY = play_of(
    ("q@ε", None),
    ("q@1", 0),
    ("q@2", 0),
    ("a@1", 1),
    ("a@2", 2),
    ("a@ε", 0),
)


@pytest.fixture(scope="session")
def unit_arena():
    return make_arena(parse_type("unit"))


@pytest.fixture(scope="session")
def arrow_arena():
    return make_arena(parse_type("unit -> unit"))


@pytest.fixture(scope="session")
def two_arg_arena():
    return make_arena(parse_type("unit -> unit -> unit"))


@pytest.fixture(scope="session")
def order2_arena():
    return make_arena(parse_type("(unit -> unit) -> unit"))
