import pytest

from core_model import And, Does, Not, Prop, State
from conftest import DOMAINS
from domain_file import dumps_domain, load_domain, parse_domain, read_domain_file
from errors import DomainFileError

MINIMAL = """\
agents: A1 A2
props: p q
actions: go
init: {q}
"""


def test_junction_fixture_matches_example(junction):
    sig = junction.signature
    assert sig.agents.names == ("A1", "A2")
    assert sig.props.names == ("crossed1", "crossed2", "collision")
    assert sig.actions.names == ("skip", "F")
    assert junction.s0 == State()
    assert junction.epistemic_set(0) == (State(), State.of([1]))
    assert junction.epistemic_set(1) == (State(),)
    crossed1, crossed2, collision = Prop(0), Prop(1), Prop(2)
    assert junction.theory.gamma_plus(0, 1, 2) == And(And(Not(crossed1), Not(crossed2)), Does(1, 1))
    assert junction.theory.gamma_plus(1, 1, 1) == And(Not(And(Not(crossed1), Does(0, 1))), Not(collision))
    assert len(junction.theory.pos) == 3
    assert not junction.theory.neg


def test_table_fixture(table):
    sig = table.signature
    assert sig.actions.names == ("skip", "lift")
    assert len(table.theory.pos) == 4
    assert len(table.epistemic_set(0)) == 2
    assert table.epistemic_set(1) == (table.s0,)


def test_dumps_is_a_parse_fixed_point(junction, table):
    for ppd in (junction, table):
        text = dumps_domain(ppd)
        again = dumps_domain(parse_domain(text))
        assert again == text


def test_dumps_canonical_form():
    ppd = parse_domain(MINIMAL + "effect- A2 go q: p\neffect+ A1 go p: !p # 켜기\n")
    assert dumps_domain(ppd) == (
        "agents: A1 A2\n"
        "props: p q\n"
        "actions: skip go\n"
        "init: {q}\n"
        "epistemic A1: {q}\n"
        "epistemic A2: {q}\n"
        "effect+ A1 go p: !p\n"
        "effect- A2 go q: p\n"
    )


def test_missing_init_in_epistemic_set_is_appended():
    ppd = parse_domain(MINIMAL + "epistemic A1: {p}\n")
    assert ppd.epistemic_set(0) == (State.of([0]), State.of([1]))


@pytest.mark.parametrize("extra,line", [
    ("effect+ A1 skip p: true\n", 5),
    ("effect+ A1 go r: true\n", 5),
    ("effect+ A3 go p: true\n", 5),
    ("effect+ A1 go p: F p\n", 5),
    ("effect+ A1 go p: p &\n", 5),
    ("effect+ A1 go p: true\neffect+ A1 go p: p\n", 6),
    ("epistemic A1: {p} q\n", 5),
    ("epistemic A9: {p}\n", 5),
    ("epistemic A1:\n", 5),
    ("agents: A3\n", 5),
    ("bogus line\n", 5),
    ("init: {p} {q}\n", 5),
])
def test_errors_carry_line_numbers(extra, line):
    with pytest.raises(DomainFileError) as info:
        parse_domain(MINIMAL + extra, "bad.dom")
    assert info.value.line == line
    assert str(info.value).startswith(f"bad.dom:{line}:")


def test_missing_section():
    with pytest.raises(DomainFileError):
        read_domain_file("agents: A1\nprops: p\nactions: a\n")


def test_init_with_undeclared_prop():
    with pytest.raises(DomainFileError) as info:
        parse_domain(MINIMAL.replace("{q}", "{r}"))
    assert info.value.line == 4


def test_load_domain_missing_file(tmp_path):
    with pytest.raises(DomainFileError):
        load_domain(str(tmp_path / "nope.dom"))


def test_load_packaged_domain():
    assert load_domain(str(DOMAINS / "junction.dom")).signature.n_agents == 2
