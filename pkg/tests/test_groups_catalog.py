import math

import pytest

from conftest import sum_group
from core.errors import ConstructionError, UnsupportedError, UsageError
from core.group_core import check_group_axioms, generate_payloads
from core.groups_catalog import (LOCALLY_FINITE, QUASIHAMILTONIAN, GroupSpec, TableStructure,
                                 build_group, catalog, catalog_entry, cyclic_table,
                                 finite_subgroup_family, format_cycles, parse_cycles,
                                 subgroup_chain)


def test_quaternion_products():
    Q8 = catalog_entry("Q8").group()
    i, j, k = (Q8.decode(x) for x in ("i", "j", "k"))
    assert Q8.mul(i, j) == k
    assert Q8.mul(j, i) == Q8.decode("-k")
    assert Q8.mul(k, k) == Q8.decode("-1")
    assert not Q8.abelian


def test_invalid_table_rejected():
    with pytest.raises(ConstructionError):
        TableStructure([[0, 1], [1, 1]])
    with pytest.raises(ConstructionError):
        TableStructure([[0, 1, 2], [1, 0, 2], [2, 2, 0]])


def test_cyclic_table_is_group():
    structure = TableStructure(cyclic_table(5))
    group = structure.build("C5-test", "C5")
    assert check_group_axioms(group) is None
    assert group.abelian


def test_permutations_compose_right_to_left():
    S3 = catalog_entry("S3").group()
    a, b = parse_cycles("(1 2)"), parse_cycles("(2 3)")
    assert format_cycles(S3.mul(a, b)) == "(1 2 3)"
    assert format_cycles(S3.mul(b, a)) == "(1 3 2)"
    assert S3.mul(a, S3.invert(a)) == S3.identity
    assert format_cycles(parse_cycles("(1 3)(2 4)")) == "(1 3)(2 4)"


def test_semidirect_action_must_be_automorphic():
    base = {"variant": "restricted_direct_sum", "modulus": 9, "index": "N", "truncation": 1}
    with pytest.raises(ConstructionError):
        build_group(GroupSpec.from_json({"variant": "semidirect", "base": base,
                                         "actor_order": 3, "exponent": 3}))
    with pytest.raises(ConstructionError):
        build_group(GroupSpec.from_json({"variant": "semidirect", "base": base,
                                         "actor_order": 3, "exponent": 2}))


def test_h1_is_nonabelian_group_of_order_27():
    H1 = catalog_entry("H1").group()
    assert H1.order == 27
    assert not H1.abelian
    assert check_group_axioms(H1) is None


def test_lamplighter_axioms():
    group = catalog_entry("lamplighter").group()
    assert not group.is_finite
    assert check_group_axioms(group, samples=300) is None
    s = group.structure
    t, a = s.move(1), s.lamp(0)
    assert group.conjugate(t, a) == s.lamp(1)


def test_group_spec_round_trip_keeps_tag():
    spec = catalog_entry("S3xH1").spec
    again = GroupSpec.from_json(spec.to_json())
    assert again.tag() == spec.tag()
    with pytest.raises(UsageError):
        GroupSpec.from_json({"variant": "free_group"})
    with pytest.raises(UsageError):
        GroupSpec.from_json({"modulus": 3})


def test_catalog_classes():
    names = [entry.name for entry in catalog()]
    assert len(names) == len(set(names))
    assert QUASIHAMILTONIAN in catalog_entry("Q8").known_class
    assert QUASIHAMILTONIAN not in catalog_entry("S3").known_class
    assert LOCALLY_FINITE in catalog_entry("Sfin").known_class
    assert not catalog_entry("lamplighter").locally_finite
    with pytest.raises(UsageError):
        catalog_entry("Z7")


def test_chain_of_direct_sum():
    group = sum_group(6)
    assert [len(F) for F in subgroup_chain(group, 1000)] == [6, 36, 216]
    two_sided = sum_group(2, "Z")
    assert [len(F) for F in subgroup_chain(two_sided, 100)] == [2, 8, 32]


def test_chain_of_finitary_permutations():
    sfin = catalog_entry("Sfin").group()
    assert [len(F) for F in subgroup_chain(sfin, 130)] == [math.factorial(n) for n in (2, 3, 4, 5)]


def test_chain_members_are_nested():
    entry = catalog_entry("S3xH")
    members = list(finite_subgroup_family(entry, 2000))
    assert len(members) >= 2
    for small, large in zip(members, members[1:]):
        assert small.issubset(large)


def test_lamplighter_has_no_finite_family():
    with pytest.raises(UnsupportedError):
        finite_subgroup_family(catalog_entry("lamplighter"), 100)
    group = catalog_entry("lamplighter").group()
    with pytest.raises(UnsupportedError):
        next(subgroup_chain(group, 100))


def test_truncated_sum_is_subgroup_of_full_sum():
    full = sum_group(9)
    truncated = sum_group(9, truncation=2)
    assert truncated.order == 81
    assert generate_payloads(full, [full.structure.unit(0), full.structure.unit(1)], 81).payloads \
        == frozenset(truncated.elements())


def test_cayley_tables_with_different_names_are_distinct_groups():
    table = cyclic_table(2)
    plain = build_group(GroupSpec("cayley_table", {"table": table, "names": ["e", "a"]}))
    renamed = build_group(GroupSpec("cayley_table", {"table": table, "names": ["1", "t"]}))
    assert plain is not renamed
    assert plain.tag != renamed.tag
    assert plain.format(1) == "a"
    assert renamed.format(1) == "t"
    again = build_group(GroupSpec("cayley_table", {"table": table, "names": ["e", "a"]}))
    assert again is plain
