import math
import random

import pytest
from sympy.combinatorics import Permutation, PermutationGroup

from conftest import sum_group
from core.dynamics import catalog_endomorphisms
from core.errors import BudgetExceededError, UsageError
from core.group_core import (FiniteSubgroup, FiniteSubset, check_group_axioms, closure_witness,
                             count_cosets, ell, ell_rel, generate_payloads, image_set, is_subgroup,
                             multiply_sets, subgroup_generate)
from core.groups_catalog import (GroupSpec, build_group, catalog_entry, parse_cycles,
                                 perm_from_cycles)
from core.permutability import subgroup_enumerate


def _s(n):
    return build_group(GroupSpec("finitary_permutations", {"bound": n}))


def test_empty_subset_rejected():
    with pytest.raises(UsageError):
        FiniteSubset(_s(3), [])


def test_s3_generated_by_transposition_and_cycle():
    S3 = _s(3)
    X = FiniteSubset(S3, [parse_cycles("(1 2)"), parse_cycles("(1 2 3)")])
    G = subgroup_generate(X)
    assert len(G) == 6
    assert G.verified_closed
    assert is_subgroup(G)


@pytest.mark.parametrize("m", [4, 5])
def test_closure_order_matches_sympy(m):
    sfin = build_group(GroupSpec("finitary_permutations", {}))
    gens = [perm_from_cycles([[1, 2]]), perm_from_cycles([list(range(1, m + 1))])]
    G = generate_payloads(sfin, gens, max_size=200)
    oracle = PermutationGroup(Permutation([[0, 1]], size=m), Permutation([list(range(m))], size=m))
    assert len(G) == oracle.order() == math.factorial(m)


def test_closure_budget_exceeded():
    sfin = build_group(GroupSpec("finitary_permutations", {}))
    gens = [perm_from_cycles([[1, 2]]), perm_from_cycles([[1, 2, 3, 4, 5]])]
    with pytest.raises(BudgetExceededError) as info:
        generate_payloads(sfin, gens, max_size=50)
    assert info.value.limit == 50


def test_product_of_mismatched_groups_rejected():
    X = FiniteSubset(_s(3), [_s(3).identity])
    Y = FiniteSubset(sum_group(2), [()])
    with pytest.raises(UsageError):
        multiply_sets(X, Y)


def test_closure_witness_reports_product():
    S3 = _s(3)
    X = FiniteSubset(S3, [S3.identity, parse_cycles("(1 2)"), parse_cycles("(2 3)")])
    witness = closure_witness(X)
    assert witness['kind'] == 'product'
    assert closure_witness(FiniteSubset(S3, [parse_cycles("(1 2)")])) == {'kind': 'identity'}


def test_count_cosets_requires_verified_subgroup():
    S3 = _s(3)
    X = FiniteSubset(S3, [S3.identity, parse_cycles("(1 2)")])
    B = FiniteSubgroup(S3, X.payloads)
    with pytest.raises(UsageError):
        count_cosets(X, B)


def test_q8_axioms_and_power():
    Q8 = catalog_entry("Q8").group()
    assert check_group_axioms(Q8) is None
    i = Q8.decode("i")
    assert Q8.power(i, 2) == Q8.decode("-1")
    assert Q8.power(i, -1) == Q8.decode("-i")
    assert Q8.conjugate(Q8.decode("j"), i) == Q8.decode("-i")


def _random_pair(group, elements, rng):
    X = FiniteSubset(group, rng.sample(elements, rng.randint(1, 6)))
    B = generate_payloads(group, rng.sample(elements, rng.randint(1, 2)), max_size=len(elements))
    return X, B


def test_ell_decomposes_over_subgroup():
    rng = random.Random(0)
    groups = [_s(4), catalog_entry("Q8").group(), catalog_entry("H1").group()]
    for k in range(200):
        group = groups[k % len(groups)]
        elements = sorted(group.elements(), key=group.sort_key)
        X, B = _random_pair(group, elements, rng)
        XB = multiply_sets(X, B)
        assert len(XB) == count_cosets(X, B) * len(B)
        assert math.isclose(ell(XB), ell_rel(X, B) + ell(B), abs_tol=1e-12)


def _normal_subgroups(group):
    elements = list(group.elements())
    return [S for S in subgroup_enumerate(group)
            if all(group.conjugate(g, s) in S.payloads for g in elements for s in S.payloads)]


def test_ell_monotone_in_both_arguments():
    rng = random.Random(1)
    S4 = _s(4)
    elements = sorted(S4.elements(), key=S4.sort_key)
    for _ in range(200):
        X, B = _random_pair(S4, elements, rng)
        Y = FiniteSubset(S4, rng.sample(elements, rng.randint(1, 5)))
        bigger = FiniteSubset(S4, X.payloads | Y.payloads)
        larger_B = generate_payloads(S4, list(B.payloads) + [rng.choice(elements)], max_size=24)
        assert len(multiply_sets(X, Y)) <= len(X) * len(Y)
        assert count_cosets(X, B) <= len(X)
        assert count_cosets(X, B) <= count_cosets(bigger, B)
        assert count_cosets(X, larger_B) <= count_cosets(X, B)


def test_ell_subadditive_over_normal_subgroups():
    rng = random.Random(3)
    groups = [_s(4), catalog_entry("Q8").group(), catalog_entry("H1").group()]
    normals = {G.tag: _normal_subgroups(G) for G in groups}
    for k in range(200):
        group = groups[k % len(groups)]
        elements = sorted(group.elements(), key=group.sort_key)
        X = FiniteSubset(group, rng.sample(elements, rng.randint(1, 6)))
        Y = FiniteSubset(group, rng.sample(elements, rng.randint(1, 6)))
        B, B2 = rng.choice(normals[group.tag]), rng.choice(normals[group.tag])
        XY = multiply_sets(X, Y)
        assert count_cosets(XY, B) <= count_cosets(X, B) * count_cosets(Y, B)
        assert ell_rel(XY, B) <= ell_rel(X, B) + ell_rel(Y, B) + 1e-12
        BB2 = generate_payloads(group, list(B.payloads | B2.payloads), max_size=len(elements))
        assert len(BB2) * len(B.payloads & B2.payloads) == len(B) * len(B2)
        assert count_cosets(XY, BB2) <= count_cosets(X, B) * count_cosets(Y, B2)


def test_ell_subadditivity_needs_normal_subgroup():
    S3 = _s(3)
    b, y = parse_cycles("(1 2)"), parse_cycles("(1 2 3)")
    B = generate_payloads(S3, [b], max_size=2)
    X, Y = FiniteSubset(S3, [S3.identity, b]), FiniteSubset(S3, [S3.identity, y])
    assert count_cosets(X, B) * count_cosets(Y, B) == 2
    assert count_cosets(multiply_sets(X, Y), B) == 3


def test_ell_does_not_grow_under_endomorphisms():
    rng = random.Random(5)
    entries = [catalog_entry(name) for name in ("Q8", "S3", "H1", "S3xH1", "QZ[12]")]
    for k in range(200):
        entry = entries[k % len(entries)]
        group = entry.group()
        elements = sorted(group.elements(), key=group.sort_key)
        phi = rng.choice(list(catalog_endomorphisms(entry).values()))
        X, B = _random_pair(group, elements, rng)
        image_B = image_set(B, phi.fn)
        assert count_cosets(image_set(X, phi.fn), image_B) <= count_cosets(X, B), (entry.name, phi.name)
