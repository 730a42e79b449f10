import csv
import math

import pytest

from conftest import sum_group
from core.errors import BudgetExceededError, UsageError
from core.group_core import generate_payloads
from core.groups_catalog import GroupSpec, build_group, catalog_entry, finite_subgroup_family
from core.permutability import (CERT_EXHAUSTIVE_TRUNCATION, CERT_SAMPLED, CERT_STRUCTURAL,
                                export_matrix_csv, fc_member_test, first_nonpermuting_pair,
                                permutability_matrix, sets_permute, sfin_noncofinal_witness,
                                subgroup_enumerate)


@pytest.mark.parametrize("name, count", [("Q8", 6), ("S3", 6)])
def test_subgroup_counts(name, count):
    assert len(subgroup_enumerate(catalog_entry(name).group())) == count


def test_cyclic_group_of_order_four_has_three_subgroups():
    Z4 = build_group(GroupSpec("cyclic", {"modulus": 4}))
    assert [len(S) for S in subgroup_enumerate(Z4)] == [1, 2, 4]


@pytest.mark.parametrize("name", ["Q8", "H1"])
def test_quasihamiltonian_groups_permute_everywhere(name):
    subgroups = subgroup_enumerate(catalog_entry(name).group())
    matrix = permutability_matrix(subgroups)
    assert all(all(row) for row in matrix)
    assert first_nonpermuting_pair(subgroups) is None


def test_s3_has_nonpermuting_transpositions():
    S3 = catalog_entry("S3").group()
    subgroups = subgroup_enumerate(S3)
    matrix = permutability_matrix(subgroups, workers=2)
    for i in range(len(subgroups)):
        for j in range(len(subgroups)):
            assert matrix[i][j] == matrix[j][i]
    assert not all(all(row) for row in matrix)
    report = first_nonpermuting_pair(subgroups)
    assert report.product_size == report.reverse_size == 4
    assert report.witness_side in ("FE\\EF", "EF\\FE")


def test_sets_permute_witness():
    S3 = catalog_entry("S3").group()
    F = generate_payloads(S3, [S3.decode("(1 2)")], max_size=2)
    E = generate_payloads(S3, [S3.decode("(2 3)")], max_size=2)
    report = sets_permute(F, E)
    assert not report.permutes
    assert report.witness_side == "FE\\EF"
    assert report.witness in ("(1 2 3)", "(1 3 2)")
    with pytest.raises(UsageError):
        sets_permute(F, generate_payloads(sum_group(2), [()], max_size=1))


@pytest.mark.parametrize("n, m, witness", [(2, 2, "(1 2 3)"), (3, 4, "(1 3 5)"), (3, 5, "(1 3 6)")])
def test_finitary_permutations_are_not_finitely_quasihamiltonian(n, m, witness):
    result = sfin_noncofinal_witness(n, m)
    assert not result.permutes
    assert result.witness == witness
    assert result.witness_side == "HN\\NH"
    assert result.hn_size == result.nh_size == 2 * math.factorial(m)
    assert result.to_json()["tau"] == f"({n} {m + 1})"


def test_witness_arguments_validated():
    with pytest.raises(UsageError):
        sfin_noncofinal_witness(1, 3)
    with pytest.raises(UsageError):
        sfin_noncofinal_witness(4, 3)


def test_fc_member_levels():
    S3 = catalog_entry("S3").group()
    subgroups = subgroup_enumerate(S3)
    transposition = generate_payloads(S3, [S3.decode("(1 2)")], max_size=2)
    evidence = fc_member_test(transposition, subgroups, exhaustive=True)
    assert evidence.certification == CERT_EXHAUSTIVE_TRUNCATION
    assert not evidence.all_permuted
    assert len(evidence.failures) == 2

    sampled = fc_member_test(transposition, subgroups[:2])
    assert sampled.certification == CERT_SAMPLED

    Q8 = catalog_entry("Q8").group()
    center = generate_payloads(Q8, [Q8.decode("-1")], max_size=2)
    structural = fc_member_test(center, subgroup_enumerate(Q8))
    assert structural.all_permuted
    assert structural.certification == CERT_STRUCTURAL


def test_family_members_pass_member_test():
    entry = catalog_entry("H2")
    group = entry.group()
    cyclic = {}
    for g in group.elements():
        C = generate_payloads(group, [g], max_size=group.order)
        cyclic.setdefault(C.payloads, C)
    members = list(finite_subgroup_family(entry, 1000))
    assert [len(F) for F in members] == [27, 243]
    for F in members:
        evidence = fc_member_test(F, list(cyclic.values()))
        assert evidence.all_permuted
        assert evidence.failures == []

    Q8 = catalog_entry("Q8").group()
    subgroups = subgroup_enumerate(Q8)
    for F in subgroups:
        evidence = fc_member_test(F, subgroups, exhaustive=True)
        assert evidence.all_permuted
        assert evidence.certification == CERT_EXHAUSTIVE_TRUNCATION


def test_enumeration_refuses_infinite_groups():
    with pytest.raises(BudgetExceededError):
        subgroup_enumerate(catalog_entry("H").group())
    with pytest.raises(BudgetExceededError):
        subgroup_enumerate(catalog_entry("H2").group(), order_cap=100)


def test_matrix_csv_export(tmp_path):
    subgroups = subgroup_enumerate(catalog_entry("S3").group())
    matrix = permutability_matrix(subgroups)
    path = export_matrix_csv(matrix, subgroups, str(tmp_path / "out" / "s3.csv"))
    with open(path, encoding="utf-8-sig") as f:
        rows = list(csv.reader(f))
    assert rows[0][:3] == ["id", "order", "generators"]
    assert len(rows) == 1 + len(subgroups)
    assert rows[1][1] == "1"
    assert rows[6][1] == "6"
