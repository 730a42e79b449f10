import math
import random

import pytest

from conftest import coordinate_subgroup, sum_group
from core.dynamics import (catalog_endomorphisms, endo_from_spec, identity_endomorphism, induce_quotient,
                           normal_subgroup_from_spec, trivial_endomorphism)
from core.entropy import (DIVERGENCE_FLAG, METHOD_IDENTITY, METHOD_STABILIZED, METHOD_TRIVIAL,
                          POLYNOMIAL_FLAG, BudgetPolicy, conjugacy_invariance_check, entropy_H,
                          entropy_H_linear, entropy_H_rel, entropy_h, relative_monotone_check)
from core.errors import UsageError
from core.group_core import FiniteSubset, generate_payloads
from core.groups_catalog import catalog, catalog_entry, finite_subgroup_family, subgroup_chain


@pytest.mark.parametrize("m", [2, 3, 6])
def test_bernoulli_shift_is_exactly_log_m(m):
    group = sum_group(m)
    estimate = entropy_H(endo_from_spec(group, "shift"), coordinate_subgroup(group), BudgetPolicy())
    assert [n for n, _ in estimate.sequence] == [0, 1, 2, 3, 4]
    for _, value in estimate.sequence:
        assert abs(value - math.log(m)) <= 1e-12
    assert estimate.is_exact
    assert estimate.method == METHOD_STABILIZED
    assert abs(estimate.exact - math.log(m)) <= 1e-12
    assert estimate.sizes[16] == m ** 16


def test_linear_scheme_matches_on_bernoulli():
    group = sum_group(3)
    estimate = entropy_H_linear(endo_from_spec(group, "shift"), coordinate_subgroup(group))
    assert len(estimate.sequence) == 16
    assert all(abs(v - math.log(3)) <= 1e-12 for _, v in estimate.sequence)


def test_identity_is_exactly_zero_on_locally_finite_entries():
    for entry in catalog():
        if not entry.locally_finite:
            continue
        phi = identity_endomorphism(entry.group())
        members = list(finite_subgroup_family(entry, 2000))
        assert members, entry.name
        for F in members:
            estimate = entropy_H(phi, F)
            assert estimate.exact == 0.0, (entry.name, len(F))
            assert estimate.method == METHOD_IDENTITY


def test_trivial_endomorphism_and_identity_adjunction():
    group = sum_group(5)
    X = FiniteSubset(group, [((0, 1),), ((2, 3),)])
    estimate = entropy_H(trivial_endomorphism(group), X)
    assert estimate.identity_adjoined
    assert estimate.method == METHOD_TRIVIAL
    assert estimate.exact == 0.0
    assert estimate.upper_bound == pytest.approx(math.log(3) / 16)


def test_truncated_run_reports_upper_bound():
    group = sum_group(3)
    X = FiniteSubset(group, [(), ((0, 1),)])
    budget = BudgetPolicy(max_set_size=1000)
    estimate = entropy_H(endo_from_spec(group, "shift"), X, budget)
    assert estimate.truncated
    assert not estimate.is_exact
    assert estimate.sizes == [2 ** k for k in range(10)]
    assert [n for n, _ in estimate.sequence] == [0, 1, 2, 3]
    assert estimate.upper_bound == pytest.approx(math.log(256) / 8)


def test_time_cap_spent_after_first_term_still_gives_upper_bound():
    group = sum_group(2)
    shift = endo_from_spec(group, "shift")
    F = coordinate_subgroup(group)
    budget = BudgetPolicy(time_cap=1e-9)
    trivial = normal_subgroup_from_spec(group, "trivial")
    for estimate in (entropy_H(shift, F, budget), entropy_H_linear(shift, F, budget),
                     entropy_H_rel(shift, F, trivial, budget)):
        assert estimate.truncated
        assert estimate.sizes[:2] == [1, 2]
        assert estimate.sequence
        assert estimate.upper_bound == pytest.approx(math.log(2))
        assert not estimate.is_exact


def _random_instance(rng):
    names = ["Q8", "S3", "H1", "H2", "S3xH1", "Z2^(N)", "Z3^(Z)", "Z4^(N)", "QZ[12]"]
    entry = catalog_entry(rng.choice(names))
    group = entry.group()
    phi = rng.choice(list(catalog_endomorphisms(entry).values()))
    pool = sorted(next(subgroup_chain(group, 200)).payloads, key=group.sort_key)
    X = FiniteSubset(group, rng.sample(pool, min(len(pool), rng.randint(1, 3))))
    return phi, X


def test_doubling_sequence_never_increases():
    rng = random.Random(2024)
    budget = BudgetPolicy(max_exponent=3, max_set_size=100000, time_cap=30)
    for _ in range(100):
        phi, X = _random_instance(rng)
        estimate = entropy_H(phi, X, budget)
        assert not estimate.invariant_violation, estimate.label
        values = [v for _, v in estimate.sequence]
        assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))


def test_sweep_over_shift_stabilizes_at_log_2():
    group = sum_group(2)
    estimate = entropy_h(endo_from_spec(group, "shift"), subgroup_chain(group, 10000))
    assert estimate.stabilized
    assert estimate.exact == pytest.approx(math.log(2), abs=1e-12)
    assert DIVERGENCE_FLAG not in estimate.flags
    assert len(estimate.members) == 5


def test_sweep_on_finite_group_uses_whole_group():
    Q8 = catalog_entry("Q8").group()
    phi = endo_from_spec(Q8, "catalog:q8_outer")
    estimate = entropy_h(phi, subgroup_chain(Q8, 100), cofinal=True)
    assert estimate.exact == 0.0
    assert len(estimate.members) == 1


def test_relative_entropy_matches_explicit_quotient():
    group = sum_group(6)
    shift = endo_from_spec(group, "shift")
    H = normal_subgroup_from_spec(group, {"kind": "multiples", "divisor": 3})
    quotient = induce_quotient(shift, H, samples=200)
    F = coordinate_subgroup(group)
    rel = entropy_H_rel(shift, F, H)
    explicit = entropy_H(quotient.induced, quotient.project(F))
    assert rel.sizes == explicit.sizes
    assert rel.exact == pytest.approx(math.log(3), abs=1e-12)

    Q8 = catalog_entry("Q8").group()
    phi = endo_from_spec(Q8, "inner:j")
    center = normal_subgroup_from_spec(Q8, "center")
    q = induce_quotient(phi, center)
    X = FiniteSubset(Q8, [Q8.decode(x) for x in ("1", "i", "k")])
    assert entropy_H_rel(phi, X, center).sizes == entropy_H(q.induced, q.project(X)).sizes


def test_lamplighter_identity_grows_exponentially():
    group = catalog_entry("lamplighter").group()
    s = group.structure
    X = FiniteSubset(group, [group.identity, s.lamp(0), s.move(1), s.move(-1)])
    estimate = entropy_H(identity_endomorphism(group), X)
    assert not estimate.truncated
    for n in range(10, 16):
        assert math.log(estimate.sizes[n + 1]) - math.log(estimate.sizes[n]) >= 0.4
    sweep = entropy_h(identity_endomorphism(group), [X])
    assert DIVERGENCE_FLAG in sweep.flags
    assert not sweep.is_exact


def test_polynomial_growth_is_flagged():
    group = catalog_entry("lamplighter").group()
    X = FiniteSubset(group, [group.structure.move(k) for k in (-1, 0, 1)])
    sweep = entropy_h(identity_endomorphism(group), [X])
    assert POLYNOMIAL_FLAG in sweep.flags
    assert DIVERGENCE_FLAG not in sweep.flags


def test_relative_monotone_on_s3():
    S3 = catalog_entry("S3").group()
    phi = endo_from_spec(S3, {"kind": "inner", "element": "(1 2)"})
    F = generate_payloads(S3, [S3.decode("(1 2 3)")], max_size=3)
    X = FiniteSubset(S3, [S3.identity, S3.decode("(1 2)"), S3.decode("(2 3)")])
    result = relative_monotone_check(phi, X, F, 3)
    assert result.ok
    with pytest.raises(UsageError):
        relative_monotone_check(phi, FiniteSubset(S3, [S3.decode("(1 2)")]), F, 2)


def test_relative_monotone_on_bernoulli_shift():
    group = sum_group(2)
    shift = endo_from_spec(group, "shift")
    X = generate_payloads(group, [group.structure.unit(0), group.structure.unit(1)], max_size=4)
    result = relative_monotone_check(shift, X, coordinate_subgroup(group), 3)
    assert result.ok
    # [T_{2^n}(X) : T_{2^n}(F)] = 2
    assert result.values == pytest.approx([math.log(2) / 2 ** n for n in range(4)])


def test_relative_monotone_on_catalog_instances():
    rng = random.Random(68)
    # 交换群与 Q8：所有子群正规，T_n(φ,F) 总是子群
    names = ["Q8", "Z2^(N)", "Z3^(Z)", "Z4^(N)", "Z6^(N)", "QZ[12]"]
    for _ in range(100):
        entry = catalog_entry(rng.choice(names))
        group = entry.group()
        phi = rng.choice(list(catalog_endomorphisms(entry).values()))
        pool = sorted(next(subgroup_chain(group, 200)).payloads, key=group.sort_key)
        X = FiniteSubset(group, [group.identity] + rng.sample(pool, min(len(pool), 2)))
        F = generate_payloads(group, [rng.choice(pool)], max_size=200)
        result = relative_monotone_check(phi, X, F, 2)
        assert result.ok, (entry.name, phi.name, result.values)


def test_conjugacy_invariance_on_q8():
    Q8 = catalog_entry("Q8").group()
    phi = endo_from_spec(Q8, "inner:i")
    xi = endo_from_spec(Q8, "catalog:q8_outer")
    X = FiniteSubset(Q8, [Q8.decode(x) for x in ("1", "j", "k")])
    result = conjugacy_invariance_check(phi, xi, X)
    assert result.ok
    assert result.sizes == result.conjugated_sizes


def test_budget_policy_validation():
    with pytest.raises(UsageError):
        BudgetPolicy(max_exponent=0)
    with pytest.raises(UsageError):
        BudgetPolicy.from_json({"max_depth": 3})
    base = BudgetPolicy(max_members=2)
    merged = BudgetPolicy.from_json({"max_exponent": 2}, base)
    assert merged.max_members == 2 and merged.horizon == 4
    settings = {"max_exponent": 3, "sample_count": 10}
    assert BudgetPolicy.from_settings(settings, workers=1).workers == 1
