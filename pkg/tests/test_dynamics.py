import pytest

from conftest import coordinate_subgroup, sum_group
from core.dynamics import (CERT_EXHAUSTIVE, Trajectory, catalog_endomorphisms, certify_invariance,
                           certify_normal, check_homomorphism, doubling_check, endo_from_spec, endo_power,
                           identity_endomorphism, images_commute_check, induce_quotient,
                           multiples_subgroup, normal_subgroup_from_spec, parse_endo_text,
                           restrict, trajectory_extend, trajectory_subgroup_check)
from core.errors import (BudgetExceededError, InvarianceError, PreconditionError,
                         SpecificationError, UnsupportedError, UsageError)
from core.group_core import FiniteSubset, generate_payloads
from core.groups_catalog import catalog_entry
from core.permutability import subgroup_enumerate


def test_shift_trajectory_sizes():
    group = sum_group(2)
    shift = endo_from_spec(group, "shift")
    traj = Trajectory(shift, coordinate_subgroup(group))
    assert [traj.size(n) for n in range(6)] == [1, 2, 4, 8, 16, 32]


def test_counting_agrees_with_enumeration():
    group = sum_group(6)
    shift = endo_from_spec(group, {"kind": "compose", "parts": [{"kind": "shift"},
                                                                {"kind": "scale", "factor": 5}]})
    F = generate_payloads(group, [group.structure.unit(0), ((0, 2), (1, 3))], max_size=100)
    counted = Trajectory(shift, F)
    enumerated = Trajectory(shift, F, counting=False)
    assert counted.counting and not enumerated.counting
    assert [counted.size(n) for n in range(5)] == [enumerated.size(n) for n in range(5)]


def test_trajectory_budget_keeps_prefix():
    group = sum_group(2)
    traj = Trajectory(endo_from_spec(group, "shift"), coordinate_subgroup(group),
                      max_size=8, counting=False)
    with pytest.raises(BudgetExceededError):
        traj.extend(5)
    assert traj.computed == 3
    assert len(traj.extend(3)) == 8


def test_trajectory_extend_raises_cap_and_resumes():
    group = sum_group(2)
    traj = Trajectory(endo_from_spec(group, "shift"), coordinate_subgroup(group),
                      max_size=8, counting=False)
    assert len(trajectory_extend(traj, 3).payloads) == 8
    with pytest.raises(BudgetExceededError):
        trajectory_extend(traj, 4)
    T4 = trajectory_extend(traj, 4, max_size=16)
    assert len(T4.payloads) == 16
    assert traj.computed == 4


def test_endo_power():
    group = sum_group(2)
    shift = endo_from_spec(group, "shift")
    cube = endo_power(shift, 3)
    assert cube.fn(group.structure.unit(0)) == group.structure.unit(3)
    assert endo_power(shift, 0).is_identity
    assert endo_power(shift, 1) is shift
    with pytest.raises(UsageError):
        endo_power(shift, -1)


def test_trajectory_rejects_foreign_base():
    group = sum_group(2)
    other = sum_group(3)
    with pytest.raises(UsageError):
        Trajectory(endo_from_spec(group, "shift"), coordinate_subgroup(other))


def test_doubling_identity():
    group = sum_group(3)
    traj = Trajectory(endo_from_spec(group, "shift"),
                      FiniteSubset(group, [(), ((0, 1),), ((1, 2),)]), counting=False)
    assert doubling_check(traj, 2)
    assert doubling_check(traj, 3)


def test_parse_endo_text_shorthands():
    assert parse_endo_text("identity") == {"kind": "identity"}
    assert parse_endo_text("shift:2") == {"kind": "shift", "by": 2}
    assert parse_endo_text("scale:5") == {"kind": "scale", "factor": 5}
    assert parse_endo_text("inner:i") == {"kind": "inner", "element": "i"}
    assert parse_endo_text('inner:[[], 1]') == {"kind": "inner", "element": [[], 1]}
    with pytest.raises(UsageError):
        parse_endo_text("rotate")


def test_endomorphism_errors():
    Q8 = catalog_entry("Q8").group()
    with pytest.raises(UnsupportedError):
        endo_from_spec(Q8, "shift")
    with pytest.raises(UsageError):
        endo_from_spec(Q8, {"kind": "mirror"})
    group = sum_group(3)
    for bad in ("scale:x", "shift:two", {"kind": "scale"}, {"kind": "power", "k": 2}, ["shift"]):
        with pytest.raises(UsageError):
            endo_from_spec(group, bad)
    with pytest.raises(UsageError):
        normal_subgroup_from_spec(group, {"kind": "multiples", "divisor": "three"})
    with pytest.raises(UsageError):
        endo_from_spec(Q8, {"kind": "inner", "element": "q"})


def test_q8_outer_is_automorphism():
    Q8 = catalog_entry("Q8").group()
    phi = endo_from_spec(Q8, "catalog:q8_outer")
    cert = check_homomorphism(phi)
    assert cert.level == CERT_EXHAUSTIVE
    assert phi(Q8.decode("k")) == Q8.decode("i")


def test_non_homomorphism_rejected():
    Q8 = catalog_entry("Q8").group()
    images = {name: name for name in ("1", "-1", "j", "-j", "k", "-k")}
    images.update({"i": "-i", "-i": "i"})
    phi = endo_from_spec(Q8, {"kind": "map", "images": images})
    with pytest.raises(SpecificationError):
        check_homomorphism(phi)


def test_sampled_homomorphism_on_infinite_group():
    group = catalog_entry("H").group()
    cert = check_homomorphism(endo_from_spec(group, "shift"), samples=300)
    assert cert.level == "sampled"
    assert cert.checks == 300


def test_normality_failure():
    S3 = catalog_entry("S3").group()
    H = normal_subgroup_from_spec(S3, {"kind": "explicit", "generators": ["(1 2)"]})
    with pytest.raises(SpecificationError):
        certify_normal(H)


def test_invariance_failure_has_witness():
    Q8 = catalog_entry("Q8").group()
    H = normal_subgroup_from_spec(Q8, {"kind": "explicit", "generators": ["i"]})
    certify_normal(H)
    phi = endo_from_spec(Q8, "catalog:q8_outer")
    with pytest.raises(InvarianceError) as info:
        certify_invariance(phi, H)
    assert info.value.witness in ("i", "-i")


def test_multiples_need_divisor_of_modulus():
    with pytest.raises(UsageError):
        multiples_subgroup(sum_group(6), 4)


def test_sampled_normality_on_infinite_groups():
    H = normal_subgroup_from_spec(catalog_entry("H").group(), "semidirect_base")
    assert certify_normal(H, samples=500).level == "sampled"
    lamplighter = catalog_entry("lamplighter").group()
    base = normal_subgroup_from_spec(lamplighter, "lamplighter_base")
    assert certify_normal(base, samples=500).checks == 500


def test_quotient_by_multiples():
    group = sum_group(6)
    shift = endo_from_spec(group, "shift")
    H = multiples_subgroup(group, 3)
    quotient = induce_quotient(shift, H, samples=200)
    C = quotient.project(coordinate_subgroup(group))
    assert len(C) == 3
    traj = Trajectory(quotient.induced, C)
    assert traj.counting
    assert [traj.size(n) for n in range(4)] == [1, 3, 9, 27]


def test_quotient_of_q8_by_center():
    Q8 = catalog_entry("Q8").group()
    phi = endo_from_spec(Q8, "inner:i")
    center = normal_subgroup_from_spec(Q8, "center")
    assert len(center.elements) == 2
    quotient = induce_quotient(phi, center)
    assert quotient.quotient_group.order == 4


def test_restrict_shortcuts():
    group = sum_group(4)
    shift = endo_from_spec(group, "shift")
    assert restrict(shift, normal_subgroup_from_spec(group, "whole")) is shift
    assert restrict(shift, normal_subgroup_from_spec(group, "trivial")).is_trivial


def test_s3_conjugation_breaks_subgroup_property():
    S3 = catalog_entry("S3").group()
    phi = endo_from_spec(S3, {"kind": "inner", "element": "(1 2 3)"})
    F = generate_payloads(S3, [S3.decode("(1 2)")], max_size=2)
    commute = images_commute_check(phi, F, 6)
    assert not commute.ok
    assert commute.witness == (0, 1)
    check = trajectory_subgroup_check(Trajectory(phi, F), 6)
    assert not check.ok
    assert check.failed_at == 2
    assert check.witness is not None


def test_subgroup_check_needs_subgroup_base():
    S3 = catalog_entry("S3").group()
    X = FiniteSubset(S3, [S3.identity, S3.decode("(1 2)"), S3.decode("(2 3)")])
    with pytest.raises(PreconditionError):
        trajectory_subgroup_check(Trajectory(identity_endomorphism(S3), X), 2)


@pytest.mark.parametrize("name", ["Q8", "H1"])
def test_quasihamiltonian_trajectories_are_subgroups(name):
    entry = catalog_entry(name)
    group = entry.group()
    subgroups = subgroup_enumerate(group)
    for endo_name, phi in catalog_endomorphisms(entry).items():
        for F in subgroups:
            assert images_commute_check(phi, F, 6).ok, (endo_name, F)
            assert trajectory_subgroup_check(Trajectory(phi, F), 6).ok, (endo_name, F)
