import pytest

from core.entropy import BudgetPolicy
from core.group_core import generate_payloads
from core.groups_catalog import GroupSpec, build_group
from utils.log_helpers import set_quiet


@pytest.fixture(autouse=True)
def quiet_console():
    set_quiet(True)
    yield
    set_quiet(False)


@pytest.fixture
def small_budget():
    return BudgetPolicy(max_exponent=3, max_set_size=100000, time_cap=60)


def sum_group(m, index="N", truncation=None):
    params = {"modulus": m, "index": index}
    if truncation:
        params["truncation"] = truncation
    return build_group(GroupSpec("restricted_direct_sum", params))


def coordinate_subgroup(group, i=0):
    """ℤ_m^(I) 的第 i 个坐标子群"""
    return generate_payloads(group, [group.structure.unit(i)], max_size=group.linear.modulus)
