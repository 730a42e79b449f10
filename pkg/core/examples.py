"""
可运行的例子 - `entropy examples list|run <name>`

每个例子返回可直接写成 JSON 的字典。
"""
from typing import Any, Callable, Dict, List, Optional

from core.at_harness import ATExperiment, default_roster, run_at_experiment
from core.dynamics import Trajectory, endo_from_spec, images_commute_check, trajectory_subgroup_check
from core.entropy import BudgetPolicy, entropy_H
from core.errors import UsageError
from core.group_core import generate_payloads
from core.groups_catalog import GroupSpec, build_group, catalog_entry
from core.permutability import first_nonpermuting_pair, sfin_noncofinal_witness, subgroup_enumerate


def _roster_experiment(label: str, budget: BudgetPolicy) -> ATExperiment:
    for exp in default_roster(budget):
        if exp.label == label:
            return exp
    raise UsageError(f"名单中没有实验 {label}")


def bernoulli(budget: BudgetPolicy) -> Dict[str, Any]:
    """ℤ_m^(ℕ) 上的右平移，X 为第 0 个坐标子群：H = log m"""
    results = []
    for m in (2, 3, 6):
        group = build_group(GroupSpec("restricted_direct_sum", {"modulus": m, "index": "N"}))
        X = generate_payloads(group, [group.structure.unit(0)], max_size=m)
        estimate = entropy_H(endo_from_spec(group, {"kind": "shift"}), X, budget, f"H(β, Z{m}^(0))")
        results.append(estimate.to_json())
    return {"example": "bernoulli", "estimates": results}


def z6_addition(budget: BudgetPolicy) -> Dict[str, Any]:
    """ℤ₆^(ℕ)，H = 3G：(log 6, log 2, log 3)"""
    return run_at_experiment(_roster_experiment("Z6^(N) β / 3G", budget)).to_json()


def q8(budget: BudgetPolicy) -> Dict[str, Any]:
    """Q₈ 是拟哈密顿的：全部子群两两可置换"""
    group = catalog_entry("Q8").group()
    subgroups = subgroup_enumerate(group)
    pair = first_nonpermuting_pair(subgroups)
    report = run_at_experiment(_roster_experiment("Q8 inn(i) / Z", budget))
    return {"example": "q8", "subgroups": len(subgroups), "all_permutable": pair is None,
            "at_report": report.to_json()}


def s3(budget: BudgetPolicy) -> Dict[str, Any]:
    """S₃ 中 T_n(inn((1 2 3)), ⟨(1 2)⟩) 在 n=2 不是子群，且存在不可置换的子群对"""
    group = catalog_entry("S3").group()
    phi = endo_from_spec(group, {"kind": "inner", "element": "(1 2 3)"})
    F = generate_payloads(group, [group.decode("(1 2)")], max_size=2)
    commute = images_commute_check(phi, F, 6)
    check = trajectory_subgroup_check(Trajectory(phi, F, budget.max_set_size), 6)
    subgroups = subgroup_enumerate(group)
    pair = first_nonpermuting_pair(subgroups)
    return {
        "example": "s3",
        "subgroups": len(subgroups),
        "images_commute": commute.ok,
        "commute_witness": list(commute.witness) if commute.witness else None,
        "subgroup_check_failed_at": check.failed_at,
        "subgroup_check_witness": check.witness,
        "nonpermuting_pair": list(pair.pair) if pair else None,
        "nonpermuting_witness": pair.witness if pair else None,
    }


def h1(budget: BudgetPolicy) -> Dict[str, Any]:
    """H₁ = ℤ₉⋊ℤ₃（27 阶）的全部子群两两可置换"""
    group = catalog_entry("H1").group()
    subgroups = subgroup_enumerate(group)
    pair = first_nonpermuting_pair(subgroups)
    report = run_at_experiment(_roster_experiment("H1 ·2 / base", budget))
    return {"example": "h1", "subgroups": len(subgroups), "all_permutable": pair is None,
            "at_report": report.to_json()}


def s3xh1(budget: BudgetPolicy) -> Dict[str, Any]:
    """S₃×H₁ 上的分量自同态，H 为 S₃ 因子"""
    return run_at_experiment(_roster_experiment("S3xH1 inn×β / S3", budget)).to_json()


def sfin(budget: BudgetPolicy) -> Dict[str, Any]:
    """𝒮_fin(ℕ₊)：𝒮_m 与 ⟨(n m+1)⟩ 不可置换"""
    return {"example": "sfin",
            "witnesses": [sfin_noncofinal_witness(n, m).to_json() for n, m in ((3, 4), (3, 5), (2, 2))]}


def lamplighter(budget: BudgetPolicy) -> Dict[str, Any]:
    """灯夫群上的恒等映射：加法定理的反例"""
    return run_at_experiment(_roster_experiment("lamplighter id / base", budget)).to_json()


EXAMPLES: Dict[str, Callable[[BudgetPolicy], Dict[str, Any]]] = {
    "bernoulli": bernoulli,
    "z6-addition": z6_addition,
    "q8": q8,
    "s3": s3,
    "h1": h1,
    "s3xh1": s3xh1,
    "sfin": sfin,
    "lamplighter": lamplighter,
}


def list_examples() -> List[Dict[str, str]]:
    return [{"name": name, "description": (fn.__doc__ or "").strip()} for name, fn in EXAMPLES.items()]


def run_example(name: str, budget: Optional[BudgetPolicy] = None) -> Dict[str, Any]:
    """
    运行一个命名例子

    Raises:
        UsageError: 未知的例子名称
    """
    if name not in EXAMPLES:
        raise UsageError(f"未知的例子: {name}（可选: {', '.join(EXAMPLES)}）")
    return EXAMPLES[name](budget or BudgetPolicy())
