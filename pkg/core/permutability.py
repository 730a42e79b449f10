"""
可置换性 - FE=EF 检验、𝓕_C 成员证据、子群枚举与 𝒮_fin 的反例见证
"""
import csv
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from core.errors import BudgetExceededError, UsageError
from core.group_core import AmbientGroup, FiniteSubgroup, generate_payloads, product_payloads
from core.groups_catalog import SFIN_SPEC, build_group, perm_from_cycles
from utils.log_helpers import log
from utils.path_helpers import prepare_output_path

ENUMERATION_CAP = 4096

CERT_EXHAUSTIVE_TRUNCATION = "exhaustive_truncation"
CERT_SAMPLED = "sampled"
CERT_STRUCTURAL = "structural"


@dataclass
class PermutabilityReport:
    """一对子群的可置换性；witness 取自 FE \\ EF 或 EF \\ FE"""
    pair: Tuple[str, str]
    permutes: bool
    product_size: int
    reverse_size: int
    witness: Optional[str] = None
    witness_side: str = ""


def sets_permute(F: FiniteSubgroup, E: FiniteSubgroup) -> PermutabilityReport:
    """比较 FE 与 EF"""
    if F.group_tag != E.group_tag:
        raise UsageError(f"群标签不一致: {F.group_tag} vs {E.group_tag}")
    group = F.group
    fe = product_payloads(group, F.payloads, E.payloads)
    ef = product_payloads(group, E.payloads, F.payloads)
    report = PermutabilityReport((repr(F), repr(E)), fe == ef, len(fe), len(ef))
    if not report.permutes:
        diff, side = fe - ef, "FE\\EF"
        if not diff:
            diff, side = ef - fe, "EF\\FE"
        report.witness = group.format(min(diff, key=group.sort_key))
        report.witness_side = side
    return report


@dataclass
class FCFamilyEvidence:
    """F 与测试族逐一比较的结果"""
    member: FiniteSubgroup
    tested_against: List[FiniteSubgroup]
    all_permuted: bool
    certification: str
    failures: List[PermutabilityReport] = field(default_factory=list)


def _is_normal(F: FiniteSubgroup) -> bool:
    group = F.group
    if not group.is_finite or group.order > ENUMERATION_CAP:
        return False
    gens = generate_payloads(group, group.elements(), max_size=group.order).generators or ()
    return all(group.conjugate(g, f) in F.payloads for g in gens for f in F.payloads)


def fc_member_test(F: FiniteSubgroup, test_family: Sequence[FiniteSubgroup],
                   exhaustive: bool = False) -> FCFamilyEvidence:
    """
    F 对测试族中每个子群检验 FE = EF

    Args:
        F: 待检验的有限子群
        test_family: 测试子群列表
        exhaustive: test_family 是否为某个有限截断的全部子群（subgroup_enumerate 的输出）
    """
    failures = [r for r in (sets_permute(F, E) for E in test_family) if not r.permutes]
    if exhaustive:
        level = CERT_EXHAUSTIVE_TRUNCATION
    elif not failures and _is_normal(F):
        level = CERT_STRUCTURAL
    else:
        level = CERT_SAMPLED
    return FCFamilyEvidence(F, list(test_family), not failures, level, failures)


def subgroup_enumerate(group: AmbientGroup, order_cap: int = ENUMERATION_CAP) -> List[FiniteSubgroup]:
    """
    有限群的全部子群（按元素集合去重）

    先取全部循环子群，再反复与循环子群作联，直到不再出现新子群。

    Raises:
        BudgetExceededError: 群无限或阶超过 order_cap
    """
    if not group.is_finite or group.order > order_cap:
        raise BudgetExceededError(f"子群枚举要求 |G| ≤ {order_cap}", limit=order_cap,
                                  reached=group.order or 0)
    seen: Dict[frozenset, FiniteSubgroup] = {}
    cyclic: List[FiniteSubgroup] = []
    for g in sorted(group.elements(), key=group.sort_key):
        C = generate_payloads(group, [g], max_size=group.order)
        if C.payloads not in seen:
            seen[C.payloads] = C
            cyclic.append(C)
    frontier = list(cyclic)
    while frontier:
        discovered = []
        for S in frontier:
            for C in cyclic:
                if C.payloads <= S.payloads:
                    continue
                J = generate_payloads(group, list(S.generators or ()) + list(C.generators or ()),
                                      max_size=group.order)
                if J.payloads not in seen:
                    seen[J.payloads] = J
                    discovered.append(J)
        frontier = discovered
    subgroups = sorted(seen.values(),
                       key=lambda S: (len(S), [group.sort_key(p) for p in S.sorted_payloads()]))
    log("Permute", f"{group.tag}: 共 {len(subgroups)} 个子群", "ℹ")
    return subgroups


def permutability_matrix(subgroups: Sequence[FiniteSubgroup], workers: int = 3) -> List[List[bool]]:
    """两两可置换矩阵（对称，按对并行）"""
    size = len(subgroups)
    matrix = [[True] * size for _ in range(size)]
    pairs = [(i, j) for i in range(size) for j in range(i + 1, size)]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = {executor.submit(sets_permute, subgroups[i], subgroups[j]): (i, j) for i, j in pairs}
        for future in as_completed(futures):
            i, j = futures[future]
            matrix[i][j] = matrix[j][i] = future.result().permutes
    return matrix


def first_nonpermuting_pair(subgroups: Sequence[FiniteSubgroup]) -> Optional[PermutabilityReport]:
    for i, F in enumerate(subgroups):
        for E in subgroups[i + 1:]:
            report = sets_permute(F, E)
            if not report.permutes:
                return report
    return None


def export_matrix_csv(matrix: List[List[bool]], subgroups: Sequence[FiniteSubgroup], path: str) -> str:
    """行列以子群编号索引；另附阶与生成元"""
    path = prepare_output_path(path)
    size = len(subgroups)
    with open(path, 'w', newline='', encoding='utf-8-sig') as f:
        writer = csv.writer(f)
        writer.writerow(['id', 'order', 'generators'] + [str(j) for j in range(size)])
        for i, S in enumerate(subgroups):
            gens = " ".join(S.group.format(g) for g in (S.generators or ()))
            writer.writerow([i, len(S), gens] + [int(cell) for cell in matrix[i]])
    return path


@dataclass
class SfinWitness:
    """H = 𝒮_m, N = ⟨(n m+1)⟩ 时 HN ≠ NH 的见证"""
    n: int
    m: int
    tau: str
    hn_size: int
    nh_size: int
    permutes: bool
    witness: Optional[str]
    witness_side: str

    def to_json(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def sfin_noncofinal_witness(n: int, m: int) -> SfinWitness:
    """
    𝒮_fin(ℕ₊) 不是有限拟哈密顿的：包含 𝒮_n 的 𝒮_m 与 ⟨(n m+1)⟩ 不可置换

    优先给出 3-轮换 (1 n m+1) 作为见证，否则取差集中最小的元素。
    """
    if not 1 < n <= m:
        raise UsageError(f"要求 1 < n ≤ m，收到 n={n}, m={m}")
    group = build_group(SFIN_SPEC)
    gens = [perm_from_cycles([[1, 2]]), perm_from_cycles([list(range(1, m + 1))])]
    H = generate_payloads(group, gens, max_size=ENUMERATION_CAP * 16)
    tau = perm_from_cycles([[n, m + 1]])
    N = generate_payloads(group, [tau], max_size=2)
    hn = product_payloads(group, H.payloads, N.payloads)
    nh = product_payloads(group, N.payloads, H.payloads)
    witness, side = None, ""
    if hn != nh:
        candidate = perm_from_cycles([[1, n, m + 1]])
        for diff, label in ((nh - hn, "NH\\HN"), (hn - nh, "HN\\NH")):
            if candidate in diff:
                witness, side = candidate, label
                break
        if witness is None:
            diff, side = (nh - hn, "NH\\HN") if nh - hn else (hn - nh, "HN\\NH")
            witness = min(diff, key=group.sort_key)
    result = SfinWitness(n, m, group.format(tau), len(hn), len(nh), hn == nh,
                         group.format(witness) if witness is not None else None, side)
    if result.permutes:
        log("Permute", f"𝒮_{m} 与 ⟨{result.tau}⟩ 可置换（意外）", "✗")
    else:
        log("Permute", f"𝒮_{m}·⟨{result.tau}⟩ ≠ ⟨{result.tau}⟩·𝒮_{m}，见证 {result.witness} ∈ {side}", "✓")
    return result
