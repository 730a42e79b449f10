"""
加法定理实验 - 在共享预算下计算 h(φ)、h(φ↾_H)、h(φ̄_{G/H})，
逐 n 检查 ℓ(T_n(φ↾_H,A)) + ℓ(T_n(φ̄,C)) ≤ ℓ(T_n(φ,B)) 并给出结论
"""
import json
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterator, List, Optional

from core.dynamics import (Certification, Endomorphism, NormalSubgroupSpec, QuotientSystem,
                           Trajectory, certify_invariance, certify_normal, check_homomorphism,
                           endo_from_spec, induce_quotient, intersect_family,
                           normal_subgroup_from_spec, project_family, restrict,
                           trajectory_subgroup_check)
from core.entropy import BudgetPolicy, EntropyEstimate, entropy_H, entropy_H_rel, entropy_h
from core.errors import (EntropyToolError, InvariantViolation, PreconditionError,
                         RejectedExperiment, UnsupportedError, UsageError)
from core.group_core import AmbientGroup, FiniteSubgroup, FiniteSubset, generate_payloads
from core.groups_catalog import GroupSpec, build_group, subgroup_chain
from utils.log_helpers import log

VERDICT_EXACT = "additivity_holds_exact"
VERDICT_WITHIN_TOL = "additivity_holds_within_tol"
VERDICT_INCONCLUSIVE = "inconclusive_budget"
VERDICT_VIOLATION = "violation_flag"

DEFAULT_TOLERANCE = 1e-9
UPPER_BOUND_TOLERANCE = 1e-6
WHOLE_GROUP_CHAIN_BASE = 4096


@dataclass
class ATExperiment:
    """
    一次加法定理实验

    families 的键为 G / H / Q：
    G: {"kind": "chain"} 或 {"kind": "explicit", "elements": [...]}
    H: {"kind": "intersect"} 或 {"kind": "truncations"}
    Q: {"kind": "project"} 或 {"kind": "relative"}
    chain_base: {"kind": "auto"} 或 {"kind": "explicit", "generators": [...]}
    """
    group: GroupSpec
    endo: Dict[str, Any]
    normal_subgroup: Dict[str, Any]
    budget: BudgetPolicy = field(default_factory=BudgetPolicy)
    label: str = ""
    families: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    chain_base: Dict[str, Any] = field(default_factory=lambda: {"kind": "auto"})
    chain_n: int = 8
    samples: int = 2000
    seed: int = 0
    negative_control: bool = False

    def __post_init__(self):
        if isinstance(self.normal_subgroup, str):
            self.normal_subgroup = {"kind": self.normal_subgroup}
        if not self.label:
            self.label = f"{self.group.tag()} / {self.normal_subgroup.get('kind')}"

    def family_kind(self, side: str) -> str:
        default = {"G": "chain", "H": "intersect", "Q": "project"}[side]
        if side == "H" and self.family_kind("G") == "explicit":
            default = "truncations"
        return self.families.get(side, {}).get("kind", default)

    def to_json(self) -> Dict[str, Any]:
        return {
            "schema": "at_experiment.v1",
            "label": self.label,
            "group": self.group.to_json(),
            "endo": self.endo,
            "normal_subgroup": self.normal_subgroup,
            "families": self.families,
            "chain_base": self.chain_base,
            "chain_n": self.chain_n,
            "budget": self.budget.to_json(),
            "samples": self.samples,
            "seed": self.seed,
            "negative_control": self.negative_control,
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any], budget: Optional[BudgetPolicy] = None) -> "ATExperiment":
        if not isinstance(data, dict):
            raise UsageError("实验文档必须是 JSON 对象")
        for key in ("group", "endo", "normal_subgroup"):
            if key not in data:
                raise UsageError(f"实验文档缺少字段 {key}")
        base = budget or BudgetPolicy()
        exp_budget = BudgetPolicy.from_json(data.get("budget", {}), base)
        try:
            chain_n, samples, seed = (int(data.get("chain_n", 8)), int(data.get("samples", 2000)),
                                      int(data.get("seed", 0)))
        except (TypeError, ValueError) as e:
            raise UsageError(f"实验文档的 chain_n/samples/seed 必须是整数: {e}")
        return cls(
            group=GroupSpec.from_json(data["group"]),
            endo=data["endo"] if isinstance(data["endo"], dict) else {"kind": data["endo"]},
            normal_subgroup=data["normal_subgroup"],
            budget=exp_budget,
            label=data.get("label", ""),
            families=data.get("families", {}),
            chain_base=data.get("chain_base", {"kind": "auto"}),
            chain_n=chain_n,
            samples=samples,
            seed=seed,
            negative_control=bool(data.get("negative_control", False)))

    @classmethod
    def load(cls, path: str, budget: Optional[BudgetPolicy] = None) -> "ATExperiment":
        with open(path, 'r', encoding='utf-8') as f:
            return cls.from_json(json.load(f), budget)


@dataclass
class ATSystem:
    """认证通过后的 (G, φ, H, φ↾_H, G/H, φ̄)"""
    experiment: ATExperiment
    group: AmbientGroup
    phi: Endomorphism
    normal: NormalSubgroupSpec
    restricted: Endomorphism
    quotient: QuotientSystem
    certifications: Dict[str, Certification]

    def g_family(self) -> Iterator[FiniteSubset]:
        exp = self.experiment
        spec = exp.families.get("G", {})
        if exp.family_kind("G") == "explicit":
            payloads = [self.group.decode(v) for v in spec.get("elements", [])]
            return iter([FiniteSubset(self.group, payloads)])
        return subgroup_chain(self.group, exp.budget.family_size_bound)

    def h_family(self) -> Iterator[FiniteSubgroup]:
        if self.experiment.family_kind("H") == "truncations":
            if self.normal.truncations is None:
                raise UnsupportedError(f"{self.normal.name} 没有截断链")
            return self.normal.truncations(self.experiment.budget.family_size_bound)
        return intersect_family(self.g_family(), self.normal)

    def q_family(self) -> Iterator[FiniteSubset]:
        return project_family(self.g_family(), self.quotient)

    @property
    def g_cofinal(self) -> bool:
        return self.group.is_finite and self.experiment.family_kind("G") == "chain"


def prepare_system(exp: ATExperiment) -> ATSystem:
    """
    构造并认证实验系统

    Raises:
        RejectedExperiment: 同态性、正规性或不变性认证失败
    """
    try:
        group = build_group(exp.group)
        phi = endo_from_spec(group, exp.endo)
        H = normal_subgroup_from_spec(group, exp.normal_subgroup)
        certs = {
            "homomorphism": check_homomorphism(phi, exp.samples, exp.seed),
            "normal": certify_normal(H, exp.samples, exp.seed),
            "invariance": certify_invariance(phi, H, exp.samples, exp.seed),
        }
        restricted = restrict(phi, H, exp.samples, exp.seed)
        quotient = induce_quotient(phi, H, exp.samples, exp.seed)
    except EntropyToolError as e:
        log("AT", f"{exp.label}: 实验被拒绝: {e}", "✗")
        raise RejectedExperiment(f"{exp.label}: {e}") from e
    return ATSystem(exp, group, phi, H, restricted, quotient, certs)


@dataclass
class ChainRecord:
    """单个 n 的链检查（整数精确比较）"""
    n: int
    size_A: int
    size_C: int
    size_B: int
    coset_count: int

    @property
    def inequality_holds(self) -> bool:
        return self.size_A * self.size_C <= self.size_B

    @property
    def projection_equality_holds(self) -> bool:
        return self.size_C == self.coset_count

    @property
    def passed(self) -> bool:
        return self.inequality_holds and self.projection_equality_holds

    def to_json(self) -> Dict[str, Any]:
        return {"n": self.n, "size_A": str(self.size_A), "size_C": str(self.size_C),
                "size_B": str(self.size_B), "coset_count": str(self.coset_count),
                "inequality_holds": self.inequality_holds,
                "projection_equality_holds": self.projection_equality_holds}


def default_chain_base(system: ATSystem) -> FiniteSubgroup:
    """有限小群取整个群，否则取 G 族的第一个成员"""
    exp, group = system.experiment, system.group
    spec = exp.chain_base
    if spec.get("kind") == "explicit":
        return generate_payloads(group, [group.decode(g) for g in spec.get("generators", [])],
                                 max_size=exp.budget.max_set_size)
    if group.is_finite and group.order <= WHOLE_GROUP_CHAIN_BASE:
        return generate_payloads(group, group.elements(), max_size=group.order)
    first = next(iter(system.g_family()))
    if not isinstance(first, FiniteSubgroup):
        raise PreconditionError("G 族的成员不是子群，无法作为链检查的 B", subject="B")
    return first


def chain_check(exp: Any, B: Optional[FiniteSubgroup] = None, N: Optional[int] = None,
                strict: bool = False) -> List[ChainRecord]:
    """
    对 n ≤ N 检查 |T_n(φ↾_H,A)|·|T_n(φ̄,C)| ≤ |T_n(φ,B)| 与 |T_n(φ̄,C)| = [T_n(φ,B)H : H]，
    其中 A = B∩H，C = π(B)

    Args:
        exp: ATExperiment 或已认证的 ATSystem
        B: 𝓕_C 中的有限子群，默认见 default_chain_base
        N: 最大 n，默认 exp.chain_n
        strict: 为真时任何一个 n 失败都抛出 InvariantViolation

    Raises:
        PreconditionError: B、A 或 C 的轨道不是子群
        InvariantViolation: strict 且不等式或投影等式失败
    """
    system = exp if isinstance(exp, ATSystem) else prepare_system(exp)
    N = system.experiment.chain_n if N is None else N
    B = B or default_chain_base(system)
    A = next(intersect_family([B], system.normal))
    C = system.quotient.project(B)
    max_size = system.experiment.budget.max_set_size
    tB = Trajectory(system.phi, B, max_size)
    tA = Trajectory(system.restricted, A, max_size)
    tC = Trajectory(system.quotient.induced, C, max_size)
    for name, traj in (("B", tB), ("A", tA), ("C", tC)):
        result = trajectory_subgroup_check(traj, N)
        if not result.ok:
            raise PreconditionError(f"T_{result.failed_at}(·,{name}) 不是子群: {result.witness}",
                                    subject=name)
    records = []
    for n in range(N + 1):
        records.append(ChainRecord(n, tA.size(n), tC.size(n), tB.size(n),
                                   tB.coset_count(n, system.normal)))
    failed = [r.n for r in records if not r.passed]
    if failed:
        log("AT", f"{system.experiment.label}: 链检查在 n={failed} 失败", "✗")
        if strict:
            raise InvariantViolation(f"链检查在 n={failed} 失败",
                                     detail=[r.to_json() for r in records if not r.passed])
    return records


@dataclass
class ATReport:
    label: str
    h_G: EntropyEstimate
    h_H: EntropyEstimate
    h_Q: EntropyEstimate
    chain_checks: List[ChainRecord]
    verdict: str
    tolerance: float
    notes: List[str] = field(default_factory=list)
    quotient_cross_check: Optional[bool] = None
    certifications: Dict[str, Any] = field(default_factory=dict)
    negative_control: bool = False

    @property
    def difference(self) -> float:
        return self.h_G.value - self.h_H.value - self.h_Q.value

    @property
    def chain_passed(self) -> bool:
        return all(r.passed for r in self.chain_checks)

    @property
    def truncated(self) -> bool:
        return self.h_G.truncated or self.h_H.truncated or self.h_Q.truncated

    @property
    def sequence_violation(self) -> bool:
        """某个估计的 2^n 序列出现递增（与结论分开报告）"""
        return any(e.invariant_violation for e in (self.h_G, self.h_H, self.h_Q))

    def to_json(self) -> Dict[str, Any]:
        return {
            "schema": "at_report.v1",
            "label": self.label,
            "h_G": self.h_G.to_json(),
            "h_H": self.h_H.to_json(),
            "h_Q": self.h_Q.to_json(),
            "difference": self.difference,
            "chain_checks": [r.to_json() for r in self.chain_checks],
            "verdict": self.verdict,
            "tolerance": self.tolerance,
            "notes": self.notes,
            "quotient_cross_check": self.quotient_cross_check,
            "certifications": self.certifications,
            "negative_control": self.negative_control,
            "sequence_violation": self.sequence_violation,
        }


def render_verdict(h_G: EntropyEstimate, h_H: EntropyEstimate, h_Q: EntropyEstimate,
                   tolerance: float = DEFAULT_TOLERANCE) -> str:
    """只有三个精确值不一致才给出 violation_flag；只有上界时永远不会"""
    estimates = (h_G, h_H, h_Q)
    if all(e.is_exact for e in estimates):
        diff = abs(h_G.exact - h_H.exact - h_Q.exact)
        return VERDICT_EXACT if diff <= tolerance else VERDICT_VIOLATION
    if all(e.stabilized for e in estimates):
        if abs(h_G.value - h_H.value - h_Q.value) <= UPPER_BOUND_TOLERANCE:
            return VERDICT_WITHIN_TOL
    return VERDICT_INCONCLUSIVE


def _quotient_cross_check(system: ATSystem) -> Optional[bool]:
    """第一个 G 族成员上比较 ℓ(T_n(φ,F),H) 与 ℓ(T_n(φ̄,π(F)))"""
    budget = system.experiment.budget
    first = next(iter(system.g_family()), None)
    if first is None:
        return None
    rel = entropy_H_rel(system.phi, first, system.normal, budget, "cross-check rel")
    explicit = entropy_H(system.quotient.induced, system.quotient.project(first), budget,
                         "cross-check quotient")
    n = min(len(rel.sizes), len(explicit.sizes))
    return rel.sizes[:n] == explicit.sizes[:n]


def run_at_experiment(exp: ATExperiment, tolerance: float = DEFAULT_TOLERANCE) -> ATReport:
    """
    运行一次加法定理实验

    Raises:
        RejectedExperiment: 认证失败（在任何熵计算之前）
    """
    system = prepare_system(exp)
    budget = exp.budget
    log("AT", f"{exp.label}: 开始（{system.group.describe}，φ={system.phi.name}，H={system.normal.name}）", "⚙")

    q_kind = exp.family_kind("Q")
    tasks: Dict[str, Callable[[], EntropyEstimate]] = {
        "G": lambda: entropy_h(system.phi, system.g_family(), budget, f"h_G[{exp.label}]",
                               cofinal=system.g_cofinal),
        "H": lambda: entropy_h(system.restricted, system.h_family(), budget, f"h_H[{exp.label}]",
                               cofinal=system.g_cofinal),
    }
    if q_kind == "relative":
        tasks["Q"] = lambda: entropy_h(
            system.phi, system.g_family(), budget, f"h_Q[{exp.label}]", cofinal=system.g_cofinal,
            estimator=lambda F, name: entropy_H_rel(system.phi, F, system.normal, budget, name))
    else:
        tasks["Q"] = lambda: entropy_h(system.quotient.induced, system.q_family(), budget,
                                       f"h_Q[{exp.label}]", cofinal=system.g_cofinal)

    results: Dict[str, EntropyEstimate] = {}
    with ThreadPoolExecutor(max_workers=3) as executor:
        futures = {executor.submit(task): side for side, task in tasks.items()}
        for future in as_completed(futures):
            results[futures[future]] = future.result()
    h_G, h_H, h_Q = results["G"], results["H"], results["Q"]

    notes: List[str] = []
    chain_records: List[ChainRecord] = []
    try:
        chain_records = chain_check(system)
    except PreconditionError as e:
        notes.append(f"链检查跳过: {e}")
    except UnsupportedError as e:
        notes.append(f"链检查不可用: {e}")

    cross = None
    if system.normal.canonicalize is not None:
        try:
            cross = _quotient_cross_check(system)
        except UnsupportedError as e:
            notes.append(f"商熵交叉验证不可用: {e}")
        if cross is False:
            notes.append("显式商群与相对熵的序列不一致")

    verdict = render_verdict(h_G, h_H, h_Q, tolerance)
    if h_G.diverging and not (h_H.diverging or h_Q.diverging):
        notes.append("h(φ) 被标记为 ∞ 候选而 h(φ↾H)、h(φ̄) 没有：加法定理在此不成立"
                     "（与非局部有限群上的已知反例一致，仅为数值证据）")
    if any(e.truncated for e in (h_G, h_H, h_Q)):
        notes.append("至少一个扫描因预算被截断")
    violated = [e.label for e in (h_G, h_H, h_Q) if e.invariant_violation]
    if violated:
        notes.append(f"ℓ(T_2^n)/2^n 序列出现递增: {', '.join(violated)}")

    report = ATReport(exp.label, h_G, h_H, h_Q, chain_records, verdict, tolerance, notes, cross,
                      {k: v.to_json() for k, v in system.certifications.items()},
                      exp.negative_control)
    prefix = "✓" if verdict in (VERDICT_EXACT, VERDICT_WITHIN_TOL) else ("✗" if verdict == VERDICT_VIOLATION else "ℹ")
    log("AT", f"{exp.label}: {verdict}（h_G={h_G.value:.6f}, h_H={h_H.value:.6f}, h_Q={h_Q.value:.6f}）", prefix)
    return report


def _sum(m: int, index: str = "N") -> GroupSpec:
    return GroupSpec("restricted_direct_sum", {"modulus": m, "index": index})


def _semidirect(k: Optional[int]) -> GroupSpec:
    base: Dict[str, Any] = {"modulus": 9, "index": "N"}
    if k:
        base["truncation"] = k
    return GroupSpec("semidirect", {"base": GroupSpec("restricted_direct_sum", base),
                                    "actor_order": 3, "exponent": 4})


def default_roster(budget: Optional[BudgetPolicy] = None) -> List[ATExperiment]:
    """固定的实验名单：挠交换平移、Q₈ 与 H_k、S₃×H₁，以及灯夫群反例对照"""
    budget = budget or BudgetPolicy()

    def tuned(**changes) -> BudgetPolicy:
        return BudgetPolicy.from_json(changes, budget)

    shift = {"kind": "shift"}
    roster = [
        ATExperiment(_sum(2), shift, {"kind": "trivial"}, budget, "Z2^(N) β / 1"),
        ATExperiment(_sum(6), shift, {"kind": "multiples", "divisor": 3}, budget, "Z6^(N) β / 3G"),
        ATExperiment(_sum(4), shift, {"kind": "multiples", "divisor": 2}, budget, "Z4^(N) β / 2G"),
        ATExperiment(_sum(6, "Z"), shift, {"kind": "multiples", "divisor": 2}, budget, "Z6^(Z) β / 2G"),
        ATExperiment(GroupSpec("cayley_table", {"preset": "Q8"}), {"kind": "inner", "element": "i"},
                     {"kind": "center"}, budget, "Q8 inn(i) / Z"),
        ATExperiment(GroupSpec("cayley_table", {"preset": "Q8"}), {"kind": "catalog", "name": "q8_outer"},
                     {"kind": "center"}, budget, "Q8 outer / Z"),
        ATExperiment(_semidirect(1), {"kind": "scale", "factor": 2}, {"kind": "semidirect_base"},
                     budget, "H1 ·2 / base"),
        ATExperiment(_semidirect(2), shift, {"kind": "semidirect_base"}, budget, "H2 β / base"),
        ATExperiment(_semidirect(None), shift, {"kind": "semidirect_base"},
                     tuned(max_exponent=2, max_members=2, stabilization_window=2),
                     "H β / base", chain_base={"kind": "explicit", "generators": [[[], 1]]}),
        ATExperiment(GroupSpec("direct_product", {"components": [
                         GroupSpec("finitary_permutations", {"bound": 3}), _semidirect(1)]}),
                     {"kind": "product", "components": [{"kind": "inner", "element": "(1 2 3)"},
                                                        {"kind": "shift"}]},
                     {"kind": "factor", "index": 0}, budget, "S3xH1 inn×β / S3"),
        ATExperiment(GroupSpec("lamplighter", {"modulus": 2}), {"kind": "identity"},
                     {"kind": "lamplighter_base"}, budget, "lamplighter id / base",
                     families={"G": {"kind": "explicit", "elements": [[[], 0], [[[0, 1]], 0], [[], 1], [[], -1]]},
                               "H": {"kind": "truncations"}},
                     negative_control=True),
    ]
    return roster


def run_catalog_suite(budget: Optional[BudgetPolicy] = None,
                      roster: Optional[List[ATExperiment]] = None) -> List[ATReport]:
    """并发运行名单中的全部实验，按名单顺序合并报告"""
    roster = roster if roster is not None else default_roster(budget)
    workers = (budget or BudgetPolicy()).workers
    reports: Dict[str, ATReport] = {}
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = {executor.submit(run_at_experiment, exp): exp.label for exp in roster}
        for future in as_completed(futures):
            reports[futures[future]] = future.result()
    ordered = [reports[exp.label] for exp in roster]
    exact = sum(1 for r in ordered if r.verdict == VERDICT_EXACT)
    log("AT", f"名单完成：{len(ordered)} 个实验，{exact} 个精确满足加法定理", "✓")
    return ordered
