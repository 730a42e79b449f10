"""
熵估计 - H(φ,X) 的 2^n 递减格式、h(φ) 的共尾族扫描以及相对熵 ℓ(T_n,H)

所有对数均为自然对数；报告另外给出 log₂ 值。
预算耗尽不是错误：估计带 truncated=True 返回。
"""
import csv
import math
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

from core.dynamics import Endomorphism, NormalSubgroupSpec, Trajectory
from core.errors import BudgetExceededError, PreconditionError, UnsupportedError, UsageError
from core.group_core import FiniteSubgroup, FiniteSubset, count_cosets, image_set, is_subgroup
from utils.log_helpers import log
from utils.path_helpers import prepare_output_path

EXACT_TOL = 1e-12
LOG2 = math.log(2)

DIVERGENCE_FLAG = "h = ∞ candidate"
POLYNOMIAL_FLAG = "h = 0 candidate"

METHOD_STABILIZED = "stabilized_ratio"
METHOD_IDENTITY = "identity_map"
METHOD_TRIVIAL = "trivial"


@dataclass
class BudgetPolicy:
    """
    计算预算

    Args:
        max_exponent: 2^n 序列的最大 n（默认 4，即算到 T_16）
        max_set_size: 单个集合的元素上限
        time_cap: 单次估计的秒数上限
        stabilization_window: 判定增量恒定所需的窗口
        max_members: 族扫描的成员数上限
        family_size_bound: 族成员的阶上限
        growth_threshold: 恒等映射指数增长判据（nats）
        workers: 并行线程数
    """
    max_exponent: int = 4
    max_set_size: int = 1 << 20
    time_cap: float = 120.0
    stabilization_window: int = 3
    max_members: int = 5
    family_size_bound: int = 10000
    growth_threshold: float = 0.4
    workers: int = 3

    def __post_init__(self):
        for name in ("max_exponent", "max_set_size", "time_cap", "stabilization_window",
                     "max_members", "family_size_bound", "workers"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool) or value <= 0:
                raise UsageError(f"预算字段 {name} 必须为正数: {value!r}")

    @classmethod
    def from_settings(cls, settings: Dict[str, Any], **overrides) -> "BudgetPolicy":
        values = {k: settings[k] for k in cls.__dataclass_fields__ if k in settings}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    @classmethod
    def from_json(cls, data: Dict[str, Any], base: Optional["BudgetPolicy"] = None) -> "BudgetPolicy":
        if not isinstance(data, dict):
            raise UsageError("预算文档必须是 JSON 对象")
        unknown = set(data) - set(cls.__dataclass_fields__) - {"schema"}
        if unknown:
            raise UsageError(f"预算文档含未知字段: {', '.join(sorted(unknown))}")
        values = asdict(base) if base else {}
        values.update({k: v for k, v in data.items() if k in cls.__dataclass_fields__})
        return cls(**values)

    def to_json(self) -> Dict[str, Any]:
        return asdict(self)

    @property
    def horizon(self) -> int:
        return 2 ** self.max_exponent


@dataclass
class EntropyEstimate:
    """
    熵估计结果

    sequence 为 (n, ℓ(T_{2^n})/2^n)；族扫描时为 (成员序号, 当前上确界)。
    """
    label: str
    sequence: List[Tuple[int, float]]
    upper_bound: float
    exact: Optional[float] = None
    method: Optional[str] = None
    truncated: bool = False
    identity_adjoined: bool = False
    invariant_violation: bool = False
    stabilized: bool = False
    sizes: List[int] = field(default_factory=list)
    increments: List[float] = field(default_factory=list)
    flags: List[str] = field(default_factory=list)
    members: List[Dict[str, Any]] = field(default_factory=list)
    budget_used: Dict[str, Any] = field(default_factory=dict)

    @property
    def is_exact(self) -> bool:
        return self.exact is not None

    @property
    def value(self) -> float:
        return self.exact if self.exact is not None else self.upper_bound

    @property
    def diverging(self) -> bool:
        return DIVERGENCE_FLAG in self.flags

    def to_json(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "sequence": [{"n": n, "value": v, "value_log2": v / LOG2} for n, v in self.sequence],
            "upper_bound": self.upper_bound,
            "exact": self.exact,
            "exact_log2": self.exact / LOG2 if self.exact is not None else None,
            "method": self.method,
            "truncated": self.truncated,
            "identity_adjoined": self.identity_adjoined,
            "invariant_violation": self.invariant_violation,
            "stabilized": self.stabilized,
            "sizes": [str(s) for s in self.sizes],
            "increments": self.increments,
            "flags": self.flags,
            "members": self.members,
            "budget_used": self.budget_used,
        }

    def to_csv(self, path: str) -> str:
        """导出 (n, value) 表"""
        path = prepare_output_path(path)
        with open(path, 'w', newline='', encoding='utf-8-sig') as f:
            writer = csv.DictWriter(f, fieldnames=['n', 'value', 'value_log2'])
            writer.writeheader()
            for n, v in self.sequence:
                writer.writerow({'n': n, 'value': repr(v), 'value_log2': repr(v / LOG2)})
        return path


def _deadline(budget: BudgetPolicy) -> float:
    return time.monotonic() + budget.time_cap


def _with_identity(X: FiniteSubset, label: str) -> Tuple[FiniteSubset, bool]:
    if X.contains_identity():
        return X, False
    log("Entropy", f"{label}: X 不含单位元，已补入 1（报告中记录）", "⚠")
    return X.with_identity(), True


def _collect_counts(count: Callable[[int], int], horizon: int) -> Tuple[List[int], bool, str]:
    """依次计算 count(1..horizon)；预算耗尽时返回已算出的前缀（至少含 T_1）"""
    sizes = [1]
    try:
        for k in range(1, horizon + 1):
            sizes.append(count(k))
    except BudgetExceededError as e:
        return sizes, True, str(e)
    return sizes, False, ""


def _estimate_from_sizes(label: str, sizes: List[int], budget: BudgetPolicy,
                         truncated: bool, started: float, method: Optional[str] = None
                         ) -> EntropyEstimate:
    logs = [math.log(s) for s in sizes]
    sequence = []
    for n in range(budget.max_exponent + 1):
        k = 2 ** n
        if k < len(sizes):
            sequence.append((n, logs[k] / k))
    increments = [logs[k + 1] - logs[k] for k in range(1, len(sizes) - 1)]
    upper = min(v for _, v in sequence)

    violation = any(b > a + EXACT_TOL for (_, a), (_, b) in zip(sequence, sequence[1:]))
    exact = None
    w = budget.stabilization_window
    if method in (METHOD_TRIVIAL, METHOD_IDENTITY):
        exact = 0.0
    elif len(increments) >= w:
        window = increments[-w:]
        if max(window) - min(window) <= EXACT_TOL:
            exact = max(window[-1], 0.0)
            method = METHOD_STABILIZED
    if exact is not None and exact > upper + EXACT_TOL:
        log("Entropy", f"{label}: 稳定增量 {exact:.6f} 超过上界 {upper:.6f}，不作为精确值", "⚠")
        exact, method = None, None
    if exact is None:
        method = None

    estimate = EntropyEstimate(
        label=label, sequence=sequence, upper_bound=upper, exact=exact, method=method,
        truncated=truncated, invariant_violation=violation, stabilized=exact is not None,
        sizes=sizes, increments=increments,
        budget_used={
            "max_exponent_reached": sequence[-1][0],
            "largest_set": max(sizes),
            "elapsed": round(time.monotonic() - started, 4),
        })
    if violation:
        estimate.flags.append("sequence_increasing")
        log("Entropy", f"{label}: ℓ(T_2^n)/2^n 不是单调递减的", "✗")
    return estimate


def entropy_H(phi: Endomorphism, X: FiniteSubset, budget: Optional[BudgetPolicy] = None,
              label: str = "") -> EntropyEstimate:
    """
    H(φ,X) = inf_n ℓ(T_{2^n}(φ,X))/2^n

    Args:
        phi: 自同态
        X: 非空有限集（不含 1 时补入并记录）
        budget: 预算策略
        label: 报告标签

    Returns:
        EntropyEstimate；增量在窗口内恒定时给出 stabilized_ratio 精确值
    """
    budget = budget or BudgetPolicy()
    label = label or f"H({phi.name}, |X|={len(X)})"
    started = time.monotonic()
    X, adjoined = _with_identity(X, label)
    horizon = budget.horizon

    if phi.is_trivial:
        sizes = [1] + [len(X)] * horizon
        estimate = _estimate_from_sizes(label, sizes, budget, False, started, METHOD_TRIVIAL)
    elif phi.is_identity and isinstance(X, FiniteSubgroup) and X.verified_closed:
        sizes = [1] + [len(X)] * horizon
        estimate = _estimate_from_sizes(label, sizes, budget, False, started, METHOD_IDENTITY)
    else:
        traj = Trajectory(phi, X, budget.max_set_size, _deadline(budget))
        sizes, truncated, reason = _collect_counts(traj.size, horizon)
        if truncated:
            log("Entropy", f"{label}: 预算耗尽于 T_{len(sizes)}（{reason}），只给出上界", "⚠")
        estimate = _estimate_from_sizes(label, sizes, budget, truncated, started)
        estimate.budget_used["counting"] = traj.counting
    estimate.identity_adjoined = adjoined
    return estimate


def entropy_H_linear(phi: Endomorphism, X: FiniteSubset, budget: Optional[BudgetPolicy] = None,
                     label: str = "") -> EntropyEstimate:
    """对每个已算的 n 给出 ℓ(T_n)/n；其下确界不小于 H(φ,X)"""
    budget = budget or BudgetPolicy()
    label = label or f"H_lin({phi.name}, |X|={len(X)})"
    started = time.monotonic()
    X, adjoined = _with_identity(X, label)
    traj = Trajectory(phi, X, budget.max_set_size, _deadline(budget))
    sizes, truncated, _ = _collect_counts(traj.size, budget.horizon)
    sequence = [(k, math.log(sizes[k]) / k) for k in range(1, len(sizes))]
    increments = [math.log(sizes[k + 1]) - math.log(sizes[k]) for k in range(1, len(sizes) - 1)]
    return EntropyEstimate(
        label=label, sequence=sequence, upper_bound=min(v for _, v in sequence),
        method="linear_scheme", truncated=truncated, identity_adjoined=adjoined,
        sizes=sizes, increments=increments,
        budget_used={"largest_set": max(sizes), "elapsed": round(time.monotonic() - started, 4)})


def entropy_H_rel(phi: Endomorphism, X: FiniteSubset, H: NormalSubgroupSpec,
                  budget: Optional[BudgetPolicy] = None, label: str = "") -> EntropyEstimate:
    """
    inf_n ℓ(T_{2^n}(φ,X), H)/2^n，即 H(φ̄_{G/H}, π(X))，不显式构造商群

    Raises:
        UnsupportedError: H 既无代表元映射也无法计数陪集
    """
    if (H.canonicalize is None and H.linear_divisor is None and H.elements is None
            and not (H.is_trivial or H.is_whole)):
        raise UnsupportedError(f"{H.name} 没有代表元映射，无法计算相对熵")
    budget = budget or BudgetPolicy()
    label = label or f"H_rel({phi.name}, {H.name})"
    started = time.monotonic()
    X, adjoined = _with_identity(X, label)
    horizon = budget.horizon
    if H.is_whole:
        estimate = _estimate_from_sizes(label, [1] * (horizon + 1), budget, False, started,
                                        METHOD_TRIVIAL)
    else:
        traj = Trajectory(phi, X, budget.max_set_size, _deadline(budget))
        sizes, truncated, reason = _collect_counts(lambda k: traj.coset_count(k, H), horizon)
        if truncated:
            log("Entropy", f"{label}: 预算耗尽（{reason}）", "⚠")
        estimate = _estimate_from_sizes(label, sizes, budget, truncated, started)
        estimate.budget_used["counting"] = traj.counting
    estimate.identity_adjoined = adjoined
    return estimate


def entropy_h(phi: Endomorphism, family: Iterable[FiniteSubgroup],
              budget: Optional[BudgetPolicy] = None, label: str = "",
              cofinal: bool = False,
              estimator: Optional[Callable[[FiniteSubset, str], EntropyEstimate]] = None
              ) -> EntropyEstimate:
    """
    h(φ) = sup_F H(φ,F)，F 跑遍递增共尾族

    成员并行计算，按序号合并；遇到第一个被截断的成员即停止。

    Args:
        phi: 自同态
        family: 递增的有限子群链
        budget: 预算策略
        label: 报告标签
        cofinal: 族耗尽时最后一个成员是否就是整个群（有限群的子群链）
        estimator: 单个成员的估计函数，默认 entropy_H

    Raises:
        UnsupportedError: 族中没有成员适合预算
    """
    budget = budget or BudgetPolicy()
    label = label or f"h({phi.name})"
    started = time.monotonic()
    estimator = estimator or (lambda F, name: entropy_H(phi, F, budget, name))

    members: List[FiniteSubset] = []
    for F in family:
        if len(F) > budget.max_set_size:
            continue
        members.append(F)
        if len(members) >= budget.max_members:
            break
    if not members:
        raise UnsupportedError(f"{label}: 族中没有适合预算的成员")
    exhausted = len(members) < budget.max_members

    results: List[Optional[EntropyEstimate]] = [None] * len(members)
    with ThreadPoolExecutor(max_workers=budget.workers) as executor:
        futures = {executor.submit(estimator, F, f"{label}#{i}"): i for i, F in enumerate(members)}
        for future in as_completed(futures):
            results[futures[future]] = future.result()

    rows = []
    included: List[EntropyEstimate] = []
    truncated = False
    running = []
    for i, (F, est) in enumerate(zip(members, results)):
        included.append(est)
        running.append((i, max(e.value for e in included)))
        rows.append({"member": i, "order": len(F), "value": est.value, "exact": est.exact,
                     "method": est.method, "truncated": est.truncated})
        if est.truncated:
            truncated = True
            log("Entropy", f"{label}: 成员 #{i} 被截断，停止扫描", "⚠")
            break

    values = [e.value for e in included]
    sup = max(values)
    w = budget.stabilization_window
    tail = included[-w:]
    stabilized = False
    if not truncated:
        if exhausted and cofinal and len(included) == len(members):
            stabilized = True
            tail = included[-1:]
        elif len(included) >= w and max(values[-w:]) - min(values[-w:]) <= EXACT_TOL:
            stabilized = True
    exact = sup if stabilized and all(e.is_exact for e in tail) else None

    flags: List[str] = []
    if len(values) >= w and all(b - a >= LOG2 - EXACT_TOL for a, b in zip(values[-w:], values[-w + 1:])):
        flags.append(DIVERGENCE_FLAG)
    if phi.is_identity:
        for est in included:
            window = est.increments[-w:]
            if est.is_exact or len(window) < w:
                continue
            if all(x >= budget.growth_threshold for x in window):
                if DIVERGENCE_FLAG not in flags:
                    flags.append(DIVERGENCE_FLAG)
            elif all(b <= a + EXACT_TOL for a, b in zip(window, window[1:])):
                if POLYNOMIAL_FLAG not in flags:
                    flags.append(POLYNOMIAL_FLAG)
    if DIVERGENCE_FLAG in flags:
        exact, stabilized = None, False
        log("Entropy", f"{label}: 增长不减缓，标记为 {DIVERGENCE_FLAG}（不是证明）", "⚠")

    estimate = EntropyEstimate(
        label=label, sequence=running, upper_bound=sup, exact=exact,
        method=METHOD_STABILIZED if exact is not None else None,
        truncated=truncated,
        identity_adjoined=any(e.identity_adjoined for e in included),
        invariant_violation=any(e.invariant_violation for e in included),
        stabilized=stabilized,
        increments=included[-1].increments,
        sizes=included[-1].sizes,
        flags=flags, members=rows,
        budget_used={"members": len(included), "elapsed": round(time.monotonic() - started, 4),
                     "budget": budget.to_json()})
    shown = f"{exact:.6f}（精确）" if exact is not None else f"≤ {sup:.6f}"
    log("Entropy", f"{label} = {shown}，{len(included)} 个成员", "✓" if exact is not None else "ℹ")
    return estimate


@dataclass
class RelativeMonotoneResult:
    ok: bool
    values: List[float]


def relative_monotone_check(phi: Endomorphism, X: FiniteSubset, F: FiniteSubgroup, N: int,
                            max_size: int = 1 << 20) -> RelativeMonotoneResult:
    """
    检验 n ↦ ℓ(T_{2^n}(φ,X), T_{2^n}(φ,F))/2^n 在 n ≤ N 上递减

    Raises:
        UsageError: 1 ∉ X
        PreconditionError: 某个 T_{2^n}(φ,F) 不是子群
    """
    if not X.contains_identity():
        raise UsageError("relative_monotone_check 要求 1 ∈ X")
    tx = Trajectory(phi, X, max_size, counting=False)
    tf = Trajectory(phi, F, max_size, counting=False)
    values = []
    for n in range(N + 1):
        k = 2 ** n
        TF = tf.extend(k)
        if not is_subgroup(TF):
            raise PreconditionError(f"T_{k}(φ,F) 不是子群", subject=f"T_{k}(φ,F)")
        B = FiniteSubgroup(TF.group, TF.payloads, verified_closed=True)
        values.append(math.log(count_cosets(tx.extend(k), B)) / k)
    ok = all(b <= a + EXACT_TOL for a, b in zip(values, values[1:]))
    return RelativeMonotoneResult(ok, values)


@dataclass
class ConjugacyCheck:
    ok: bool
    sizes: List[int]
    conjugated_sizes: List[int]


def conjugacy_invariance_check(phi: Endomorphism, xi: Endomorphism, X: FiniteSubset,
                               budget: Optional[BudgetPolicy] = None,
                               xi_inverse: Optional[Callable[[Any], Any]] = None) -> ConjugacyCheck:
    """
    ξ 为自同构时检验 ξ(T_n(φ,X)) = T_n(ξφξ⁻¹, ξ(X))

    Raises:
        UsageError: ξ 在有限群上不是双射
        UnsupportedError: 无限群且未给出 ξ⁻¹
    """
    budget = budget or BudgetPolicy()
    group = phi.domain
    if xi_inverse is None:
        if not group.is_finite:
            raise UnsupportedError("无限群上需要显式给出 ξ⁻¹")
        table = {xi.fn(g): g for g in group.elements()}
        if len(table) != group.order:
            raise UsageError(f"{xi.name} 不是自同构")
        xi_inverse = table.__getitem__
    f, x = phi.fn, xi.fn
    psi = Endomorphism(group, lambda g: x(f(xi_inverse(g))), f"{xi.name}∘{phi.name}∘{xi.name}⁻¹")
    ta = Trajectory(phi, X, budget.max_set_size, counting=False)
    tb = Trajectory(psi, image_set(X, x), budget.max_set_size, counting=False)
    sizes, conj_sizes = [], []
    ok = True
    for k in range(budget.horizon + 1):
        A, B = ta.extend(k), tb.extend(k)
        sizes.append(len(A))
        conj_sizes.append(len(B))
        if frozenset(x(a) for a in A.payloads) != B.payloads:
            ok = False
            break
    return ConjugacyCheck(ok, sizes, conj_sizes)
