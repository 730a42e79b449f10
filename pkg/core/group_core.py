"""
群核心 - 元素运算、有限集合代数、子群闭包以及 ℓ(X)、ℓ(X,B)

元素在群内部以可哈希的 payload 表示，payload 本身就是稳定指纹；
Element 只在接口边界（见证元素、报告）上携带 group_tag。
"""
import math
import random
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from core.errors import BudgetExceededError, UnsupportedError, UsageError
from core.linear_count import LinearStructure

DEFAULT_MAX_SIZE = 1 << 20
COSET_MATERIALIZE_LIMIT = 4096


@dataclass(frozen=True)
class Element:
    """带群标签的元素"""
    payload: Any
    group_tag: str


class AmbientGroup:
    """
    群预言机：identity / multiply / invert / 相等判定

    Args:
        tag: 群标识，同一个 GroupSpec 构造出的群共享 tag
        identity: 单位元 payload
        multiply: (a, b) -> ab
        invert: a -> a⁻¹
        describe: 构造记录（可读）
        order: 有限群的阶，无限群为 None
        enumerate_elements: 有限群的元素枚举器
        sampler: rng -> 随机元素（用于随机化检验）
        sort_key: 元素的全序键，默认 payload 本身
        formatter: payload -> 可读字符串
        encoder / decoder: payload 与 JSON 值互转
        linear: ℤ_m 坐标视图（交换群才有）
        abelian: 是否已知交换
        structure: 具体实现对象（供自同态构造器分派）
    """

    def __init__(self, tag: str, identity: Any,
                 multiply: Callable[[Any, Any], Any],
                 invert: Callable[[Any], Any],
                 describe: str = "",
                 order: Optional[int] = None,
                 enumerate_elements: Optional[Callable[[], Iterable[Any]]] = None,
                 sampler: Optional[Callable[[random.Random], Any]] = None,
                 sort_key: Optional[Callable[[Any], Any]] = None,
                 formatter: Optional[Callable[[Any], str]] = None,
                 encoder: Optional[Callable[[Any], Any]] = None,
                 decoder: Optional[Callable[[Any], Any]] = None,
                 linear: Optional[LinearStructure] = None,
                 abelian: bool = False,
                 structure: Any = None):
        self.tag = tag
        self.identity = identity
        self.multiply = multiply
        self.invert = invert
        self.describe = describe or tag
        self.order = order
        self._enumerate = enumerate_elements
        self._sampler = sampler
        self.sort_key = sort_key or (lambda p: p)
        self._formatter = formatter or repr
        self._encoder = encoder or (lambda p: p)
        self._decoder = decoder or (lambda v: v)
        self.linear = linear
        self.abelian = abelian or linear is not None
        self.structure = structure

    def __repr__(self):
        return f"AmbientGroup({self.tag})"

    @property
    def is_finite(self) -> bool:
        return self.order is not None

    def element(self, payload: Any) -> Element:
        return Element(payload, self.tag)

    def mul(self, a: Any, b: Any) -> Any:
        return self.multiply(a, b)

    def inv(self, a: Any) -> Any:
        return self.invert(a)

    def power(self, a: Any, k: int) -> Any:
        """a^k（k 可为负）"""
        if k < 0:
            a, k = self.invert(a), -k
        result = self.identity
        base = a
        while k:
            if k & 1:
                result = self.multiply(result, base)
            base = self.multiply(base, base)
            k >>= 1
        return result

    def conjugate(self, g: Any, h: Any) -> Any:
        """g h g⁻¹"""
        return self.multiply(self.multiply(g, h), self.invert(g))

    def elements(self) -> Iterator[Any]:
        """枚举有限群的全部元素"""
        if self._enumerate is None:
            raise UnsupportedError(f"群 {self.tag} 不可枚举（无限群或未提供枚举器）")
        return iter(self._enumerate())

    def sample(self, rng: random.Random) -> Any:
        """随机元素；有限群且无采样器时从枚举中抽取"""
        if self._sampler is not None:
            return self._sampler(rng)
        if self._enumerate is not None:
            return rng.choice(sorted(self._enumerate(), key=self.sort_key))
        raise UnsupportedError(f"群 {self.tag} 没有采样器")

    def format(self, payload: Any) -> str:
        return self._formatter(payload)

    def encode(self, payload: Any) -> Any:
        return self._encoder(payload)

    def decode(self, value: Any) -> Any:
        """外部表示 -> payload；格式错误统一抛出 UsageError"""
        try:
            return self._decoder(value)
        except (KeyError, IndexError, TypeError, ValueError) as e:
            raise UsageError(f"无法解析 {self.tag} 的元素 {value!r}: {e}")

    def subset(self, payloads: Iterable[Any]) -> "FiniteSubset":
        return FiniteSubset(self, payloads)


class FiniteSubset:
    """非空、无重复的有限元素集合（同一个群）"""

    def __init__(self, group: AmbientGroup, payloads: Iterable[Any],
                 generators: Optional[Sequence[Any]] = None):
        frozen = payloads if isinstance(payloads, frozenset) else frozenset(payloads)
        if not frozen:
            raise UsageError("集合不能为空（ℓ 只对非空有限集定义）")
        self.group = group
        self.payloads = frozen
        self.generators = tuple(generators) if generators is not None else None

    @property
    def group_tag(self) -> str:
        return self.group.tag

    def __len__(self):
        return len(self.payloads)

    def __iter__(self):
        return iter(self.payloads)

    def __contains__(self, payload):
        return payload in self.payloads

    def __eq__(self, other):
        if not isinstance(other, FiniteSubset):
            return NotImplemented
        return self.group_tag == other.group_tag and self.payloads == other.payloads

    def __hash__(self):
        return hash((self.group_tag, self.payloads))

    def __repr__(self):
        shown = ", ".join(self.group.format(p) for p in self.sorted_payloads()[:6])
        more = ", …" if len(self) > 6 else ""
        return f"{type(self).__name__}[{self.group_tag}]{{{shown}{more}}} (|X|={len(self)})"

    @property
    def elements(self) -> List[Element]:
        return [self.group.element(p) for p in self.sorted_payloads()]

    def sorted_payloads(self) -> List[Any]:
        return sorted(self.payloads, key=self.group.sort_key)

    def contains_identity(self) -> bool:
        return self.group.identity in self.payloads

    def with_identity(self) -> "FiniteSubset":
        if self.contains_identity():
            return self
        return FiniteSubset(self.group, self.payloads | {self.group.identity})

    def issubset(self, other: "FiniteSubset") -> bool:
        return self.group_tag == other.group_tag and self.payloads <= other.payloads


class FiniteSubgroup(FiniteSubset):
    """有限子群；verified_closed 表示已穷举验证封闭性"""

    def __init__(self, group: AmbientGroup, payloads: Iterable[Any],
                 generators: Optional[Sequence[Any]] = None,
                 verified_closed: bool = False):
        super().__init__(group, payloads, generators)
        self.verified_closed = verified_closed


def _same_group(X: FiniteSubset, Y: FiniteSubset):
    if X.group_tag != Y.group_tag:
        raise UsageError(f"群标签不一致: {X.group_tag} vs {Y.group_tag}")


def multiply_sets(X: FiniteSubset, Y: FiniteSubset,
                  max_size: int = DEFAULT_MAX_SIZE) -> FiniteSubset:
    """
    集合乘积 XY = {xy | x∈X, y∈Y}（去重）

    Args:
        X, Y: 同一个群中的有限集合
        max_size: 结果元素上限

    Returns:
        FiniteSubset，|XY| ≤ |X||Y|
    """
    _same_group(X, Y)
    return X.group.subset(product_payloads(X.group, X.payloads, Y.payloads, max_size))


def product_payloads(group: AmbientGroup, xs: Iterable[Any], ys: Iterable[Any],
                     max_size: int = DEFAULT_MAX_SIZE) -> frozenset:
    """payload 层面的集合乘积，超过 max_size 抛出 BudgetExceededError"""
    mul = group.multiply
    ys = list(ys)
    result = set()
    for x in xs:
        result.update(mul(x, y) for y in ys)
        if len(result) > max_size:
            raise BudgetExceededError(
                f"集合乘积超过预算 {max_size}", limit=max_size, reached=len(result))
    return frozenset(result)


def _closure(group: AmbientGroup, seeds: Iterable[Any], max_size: int
             ) -> Tuple[frozenset, List[Any]]:
    """
    逐个加入生成元的闭包（只保留不在当前子群中的生成元）

    Returns:
        (子群元素, 约简后的生成元)
    """
    mul, inv = group.multiply, group.invert
    elements = {group.identity}
    generators: List[Any] = []
    steps: List[Any] = []
    for seed in sorted(set(seeds), key=group.sort_key):
        if seed in elements:
            continue
        generators.append(seed)
        steps.append(seed)
        seed_inv = inv(seed)
        if seed_inv != seed:
            steps.append(seed_inv)
        queue = list(elements)
        head = 0
        while head < len(queue):
            x = queue[head]
            head += 1
            for s in steps:
                y = mul(x, s)
                if y not in elements:
                    elements.add(y)
                    queue.append(y)
                    if len(elements) > max_size:
                        raise BudgetExceededError(
                            f"子群闭包超过预算 {max_size}（群可能不是局部有限的）",
                            limit=max_size, reached=len(elements))
    return frozenset(elements), generators


def subgroup_generate(S: FiniteSubset, max_size: int = DEFAULT_MAX_SIZE) -> FiniteSubgroup:
    """
    生成包含 S 的最小子群

    Args:
        S: 非空生成集
        max_size: 闭包元素上限

    Returns:
        verified_closed 的 FiniteSubgroup，generators 为约简后的生成元
    """
    elements, generators = _closure(S.group, S.payloads, max_size)
    return FiniteSubgroup(S.group, elements, generators, verified_closed=True)


def generate_payloads(group: AmbientGroup, seeds: Iterable[Any],
                      max_size: int = DEFAULT_MAX_SIZE) -> FiniteSubgroup:
    """直接从 payload 生成子群（避免先构造 FiniteSubset）"""
    seeds = list(seeds) or [group.identity]
    elements, generators = _closure(group, seeds, max_size)
    return FiniteSubgroup(group, elements, generators, verified_closed=True)


def is_subgroup(X: FiniteSubset) -> bool:
    """1∈X 且 X 在乘法与求逆下封闭"""
    group = X.group
    if group.identity not in X.payloads:
        return False
    inv = group.invert
    if any(inv(x) not in X.payloads for x in X.payloads):
        return False
    try:
        elements, _ = _closure(group, X.payloads, len(X))
    except BudgetExceededError:
        return False
    return elements == X.payloads


def closure_witness(X: FiniteSubset, max_pairs: int = 1 << 22) -> Optional[Dict[str, Any]]:
    """
    返回 X 不是子群的见证；是子群时返回 None

    Returns:
        {'kind': 'identity'} / {'kind': 'inverse', 'x': ...} /
        {'kind': 'product', 'x': ..., 'y': ..., 'xy': ...}
    """
    group = X.group
    if group.identity not in X.payloads:
        return {'kind': 'identity'}
    for x in X.sorted_payloads():
        if group.invert(x) not in X.payloads:
            return {'kind': 'inverse', 'x': group.format(x)}
    ordered = X.sorted_payloads()
    checked = 0
    for x in ordered:
        for y in ordered:
            xy = group.multiply(x, y)
            if xy not in X.payloads:
                return {'kind': 'product', 'x': group.format(x),
                        'y': group.format(y), 'xy': group.format(xy)}
            checked += 1
            if checked >= max_pairs:
                return None
    return None


def ell(X: FiniteSubset) -> float:
    """ℓ(X) = log|X|（自然对数）"""
    return math.log(len(X))


def coset_fingerprint(group: AmbientGroup, x: Any, B: FiniteSubgroup,
                      materialize_limit: int = COSET_MATERIALIZE_LIMIT) -> Any:
    """左陪集 xB 的指纹：小 B 用元素集合，大 B 用全序下的最小元"""
    mul = group.multiply
    if len(B) <= materialize_limit:
        return frozenset(mul(x, b) for b in B.payloads)
    return min((mul(x, b) for b in B.payloads), key=group.sort_key)


def count_cosets(X: FiniteSubset, B: FiniteSubgroup,
                 materialize_limit: int = COSET_MATERIALIZE_LIMIT) -> int:
    """[XB:B] = |{xB | x∈X}|"""
    _same_group(X, B)
    if not getattr(B, 'verified_closed', False):
        raise UsageError("ℓ(X,B) 要求 B 是已验证的子群")
    if len(B) == 1:
        return len(X)
    group = X.group
    seen = set()
    covered = set()
    for x in X.payloads:
        if x in covered:
            continue
        fp = coset_fingerprint(group, x, B, materialize_limit)
        seen.add(fp)
        if isinstance(fp, frozenset):
            covered.update(fp)
    return len(seen)


def ell_rel(X: FiniteSubset, B: FiniteSubgroup,
            materialize_limit: int = COSET_MATERIALIZE_LIMIT) -> float:
    """ℓ(X,B) = log[XB:B]"""
    return math.log(count_cosets(X, B, materialize_limit))


def count_canonical(X: FiniteSubset, canonicalize: Callable[[Any], Any]) -> int:
    """用陪集代表元映射计数 |π(X)|"""
    return len({canonicalize(x) for x in X.payloads})


def image_set(X: FiniteSubset, fn: Callable[[Any], Any],
              group: Optional[AmbientGroup] = None) -> FiniteSubset:
    """
    X 在映射 fn 下的像（fn 为同态时子群的像仍是子群）

    Args:
        X: 原集合
        fn: payload 映射
        group: 像所在的群，默认与 X 相同
    """
    target = group or X.group
    payloads = frozenset(fn(x) for x in X.payloads)
    generators = None
    if X.generators is not None:
        generators = [fn(g) for g in X.generators]
    if isinstance(X, FiniteSubgroup):
        return FiniteSubgroup(target, payloads, generators, verified_closed=X.verified_closed)
    return FiniteSubset(target, payloads, generators)


def check_group_axioms(group: AmbientGroup, samples: int = 1000, seed: int = 0) -> Optional[str]:
    """
    随机检验群公理（结合律、单位元、逆元）

    Returns:
        None 表示通过，否则返回失败描述
    """
    rng = random.Random(seed)
    e = group.identity
    mul, inv = group.multiply, group.invert
    for _ in range(samples):
        a, b, c = group.sample(rng), group.sample(rng), group.sample(rng)
        if mul(mul(a, b), c) != mul(a, mul(b, c)):
            return f"结合律失败: {group.format(a)}, {group.format(b)}, {group.format(c)}"
        if mul(e, a) != a or mul(a, e) != a:
            return f"单位元律失败: {group.format(a)}"
        if mul(a, inv(a)) != e or mul(inv(a), a) != e:
            return f"逆元律失败: {group.format(a)}"
    return None
