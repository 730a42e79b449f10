"""
群目录 - 熵与加法定理例子中用到的具体群以及桌面规模实验用群

每个 GroupSpec 变体对应一个结构类（负责元素运算），build_group() 把它包装成
AmbientGroup 预言机；catalog() 给出带类别标签的条目，finite_subgroup_family()
给出按构造共尾的有限子群链。
"""
import hashlib
import itertools
import json
import math
import random
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, Iterator, List, Optional, Sequence, Tuple

from sympy.combinatorics import Permutation

from core.errors import ConstructionError, UnsupportedError, UsageError
from core.group_core import AmbientGroup, FiniteSubgroup, generate_payloads
from core.linear_count import LinearStructure

# 图 (1)–(5) 的类别标签
LOCALLY_FINITE = "locally_finite"
FINITELY_QUASIHAMILTONIAN = "finitely_quasihamiltonian"
QUASIHAMILTONIAN = "quasihamiltonian"
TORSION_FC = "torsion_FC"
TORSION_ABELIAN = "torsion_abelian"
ALL_CLASSES = frozenset({LOCALLY_FINITE, FINITELY_QUASIHAMILTONIAN, QUASIHAMILTONIAN,
                         TORSION_FC, TORSION_ABELIAN})

VARIANTS = ("cayley_table", "cyclic", "finitary_permutations", "restricted_direct_sum",
            "semidirect", "direct_product", "lamplighter")

AXIOM_EXHAUSTIVE_LIMIT = 64


# ---------------------------------------------------------------------------
# 稀疏向量（有限支撑）运算
# ---------------------------------------------------------------------------

def sparse_add(a: tuple, b: tuple, m: int) -> tuple:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for i, v in b:
        s = (d.get(i, 0) + v) % m
        if s:
            d[i] = s
        else:
            d.pop(i, None)
    return tuple(sorted(d.items()))


def sparse_neg(a: tuple, m: int) -> tuple:
    return tuple((i, (-v) % m) for i, v in a)


def sparse_scale(a: tuple, c: int, m: int) -> tuple:
    return tuple((i, v * c % m) for i, v in a if v * c % m)


def sparse_shift(a: tuple, k: int, lower: Optional[int] = None,
                 upper: Optional[int] = None) -> tuple:
    """下标平移 k；落在 [lower, upper) 之外的坐标被丢弃"""
    out = []
    for i, v in a:
        j = i + k
        if lower is not None and j < lower:
            continue
        if upper is not None and j >= upper:
            continue
        out.append((j, v))
    return tuple(out)


def _decode_sparse(value: Any, m: int) -> tuple:
    if isinstance(value, dict):
        items = [(int(i), int(v)) for i, v in value.items()]
    else:
        items = [(int(i), int(v)) for i, v in value]
    d: Dict[int, int] = {}
    for i, v in items:
        d[i] = (d.get(i, 0) + v) % m
    return tuple(sorted((i, v) for i, v in d.items() if v))


def _format_sparse(a: tuple) -> str:
    if not a:
        return "0"
    return "+".join(f"{v}e{i}" if v != 1 else f"e{i}" for i, v in a)


# ---------------------------------------------------------------------------
# 有限置换（支撑有限）
# ---------------------------------------------------------------------------

# 点 0 始终不动，sympy 的 cyclic_form 直接使用 1 起的记号
PERM_IDENTITY = Permutation([0])


def perm_canonical(p: Permutation) -> Permutation:
    """截掉尾部不动点；相等的置换由此得到相同的 size 与 hash"""
    moved = p.support()
    n = max(moved) + 1 if moved else 1
    if p.size == n:
        return p
    return Permutation(p.array_form[:n])


def perm_from_cycles(cycles: Sequence[Sequence[int]]) -> Permutation:
    cycles = [list(c) for c in cycles if c]
    points = [x for c in cycles for x in c]
    if len(set(points)) != len(points) or any(x < 1 for x in points):
        raise UsageError(f"非法轮换: {cycles}")
    if not cycles:
        return PERM_IDENTITY
    return perm_canonical(Permutation(cycles))


def parse_cycles(text: str) -> Permutation:
    """解析 "(1 2 3)(4 5)" 形式的轮换记号；"()" 为恒等"""
    text = text.strip()
    if text in ("", "()", "1", "id"):
        return PERM_IDENTITY
    cycles = []
    for chunk in text.replace(")", ")|").split("|"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if not (chunk.startswith("(") and chunk.endswith(")")):
            raise UsageError(f"无法解析轮换记号: {text}")
        try:
            cycles.append([int(x) for x in chunk[1:-1].replace(",", " ").split()])
        except ValueError:
            raise UsageError(f"无法解析轮换记号: {text}")
    return perm_from_cycles(cycles)


def format_cycles(p: Permutation) -> str:
    return "".join("(" + " ".join(map(str, c)) + ")" for c in p.cyclic_form) or "()"


# ---------------------------------------------------------------------------
# 结构类
# ---------------------------------------------------------------------------

class TableStructure:
    """由乘法表给出的有限群，元素为 0..n-1"""

    def __init__(self, table: List[List[int]], names: Optional[List[str]] = None):
        self.table = [list(row) for row in table]
        self.n = len(self.table)
        self.names = list(names) if names else [str(i) for i in range(self.n)]
        self._validate()
        e = self.identity
        self.inverses = [row.index(e) for row in self.table]

    def _validate(self):
        n = self.n
        if n == 0:
            raise ConstructionError("乘法表为空")
        if len(self.names) != n:
            raise ConstructionError("元素名称数量与乘法表大小不符")
        for row in self.table:
            if len(row) != n or sorted(row) != list(range(n)):
                raise ConstructionError("乘法表的每一行必须是 0..n-1 的排列")
        for col in range(n):
            if sorted(row[col] for row in self.table) != list(range(n)):
                raise ConstructionError("乘法表的每一列必须是 0..n-1 的排列")
        identities = [e for e in range(n)
                      if self.table[e] == list(range(n))
                      and all(self.table[a][e] == a for a in range(n))]
        if not identities:
            raise ConstructionError("乘法表没有单位元")
        self.identity = identities[0]
        t = self.table
        if n <= AXIOM_EXHAUSTIVE_LIMIT:
            triples = itertools.product(range(n), repeat=3)
        else:
            rng = random.Random(0)
            triples = ((rng.randrange(n), rng.randrange(n), rng.randrange(n)) for _ in range(1000))
        for a, b, c in triples:
            if t[t[a][b]][c] != t[a][t[b][c]]:
                raise ConstructionError(f"乘法表不满足结合律: ({a},{b},{c})")

    def mul(self, a: int, b: int) -> int:
        return self.table[a][b]

    def inv(self, a: int) -> int:
        return self.inverses[a]

    def decode(self, value: Any) -> int:
        if isinstance(value, str):
            if value not in self.names:
                raise UsageError(f"未知元素名: {value}")
            return self.names.index(value)
        value = int(value)
        if not 0 <= value < self.n:
            raise UsageError(f"元素超出范围: {value}")
        return value

    def build(self, tag: str, describe: str) -> AmbientGroup:
        abelian = all(self.table[a][b] == self.table[b][a]
                      for a in range(self.n) for b in range(a))
        return AmbientGroup(
            tag, self.identity, self.mul, self.inv, describe,
            order=self.n,
            enumerate_elements=lambda: range(self.n),
            sampler=lambda rng: rng.randrange(self.n),
            formatter=lambda a: self.names[a],
            encoder=lambda a: self.names[a],
            decoder=self.decode,
            abelian=abelian,
            structure=self)


class CyclicStructure:
    """ℤ_m，元素为 0..m-1"""

    def __init__(self, modulus: int):
        if modulus < 1:
            raise ConstructionError(f"循环群阶必须为正: {modulus}")
        self.modulus = modulus
        self.identity = 0

    def mul(self, a: int, b: int) -> int:
        return (a + b) % self.modulus

    def inv(self, a: int) -> int:
        return (-a) % self.modulus

    def scale(self, a: int, c: int) -> int:
        return a * c % self.modulus

    def build(self, tag: str, describe: str) -> AmbientGroup:
        m = self.modulus
        linear = LinearStructure(m, lambda a: {0: a} if a else {})
        return AmbientGroup(
            tag, 0, self.mul, self.inv, describe,
            order=m,
            enumerate_elements=lambda: range(m),
            sampler=lambda rng: rng.randrange(m),
            formatter=str,
            encoder=int,
            decoder=lambda v: int(v) % m,
            linear=linear,
            structure=self)


class PermutationStructure:
    """有限置换群 𝒮_fin(ℕ₊)，bound 给定时为 𝒮_bound；元素为 sympy Permutation"""

    def __init__(self, bound: Optional[int] = None, sample_support: int = 6):
        if bound is not None and bound < 1:
            raise ConstructionError(f"支撑上界必须为正: {bound}")
        self.bound = bound
        self.sample_support = bound or sample_support
        self.identity = PERM_IDENTITY

    def mul(self, a: Permutation, b: Permutation) -> Permutation:
        # sympy 的 a*b 先作用 a；这里约定 (ab)(x) = a(b(x))
        return perm_canonical(b * a)

    def inv(self, a: Permutation) -> Permutation:
        return ~a

    def sample(self, rng: random.Random) -> Permutation:
        images = list(range(1, self.sample_support + 1))
        rng.shuffle(images)
        return perm_canonical(Permutation([0] + images))

    def decode(self, value: Any) -> Permutation:
        if isinstance(value, Permutation):
            p = perm_canonical(value)
        elif isinstance(value, str):
            p = parse_cycles(value)
        else:
            try:
                images = [int(x) for x in value]
            except (TypeError, ValueError):
                raise UsageError(f"不是置换: {value}")
            if sorted(images) != list(range(1, len(images) + 1)):
                raise UsageError(f"不是置换: {value}")
            p = perm_canonical(Permutation([0] + images))
        if self.bound is not None and p.size - 1 > self.bound:
            raise UsageError(f"置换超出支撑 {{1..{self.bound}}}: {value}")
        return p

    def elements(self) -> Iterator[Permutation]:
        for images in itertools.permutations(range(1, self.bound + 1)):
            yield perm_canonical(Permutation([0, *images]))

    def build(self, tag: str, describe: str) -> AmbientGroup:
        finite = self.bound is not None
        return AmbientGroup(
            tag, PERM_IDENTITY, self.mul, self.inv, describe,
            order=math.factorial(self.bound) if finite else None,
            enumerate_elements=self.elements if finite else None,
            sampler=self.sample,
            sort_key=lambda p: (p.size, p.array_form),
            formatter=format_cycles,
            encoder=format_cycles,
            decoder=self.decode,
            abelian=finite and self.bound <= 2,
            structure=self)


class SparseSumStructure:
    """
    限制直和 ℤ_m^(I)，I = ℕ 或 ℤ

    元素为按下标排序、不含零值的 (下标, 值) 元组；truncation=k 时只用坐标 0..k-1。
    """

    def __init__(self, modulus: int, index: str = "N", truncation: Optional[int] = None,
                 sample_width: int = 6):
        if modulus < 2:
            raise ConstructionError(f"直和的基群阶至少为 2: {modulus}")
        if index not in ("N", "Z"):
            raise ConstructionError(f"下标集只能是 N 或 Z: {index}")
        if truncation is not None and (index != "N" or truncation < 1):
            raise ConstructionError("只有 ℕ 下标的直和可以截断，且截断长度为正")
        self.modulus = modulus
        self.index = index
        self.truncation = truncation
        self.sample_width = truncation or sample_width
        self.identity = ()

    @property
    def lower(self) -> Optional[int]:
        return 0 if self.index == "N" else None

    def mul(self, a: tuple, b: tuple) -> tuple:
        return sparse_add(a, b, self.modulus)

    def inv(self, a: tuple) -> tuple:
        return sparse_neg(a, self.modulus)

    def scale(self, a: tuple, c: int) -> tuple:
        return sparse_scale(a, c, self.modulus)

    def shift(self, a: tuple, k: int = 1) -> tuple:
        """右移 e_i ↦ e_{i+k}（截断群中移出范围的坐标归零）"""
        return sparse_shift(a, k, self.lower, self.truncation)

    def unit(self, i: int, value: int = 1) -> tuple:
        value %= self.modulus
        return ((i, value),) if value else ()

    def sample(self, rng: random.Random) -> tuple:
        m = self.modulus
        if self.index == "N":
            indices = range(self.sample_width)
        else:
            half = self.sample_width // 2
            indices = range(-half, self.sample_width - half)
        return tuple((i, v) for i in indices for v in [rng.randrange(m)] if v)

    def decode(self, value: Any) -> tuple:
        a = _decode_sparse(value, self.modulus)
        for i, _ in a:
            if self.index == "N" and i < 0:
                raise UsageError(f"ℕ 下标不能为负: {i}")
            if self.truncation is not None and i >= self.truncation:
                raise UsageError(f"坐标 {i} 超出截断长度 {self.truncation}")
        return a

    def elements(self) -> Iterator[tuple]:
        m, k = self.modulus, self.truncation
        for values in itertools.product(range(m), repeat=k):
            yield tuple((i, v) for i, v in enumerate(values) if v)

    def build(self, tag: str, describe: str) -> AmbientGroup:
        finite = self.truncation is not None
        linear = LinearStructure(self.modulus, dict)
        return AmbientGroup(
            tag, (), self.mul, self.inv, describe,
            order=self.modulus ** self.truncation if finite else None,
            enumerate_elements=self.elements if finite else None,
            sampler=self.sample,
            formatter=_format_sparse,
            encoder=lambda a: [[i, v] for i, v in a],
            decoder=self.decode,
            linear=linear,
            structure=self)


class SemidirectStructure:
    """
    B ⋊_α ℤ_q，α(x)(a) = e^x·a，元素为 (a, x)

    (a,x)(b,y) = (a + α(x)(b), x+y)
    """

    def __init__(self, base: AmbientGroup, actor_order: int, exponent: int):
        base_struct = base.structure
        if base.linear is None or not hasattr(base_struct, "scale"):
            raise ConstructionError("半直积的基群必须是 ℤ_m 坐标群（循环群或限制直和）")
        m = base.linear.modulus
        if actor_order < 1:
            raise ConstructionError(f"作用群阶必须为正: {actor_order}")
        if math.gcd(exponent, m) != 1:
            raise ConstructionError(f"指数 {exponent} 与 {m} 不互素，α(x) 不是自同构")
        if pow(exponent, actor_order, m) != 1 % m:
            raise ConstructionError(
                f"{exponent}^{actor_order} ≢ 1 (mod {m})，作用在 ℤ_{actor_order} 上无定义")
        self.base = base
        self.base_struct = base_struct
        self.modulus = m
        self.actor_order = actor_order
        self.exponent = exponent
        self.powers = [pow(exponent, x, m) for x in range(actor_order)]
        self.identity = (base.identity, 0)

    def act(self, x: int, a: Any) -> Any:
        return self.base_struct.scale(a, self.powers[x % self.actor_order])

    def mul(self, p: tuple, q: tuple) -> tuple:
        a, x = p
        b, y = q
        return (self.base.multiply(a, self.act(x, b)), (x + y) % self.actor_order)

    def inv(self, p: tuple) -> tuple:
        a, x = p
        q = self.actor_order
        back = self.powers[(q - x) % q]
        return (self.base_struct.scale(a, (-back) % self.modulus), (-x) % q)

    def sample(self, rng: random.Random) -> tuple:
        return (self.base.sample(rng), rng.randrange(self.actor_order))

    def decode(self, value: Any) -> tuple:
        if not isinstance(value, (list, tuple)) or len(value) != 2:
            raise UsageError(f"半直积元素应为 [基元素, x]: {value}")
        return (self.base.decode(value[0]), int(value[1]) % self.actor_order)

    def elements(self) -> Iterator[tuple]:
        for a in self.base.elements():
            for x in range(self.actor_order):
                yield (a, x)

    def build(self, tag: str, describe: str) -> AmbientGroup:
        finite = self.base.is_finite
        base = self.base
        return AmbientGroup(
            tag, self.identity, self.mul, self.inv, describe,
            order=base.order * self.actor_order if finite else None,
            enumerate_elements=self.elements if finite else None,
            sampler=self.sample,
            sort_key=lambda p: (p[1], base.sort_key(p[0])),
            formatter=lambda p: f"({base.format(p[0])}, {p[1]})",
            encoder=lambda p: [base.encode(p[0]), p[1]],
            decoder=self.decode,
            abelian=self.powers == [1] * self.actor_order or self.actor_order == 1,
            structure=self)


class ProductStructure:
    """直积 G_1 × … × G_r，元素为分量元组"""

    def __init__(self, components: List[AmbientGroup]):
        if not components:
            raise ConstructionError("直积至少需要一个分量")
        self.components = components
        self.identity = tuple(c.identity for c in components)

    def mul(self, p: tuple, q: tuple) -> tuple:
        return tuple(c.multiply(a, b) for c, a, b in zip(self.components, p, q))

    def inv(self, p: tuple) -> tuple:
        return tuple(c.invert(a) for c, a in zip(self.components, p))

    def embed(self, index: int, payload: Any) -> tuple:
        out = list(self.identity)
        out[index] = payload
        return tuple(out)

    def sample(self, rng: random.Random) -> tuple:
        return tuple(c.sample(rng) for c in self.components)

    def decode(self, value: Any) -> tuple:
        if not isinstance(value, (list, tuple)) or len(value) != len(self.components):
            raise UsageError(f"直积元素应为 {len(self.components)} 个分量的列表: {value}")
        return tuple(c.decode(v) for c, v in zip(self.components, value))

    def elements(self) -> Iterator[tuple]:
        return itertools.product(*(list(c.elements()) for c in self.components))

    def build(self, tag: str, describe: str) -> AmbientGroup:
        comps = self.components
        finite = all(c.is_finite for c in comps)
        return AmbientGroup(
            tag, self.identity, self.mul, self.inv, describe,
            order=math.prod(c.order for c in comps) if finite else None,
            enumerate_elements=self.elements if finite else None,
            sampler=self.sample,
            sort_key=lambda p: tuple(c.sort_key(a) for c, a in zip(comps, p)),
            formatter=lambda p: "(" + ", ".join(c.format(a) for c, a in zip(comps, p)) + ")",
            encoder=lambda p: [c.encode(a) for c, a in zip(comps, p)],
            decoder=self.decode,
            abelian=all(c.abelian for c in comps),
            structure=self)


class LamplighterStructure:
    """
    灯夫群 ℤ_m^(ℤ) ⋊ ℤ，元素为 (f, k)

    (f,k)(g,l) = (f + shift_k(g), k+l)
    """

    def __init__(self, modulus: int = 2, sample_radius: int = 3):
        if modulus < 2:
            raise ConstructionError(f"灯的状态数至少为 2: {modulus}")
        self.modulus = modulus
        self.sample_radius = sample_radius
        self.identity = ((), 0)

    def mul(self, p: tuple, q: tuple) -> tuple:
        f, k = p
        g, l = q
        return (sparse_add(f, sparse_shift(g, k), self.modulus), k + l)

    def inv(self, p: tuple) -> tuple:
        f, k = p
        return (sparse_neg(sparse_shift(f, -k), self.modulus), -k)

    def lamp(self, i: int = 0, value: int = 1) -> tuple:
        value %= self.modulus
        return (((i, value),) if value else (), 0)

    def move(self, k: int = 1) -> tuple:
        return ((), k)

    def sample(self, rng: random.Random) -> tuple:
        r = self.sample_radius
        f = tuple((i, v) for i in range(-r, r + 1) for v in [rng.randrange(self.modulus)] if v)
        return (f, rng.randint(-r, r))

    def decode(self, value: Any) -> tuple:
        if isinstance(value, dict):
            return (_decode_sparse(value.get("lamps", []), self.modulus), int(value.get("position", 0)))
        if not isinstance(value, (list, tuple)) or len(value) != 2:
            raise UsageError(f"灯夫群元素应为 [灯配置, 位置]: {value}")
        return (_decode_sparse(value[0], self.modulus), int(value[1]))

    def build(self, tag: str, describe: str) -> AmbientGroup:
        return AmbientGroup(
            tag, self.identity, self.mul, self.inv, describe,
            sampler=self.sample,
            sort_key=lambda p: (p[1], p[0]),
            formatter=lambda p: f"({_format_sparse(p[0])}, t^{p[1]})",
            encoder=lambda p: [[[i, v] for i, v in p[0]], p[1]],
            decoder=self.decode,
            structure=self)


# ---------------------------------------------------------------------------
# 四元数群乘法表
# ---------------------------------------------------------------------------

Q8_NAMES = ["1", "-1", "i", "-i", "j", "-j", "k", "-k"]

# 单位 (1,i,j,k) 乘法：(符号, 结果单位)
_UNIT_PRODUCT = {
    (0, 0): (1, 0), (0, 1): (1, 1), (0, 2): (1, 2), (0, 3): (1, 3),
    (1, 0): (1, 1), (1, 1): (-1, 0), (1, 2): (1, 3), (1, 3): (-1, 2),
    (2, 0): (1, 2), (2, 1): (-1, 3), (2, 2): (-1, 0), (2, 3): (1, 1),
    (3, 0): (1, 3), (3, 1): (1, 2), (3, 2): (-1, 1), (3, 3): (-1, 0),
}


def quaternion_table() -> List[List[int]]:
    """Q₈ 乘法表；元素编号 2u+s（u 为单位，s=1 表示负号）"""
    table = []
    for a in range(8):
        row = []
        ua, sa = divmod(a, 2)
        for b in range(8):
            ub, sb = divmod(b, 2)
            sign, u = _UNIT_PRODUCT[(ua, ub)]
            negative = (sa + sb + (1 if sign < 0 else 0)) % 2
            row.append(2 * u + negative)
        table.append(row)
    return table


CAYLEY_PRESETS = {
    "Q8": (quaternion_table, Q8_NAMES),
}


def cyclic_table(m: int) -> List[List[int]]:
    return [[(a + b) % m for b in range(m)] for a in range(m)]


# ---------------------------------------------------------------------------
# GroupSpec
# ---------------------------------------------------------------------------

@dataclass
class GroupSpec:
    """群的构造说明（JSON 可序列化）"""
    variant: str
    params: Dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"variant": self.variant}
        for key, value in self.params.items():
            if isinstance(value, GroupSpec):
                data[key] = value.to_json()
            elif isinstance(value, list) and value and isinstance(value[0], GroupSpec):
                data[key] = [v.to_json() for v in value]
            else:
                data[key] = value
        return data

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "GroupSpec":
        if not isinstance(data, dict) or "variant" not in data:
            raise UsageError(f"GroupSpec 缺少 variant 字段: {data}")
        variant = data["variant"]
        if variant not in VARIANTS:
            raise UsageError(f"未知的群变体: {variant}（可选: {', '.join(VARIANTS)}）")
        params = {k: v for k, v in data.items() if k not in ("variant", "schema")}
        if variant == "semidirect":
            params["base"] = cls.from_json(params.get("base", {}))
        if variant == "direct_product":
            params["components"] = [cls.from_json(c) for c in params.get("components", [])]
        return cls(variant, params)

    @classmethod
    def loads(cls, text: str) -> "GroupSpec":
        return cls.from_json(json.loads(text))

    def tag(self) -> str:
        p = self.params
        v = self.variant
        if v == "cayley_table":
            if p.get("preset"):
                return p["preset"]
            key = json.dumps([p.get("table"), p.get("names")], sort_keys=True)
            digest = int(hashlib.sha1(key.encode("utf-8")).hexdigest()[:8], 16) % 10 ** 8
            return f"Table{len(p.get('table', []))}#{digest}"
        if v == "cyclic":
            return f"Z{p.get('modulus')}"
        if v == "finitary_permutations":
            return f"S{p['bound']}" if p.get("bound") else "S_fin"
        if v == "restricted_direct_sum":
            if p.get("truncation"):
                return f"Z{p.get('modulus')}^{p['truncation']}"
            return f"Z{p.get('modulus')}^({p.get('index', 'N')})"
        if v == "semidirect":
            return f"{p['base'].tag()}⋊[{p.get('exponent')}]Z{p.get('actor_order')}"
        if v == "direct_product":
            return "×".join(c.tag() for c in p["components"])
        return f"Z{p.get('modulus', 2)}≀Z"


def _require_int(params: Dict[str, Any], key: str, default: Optional[int] = None) -> int:
    value = params.get(key, default)
    if value is None:
        raise UsageError(f"缺少参数 {key}")
    try:
        return int(value)
    except (TypeError, ValueError):
        raise UsageError(f"参数 {key} 必须是整数: {value}")


_BUILT: Dict[str, AmbientGroup] = {}


def build_group(spec: GroupSpec) -> AmbientGroup:
    """
    按 GroupSpec 构造群预言机（同一 tag 只构造一次）

    Raises:
        ConstructionError: 乘法表不是群或作用不是自同构
        UsageError: 参数缺失或类型错误
    """
    tag = spec.tag()
    if tag in _BUILT:
        return _BUILT[tag]
    p = spec.params
    v = spec.variant
    if v == "cayley_table":
        if p.get("preset"):
            if p["preset"] not in CAYLEY_PRESETS:
                raise UsageError(f"未知的乘法表预设: {p['preset']}")
            make_table, names = CAYLEY_PRESETS[p["preset"]]
            structure = TableStructure(make_table(), names)
        else:
            structure = TableStructure(p.get("table") or [], p.get("names"))
        describe = f"Cayley 表群 {tag}（阶 {structure.n}）"
    elif v == "cyclic":
        structure = CyclicStructure(_require_int(p, "modulus"))
        describe = f"循环群 ℤ_{structure.modulus}"
    elif v == "finitary_permutations":
        bound = _require_int(p, "bound") if p.get("bound") else None
        structure = PermutationStructure(bound)
        describe = f"对称群 𝒮_{bound}" if bound else "有限置换群 𝒮_fin(ℕ₊)"
    elif v == "restricted_direct_sum":
        truncation = p.get("truncation")
        structure = SparseSumStructure(_require_int(p, "modulus"), p.get("index", "N"),
                                       int(truncation) if truncation else None)
        describe = f"限制直和 {tag}"
    elif v == "semidirect":
        base = build_group(p["base"])
        structure = SemidirectStructure(base, _require_int(p, "actor_order"),
                                        _require_int(p, "exponent"))
        describe = f"半直积 {tag}，α(x)(a) = {structure.exponent}^x·a"
    elif v == "direct_product":
        structure = ProductStructure([build_group(c) for c in p["components"]])
        describe = f"直积 {tag}"
    elif v == "lamplighter":
        structure = LamplighterStructure(_require_int(p, "modulus", 2))
        describe = f"灯夫群 ℤ_{structure.modulus}^(ℤ)⋊ℤ"
    else:
        raise UsageError(f"未知的群变体: {v}")
    group = structure.build(tag, describe)
    _BUILT[tag] = group
    return group


# ---------------------------------------------------------------------------
# 目录
# ---------------------------------------------------------------------------

@dataclass
class CatalogEntry:
    """目录条目：名称、构造说明、已知类别（图 (1)–(5)）与出处"""
    name: str
    spec: GroupSpec
    known_class: FrozenSet[str]
    notes: str = ""

    def group(self) -> AmbientGroup:
        return build_group(self.spec)

    @property
    def locally_finite(self) -> bool:
        return LOCALLY_FINITE in self.known_class


def _sum_spec(m: int, index: str = "N", truncation: Optional[int] = None) -> GroupSpec:
    params: Dict[str, Any] = {"modulus": m, "index": index}
    if truncation:
        params["truncation"] = truncation
    return GroupSpec("restricted_direct_sum", params)


def h_spec(k: Optional[int] = None) -> GroupSpec:
    """H = ℤ₉^ℕ ⋊_α ℤ₃，α(x)(a) = 4^x a；k 给定时为截断 H_k"""
    return GroupSpec("semidirect", {"base": _sum_spec(9, "N", k), "actor_order": 3, "exponent": 4})


S3_SPEC = GroupSpec("finitary_permutations", {"bound": 3})
Q8_SPEC = GroupSpec("cayley_table", {"preset": "Q8"})
SFIN_SPEC = GroupSpec("finitary_permutations", {})
LAMPLIGHTER_SPEC = GroupSpec("lamplighter", {"modulus": 2})

_QH = frozenset({LOCALLY_FINITE, FINITELY_QUASIHAMILTONIAN, QUASIHAMILTONIAN})


def catalog() -> List[CatalogEntry]:
    """全部目录条目（顺序固定）"""
    entries = [
        CatalogEntry("Q8", Q8_SPEC, ALL_CLASSES - {TORSION_ABELIAN},
                     "四元数群：非交换、拟哈密顿的挠 FC 群"),
        CatalogEntry("S3", S3_SPEC,
                     frozenset({LOCALLY_FINITE, FINITELY_QUASIHAMILTONIAN, TORSION_FC}),
                     "有限群都是挠 FC 群；S₃ 不是拟哈密顿的"),
        CatalogEntry("H", h_spec(), _QH,
                     "ℤ₉^ℕ⋊ℤ₃：拟哈密顿、局部有限，但不是 FC 群"),
    ]
    for k in (1, 2):
        entries.append(CatalogEntry(f"H{k}", h_spec(k), _QH,
                                    f"H 的截断 ℤ₉^{k}⋊ℤ₃（子群，标签沿用 H）"))
    entries.append(CatalogEntry("S3xH", GroupSpec("direct_product", {"components": [S3_SPEC, h_spec()]}),
                                frozenset({LOCALLY_FINITE, FINITELY_QUASIHAMILTONIAN}),
                                "S₃×H：有限拟哈密顿局部有限，既非 FC 也非拟哈密顿"))
    for k in (1, 2):
        entries.append(CatalogEntry(
            f"S3xH{k}", GroupSpec("direct_product", {"components": [S3_SPEC, h_spec(k)]}),
            frozenset({LOCALLY_FINITE, FINITELY_QUASIHAMILTONIAN}),
            f"S₃×H_{k}（标签沿用 S₃×H）"))
    entries.append(CatalogEntry("Sfin", SFIN_SPEC, frozenset({LOCALLY_FINITE}),
                                "有限置换群：局部有限但不是有限拟哈密顿的"))
    for m in (2, 3, 4, 6):
        for index in ("N", "Z"):
            entries.append(CatalogEntry(f"Z{m}^({index})", _sum_spec(m, index), ALL_CLASSES,
                                        "挠交换群属于图中每一类"))
    for m in (8, 12):
        entries.append(CatalogEntry(f"QZ[{m}]", GroupSpec("cyclic", {"modulus": m}), ALL_CLASSES,
                                    f"ℚ/ℤ 的 {m}-挠截断（循环群）"))
    entries.append(CatalogEntry("lamplighter", LAMPLIGHTER_SPEC, frozenset(),
                                "ℤ₂^(ℤ)⋊ℤ：可解、非局部有限，加法定理的反例"))
    return entries


def catalog_entry(name: str) -> CatalogEntry:
    for entry in catalog():
        if entry.name == name:
            return entry
    raise UsageError(f"目录中没有群 {name}")


# ---------------------------------------------------------------------------
# 共尾有限子群族
# ---------------------------------------------------------------------------

def chain_generators(group: AmbientGroup, size_bound: int) -> Iterator[Tuple[List[Any], int]]:
    """按变体给出 (生成元, 阶) 的递增链"""
    s = group.structure
    if isinstance(s, (TableStructure, CyclicStructure)):
        gens = [1] if isinstance(s, CyclicStructure) else list(group.elements())
        if group.order <= size_bound:
            yield gens, group.order
        return
    if isinstance(s, PermutationStructure):
        n = 2
        while s.bound is None or n <= s.bound:
            order = math.factorial(n)
            if order > size_bound:
                return
            yield [perm_from_cycles([[1, 2]]), perm_from_cycles([list(range(1, n + 1))])], order
            n += 1
        return
    if isinstance(s, SparseSumStructure):
        k = 1
        while True:
            if s.index == "N":
                if s.truncation is not None and k > s.truncation:
                    return
                indices = list(range(k))
            else:
                indices = list(range(-(k - 1), k))
            order = s.modulus ** len(indices)
            if order > size_bound:
                return
            yield [s.unit(i) for i in indices], order
            k += 1
    if isinstance(s, SemidirectStructure):
        actor = (s.base.identity, 1)
        for gens, order in chain_generators(s.base, size_bound // s.actor_order):
            yield [(g, 0) for g in gens] + [actor], order * s.actor_order
        return
    if isinstance(s, ProductStructure):
        chains = [list(chain_generators(c, size_bound)) for c in s.components]
        if any(not c for c in chains):
            return
        length = max(len(c) for c in chains)
        for j in range(length):
            picks = [c[min(j, len(c) - 1)] for c in chains]
            order = math.prod(o for _, o in picks)
            if order > size_bound:
                return
            gens = [s.embed(i, g) for i, (comp_gens, _) in enumerate(picks) for g in comp_gens]
            yield gens, order
        return
    raise UnsupportedError(f"群 {group.tag} 没有共尾有限子群链（不是局部有限的）")


def subgroup_chain(group: AmbientGroup, size_bound: int) -> Iterator[FiniteSubgroup]:
    """群的递增有限子群链，每个成员由生成元闭包得到（因此已验证封闭）"""
    for gens, order in chain_generators(group, size_bound):
        member = generate_payloads(group, gens, max_size=order)
        yield FiniteSubgroup(group, member.payloads, gens, verified_closed=True)


def finite_subgroup_family(entry: CatalogEntry, size_bound: int) -> Iterator[FiniteSubgroup]:
    """
    目录条目的共尾有限子群族

    Args:
        entry: 目录条目（必须带 locally_finite 标签）
        size_bound: 成员阶上限

    Raises:
        UnsupportedError: 条目不是局部有限的
    """
    if not entry.locally_finite:
        raise UnsupportedError(f"{entry.name} 不是局部有限的，没有有限子群共尾族")
    return subgroup_chain(entry.group(), size_bound)
