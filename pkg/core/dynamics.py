"""
动力系统 - 自同态、正规子群说明、商系统与轨道引擎 T_n(φ,X)

轨道按 T_{n+1} = T_n · φ^n(X) 增量计算并缓存 φ^k(X)；
ℤ_m 坐标群上以子群为底的轨道改用 core.linear_count 的精确计数。
"""
import json
import os
import random
import time
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterable, Iterator, List, Optional, Tuple

from core.errors import (BudgetExceededError, InvarianceError, PreconditionError,
                         SpecificationError, UnsupportedError, UsageError)
from core.group_core import (DEFAULT_MAX_SIZE, AmbientGroup, FiniteSubgroup, FiniteSubset,
                             closure_witness, count_canonical, count_cosets, generate_payloads,
                             image_set, is_subgroup, multiply_sets, product_payloads)
from core.groups_catalog import (CatalogEntry, CyclicStructure, LamplighterStructure,
                                 PermutationStructure, ProductStructure, SemidirectStructure,
                                 SparseSumStructure, chain_generators, subgroup_chain)
from core.linear_count import SubgroupOrderCounter
from utils.log_helpers import log

EXHAUSTIVE_LIMIT = 4096
DEFAULT_SAMPLES = 10 ** 4

CERT_EXHAUSTIVE = "exhaustive"
CERT_TRUNCATION = "exhaustive_truncation"
CERT_SAMPLED = "sampled"
CERT_STRUCTURAL = "structural"

KIND_IDENTITY = "identity"
KIND_TRIVIAL = "trivial"
KIND_GENERAL = "general"


@dataclass
class Certification:
    """检验记录：等级与检查次数"""
    level: str
    checks: int
    subject: str = ""

    def to_json(self) -> Dict[str, Any]:
        return {"level": self.level, "checks": self.checks, "subject": self.subject}


# ---------------------------------------------------------------------------
# 自同态
# ---------------------------------------------------------------------------

@dataclass
class Endomorphism:
    """
    群自同态 φ

    Args:
        domain: 所在的群
        fn: payload 映射
        name: 可读名称
        kind: identity / trivial / general
        subgroup: restrict() 之后收窄到的正规子群
    """
    domain: AmbientGroup
    fn: Callable[[Any], Any]
    name: str
    kind: str = KIND_GENERAL
    subgroup: Optional["NormalSubgroupSpec"] = None

    def __call__(self, payload: Any) -> Any:
        return self.fn(payload)

    @property
    def is_identity(self) -> bool:
        return self.kind == KIND_IDENTITY

    @property
    def is_trivial(self) -> bool:
        return self.kind == KIND_TRIVIAL

    def image(self, X: FiniteSubset) -> FiniteSubset:
        return image_set(X, self.fn)

    def compose(self, other: "Endomorphism") -> "Endomorphism":
        """self∘other"""
        if self.is_identity:
            return other
        if other.is_identity:
            return self
        if self.is_trivial or other.is_trivial:
            return trivial_endomorphism(self.domain)
        f, g = self.fn, other.fn
        return Endomorphism(self.domain, lambda x: f(g(x)), f"{self.name}∘{other.name}")


def identity_endomorphism(group: AmbientGroup) -> Endomorphism:
    return Endomorphism(group, lambda x: x, "id", KIND_IDENTITY)


def trivial_endomorphism(group: AmbientGroup) -> Endomorphism:
    e = group.identity
    return Endomorphism(group, lambda x: e, "1", KIND_TRIVIAL)


def endo_power(phi: Endomorphism, k: int) -> Endomorphism:
    """φ^k，φ^0 为恒等"""
    if k < 0:
        raise UsageError(f"幂次必须非负: {k}")
    if k == 0 or phi.is_identity:
        return identity_endomorphism(phi.domain)
    if k == 1 or phi.is_trivial:
        return phi
    fn = phi.fn

    def power(x):
        for _ in range(k):
            x = fn(x)
        return x

    return Endomorphism(phi.domain, power, f"{phi.name}^{k}")


def _as_int(value: Any, what: str) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise UsageError(f"{what} 必须是整数: {value!r}")


def _spec_field(spec: Dict[str, Any], key: str) -> Any:
    if key not in spec:
        raise UsageError(f"说明缺少字段 {key}: {spec}")
    return spec[key]


def parse_endo_text(text: str) -> Dict[str, Any]:
    """
    解析命令行给出的自同态说明

    支持 JSON 文本、.json 文件路径，以及简写:
    identity, trivial, shift[:k], scale:c, inner:<元素>, catalog:<名称>
    """
    text = text.strip()
    try:
        if text.startswith("{"):
            return json.loads(text)
        if text.endswith(".json") and os.path.exists(text):
            with open(text, 'r', encoding='utf-8') as f:
                return json.load(f)
    except (OSError, ValueError) as e:
        raise UsageError(f"无法读取自同态说明 {text}: {e}")
    name, _, arg = text.partition(":")
    name = name.strip().lower()
    if name in ("identity", "id"):
        return {"kind": "identity"}
    if name == "trivial":
        return {"kind": "trivial"}
    if name == "shift":
        return {"kind": "shift", "by": _as_int(arg, "平移步长") if arg else 1}
    if name == "scale":
        return {"kind": "scale", "factor": _as_int(arg, "数乘因子")}
    if name == "inner":
        try:
            element = json.loads(arg)
        except json.JSONDecodeError:
            element = arg
        return {"kind": "inner", "element": element}
    if name == "catalog":
        return {"kind": "catalog", "name": arg}
    raise UsageError(f"无法解析自同态说明: {text}")


def _q8_outer_images() -> Dict[str, str]:
    """i→j→k→i 的 Q₈ 外自同构"""
    cycle = {"i": "j", "j": "k", "k": "i"}
    images = {"1": "1", "-1": "-1"}
    for src, dst in cycle.items():
        images[src] = dst
        images["-" + src] = "-" + dst
    return images


CATALOG_MAPS = {
    "q8_outer": _q8_outer_images,
}


def _map_endomorphism(group: AmbientGroup, images: Any, name: str) -> Endomorphism:
    if not group.is_finite:
        raise UnsupportedError("显式映射只适用于有限群")
    pairs = images.items() if isinstance(images, dict) else images
    table = {group.decode(src): group.decode(dst) for src, dst in pairs}
    missing = [x for x in group.elements() if x not in table]
    if missing:
        raise UsageError(f"显式映射缺少元素: {group.format(missing[0])}")
    return Endomorphism(group, table.__getitem__, name)


def endo_from_spec(group: AmbientGroup, spec: Any) -> Endomorphism:
    """
    由 JSON 说明（或简写文本）构造自同态

    Raises:
        UsageError: 说明无法解析
        UnsupportedError: 该群不支持此种映射
    """
    if isinstance(spec, str):
        spec = parse_endo_text(spec)
    if not isinstance(spec, dict):
        raise UsageError(f"自同态说明必须是对象: {spec!r}")
    kind = spec.get("kind")
    s = group.structure
    if kind == "identity":
        return identity_endomorphism(group)
    if kind == "trivial":
        return trivial_endomorphism(group)
    if kind == "shift":
        by = _as_int(spec.get("by", 1), "平移步长")
        if isinstance(s, SparseSumStructure):
            return Endomorphism(group, lambda a: s.shift(a, by), f"β^{by}" if by != 1 else "β")
        if isinstance(s, SemidirectStructure) and isinstance(s.base_struct, SparseSumStructure):
            base = s.base_struct
            return Endomorphism(group, lambda p: (base.shift(p[0], by), p[1]), "β×id")
        raise UnsupportedError(f"群 {group.tag} 上没有坐标平移")
    if kind == "scale":
        c = _as_int(_spec_field(spec, "factor"), "数乘因子")
        if isinstance(s, (SparseSumStructure, CyclicStructure)):
            return Endomorphism(group, lambda a: s.scale(a, c), f"·{c}")
        if isinstance(s, SemidirectStructure):
            return Endomorphism(group, lambda p: (s.base_struct.scale(p[0], c), p[1]), f"·{c}×id")
        raise UnsupportedError(f"群 {group.tag} 上没有数乘")
    if kind == "inner":
        g = group.decode(_spec_field(spec, "element"))
        return Endomorphism(group, lambda x: group.conjugate(g, x), f"inn({group.format(g)})")
    if kind == "compose":
        parts = [endo_from_spec(group, p) for p in spec.get("parts", [])]
        if not parts:
            raise UsageError("compose 至少需要一个部分")
        result = parts[-1]
        for part in reversed(parts[:-1]):
            result = part.compose(result)
        return result
    if kind == "power":
        return endo_power(endo_from_spec(group, _spec_field(spec, "base")),
                          _as_int(spec.get("k", 1), "幂次"))
    if kind == "product":
        if not isinstance(s, ProductStructure):
            raise UnsupportedError(f"群 {group.tag} 不是直积")
        comps = spec.get("components", [])
        if len(comps) != len(s.components):
            raise UsageError(f"直积自同态需要 {len(s.components)} 个分量")
        maps = [endo_from_spec(c, sub) for c, sub in zip(s.components, comps)]
        if all(m.is_identity for m in maps):
            return identity_endomorphism(group)
        fns = [m.fn for m in maps]
        name = "×".join(m.name for m in maps)
        return Endomorphism(group, lambda p: tuple(f(a) for f, a in zip(fns, p)), name)
    if kind == "map":
        return _map_endomorphism(group, spec.get("images", {}), spec.get("name", "map"))
    if kind == "catalog":
        name = spec.get("name")
        if name not in CATALOG_MAPS:
            raise UsageError(f"未知的目录映射: {name}")
        return _map_endomorphism(group, CATALOG_MAPS[name](), name)
    raise UsageError(f"未知的自同态类型: {kind}")


def catalog_endomorphism_specs(entry: CatalogEntry) -> Dict[str, Dict[str, Any]]:
    """目录条目上的常用自同态说明"""
    specs: Dict[str, Dict[str, Any]] = {
        "identity": {"kind": "identity"},
        "trivial": {"kind": "trivial"},
    }
    s = entry.group().structure
    if entry.name == "Q8":
        specs["inner_i"] = {"kind": "inner", "element": "i"}
        specs["inner_j"] = {"kind": "inner", "element": "j"}
        specs["outer_ijk"] = {"kind": "catalog", "name": "q8_outer"}
    elif isinstance(s, PermutationStructure):
        specs["inner_123"] = {"kind": "inner", "element": "(1 2 3)"}
        specs["inner_12"] = {"kind": "inner", "element": "(1 2)"}
    elif isinstance(s, SemidirectStructure):
        specs["base_shift"] = {"kind": "shift"}
        specs["base_scale_2"] = {"kind": "scale", "factor": 2}
        specs["base_scale_3"] = {"kind": "scale", "factor": 3}
        specs["inner_actor"] = {"kind": "inner", "element": [[], 1]}
        specs["inner_e0"] = {"kind": "inner", "element": [[[0, 1]], 0]}
    elif isinstance(s, SparseSumStructure):
        specs["shift"] = {"kind": "shift"}
        if s.index == "Z":
            specs["shift_back"] = {"kind": "shift", "by": -1}
        if s.modulus > 2:
            specs["scale_2"] = {"kind": "scale", "factor": 2}
        specs["shift_scale"] = {"kind": "compose", "parts": [{"kind": "shift"},
                                                             {"kind": "scale", "factor": s.modulus - 1}]}
    elif isinstance(s, CyclicStructure):
        for c in (2, 3, s.modulus - 1):
            specs[f"scale_{c}"] = {"kind": "scale", "factor": c}
    elif isinstance(s, ProductStructure):
        specs["inner_x_shift"] = {"kind": "product", "components": [
            {"kind": "inner", "element": "(1 2 3)"}, {"kind": "shift"}]}
        specs["id_x_scale"] = {"kind": "product", "components": [
            {"kind": "identity"}, {"kind": "scale", "factor": 2}]}
    elif isinstance(s, LamplighterStructure):
        specs["inner_move"] = {"kind": "inner", "element": [[], 1]}
    return specs


def catalog_endomorphisms(entry: CatalogEntry) -> Dict[str, Endomorphism]:
    group = entry.group()
    return {name: endo_from_spec(group, spec)
            for name, spec in catalog_endomorphism_specs(entry).items()}


def check_homomorphism(phi: Endomorphism, samples: int = DEFAULT_SAMPLES,
                       seed: int = 0) -> Certification:
    """
    检验 φ(1)=1 与 φ(xy)=φ(x)φ(y)

    有限群（≤ 4096 个元素）对全部 x 与一组生成元 s 检验 φ(xs)=φ(x)φ(s)，
    其余情况随机抽样。

    Raises:
        SpecificationError: 找到反例
    """
    group = phi.domain
    mul, fn = group.multiply, phi.fn
    if fn(group.identity) != group.identity:
        raise SpecificationError(f"{phi.name} 不保持单位元")
    checks = 0
    if group.is_finite and group.order <= EXHAUSTIVE_LIMIT:
        elements = list(group.elements())
        gens = generate_payloads(group, elements, max_size=group.order).generators or ()
        for x in elements:
            fx = fn(x)
            for s in gens:
                checks += 1
                if fn(mul(x, s)) != mul(fx, fn(s)):
                    raise SpecificationError(
                        f"{phi.name} 不是同态: x={group.format(x)}, y={group.format(s)}")
        return Certification(CERT_EXHAUSTIVE, checks, phi.name)
    rng = random.Random(seed)
    for _ in range(samples):
        x, y = group.sample(rng), group.sample(rng)
        checks += 1
        if fn(mul(x, y)) != mul(fn(x), fn(y)):
            raise SpecificationError(f"{phi.name} 不是同态: x={group.format(x)}, y={group.format(y)}")
    return Certification(CERT_SAMPLED, checks, phi.name)


# ---------------------------------------------------------------------------
# 正规子群
# ---------------------------------------------------------------------------

@dataclass
class NormalSubgroupSpec:
    """
    正规子群 H 的说明

    Args:
        name: 名称（也用作商群标签）
        group: 所在群 G
        membership: g -> g∈H
        canonicalize: g -> gH 的代表元；None 表示无法构造商
        truncations: size_bound -> H 内的有限子群递增链
        linear_divisor: H = d·G（ℤ_m 坐标群），商的坐标为 mod d
        elements: H 有限时的全部元素
        kind: trivial / whole / multiples / base / factor / center / explicit
    """
    name: str
    group: AmbientGroup
    membership: Callable[[Any], bool]
    canonicalize: Optional[Callable[[Any], Any]] = None
    truncations: Optional[Callable[[int], Iterator[FiniteSubgroup]]] = None
    linear_divisor: Optional[int] = None
    elements: Optional[frozenset] = None
    kind: str = "explicit"

    @property
    def is_trivial(self) -> bool:
        return self.kind == "trivial"

    @property
    def is_whole(self) -> bool:
        return self.kind == "whole"

    def as_subgroup(self) -> FiniteSubgroup:
        if self.elements is None:
            raise UnsupportedError(f"正规子群 {self.name} 不是有限的")
        return generate_payloads(self.group, self.elements, max_size=len(self.elements))


def trivial_subgroup(group: AmbientGroup) -> NormalSubgroupSpec:
    e = group.identity
    return NormalSubgroupSpec(
        "1", group, lambda g: g == e, lambda g: g,
        truncations=lambda bound: iter([generate_payloads(group, [e], 1)]),
        linear_divisor=group.linear.modulus if group.linear else None,
        elements=frozenset({e}), kind="trivial")


def whole_group(group: AmbientGroup) -> NormalSubgroupSpec:
    e = group.identity
    elements = frozenset(group.elements()) if group.is_finite and group.order <= EXHAUSTIVE_LIMIT else None
    return NormalSubgroupSpec(
        "G", group, lambda g: True, lambda g: e,
        truncations=lambda bound: subgroup_chain(group, bound),
        linear_divisor=1 if group.linear else None,
        elements=elements, kind="whole")


def multiples_subgroup(group: AmbientGroup, divisor: int) -> NormalSubgroupSpec:
    """ℤ_m 坐标群中坐标全为 d 的倍数的子群 dG（d | m）"""
    s = group.structure
    if group.linear is None or not isinstance(s, (CyclicStructure, SparseSumStructure)):
        raise UnsupportedError(f"群 {group.tag} 没有 ℤ_m 坐标")
    m = group.linear.modulus
    if divisor < 1 or m % divisor:
        raise UsageError(f"{divisor} 不整除 {m}")
    d = divisor
    coords = group.linear.coordinates

    def membership(g):
        return all(v % d == 0 for v in coords(g).values())

    if isinstance(s, CyclicStructure):
        def canonicalize(a):
            return a % d
    else:
        def canonicalize(a):
            return tuple((i, v % d) for i, v in a if v % d)

    def truncations(bound):
        for gens, _ in chain_generators(group, bound * d):
            scaled = [s.scale(g, d) for g in gens]
            yield generate_payloads(group, scaled, max_size=bound)

    return NormalSubgroupSpec(f"{d}G", group, membership, canonicalize, truncations,
                              linear_divisor=d, kind="multiples")


def lamplighter_base(group: AmbientGroup) -> NormalSubgroupSpec:
    """灯夫群的底 ℤ_m^(ℤ)，商为 ℤ（代表元 (0,k)）"""
    s = group.structure
    if not isinstance(s, LamplighterStructure):
        raise UnsupportedError(f"群 {group.tag} 不是灯夫群")

    def truncations(bound):
        j = 1
        while s.modulus ** (2 * j - 1) <= bound:
            gens = [s.lamp(i) for i in range(-(j - 1), j)]
            yield generate_payloads(group, gens, max_size=bound)
            j += 1

    return NormalSubgroupSpec("base", group, lambda p: p[1] == 0, lambda p: ((), p[1]),
                              truncations, kind="base")


def semidirect_base(group: AmbientGroup) -> NormalSubgroupSpec:
    """半直积 B⋊ℤ_q 的底 B，商为 ℤ_q"""
    s = group.structure
    if not isinstance(s, SemidirectStructure):
        raise UnsupportedError(f"群 {group.tag} 不是半直积")
    base_identity = s.base.identity

    def truncations(bound):
        for gens, _ in chain_generators(s.base, bound):
            yield generate_payloads(group, [(g, 0) for g in gens], max_size=bound)

    elements = None
    if s.base.is_finite and s.base.order <= EXHAUSTIVE_LIMIT:
        elements = frozenset((a, 0) for a in s.base.elements())
    return NormalSubgroupSpec("base", group, lambda p: p[1] == 0,
                              lambda p: (base_identity, p[1]), truncations,
                              elements=elements, kind="base")


def factor_subgroup(group: AmbientGroup, index: int) -> NormalSubgroupSpec:
    """直积的第 index 个因子"""
    s = group.structure
    if not isinstance(s, ProductStructure):
        raise UnsupportedError(f"群 {group.tag} 不是直积")
    if not 0 <= index < len(s.components):
        raise UsageError(f"因子下标越界: {index}")
    ident = s.identity

    def membership(p):
        return all(a == e for k, (a, e) in enumerate(zip(p, ident)) if k != index)

    def canonicalize(p):
        out = list(p)
        out[index] = ident[index]
        return tuple(out)

    def truncations(bound):
        for gens, _ in chain_generators(s.components[index], bound):
            yield generate_payloads(group, [s.embed(index, g) for g in gens], max_size=bound)

    component = s.components[index]
    elements = None
    if component.is_finite and component.order <= EXHAUSTIVE_LIMIT:
        elements = frozenset(s.embed(index, a) for a in component.elements())
    return NormalSubgroupSpec(f"factor{index}", group, membership, canonicalize, truncations,
                              elements=elements, kind="factor")


def _finite_normal(group: AmbientGroup, subgroup: FiniteSubgroup, name: str,
                   kind: str) -> NormalSubgroupSpec:
    payloads = subgroup.payloads
    mul = group.multiply
    ordered = subgroup.sorted_payloads()

    def canonicalize(g):
        return min((mul(g, h) for h in ordered), key=group.sort_key)

    return NormalSubgroupSpec(name, group, payloads.__contains__, canonicalize,
                              truncations=lambda bound: iter([subgroup]),
                              elements=payloads, kind=kind)


def center_subgroup(group: AmbientGroup) -> NormalSubgroupSpec:
    """有限群的中心"""
    if not group.is_finite or group.order > EXHAUSTIVE_LIMIT:
        raise UnsupportedError(f"只对 ≤ {EXHAUSTIVE_LIMIT} 阶的有限群计算中心")
    elements = list(group.elements())
    gens = generate_payloads(group, elements, max_size=group.order).generators or ()
    mul = group.multiply
    center = [z for z in elements if all(mul(z, g) == mul(g, z) for g in gens)]
    return _finite_normal(group, generate_payloads(group, center, max_size=len(center)),
                          "Z(G)", "center")


def explicit_subgroup(group: AmbientGroup, generators: Iterable[Any]) -> NormalSubgroupSpec:
    """由生成元给出的有限正规子群（正规性由 certify_normal 检验）"""
    subgroup = generate_payloads(group, generators, max_size=DEFAULT_MAX_SIZE)
    shown = ",".join(group.format(g) for g in (subgroup.generators or ()))
    return _finite_normal(group, subgroup, f"<{shown}>", "explicit")


def normal_subgroup_from_spec(group: AmbientGroup, spec: Any) -> NormalSubgroupSpec:
    """
    由 JSON 说明构造正规子群

    kind: trivial / whole / multiples(divisor) / lamplighter_base / semidirect_base /
    factor(index) / center / explicit(generators)
    """
    if isinstance(spec, str):
        spec = {"kind": spec}
    if not isinstance(spec, dict):
        raise UsageError(f"正规子群说明必须是对象: {spec!r}")
    kind = spec.get("kind")
    if kind == "trivial":
        return trivial_subgroup(group)
    if kind == "whole":
        return whole_group(group)
    if kind == "multiples":
        return multiples_subgroup(group, _as_int(_spec_field(spec, "divisor"), "divisor"))
    if kind == "lamplighter_base":
        return lamplighter_base(group)
    if kind == "semidirect_base":
        return semidirect_base(group)
    if kind == "factor":
        return factor_subgroup(group, _as_int(spec.get("index", 0), "index"))
    if kind == "center":
        return center_subgroup(group)
    if kind == "explicit":
        return explicit_subgroup(group, [group.decode(g) for g in spec.get("generators", [])])
    raise UsageError(f"未知的正规子群类型: {kind}")


def _member_pool(H: NormalSubgroupSpec, bound: int = EXHAUSTIVE_LIMIT) -> List[Any]:
    """H 中可用于抽样的元素（截断链中最大的一个成员）"""
    if H.elements is not None:
        return sorted(H.elements, key=H.group.sort_key)
    pool: List[Any] = []
    if H.truncations is not None:
        for member in H.truncations(bound):
            pool = member.sorted_payloads()
    return pool


def _sample_member(H: NormalSubgroupSpec, pool: List[Any], rng: random.Random) -> Any:
    """从截断池或 g⁻¹·rep(gH) 中取 H 的元素"""
    group = H.group
    if H.canonicalize is not None and (not pool or rng.random() < 0.5):
        g = group.sample(rng)
        return group.multiply(group.invert(g), H.canonicalize(g))
    if pool:
        return rng.choice(pool)
    return group.identity


def certify_normal(H: NormalSubgroupSpec, samples: int = DEFAULT_SAMPLES,
                   seed: int = 0) -> Certification:
    """
    检验 H 是正规子群且 canonicalize 与陪集一致

    Raises:
        SpecificationError: 子群性、正规性或代表元映射失败
    """
    group = H.group
    mul, inv = group.multiply, group.invert
    member, canon = H.membership, H.canonicalize
    if not member(group.identity):
        raise SpecificationError(f"{H.name} 不含单位元")

    def check_canonical(g, hs):
        rep = canon(g)
        if not member(mul(inv(g), rep)):
            raise SpecificationError(f"{H.name}: 代表元 {group.format(rep)} 不在 {group.format(g)}H 中")
        for h in hs:
            if canon(mul(g, h)) != rep:
                raise SpecificationError(
                    f"{H.name}: 代表元映射在陪集 {group.format(g)}H 上不一致")

    checks = 0
    if group.is_finite and group.order <= EXHAUSTIVE_LIMIT:
        elements = list(group.elements())
        inside = [x for x in elements if member(x)]
        sub = FiniteSubset(group, inside)
        if not is_subgroup(sub):
            raise SpecificationError(f"{H.name} 不是子群")
        g_gens = generate_payloads(group, elements, max_size=group.order).generators or ()
        h_gens = generate_payloads(group, inside, max_size=len(inside)).generators or ()
        for g in g_gens:
            for h in h_gens:
                checks += 1
                if not member(group.conjugate(g, h)):
                    raise SpecificationError(f"{H.name} 不是正规子群: g={group.format(g)}, h={group.format(h)}")
        if canon is not None:
            for g in elements:
                checks += 1
                check_canonical(g, h_gens)
        log("Dynamics", f"{H.name} 正规性穷举检验通过（{checks} 次）", "✓")
        return Certification(CERT_EXHAUSTIVE, checks, H.name)

    rng = random.Random(seed)
    pool = _member_pool(H)
    for _ in range(samples):
        g = group.sample(rng)
        h1, h2 = _sample_member(H, pool, rng), _sample_member(H, pool, rng)
        checks += 1
        if not member(mul(h1, h2)) or not member(inv(h1)):
            raise SpecificationError(f"{H.name} 不封闭: {group.format(h1)}, {group.format(h2)}")
        if not member(group.conjugate(g, h1)):
            raise SpecificationError(f"{H.name} 不是正规子群: g={group.format(g)}, h={group.format(h1)}")
        if canon is not None:
            check_canonical(g, (h1,))
    log("Dynamics", f"{H.name} 正规性抽样检验通过（{samples} 个样本）", "ℹ")
    return Certification(CERT_SAMPLED, checks, H.name)


def certify_invariance(phi: Endomorphism, H: NormalSubgroupSpec,
                       samples: int = DEFAULT_SAMPLES, seed: int = 0) -> Certification:
    """
    检验 φ(H) ⊆ H

    Raises:
        InvarianceError: 携带见证元素
    """
    group = H.group
    fn, member = phi.fn, H.membership
    checks = 0

    def check(h):
        nonlocal checks
        checks += 1
        if not member(fn(h)):
            raise InvarianceError(
                f"{H.name} 不是 {phi.name}-不变的: φ({group.format(h)}) = {group.format(fn(h))}",
                witness=group.format(h))

    if H.is_whole:
        return Certification(CERT_STRUCTURAL, 0, H.name)
    if H.elements is not None:
        for h in H.elements:
            check(h)
        return Certification(CERT_EXHAUSTIVE, checks, H.name)
    level = CERT_SAMPLED
    if H.truncations is not None:
        for truncation in H.truncations(EXHAUSTIVE_LIMIT):
            for h in (truncation.generators or truncation.payloads):
                check(h)
        level = CERT_TRUNCATION
    if H.canonicalize is not None:
        rng = random.Random(seed)
        for _ in range(samples):
            check(_sample_member(H, [], rng))
    log("Dynamics", f"{H.name} 的 {phi.name}-不变性检验通过（{level}，{checks} 次）", "ℹ")
    return Certification(level, checks, H.name)


def restrict(phi: Endomorphism, H: NormalSubgroupSpec,
             samples: int = DEFAULT_SAMPLES, seed: int = 0) -> Endomorphism:
    """
    φ↾_H

    Raises:
        InvarianceError: φ(H) ⊄ H
    """
    if H.is_whole:
        return phi
    if H.is_trivial:
        return Endomorphism(phi.domain, lambda x: phi.domain.identity, f"{phi.name}↾1",
                            KIND_TRIVIAL, subgroup=H)
    certify_invariance(phi, H, samples, seed)
    return Endomorphism(phi.domain, phi.fn, f"{phi.name}↾{H.name}", phi.kind, subgroup=H)


# ---------------------------------------------------------------------------
# 商系统
# ---------------------------------------------------------------------------

@dataclass
class QuotientSystem:
    """G/H 的代表元预言机、投影 π 与诱导自同态 φ̄"""
    quotient_group: AmbientGroup
    projection: Callable[[Any], Any]
    induced: Endomorphism
    normal: NormalSubgroupSpec

    def project(self, X: FiniteSubset) -> FiniteSubset:
        return image_set(X, self.projection, self.quotient_group)


def induce_quotient(phi: Endomorphism, H: NormalSubgroupSpec,
                    samples: int = DEFAULT_SAMPLES, seed: int = 0) -> QuotientSystem:
    """
    构造商系统 (G/H, π, φ̄)

    Raises:
        UnsupportedError: H 没有代表元映射
        InvarianceError: φ(H) ⊄ H
        SpecificationError: φ̄ 与代表元选择有关
    """
    group = phi.domain
    canon = H.canonicalize
    if canon is None:
        raise UnsupportedError(f"{H.name} 没有代表元映射，无法构造商群")
    certify_invariance(phi, H, samples, seed)
    mul, inv, fn = group.multiply, group.invert, phi.fn

    order = None
    enumerate_elements = None
    if group.is_finite and group.order <= EXHAUSTIVE_LIMIT:
        reps = sorted({canon(g) for g in group.elements()}, key=group.sort_key)
        order = len(reps)
        enumerate_elements = lambda: reps

    linear = None
    if H.linear_divisor is not None and group.linear is not None:
        linear = group.linear.reduced(H.linear_divisor)

    quotient = AmbientGroup(
        f"{group.tag}/{H.name}", canon(group.identity),
        lambda a, b: canon(mul(a, b)),
        lambda a: canon(inv(a)),
        f"商群 {group.tag}/{H.name}",
        order=order,
        enumerate_elements=enumerate_elements,
        sampler=lambda rng: canon(group.sample(rng)),
        sort_key=group.sort_key,
        formatter=lambda a: f"[{group.format(a)}]",
        encoder=group.encode,
        decoder=lambda v: canon(group.decode(v)),
        linear=linear,
        abelian=group.abelian)

    if H.is_whole:
        induced = trivial_endomorphism(quotient)
    elif phi.is_identity:
        induced = identity_endomorphism(quotient)
    elif phi.is_trivial:
        induced = trivial_endomorphism(quotient)
    else:
        induced = Endomorphism(quotient, lambda a: canon(fn(a)), f"{phi.name}̄")

    rng = random.Random(seed)
    pool = _member_pool(H)
    for _ in range(min(samples, 1000)):
        g = group.sample(rng)
        h = _sample_member(H, pool, rng)
        if induced.fn(canon(g)) != canon(fn(mul(g, h))) or canon(fn(g)) != induced.fn(canon(g)):
            raise SpecificationError(
                f"诱导映射与代表元选择有关: g={group.format(g)}, h={group.format(h)}")
    log("Dynamics", f"商系统 {quotient.tag} 构造完成", "✓")
    return QuotientSystem(quotient, canon, induced, H)


# ---------------------------------------------------------------------------
# 轨道
# ---------------------------------------------------------------------------

class Trajectory:
    """
    T_0 ⊆ T_1 ⊆ … 的缓存（1∈X 时递增）

    Args:
        endo: 自同态 φ
        base: 底集 X
        max_size: 单个 T_n 的元素上限
        deadline: time.monotonic() 截止时刻（T_1 = X 不受限制）
        counting: 允许在 ℤ_m 坐标群上用 HNF 计数代替枚举
    """

    def __init__(self, endo: Endomorphism, base: FiniteSubset,
                 max_size: int = DEFAULT_MAX_SIZE, deadline: Optional[float] = None,
                 counting: bool = True):
        if endo.domain.tag != base.group_tag:
            raise UsageError(f"自同态定义在 {endo.domain.tag} 上，底集在 {base.group_tag} 中")
        self.endo = endo
        self.base = base
        self.group = base.group
        self.max_size = max_size
        self.deadline = deadline
        self._images: List[frozenset] = [base.payloads]
        self._sets: List[frozenset] = [frozenset({self.group.identity})]
        self._closed: List[bool] = [True]
        base_closed = isinstance(base, FiniteSubgroup) and base.verified_closed
        self._subgroup_base = base_closed
        self._identity_shortcut = endo.is_identity and base_closed
        self.counting = (counting and base_closed and base.generators is not None
                         and self.group.linear is not None)
        self._gen_images: List[List[Any]] = [list(base.generators or ())]
        self._counter = SubgroupOrderCounter(self.group.linear.modulus) if self.counting else None
        self._counts: List[int] = [1]
        self._relative: Dict[str, Tuple[SubgroupOrderCounter, List[int]]] = {}

    def _check_deadline(self):
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise BudgetExceededError("时间预算用尽", limit=0, reached=len(self._sets) - 1)

    def image(self, k: int) -> frozenset:
        """φ^k(X) 的 payload 集合"""
        fn = self.endo.fn
        while len(self._images) <= k:
            self._check_deadline()
            self._images.append(frozenset(fn(x) for x in self._images[-1]))
        return self._images[k]

    def _generator_image(self, k: int) -> List[Any]:
        fn = self.endo.fn
        while len(self._gen_images) <= k:
            self._gen_images.append([fn(g) for g in self._gen_images[-1]])
        return self._gen_images[k]

    def _product(self, current: frozenset, ys: frozenset, closed: bool) -> frozenset:
        if not closed:
            return product_payloads(self.group, current, ys, self.max_size)
        # current 是子群：T·Y 是右陪集 Ty 的并，已覆盖的 y 可以跳过
        mul = self.group.multiply
        result = set()
        for y in sorted(ys, key=self.group.sort_key):
            if y in result:
                continue
            result.update(mul(t, y) for t in current)
            if len(result) > self.max_size:
                raise BudgetExceededError(f"T_n 超过预算 {self.max_size}",
                                          limit=self.max_size, reached=len(result))
        return frozenset(result)

    def _is_closed_payloads(self, payloads: frozenset) -> bool:
        if not self._subgroup_base:
            return False
        return is_subgroup(FiniteSubset(self.group, payloads))

    def extend(self, n: int) -> FiniteSubset:
        """
        T_n（缓存）

        Raises:
            BudgetExceededError: |T_n| 超过 max_size 或时间用尽；已算出的前缀保留
        """
        if n < 0:
            raise UsageError(f"n 必须非负: {n}")
        while len(self._sets) <= n:
            k = len(self._sets) - 1
            if k > 0:
                self._check_deadline()
            if k == 0:
                nxt = self._images[0]
            elif self._identity_shortcut:
                nxt = self._sets[k]
            else:
                nxt = self._product(self._sets[k], self.image(k), self._closed[k])
            if k > 0 and len(nxt) > self.max_size:
                raise BudgetExceededError(f"T_{k + 1} 超过预算 {self.max_size}",
                                          limit=self.max_size, reached=len(nxt))
            self._sets.append(nxt)
            if k == 0 or self._identity_shortcut:
                self._closed.append(self._subgroup_base)
            else:
                self._closed.append(self._is_closed_payloads(nxt))
        payloads = self._sets[n]
        if self._closed[n]:
            return FiniteSubgroup(self.group, payloads, verified_closed=True)
        return FiniteSubset(self.group, payloads)

    @property
    def computed(self) -> int:
        """已缓存的最大 n"""
        if self.counting:
            return max(len(self._counts), len(self._sets)) - 1
        return len(self._sets) - 1

    def size(self, n: int) -> int:
        """|T_n|"""
        if not self.counting or len(self._sets) > n:
            return len(self.extend(n).payloads)
        coords = self.group.linear.coordinates
        while len(self._counts) <= n:
            k = len(self._counts) - 1
            if k > 0:
                self._check_deadline()
            self._counts.append(self._counter.add(coords(g) for g in self._generator_image(k)))
        return self._counts[n]

    def coset_count(self, n: int, H: NormalSubgroupSpec) -> int:
        """[T_n H : H] = |π(T_n)|"""
        if n == 0 or H.is_whole:
            return 1
        if H.is_trivial:
            return self.size(n)
        if self.counting and H.linear_divisor is not None:
            d = H.linear_divisor
            counter, counts = self._relative.setdefault(H.name, (SubgroupOrderCounter(d), [1]))
            reduced = self.group.linear.reduced(d)
            while len(counts) <= n:
                k = len(counts) - 1
                if k > 0:
                    self._check_deadline()
                counts.append(counter.add(reduced.coordinates(g) for g in self._generator_image(k)))
            return counts[n]
        T = self.extend(n)
        if H.canonicalize is not None:
            return count_canonical(T, H.canonicalize)
        if H.elements is not None:
            return count_cosets(T, H.as_subgroup())
        raise UnsupportedError(f"{H.name} 没有代表元映射，无法计数陪集")


def trajectory_extend(T: Trajectory, n: int, max_size: Optional[int] = None) -> FiniteSubset:
    """T_n(φ,X)，重复调用复用缓存"""
    if max_size is not None:
        T.max_size = max_size
    return T.extend(n)


@dataclass
class CommuteCheck:
    ok: bool
    witness: Optional[Tuple[int, int]] = None
    certification: str = CERT_EXHAUSTIVE


def images_commute_check(phi: Endomorphism, F: FiniteSubgroup, N: int) -> CommuteCheck:
    """检验 φ^n(F)φ^m(F) = φ^m(F)φ^n(F)，0 ≤ n,m ≤ N"""
    if phi.domain.abelian:
        return CommuteCheck(True, None, CERT_STRUCTURAL)
    traj = Trajectory(phi, F, counting=False)
    group = F.group
    for n in range(N + 1):
        for m in range(n + 1, N + 1):
            A, B = traj.image(n), traj.image(m)
            if product_payloads(group, A, B) != product_payloads(group, B, A):
                log("Dynamics", f"φ^{n}(F) 与 φ^{m}(F) 不可交换", "⚠")
                return CommuteCheck(False, (n, m))
    return CommuteCheck(True)


@dataclass
class SubgroupCheck:
    ok: bool
    failed_at: Optional[int] = None
    witness: Optional[Dict[str, Any]] = None
    certification: str = CERT_EXHAUSTIVE


def trajectory_subgroup_check(T: Trajectory, N: int) -> SubgroupCheck:
    """
    检验 T_n 对 n ≤ N 都是子群

    交换群中子群之积仍是子群，直接给出 structural 结论。
    """
    if not (isinstance(T.base, FiniteSubgroup) and is_subgroup(T.base)):
        raise PreconditionError("轨道的底不是有限子群", subject="X")
    if T.group.abelian:
        return SubgroupCheck(True, None, None, CERT_STRUCTURAL)
    for n in range(N + 1):
        Tn = T.extend(n)
        if not is_subgroup(Tn):
            return SubgroupCheck(False, n, closure_witness(Tn))
    return SubgroupCheck(True)


def doubling_check(T: Trajectory, k: int) -> bool:
    """T_{2k} = T_k · φ^k(T_k)，且 ℓ(T_{2k}) ≤ 2ℓ(T_k)"""
    Tk = T.extend(k)
    T2k = T.extend(2 * k)
    shifted = image_set(Tk, endo_power(T.endo, k).fn)
    product = multiply_sets(Tk, shifted, max_size=max(T.max_size, len(T2k)))
    return product.payloads == T2k.payloads and len(T2k) <= len(Tk) ** 2


def intersect_family(family: Iterable[FiniteSubgroup], H: NormalSubgroupSpec
                     ) -> Iterator[FiniteSubgroup]:
    """F ∩ H（F 跑遍 G 的共尾族时在 𝓕(H) 中共尾）"""
    for F in family:
        inside = [x for x in F.payloads if H.membership(x)]
        yield generate_payloads(F.group, inside, max_size=len(inside))


def project_family(family: Iterable[FiniteSubgroup], quotient: QuotientSystem
                   ) -> Iterator[FiniteSubgroup]:
    """π(F)（在 𝓕(G/H) 中共尾）"""
    for F in family:
        yield quotient.project(F)
