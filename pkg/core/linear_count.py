"""
ℤ_m 坐标群上的子群阶计数

对循环群、限制直和 ℤ_m^(I) 以及它们按 d 倍数子群的商，子群由生成元决定，
其阶可以由生成元格 L = span(生成元) + mℤ^N 的 Hermite 标准形精确算出：
|⟨生成元⟩| = m^N / [ℤ^N : L]。
"""
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterable, List

from sympy import Matrix
from sympy.matrices.normalforms import hermite_normal_form


@dataclass(frozen=True)
class LinearStructure:
    """群元素的 ℤ_m 坐标视图（仅交换群）"""
    modulus: int
    coordinates: Callable[[Any], Dict[int, int]]

    def reduced(self, divisor: int) -> "LinearStructure":
        """坐标对 divisor 取模后的视图（商群 G/dG 的坐标）"""
        coords = self.coordinates

        def reduce(payload):
            return {i: v % divisor for i, v in coords(payload).items() if v % divisor}

        return LinearStructure(divisor, reduce)


class SubgroupOrderCounter:
    """
    增量维护生成元格的 HNF 基

    add() 加入新的生成元坐标，order() 返回当前生成子群的阶。
    """

    def __init__(self, modulus: int):
        if modulus < 1:
            raise ValueError(f"模数必须为正: {modulus}")
        self.modulus = modulus
        self._columns: List[int] = []
        self._basis: List[List[int]] = []
        self._order = 1

    def add(self, vectors: Iterable[Dict[int, int]]) -> int:
        """
        加入一批生成元

        Args:
            vectors: 稀疏坐标字典 {坐标下标: 值}

        Returns:
            加入后子群的阶
        """
        m = self.modulus
        vectors = [{i: v % m for i, v in vec.items() if v % m} for vec in vectors]
        vectors = [vec for vec in vectors if vec]
        if not vectors or m == 1:
            return self._order

        new_columns = sorted({i for vec in vectors for i in vec} - set(self._columns))
        if new_columns:
            old_columns = self._columns
            self._columns = sorted(old_columns + new_columns)
            position = {c: k for k, c in enumerate(self._columns)}
            width = len(self._columns)
            remapped = []
            for row in self._basis:
                full = [0] * width
                for c, value in zip(old_columns, row):
                    full[position[c]] = value
                remapped.append(full)
            for c in new_columns:
                row = [0] * width
                row[position[c]] = m
                remapped.append(row)
            self._basis = remapped

        position = {c: k for k, c in enumerate(self._columns)}
        width = len(self._columns)
        rows = list(self._basis)
        for vec in vectors:
            row = [0] * width
            for c, value in vec.items():
                row[position[c]] = value
            rows.append(row)

        # 列式 HNF：A^T 的列张成 = 行格；mℤ^N 在格内，所以满秩
        hnf = hermite_normal_form(Matrix(rows).T)
        self._basis = hnf.T.tolist()
        index = abs(int(hnf.det()))
        self._order = m ** width // index
        return self._order

    def order(self) -> int:
        return self._order


def subgroup_order(linear: LinearStructure, generators: Iterable[Any]) -> int:
    """由生成元计算子群阶（一次性调用）"""
    counter = SubgroupOrderCounter(linear.modulus)
    return counter.add(linear.coordinates(g) for g in generators)
