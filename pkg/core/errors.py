"""
异常定义 - 每个异常携带 CLI 退出码
"""
from typing import Any, Optional


class EntropyToolError(Exception):
    """所有库异常的基类"""

    exit_code = 2


class UsageError(EntropyToolError):
    """调用方式错误（空集合、群标签不一致、子群未封闭等）"""

    exit_code = 2


class BudgetExceededError(EntropyToolError):
    """闭包或集合乘积超过预算"""

    exit_code = 3

    def __init__(self, message: str, limit: int = 0, reached: int = 0):
        super().__init__(message)
        self.limit = limit
        self.reached = reached


class InvariantViolation(EntropyToolError):
    """检测到不变量被破坏（单调性、恒等式等）"""

    exit_code = 4

    def __init__(self, message: str, detail: Optional[Any] = None):
        super().__init__(message)
        self.detail = detail


class ConstructionError(EntropyToolError):
    """群构造失败：乘法表不是群，或作用不是自同构"""


class InvarianceError(EntropyToolError):
    """子群不是 φ-不变的 / 不是正规的，witness 为反例元素"""

    def __init__(self, message: str, witness: Optional[Any] = None):
        super().__init__(message)
        self.witness = witness


class SpecificationError(EntropyToolError):
    """canonicalize 在某个陪集上不一致"""


class UnsupportedError(EntropyToolError):
    """当前群或子群不支持该操作"""


class PreconditionError(EntropyToolError):
    """前置条件不成立，subject 指出是哪个集合"""

    def __init__(self, message: str, subject: str = ""):
        super().__init__(message)
        self.subject = subject


class RejectedExperiment(EntropyToolError):
    """实验在计算熵之前就未通过认证"""
