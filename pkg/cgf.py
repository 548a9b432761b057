"""
条件累积量生成函数（CGF）
包括符号翻转族 K_in(s) = log cosh(sX_in) 和一般有限支撑族，
提供 K、K'、K''，以及池化平均和指数倾斜矩
"""
import math
import logging
from dataclasses import dataclass, field
from typing import Sequence, Tuple, Union

import numpy as np
from scipy import special

logger = logging.getLogger(__name__)

# 符号翻转族的 CGF 定义域半宽，求解区间为 [-ε/2, ε/2] = [-1, 1]
SIGNFLIP_EPSILON = 2.0
DEFAULT_EPSILON = 2.0

PROB_SUM_TOL = 1e-12
MEAN_ZERO_TOL = 1e-10

_LOG2 = math.log(2.0)


class DomainError(ValueError):
    """参数超出 CGF 定义域或 CGF 本身不合法"""


@dataclass(frozen=True)
class CgfEval:
    """某点 s 处的 K、K'、K''"""
    k: float
    k1: float
    k2: float


def logcosh(y):
    """log cosh(y)，大 |y| 时不溢出，小 |y| 时保持相对精度"""
    a = abs(y)
    if a <= 1.0:
        # cosh(y) - 1 = 2 sinh²(y/2)
        return math.log1p(2.0 * math.sinh(0.5 * a) ** 2)
    return a - _LOG2 + math.log1p(math.exp(-2.0 * a))


def _logcosh_array(y):
    a = np.abs(y)
    small = a <= 1.0
    out = np.empty_like(a)
    out[small] = np.log1p(2.0 * np.sinh(0.5 * a[small]) ** 2)
    big = ~small
    out[big] = a[big] - _LOG2 + np.log1p(np.exp(-2.0 * a[big]))
    return out


def _sech2_array(y):
    # sech²(y) = 4e/(1+e)²，e = exp(-2|y|)
    e = np.exp(-2.0 * np.abs(y))
    return 4.0 * e / (1.0 + e) ** 2


def _check_s(s, epsilon):
    if not math.isfinite(s):
        raise DomainError(f's 必须为有限数: {s}')
    if abs(s) >= epsilon:
        raise DomainError(f'|s|={abs(s)} 超出 CGF 定义域 (-{epsilon}, {epsilon})')


@dataclass(frozen=True)
class SignFlipCgf:
    """单个观测 X 的符号翻转 CGF，K(s) = log cosh(sX)"""
    x: float
    epsilon: float = SIGNFLIP_EPSILON

    def __post_init__(self):
        if not math.isfinite(self.x):
            raise DomainError(f'观测值必须为有限数: {self.x}')

    @property
    def nu(self):
        return abs(self.x)

    def evaluate(self, s):
        return signflip_eval(self, s)


@dataclass(frozen=True)
class FiniteSupportCgf:
    """
    有限支撑条件分布的 CGF

    atoms 为 (取值, 概率) 列表；要求概率为正且和为 1，条件均值为 0
    """
    atoms: Tuple[Tuple[float, float], ...]
    epsilon: float = DEFAULT_EPSILON
    values: np.ndarray = field(init=False, repr=False, compare=False)
    log_probs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        atoms = tuple((float(v), float(p)) for v, p in self.atoms)
        if not atoms:
            raise DomainError('有限支撑分布至少需要一个原子')
        values = np.array([v for v, _ in atoms])
        probs = np.array([p for _, p in atoms])
        if not np.all(np.isfinite(values)) or not np.all(np.isfinite(probs)):
            raise DomainError('原子取值和概率必须为有限数')
        if np.any(probs <= 0):
            raise DomainError('原子概率必须为正')
        if abs(math.fsum(probs) - 1.0) > PROB_SUM_TOL:
            raise DomainError(f'原子概率之和为 {math.fsum(probs)!r}，不等于 1')
        mean = math.fsum(probs * values)
        if abs(mean) > MEAN_ZERO_TOL:
            raise DomainError(f'条件均值为 {mean!r}，不满足均值为零')
        if not self.epsilon > 0:
            raise DomainError(f'epsilon 必须为正: {self.epsilon}')
        object.__setattr__(self, 'atoms', atoms)
        values.setflags(write=False)
        log_probs = np.log(probs)
        log_probs.setflags(write=False)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'log_probs', log_probs)

    @property
    def nu(self):
        return float(np.max(np.abs(self.values)))

    def evaluate(self, s):
        return finite_support_eval(self, s)


SummandCgf = Union[SignFlipCgf, FiniteSupportCgf]


def signflip_eval(c, s):
    """
    符号翻转 CGF 及其一二阶导数

    k1 = X·tanh(sX)，k2 = X²·sech²(sX)，均以 exp(-2|sX|) 计算避免溢出
    """
    _check_s(s, c.epsilon)
    y = abs(s) * c.x
    e = math.exp(-2.0 * abs(y))
    return CgfEval(
        k=logcosh(y),
        k1=math.copysign(1.0, s) * c.x * math.tanh(y),
        k2=c.x * c.x * (4.0 * e / (1.0 + e) ** 2),
    )


def signflip_higher_at_zero(c):
    """两点分布 ±X 在 0 处的三、四阶累积量：(0, -2X⁴)"""
    return 0.0, -2.0 * c.x ** 4


def tilted_atoms(c, s):
    """
    s 倾斜后的原子分布 q_j ∝ p_j·exp(s·v_j)

    Returns:
        list: [(取值, 倾斜概率), ...]
    """
    _check_s(s, c.epsilon)
    q = special.softmax(c.log_probs + s * c.values)
    return list(zip(c.values.tolist(), q.tolist()))


def finite_support_eval(c, s):
    """有限支撑 CGF：k 用平移后的 log-sum-exp，k1、k2 为倾斜分布的均值和方差"""
    _check_s(s, c.epsilon)
    z = c.log_probs + s * c.values
    k = float(special.logsumexp(z))
    q = special.softmax(z)
    mean = float(np.dot(q, c.values))
    var = float(np.dot(q, (c.values - mean) ** 2))
    return CgfEval(k=k, k1=mean, k2=var)


def finite_support_higher_at_zero(c):
    """0 处的三、四阶累积量，由原子直接求矩"""
    p = np.exp(c.log_probs)
    v = c.values
    m2 = float(np.dot(p, v ** 2))
    m3 = float(np.dot(p, v ** 3))
    m4 = float(np.dot(p, v ** 4))
    return m3, m4 - 3.0 * m2 * m2


def evaluate_summand(c, s):
    if isinstance(c, SignFlipCgf):
        return signflip_eval(c, s)
    return finite_support_eval(c, s)


def tilted_moments(c, s):
    """倾斜分布的均值与方差，等于 (K'(s), K''(s))"""
    ev = evaluate_summand(c, s)
    return ev.k1, ev.k2


class PooledCgf:
    """
    平均 CGF K_n(s) = (1/n)ΣK_in(s)

    符号翻转项向量化计算；所有项必须共享同一 ε
    """

    def __init__(self, summands: Sequence[SummandCgf]):
        summands = tuple(summands)
        if not summands:
            raise DomainError('池化 CGF 至少需要一个求和项')
        epsilons = {c.epsilon for c in summands}
        if len(epsilons) != 1:
            raise DomainError(f'所有求和项必须使用相同的 epsilon，实际为 {sorted(epsilons)}')
        self.summands = summands
        self.epsilon = epsilons.pop()
        self.n = len(summands)
        xs = np.array([c.x for c in summands if isinstance(c, SignFlipCgf)], dtype=float)
        xs.setflags(write=False)
        self._signflip_x = xs
        self._finite = tuple(c for c in summands if isinstance(c, FiniteSupportCgf))

    @classmethod
    def from_sample(cls, x):
        """由观测数据构造符号翻转池"""
        return cls([SignFlipCgf(float(v)) for v in np.asarray(x, dtype=float)])

    @property
    def degenerate(self):
        """K'' 在整个区间上恒为 0（所有求和项退化为 0 处的单点分布）"""
        if np.any(self._signflip_x != 0):
            return False
        return all(np.all(c.values == 0) for c in self._finite)

    @property
    def nu_max(self):
        return max(c.nu for c in self.summands)

    def evaluate(self, s):
        return pooled_eval(self, s)


def pooled_eval(p, s):
    """求和项 k、k1、k2 的平均"""
    _check_s(s, p.epsilon)
    k_parts, k1_parts, k2_parts = [], [], []
    x = p._signflip_x
    if x.size:
        # 在 |s| 处求值再带回符号，保证 K 偶、K' 奇、K'' 偶在浮点意义下严格成立
        y = abs(s) * x
        k_parts.append(np.sum(_logcosh_array(y)))
        k1_parts.append(math.copysign(1.0, s) * np.sum(x * np.tanh(y)))
        k2_parts.append(np.sum(x * x * _sech2_array(y)))
    for c in p._finite:
        ev = finite_support_eval(c, s)
        k_parts.append(ev.k)
        k1_parts.append(ev.k1)
        k2_parts.append(ev.k2)
    n = p.n
    return CgfEval(
        k=float(math.fsum(k_parts)) / n,
        k1=float(math.fsum(k1_parts)) / n,
        k2=max(0.0, float(math.fsum(k2_parts))) / n,
    )
