"""
鞍点方程求解
在 [-ε/2, ε/2] 上求解 K_n'(s) = w，解集为空或不唯一时回退到 sgn(w)·ε/2
"""
import math
import logging
from dataclasses import dataclass
from enum import Enum

logger = logging.getLogger(__name__)


class SaddleStatus(str, Enum):
    ZERO = 'zero'
    INTERIOR_UNIQUE = 'interior_unique'
    BOUNDARY_FALLBACK = 'boundary_fallback'
    FLAT_FALLBACK = 'flat_fallback'


@dataclass(frozen=True)
class SaddleConfig:
    """求解器容限"""
    tol_residual: float = 1e-12  # 按 max(1, |w|) 缩放
    tol_s: float = 1e-13  # 区间宽度
    max_iter: int = 200
    eta_flat: float = 1e-12  # 根处 K'' 的平坦阈值

    def __post_init__(self):
        for name in ('tol_residual', 'tol_s', 'eta_flat'):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f'{name} 必须为正有限数: {value}')
        if self.max_iter < 1:
            raise ValueError(f'max_iter 必须 ≥ 1: {self.max_iter}')


@dataclass(frozen=True)
class SaddleSolution:
    s_hat: float
    status: SaddleStatus
    residual: float  # K_n'(s_hat) - w
    iterations: int
    degenerate: bool = False  # K'' 在整个区间上恒为 0
    converged: bool = True  # 迭代预算内达到容限


def _sign(w):
    return 1.0 if w > 0 else -1.0


def solve_saddlepoint(p, w, cfg=None):
    """
    求解鞍点方程 K_n'(s) = w

    在 u = |s| 上做带区间保护的牛顿迭代：牛顿步落在当前区间外、或 K'' 过小时改用二分。
    负的 w 通过 s = -u 映射到同一迭代，符号翻转池的 K' 为奇函数，因此 ±w 的解严格互为相反数。

    Args:
        p: PooledCgf
        w: 阈值
        cfg: SaddleConfig，默认使用缺省容限

    Returns:
        SaddleSolution
    """
    cfg = cfg or SaddleConfig()
    if not math.isfinite(w):
        raise ValueError(f'阈值 w 必须为有限数: {w}')
    half = p.epsilon / 2.0

    if w == 0:
        return SaddleSolution(0.0, SaddleStatus.ZERO, residual=0.0, iterations=0)

    sign = _sign(w)
    target = abs(w)

    def f_and_df(u):
        ev = p.evaluate(sign * u)
        return sign * ev.k1 - target, ev.k2

    if p.degenerate:
        logger.warning(f'[鞍点] 池化 CGF 退化（K\'\' 恒为 0），w={w!r}，回退到边界 {sign * half}')
        return SaddleSolution(sign * half, SaddleStatus.BOUNDARY_FALLBACK,
                              residual=-w, iterations=0, degenerate=True)

    f_lo, _ = f_and_df(0.0)
    if f_lo >= 0:
        # 有限支撑项的均值允许 1e-10 以内的偏差，K'(0) 可能已越过 w，区间左端不再满足 f < 0
        logger.warning(f'[鞍点] K\'(0)={sign * (f_lo + target)!r} 已越过 w={w!r}，按 w 视同均值处理，取 s=0')
        return SaddleSolution(0.0, SaddleStatus.ZERO, residual=sign * f_lo, iterations=1)

    f_hi, _ = f_and_df(half)
    if f_hi < 0:
        # w 超出 [K'(-ε/2), K'(ε/2)]，解集为空
        logger.warning(f'[鞍点] w={w!r} 超出 K\' 在区间端点处的取值 {sign * (f_hi + target)!r}，回退到边界 {sign * half}')
        return SaddleSolution(sign * half, SaddleStatus.BOUNDARY_FALLBACK,
                              residual=sign * f_hi, iterations=0)

    # 区间 [a, b] 始终满足 f(a) < 0 ≤ f(b)
    a, b = 0.0, half
    u = 0.5 * (a + b)
    tol = cfg.tol_residual * max(1.0, target)
    converged = False
    f, df = f_and_df(u)
    iterations = 1
    while True:
        if abs(f) <= tol:
            converged = True
            break
        if f < 0:
            a = u
        else:
            b = u
        if b - a <= cfg.tol_s:
            converged = True
            break
        if iterations >= cfg.max_iter:
            break
        u_next = None
        if df >= cfg.eta_flat:
            candidate = u - f / df
            if a < candidate < b:
                u_next = candidate
        if u_next is None:
            u_next = 0.5 * (a + b)
            if u_next == a or u_next == b:
                converged = True
                break
        u = u_next
        f, df = f_and_df(u)
        iterations += 1

    if converged and df >= cfg.eta_flat and f != 0:
        # 收敛后再做一步牛顿修正，仍落在区间内且残差不变大时采用
        candidate = u - f / df
        if a <= candidate <= b:
            f_c, df_c = f_and_df(candidate)
            iterations += 1
            if abs(f_c) <= abs(f):
                u, f, df = candidate, f_c, df_c
    elif not converged:
        u = 0.5 * (a + b)
        f, df = f_and_df(u)
        logger.warning(f'[鞍点] 迭代 {iterations} 次仍未收敛，取区间中点 u={u!r}，残差 {f!r}')

    if df < cfg.eta_flat:
        logger.warning(f'[鞍点] 根 s={sign * u!r} 处 K\'\'={df!r} 低于平坦阈值，解不唯一，回退到边界 {sign * half}')
        f_half, _ = f_and_df(half)
        return SaddleSolution(sign * half, SaddleStatus.FLAT_FALLBACK,
                              residual=sign * f_half, iterations=iterations, converged=converged)

    logger.debug(f'[鞍点] w={w!r} 求得 s_hat={sign * u!r}，残差 {f!r}，迭代 {iterations} 次')
    return SaddleSolution(sign * u, SaddleStatus.INTERIOR_UNIQUE,
                          residual=sign * f, iterations=iterations, converged=converged)
