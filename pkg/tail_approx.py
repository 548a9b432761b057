"""
鞍点尾概率公式
由鞍点解计算 λ_n、r_n，再给出 Lugannani-Rice 与 Robinson 两种尾概率近似
"""
import math
import sys
import logging
from dataclasses import dataclass, replace
from enum import Enum

from special_functions import mills_scaled, normal_pdf, normal_sf
from saddle_solver import SaddleStatus, solve_saddlepoint

logger = logging.getLogger(__name__)

# |r| 低于该值时，LR 值在 r 上线性过渡到 1/2
SMALL_R = 1e-4
# λ 不超过该值时 1-Φ(λ) 仍为正规浮点数
_SF_DIRECT_MAX = 37.0
_EXP_MAX = 700.0


class SignInconsistencyError(ValueError):
    """λ 与 r 符号不一致，说明上游计算有误"""


class RBranch(str, Enum):
    NORMAL = 'normal'
    DEGENERATE_SIGN = 'degenerate_sign'


@dataclass(frozen=True)
class SpaInputs:
    s_hat: float
    w: float
    k_at_s: float  # K_n(s_hat)
    k2_at_s: float  # K_n''(s_hat)
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f'n 必须 ≥ 1: {self.n}')
        if self.k2_at_s < 0:
            raise ValueError(f"K''(s_hat) 必须非负: {self.k2_at_s}")
        for name in ('s_hat', 'w', 'k_at_s', 'k2_at_s'):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f'{name} 必须为有限数')


@dataclass(frozen=True)
class SpaResult:
    lambda_: float
    r: float
    p_lr: float
    p_rob: float
    r_branch: RBranch
    zero_branch: bool  # w = 0 约定生效
    clamped: bool = False  # LR 值被截断到 [0, 1]
    blended: bool = False  # 小 |r| 线性过渡生效
    s_hat: float = 0.0
    saddle_status: SaddleStatus = SaddleStatus.ZERO


def _sgn(x):
    if x > 0:
        return 1.0
    if x < 0:
        return -1.0
    return 0.0


def compute_lambda_r(inp):
    """
    λ = ŝ√(nK''(ŝ))；ŝw - K(ŝ) ≥ 0 时 r = sgn(ŝ)√(2n(ŝw - K(ŝ)))，否则 r = sgn(ŝ)

    Returns:
        tuple: (lambda, r, RBranch)
    """
    s = inp.s_hat
    if s == 0:
        return 0.0, 0.0, RBranch.NORMAL
    lam = s * math.sqrt(inp.n * inp.k2_at_s)
    q = s * inp.w - inp.k_at_s
    if q >= 0:
        return lam, _sgn(s) * math.sqrt(2.0 * inp.n * q), RBranch.NORMAL
    logger.warning(f'[尾概率] ŝw - K(ŝ) = {q!r} < 0，r 取 sgn(ŝ)')
    return lam, _sgn(s), RBranch.DEGENERATE_SIGN


def _check_signs(lam, r):
    if lam * r < 0:
        raise SignInconsistencyError(f'λ={lam!r} 与 r={r!r} 符号相反')
    if lam == 0 and r != 0:
        raise SignInconsistencyError(f'λ=0 而 r={r!r} ≠ 0')


def _lugannani_rice(lam, r, zero):
    """返回 (p, clamped, blended)"""
    if zero:
        return 0.5, False, False
    _check_signs(lam, r)
    if lam == 0 and r == 0:
        return 0.5, False, False
    # 1/λ - 1/r 写成 (r-λ)/(λr)
    d = (r - lam) / (lam * r) if r != 0 else 0.0
    blended = abs(r) < SMALL_R
    if blended:
        edge = math.copysign(SMALL_R, lam)
        at_edge = normal_sf(edge) + normal_pdf(edge) * d
        value = 0.5 + (abs(r) / SMALL_R) * (at_edge - 0.5)
    else:
        value = normal_sf(r) + normal_pdf(r) * d
    clamped = not 0.0 <= value <= 1.0
    if clamped:
        logger.warning(f'[尾概率] LR 值 {value!r} 超出 [0,1]，λ={lam!r}，r={r!r}，截断')
        value = min(1.0, max(0.0, value))
    return value, clamped, blended


def lugannani_rice(lam, r, zero=False):
    """
    Lugannani-Rice 尾概率 1-Φ(r) + φ(r)(1/λ - 1/r)

    w = 0 时按约定 1/0 - 1/0 = 0，结果为 1/2
    """
    return _lugannani_rice(lam, r, zero)[0]


def robinson(lam, r, zero=False):
    """Robinson 尾概率 exp((λ²-r²)/2)(1-Φ(λ))"""
    if zero:
        return 0.5
    _check_signs(lam, r)
    if lam <= _SF_DIRECT_MAX:
        exponent = 0.5 * (lam - r) * (lam + r)
        if exponent > _EXP_MAX:
            # 只在 λ 为很大的负数时出现，此时 1-Φ(λ) ≈ 1，结果截断为 1
            return 1.0
        # λ = r 时指数恰为 0，结果与 LR 的 1-Φ(r) 逐位相同
        value = math.exp(exponent) * normal_sf(lam)
    else:
        value = math.exp(-0.5 * r * r) * mills_scaled(lam)
    return min(1.0, max(0.0, value))


def spa_from_inputs(inp, zero=False):
    lam, r, branch = compute_lambda_r(inp)
    zero = zero or inp.s_hat == 0
    if lam == 0 and r != 0:
        # K''(ŝ) 下溢为 0（单个极大观测落在回退边界上），λ 取与 ŝ 同号的最小正规数
        logger.warning(f"[尾概率] s_hat={inp.s_hat!r} 处 K'' 下溢为 0，λ 以最小正规数代替")
        lam = math.copysign(sys.float_info.min, inp.s_hat)
    p_lr, clamped, blended = _lugannani_rice(lam, r, zero)
    p_rob = robinson(lam, r, zero)
    return SpaResult(
        lambda_=lam,
        r=r,
        p_lr=p_lr,
        p_rob=p_rob,
        r_branch=branch,
        zero_branch=zero,
        clamped=clamped,
        blended=blended,
        s_hat=inp.s_hat,
    )


def saddlepoint_tail(p, w, cfg=None):
    """
    任意池化 CGF 的条件尾概率近似 P[(1/n)ΣW_in ≥ w | F_n]

    Args:
        p: PooledCgf（符号翻转项或有限支撑项）
        w: 阈值
        cfg: SaddleConfig

    Returns:
        SpaResult
    """
    sol = solve_saddlepoint(p, w, cfg)
    if sol.status is SaddleStatus.ZERO:
        return SpaResult(0.0, 0.0, 0.5, 0.5, RBranch.NORMAL, zero_branch=True,
                         s_hat=0.0, saddle_status=sol.status)
    if sol.degenerate:
        # 所有求和项恒为 0，均值必为 0：w > 0 时概率为 0，w < 0 时为 1
        p_exact = 0.0 if w > 0 else 1.0
        return SpaResult(0.0, 0.0, p_exact, p_exact, RBranch.NORMAL, zero_branch=False,
                         s_hat=sol.s_hat, saddle_status=sol.status)
    ev = p.evaluate(sol.s_hat)
    inp = SpaInputs(s_hat=sol.s_hat, w=w, k_at_s=ev.k, k2_at_s=ev.k2, n=p.n)
    result = spa_from_inputs(inp)
    logger.debug(f'[尾概率] w={w!r} λ={result.lambda_!r} r={result.r!r} p_lr={result.p_lr!r} p_rob={result.p_rob!r}')
    return replace(result, saddle_status=sol.status)
