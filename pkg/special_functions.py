"""
标准正态分布基础函数
所有尾概率公式都建立在这里的 φ、1-Φ 和缩放 Mills 比 h(x) = exp(x²/2)(1-Φ(x)) 之上
"""
import math
import logging

from scipy import integrate, special

logger = logging.getLogger(__name__)

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)
# 超过此点 erfc 直接下溢为 0，改用 erfcx·exp 逐步进入次正规数
_ERFC_UNDERFLOW = 37.0


class QuadratureError(RuntimeError):
    """自适应积分未收敛"""


def normal_pdf(x):
    """标准正态密度 φ(x)"""
    return INV_SQRT_2PI * math.exp(-0.5 * x * x)


def normal_sf(x):
    """
    标准正态上尾概率 1-Φ(x)

    用 erfc 直接计算，尾部保持相对精度（不做 1 减去接近 1 的数）；
    x > 37 时按 h(x)·exp(-x²/2) 计算，结果为次正规数而不是 0
    """
    if x > _ERFC_UNDERFLOW:
        return 0.5 * float(special.erfcx(x / _SQRT2)) * math.exp(-0.5 * x * x)
    return 0.5 * float(special.erfc(x / _SQRT2))


def mills_scaled(x):
    """
    缩放 Mills 比 h(x) = exp(x²/2)(1-Φ(x))

    h(x) = erfcx(x/√2)/2，x 很大时不溢出，渐近于 1/(x√(2π))
    """
    return 0.5 * float(special.erfcx(x / _SQRT2))


def gauss_tail_integral(lam, tol=1e-12):
    """
    ∫₀^∞ exp(-λz)φ(z)dz 的自适应积分，用作 h(λ) 的检验基准

    Args:
        lam: λ ≥ 0
        tol: 绝对误差容限

    Returns:
        float: 积分值

    Raises:
        QuadratureError: 积分误差估计超过 tol
    """
    if lam < 0 or not math.isfinite(lam):
        raise ValueError(f'λ 必须为非负有限数: {lam}')
    if tol <= 0:
        raise ValueError(f'tol 必须为正: {tol}')

    # 被积函数 ≤ φ(0)exp(-λz)φ(z)/φ(0)，截断点之外的尾部远小于 tol
    upper = 40.0 / max(1.0, lam)

    def integrand(z):
        return math.exp(-lam * z) * normal_pdf(z)

    value, abserr, info = integrate.quad(
        integrand, 0.0, upper, epsabs=tol, epsrel=0.0, limit=500, full_output=1
    )[:3]
    if abserr > tol:
        logger.error(f'[积分] λ={lam} 积分未收敛，误差估计 {abserr:.3e} > {tol:.3e}，求值次数 {info["neval"]}')
        raise QuadratureError(f'quadrature for lambda={lam} did not reach tol={tol} (abserr={abserr})')
    return float(value)
