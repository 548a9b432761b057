"""
重抽样基准
精确枚举全部 2^n 个符号组合，以及可复现的蒙特卡洛估计，用于检验鞍点近似的相对误差
"""
import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy import special

from config import Config

logger = logging.getLogger(__name__)

WILSON_LEVEL = 0.99
NOISY_CI_RATIO = 0.1
# 蒙特卡洛块内元素上限（块大小 × n），块大小只由 n 决定，与线程数无关
_MC_BLOCK_CELLS = 1 << 20
_MC_BLOCK_MAX = 4096


class OracleError(ValueError):
    """基准参数不合法（n 超过枚举上限、b = 0 等）"""


@dataclass(frozen=True)
class ExactResult:
    favorable: int
    ties: int  # Σπx 与 Σx 恰好相等的组合数
    total: int
    p_exact: Fraction

    @property
    def p(self):
        return self.favorable / self.total

    @property
    def p_tie(self):
        return self.ties / self.total


@dataclass(frozen=True)
class McResult:
    p_hat: float
    favorable: int
    b: int
    seed: int
    ci_low: float
    ci_high: float

    @property
    def p(self):
        return self.p_hat


@dataclass(frozen=True)
class ComparisonRow:
    n: int
    w: float
    p_lr: float
    p_rob: float
    p_oracle: float
    rel_err_lr: float
    rel_err_rob: float
    oracle: str  # 'exact' 或 'mc'
    flagged: bool = False
    flag_reason: str = ''

    def to_dict(self):
        return {
            'n': self.n,
            'w': self.w,
            'p_lr': self.p_lr,
            'p_rob': self.p_rob,
            'p_oracle': self.p_oracle,
            'rel_err_lr': self.rel_err_lr,
            'rel_err_rob': self.rel_err_rob,
            'oracle': self.oracle,
            'flagged': self.flagged,
            'flag_reason': self.flag_reason,
        }


def signed_subset_sums(values, with_masks=False):
    """
    按格雷码顺序生成所有子集和（扩展精度）

    每个新组合只做一次加法：已有序列反转后加上新元素，
    因此每个子集和都等于按下标从小到大逐项累加的结果

    Args:
        values: 元素序列
        with_masks: 同时返回每个子集和对应的翻转位掩码

    Returns:
        sums；with_masks 为真时返回 (masks, sums)，masks 的第 i 位为 1 表示第 i 个元素被翻转
    """
    sums = np.zeros(1, dtype=np.longdouble)
    masks = np.zeros(1, dtype=np.int64) if with_masks else None
    for j, v in enumerate(np.asarray(values, dtype=np.longdouble)):
        sums = np.concatenate((sums, sums[::-1] + v))
        if with_masks:
            masks = np.concatenate((masks, masks[::-1] | (1 << j)))
    if with_masks:
        return masks, sums
    return sums


def _count_block(low_sorted, high_chunk):
    # Σπx ≥ Σx 等价于被翻转元素之和 L + H ≤ 0，即 L ≤ -H
    right = np.searchsorted(low_sorted, -high_chunk, side='right')
    left = np.searchsorted(low_sorted, -high_chunk, side='left')
    return int(right.sum()), int((right - left).sum())


def _workers(workers):
    return max(1, workers if workers is not None else Config.threads())


def exact_enumeration(sample, workers: Optional[int] = None):
    """
    精确枚举 P[Σπ_i X_i ≥ ΣX_i | X]

    下标分成前后两半，各自按格雷码生成子集和，再对每个后半子集和在排序后的前半和中计数，
    相等（平局）按“≥”计为有利。按后半前缀分块并行，结果与分块方式无关。

    Args:
        sample: Sample，1 ≤ n ≤ 30
        workers: 线程数，默认取 SPA_THREADS

    Returns:
        ExactResult
    """
    n = sample.n
    if n > Config.ENUM_MAX_N:
        raise OracleError(f'n={n} 超过精确枚举上限 {Config.ENUM_MAX_N}，请使用蒙特卡洛基准')
    x = np.asarray(sample.x, dtype=np.longdouble)
    m = (n + 1) // 2
    low = signed_subset_sums(x[:m])
    high = signed_subset_sums(x[m:])
    low_sorted = np.sort(low)

    n_workers = _workers(workers)
    chunks = np.array_split(high, min(len(high), n_workers * 4)) if n_workers > 1 else [high]
    results = [None] * len(chunks)
    if n_workers == 1:
        for i, chunk in enumerate(chunks):
            results[i] = _count_block(low_sorted, chunk)
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as executor:
            futures = {executor.submit(_count_block, low_sorted, chunk): i for i, chunk in enumerate(chunks)}
            for future, i in futures.items():
                results[i] = future.result()

    favorable = sum(r[0] for r in results)
    ties = sum(r[1] for r in results)
    total = 1 << n
    logger.debug(f'[枚举] n={n} 有利组合 {favorable}/{total}，平局 {ties}')
    return ExactResult(favorable=favorable, ties=ties, total=total, p_exact=Fraction(favorable, total))


def wilson_interval(k, b, level=WILSON_LEVEL):
    """二项比例的 Wilson 置信区间"""
    if b < 1:
        raise OracleError(f'重复次数 b 必须 ≥ 1: {b}')
    z = float(special.ndtri(0.5 + level / 2.0))
    p = k / b
    z2 = z * z
    denom = 1.0 + z2 / b
    center = (p + z2 / (2.0 * b)) / denom
    half = z / denom * math.sqrt(p * (1.0 - p) / b + z2 / (4.0 * b * b))
    low = max(0.0, min(p, center - half))
    high = min(1.0, max(p, center + half))
    return low, high


def _mc_block_size(n):
    return max(1, min(_MC_BLOCK_MAX, _MC_BLOCK_CELLS // n))


def _block_rng(seed, block):
    # 计数器型 Philox，由 (seed, 块编号) 派生，第 k 次重复的符号只取决于 (seed, k)
    ss = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, block])
    return np.random.Generator(np.random.Philox(ss))


def _mc_block(x, seed, block, size):
    rng = _block_rng(seed, block)
    flips = rng.integers(0, 2, size=(size, x.size), dtype=np.uint8)
    flipped_sum = (flips * x).sum(axis=1)
    return int(np.count_nonzero(flipped_sum <= 0))


def mc_pvalue(sample, b, seed, workers: Optional[int] = None):
    """
    蒙特卡洛估计 P[Σπ_i X_i ≥ ΣX_i | X]

    Args:
        sample: Sample
        b: 重复次数
        seed: 64 位整数种子
        workers: 线程数，默认取 SPA_THREADS；结果与线程数无关

    Returns:
        McResult（附 99% Wilson 区间）
    """
    if b < 1:
        raise OracleError(f'重复次数 b 必须 ≥ 1: {b}')
    x = np.asarray(sample.x, dtype=float)
    size = _mc_block_size(x.size)
    blocks = [(j, min(size, b - j * size)) for j in range(math.ceil(b / size))]
    counts = [0] * len(blocks)
    n_workers = _workers(workers)
    if n_workers == 1:
        for i, (j, m) in enumerate(blocks):
            counts[i] = _mc_block(x, seed, j, m)
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as executor:
            futures = {executor.submit(_mc_block, x, seed, j, m): i for i, (j, m) in enumerate(blocks)}
            for future, i in futures.items():
                counts[i] = future.result()
    favorable = sum(counts)
    low, high = wilson_interval(favorable, b)
    logger.debug(f'[蒙特卡洛] n={x.size} b={b} seed={seed} 有利 {favorable}')
    return McResult(p_hat=favorable / b, favorable=favorable, b=b, seed=seed, ci_low=low, ci_high=high)


def compare(report, oracle):
    """
    汇总鞍点近似与基准的相对误差

    基准 p = 0 时相对误差无定义，行被标记但不报错；蒙特卡洛区间宽度超过 p_hat 的 10% 时标记为噪声过大
    """
    is_mc = isinstance(oracle, McResult)
    p_oracle = oracle.p
    flagged, reason = False, ''
    if p_oracle > 0:
        rel_lr = report.p_lr / p_oracle - 1.0
        rel_rob = report.p_rob / p_oracle - 1.0
    else:
        rel_lr = rel_rob = math.nan
        flagged, reason = True, 'oracle_zero'
        logger.warning(f'[基准] n={report.n} w={report.w!r} 基准 p 为 0，相对误差无定义')
    if is_mc and p_oracle > 0 and (oracle.ci_high - oracle.ci_low) > NOISY_CI_RATIO * p_oracle:
        flagged, reason = True, 'oracle_noisy'
    return ComparisonRow(
        n=report.n,
        w=report.w,
        p_lr=report.p_lr,
        p_rob=report.p_rob,
        p_oracle=p_oracle,
        rel_err_lr=rel_lr,
        rel_err_rob=rel_rob,
        oracle='mc' if is_mc else 'exact',
        flagged=flagged,
        flag_reason=reason,
    )
