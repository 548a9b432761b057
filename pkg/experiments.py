"""
收敛实验
按位置模型 X_i = μ_n + ε_i 生成数据，对每个 (n, 重复) 计算鞍点 p 值并与基准比较，
汇总相对误差分位数与拒绝率
"""
import csv
import io
import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Tuple

import numpy as np

from config import Config
from resampling_oracle import ComparisonRow, compare, exact_enumeration, mc_pvalue
from signflip_test import DegenerateSampleError, Sample, spa_pvalue

logger = logging.getLogger(__name__)

DEFAULT_DF = 5.0
MIN_DF = 5.0

CSV_COLUMNS = [
    'n', 'replicate', 'w', 's_hat', 'saddle_status', 'p_lr', 'p_rob', 'p_clt',
    'p_oracle', 'oracle', 'rel_err_lr', 'rel_err_rob', 'flagged',
]


class ExperimentConfigError(ValueError):
    """实验配置不合法"""


class ErrorFamily(str, Enum):
    GAUSSIAN = 'gaussian'
    LAPLACE = 'laplace'
    STUDENT_T = 'student_t'
    SCALED_RADEMACHER = 'scaled_rademacher'


class Regime(str, Enum):
    NULL = 'null'  # μ = 0
    CLT = 'clt'  # μ_n = h/√n
    MODERATE = 'moderate'  # μ_n = c·n^(-α)


@dataclass(frozen=True)
class ExperimentConfig:
    n_grid: Tuple[int, ...]
    replicates: int
    error_family: ErrorFamily = ErrorFamily.GAUSSIAN
    df: float = DEFAULT_DF
    scale: float = 1.0
    regime: Regime = Regime.NULL
    h: float = 0.0
    c: float = 0.0
    alpha: float = 0.25
    seed: int = 0
    oracle: str = 'exact'
    b: int = 100000
    level: float = 0.05

    def __post_init__(self):
        if not self.n_grid or any(n < 1 for n in self.n_grid):
            raise ExperimentConfigError(f'n_grid 必须为正整数列表: {self.n_grid}')
        if self.replicates < 1:
            raise ExperimentConfigError(f'replicates 必须 ≥ 1: {self.replicates}')
        if self.error_family is ErrorFamily.STUDENT_T and self.df < MIN_DF:
            raise ExperimentConfigError(f'student_t 自由度必须 ≥ {MIN_DF}（需要 4+δ 阶矩）: {self.df}')
        if not self.scale > 0:
            raise ExperimentConfigError(f'scale 必须为正: {self.scale}')
        if self.regime is Regime.MODERATE and not 0 < self.alpha < 0.5:
            raise ExperimentConfigError(f'alpha 必须在开区间 (0, 0.5) 内: {self.alpha}')
        if self.oracle not in ('exact', 'mc'):
            raise ExperimentConfigError(f'oracle 只能为 exact 或 mc: {self.oracle}')
        if self.oracle == 'exact' and max(self.n_grid) > Config.ENUM_MAX_N:
            raise ExperimentConfigError(f'精确枚举要求 n ≤ {Config.ENUM_MAX_N}，n_grid 最大为 {max(self.n_grid)}')
        if self.oracle == 'mc' and self.b < 1:
            raise ExperimentConfigError(f'b 必须 ≥ 1: {self.b}')
        if not 0 < self.level < 1:
            raise ExperimentConfigError(f'level 必须在 (0, 1) 内: {self.level}')

    def mu(self, n):
        """位置参数 μ_n"""
        if self.regime is Regime.CLT:
            return self.h / math.sqrt(n)
        if self.regime is Regime.MODERATE:
            return self.c * n ** (-self.alpha)
        return 0.0

    def family_variance(self):
        if self.error_family is ErrorFamily.LAPLACE:
            return 2.0 * self.scale ** 2
        if self.error_family is ErrorFamily.STUDENT_T:
            return self.scale ** 2 * self.df / (self.df - 2.0)
        return self.scale ** 2


_INT_KEYS = {'replicates', 'seed', 'b'}
_FLOAT_KEYS = {'df', 'scale', 'h', 'c', 'alpha', 'level'}


def parse_experiment_config(text):
    """
    解析 key=value 格式的实验配置

    Args:
        text: 配置文本，支持 # 注释和空行

    Returns:
        ExperimentConfig
    """
    values = {}
    allowed = set(ExperimentConfig.__dataclass_fields__)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ExperimentConfigError(f'第 {lineno} 行缺少 "=": {raw!r}')
        key, value = (part.strip() for part in line.split('=', 1))
        if key not in allowed:
            raise ExperimentConfigError(f'第 {lineno} 行未知配置项: {key}')
        if key in values:
            raise ExperimentConfigError(f'第 {lineno} 行重复配置项: {key}')
        try:
            if key == 'n_grid':
                values[key] = tuple(int(v) for v in value.split(',') if v.strip())
            elif key == 'error_family':
                values[key] = ErrorFamily(value)
            elif key == 'regime':
                values[key] = Regime(value)
            elif key in _INT_KEYS:
                values[key] = int(value)
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            else:
                values[key] = value
        except ValueError as e:
            raise ExperimentConfigError(f'第 {lineno} 行 {key} 取值非法: {value!r} ({e})') from e
    for required in ('n_grid', 'replicates'):
        if required not in values:
            raise ExperimentConfigError(f'缺少必填配置项: {required}')
    return ExperimentConfig(**values)


def load_experiment_config(path):
    try:
        with open(path, encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        raise ExperimentConfigError(f'无法读取配置文件 {path}: {e}') from e
    return parse_experiment_config(text)


def _replicate_rng(seed, n, replicate_index):
    ss = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, n, replicate_index])
    return np.random.Generator(np.random.Philox(ss))


def generate_errors(cfg, n, rng):
    """
    对称误差 ε_1..ε_n

    按幅度定义的分布（laplace、student_t、scaled_rademacher）用独立的公平符号赋予正负
    """
    family = cfg.error_family
    if family is ErrorFamily.GAUSSIAN:
        return cfg.scale * rng.standard_normal(n)
    if family is ErrorFamily.LAPLACE:
        magnitude = rng.standard_exponential(n)
    elif family is ErrorFamily.STUDENT_T:
        magnitude = np.abs(rng.standard_t(cfg.df, n))
    else:
        magnitude = np.ones(n)
    signs = 2.0 * rng.integers(0, 2, size=n) - 1.0
    return cfg.scale * signs * magnitude


def generate_location_model(cfg, n, replicate_index):
    """由 (seed, n, 重复编号) 确定性地生成 X_i = μ_n + ε_i"""
    rng = _replicate_rng(cfg.seed, n, replicate_index)
    return Sample(cfg.mu(n) + generate_errors(cfg, n, rng))


@dataclass
class RunRow:
    n: int
    replicate: int
    s_hat: float
    saddle_status: str
    p_clt: float
    row: object  # ComparisonRow


@dataclass
class RunReport:
    rows: List[RunRow] = field(default_factory=list)
    summary: dict = field(default_factory=dict)


def _degenerate_row(cfg, n, replicate, sample):
    nan = math.nan
    return RunRow(
        n=n,
        replicate=replicate,
        s_hat=nan,
        saddle_status='',
        p_clt=nan,
        row=ComparisonRow(
            n=n, w=sample.mean(), p_lr=nan, p_rob=nan, p_oracle=nan, rel_err_lr=nan, rel_err_rob=nan,
            oracle=cfg.oracle, flagged=True, flag_reason='degenerate',
        ),
    )


def _run_one(cfg, n, replicate):
    sample = generate_location_model(cfg, n, replicate)
    try:
        report = spa_pvalue(sample)
    except DegenerateSampleError as e:
        # 单个重复退化不中断整个实验，记为标记行
        logger.warning(f'[实验] n={n} 第 {replicate} 次重复: {e}，记为标记行')
        return _degenerate_row(cfg, n, replicate, sample)
    if cfg.oracle == 'exact':
        oracle = exact_enumeration(sample, workers=1)
    else:
        oracle = mc_pvalue(sample, cfg.b, cfg.seed ^ (n << 32) ^ replicate, workers=1)
    return RunRow(
        n=n,
        replicate=replicate,
        s_hat=report.s_hat,
        saddle_status=report.saddle_status.value,
        p_clt=report.p_clt,
        row=compare(report, oracle),
    )


def _quantile(values, q):
    if not values:
        return math.nan
    return float(np.quantile(np.asarray(values), q))


def summarize(rows, cfg):
    """每个 n 的 |相对误差| 中位数与 90% 分位数、标记行数和拒绝率"""
    summary = {}
    for n in cfg.n_grid:
        subset = [r for r in rows if r.n == n]
        usable = [r.row for r in subset if not math.isnan(r.row.rel_err_lr)]
        abs_lr = [abs(row.rel_err_lr) for row in usable]
        abs_rob = [abs(row.rel_err_rob) for row in usable]
        summary[str(n)] = {
            'median_abs_rel_err_lr': _quantile(abs_lr, 0.5),
            'p90_abs_rel_err_lr': _quantile(abs_lr, 0.9),
            'median_abs_rel_err_rob': _quantile(abs_rob, 0.5),
            'p90_abs_rel_err_rob': _quantile(abs_rob, 0.9),
            'flagged': sum(1 for r in subset if r.row.flagged),
            'rejection_rate': sum(1 for r in subset if r.row.p_lr <= cfg.level) / len(subset),
        }
    return summary


def run_convergence(cfg, workers=None):
    """
    收敛实验：各重复并行执行，结果写入预先编号的位置，汇总按 (n, 重复) 顺序进行

    Returns:
        RunReport
    """
    n_workers = max(1, workers if workers is not None else Config.threads())
    tasks = [(n, rep) for n in cfg.n_grid for rep in range(cfg.replicates)]
    rows = [None] * len(tasks)
    logger.info(f'[实验] 开始收敛实验：n_grid={list(cfg.n_grid)}，每个 n {cfg.replicates} 次重复，线程数 {n_workers}')
    if n_workers == 1:
        for i, (n, rep) in enumerate(tasks):
            rows[i] = _run_one(cfg, n, rep)
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as executor:
            futures = {executor.submit(_run_one, cfg, n, rep): i for i, (n, rep) in enumerate(tasks)}
            for future, i in futures.items():
                rows[i] = future.result()
    summary = summarize(rows, cfg)
    for n, s in summary.items():
        logger.info(f'[实验] n={n} |rel_err_lr| 中位数 {s["median_abs_rel_err_lr"]:.4g}，90% 分位数 {s["p90_abs_rel_err_lr"]:.4g}，标记 {s["flagged"]} 行')
    return RunReport(rows=rows, summary=summary)


def format_number(value):
    """17 位有效数字；NaN/无穷输出为空"""
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, int):
        return str(value)
    if not math.isfinite(value):
        return ''
    return format(value, '.17g')


def rows_to_csv(report):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(CSV_COLUMNS)
    for r in report.rows:
        row = r.row
        writer.writerow([
            r.n, r.replicate, format_number(row.w), format_number(r.s_hat), r.saddle_status,
            format_number(row.p_lr), format_number(row.p_rob), format_number(r.p_clt),
            format_number(row.p_oracle), row.oracle, format_number(row.rel_err_lr),
            format_number(row.rel_err_rob), format_number(row.flagged),
        ])
    return buf.getvalue()
