"""
命令行入口
子命令：pvalue | compare | convergence | selftest
"""
import os
import sys
import json
import logging
import argparse

from dotenv import load_dotenv

# 在读取配置之前加载 .env 文件（使用绝对路径和强制覆盖）
env_path = os.path.join(os.path.dirname(os.path.abspath(__file__)), '.env')
load_dotenv(env_path, override=True)

from config import Config  # noqa: E402
from experiments import (  # noqa: E402
    ExperimentConfigError, format_number, load_experiment_config, rows_to_csv, run_convergence,
)
from resampling_oracle import OracleError, compare, exact_enumeration, mc_pvalue  # noqa: E402
from signflip_test import DegenerateSampleError, Sample, spa_pvalue, two_sided_pvalue  # noqa: E402
from special_functions import INV_SQRT_2PI, gauss_tail_integral, mills_scaled, normal_sf  # noqa: E402

Config.reload()

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SELFTEST_FAILED = 1
EXIT_INPUT = 2
EXIT_DEGENERATE = 3


class InputError(ValueError):
    """输入文件无法读取或格式不正确"""


def to_json(obj):
    """序列化为 JSON，浮点数保留 17 位有效数字，NaN/无穷写为 null"""
    if isinstance(obj, dict):
        return '{' + ', '.join(f'{json.dumps(k)}: {to_json(v)}' for k, v in obj.items()) + '}'
    if isinstance(obj, (list, tuple)):
        return '[' + ', '.join(to_json(v) for v in obj) + ']'
    if isinstance(obj, bool):
        return 'true' if obj else 'false'
    if isinstance(obj, float):
        return format_number(obj) or 'null'
    if isinstance(obj, int):
        return str(obj)
    return json.dumps(obj, ensure_ascii=False)


def read_sample_csv(path):
    """
    读取单列 CSV：UTF-8，每行一个数值，可选表头 "x"；含逗号的行视为格式错误
    """
    try:
        with open(path, encoding='utf-8-sig') as f:
            lines = f.read().splitlines()
    except (OSError, UnicodeDecodeError) as e:
        raise InputError(f'无法读取输入文件 {path}: {e}') from e
    values = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if lineno == 1 and line == 'x':
            continue
        if ',' in line:
            raise InputError(f'{path} 第 {lineno} 行包含多列: {raw!r}')
        try:
            values.append(float(line))
        except ValueError as e:
            raise InputError(f'{path} 第 {lineno} 行不是数值: {raw!r}') from e
    if not values:
        raise InputError(f'{path} 中没有数据')
    try:
        return Sample.from_values(values)
    except ValueError as e:
        raise InputError(f'{path}: {e}') from e


def cmd_pvalue(args):
    sample = read_sample_csv(args.input)
    report = spa_pvalue(sample)
    payload = report.to_dict()
    if args.alternative == 'two-sided':
        payload['p_two_sided'] = two_sided_pvalue(sample)
    print(to_json(payload))
    logger.info(f'[命令行] pvalue n={report.n} p_lr={report.p_lr:.6g} 鞍点状态 {report.saddle_status.value}')
    return EXIT_OK


def cmd_compare(args):
    sample = read_sample_csv(args.input)
    if args.oracle == 'exact':
        oracle = exact_enumeration(sample)
    else:
        oracle = mc_pvalue(sample, args.b, args.seed)
    report = spa_pvalue(sample)
    row = compare(report, oracle)
    print(to_json(row.to_dict()))
    logger.info(f'[命令行] compare n={row.n} oracle={row.oracle} rel_err_lr={row.rel_err_lr:.6g}')
    return EXIT_OK


def cmd_convergence(args):
    cfg = load_experiment_config(args.config)
    report = run_convergence(cfg)
    text = rows_to_csv(report)
    summary = to_json(report.summary)
    if args.out:
        with open(args.out, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        print(summary)
        logger.info(f'[命令行] 结果已写入 {args.out}')
    else:
        sys.stdout.write(text)
        sys.stderr.write(summary + '\n')
    return EXIT_OK


def run_selftest():
    """快速自检：正态尾估计与下界、Mills 积分恒等式、符号翻转与枚举的互补关系"""
    checks = {}

    grid = [0.1 * k for k in range(1, 501)]
    checks['gaussian_tail_estimate'] = all(
        abs(x * mills_scaled(x) - INV_SQRT_2PI) <= 2.0 * INV_SQRT_2PI / (x * x) for x in grid
    )
    # 下界两边同乘 exp(x²/2)，避免大 x 时下溢
    checks['gaussian_tail_lower_bound'] = all(
        mills_scaled(x) > INV_SQRT_2PI * x / (x * x + 1.0) for x in grid
    )
    checks['mills_identity'] = all(
        abs(mills_scaled(lam) - gauss_tail_integral(lam, 1e-12)) <= 1e-10
        for lam in (0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0)
    )

    sample = Sample.from_values([1.5, -1.0, 0.5, -0.5, 1.0, -1.2, 2.0, 0.3, -0.7, 1.1])
    upper = spa_pvalue(sample)
    lower = spa_pvalue(sample.negated())
    checks['signflip_complement'] = abs(upper.p_lr + lower.p_lr - 1.0) <= 1e-10
    exact = exact_enumeration(sample, workers=1)
    exact_neg = exact_enumeration(sample.negated(), workers=1)
    checks['enumeration_complement'] = exact.favorable + exact_neg.favorable - exact.ties == exact.total
    checks['normal_sf_symmetry'] = all(
        abs(normal_sf(x) + normal_sf(-x) - 1.0) <= 1e-14 for x in (0.0, 0.5, 1.0, 2.0, 4.0, 8.0)
    )
    row = compare(upper, exact)
    return all(checks.values()), {'checks': checks, 'spa_vs_exact': row.to_dict()}


def cmd_selftest(args):
    ok, payload = run_selftest()
    payload['passed'] = ok
    print(to_json(payload))
    if not ok:
        failed = [k for k, v in payload['checks'].items() if not v]
        logger.error(f'[命令行] 自检失败: {failed}')
        return EXIT_SELFTEST_FAILED
    logger.info('[命令行] 自检全部通过')
    return EXIT_OK


def create_parser():
    """创建命令行解析器"""
    parser = argparse.ArgumentParser(
        prog='spa-signflip',
        description='Saddlepoint approximations for sign-flipping tests',
    )
    parser.add_argument('--log-level', default=None, help='日志级别，默认取 SPA_LOG_LEVEL')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('pvalue', help='计算单列 CSV 数据的鞍点 p 值')
    p.add_argument('input')
    p.add_argument('--alternative', choices=['greater', 'two-sided'], default='greater')
    p.set_defaults(func=cmd_pvalue)

    p = sub.add_parser('compare', help='鞍点 p 值与精确枚举或蒙特卡洛基准比较')
    p.add_argument('input')
    p.add_argument('--oracle', choices=['exact', 'mc'], default='exact')
    p.add_argument('--b', type=int, default=Config.MC_REPLICATES)
    p.add_argument('--seed', type=int, default=Config.SEED)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser('convergence', help='运行收敛实验')
    p.add_argument('--config', required=True)
    p.add_argument('--out', default=None)
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser('selftest', help='运行数值自检')
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    parser = create_parser()
    args = parser.parse_args(argv)

    # 配置日志（输出到 stderr，stdout 只输出结果）
    logging.basicConfig(
        level=(args.log_level or Config.LOG_LEVEL).upper(),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    try:
        return args.func(args)
    except DegenerateSampleError as e:
        logger.error(f'[命令行] 样本退化: {e}')
        print(f'error: {e}', file=sys.stderr)
        return EXIT_DEGENERATE
    except (InputError, OracleError, ExperimentConfigError) as e:
        logger.error(f'[命令行] 输入错误: {e}')
        print(f'error: {e}', file=sys.stderr)
        return EXIT_INPUT


if __name__ == '__main__':
    sys.exit(main())
