import os
import logging

logger = logging.getLogger(__name__)

# 枚举检验的硬上限：2^30 个符号组合
ENUM_HARD_CAP = 30


def _env_int(name, default):
    """读取整数型环境变量，非法值回退到默认值"""
    raw = os.environ.get(name)
    if raw is None or raw.strip() == '':
        return default
    try:
        return int(raw)
    except ValueError:
        logger.warning(f'[配置] 环境变量 {name}={raw!r} 不是整数，使用默认值 {default}')
        return default


class Config:
    """应用配置类"""

    # 日志级别
    LOG_LEVEL = os.environ.get('SPA_LOG_LEVEL') or 'INFO'

    # 蒙特卡洛默认重复次数与随机种子
    MC_REPLICATES = _env_int('SPA_MC_REPLICATES', 100000)
    SEED = _env_int('SPA_SEED', 20240601)

    # 枚举上限（环境变量只能调低，不能调高）
    ENUM_MAX_N = min(_env_int('SPA_ENUM_MAX_N', ENUM_HARD_CAP), ENUM_HARD_CAP)

    @staticmethod
    def threads():
        """工作线程上限，每次调用时重新读取 SPA_THREADS"""
        return max(1, _env_int('SPA_THREADS', 1))

    @classmethod
    def reload(cls):
        """重新读取环境变量（加载 .env 之后调用）"""
        cls.LOG_LEVEL = os.environ.get('SPA_LOG_LEVEL') or 'INFO'
        cls.MC_REPLICATES = _env_int('SPA_MC_REPLICATES', 100000)
        cls.SEED = _env_int('SPA_SEED', 20240601)
        cls.ENUM_MAX_N = min(_env_int('SPA_ENUM_MAX_N', ENUM_HARD_CAP), ENUM_HARD_CAP)
