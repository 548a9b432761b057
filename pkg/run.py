#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
命令行启动脚本
用法: python run.py pvalue data.csv
"""
import sys

from app import main

if __name__ == '__main__':
    sys.exit(main())
