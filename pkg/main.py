#!/usr/bin/python
# -*- coding: UTF-8 -*-

import multiprocessing
import os
import sys

# 设置环境变量
os.environ["PYTHONIOENCODING"] = "utf-8"

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "src"))

from spt_graph.main import run  # noqa: E402


if __name__ == "__main__":
    multiprocessing.freeze_support()
    multiprocessing.set_start_method("spawn", force=True)
    sys.exit(run())
