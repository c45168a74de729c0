#!/usr/bin/env python3
"""
dredmtl - incremental DatalogMTL reasoning
"""
from dredmtl.cli import dredmtl

if __name__ == '__main__':
    dredmtl()
