#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import argparse
import sys

from app import ScaleKitApp

SCALE_FLAVORS = ("matrix", "matrix-rc", "matrix-template", "operator", "tensor")
NULLCONE_FLAVORS = ("torus", "matrix-support", "tensor-support", "operator")
BL_FLAVORS = ("feasibility", "scale", "forster", "matroid")


def _common(parser: argparse.ArgumentParser):
    parser.add_argument("--input", "-i", default="-", help="input JSON file ('-' for stdin)")
    parser.add_argument("--output", "-o", help="report file (default: stdout)")
    parser.add_argument("--trace", help="CSV file for the iteration trace")
    parser.add_argument("--epsilon", type=float, help="target accuracy")
    parser.add_argument("--budget-constant", type=float, dest="budget_constant",
                        help="constant C of the iteration bound")
    parser.add_argument("--budget", type=int, help="explicit iteration budget (overrides the bound)")
    parser.add_argument("--seed", type=int, help="64-bit seed (default: SCALEKIT_SEED)")
    parser.add_argument("--format", choices=["json"], default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scalekit", description="Matrix, operator and tensor scaling")
    sub = parser.add_subparsers(dest="command", required=True)

    scale = sub.add_parser("scale", help="scale a matrix, matrix tuple or tensor tuple")
    _common(scale)
    scale.add_argument("--flavor", choices=SCALE_FLAVORS, default="matrix")

    nullcone = sub.add_parser("nullcone", help="exact null-cone certificates")
    _common(nullcone)
    nullcone.add_argument("--flavor", choices=NULLCONE_FLAVORS, help="overrides the input's flavor field")

    permanent = sub.add_parser("permanent", help="permanent interval from a doubly stochastic scaling")
    _common(permanent)

    bl = sub.add_parser("bl", help="Brascamp-Lieb feasibility, scaling, Forster and matroid membership")
    _common(bl)
    bl.add_argument("--flavor", choices=BL_FLAVORS, default="feasibility")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return ScaleKitApp().run(args)


if __name__ == "__main__":
    sys.exit(main())
