#!/usr/bin/env python3
"""Regenerate ``src/ledger_obata/data/reference.json`` from closed forms.

Every closed form is evaluated with sympy to 30 significant digits and
rounded once to a double.  The script refuses to write the asset unless the
tabulated matrix entries equal ``u * x`` products exactly, the tabulated
volumes equal ``x y z`` exactly, and every row solves the critical-point
system to 25 digits.

    python scripts/generate_reference.py [--check]
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import mpmath
import numpy as np
import sympy as sp

ROOT = Path(__file__).resolve().parents[1]
TARGET = ROOT / "src" / "ledger_obata" / "data" / "reference.json"
VERSION = 1
DIGITS = 30

# x, y, u
N2 = [
    ("1", "1", "0"),
    ("1", "1", "1"),
    ("sqrt(2)/2", "sqrt(2)", "1"),
    ("3/sqrt(10)", "sqrt(6/5)", "sqrt(3)/3"),
]

# x, y, z, u, v, w | a21, a31, a32 | V
N3 = [
    ("1", "1", "1", "0", "0", "0", "0", "0", "0", "1"),
    ("1", "1", "1", "1", "0", "0", "1", "0", "0", "1"),
    ("1", "1", "1", "0", "1", "0", "0", "1", "0", "1"),
    ("1", "1", "1", "0", "0", "1", "0", "0", "1", "1"),
    ("1", "1", "1", "0", "1", "1", "0", "1", "1", "1"),
    ("1", "1", "1", "1", "1", "1", "1", "1", "1", "1"),
    ("1", "1/sqrt(2)", "sqrt(2)", "0", "0", "1", "0", "0", "1/sqrt(2)", "1"),
    ("1", "1/sqrt(2)", "sqrt(2)", "0", "sqrt(2)", "1", "0", "sqrt(2)", "1/sqrt(2)", "1"),
    ("1", "1/sqrt(2)", "sqrt(2)", "1/sqrt(2)", "1/sqrt(2)", "1", "1/sqrt(2)", "1/sqrt(2)", "1/sqrt(2)", "1"),
    ("1/sqrt(3)", "sqrt(3/2)", "sqrt(2)", "1/sqrt(2)", "sqrt(3/2)", "1/sqrt(3)", "1/sqrt(6)", "1/sqrt(2)", "1/sqrt(2)", "1"),
    ("1/sqrt(2)", "1", "sqrt(2)", "0", "1", "0", "0", "1/sqrt(2)", "0", "1"),
    ("1/sqrt(2)", "1", "sqrt(2)", "0", "1", "sqrt(2)", "0", "1/sqrt(2)", "sqrt(2)", "1"),
    ("1/sqrt(2)", "sqrt(2)", "1", "1", "0", "0", "1/sqrt(2)", "0", "0", "1"),
    ("1/sqrt(2)", "sqrt(2)", "1", "1", "sqrt(2)", "1/sqrt(2)", "1/sqrt(2)", "1", "1", "1"),
    ("1/sqrt(2)", "sqrt(2/3)", "sqrt(3)", "1/sqrt(3)", "2*sqrt(6)/3", "1/sqrt(2)", "1/sqrt(6)", "2/sqrt(3)", "1/sqrt(3)", "1"),
    ("1/sqrt(2)", "sqrt(2/3)", "sqrt(3)", "1/sqrt(3)", "sqrt(2/3)", "sqrt(2)", "1/sqrt(6)", "1/sqrt(3)", "2/sqrt(3)", "1"),
    ("2*sqrt(2)/3", "1", "2/sqrt(3)", "1/(2*sqrt(2))", "sqrt(6)/4", "1/sqrt(3)", "1/3", "1/sqrt(3)", "1/sqrt(3)", "4*sqrt(6)/9"),
    ("1", "3/sqrt(10)", "sqrt(6/5)", "0", "0", "1/sqrt(3)", "0", "0", "sqrt(3/10)", "3*sqrt(3)/5"),
    ("1", "3/sqrt(10)", "sqrt(6/5)", "0", "sqrt(6/5)", "1/sqrt(3)", "0", "sqrt(6/5)", "sqrt(3/10)", "3*sqrt(3)/5"),
    ("1", "3/sqrt(10)", "sqrt(6/5)", "3/sqrt(10)", "sqrt(3/10)", "1/sqrt(3)", "3/sqrt(10)", "sqrt(3/10)", "sqrt(3/10)", "3*sqrt(3)/5"),
    ("3/sqrt(19)", "sqrt(19/10)", "sqrt(6/5)", "3/sqrt(10)", "sqrt(19/30)", "sqrt(3/19)", "9/sqrt(190)", "sqrt(3/10)", "sqrt(3/10)", "3*sqrt(3)/5"),
    ("3/sqrt(19)", "sqrt(57/55)", "sqrt(11/5)", "sqrt(5/33)", "2*sqrt(19/55)", "sqrt(3/19)", "sqrt(15/209)", "6/sqrt(55)", "3/sqrt(55)", "3*sqrt(3)/5"),
    ("3/sqrt(19)", "sqrt(57/55)", "sqrt(11/5)", "sqrt(5/33)", "sqrt(95/11)/3", "8/sqrt(57)", "sqrt(15/209)", "sqrt(5/11)", "8/sqrt(55)", "3*sqrt(3)/5"),
    ("3/sqrt(10)", "1", "sqrt(6/5)", "0", "1/sqrt(3)", "0", "0", "sqrt(3/10)", "0", "3*sqrt(3)/5"),
    ("3/sqrt(10)", "1", "sqrt(6/5)", "0", "1/sqrt(3)", "sqrt(6/5)", "0", "sqrt(3/10)", "sqrt(6/5)", "3*sqrt(3)/5"),
    ("3/sqrt(10)", "sqrt(6/11)", "sqrt(11/5)", "sqrt(5/33)", "8*sqrt(22)/33", "sqrt(5/6)", "sqrt(3/22)", "8/sqrt(55)", "sqrt(5/11)", "3*sqrt(3)/5"),
    ("3/sqrt(10)", "sqrt(6/11)", "sqrt(11/5)", "sqrt(5/33)", "sqrt(2/11)", "sqrt(6/5)", "sqrt(3/22)", "3/sqrt(55)", "6/sqrt(55)", "3*sqrt(3)/5"),
    ("3/sqrt(10)", "sqrt(6/5)", "1", "1/sqrt(3)", "0", "0", "sqrt(3/10)", "0", "0", "3*sqrt(3)/5"),
    ("3/sqrt(10)", "sqrt(6/5)", "1", "1/sqrt(3)", "sqrt(10)/3", "sqrt(5/6)", "sqrt(3/10)", "1", "1", "3*sqrt(3)/5"),
]


def _num(expr: sp.Expr) -> float:
    return float(sp.N(expr, DIGITS))


def _residual_mp(x, u, n):
    """Residual of the critical-point system in mpmath arithmetic."""
    sys.path.insert(0, str(ROOT / "src"))
    from ledger_obata.solver import residual_batch

    z = np.array([mpmath.mpf(str(sp.N(v, 60))) for v in [*x, *u]], dtype=object)
    return residual_batch(z[None, :], n)[0]


def _check_residual(x, u, n, label):
    with mpmath.workdps(60):
        r = _residual_mp(x, u, n)
        worst = max(abs(v) for v in r)
    if worst > mpmath.mpf(10) ** -25:
        raise SystemExit(f"{label}: residual {mpmath.nstr(worst, 5)} is not zero")


def build() -> dict:
    rows2 = []
    for k, (x, y, u) in enumerate(N2, start=1):
        ex = [sp.sympify(s) for s in (x, y)]
        eu = [sp.sympify(u)]
        _check_residual(ex, eu, 2, f"n=2 row {k}")
        rows2.append(
            {
                "index": k,
                "exact": {"x": x, "y": y, "u": u, "V": str(sp.nsimplify(ex[0] * ex[1]))},
                "x": [_num(e) for e in ex],
                "u": [_num(e) for e in eu],
                "volume": _num(ex[0] * ex[1]),
            }
        )
    rows3 = []
    for k, row in enumerate(N3, start=1):
        x, y, z, u, v, w, a21, a31, a32, vol = (sp.sympify(s) for s in row)
        for got, want, name in ((a21, u * x, "a21"), (a31, v * x, "a31"), (a32, w * y, "a32"), (vol, x * y * z, "V")):
            if sp.simplify(got - want) != 0:
                raise SystemExit(f"n=3 row {k}: tabulated {name} = {got} disagrees with {sp.simplify(want)}")
        _check_residual([x, y, z], [u, v, w], 3, f"n=3 row {k}")
        names = ("x", "y", "z", "u", "v", "w", "a21", "a31", "a32", "V")
        rows3.append(
            {
                "index": k,
                "exact": dict(zip(names, row)),
                "x": [_num(e) for e in (x, y, z)],
                "u": [_num(e) for e in (u, v, w)],
                "volume": _num(vol),
            }
        )
    return {
        "version": VERSION,
        "convention": "stilde-n",
        "digits": DIGITS,
        "sets": {
            "2": {"rows": rows2},
            "3": {"rows": rows3},
        },
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--check", action="store_true", help="compare with the shipped asset instead of writing")
    args = ap.parse_args()
    data = build()
    text = json.dumps(data, indent=1) + "\n"
    if args.check:
        same = TARGET.exists() and TARGET.read_text() == text
        print("reference asset up to date" if same else "reference asset is stale")
        raise SystemExit(0 if same else 1)
    TARGET.write_text(text)
    print(f"wrote {TARGET}")


if __name__ == "__main__":
    main()
