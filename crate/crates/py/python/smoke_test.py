"""Smoke test for the `pss` extension module.

Build first:

    cargo build -p pss-py --features extension-module

then run `python3 crates/py/python/smoke_test.py`. The script copies the built
library next to a temporary `pss.so` unless `pss` is already importable.
"""

import importlib
import os
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[3]


def load():
    try:
        return importlib.import_module("pss")
    except ImportError:
        pass
    candidates = [os.environ.get("PSS_LIB")] + [
        str(ROOT / "target" / profile / "libpss.so") for profile in ("release", "debug")
    ]
    for c in candidates:
        if c and Path(c).exists():
            tmp = tempfile.mkdtemp()
            shutil.copy(c, Path(tmp) / "pss.so")
            sys.path.insert(0, tmp)
            return importlib.import_module("pss")
    sys.exit("pss extension not found; run cargo build -p pss-py --features extension-module")


def main():
    pss = load()
    assert len(pss.FAMILIES) == 11

    fam = pss.Family("sg-eta", {"eta": 1.5})
    rep = fam.verify(seed=1)
    assert rep["holds_mod_equation"] and rep["only_if"] and rep["nondegenerate"], rep

    hyp = pss.Family("hyp-i", {"A": 1.0, "B": 2.0, "Q": 0.0})
    assert any("< 0" in n for n in hyp.notes), hyp.notes

    form = pss.closed_form(fam)
    assert all(v in ("proven zero", "numerically zero") for v in form.check(fam)), form.check(fam)

    v = pss.obstruct(pss.Family("hyp-iii-lambda"), l=3.0, gamma_im=1.0)
    assert v["outcome"] == "UniversalFamily", v["outcome"]
    assert pss.obstruct(pss.Family("hyp-ii-gamma1"))["outcome"] == "Inconsistent"

    basic = pss.Family("sg-basic")
    grid = pss.Grid.kink("-3:3:-3:3:0.05")
    assert grid.shape == (121, 121)
    with tempfile.TemporaryDirectory() as d:
        out = Path(d) / "kink.obj"
        diag = pss.immerse(basic, pss.closed_form(basic), grid, out=str(out))
        assert out.exists()
    assert diag["mean_k_error"] < 1e-2, diag

    assert pss.is_zero("sin(z0)^2 + cos(z0)^2 - 1")
    assert not pss.is_zero("z0")
    try:
        pss.Family("sg-eta", {"eta": 0.0})
    except ValueError:
        pass
    else:
        raise AssertionError("eta = 0 accepted")
    print("pss smoke test passed")


if __name__ == "__main__":
    main()
