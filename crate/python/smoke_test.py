"""Smoke test for the hypspec Python module.

Build first:
    cargo build --release -p hypspec-py --features extension-module
then run this file from anywhere; it copies the built library next to itself
as hypspec.so when no importable module is found.
"""

import math
import pathlib
import shutil
import sys

HERE = pathlib.Path(__file__).resolve().parent
ROOT = HERE.parent


def load():
    try:
        import hypspec  # noqa: F401
    except ImportError:
        built = ROOT / "target" / "release" / "libhypspec_py.so"
        if not built.exists():
            sys.exit(f"missing {built}; run cargo build --release -p hypspec-py --features extension-module")
        shutil.copy(built, HERE / "hypspec.so")
        sys.path.insert(0, str(HERE))
    import hypspec

    return hypspec


def main():
    hs = load()

    tri = hs.Window("triangle")
    assert abs(tri.sigma2_goe() - 1 / 3) < 1e-10
    assert abs(tri.sigma2_gue() - 1 / 6) < 1e-10
    assert tri.psi_hat(1.5) == 0.0
    bump = hs.Window()
    assert 0 < bump.sigma2_goe() < 1

    assert hs.canonical_word("b.a.B", rank=2) == "a"
    assert hs.canonical_word("a1.b1.A1.B1.a2.b2.A2.B2.a1", genus=2) == "a1"

    octo = hs.Spectrum("octagon_genus2", 8.0)
    sys_len = octo.primitive_lengths()[0]
    assert abs(sys_len - 2 * math.acosh(1 + 1 / math.sqrt(2))) < 1e-10
    ell, lsharp, k, logdet = octo.records()[0][1:5]
    assert abs(math.exp(logdet) - 4 * math.sinh(ell / 2) ** 2) < 1e-9 * math.exp(logdet)

    s = hs.sigma2(octo, 1e4, 7.0)
    assert abs(s["sigma2"] - s["smooth"] - s["osc"] - s["tail"]) < 1e-12
    assert abs(s["tail"]) <= s["tail_bound"] + 1e-15
    avg = hs.energy_averaged_sigma2(octo, 1e4, 7.0, 2.0)
    assert abs(avg - bump.sigma2_goe()) < 0.5 * bump.sigma2_goe()

    kappa = dict(hs.poisson_cumulants(octo, 1e4, 7.0))
    assert abs(kappa[2] - s["sigma2"]) < 1e-9 * s["sigma2"]

    value, se = hs.haar_constant("SU2", 50_000)
    assert abs(value - 4) < 5 * se

    pants = hs.Spectrum("schottky_pants(2,2,2)", 6.0)
    rows = hs.cover_moments(pants, 50, 2000, kmax=2)
    assert rows and all(len(r) == 5 for r in rows)

    curve = hs.crossover(0.2, [0.0, 1e4])
    assert abs(curve[0] - bump.sigma2_goe()) < 1e-10
    assert abs(curve[1] - bump.sigma2_gue()) < 1e-6

    try:
        hs.Spectrum("no_such_preset", 5.0)
    except ValueError:
        pass
    else:
        raise AssertionError("bad preset accepted")

    print("python smoke test: OK")


if __name__ == "__main__":
    main()
