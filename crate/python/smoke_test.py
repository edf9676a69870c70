import math
import pathlib
import tempfile

import nonlocal_torus as nt

ROOT = pathlib.Path(__file__).resolve().parent.parent


def test_symbol_closed_form():
    grid = nt.Grid(1, 64)
    sym = nt.Symbol(nt.Kernel.constant(0.5, 1), grid)
    for k in range(1, 33):
        assert abs(sym([k]) / (2 * math.pi**2 * k) - 1) < 1e-4


def test_single_mode_solve():
    grid = nt.Grid(1, 32)
    sym = nt.Symbol(nt.Kernel.constant(0.4, 1), grid)
    g = nt.Field(grid, [math.cos(6 * math.pi * x[0]) for x in grid.points()])
    u = sym.solve(g)
    scale = 1 / (2 * sym([3]))
    assert max(abs(a - b * scale) for a, b in zip(u.values, g.values)) < 1e-10 * scale


def test_cone_certificate():
    text = 'family = "cone"\ndim = 2\ns = 0.5\neta = 1.0\naxis = [1.0, 0.0]\nhalf_angle = 0.7853981633974483\n'
    kernel = nt.Kernel.from_toml(text)
    passed, report = nt.Symbol(kernel, nt.Grid(2, 16)).certificate()
    assert passed, report


def test_norms_and_identity():
    f = nt.Field.standard(nt.Grid(1, 32), 3)
    assert f.lp_norm(2.0) > 0
    assert f.gagliardo_seminorm(0.5, 2.0) > 0
    assert nt.scalar_identity(0.0, 1.0, 4.0) == (1.0, 1.0)


def test_cli_run():
    with tempfile.TemporaryDirectory() as out:
        code = nt.run("symbol", ROOT / "crates/cli/tests/golden/symbol.toml", pathlib.Path(out))
        assert code == 0
        assert (pathlib.Path(out) / "manifest.txt").exists()


def test_errors_are_python_exceptions():
    try:
        nt.Grid(1, 7)
    except ValueError:
        pass
    else:
        raise AssertionError("odd grid size accepted")


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_"):
            fn()
    print("ok")
