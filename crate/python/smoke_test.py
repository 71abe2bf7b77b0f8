"""Smoke test for the fwm_modes extension.

Build and install first:  pip install --no-build-isolation ./crates/python
"""

import math
import sys
import tempfile

import fwm_modes as fm


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    grid = fm.Grid(512, 512, 8.0)
    optics = fm.Optics()
    assert grid.shape == (512, 512)

    # Gaussian far field against its closed form at the centre.
    src = fm.Field.gaussian(grid, 300.0)
    ff = src.farfield(optics)
    ci, cj = ff.grid.center_index
    num = ff.intensity()[ci][cj]
    re, im = fm.gaussian_farfield(0.0, 300.0, optics)
    assert close(num, re * re + im * im, 1e-9), (num, re * re + im * im)

    # Unitary transform keeps power.
    ring = src.through_annulus(200.0, 400.0)
    p0 = ring.total_power()
    assert close(ring.farfield(optics, unitary=True).total_power(), p0, 1e-10)

    # Annular Airy law and its fit.
    assert fm.annular_airy_intensity(0.0, 0.55, 2.0) == 2.0
    x = [-150.0 + k for k in range(301)]
    y = [fm.annular_airy_intensity(p / 5.0, 0.55) for p in x]
    fit = fm.fit_airy(x, y, eps0=0.4)
    assert abs(fit["eps_ratio"] - 0.55) < 1e-4, fit
    nrmse, offset = fm.compare_profiles(x, y, x, [2.0 * v for v in y])
    assert nrmse < 1e-12 and offset == 0.0

    # Slices of the annulus far field.
    xs, ys = ring.farfield(optics).slice()
    assert len(xs) == 512 and max(ys) > 0.0

    # Gain: cosh^2 - sinh^2 = 1 on the ideal amplifier.
    g = fm.Gain()
    assert close(g.probe(0.0), 30.0, 1e-9)
    assert close(g.probe(0.0) - g.conjugate(0.0), 1.0, 1e-12)
    assert close(fm.eps_l_for_gain(30.0), math.acosh(math.sqrt(30.0)), 1e-12)

    # Errors: bad parameters are ValueError, numerical failures RuntimeError.
    try:
        fm.Field.gaussian(grid, -1.0)
        raise AssertionError("negative waist accepted")
    except ValueError:
        pass
    try:
        fm.fit_airy(list(range(40)), [1.0] * 40)
        raise AssertionError("flat profile fitted")
    except RuntimeError:
        pass

    # A small end-to-end run.
    assert "aperture.a0_um" in fm.preset_config("annulus-probe")
    with tempfile.TemporaryDirectory() as d:
        path = f"{d}/small.toml"
        with open(path, "w") as f:
            f.write("grid.nx = 256\ngrid.ny = 256\ngrid.pitch_um = 8.0\n")
        notes = fm.simulate(path, f"{d}/run")
        assert "03_farfield.pgm" in notes["files"], notes
        eps = float(notes["fit_horizontal.eps_ratio"])
        assert 0.0 <= eps < 1.0

    print("fwm_modes smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
