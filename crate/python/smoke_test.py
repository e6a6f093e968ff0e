"""Smoke test for the nls_lab_py extension.

Build and install first, e.g. `maturin develop -m crates/py/Cargo.toml`,
then run `python python/smoke_test.py` (or under pytest).
"""

import cmath
import math
import os
import tempfile

import nls_lab_py as nl


def test_plane_wave_matches_closed_form():
    grid = nl.Grid(32.0, 256)
    a, k, t = 0.5, 2 * math.pi * 3 / 32, 1.0
    u0 = [a * cmath.exp(1j * k * x) for x in grid.positions()]
    cfg = nl.SolverConfig(1e-3, t, sign="defocusing")
    traj = nl.solve(grid, u0, cfg)
    assert len(traj) == cfg.steps + 1
    omega = k * k + a * a
    exact = [a * cmath.exp(1j * (k * x - omega * t)) for x in grid.positions()]
    got = traj.snapshot(len(traj) - 1)
    err = math.sqrt(sum(abs(g - e) ** 2 for g, e in zip(got, exact)) / sum(abs(e) ** 2 for e in exact))
    assert err < 1e-10, err
    assert traj.mass_drift < 1e-12
    assert traj.duhamel_residual() < 1e-6


def test_snapshot_round_trip():
    grid = nl.Grid(16.0, 64)
    cfg = nl.SolverConfig(1e-2, 0.1, sign="focusing", truncation="low-pass", cutoff=2.0)
    u0 = [complex(math.exp(-x * x), 0.0) for x in grid.positions()]
    traj = nl.solve(grid, u0, cfg)
    data = traj.to_bytes()
    assert data[:4] == b"NLS1"
    back = nl.Trajectory.from_bytes(data, cfg)
    assert back.to_bytes() == data
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "run.nls")
        traj.save(path)
        assert nl.Trajectory.load(path, cfg).to_bytes() == data
    corrupt = bytearray(data)
    corrupt[60] ^= 1
    try:
        nl.Trajectory.from_bytes(bytes(corrupt), cfg)
    except ValueError as e:
        assert "checksum" in str(e)
    else:
        raise AssertionError("corruption not detected")


def test_run_and_report():
    assert "witness" in nl.commands()
    rep = nl.run("pigeonhole", "pigeonhole.trials = 6\n", seed=3)
    assert rep.name == "pigeonhole" and rep.seed == 3
    assert rep.all_pass(), rep.verdicts
    rule, passed = rep.verdicts["all_trials_pass"]
    assert passed and rule.startswith("ge(")
    again = nl.Report.from_text(rep.to_text())
    assert again.to_text() == rep.to_text()
    try:
        nl.run("pigeonhole", "pigeonhole.bogus = 1\n")
    except ValueError as e:
        assert "line 1" in str(e)
    else:
        raise AssertionError("unknown key accepted")


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_"):
            fn()
            print("ok", name)
