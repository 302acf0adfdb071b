"""Command line driver and run-directory round trips."""

import numpy as np
import pytest

from frontwalk.cli import main
from frontwalk.config import load_config
from frontwalk.output import (
    OutputError,
    read_meta,
    read_run_dir,
    write_run_dir,
)
from frontwalk.solver import run
from frontwalk.trace import traces_equal

DIRICHLET = """\
[problem.dimensionless]
biot = 1.0
thiele = 5.0
henry = 1.0
h0 = 0.1
length = 1.0
t_final = 2e-3
u0 = constant 1.0
forcing = constant 1.0
sigma = linear 1.0

[left_boundary]
kind = dirichlet
u_value = 2.0

[numerics]
dtau = 2e-5
n = 40
seed = 3
snapshot_times = 1e-3 2e-3

[reference]
elements = 40
dt = 4e-5
"""

ROBIN = DIRICHLET.replace(
    "kind = dirichlet\nu_value = 2.0", "kind = robin"
).replace("biot = 1.0", "biot = 500.0")

DIMENSIONAL = """\
[problem.dimensional]
diffusivity = 0.01
surface_rate = 0.5
kinetic_rate = 0.02
henry = 2.0
s0 = 1.0
m0 = constant 0.5
boundary_source = constant 2.0
sigma = linear 0.05
length = 10.0
t_final = 20.0
x_ref = 10.0
m_ref = 0.5

[left_boundary]
kind = robin

[numerics]
dtau = 2e-5
n = 40
seed = 5
snapshot_times = 10 20

[reference]
elements = 40
dt = 4e-5
"""


@pytest.fixture(scope="module")
def cfg_dir(tmp_path_factory):
    base = tmp_path_factory.mktemp("configs")
    (base / "dirichlet.cfg").write_text(DIRICHLET)
    (base / "robin.cfg").write_text(ROBIN)
    (base / "dimensional.cfg").write_text(DIMENSIONAL)
    return base


@pytest.fixture(scope="module")
def run_pair(cfg_dir, tmp_path_factory):
    """One walker run and one reference run from the same config."""
    out = tmp_path_factory.mktemp("runs")
    cfg = str(cfg_dir / "dirichlet.cfg")
    assert main(["run-rwm", "--config", cfg, "--out", str(out / "rwm")]) == 0
    assert main(["run-ref", "--config", cfg, "--out", str(out / "ref")]) == 0
    return cfg, out / "rwm", out / "ref"


class TestRunCommands:
    def test_run_rwm_writes_the_directory(self, run_pair, capsys):
        _, rwm, _ = run_pair
        for name in ("front.csv", "mass.csv", "diagnostics.csv", "meta.txt",
                     "profile_0.001.csv", "profile_0.002.csv"):
            assert (rwm / name).is_file(), name
        assert not (rwm / "left_boundary.csv").exists()
        meta = read_meta(rwm)
        assert meta["kind"] == "rwm"
        assert meta["units"] == "dimensionless"
        assert meta["seed"] == "3"
        assert meta["config"]["numerics"]["n"] == 40

    def test_run_ref_writes_the_directory(self, run_pair):
        _, _, ref = run_pair
        assert read_meta(ref)["kind"] == "reference"
        _, _, data = _read_table(ref / "front.csv")
        assert data[0, 0] == 0.0
        assert data[-1, 0] == pytest.approx(2e-3)

    def test_robin_run_writes_left_boundary(self, cfg_dir, tmp_path):
        out = tmp_path / "rob"
        assert main(["run-rwm", "--config", str(cfg_dir / "robin.cfg"),
                     "--out", str(out)]) == 0
        assert (out / "left_boundary.csv").is_file()

    def test_seed_override_changes_the_walk(self, cfg_dir, tmp_path, run_pair):
        _, rwm, _ = run_pair
        out = tmp_path / "reseeded"
        assert main(["run-rwm", "--config", str(cfg_dir / "dirichlet.cfg"),
                     "--out", str(out), "--seed", "77"]) == 0
        assert read_meta(out)["seed"] == "77"
        assert (out / "front.csv").read_text() != (rwm / "front.csv").read_text()

    def test_missing_config_exits_one(self, capsys):
        assert main(["run-rwm", "--config", "nowhere.cfg"]) == 1
        assert "error: config file not found" in capsys.readouterr().err


class TestByteDeterminism:
    def test_identical_runs_are_byte_identical(self, cfg_dir, tmp_path):
        cfg = str(cfg_dir / "dirichlet.cfg")
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["run-rwm", "--config", cfg, "--out", str(a)]) == 0
        assert main(["run-rwm", "--config", cfg, "--out", str(b)]) == 0
        names = sorted(p.name for p in a.iterdir())
        assert names == sorted(p.name for p in b.iterdir())
        for name in names:
            ta = (a / name).read_text()
            tb = (b / name).read_text()
            if name == "diagnostics.csv":
                # wall time is the last field of the data row by design
                ta = ta.rsplit(",", 1)[0]
                tb = tb.rsplit(",", 1)[0]
            assert ta == tb, name


class TestCompare:
    def test_cross_comparison_passes_with_loose_tolerances(self, run_pair, capsys):
        cfg, rwm, ref = run_pair
        rc = main(["compare", str(rwm), str(ref), "--config", cfg,
                   "--front-tol", "10", "--mass-tol", "10",
                   "--profile-tol", "10"])
        out = capsys.readouterr().out
        assert rc == 0
        assert out.count("PASS") == 4  # front, mass, two profiles
        assert (rwm / "errors.csv").is_file()

    def test_self_comparison_is_exact(self, run_pair, tmp_path, capsys):
        cfg, _, ref = run_pair
        rc = main(["compare", str(ref), str(ref), "--config", cfg,
                   "--out", str(tmp_path),
                   "--front-tol", "0", "--mass-tol", "0", "--profile-tol", "0"])
        assert rc == 0
        assert (tmp_path / "errors.csv").is_file()
        assert "FAIL" not in capsys.readouterr().out

    def test_zero_tolerance_fails(self, run_pair, capsys):
        cfg, rwm, ref = run_pair
        rc = main(["compare", str(rwm), str(ref), "--config", cfg,
                   "--front-tol", "0", "--mass-tol", "0"])
        assert rc == 2
        assert "FAIL" in capsys.readouterr().out

    def test_mismatched_config_exits_two(self, run_pair, cfg_dir, tmp_path, capsys):
        cfg, rwm, _ = run_pair
        other = tmp_path / "other_ref"
        assert main(["run-ref", "--config", str(cfg_dir / "robin.cfg"),
                     "--out", str(other)]) == 0
        rc = main(["compare", str(rwm), str(other), "--config", cfg])
        assert rc == 2
        assert "different config" in capsys.readouterr().err

    def test_missing_run_dir_exits_one(self, run_pair, capsys):
        cfg, rwm, _ = run_pair
        rc = main(["compare", str(rwm), "nowhere", "--config", cfg])
        assert rc == 1
        assert "error:" in capsys.readouterr().err


class TestEnsemble:
    def test_member_directories_and_summary(self, cfg_dir, tmp_path, capsys):
        out = tmp_path / "ens"
        rc = main(["run-rwm", "--config", str(cfg_dir / "dirichlet.cfg"),
                   "--out", str(out), "--seeds", "3"])
        assert rc == 0
        assert "ensemble of 3" in capsys.readouterr().out
        for member in range(3):
            member_dir = out / f"member_{member:03d}"
            assert (member_dir / "front.csv").is_file()
            assert read_meta(member_dir)["config"]["numerics"]["member"] == member
        comments, columns, data = _read_table(out / "ensemble.csv")
        assert comments["members"] == "3"
        assert columns == ["tau", "front_mean", "front_std", "mass_mean", "mass_std"]
        fronts = np.stack([
            _read_table(out / f"member_{m:03d}" / "front.csv")[2][:, 1]
            for m in range(3)
        ])
        assert np.allclose(data[:, 1], fronts.mean(axis=0))


class TestValidate:
    def test_satisfied_bound_exits_zero(self, cfg_dir, capsys):
        rc = main(["validate", "--config", str(cfg_dir / "dirichlet.cfg")])
        assert rc == 0
        out = capsys.readouterr().out
        assert "dz = " in out and "time slices" in out

    def test_violated_bound_exits_one(self, cfg_dir, tmp_path, capsys):
        text = DIRICHLET.replace("thiele = 5.0", "thiele = 2500.0")
        path = tmp_path / "hot.cfg"
        path.write_text(text)
        assert main(["validate", "--config", str(path)]) == 1
        assert "VIOLATED" in capsys.readouterr().out


class TestBench:
    def test_fit_over_two_sizes(self, cfg_dir, tmp_path, capsys):
        out = tmp_path / "bench"
        rc = main(["bench", "--config", str(cfg_dir / "dirichlet.cfg"),
                   "--out", str(out), "--n-list", "5,10", "--repeats", "1"])
        assert rc == 0
        text = capsys.readouterr().out
        assert "fit dtau=" in text
        assert (out / "bench.csv").is_file()
        _, columns, data = _read_table(out / "bench_fit.csv")
        assert columns == ["dtau", "slope", "intercept", "r2", "points"]
        assert data.shape == (1, 5)

    def test_single_size_skips_the_fit(self, cfg_dir, tmp_path, capsys):
        out = tmp_path / "bench1"
        rc = main(["bench", "--config", str(cfg_dir / "dirichlet.cfg"),
                   "--out", str(out), "--n-list", "5", "--repeats", "1"])
        assert rc == 0
        assert "fit skipped" in capsys.readouterr().out
        assert (out / "bench.csv").is_file()
        assert not (out / "bench_fit.csv").exists()


@pytest.fixture(scope="module")
def dim_run(cfg_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("dim") / "run"
    assert main(["run-rwm", "--config", str(cfg_dir / "dimensional.cfg"),
                 "--out", str(out)]) == 0
    return out


class TestDimensionalOutput:
    def test_dimensional_columns(self, cfg_dir, dim_run):
        cfg = load_config(cfg_dir / "dimensional.cfg")
        _, columns, data = _read_table(dim_run / "front.csv")
        assert columns == ["tau", "h", "t", "s"]
        assert np.allclose(data[:, 2], data[:, 0] * cfg.time_scale)
        assert np.allclose(data[:, 3], data[:, 1] * 10.0)
        _, columns, _ = _read_table(dim_run / "mass.csv")
        assert columns == ["tau", "mass", "t", "mass_dim"]
        _, columns, _ = _read_table(dim_run / "left_boundary.csv")
        assert columns == ["tau", "u", "t", "m"]

    def test_profile_files_use_label_times(self, dim_run):
        # labels are the times as written (minutes), not tau
        assert (dim_run / "profile_10.csv").is_file()
        assert (dim_run / "profile_20.csv").is_file()
        _, columns, data = _read_table(dim_run / "profile_10.csv")
        assert columns == ["z", "u", "x", "m"]
        assert np.allclose(data[:, 2], data[:, 0] * 10.0)

    def test_meta_marks_dimensional_units(self, dim_run):
        meta = read_meta(dim_run)
        assert meta["units"] == "dimensional"
        assert float(meta["time_scale"]) == pytest.approx(1e4)


class TestRoundTrip:
    def test_library_write_then_read_is_lossless(self, cfg_dir, tmp_path):
        cfg = load_config(cfg_dir / "robin.cfg")
        trace = run(cfg.problem, cfg.numerics, cfg.left, engine="python")
        out = write_run_dir(tmp_path / "dir", trace, cfg, "run-rwm")
        back = read_run_dir(out)
        assert np.array_equal(back.tau, trace.tau)
        assert np.array_equal(back.front, trace.front)
        assert np.array_equal(back.mass, trace.mass)
        assert np.array_equal(back.left_u, trace.left_u)
        assert back.seed == trace.seed and back.kind == "rwm"
        assert len(back.snapshots) == len(trace.snapshots)
        for mine, theirs in zip(back.snapshots, trace.snapshots):
            assert np.array_equal(mine.z, theirs.z)
            assert np.array_equal(mine.u, theirs.u)
        assert back.config_echo["problem"] == trace.config_echo["problem"]
        assert back.config_echo["left"] == trace.config_echo["left"]
        assert back.config_echo["numerics"] == trace.config_echo["numerics"]
        assert traces_equal(
            back,
            read_run_dir(write_run_dir(tmp_path / "dir2", trace, cfg, "run-rwm")),
        )

    def test_reader_errors(self, tmp_path):
        with pytest.raises(OutputError, match="missing run file"):
            read_meta(tmp_path)
        with pytest.raises(OutputError, match="missing run file"):
            read_run_dir(tmp_path)
        bad = tmp_path / "bad"
        bad.mkdir()
        (bad / "meta.txt").write_text("# frontwalk 0\nkind: rwm\n")
        with pytest.raises(OutputError, match="no config block"):
            read_meta(bad)


def _read_table(path):
    comments = {}
    columns = []
    rows = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition(":")
            if sep:
                comments[key.strip()] = value.strip()
        elif not columns:
            columns = [c.strip() for c in line.split(",")]
        else:
            rows.append([float(tok) for tok in line.split(",")])
    return comments, columns, np.asarray(rows)
