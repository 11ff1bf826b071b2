import json
import subprocess
import sys

import numpy as np
import pytest

from plcerf.cli import main
from plcerf.family import TimeVaryingField, generate_gaussians, read_raw, write_csv, write_raw
from plcerf.mesh import GridSpec, grid_complex


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def two_gaussian(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    assert run("synth", "--preset", "two-gaussian", "--timesteps", 41, "--output-dir", d,
               "--name", "two") == 0
    return d / "two.raw"


def test_synth_writes_raw_and_manifest(two_gaussian):
    side = json.loads(two_gaussian.with_suffix(".json").read_text())
    assert side["grid"] == [64, 64] and side["timesteps"] == 41 and side["dt"] == 1.0
    man = json.loads((two_gaussian.parent / "manifest.json").read_text())
    assert man["command"] == "synth" and man["version"] and "generate" in man["timings"]


def test_synth_custom_and_errors(tmp_path):
    assert run("synth", "--grid", 12, 10, "--periodic", 1, 0, "--timesteps", 5,
               "--gaussian", "static:4,5@2", "--gaussian", "orbit:6,5,2,4,0,-1",
               "--noise", 0.01, "--seed-rng", 3, "--output-dir", tmp_path) == 0
    f = read_raw(tmp_path / "field.raw")
    assert f.values.shape == (120, 5)
    assert run("synth", "--grid", 8, 8, "--gaussian", "spiral:1,2",
               "--output-dir", tmp_path) == 2
    assert run("synth", "--grid", 8, 8, "--output-dir", tmp_path) == 2
    assert run("synth", "--grid", 1, 8, "--gaussian", "static:0,0",
               "--output-dir", tmp_path) == 2


def test_cerf_outputs(two_gaussian, tmp_path):
    # one half period: the second maximum is born and dies once
    out = tmp_path / "cerf"
    assert run("cerf", two_gaussian, "--samples", 0, 21, "--plot", "--index-filter", 2,
               "--output-dir", out) == 0
    for name in ("arcs.csv", "crossings.csv", "tracking.json", "manifest.json", "cerf.svg"):
        assert (out / name).exists()
    arcs = (out / "arcs.csv").read_text().splitlines()
    assert arcs[0] == "t1,val1,t2,val2,vertex,beta0,beta1,beta2"
    assert all(line.endswith(",0,0,1") for line in arcs[1:])
    svg = (out / "cerf.svg").read_text()
    assert svg.count('class="birth"') == 1 and svg.count('class="death"') == 1
    assert svg.count("<polyline") == len(arcs) - 1
    man = json.loads((out / "manifest.json").read_text())
    assert set(man["inputs"]) == {str(two_gaussian), str(two_gaussian.with_suffix(".json"))}
    assert man["counts"]["kinds"]["Birth"] >= 1 and man["kernel_backend"] in ("cython", "python")


def test_cerf_deterministic_and_round_trip(two_gaussian, tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    for d in (a, b):
        assert run("cerf", two_gaussian, "--samples", 0, 11, "--output-dir", d) == 0
    f = read_raw(two_gaussian)
    f = TimeVaryingField(f.complex, f.values[:, :11], f.times[:11])
    write_csv(f, tmp_path / "f.csv")
    assert run("cerf", tmp_path / "f.csv", "--grid", 64, 64, "--periodic", 1, 1,
               "--output-dir", c) == 0
    for name in ("arcs.csv", "crossings.csv", "tracking.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    # CSV input carries no time stamps: compare the time-free columns
    ca = [line.split(",")[1:] for line in (a / "crossings.csv").read_text().splitlines()]
    cc = [line.split(",")[1:] for line in (c / "crossings.csv").read_text().splitlines()]
    assert ca == cc


def test_raw_rewrite_round_trip(tmp_path):
    spec = GridSpec((9, 7), (True, False))
    f = generate_gaussians(spec, [(2, 3), (6, 4)], 1.5, T=6, times=np.arange(6.0))
    write_raw(f, tmp_path / "x")
    g = read_raw(tmp_path / "x.raw")
    write_raw(g, tmp_path / "y")
    for name, src in (("p", "x.raw"), ("q", "y.raw")):
        assert run("cerf", tmp_path / src, "--output-dir", tmp_path / name) == 0
    for out in ("arcs.csv", "crossings.csv", "tracking.json"):
        assert (tmp_path / "p" / out).read_bytes() == (tmp_path / "q" / out).read_bytes()


def test_constant_field(tmp_path):
    c = grid_complex(GridSpec((5, 5)))
    f0 = np.random.default_rng(0).standard_normal(25)
    write_raw(TimeVaryingField(c, np.repeat(f0[:, None], 4, axis=1), np.arange(4.0)),
              tmp_path / "const")
    assert run("cerf", tmp_path / "const.raw", "--output-dir", tmp_path) == 0
    assert (tmp_path / "crossings.csv").read_text() == "t,u,v,kind\n"
    for line in (tmp_path / "arcs.csv").read_text().splitlines()[1:]:
        t1, _, t2 = line.split(",")[:3]
        assert (float(t1), float(t2)) == (0.0, 3.0)


def test_strict_exit_code(tmp_path):
    spec = GridSpec((5, 5))
    c = grid_complex(spec)
    f0 = np.linspace(0, 0.01, 25)
    ring = [int(spec.index(p)) for p in ([3, 2], [3, 3], [2, 3], [1, 2], [1, 1], [2, 1])]
    f0[int(spec.index([2, 2]))] = 0.0
    f0[ring] = [-1, 1, -1, 1, -1, 1]
    write_csv(TimeVaryingField(c, np.stack([f0, f0], axis=1)), tmp_path / "m.csv")
    assert run("cerf", tmp_path / "m.csv", "--grid", 5, 5, "--output-dir", tmp_path) == 0
    assert run("cerf", tmp_path / "m.csv", "--grid", 5, 5, "--strict",
               "--output-dir", tmp_path) == 4


def test_data_and_config_errors(tmp_path, capsys):
    assert run("cerf", tmp_path / "missing.raw", "--output-dir", tmp_path) == 2
    (tmp_path / "bad.csv").write_text("vertex,t0,t1\n0,1,x\n")
    assert run("cerf", tmp_path / "bad.csv", "--grid", 2, 2, "--output-dir", tmp_path) == 3
    assert ":2:" in capsys.readouterr().err
    assert run("cerf", tmp_path / "bad.csv", "--output-dir", tmp_path) == 2
    (tmp_path / "short.raw").write_bytes(b"\0" * 12)
    (tmp_path / "short.json").write_text('{"grid": [2, 2], "timesteps": 2}')
    assert run("cerf", tmp_path / "short.raw", "--output-dir", tmp_path) == 3
    assert "offset" in capsys.readouterr().err


def test_tvecc_dist_distmat(two_gaussian, tmp_path, capsys):
    assert run("tvecc", two_gaussian, "--samples", 0, 6, "--s-samples", 5, "--t-samples", 3,
               "--output-dir", tmp_path) == 0
    rows = (tmp_path / "tvecc.csv").read_text().splitlines()
    assert len(rows) == 4 and rows[1].split(",")[-1] == "0"   # torus: chi = 0 at the top
    capsys.readouterr()
    assert run("dist", two_gaussian, two_gaussian, "--samples", 0, 6,
               "--output-dir", tmp_path) == 0
    assert float(capsys.readouterr().out) == 0.0
    assert json.loads((tmp_path / "manifest.json").read_text())["distance"] == 0.0
    assert run("dist", two_gaussian, two_gaussian, "--samples", 0, 6, "--quadrature", "exact",
               "--s-range", 0, 2, "--output-dir", tmp_path) == 0
    capsys.readouterr()
    assert run("distmat", two_gaussian, "--window", 10, "--shift", 5, "--start", 15,
               "--output-dir", tmp_path) == 0
    assert "period" in capsys.readouterr().out
    head = (tmp_path / "distmat.csv").read_text().splitlines()[0]
    assert head == "window_start,15,20,25,30"
    svg = (tmp_path / "distmat.svg").read_text()
    assert "window=10 shift=5 start=15" in svg


def test_dist_chi_mismatch(tmp_path):
    a = generate_gaussians(GridSpec((6, 6)), [(2, 2)], 1.0, T=3, times=np.arange(3.0))
    b = generate_gaussians(GridSpec((6, 6), (True, True)), [(2, 2)], 1.0, T=3,
                           times=np.arange(3.0))
    write_raw(a, tmp_path / "a")
    write_raw(b, tmp_path / "b")
    assert run("dist", tmp_path / "a.raw", tmp_path / "b.raw", "--output-dir", tmp_path) == 2
    assert run("dist", tmp_path / "a.raw", tmp_path / "b.raw", "--s-range", 0, 1,
               "--output-dir", tmp_path) == 0


def split_field(path):
    spec = GridSpec((24, 20))
    T = 21
    f1 = generate_gaussians(spec, [(8.2, 10.1)], 2.5, T=T, times=np.arange(T, dtype=float))
    f2 = generate_gaussians(spec, [(15.3, 10.2)], 2.5, T=T, times=np.arange(T, dtype=float))
    ramp = np.clip(np.linspace(-0.5, 1.0, T), 0, None)
    write_raw(TimeVaryingField(f1.complex, f1.values + f2.values * ramp, f1.times), path)


def test_tracks(tmp_path):
    split_field(tmp_path / "s")
    src = tmp_path / "s.raw"
    out = tmp_path / "one"
    assert run("tracks", src, "--seed", 8, 10, "--radius", 1.5, "--time", 2, "--plot",
               "--output-dir", out) == 0
    rows = (out / "tracks.csv").read_text().splitlines()
    assert rows[0] == "track,group,t,vertex,position,value"
    assert {r.split(",")[0] for r in rows[1:]} == {"0"}
    out = tmp_path / "split"
    assert run("tracks", src, "--seed", 10, 10, "--radius", 6, "--time", 2, "--mode", "after",
               "--plot", "--output-dir", out) == 0
    groups = {r.split(",")[1] for r in (out / "tracks.csv").read_text().splitlines()[1:]}
    assert groups == {"before", "after"}
    svg = (out / "tracks.svg").read_text()
    assert 'class="before"' in svg and 'class="after"' in svg
    out = tmp_path / "empty"
    assert run("tracks", src, "--seed", 1, 1, "--radius", 1, "--time", 2,
               "--output-dir", out) == 0
    assert (out / "tracks.csv").read_text() == "track,group,t,vertex,position,value\n"
    assert run("tracks", src, "--seed", 99, 1, "--radius", 1, "--time", 2,
               "--output-dir", out) == 2


def test_validate(tmp_path, sphere):
    assert run("validate", "--grid", 4, 4, "--periodic", 1, 1, "--closed",
               "--output-dir", tmp_path) == 0
    rep = json.loads((tmp_path / "validation.json").read_text())
    assert rep["valid"] and rep["euler_characteristic"] == 0
    path = tmp_path / "fin.json"
    path.write_text(json.dumps({"d": 2, "vertex_count": 5,
                                "maximal_simplices": [[0, 1, 2], [0, 1, 3], [0, 1, 4]]}))
    assert run("validate", "--complex", path, "--output-dir", tmp_path) == 3
    assert run("validate", "--output-dir", tmp_path) == 2


def test_console_script(tmp_path):
    r = subprocess.run([sys.executable, "-m", "plcerf.cli", "--version"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("plcerf ")
    r = subprocess.run([sys.executable, "-m", "plcerf.cli", "validate", "--grid", "3", "3",
                        "--output-dir", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0
