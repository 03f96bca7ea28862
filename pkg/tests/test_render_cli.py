import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from laguerre.cli import main, model_from, model_warnings, read_config, resolve, build_parser
from laguerre.errors import LaguerreError
from laguerre.fixtures import cluster_configuration
from laguerre.model import Box, Family
from laguerre.render import HIGH_COLOR, LOW_COLOR, render_svg, time_color
from laguerre.sampler import SeedSet
from laguerre.tessellation import tessellate

SVG = "{http://www.w3.org/2000/svg}"


def _parse(text):
    return ET.fromstring(text)


def test_colormap_endpoints():
    assert time_color(0.0, 0.0, 1.0) == "#{:02x}{:02x}{:02x}".format(*LOW_COLOR)
    assert time_color(1.0, 0.0, 1.0) == "#{:02x}{:02x}{:02x}".format(*HIGH_COLOR)
    assert time_color(0.3, 1.0, 1.0) == time_color(0.0, 0.0, 1.0)


def test_svg_polygons_and_nuclei():
    S = cluster_configuration("B", 1 / 8)
    root = _parse(render_svg(tessellate(S), canvas=Box((-1, -1), (1, 1)), show_empty=True))
    polys = root.findall(f".//{SVG}polygon")
    assert len(polys) == 3
    assert len(root.findall(f".//{SVG}circle[@class='nucleus']")) == 3
    assert len(root.findall(f".//{SVG}circle[@class='empty']")) == 1
    root = _parse(render_svg(tessellate(S), canvas=Box((-1, -1), (1, 1))))
    assert not root.findall(f".//{SVG}circle[@class='empty']")


def test_svg_single_seed_fills_canvas():
    root = _parse(render_svg(tessellate(SeedSet.from_seeds([((0, 0), 0)])), canvas=Box((-1, -1), (1, 1)), size=100))
    (poly,) = root.findall(f".//{SVG}polygon")
    pts = np.array([p.split(",") for p in poly.get("points").split()], dtype=float)
    assert np.allclose(sorted(map(tuple, pts)), [(0, 0), (0, 100), (100, 0), (100, 100)])


def test_config_file_and_precedence(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("# comment\nmodel = beta\nbeta = 7   # inline\nreplications=12\nshow-empty = yes\n")
    assert read_config(cfg_file) == {"model": "beta", "beta": "7", "replications": "12", "show_empty": "yes"}
    args = build_parser().parse_args(["experiment", "--config", str(cfg_file), "--beta", "9"])
    cfg = resolve(args)
    assert cfg["beta"] == 9.0 and cfg["replications"] == 12 and cfg["show_empty"] is True
    assert cfg["tol"] == 0.01
    m = model_from(cfg)
    assert m.family is Family.BETA and m.beta == 9.0
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = red\n")
    with pytest.raises(LaguerreError):
        read_config(bad)


def test_beta_prime_warning():
    assert model_warnings(model_from({"model": "beta-prime", "beta": 3.0, "gamma": 1.0, "d": 2}))
    assert not model_warnings(model_from({"model": "beta-prime", "beta": 12.0, "gamma": 1.0, "d": 2}))


def test_sample_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sample", "--n", "2", "--seed", "3", "-o", str(a)]) == 0
    assert main(["sample", "--n", "2", "--seed", "3", "-o", str(b)]) == 0
    assert a.read_text() == b.read_text()
    report = json.loads(capsys.readouterr().out.split("\n}\n")[0] + "\n}")
    assert report["count"] == len(SeedSet.read(a))


def test_invalid_parameters_exit_2(tmp_path, capsys):
    assert main(["sample", "--model", "beta", "--beta", "-2", "-o", str(tmp_path / "x.csv")]) == 2
    assert "error:" in capsys.readouterr().err
    empty = tmp_path / "empty.csv"
    SeedSet(np.empty((0, 2)), np.empty(0)).write(empty)
    assert main(["render", str(empty), "-o", str(tmp_path / "e.svg")]) == 2


def test_tessellate_and_render_commands(tmp_path, capsys):
    seeds = tmp_path / "fixture.csv"
    cluster_configuration("A", 1 / 8).write(seeds)
    out, svg = tmp_path / "t.json", tmp_path / "t.svg"
    assert main(["tessellate", str(seeds), "-o", str(out), "--svg", str(svg), "--window", "1"]) == 0
    doc = json.loads(out.read_text())
    assert sum(c["extreme"] for c in doc["cells"]) == 4
    assert len(_parse(svg.read_text()).findall(f".//{SVG}circle[@class='nucleus']")) == 4


def test_verify_fixture(capsys):
    assert main(["verify", "fixture"]) == 0
    assert json.loads(capsys.readouterr().out)["passed"] is True
