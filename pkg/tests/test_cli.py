import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from projdual import checks, cli, cloudio


def run(args, capsys):
    code = cli.main(args)
    out, err = capsys.readouterr()
    return code, out, err


def test_dual_sphere_reciprocal(tmp_path, capsys):
    out = tmp_path / "dual.json"
    code, text, _ = run(["dual", "--shape", "sphere:r=2", "--res", "64", "--out", str(out)], capsys)
    assert code == 0 and "dual points" in text
    cf = cloudio.read_cloudfile(out)
    assert cf.validate()
    x = cf.to_cloud().chart_points()
    assert np.max(np.abs(np.linalg.norm(x, axis=1) - 0.5)) < 1e-9
    assert cf.meta["shape"] == "sphere:r=2" and cf.meta["resolution"] == "64"


def test_output_is_deterministic(tmp_path, capsys):
    out = tmp_path / "o.json"
    args = ["outline", "--shape", "ellipsoid:a=3,b=2,c=1", "--dirs", "fibonacci:3", "--res", "48",
            "--out", str(out)]
    run(args, capsys)
    first = out.read_bytes()
    run(args, capsys)
    assert out.read_bytes() == first
    assert "timestamp" not in json.loads(first)["meta"]


def test_verify_involution_shape(capsys):
    code, text, _ = run(["verify", "involution", "--shape", "ellipse:a=2,b=1", "--res", "64"], capsys)
    assert code == 0
    assert "max involution residual" in text and "PASS" in text


def test_outline_torus_top_view_svg(tmp_path, capsys):
    svg, js = tmp_path / "out.svg", tmp_path / "out.json"
    code, _, _ = run(["outline", "--shape", "torus:R=2,r=0.5", "--dir", "v=0,0,1", "--res", "128",
                      "--svg", str(svg), "--out", str(js)], capsys)
    assert code == 0
    paths = [e for e in ET.parse(svg).getroot().iter() if e.tag.endswith("path")]
    assert len(paths) == 2
    radii = []
    for p in paths:
        xy = np.array([[float(a) for a in tok[1:].split(",")] for tok in p.get("d").split()
                       if tok[0] in "ML"])
        r = np.linalg.norm(xy - [500, 500], axis=1)
        assert np.ptp(r) < 0.01 * r.mean()
        radii.append(r.mean())
    assert sorted(radii)[1] / sorted(radii)[0] == pytest.approx(2.5 / 1.5, rel=1e-4)
    cf = cloudio.read_cloudfile(js).to_cloud()
    r = np.linalg.norm(cf.chart_points(), axis=1)
    comp = cf.provenance["component"]
    np.testing.assert_allclose(sorted(r[comp == c].mean() for c in set(comp)), [1.5, 2.5], atol=1e-6)


def test_slice_and_export(tmp_path, capsys):
    dual = tmp_path / "d.json"
    run(["dual", "--shape", "sphere:r=1", "--res", "32", "--out", str(dual)], capsys)
    sl = tmp_path / "s.json"
    code, text, _ = run(["slice", "--in", str(dual), "--dir", "v=0,0,1", "--eps-slice", "1e-12",
                         "--out", str(sl)], capsys)
    assert code == 0 and "32 points" in text
    code, text, _ = run(["export", "--in", str(sl), "--format", "csv"], capsys)
    assert code == 0 and text.splitlines()[0] == "x1,x2,x3,x4" and len(text.splitlines()) == 33


def test_slice_from_shape(capsys):
    code, text, _ = run(["slice", "--shape", "ellipsoid:a=3,b=2,c=1", "--dirs", "fibonacci:1",
                         "--res", "32"], capsys)
    assert code == 0 and "outline dual one-sided" in text


def test_transform_homothety(tmp_path, capsys):
    dual = tmp_path / "d.json"
    run(["dual", "--shape", "sphere:r=1", "--res", "16", "--out", str(dual)], capsys)
    out = tmp_path / "t.json"
    code, _, _ = run(["transform", "--in", str(dual), "--matrix", "1.7,0,0,0;0,1.7,0,0;0,0,1.7,0;0,0,0,1",
                      "--out", str(out)], capsys)
    assert code == 0
    x = cloudio.read_cloudfile(out).to_cloud().chart_points()
    np.testing.assert_allclose(np.linalg.norm(x, axis=1), 1.7, atol=1e-12)
    back = tmp_path / "b.json"
    run(["transform", "--in", str(out), "--matrix", "1.7,0,0,0;0,1.7,0,0;0,0,1.7,0;0,0,0,1",
         "--dual", "--out", str(back)], capsys)
    x = cloudio.read_cloudfile(back).to_cloud().chart_points()
    np.testing.assert_allclose(np.linalg.norm(x, axis=1), 1.0, atol=1e-12)


def test_reconstruct_from_outlines(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, text, _ = run(["reconstruct", "--shape", "sphere:r=2", "--dirs", "fibonacci:16",
                         "--res", "64", "--out", str(out)], capsys)
    assert code == 0 and "distance to sphere:r=2" in text
    x = cloudio.read_cloudfile(out).to_cloud().chart_points()
    assert np.max(np.abs(np.linalg.norm(x, axis=1) - 2)) < 5e-3 * 4


@pytest.mark.parametrize("args", [
    ["dual", "--shape", "cube:r=1"],
    ["dual", "--shape", "sphere:r=-2"],
    ["outline", "--shape", "sphere:r=1", "--dir", "v=1,0"],
    ["outline", "--shape", "sphere:r=1", "--dirs", "spiral:4"],
    ["outline", "--shape", "sphere:r=1"],
    ["dual"],
    ["frobnicate"],
])
def test_usage_errors_exit_2(args, capsys):
    try:
        code = cli.main(args)
    except SystemExit as exc:
        code = exc.code
    _, err = capsys.readouterr()
    assert code == 2
    assert "error:" in err


def test_grammar_in_usage_error(capsys):
    code, _, err = run(["dual", "--shape", "blob"], capsys)
    assert code == 2 and "shape grammar:" in err


@pytest.mark.parametrize("args", [
    ["reconstruct", "--shape", "sphere:r=1", "--dirs", "fibonacci:2", "--res", "16"],
    ["export", "--in", "/nonexistent/cloud.json", "--format", "json"],
    ["outline", "--shape", "plane", "--dir", "v=0,0,1", "--res", "16"],
])
def test_domain_errors_exit_1(args, capsys):
    code, _, err = run(args, capsys)
    assert code == 1
    assert all(line.startswith("error:") for line in err.strip().splitlines())


def test_svg_export_of_3d_cloud_is_domain_error(tmp_path, capsys):
    dual = tmp_path / "d.json"
    run(["dual", "--shape", "sphere:r=1", "--res", "8", "--out", str(dual)], capsys)
    code, _, err = run(["export", "--in", str(dual), "--format", "svg"], capsys)
    assert code == 1 and "UnsupportedFormat" in err


def test_verify_all_exit_code_contract(monkeypatch, capsys):
    def fake(number, passed):
        return lambda **kw: checks.CheckResult(number, f"check {number}", passed, "", {})
    monkeypatch.setattr(checks, "CHECKS", {1: fake(1, True), 2: fake(2, True)})
    code, text, _ = run(["verify", "all"], capsys)
    assert code == 0 and text.count("[PASS]") == 2
    monkeypatch.setattr(checks, "CHECKS", {1: fake(1, True), 2: fake(2, False)})
    code, text, _ = run(["verify", "all"], capsys)
    assert code == 1 and "[FAIL]" in text


def test_verify_single_check(capsys):
    code, text, _ = run(["verify", "conic"], capsys)
    assert code == 0 and text.startswith("[PASS]")


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "projdual", "--version"], capture_output=True,
                         text=True)
    assert out.returncode == 0 and out.stdout.startswith("projdual ")
