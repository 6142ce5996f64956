import json
import math

import numpy as np
import pytest

from deblurkit.cli import build_parser, main
from deblurkit.io import read_image, write_image
from deblurkit.kernels import GeneralizedGaussianPsf
from deblurkit.metrics import ssim
from deblurkit.simulate import natural_field, simulate


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    payload = json.loads(out)
    assert "spec_version" in payload
    return payload


@pytest.fixture
def blurry(tmp_path):
    """1/r field blurred with a unit Gaussian plus 1/255 noise, and its ground truth."""
    truth = natural_field((256, 256), seed=11)
    write_image(tmp_path / "truth.png", truth)
    clean = read_image(tmp_path / "truth.png").data
    blurred = simulate(clean, GeneralizedGaussianPsf(2.0, 1.0), 1 / 255, seed=0)
    write_image(tmp_path / "blurry.png", blurred)
    return tmp_path / "blurry.png", tmp_path / "truth.png"


def test_help_lists_defaults(capsys):
    with pytest.raises(SystemExit):
        main(["deblur", "--help"])
    out = capsys.readouterr().out
    for text in ("--omega-t", "default: auto", "default: 0.5", "default: 7", "--denoise-ratio", "--bins"):
        assert text in out
    for cmd in ("estimate", "design", "simulate", "spectrum", "metrics"):
        with pytest.raises(SystemExit):
            main([cmd, "--help"])
    assert "--seed" in capsys.readouterr().out


def test_design_command(capsys, tmp_path):
    d = run_json(capsys, "design", "--beta", 1.5, "--sigma", 2, "--order", 7, "--omega-t", math.pi,
                 "--csv", tmp_path / "k.csv")
    assert d["N"] == 7 and len(d["coefficients"]) == 8
    assert d["feasibility_error"] <= 1e-3
    lines = (tmp_path / "k.csv").read_text().splitlines()
    assert lines[0] == "index,tap"
    idx = [int(line.split(",")[0]) for line in lines[1:]]
    assert idx == list(range(-(len(idx) // 2), len(idx) // 2 + 1))
    taps = [float(line.split(",")[1]) for line in lines[1:]]
    np.testing.assert_allclose(taps, d["kernel_taps"], rtol=0, atol=0)


def test_design_csv_other_kernels(capsys, tmp_path):
    run_json(capsys, "design", "--kernel", "psf", "--csv", tmp_path / "p.csv")
    taps = np.loadtxt(tmp_path / "p.csv", delimiter=",", skiprows=1)[:, 1]
    assert taps.sum() == pytest.approx(1.0)
    run_json(capsys, "design", "--kernel", "derivative", "--derivative-order", 2, "--omega-t", 2, "--csv", tmp_path / "d.csv")
    taps = np.loadtxt(tmp_path / "d.csv", delimiter=",", skiprows=1)[:, 1]
    assert abs(taps.sum()) < 1e-9


def test_infeasible_design_exits_3(capsys):
    code, _, err = run(capsys, "design", "--beta", 2, "--sigma", 3, "--gain-cap", 100)
    assert code == 3 and "feasibility" in err


def test_invalid_arguments_exit_2(capsys, blurry):
    src, _ = blurry
    assert run(capsys, "deblur", src, "--gamma", 1.5)[0] == 2
    assert run(capsys, "simulate", src, src.with_name("o.png"), "--sigma", 0)[0] == 2
    with pytest.raises(SystemExit) as info:
        main(["deblur", str(src), "--model", "cauchy"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["deblur", str(src), "--scale-factor", "3"])
    assert info.value.code == 2


def test_io_failures_exit_4(capsys, tmp_path):
    assert run(capsys, "metrics", tmp_path / "missing.png")[0] == 4
    (tmp_path / "x.txt").write_text("hello")
    assert run(capsys, "spectrum", tmp_path / "x.txt")[0] == 4


def test_simulate_is_deterministic(capsys, blurry, tmp_path):
    _, truth = blurry
    for name in ("a.png", "b.png"):
        code, _, _ = run(capsys, "simulate", truth, tmp_path / name, "--sigma", 1.2, "--noise-sigma", 0.01, "--seed", 5)
        assert code == 0
    assert np.array_equal(read_image(tmp_path / "a.png").data, read_image(tmp_path / "b.png").data)


def test_simulate_identity(capsys, blurry, tmp_path):
    _, truth = blurry
    run(capsys, "simulate", truth, tmp_path / "same.png", "--sigma", 0.05)
    assert np.array_equal(read_image(tmp_path / "same.png").data, read_image(truth).data)


def test_estimate_command(capsys, blurry):
    src, _ = blurry
    d = run_json(capsys, "estimate", src)
    assert 0.90 <= d["alpha"] <= 1.15
    assert len(d["estimates"]) == 1 and d["estimates"][0]["model"] == "gaussian"


def test_zero_gamma_is_identity(capsys, blurry, tmp_path):
    src, _ = blurry
    out = tmp_path / "out.png"
    d = run_json(capsys, "deblur", src, "-o", out, "--gamma", 0, "--gain-cap", 3)
    assert d["gamma"] == [0.0]
    assert np.array_equal(read_image(out).data, read_image(src).data)


def test_rgb_report_has_three_estimates(capsys, tmp_path):
    fields = [natural_field((128, 128), seed=s) for s in range(3)]
    rgb = simulate(np.stack(fields, axis=-1), GeneralizedGaussianPsf(2.0, 1.0), 1 / 255, seed=2)
    write_image(tmp_path / "rgb.tif", rgb, 16)
    d = run_json(capsys, "deblur", tmp_path / "rgb.tif", "-o", tmp_path / "o.tif", "--gain-cap", 3)
    alphas = [e["alpha"] for e in d["estimates"]]
    assert len(alphas) == 3 and d["alpha"] == pytest.approx(np.median(alphas))
    assert len(d["gamma"]) == 3
    assert read_image(tmp_path / "o.tif").bit_depth == 16


def test_known_alpha_deblur_improves_ssim(capsys, blurry, tmp_path):
    src, truth = blurry
    d = run_json(capsys, "deblur", src, "-o", tmp_path / "o.png", "--alpha", 1, "--gain-cap", 2, "--reference", truth)
    assert d["estimates"] == []
    gt = read_image(truth).data
    assert d["metrics"]["ssim"] > ssim(gt, read_image(src).data) + 0.05


@pytest.mark.xfail(strict=True, reason="one-shot linear restoration tops out near 0.88 SSIM at 1/255 noise")
def test_known_alpha_deblur_reaches_095_ssim(capsys, blurry, tmp_path):
    src, truth = blurry
    best = 0.0
    for cap in ("1.5", "2", "3", "5", "100"):
        for extra in ([], ["--denoise"]):
            code, out, _ = run(capsys, "deblur", src, "-o", tmp_path / "o.png", "--alpha", 1, "--gain-cap", cap,
                               "--reference", truth, *extra)
            if code == 0:
                best = max(best, json.loads(out)["metrics"]["ssim"])
    assert best >= 0.95


def test_directory_mode(capsys, blurry, tmp_path):
    src, _ = blurry
    folder = tmp_path / "in"
    folder.mkdir()
    for name in ("a.png", "b.png"):
        (folder / name).write_bytes(src.read_bytes())
    (folder / "notes.txt").write_text("skip me")
    d = run_json(capsys, "deblur", folder, "-o", tmp_path / "out", "--gain-cap", 3)
    assert [r["input"].split("/")[-1] for r in d["images"]] == ["a.png", "b.png"]
    assert sorted(p.name for p in (tmp_path / "out").iterdir()) == ["a.png", "b.png"]
    assert run(capsys, "deblur", folder)[0] == 2


def test_report_file_and_config_precedence(capsys, blurry, tmp_path):
    src, _ = blurry
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"gain_cap": 2, "alpha": 1.0}))
    report = tmp_path / "r.json"
    assert run(capsys, "--config", cfg, "deblur", src, "-o", tmp_path / "o.png", "--report", report)[0] == 0
    low = json.loads(report.read_text())
    assert low["spec_version"] and low["alpha"] == 1.0
    d = run_json(capsys, "--config", cfg, "deblur", src, "-o", tmp_path / "o.png", "--gain-cap", 5)
    assert d["design"]["omega_T"] > low["design"]["omega_T"]


def test_bad_config_file(capsys, tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["--config", str(tmp_path / "nope.json"), "design"])
    assert info.value.code == 4


def test_spectrum_of_constant_image(capsys, tmp_path):
    write_image(tmp_path / "c.png", np.full((64, 64), 0.5))
    code, out, _ = run(capsys, "spectrum", tmp_path / "c.png", "--bins", 16)
    rows = out.strip().splitlines()
    assert code == 0 and rows[0] == "r,value" and len(rows) == 17
    values = [float(r.split(",")[1]) for r in rows[1:]]
    assert values[0] > 0 and all(v < 1e-12 for v in values[1:])


def test_metrics_command(capsys, blurry):
    src, truth = blurry
    d = run_json(capsys, "metrics", src, "--reference", truth)
    assert 0 < d["ssim"] < 1 and d["psnr_db"] > 20
    d = run_json(capsys, "metrics", truth, "--reference", truth)
    assert d["psnr_db"] == "inf" and d["ssim"] == 1.0
    d = run_json(capsys, "metrics", src)
    assert d["ssim"] is None


def test_parser_builds():
    parser = build_parser()
    assert set(parser.commands) == {"deblur", "estimate", "design", "simulate", "spectrum", "metrics"}
