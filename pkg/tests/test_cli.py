import subprocess
import sys

import numpy as np
import pytest

from mcfse.cli import build_parser, config_from_args, main, parse_algos
from mcfse.evaluation import parse_report
from mcfse.pipeline import ConcealConfig

DIMS = ["--width", "64", "--height", "64"]
QUICK = ["--iterations", "40", "--fft-size", "1x1x1"]


def test_missing_width_names_flag(capsys):
    code = main(["conceal", "--height", "64", "--input", "a", "--mask", "b", "--output", "c"])
    assert code != 0
    assert "--width" in capsys.readouterr().err


def test_unknown_algorithm_rejected(capsys):
    code = main(["conceal", *DIMS, "--input", "a", "--mask", "b", "--output", "c", "--algo", "magic"])
    assert code != 0


def test_missing_input_file_is_one_line_error(tmp_path, capsys):
    code = main(["conceal", *DIMS, "--input", str(tmp_path / "none.yuv"), "--mask", "m", "--output", "o"])
    assert code == 1
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("mcfse conceal: error:")


def test_defaults_match_config():
    args = build_parser().parse_args(["conceal", *DIMS, "--input", "a", "--mask", "b", "--output", "c"])
    assert config_from_args(args) == ConcealConfig()


def test_parse_algos():
    assert parse_algos("tr, dmve:half,mcfse", "quarter") == [("TR", "quarter"), ("DMVE", "half"), ("MCFSE", "quarter")]
    with pytest.raises(ValueError):
        parse_algos("tr,bogus", "full")
    with pytest.raises(ValueError):
        parse_algos("tr:eighth", "full")
    with pytest.raises(ValueError):
        parse_algos(" , ", "full")


def test_pipeline_equals_chained_subcommands(tmp_path, capsys):
    src = ["--synthetic", "--frames", "3", "--motion", "1.5,0.5", "--seed", "3"]
    pipe = tmp_path / "pipe"
    assert main(["pipeline", *DIMS, *src, *QUICK, "--algos", "mcfse:half,dmve", "--out-dir", str(pipe)]) == 0
    table = capsys.readouterr().out
    assert "mcfse_half" in table and "dmve_quarter" in table

    d = tmp_path / "chain"
    d.mkdir()
    assert main(["corrupt", *DIMS, *src, "--output", str(d / "bad.yuv"), "--mask-out", str(d / "m.bin"),
                 "--original-out", str(d / "orig.yuv")]) == 0
    assert main(["conceal", *DIMS, *QUICK, "--input", str(d / "bad.yuv"), "--mask", str(d / "m.bin"),
                 "--output", str(d / "out.yuv"), "--algo", "mcfse", "--accuracy", "half",
                 "--report", str(d / "conceal.txt")]) == 0
    assert main(["evaluate", *DIMS, "--reference", str(d / "orig.yuv"), "--test", str(d / "out.yuv"),
                 "--mask", str(d / "m.bin"), "--report", str(d / "eval.txt")]) == 0

    assert (pipe / "original.yuv").read_bytes() == (d / "orig.yuv").read_bytes()
    assert (pipe / "mask.bin").read_bytes() == (d / "m.bin").read_bytes()
    assert (pipe / "concealed_mcfse_half.yuv").read_bytes() == (d / "out.yuv").read_bytes()
    assert parse_report(pipe / "evaluate_mcfse_half.txt") == parse_report(d / "eval.txt")
    chained = parse_report(d / "conceal.txt")
    assert parse_report(pipe / "conceal_mcfse_half.txt")["blocks"] == chained["blocks"]
    rows = parse_report(pipe / "comparison.txt")["comparison"]
    assert [r["algorithm"] for r in rows] == ["mcfse_half", "dmve_quarter"]


def test_static_pipeline_baselines_at_cap(tmp_path):
    out = tmp_path / "static"
    assert main(["pipeline", *DIMS, "--synthetic", "--frames", "3", *QUICK, "--algos", "tr,dmve,ebma,mcfse",
                 "--out-dir", str(out)]) == 0
    rows = {r["algorithm"]: r for r in parse_report(out / "comparison.txt")["comparison"]}
    for tag in ("tr_quarter", "dmve_quarter", "ebma_quarter"):
        assert float(rows[tag]["psnr"]) == 99.0
    assert float(rows["mcfse_quarter"]["psnr"]) > 25.0


def test_full_frame_evaluation(tmp_path, capsys):
    d = tmp_path
    main(["corrupt", *DIMS, "--synthetic", "--frames", "2", "--output", str(d / "bad.yuv"),
          "--mask-out", str(d / "m.bin"), "--original-out", str(d / "orig.yuv")])
    capsys.readouterr()
    assert main(["evaluate", *DIMS, "--reference", str(d / "orig.yuv"), "--test", str(d / "orig.yuv"),
                 "--full-frame", "--mask", str(d / "m.bin")]) == 0
    assert "99.0000 dB over 8192 samples" in capsys.readouterr().out


def test_error_frames_out_of_range(tmp_path):
    code = main(["corrupt", *DIMS, "--synthetic", "--frames", "2", "--error-frames", "5",
                 "--output", str(tmp_path / "a"), "--mask-out", str(tmp_path / "b")])
    assert code == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "mcfse", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "pipeline" in proc.stdout


def test_pipeline_is_deterministic(tmp_path):
    args = [*DIMS, "--synthetic", "--frames", "3", "--motion", "0.75,0.25", *QUICK, "--algos", "mcfse"]
    main(["pipeline", *args, "--out-dir", str(tmp_path / "a")])
    main(["pipeline", *args, "--out-dir", str(tmp_path / "b")])
    for name in ("concealed_mcfse_quarter.yuv", "mask.bin", "evaluate_mcfse_quarter.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    a = np.fromfile(tmp_path / "a" / "concealed_mcfse_quarter.yuv", np.uint8)
    assert a.size == 3 * 64 * 64
