import math

import pytest

# Local Imports
from shrinklab.cli.deps import CURVE_SHAPES, MESH_SHAPES, build_run_config
from shrinklab.core.exceptions import PreconditionError
from shrinklab.main import run
from shrinklab.services.verification import get_verification


def test_tc_of_square(tmp_path, capsys):
    assert run(["tc", "--shape", "square", "--out-dir", str(tmp_path)]) == 0
    assert abs(float(capsys.readouterr().out.strip()) - 2 * math.pi) <= 1e-9
    lines = (tmp_path / "tc.csv").read_text().splitlines()
    assert lines[1] == "tc,vertices,simple,planar"
    assert lines[2].endswith(",4,true,true")


def test_tc_from_curve_file(tmp_path, capsys):
    path = tmp_path / "triangle.csv"
    path.write_text("x,y\n0,0\n1,0\n0,1\n")
    assert run(["tc", "--curve", str(path), "--out-dir", str(tmp_path)]) == 0
    assert abs(float(capsys.readouterr().out.strip()) - 2 * math.pi) <= 1e-9


def test_usage_errors_exit_two(tmp_path):
    assert run([]) == 2
    assert run(["unknown"]) == 2
    assert run(["tc", "--out-dir", str(tmp_path)]) == 2
    assert run(["deform", "--shape", "circle", "--alpha", "13"]) == 2
    assert run(["flow-curve", "--shape", "circle", "--t-end", "-1"]) == 2


def test_unknown_config_key_exits_two(tmp_path):
    config = tmp_path / "run.cfg"
    config.write_text("shape = square\nwobble = 3\n")
    assert run(["tc", "--config", str(config), "--out-dir", str(tmp_path)]) == 2


def test_missing_config_file_exits_two(tmp_path):
    assert run(["tc", "--shape", "square", "--config", str(tmp_path / "missing.cfg")]) == 2


def test_flags_override_config_file(tmp_path):
    config = tmp_path / "run.cfg"
    config.write_text("shape = circle\nseed = 3\nout-dir = results\n")
    cfg = build_run_config("tc", {"seed": 9, "threads": None}, config)
    assert cfg.shape == "circle"
    assert cfg.seed == 9
    assert cfg.out_dir.name == "results"


def test_domain_errors_exit_one(tmp_path, capsys):
    assert run(["link", "--shape", "annulus", "--out-dir", str(tmp_path)]) == 1
    assert "PreconditionError" in capsys.readouterr().err
    assert run(["tc", "--shape", "pentagram", "--out-dir", str(tmp_path)]) == 1
    assert run(["deform", "--shape", "trefoil", "--out-dir", str(tmp_path)]) == 1


def test_link_of_mobius(tmp_path, capsys):
    assert run(["link", "--shape", "mobius", "--out-dir", str(tmp_path)]) == 0
    lam, half_odd, verdict = capsys.readouterr().out.strip().split(",")
    assert abs(int(lam)) == 2
    assert half_odd == "true"
    assert verdict == "true"
    assert (tmp_path / "link.csv").is_file()


def test_flow_curve_writes_diagnostics(tmp_path):
    code = run(["flow-curve", "--shape", "circle", "--t-end", "0.05", "--snapshot-every", "50",
                "--out-dir", str(tmp_path)])
    assert code == 0
    assert any(p.name.endswith("diagnostics.csv") for p in tmp_path.iterdir())


def test_deform_writes_audit(tmp_path):
    code = run(["deform", "--shape", "twisted-quadrilateral", "--samples", "4", "--out-dir", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "deform_audit.csv").is_file()
    assert (tmp_path / "deform_0000.csv").is_file()


def test_shape_catalogue():
    for name in ("circle", "square", "trefoil", "twisted-quadrilateral"):
        assert name in CURVE_SHAPES
    for name in ("disk", "mobius", "sphere", "annulus"):
        assert name in MESH_SHAPES


def test_unknown_suite_is_rejected():
    with pytest.raises(PreconditionError):
        get_verification(seed=1).checks("nightly")


def test_full_suite_carries_the_acceptance_checks():
    service = get_verification(seed=1)
    names = [name for name, _ in service.checks("full")]
    for name in ("entropy_half_plane", "shrinker_residual_planes", "renormalized_stationarity",
                 "entropy_monotone_disk", "lambda_flow_constancy", "deform_corpus", "vision_tc_bound"):
        assert name in names
    assert len(service.vision_corpus(full=True)) == 20
    corpus = service.deform_corpus()
    assert len(corpus) == 10
    assert all(curve.total_curvature() <= 3.6 * math.pi for curve in corpus)


def test_plane_residual_check_passes():
    passed, value, _ = get_verification(seed=1).check_plane_residuals(full=False)
    assert passed
    assert value < 1e-6


@pytest.mark.slow
def test_fast_verification_suite(tmp_path, capsys):
    assert run(["verify", "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "verify_fast.csv").is_file()
