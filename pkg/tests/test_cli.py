import json

import pytest

from app.core.config import ENV_LOG_LEVEL, ENV_WORKERS
from app.db.manifest import MANIFEST_NAME, read_manifest
from app.main import cli, dispatch

SUBCOMMANDS = [
    "synth-mosaic",
    "synth-render",
    "fit-light",
    "remove",
    "evaluate",
    "ablate",
    "split",
    "validate-manifest",
]


@pytest.fixture(autouse=True)
def _no_env_workers(monkeypatch):
    monkeypatch.delenv(ENV_WORKERS, raising=False)


@pytest.mark.parametrize("name", SUBCOMMANDS)
def test_every_subcommand_has_help(name, capsys):
    assert dispatch([name, "--help"]) == 0
    out = capsys.readouterr().out
    for flag in ("--config", "--seed", "--workers", "--verbose"):
        assert flag in out
    for param in cli.commands[name].params:
        for opt in param.opts:
            assert opt in out


def test_unknown_subcommand_is_a_usage_error(capsys):
    assert dispatch(["paint"]) == 2
    assert "Usage" in capsys.readouterr().err


def test_unknown_flag_is_a_usage_error(capsys):
    assert dispatch(["split", "--bogus"]) == 2
    assert "--manifest" in capsys.readouterr().err


def test_bad_config_value_exits_2(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("workers = 0\n", encoding="utf-8")
    assert dispatch(["validate-manifest", "--config", str(path)]) == 2


def test_synth_split_evaluate_remove(tmp_path, demo_assets, capsys):
    backgrounds, persons = demo_assets
    data = tmp_path / "data"
    common = ["--backgrounds", str(backgrounds), "--persons", str(persons)]

    assert dispatch(["synth-mosaic", "--count", "6", "--seed", "4", *common, "--out", str(data)]) == 0
    manifest = data / MANIFEST_NAME
    assert len(read_manifest(manifest).entries) == 6

    capsys.readouterr()
    assert dispatch(["validate-manifest", "--manifest", str(manifest)]) == 0
    assert json.loads(capsys.readouterr().out) == {"entries": 6, "problems": []}

    assert dispatch(["split", "--manifest", str(manifest), "--train-fraction", "0.5"]) == 0
    assert len(read_manifest(manifest).by_split("test")) == 3

    out = tmp_path / "eval"
    assert dispatch(["evaluate", "--manifest", str(manifest), "--out", str(out), "--refine-iters", "1"]) == 0
    assert (out / "report.csv").is_file()
    assert (out / "report.md").is_file()
    assert "PSNR↑" in capsys.readouterr().out

    result = tmp_path / "clean.png"
    stages = tmp_path / "stages"
    argv = [
        "remove",
        "--mode",
        "legacy_inpaint",
        "--restorer",
        "exemplar",
        "--in",
        str(data / "source" / "00000.png"),
        "--mask",
        str(data / "mask" / "00000.png"),
        "--out",
        str(result),
        "--stages",
        str(stages),
    ]
    assert dispatch(argv) == 0
    assert result.is_file()
    assert sorted(p.name for p in stages.iterdir()) == ["stage_1.png", "stage_2.png"]


def test_evaluate_exits_1_when_an_entry_fails(tmp_path, demo_assets):
    backgrounds, persons = demo_assets
    data = tmp_path / "data"
    common = ["--backgrounds", str(backgrounds), "--persons", str(persons)]
    assert dispatch(["synth-mosaic", "--count", "4", *common, "--out", str(data)]) == 0
    manifest = data / MANIFEST_NAME
    assert dispatch(["split", "--manifest", str(manifest), "--train-fraction", "0.5"]) == 0
    victim = read_manifest(manifest).by_split("test")[0]
    (data / victim.target_path).unlink()

    assert dispatch(["evaluate", "--manifest", str(manifest), "--out", str(tmp_path / "eval")]) == 1
    assert dispatch(["validate-manifest", "--manifest", str(manifest)]) == 1


def test_synth_render_full_regime(tmp_path, demo_assets):
    backgrounds, persons = demo_assets
    out = tmp_path / "render"
    argv = [
        "synth-render",
        "--backgrounds",
        str(backgrounds),
        "--persons",
        str(persons),
        "--count",
        "2",
        "--lighting",
        "full",
        "--angles",
        "3",
        "--out",
        str(out),
    ]
    assert dispatch(argv) == 0
    entries = read_manifest(out / MANIFEST_NAME).entries
    assert len(entries) == 6
    assert all((out / e.depth_path).is_file() for e in entries)


def test_fit_light_prints_json(demo_assets, capsys):
    backgrounds, persons = demo_assets
    argv = [
        "fit-light",
        "--background",
        str(backgrounds / "bg000.png"),
        "--person",
        str(persons / "p000.png"),
        "--person-mask",
        str(persons / "p000_mask.png"),
        "--anchor",
        "32",
        "40",
        "--method",
        "grid",
        "--grid",
        "angle=0:240:3",
        "--grid",
        "gain=0.8:1.2:3",
    ]
    capsys.readouterr()
    assert dispatch(argv) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["evaluations"] == 9
    assert set(result["params"]) == {"gain", "offset", "gamma", "angle_deg", "ramp_strength"}


def test_fit_light_rejects_malformed_grid(demo_assets):
    backgrounds, persons = demo_assets
    argv = [
        "fit-light",
        "--background",
        str(backgrounds / "bg000.png"),
        "--person",
        str(persons / "p000.png"),
        "--person-mask",
        str(persons / "p000_mask.png"),
        "--anchor",
        "32",
        "40",
        "--method",
        "grid",
        "--grid",
        "hue=0:1:2",
    ]
    assert dispatch(argv) == 1


def test_bad_log_level_is_a_config_error(monkeypatch):
    monkeypatch.setenv(ENV_LOG_LEVEL, "LOUD")
    assert dispatch(["validate-manifest"]) == 2


@pytest.mark.parametrize("method", ["descent", "grid"])
def test_fit_light_starts_from_the_configured_lighting(method, tmp_path, demo_assets, capsys):
    backgrounds, persons = demo_assets
    config = tmp_path / "c.toml"
    config.write_text("[render.fixed]\ngain = [1.25, 1.0, 0.75]\noffset = 0.05\n", encoding="utf-8")
    argv = [
        "fit-light",
        "--config",
        str(config),
        "--background",
        str(backgrounds / "bg000.png"),
        "--person",
        str(persons / "p000.png"),
        "--person-mask",
        str(persons / "p000_mask.png"),
        "--anchor",
        "32",
        "40",
        "--method",
        method,
    ]
    argv += ["--budget", "1"] if method == "descent" else ["--grid", "angle=0:180:2"]
    capsys.readouterr()
    assert dispatch(argv) == 0
    params = json.loads(capsys.readouterr().out)["params"]
    assert params["gain"] == pytest.approx([1.25, 1.0, 0.75])
    assert params["offset"] == pytest.approx(0.05)


@pytest.mark.slow
def test_five_hundred_image_run_is_reproducible(tmp_path, demo_assets):
    backgrounds, persons = demo_assets
    data = tmp_path / "data"
    argv = ["synth-mosaic", "--count", "500", "--backgrounds", str(backgrounds), "--persons", str(persons)]
    assert dispatch([*argv, "--out", str(data), "--workers", "4"]) == 0
    manifest = data / MANIFEST_NAME
    assert dispatch(["split", "--manifest", str(manifest), "--train-fraction", "0.7"]) == 0

    csvs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert dispatch(["evaluate", "--manifest", str(manifest), "--out", str(out), "--workers", "4"]) == 0
        csvs.append((out / "report.csv").read_text(encoding="utf-8"))
    lines = csvs[0].splitlines()
    assert lines[0] == "id,psnr,lpips,ssim,rmse,rmsew"
    assert len(lines) == 1 + 150 + 1
    assert csvs[0] == csvs[1]
