"""Command line behavior: exit codes, output routing, reproducibility."""

from pathlib import Path

import pytest

from parksim.cli import main
from parksim.scenario import load_scenario

TINY = """\
name = "tiny-cli"
sim_time_s = 600.0
batches = 1
seed = 1

[topology]
kind = "cross"
n_sensors = 12

[traffic]
mean_cycle_s = 1200.0

[sweep]
mode = ["schedule", "contention"]
"""


@pytest.fixture
def tiny_toml(tmp_path):
    path = tmp_path / "tiny.toml"
    path.write_text(TINY)
    return path


def _tree(root: Path):
    return {p.relative_to(root): p.read_bytes()
            for p in root.rglob("*") if p.is_file()}


def test_list_figures_prints_catalog(capsys):
    assert main(["list-figures"]) == 0
    out = capsys.readouterr().out
    for fid in ("energy-vs-N", "delay-vs-N", "energy-vs-omega",
                "delay-vs-load", "energy-delay-tradeoff", "parking-map-load"):
        assert fid in out


def test_reproduce_emits_loadable_scenario(tmp_path, capsys):
    assert main(["reproduce", "energy-vs-omega", "--out-dir", str(tmp_path)]) == 0
    emitted = tmp_path / "energy-vs-omega.toml"
    assert emitted.exists()
    assert str(emitted) in capsys.readouterr().out
    sc = load_scenario(emitted)
    assert sc.name == "energy-vs-omega"
    assert sc.batches == 20


def test_reproduce_resolves_aliases(tmp_path):
    assert main(["reproduce", "energy-vs-ω", "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "energy-vs-omega.toml").exists()


def test_reproduce_unknown_figure_lists_catalog(capsys):
    assert main(["reproduce", "fig7"]) == 2
    err = capsys.readouterr().err
    assert "fig7" in err
    assert "delay-vs-load" in err


def test_run_writes_results_and_reruns_identically(tmp_path, tiny_toml):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["run", str(tiny_toml), "--out-dir", str(out_a)]) == 0
    assert main(["run", str(tiny_toml), "--out-dir", str(out_b)]) == 0
    tree_a, tree_b = _tree(out_a), _tree(out_b)
    assert set(tree_a) == set(tree_b)
    assert (out_a / "summary.csv").exists()
    for rel, blob in tree_a.items():
        assert tree_b[rel] == blob, rel


def test_run_seed_override_changes_results(tmp_path, tiny_toml):
    out_a = tmp_path / "a"
    out_c = tmp_path / "c"
    assert main(["run", str(tiny_toml), "--out-dir", str(out_a)]) == 0
    assert main(["run", str(tiny_toml), "--seed", "7", "--out-dir", str(out_c)]) == 0
    assert (out_a / "summary.csv").read_bytes() != (out_c / "summary.csv").read_bytes()


def test_out_dir_env_fallback(tmp_path, tiny_toml, monkeypatch):
    target = tmp_path / "from-env"
    monkeypatch.setenv("PARKSIM_OUT_DIR", str(target))
    assert main(["run", str(tiny_toml)]) == 0
    assert (target / "summary.csv").exists()


def test_invalid_scenario_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text('name = "x"\n[mac]\nslot = 0.1\n')
    assert main(["run", str(bad)]) == 2
    assert "invalid scenario" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "nope.toml")]) == 2


def test_runtime_failure_exits_3(tmp_path, capsys):
    bad = tmp_path / "filemap.toml"
    bad.write_text(
        'name = "x"\n[topology]\nkind = "file"\nmap_path = "missing.toml"\n')
    assert main(["run", str(bad)]) == 3
    assert "runtime failure" in capsys.readouterr().err
