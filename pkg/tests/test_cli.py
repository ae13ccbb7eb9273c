"""Command line: profile/explore via CliRunner, serve via subprocess."""

import json
import subprocess
import sys
import time

import pytest
from click.testing import CliRunner

from elinda.cli import main
from elinda.testing import MockSparqlEndpoint

from conftest import WORK


@pytest.fixture()
def runner():
    return CliRunner()


# ------------------------------------------------------------------ profile


def test_profile_json_fixture(runner, g_music_file):
    result = runner.invoke(
        main, ["profile", "--data", g_music_file, "--depth", "1", "--root", WORK]
    )
    assert result.exit_code == 0
    doc = json.loads(result.output)
    assert doc["classes"] == {"Work": {"Album": 2, "Single": 1}}


def test_profile_threshold(runner, g_music_file):
    result = runner.invoke(
        main,
        ["profile", "--data", g_music_file, "--root", WORK, "--threshold", "0.6"],
    )
    doc = json.loads(result.output)
    assert set(doc["properties"]["Album"]) == {"type", "artist"}


def test_profile_csv(runner, g_music_file):
    result = runner.invoke(
        main, ["profile", "--data", g_music_file, "--root", WORK, "--format", "csv"]
    )
    lines = result.output.strip().splitlines()
    assert "class,Work,Album,2" in lines
    assert "class,Work,Single,1" in lines


def test_profile_empty_file(runner, tmp_path):
    empty = tmp_path / "empty.nt"
    empty.write_text("")
    result = runner.invoke(main, ["profile", "--data", str(empty)])
    assert result.exit_code == 0
    assert json.loads(result.output) == {"classes": {}, "properties": {}}


def test_profile_parse_error_exit_2(runner, tmp_path):
    bad = tmp_path / "bad.nt"
    bad.write_text("<http://x/s> <http://x/p> <http://x/o> .\ngarbage\n")
    result = runner.invoke(main, ["profile", "--data", str(bad)])
    assert result.exit_code == 2
    assert "2" in result.output  # line number in the diagnostic


# ------------------------------------------------------------------ explore


def test_explore_script(runner, g_music_file, tmp_path):
    script = tmp_path / "walk.txt"
    script.write_text("select Album expand prop_out\nselect artist expand object_out\n")
    result = runner.invoke(
        main,
        ["explore", "--data", g_music_file, "--root", WORK, "--script", str(script)],
    )
    assert result.exit_code == 0
    assert "chart 0 (Work):" in result.output
    assert "chart 1 (Album / prop_out):" in result.output
    assert "Person" in result.output


def test_explore_empty_script_prints_initial_chart(runner, g_music_file):
    result = runner.invoke(main, ["explore", "--data", g_music_file, "--root", WORK])
    assert result.exit_code == 0
    assert result.output.count("chart") == 1
    assert "Album" in result.output


def test_explore_violation_exit_3(runner, g_music_file, tmp_path):
    script = tmp_path / "bad.txt"
    script.write_text("select Nope expand subclass\n")
    result = runner.invoke(
        main,
        ["explore", "--data", g_music_file, "--root", WORK, "--script", str(script)],
    )
    assert result.exit_code == 3
    assert "condition (a)" in result.output


def test_explore_filter_step(runner, g_music_file, tmp_path):
    script = tmp_path / "filter.txt"
    script.write_text(
        "select Album expand subclass\n"
        "select Album expand filter filter http://x/name equals A1\n"
    )
    result = runner.invoke(
        main,
        ["explore", "--data", g_music_file, "--root", WORK, "--script", str(script)],
    )
    assert result.exit_code == 0


def test_explore_bad_script_grammar_exit_2(runner, g_music_file, tmp_path):
    script = tmp_path / "bad.txt"
    script.write_text("frobnicate\n")
    result = runner.invoke(
        main,
        ["explore", "--data", g_music_file, "--root", WORK, "--script", str(script)],
    )
    assert result.exit_code == 2


# -------------------------------------------------------------------- serve


def test_serve_without_source_exit_1(runner):
    result = runner.invoke(main, ["serve"])
    assert result.exit_code == 1
    assert "--data" in result.output


def test_serve_prints_stats_and_binds(g_music_file):
    proc = subprocess.Popen(
        [sys.executable, "-m", "elinda.cli", "serve", "--data", g_music_file, "--port", "0"],
        stdout=subprocess.PIPE,
        stderr=subprocess.STDOUT,
        text=True,
    )
    try:
        line = proc.stdout.readline().strip()
        assert line == "10 triples, 1 classes"
        time.sleep(0.5)
        assert proc.poll() is None  # still serving
    finally:
        proc.terminate()
        proc.wait(timeout=10)


def test_serve_endpoint_probe_stats(g_music):
    with MockSparqlEndpoint(g_music) as mock:
        proc = subprocess.Popen(
            [sys.executable, "-m", "elinda.cli", "serve", "--endpoint", mock.url, "--port", "0"],
            stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT,
            text=True,
        )
        try:
            line = proc.stdout.readline().strip()
            assert line == "10 triples, 1 classes"
        finally:
            proc.terminate()
            proc.wait(timeout=10)


def test_serve_bad_config_exit_1(runner, tmp_path):
    cfg = tmp_path / "bad.conf"
    cfg.write_text("not a config\n")
    result = runner.invoke(main, ["serve", "--config", str(cfg)])
    assert result.exit_code == 1
