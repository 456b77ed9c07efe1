import json

import pytest

import cli


@pytest.fixture
def config_file(tmp_path):
  def write(document):
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps(document))
    return str(path)
  return write


def test_list(capsys):
  assert cli.main(["list"]) == cli.EXIT_PASS
  out = capsys.readouterr().out
  assert len(out.splitlines()) == 12
  assert "kernel-xcheck" in out


def test_help_and_version(capsys):
  assert cli.main(["--help"]) == cli.EXIT_PASS
  assert "configuration keys" in capsys.readouterr().out
  assert cli.main(["--version"], version="9.9") == cli.EXIT_PASS
  assert "toeplitz-lab 9.9" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [[], ["bogus"], ["run"], ["run", "--config", "x.json", "--jobs", "many"]])
def test_usage_errors(argv):
  assert cli.main(argv) == cli.EXIT_USAGE


def test_configuration_error(config_file, capsys):
  path = config_file({"experiment": "weyl-count", "k_ladder": [400, 100]})
  assert cli.main(["run", "--config", path]) == cli.EXIT_USAGE
  assert "k_ladder" in capsys.readouterr().err


def test_passing_run(config_file, tmp_path, capsys):
  path = config_file({"experiment": "euler-maclaurin", "k_ladder": [100, 200]})
  out_dir = tmp_path / "results"
  assert cli.main(["run", "--config", path, "--output-dir", str(out_dir)]) == cli.EXIT_PASS
  out = capsys.readouterr().out
  assert "euler-maclaurin: PASS" in out
  assert sorted(p.suffix for p in out_dir.iterdir()) == [".csv", ".json"]


def test_failing_run(config_file, tmp_path, capsys):
  path = config_file({"experiment": "fourier-interval", "tolerances": {"residual": 0.01}})
  assert cli.main(["run", "--config", path, "--output-dir", str(tmp_path)]) == cli.EXIT_FAIL
  assert "FAIL" in capsys.readouterr().out
