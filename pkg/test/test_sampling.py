import numpy as np
import pytest

import config
import sampling
from errors import InterruptedRun, PreconditionError


def test_derived_generator_streams():
  a = sampling.derived_generator(42, 3).random(5)
  b = sampling.derived_generator(42, 3).random(5)
  c = sampling.derived_generator(42, 4).random(5)
  assert np.array_equal(a, b)
  assert not np.array_equal(a, c)
  with pytest.raises(PreconditionError):
    sampling.derived_generator(None, 0)


def test_block_sizes():
  assert sampling.block_sizes(10000, 4096) == [4096, 4096, 1808]
  assert sampling.block_sizes(4096, 4096) == [4096]
  with pytest.raises(PreconditionError):
    sampling.block_sizes(0)


@pytest.mark.parametrize("jobs", [1, 3])
def test_run_blocks_keeps_block_order(jobs):
  assert sampling.run_blocks(lambda index: index * index, 10, jobs) == [i * i for i in range(10)]


def test_run_blocks_raises_block_error():
  def block(index):
    if index == 2:
      raise ValueError("bad block")
    return index

  with pytest.raises(ValueError, match="bad block"):
    sampling.run_blocks(block, 5, 2)


def test_run_blocks_stopped():
  sampling.STOPPER.set()
  try:
    with pytest.raises(InterruptedRun):
      sampling.run_blocks(lambda index: index, 4, 1)
  finally:
    sampling.STOPPER.clear()


def test_environment_helpers(monkeypatch):
  monkeypatch.setenv("BTLAB_TEST_LADDER", "10, 20,40")
  assert config._get_ladder_env("BTLAB_TEST_LADDER", (1,)) == (10, 20, 40)
  monkeypatch.setenv("BTLAB_TEST_LADDER", "10,x")
  assert config._get_ladder_env("BTLAB_TEST_LADDER", (1,)) == (1,)
  monkeypatch.setenv("BTLAB_TEST_INT", "7")
  assert config._get_int_env("BTLAB_TEST_INT", 1) == 7
  monkeypatch.setenv("BTLAB_TEST_FLOAT", "nope")
  assert config._get_float_env("BTLAB_TEST_FLOAT", 0.5) == 0.5
  monkeypatch.setenv("BTLAB_TEST_BOOL", "off")
  assert config._get_bool_env("BTLAB_TEST_BOOL", True) is False
