"""
  Reproducible block sampling over worker threads

  Monte-Carlo work is cut into fixed-size blocks. Block b always draws from the
  Philox stream keyed by (seed, b), so results are bit-identical for any number
  of worker threads. Block results come back in block order and are combined
  by the caller in that order.

        This program is free software: you can redistribute it and/or modify
        it under the terms of the GNU General Public License as published by
        the Free Software Foundation, either version 3 of the License, or
        (at your option) any later version.

        This program is distributed in the hope that it will be useful,
        but WITHOUT ANY WARRANTY; without even the implied warranty of
        MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
        GNU General Public License for more details.

        You should have received a copy of the GNU General Public License
        along with this program.  If not, see <http://www.gnu.org/licenses/>.
"""

import queue
import threading

import numpy as np

import config as cfg
from errors import InterruptedRun, PreconditionError

# Logging
import __main__
import logging
import os
script = os.path.basename(getattr(__main__, "__file__", "toeplitz-lab"))
script = os.path.splitext(script)[0]
logger = logging.getLogger(script + "." + __name__)

# Set by the entry script on SIGINT/SIGTERM; workers stop picking up new blocks
STOPPER = threading.Event()

_MASK64 = (1 << 64) - 1


def derived_generator(seed, *stream):
  """
  Counter-based generator for one stream of a seeded run

  Args:
    :param int seed: run seed
    :param int stream: stream identifiers, e.g. block index

  Returns:
    numpy.random.Generator: Philox generator keyed by (seed, *stream)
  """
  if seed is None:
    raise PreconditionError("sampling requires a seed")
  entropy = [int(seed) & _MASK64] + [int(s) & _MASK64 for s in stream]
  return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def block_sizes(n_samples, block=None):
  """Split n_samples into consecutive blocks of at most block samples."""
  block = block or cfg.SAMPLE_BLOCK
  if n_samples < 1:
    raise PreconditionError(f"n_samples = {n_samples}; need at least one sample")
  full, rest = divmod(int(n_samples), int(block))
  return [int(block)] * full + ([rest] if rest else [])


class BlockWorker(threading.Thread):
  """
  Pull block indices from a queue and store func(index) in results
  """

  def __init__(self, func, tasks, results, errors, stopper):
    """
    Args:
      :param callable func: block function; receives the block index
      :param queue.Queue tasks: block indices
      :param dict results: block index -> result
      :param list errors: exceptions raised by func
      :param threading.Event stopper: stop picking up blocks when set
    """
    super().__init__()
    self.__func = func
    self.__tasks = tasks
    self.__results = results
    self.__errors = errors
    self.__stopper = stopper

  def run(self):
    logger.debug(">>")
    while not self.__stopper.is_set() and not STOPPER.is_set():
      try:
        index = self.__tasks.get_nowait()
      except queue.Empty:
        break

      try:
        self.__results[index] = self.__func(index)
      except Exception as e:
        logger.exception(f"block {index}: {e}")
        self.__errors.append(e)
        self.__stopper.set()

    logger.debug("<<")


def run_blocks(func, n_blocks, jobs=None):
  """
  Evaluate func(0), ..., func(n_blocks - 1) on up to jobs threads

  Returns:
    list: results in block order
  """
  jobs = max(1, min(int(jobs or cfg.JOBS), n_blocks))
  logger.debug(f"{n_blocks} blocks on {jobs} threads")

  tasks = queue.Queue()
  for index in range(n_blocks):
    tasks.put(index)

  results = {}
  errors = []
  stopper = threading.Event()
  if jobs == 1:
    BlockWorker(func, tasks, results, errors, stopper).run()
  else:
    workers = [BlockWorker(func, tasks, results, errors, stopper) for _ in range(jobs)]
    for worker in workers:
      worker.start()
    for worker in workers:
      worker.join()

  if errors:
    raise errors[0]
  if len(results) != n_blocks:
    raise InterruptedRun(f"stopped after {len(results)} of {n_blocks} blocks")
  return [results[index] for index in range(n_blocks)]
