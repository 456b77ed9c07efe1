"""
 DESCRIPTION
   Logger for the toeplitz-lab entry script and every library module.

 REQUIRED:
   The entry script imports the package logger and sets its level:
====================================================================
from log import logger
logger.setLevel(cfg.loglevel)  # DEBUG, INFO, WARNING, ERROR, CRITICAL
====================================================================

   Library modules attach a child logger, so their records carry the
   script name and module name and pass through the handlers below:
====================================================================
import __main__
import logging
import os
script = os.path.basename(getattr(__main__, "__file__", "toeplitz-lab"))
script = os.path.splitext(script)[0]
logger = logging.getLogger(script + "." + __name__)
====================================================================

   When the library is imported from an interpreter or test runner
   without the entry script, records propagate to the root logger.

V2.0.0
  Handlers built by functions; syslog switchable via BTLAB_SYSLOG;
  file handler keeps ERROR and above of long sweeps

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

import __main__
import getpass
import logging
import logging.handlers
import os
import sys

import config as cfg

_DETAIL = '%(name)s[%(process)d] %(levelname)s: %(asctime)s FUNCTION:%(funcName)s LINE:%(lineno)d: %(message)s'


def _current_user():
  try:
    return getpass.getuser()
  except (KeyError, OSError):
    return "nobody"


def _console_handler():
  handler = logging.StreamHandler(sys.stdout)
  handler.setLevel(logging.DEBUG)
  handler.setFormatter(logging.Formatter('%(name)s %(levelname)s: FUNCTION:%(funcName)s LINE:%(lineno)d: %(message)s'))
  return handler


def _syslog_handler():
  """Return a syslog handler, or None when /dev/log is absent (containers, non linux)."""
  if not cfg.SYSLOG:
    return None
  if sys.platform != "linux" or not os.path.exists('/dev/log'):
    return None
  handler = logging.handlers.SysLogHandler(address='/dev/log')
  handler.setLevel(logging.INFO)
  handler.setFormatter(logging.Formatter(_DETAIL, datefmt='%H:%M:%S'))
  return handler


def _file_handler(script):
  """ERROR and above to /dev/shm, or /tmp when /dev/shm is not writable."""
  folder = "/dev/shm" if os.access("/dev/shm", os.W_OK) else "/tmp"
  path = f"{folder}/{script}.{_current_user()}.log"
  try:
    handler = logging.FileHandler(path, 'a')
  except OSError as e:
    print(f"Exception {e}: {path} permission denied")
    return None
  handler.setLevel(logging.ERROR)
  handler.setFormatter(logging.Formatter(_DETAIL, datefmt='%Y-%m-%d,%H:%M:%S'))
  return handler


def setup(script):
  """
  Create the script logger with console, syslog and file handlers

  Args:
    :param str script: logger name; the basename of the entry script

  Returns:
    logging.Logger
  """
  log = logging.getLogger(script)
  log.setLevel(logging.INFO)
  log.propagate = False
  if log.handlers:
    return log

  for handler in (_console_handler(), _syslog_handler(), _file_handler(script)):
    if handler is not None:
      log.addHandler(handler)
  return log


script = os.path.basename(getattr(__main__, "__file__", "toeplitz-lab"))
script = os.path.splitext(script)[0]
logger = setup(script)
