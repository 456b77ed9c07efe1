from . log import logger, setup


__version__ = "2.0.0"
__author__  = "toeplitz-lab developers"
__license__ = "GPLv3"
