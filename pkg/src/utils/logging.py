#!/usr/bin/env python3
# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Utilities for logging."""

import logging
import sys
from logging import Logger, getLogger
from typing import Literal

StrLevelTypes = Literal["CRITICAL", "ERROR", "WARNING", "INFO", "DEBUG", "NOTSET"]

DEFAULT_LOG_LEVEL: StrLevelTypes = "INFO"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
HANDLER_NAME = "bridges-stderr"


class WithLogging:
    """Base class to be used for providing a logger embedded in the class."""

    @property
    def logger(self) -> Logger:
        """Create logger.

        :return: logger named after the dotted path of the class.
        """
        return getLogger(f"{self.__class__.__module__}.{self.__class__.__qualname__}")


def configure_logging(level: StrLevelTypes = DEFAULT_LOG_LEVEL) -> None:
    """Install the stderr handler on the root logger, replacing a previous one."""
    root = getLogger()
    for handler in list(root.handlers):
        if handler.get_name() == HANDLER_NAME:
            root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.set_name(HANDLER_NAME)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(level)
