# flake8: noqa
from . import logging
