# -*- coding: utf-8 -*-

import contextlib
import logging
import os
import shutil
import tempfile
import unittest
import warnings

#: Set NONLOCAL_MC_SLOW=1 to run the statistical and convergence tests.
SLOW = bool(os.environ.get('NONLOCAL_MC_SLOW'))

slow = unittest.skipUnless(SLOW, 'set NONLOCAL_MC_SLOW=1 to run')


class Msg:

    def __init__(self):
        self.s = ''

    def __bool__(self):
        return bool(self.s)

    def set(self, value):
        self.s = value

    def __str__(self):
        return self.s

    __repr__ = __str__


@contextlib.contextmanager
def must_warn(warning, count):
    msg = Msg()
    with warnings.catch_warnings(record=True) as ws:
        # Catch all warnings of this type
        warnings.simplefilter('always', warning)

        # Execute the function
        yield msg

    ws = [w for w in ws if issubclass(w.category, warning)]

    # If we are looking for a specific amount of
    # warnings, re-send all warnings if not the same
    if count is not None and count != len(ws):
        for w in ws:
            warnings.showwarning(
                message=w.message,
                category=w.category,
                filename=w.filename,
                lineno=w.lineno,
                file=w.file,
                line=w.line,
            )

    if count is None:
        return
    if count > len(ws):
        msg.set('Less %s than expected (%d < %d)' % (warning, len(ws), count))
    elif count < len(ws):
        msg.set('More %s than expected (%d > %d)' % (warning, len(ws), count))


class MemHandler(logging.Handler):

    def __init__(self):
        super().__init__()
        self.setFormatter(logging.Formatter(style='{'))
        self.history = list()

    def emit(self, record):
        self.history.append(self.format(record))


@contextlib.contextmanager
def capture_log(name='nonlocal_mc', level=logging.DEBUG):
    """Collect the formatted records of a logger in a MemHandler."""
    logger = logging.getLogger(name)
    handler = MemHandler()
    handler.setLevel(level)
    previous = logger.level
    logger.addHandler(handler)
    logger.setLevel(level)
    try:
        yield handler
    finally:
        logger.removeHandler(handler)
        logger.setLevel(previous)


class TempDirTestCase(unittest.TestCase):
    """TestCase with a fresh temporary directory in self.tmp."""

    def setUp(self):
        self.tmp = tempfile.mkdtemp(prefix='nonlocal_mc_')

    def tearDown(self):
        shutil.rmtree(self.tmp, ignore_errors=True)

    def path(self, *parts):
        return os.path.join(self.tmp, *parts)


def testsuite():
    """A testsuite that has all the nonlocal_mc tests.
    """
    return unittest.TestLoader().discover(os.path.dirname(__file__))


def main():
    """Runs the testsuite as command line application.
    """
    try:
        unittest.main()
    except Exception as e:
        print('Error: %s' % e)


def run():
    """Run all tests.

    :return: a :class:`unittest.TestResult` object
    """
    test_runner = unittest.TextTestRunner()
    return test_runner.run(testsuite())
