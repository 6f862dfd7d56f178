# -*- coding: utf-8 -*-
"""
    nonlocal_mc.core.log
    ~~~~~~~~~~~~~~~~~~~~

    Implements logging support for nonlocal_mc.

    Messages can be formatted with either `%s` or `{}` placeholders.

    :copyright: 2026 by The nonlocal-mc Authors
    :license: BSD, see LICENSE for more details.
"""

import logging

from logging import DEBUG, INFO, WARNING, ERROR, CRITICAL

from stringparser import Parser


LEVELS = {'debug': DEBUG, 'info': INFO, 'warning': WARNING,
          'error': ERROR, 'critical': CRITICAL}


class _LogRecord(logging.LogRecord):

    def getMessage(self):
        """Return the message for this LogRecord."""
        msg = str(self.msg)
        if self.args:
            if '%s' in msg:
                msg = msg % self.args
            else:
                msg = msg.format(*self.args)
        return msg


def _makeRecord(name, level, fn, lno, msg, args, exc_info,
                func=None, extra=None, sinfo=None):
    """A factory method which can be overridden in subclasses to create
    specialized LogRecords.
    """
    rv = _LogRecord(name, level, fn, lno, msg, args, exc_info, func, sinfo)

    if extra is not None:
        for key in extra:
            if (key in ["message", "asctime"]) or (key in rv.__dict__):
                raise KeyError("Attempt to overwrite %r in LogRecord" % key)
            rv.__dict__[key] = extra[key]
    return rv


def get_logger(name, add_NullHandler=True, patch_makeRecord=True):
    """Get a logger by name.

    Parameters
    ----------
    name : str
    add_NullHandler : bool
         (Default value = True)
    patch_makeRecord : bool
         if True, the logger makeRecord will be replaced with a
         PEP3101 compatible version. (Default value = True)

    Returns
    -------
    logging.Logger
    """

    logger = logging.getLogger(name)
    if add_NullHandler and not any(isinstance(h, logging.NullHandler) for h in logger.handlers):
        logger.addHandler(logging.NullHandler())
    if patch_makeRecord:
        logger.makeRecord = _makeRecord
    return logger


LOGGER = get_logger('nonlocal_mc')


class ColorizingFormatter(logging.Formatter):
    """Formatter that colors the text enclosed in <color></color> by level.

    Parameters
    ----------
    fmt : str
    datefmt : str
    style : str
    scheme : str or dict
        'bw' (no color) or 'blackbg', or a level -> ANSI prefix mapping.
        Without colorama every scheme behaves as 'bw'.
    """

    SPLIT_COLOR = Parser('{0:s}<color>{1:s}</color>{2:s}')

    SCHEMES = {'bw': {}}

    RESET_ALL = ''

    @classmethod
    def enable_colors(cls, style, fore, back):
        """Register the colored schemes once colorama is available."""
        cls.SCHEMES['blackbg'] = {DEBUG: fore.BLUE + style.BRIGHT,
                                  INFO: fore.GREEN,
                                  WARNING: fore.YELLOW + style.BRIGHT,
                                  ERROR: fore.RED + style.BRIGHT,
                                  CRITICAL: back.RED + fore.WHITE + style.BRIGHT}
        cls.RESET_ALL = style.RESET_ALL

    def __init__(self, fmt, datefmt='%H:%M:%S', style='%', scheme='bw'):
        super().__init__(fmt, datefmt, style)
        if isinstance(scheme, str):
            scheme = self.SCHEMES.get(scheme, self.SCHEMES['bw'])
        self.scheme = scheme

    def format(self, record):
        message = super().format(record)
        first, sep, rest = message.partition('\n')
        if '<color>' in first and '</color>' in first:
            before, inner, after = self.SPLIT_COLOR(first)
            color = self.scheme.get(record.levelno)
            if color:
                inner = color + inner + self.RESET_ALL
            first = before + inner + after
        return first + sep + rest


def init_colorama():
    """Enable colored output if colorama can be imported.

    Returns
    -------
    (bool, str)
        whether colors are available and the default screen format.
    """
    try:
        from colorama import Fore, Back, Style, init as colorama_init
    except Exception as e:
        LOGGER.debug('Log will not be colorized. Could not import colorama: {}', e)
        return False, '{asctime} <color>{levelname:8s}</color> {message}'
    colorama_init()
    ColorizingFormatter.enable_colors(Style, Fore, Back)
    return True, Style.NORMAL + '{asctime} <color>{levelname:8s}</color>' + Style.RESET_ALL + ' {message}'


colorama, DEFAULT_FMT = init_colorama()

#: handler installed by log_to_screen, replaced on each call.
_SCREEN = None


def _level(level):
    if isinstance(level, str):
        try:
            return LEVELS[level.lower()]
        except KeyError:
            raise ValueError('%s is not a valid logging level. '
                             'Use one of %s' % (level, ', '.join(LEVELS)))
    return level


def log_to_screen(level=logging.INFO, scheme='blackbg'):
    """Log all nonlocal_mc events to the screen with a colorized terminal

    Parameters
    ----------
    level :
        logging level for the handler, int or name (Default value = logging.INFO)
    scheme :
        color scheme, 'bw' or 'blackbg' (Default value = 'blackbg')

    Returns
    -------
    logging.Logger
        the package logger
    """
    global _SCREEN
    level = _level(level)
    if _SCREEN is not None:
        LOGGER.removeHandler(_SCREEN)
    handler = _SCREEN = logging.StreamHandler()
    handler.setLevel(level)
    if not colorama:
        scheme = 'bw'
    handler.setFormatter(ColorizingFormatter(fmt=DEFAULT_FMT, scheme=scheme, style='{'))
    LOGGER.addHandler(handler)
    if LOGGER.getEffectiveLevel() > level:
        LOGGER.setLevel(level)
    return LOGGER


def log_to_file(path, level=logging.DEBUG):
    """Log all nonlocal_mc events to a file.

    Parameters
    ----------
    path : str
    level :
        logging level for the handler, int or name (Default value = logging.DEBUG)

    Returns
    -------
    logging.Handler
        the installed handler, so it can be removed afterwards.
    """
    level = _level(level)
    handler = logging.FileHandler(path, encoding='utf-8')
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter('{asctime} {name} {levelname:8s} {message}', style='{'))
    LOGGER.addHandler(handler)
    if LOGGER.getEffectiveLevel() > level:
        LOGGER.setLevel(level)
    return handler
