# -*- coding: utf-8 -*-
"""
    nonlocal_mc.core.config
    ~~~~~~~~~~~~~~~~~~~~~~~

    This module contains two parts:
    1) General machinery for managing configuration in nonlocal_mc.
    2) The actual configuration values and the experiment file loader.

    The convention is to define configuration values as an UPPERCASE
    named variable registered with `register_and_get` using two arguments:
    the global key and the default value.

    By convention the global key should be:

        <subpackage name>.<variable name>

    e.g.: core.quad_rtol

    Registering the variable has the following benefits:
    1) You can override it in your system with a configuration file.
       The configuration file is a ini formatted UTF-8 text file.
       The subpackage name is the section, and the variable name is the key.
       e.g.
       [core]
       quad_rtol = 1e-8

    2) You can override it in a particular run with an environmental variable
       which also overrides the value in the configuration file.
       The variable is named NONLOCAL_MC_ followed by the key in uppercase
       and replacing dots by underscores.
       e.g. core.quad_rtol -> NONLOCAL_MC_CORE_QUAD_RTOL

    3) You can set/get the value via the `nonlocal-mc config` utility.

    Experiment files (the --config argument of the subcommands) are
    flat key-value files with one section per subcommand. Both ini and
    yaml flavors are accepted, see `load_experiment_file`.

    :copyright: 2026 by The nonlocal-mc Authors
    :license: BSD, see LICENSE for more details.
"""

import configparser
import os
import sys

import serialize

from .errors import ConfigError


# =======================
# General stuff
# =======================

# Modified from Click
# https://raw.githubusercontent.com/pallets/click/master/click/utils.py

def _posixify(name):
    return '-'.join(name.split()).lower()


def get_app_dir(app_name, roaming=True, force_posix=False):
    r"""Returns the config folder for the application.  The default behavior
    is to return whatever is most appropriate for the operating system.

    For an app called ``"nonlocal mc"`` something like the following
    folders could be returned:

    Mac OS X:
      ``~/Library/Application Support/nonlocal mc``
    Unix:
      ``~/.config/nonlocal-mc``
    Win 7 (roaming):
      ``C:\Users\<user>\AppData\Roaming\nonlocal mc``

    :param app_name: the application name.
    :param roaming: controls if the folder should be roaming or not on Windows.
    :param force_posix: store in the home folder with a leading dot on POSIX.
    """
    if sys.platform.startswith('win'):
        key = roaming and 'APPDATA' or 'LOCALAPPDATA'
        folder = os.environ.get(key)
        if folder is None:
            folder = os.path.expanduser('~')
        return os.path.join(folder, app_name)
    if force_posix:
        return os.path.join(os.path.expanduser('~/.' + _posixify(app_name)))
    if sys.platform == 'darwin':
        return os.path.join(os.path.expanduser(
            '~/Library/Application Support'), app_name)
    return os.path.join(
        os.environ.get('XDG_CONFIG_HOME', os.path.expanduser('~/.config')),
        _posixify(app_name))


ENV_PREFIX = 'NONLOCAL_MC_'

CONFIG_FOLDER = get_app_dir('nonlocal mc')

CONFIG_FILE = os.path.join(CONFIG_FOLDER, 'config.cfg')
cfg = configparser.ConfigParser()
cfg.read(CONFIG_FILE)

# Configuration Value
# configuration key -> (source, configuration value)
# The source indicates how the value was defined:
# - env: from an environmental variable
#        named NONLOCAL_MC_ followed by the key in uppercase and replacing dots by underscores.
#        eg. core.quad_rtol becomes -> NONLOCAL_MC_CORE_QUAD_RTOL
# - cfg: from the configuration file.
# - mod: from the package.
FULL_CONFIG = {}


def register_and_get(key, default, env_alias=None):
    """Register a configuration key and return its current value.

    Parameters
    ----------
    key : str
        <section>.<name>
    default :
        value used when neither the environment nor the config file define it.
    env_alias : str, optional
        an extra environmental variable name checked after the canonical one.
    """

    source, val = 'env', os.getenv(ENV_PREFIX + key.replace('.', '_').upper(), None)
    if val is None and env_alias:
        val = os.getenv(env_alias, None)

    key = key.lower()
    if val is None:
        section, subkey = key.split('.')
        try:
            source, val = 'cfg', cfg[section][subkey]
        except KeyError:
            source, val = 'mod', default

    FULL_CONFIG[key] = (source, val)

    return val


def save_config():
    """Write the in-memory configuration to CONFIG_FILE."""
    os.makedirs(CONFIG_FOLDER, exist_ok=True)
    with open(CONFIG_FILE, 'w') as fo:
        cfg.write(fo)


# ====================================
# Configuration Values for nonlocal_mc
# ====================================

# Number of workers used by the trial pool and the cell-matrix assembly.
# 0 means the available parallelism of the machine.
THREADS = int(register_and_get('core.threads', 0, env_alias='NONLOCAL_MC_THREADS'))

# Adaptive quadrature: relative tolerance between successive refinements.
QUAD_RTOL = float(register_and_get('core.quad_rtol', 1e-9))

# Adaptive quadrature: absolute tolerance, in units of the cell average.
QUAD_ATOL = float(register_and_get('core.quad_atol', 1e-13))

# Adaptive quadrature: maximum number of dyadic subdivisions of a cell.
QUAD_MAX_DEPTH = int(register_and_get('core.quad_max_depth', 12))

# Adaptive quadrature: Gauss-Legendre points per axis in each box.
QUAD_ORDER = int(register_and_get('core.quad_order', 3))

# Adaptive quadrature: 'raise', 'warn' or 'ignore' when a box hits the maximum depth.
QUAD_ON_UNCONVERGED = register_and_get('core.quad_on_unconverged', 'raise')

# Graphon.validate: standard errors allowed above the declared row bound.
# Every sampled row is tested, so 3 gives a false alarm on about 8% of
# continuous kernels sitting at their bound with 64 rows.
ROW_CHECK_SIGMAS = float(register_and_get('core.row_check_sigmas', 4.))

# Default logging level of the command line tools.
LOG_LEVEL = register_and_get('core.log_level', 'info')


def available_threads(requested=None):
    """Number of workers to use.

    Parameters
    ----------
    requested : int, optional
        explicit request (e.g. from --threads). None or 0 falls back to
        THREADS and then to the number of CPUs.
    """
    for value in (requested, THREADS):
        if value:
            return max(1, int(value))
    return os.cpu_count() or 1


# ====================================
# Experiment files
# ====================================

def _ini_line(path, section, key):
    """Best effort lookup of the line where a key is defined in an ini file."""
    current = None
    try:
        with open(path, encoding='utf-8') as fi:
            for lineno, line in enumerate(fi, 1):
                stripped = line.strip()
                if stripped.startswith('[') and stripped.endswith(']'):
                    current = stripped[1:-1].strip().lower()
                elif current == section.lower() and stripped.split('=', 1)[0].split(':', 1)[0].strip().lower() == key:
                    return lineno
    except OSError:
        pass
    return None


class ExperimentFile:
    """Sections of an experiment file as plain dictionaries of strings,
    remembering where each key was defined to report errors.
    """

    def __init__(self, sections, path=None, kind='ini'):
        self.sections = {name.lower(): {str(k).lower(): v for k, v in values.items()}
                         for name, values in sections.items()}
        self.path = path
        self.kind = kind

    def __contains__(self, item):
        return item.lower() in self.sections

    def section(self, name):
        return self.sections.get(name.lower(), {})

    def line_of(self, section, key):
        if self.path is None or self.kind != 'ini':
            return None
        return _ini_line(self.path, section, key)

    def error(self, section, key, message):
        return ConfigError(message, key='%s.%s' % (section, key),
                           line=self.line_of(section, key))


def load_experiment_file(path):
    """Load an experiment file.

    Files ending in .yaml or .yml are read with serialize (yaml); anything
    else is read as an ini file.

    Parameters
    ----------
    path : str

    Returns
    -------
    ExperimentFile

    Raises
    ------
    ConfigError
        if the file cannot be parsed (the line is reported for ini files).
    """
    if path.endswith(('.yaml', '.yml')):
        try:
            content = serialize.load(path)
        except FileNotFoundError:
            raise ConfigError('Configuration file not found: %s' % path)
        except Exception as e:
            raise ConfigError('Could not parse %s: %s' % (path, e))
        if not isinstance(content, dict):
            raise ConfigError('%s must contain a mapping of sections' % path)
        sections = {}
        for name, values in content.items():
            if not isinstance(values, dict):
                raise ConfigError('Section %s must be a mapping' % name, key=str(name))
            sections[str(name)] = values
        return ExperimentFile(sections, path, 'yaml')

    parser = configparser.ConfigParser()
    try:
        with open(path, encoding='utf-8') as fi:
            parser.read_file(fi)
    except FileNotFoundError:
        raise ConfigError('Configuration file not found: %s' % path)
    except configparser.DuplicateOptionError as e:
        raise ConfigError('Duplicate option in %s' % path, key=e.option, line=e.lineno)
    except configparser.ParsingError as e:
        line = getattr(e, 'lineno', None)
        if line is None and getattr(e, 'errors', None):
            line = e.errors[0][0]
        raise ConfigError('Could not parse %s' % path, line=line)
    except configparser.Error as e:
        raise ConfigError('Could not parse %s: %s' % (path, e), line=getattr(e, 'lineno', None))

    sections = {name: dict(parser[name]) for name in parser.sections()}
    return ExperimentFile(sections, path, 'ini')
