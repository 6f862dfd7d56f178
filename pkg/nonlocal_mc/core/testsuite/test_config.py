# -*- coding: utf-8 -*-

import os
import unittest

from nonlocal_mc.core import config
from nonlocal_mc.core.config import FULL_CONFIG, available_threads, load_experiment_file, register_and_get
from nonlocal_mc.core.errors import ConfigError, DivergenceError
from nonlocal_mc.core.testsuite import TempDirTestCase


class TestRegister(unittest.TestCase):

    def tearDown(self):
        for name in ('NONLOCAL_MC_TESTING_VALUE', 'OTHER_TESTING_VALUE'):
            os.environ.pop(name, None)
        FULL_CONFIG.pop('testing.value', None)

    def test_default(self):
        self.assertEqual(register_and_get('testing.value', 4), 4)
        self.assertEqual(FULL_CONFIG['testing.value'], ('mod', 4))

    def test_environment(self):
        os.environ['NONLOCAL_MC_TESTING_VALUE'] = '7'
        self.assertEqual(register_and_get('testing.value', 4), '7')
        self.assertEqual(FULL_CONFIG['testing.value'], ('env', '7'))

    def test_alias(self):
        os.environ['OTHER_TESTING_VALUE'] = '2'
        self.assertEqual(register_and_get('testing.value', 4, env_alias='OTHER_TESTING_VALUE'), '2')
        os.environ['NONLOCAL_MC_TESTING_VALUE'] = '7'
        self.assertEqual(register_and_get('testing.value', 4, env_alias='OTHER_TESTING_VALUE'), '7')

    def test_registered(self):
        for key in ('core.threads', 'core.quad_rtol', 'core.quad_atol', 'core.quad_max_depth',
                    'core.quad_order', 'core.quad_on_unconverged', 'core.row_check_sigmas',
                    'core.log_level'):
            self.assertIn(key, FULL_CONFIG)

    def test_threads(self):
        self.assertEqual(available_threads(3), 3)
        self.assertEqual(available_threads(-2), 1)
        self.assertGreaterEqual(available_threads(), 1)
        self.assertEqual(available_threads(0), available_threads(None))


class TestExperimentFile(TempDirTestCase):

    def write(self, name, content):
        path = self.path(name)
        with open(path, 'w', encoding='utf-8') as fo:
            fo.write(content)
        return path

    def test_ini(self):
        path = self.write('e.ini', '[Rate-Sweep]\nGamma = 0.25, 0.5\n\n[kernel]\nkind = band\nr = 0.1\n')
        file = load_experiment_file(path)
        self.assertIn('rate-sweep', file)
        self.assertNotIn('pixmap', file)
        self.assertEqual(file.section('rate-sweep'), {'gamma': '0.25, 0.5'})
        self.assertEqual(file.section('pixmap'), {})
        self.assertEqual(file.line_of('kernel', 'r'), 6)
        error = file.error('kernel', 'r', 'too wide')
        self.assertEqual((error.key, error.line), ('kernel.r', 6))
        self.assertEqual(str(error), "too wide [key 'kernel.r'] [line 6]")

    def test_yaml(self):
        path = self.write('e.yaml', 'rate-sweep:\n  gamma: [0.25, 0.5]\n  trials: 3\n')
        file = load_experiment_file(path)
        self.assertEqual(file.section('rate-sweep'), {'gamma': [.25, .5], 'trials': 3})
        self.assertIsNone(file.line_of('rate-sweep', 'trials'))

    def test_yaml_errors(self):
        self.assertRaises(ConfigError, load_experiment_file, self.write('list.yaml', '- 1\n- 2\n'))
        with self.assertRaises(ConfigError) as cm:
            load_experiment_file(self.write('flat.yaml', 'rate-sweep: 3\n'))
        self.assertEqual(cm.exception.key, 'rate-sweep')
        self.assertRaises(ConfigError, load_experiment_file, self.path('missing.yaml'))

    def test_ini_errors(self):
        self.assertRaises(ConfigError, load_experiment_file, self.path('missing.ini'))
        with self.assertRaises(ConfigError) as cm:
            load_experiment_file(self.write('header.ini', 'gamma = 0.5\n'))
        self.assertEqual(cm.exception.line, 1)
        with self.assertRaises(ConfigError) as cm:
            load_experiment_file(self.write('dup.ini', '[pixmap]\nn = 8\nn = 16\n'))
        self.assertEqual((cm.exception.key, cm.exception.line), ('n', 3))
        with self.assertRaises(ConfigError) as cm:
            load_experiment_file(self.write('junk.ini', '[pixmap]\nn = 8\njust words\n'))
        self.assertEqual(cm.exception.line, 3)


class TestErrors(unittest.TestCase):

    def test_messages(self):
        self.assertEqual(str(ConfigError('bad')), 'bad')
        self.assertEqual(str(ConfigError('bad', key='n')), "bad [key 'n']")
        error = DivergenceError('state is not finite', step=3, metadata={'n': 8, 'gamma': .5})
        self.assertEqual(str(error), 'state is not finite (gamma=0.5, n=8)')
        self.assertEqual(error.step, 3)

    def test_quadrature_defaults(self):
        self.assertGreater(config.QUAD_RTOL, 0)
        self.assertGreaterEqual(config.QUAD_MAX_DEPTH, 1)


if __name__ == '__main__':
    unittest.main()
