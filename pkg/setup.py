from setuptools import setup
import codecs


def read(filename):
    return codecs.open(filename, encoding='utf-8').read()


long_description = '\n\n'.join([read('README'),
                                read('AUTHORS'),
                                read('CHANGES')])

setup(
    name='nonlocal-mc',
    version='0.1.0',
    license='BSD 3-Clause License',
    description='Monte Carlo discretization of nonlocal diffusion on W-random graphs',
    long_description=long_description,
    long_description_content_type='text/markdown',
    author='The nonlocal-mc Authors',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: BSD License',
        'Operating System :: OS Independent',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3 :: Only',
        'Topic :: Scientific/Engineering',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
    keywords='nonlocal diffusion, graphon, random graphs, monte carlo, kuramoto',
    packages=['nonlocal_mc', 'nonlocal_mc.core', 'nonlocal_mc.core.testsuite'],
    zip_safe=False,
    python_requires='>=3.7, <4',
    install_requires=[
        'numpy>=1.17',
        'scipy>=1.3',
        'pimpmyclass>=0.4.3',
        'pysignal>=1.1.1',
        'pyyaml>=5.3.1',
        'serialize>=0.1',
        'stringparser>=0.5',
    ],
    extras_require={
        'color': [
            'colorama>=0.4.3',
        ],
    },
    entry_points={
        'console_scripts': [
            'nonlocal-mc = nonlocal_mc.__main__:main',
            'nonlocal-mc-config = nonlocal_mc.core.__main__:config',
        ],
        'nonlocal_mc_subcommands': [
            'rate-sweep = nonlocal_mc.core.__main__:rate_sweep',
            'pixmap = nonlocal_mc.core.__main__:pixmap',
            'project-study = nonlocal_mc.core.__main__:project_study',
            'singular-study = nonlocal_mc.core.__main__:singular_study',
            'gap-study = nonlocal_mc.core.__main__:gap_study',
            'solve = nonlocal_mc.core.__main__:solve',
            'config = nonlocal_mc.core.__main__:config',
        ],
    },
    test_suite='nonlocal_mc.core.testsuite.testsuite',
    include_package_data=True,
    options={'bdist_wheel': {'universal': '1'}},
)
