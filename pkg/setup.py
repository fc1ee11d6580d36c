# -*- encoding: utf-8 -*-
""" Setup for CoopSweep """
import io
import os
import sys
from setuptools import setup

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import coopsweep

# install requirements
install_requirements = [
    "numpy >= 1.17",
    "scipy >= 1.7",
    "pandas >= 1.5",
    "diskcache",
]

# test requirements
test_requirements = [
    "coverage",
    "coveralls",
    "mock",
    "nose",
] + install_requirements

with io.open('README.rst', encoding='UTF-8') as reader:
    README = reader.read()

setup(
    name='CoopSweep',
    version=coopsweep.__version__,
    packages=['coopsweep'],
    license='BSD 3-Clause License',
    description='Cooperative prioritized sweeping for factored multi-agent MDPs',
    long_description=README,
    install_requires=install_requirements,
    tests_require=test_requirements,
    test_suite='nose.collector',
    entry_points={
        'console_scripts': [
            'bench = coopsweep.cli:main',
        ],
    },
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Programming Language :: Python :: Implementation :: CPython",
    ],
    python_requires=">=3.8"
)
