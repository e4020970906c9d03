#!/usr/bin/env python
# coding=utf-8
# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at https://mozilla.org/MPL/2.0/.
"""LOGO-Former setup"""
from os.path import dirname, join as pathjoin
from setuptools import setup


EXTRAS = {
    'test': ['pytest>=3.9', 'pytest-cov', 'pytest-mock'],
}


if __name__ == '__main__':
    with open(pathjoin(dirname(__file__), 'README.md'), 'r') as infp:
        README = infp.read()
    setup(
        classifiers=[
            'Intended Audience :: Science/Research',
            'Topic :: Scientific/Engineering :: Artificial Intelligence',
            'License :: OSI Approved :: Mozilla Public License 2.0 (MPL 2.0)',
            'Programming Language :: Python :: 3',
            'Programming Language :: Python :: 3.7',
            'Programming Language :: Python :: 3.8',
            'Programming Language :: Python :: 3.9',
        ],
        description='Local-global spatio-temporal attention for clip classification',
        entry_points={
            'console_scripts': [
                'logoformer = logoformer.main:console_main',
            ],
        },
        extras_require=EXTRAS,
        install_requires=[
            'fasteners',
            'numpy>=1.17',
        ],
        keywords='attention transformer video emotion recognition',
        license='MPL 2.0',
        long_description=README,
        long_description_content_type='text/markdown',
        name='logoformer',
        packages=[
            'logoformer',
            'logoformer.common',
            'logoformer.model',
            'logoformer.train',
        ],
        python_requires='>=3.7',
        version='0.1.0')
