import os
from setuptools import setup

description = (
    "eegbias is a python module for measuring how much "
    "temporal correlation in block-design EEG recordings "
    "inflates classification accuracy"
)

with open('README.rst') as fh:
    long_description = fh.read()

with open(os.path.join('eegbias', 'version.py')) as fh:
    version = fh.read().split()[2].strip('"')

setup(
    name = 'eegbias',
    version = version,
    packages = ['eegbias', 'eegbias.models'],
    description = description,
    long_description = long_description,
    #long_description_content_type = 'text/x-rst',
    license = 'MIT',
    keywords = 'eeg classification temporal-correlation block-design',
    classifiers = [
            "Development Status :: 4 - Beta",
            "Intended Audience :: Education",
            "Intended Audience :: Science/Research",
            "Natural Language :: English",
            "License :: OSI Approved :: MIT License",
            "Programming Language :: Python :: 3.8",
            "Programming Language :: Python :: 3.9",
            "Programming Language :: Python :: 3.10",
            "Programming Language :: Python :: 3.11",
            "Operating System :: OS Independent",
            "Topic :: Scientific/Engineering :: Medical Science Apps."
    ],
    python_requires = ">=3.8",
    install_requires = [
        "numpy >=1.20",
        "scipy >=1.6"
    ],
    entry_points = {
        'console_scripts': ['eegbias = eegbiascli:main']
    },
    py_modules = ["eegbiascli"],
    test_suite = "tests"
)
