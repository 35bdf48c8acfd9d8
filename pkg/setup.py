# Copyright (C) 2020 Samuel Baker

DESCRIPTION = "Liquid democracy delegation for continual learning ensembles"
LONG_DESCRIPTION = """
# pyLiquidEnsemble

Liquid democracy delegation for continual learning ensembles

Ensembles of small feed-forward classifiers that decide, batch by batch, which members learn and which members vote.
Members delegate to better trending members following k-BAT and Student-Expert delegation, on Split MNIST, Rotated
MNIST and synthetic context streams, with a command line harness writing CSV logs of every run.

"""
LONG_DESCRIPTION_CONTENT_TYPE = "text/markdown"

DISTNAME = 'pyLiquidEnsemble'
MAINTAINER = 'Samuel Baker'
MAINTAINER_EMAIL = 'samuelbaker.researcher@gmail.com'
LICENSE = 'MIT'
VERSION = "0.01.0"
PYTHON_REQUIRES = ">=3.8"

INSTALL_REQUIRES = [
    'numpy',
    'zstd',
    'miscSupports',
    'scipy',
    'scikit-learn',
    'pandas',
    'PyYAML',
]

ENTRY_POINTS = {
    'console_scripts': ['pyLiquidEnsemble = pyLiquidEnsemble.cli:main'],
}

CLASSIFIERS = [
    'Programming Language :: Python :: 3.8',
    'License :: OSI Approved :: MIT License',
]

if __name__ == "__main__":

    from setuptools import setup, find_packages

    import sys

    if sys.version_info[:2] < (3, 8):
        raise RuntimeError("pyLiquidEnsemble requires python >= 3.8.")

    setup(
        name=DISTNAME,
        author=MAINTAINER,
        author_email=MAINTAINER_EMAIL,
        maintainer=MAINTAINER,
        maintainer_email=MAINTAINER_EMAIL,
        description=DESCRIPTION,
        long_description=LONG_DESCRIPTION,
        long_description_content_type=LONG_DESCRIPTION_CONTENT_TYPE,
        license=LICENSE,
        version=VERSION,
        python_requires=PYTHON_REQUIRES,
        install_requires=INSTALL_REQUIRES,
        entry_points=ENTRY_POINTS,
        include_package_data=True,
        packages=find_packages(),
        classifiers=CLASSIFIERS
    )
