# Always prefer setuptools over distutils
from setuptools import setup

long_description = """
Vigil synthesizes, analyzes and simulates update policies for a monitor that tracks
N two-state Markov sources under a budget on the average number of updates per slot.
The monitor must name the first K free sources; the toolkit minimizes how often it
gets them wrong:

- per-source Lagrangian dynamic program and its structural checks
- closed-form switch times for a global rate budget
- error-probability bounds from the pair chains of each source
- exact and Monte Carlo evaluation of the operational error
- command line for solve, analyze, simulate, sweep and verify runs

"""

setup(
    name="vigil",
    version="0.1.0",
    description="Rate-limited update policies for top-K monitoring of Markov sources",
    long_description=long_description,
    long_description_content_type="text/markdown",
    python_requires=">=3.8.3",
    license="MIT",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3 :: Only",
        "Operating System :: POSIX :: Linux",
        "Operating System :: MacOS :: MacOS X",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    packages=[
        "vigil",
        "vigil.utils",
        "vigil.middleware",
        "vigil.managers",
    ],
    install_requires=[
        "numpy>=1.21",
        "scipy>=1.7",
        "python-json-logger>=2.0.1",
        "prometheus-client==0.9.0",
        "ujson==5.1.0",
    ],
    entry_points={"console_scripts": ["vigil=vigil.cli:main"]},
    keywords=[
        "markov",
        "monitoring",
        "scheduling",
        "dynamic-programming",
        "simulation",
    ],
    zip_safe=False,
)
