from setuptools import setup, find_packages

setup(
    name="log-growth-lab",
    version="1.0.0",
    description="Numerical laboratory for logarithmic H^1 growth of a perturbed cubic NLS oscillator",
    author="Harshit Goel",
    author_email="hgoel412@gmail.com",
    packages=find_packages(exclude=("tests",)),
    install_requires=[
        "numpy>=1.24.0",
        "scipy>=1.11.0",
        "pandas>=1.5.0",
        "pyyaml>=6.0",
    ],
    extras_require={
        "test": ["pytest>=7.4", "hypothesis>=6.80"],
    },
    entry_points={
        "console_scripts": ["growth-lab=src.pipeline:main"],
    },
    python_requires=">=3.8",
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Topic :: Scientific/Engineering :: Physics",
        "License :: OSI Approved :: MIT License",
    ],
)
