from setuptools import find_packages, setup

with open("README.md", mode="r", encoding="utf-8") as readme_file:
    readme = readme_file.read()


setup(
    name="rc-gps",
    version="0.1.0.dev0",
    description="Causal effects of categorized, error-prone exposures with regression calibration and generalized "
    "propensity scores",
    long_description=readme,
    long_description_content_type="text/markdown",
    license="Apache License 2.0",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    include_package_data=True,
    python_requires=">=3.8.0",
    install_requires=[
        "numpy",
        "scipy",
        "tqdm",
    ],
    extras_require={
        "dev": [
            "pre-commit",
            "pytest",
            "ruff>=0.3.0",
            "scikit-learn",
            "statsmodels",
        ],
    },
    entry_points={
        "console_scripts": [
            "rc-gps=rc_gps.cli:main",
        ],
    },
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: Apache Software License",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Medical Science Apps.",
    ],
    keywords="causal inference propensity score measurement error regression calibration epidemiology",
)
