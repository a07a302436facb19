from setuptools import find_packages, setup

setup(
    name="spdflow",
    version="0.1.0",
    description="Autoregressive models for time series of covariance matrices on the SPD manifold",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    license="MIT",
    packages=find_packages(exclude=["tests", "tests.*"]),
    install_requires=[
        "joblib>=1.3.2",
        "numpy>=1.26.4",
        "pandas>=2.0.3",
        "PyYAML>=6.0.2",
        "scipy>=1.10.1",
        "scikit-learn>=1.3.0",
    ],
    include_package_data=True,
    entry_points={"console_scripts": ["spdflow=spdflow.__main__:cli_spdflow"]},
    classifiers=[
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    python_requires=">=3.9, <3.13",
)
