from setuptools import setup, find_packages

with open("requirements.txt") as f:
    requirements = f.read().splitlines()

setup(
    name="dredmtl",
    version="1.0.0",
    description="Incremental DatalogMTL reasoning over periodic materialisations",
    author="dredmtl",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    install_requires=requirements,
    entry_points={
        'console_scripts': [
            'dredmtl=dredmtl.cli:dredmtl',
        ],
    },
    python_requires='>=3.9',
)
