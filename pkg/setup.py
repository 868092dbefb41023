from setuptools import find_packages, setup


def read_requirements(path="requirements.txt"):
    with open(path) as f:
        return [line.strip() for line in f if line.strip() and not line.startswith("#")]


setup(
    name="rswr-solver",
    version="0.1.0",
    description="Non-iterative Schwarz waveform relaxation for the 1-D wave equation",
    packages=find_packages(exclude=["tests", "examples", "examples.*"]),
    python_requires=">=3.9",
    install_requires=[r for r in read_requirements() if not r.startswith(("pytest", "hypothesis"))],
    entry_points={"console_scripts": ["rswr=app.main:main"]},
)
