"""Set up package."""

from setuptools import find_packages
from setuptools import setup


setup(
    name="SNS-Rough",
    version="0.1.0",
    description="Pseudospectral stochastic Navier-Stokes solver with rough multiplicative noise and estimate checks",
    packages=find_packages(exclude=["tests"]),
    python_requires=">=3.8",
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.8",
        "pydantic>=1.10.12,<2",
        "python-dotenv==1.0.0"
    ],
    entry_points={
        "console_scripts": [
            "sns-rough=SNS_ROUGH.cli:main"
        ]
    }
)
