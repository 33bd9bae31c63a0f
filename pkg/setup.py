from setuptools import setup, find_packages

setup(
    name="seqattr-backend",
    version="0.1.0",
    packages=find_packages(exclude=["examples", "examples.*"]),
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.8",
        "Pillow>=9.0",
    ],
    extras_require={
        "dev": [
            "pytest",
            "black",
            "mypy",
        ]
    },
    entry_points={
        "console_scripts": [
            "seqattr-cli=backend.main:main",
        ],
    },
)
