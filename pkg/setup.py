from setuptools import setup, find_packages

setup(
    name="qpir_lab",
    version="0.1",
    packages=find_packages(),
    install_requires=[
        "numpy>=1.21",
        "scipy>=1.9",
        "galois>=0.3.3",
        "pandas>=2.0",
        "rich>=13.3",
        "tqdm>=4.65",
        "tyro>=0.5",
        "typing_extensions>=4.5",
        "wandb>=0.12.21",
    ],
    entry_points={
        "console_scripts": [
            "qpir-lab=qpir_lab.cli:entrypoint",
        ],
    },
)
