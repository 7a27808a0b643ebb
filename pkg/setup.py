from os.path import abspath, dirname, join

from setuptools import find_packages, setup


TEST_DEPS = ["coverage", "pytest", "pytest-cov", "hypothesis"]
DOCS_DEPS = [
    "sphinx",
    "sphinx-rtd-theme",
    "sphinx-autoapi",
    "recommonmark",
    "sphinxcontrib-runcmd",
]
CHECK_DEPS = ["isort", "flake8", "flake8-quotes", "pep8-naming", "black", "mypy"]
REQUIREMENTS = ["numpy>=1.17", "scipy>=1.7"]

EXTRAS = {
    "test": TEST_DEPS,
    "docs": DOCS_DEPS,
    "check": CHECK_DEPS,
    "dev": TEST_DEPS + CHECK_DEPS,
}

# Read in the version
with open(join(dirname(abspath(__file__)), "qrwsearch", "VERSION")) as version_file:
    version = version_file.read().strip()


setup(
    name="qrwsearch",
    version=version,
    description=(
        "Quantum random walk search on the hypercube with Householder walk coins: "
        "simulation, surrogate models and phase optimization"
    ),
    author="Invenia Technical Computing",
    packages=find_packages(exclude=["tests"]),
    package_data={"qrwsearch": ["VERSION"]},
    python_requires=">=3.7",
    install_requires=REQUIREMENTS,
    tests_require=TEST_DEPS,
    extras_require=EXTRAS,
    entry_points={"console_scripts": ["qrws = qrwsearch.cli:main"]},
    include_package_data=True,
)
