from setuptools import setup, find_packages

setup(
    name="eqvidx",
    version="0.1.0",
    description="Equivariant Morse index of O(2)xO(2)-invariant minimal hypersurfaces via orbit-space reduction",
    license="BSD2",
    packages=find_packages(exclude=["tests", "docs", "examples"]),
    zip_safe=False,
    python_requires=">=3.10",
    install_requires=[
        "numpy>=1.21",
        "scipy>=1.8",
        "pandas>=1.5",
        "torch>=1.12",
        "mlflow>=1.29",
        "shapely>=1.8",
    ],
    extras_require={"test": ["pytest>=7.1", "hypothesis>=6.29"],
                    "docs": ["sphinx>=5.3", "sphinx_rtd_theme>=0.4.3"]},
    entry_points={"console_scripts": ["eqvidx = eqvidx.index_reports:main"]},
    classifiers=['Programming Language :: Python :: 3.10'],
    keywords=[
        "Minimal surfaces",
        "Morse index",
        "Sturm-Liouville",
        "Finite elements",
        "Shooting method",
    ],
)
