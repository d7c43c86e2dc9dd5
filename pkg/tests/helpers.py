from __future__ import annotations

import numpy as np

from puredirac.algebra import Multivector, QuadraticSpace


def random_gram(rng: np.random.Generator, n: int, complex_: bool = False) -> np.ndarray:
    while True:
        a = rng.normal(size=(n, n))
        if complex_:
            a = a + 1j * rng.normal(size=(n, n))
        g = a + a.T
        if np.linalg.svd(g, compute_uv=False)[-1] > 0.2:
            return g


def random_space(rng: np.random.Generator, n: int, complex_: bool = False) -> QuadraticSpace:
    return QuadraticSpace(random_gram(rng, n, complex_))


def random_mv(rng: np.random.Generator, n: int, complex_: bool = False, degrees=None) -> Multivector:
    c = rng.normal(size=1 << n)
    if complex_:
        c = c + 1j * rng.normal(size=1 << n)
    if degrees is not None:
        k = np.array([bin(m).count("1") for m in range(1 << n)])
        c = np.where(np.isin(k, list(degrees)), c, 0)
    return Multivector(n, c)


def random_vector(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.normal(size=n)
