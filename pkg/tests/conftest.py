import numpy as np
import pytest

from uqkrig._threads import ensure_reference_blas_threads

# single-threaded BLAS keeps factorization timings reproducible and fast
ensure_reference_blas_threads()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
