import numpy as np
import pytest

from cachechurn.trace import build_trace


def random_trace(rng, n_requests, n_docs, window=None, with_users=False):
    """Uniform-random request trace for oracle comparisons."""
    docs = np.array(
        [f"d{int(i):05d}" for i in rng.integers(0, n_docs, n_requests)], dtype=object
    )
    window = window or max(int(n_requests) * 4, 10)
    ts = rng.integers(0, window + 1, n_requests)
    users = None
    if with_users:
        users = np.array(
            [f"u{int(i):03d}" for i in rng.integers(0, 20, n_requests)], dtype=object
        )
    return build_trace(ts, docs, users, window)


@pytest.fixture
def rng():
    return np.random.default_rng(20240615)
