import numpy as np
import pytest


def planted_bytes(n_per_class, length=784, seed=0):
    """Binary byte-vector set whose class is encoded at bytes [300:340].

    Returns (X, labels): benign rows are uniform noise, malware rows carry
    a fixed ramp in the planted window. Values are scaled to [0, 1].
    """
    rng = np.random.default_rng(seed)
    rows, labels = [], []
    ramp = np.arange(40, dtype=np.float32) / 255.0
    for cls in ("benign", "malware"):
        block = rng.random((n_per_class, length), dtype=np.float32)
        if cls == "malware":
            block[:, 300:340] = ramp
        rows.append(block)
        labels += [cls] * n_per_class
    return np.concatenate(rows), labels


@pytest.fixture
def rng():
    return np.random.default_rng(7)
