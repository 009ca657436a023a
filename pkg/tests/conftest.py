import os

# keep BLAS single-threaded: these are small-matrix workloads where thread
# handoff dominates, and determinism checks want a fixed reduction order
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")

import numpy as np
import pytest

from fuzzygan.datasets import CATALOG, Dataset
from fuzzygan.tensor import GradientTape


def finite_difference(build, param, h=1e-5):
    """Central-difference gradient of the scalar build() w.r.t. one tensor.

    build must be a pure function of the current tensor values and is
    evaluated untaped, so it stays independent of the reverse-mode path it
    checks.
    """
    grad = np.zeros_like(param.data)
    flat = param.data.ravel()
    out = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        f_plus = build().item()
        flat[i] = orig - h
        f_minus = build().item()
        flat[i] = orig
        out[i] = (f_plus - f_minus) / (2.0 * h)
    return grad


def assert_gradients_match(build, params, h=1e-5, rtol=1e-4, floor=1e-7):
    """Reverse-mode gradients of build() vs central finite differences."""
    for p in params:
        p.grad = None
    with GradientTape() as tape:
        loss = build()
    tape.backward(loss)
    for p in params:
        analytic = p.grad if p.grad is not None else np.zeros_like(p.data)
        numeric = finite_difference(build, p, h=h)
        for an, fd in zip(analytic.ravel(), numeric.ravel()):
            denom = max(abs(an), abs(fd))
            if denom > floor:
                rel = abs(an - fd) / denom
                assert rel <= rtol, f"gradient mismatch: analytic {an}, numeric {fd}, rel {rel}"
            else:
                assert abs(an - fd) <= floor


def make_synthetic_dataset(n=240, d=3, seed=0, noise=0.02, name="synthetic") -> Dataset:
    """Small smooth regression problem for fast end-to-end runs."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 1.0, (n, d))
    y = 0.6 * X[:, :1] + 0.3 * np.sin(2.0 * np.pi * X[:, 1:2]) ** 2
    if d > 2:
        y = y + 0.1 * X[:, 2:3]
    y = y + rng.normal(0.0, noise, (n, 1))
    return Dataset(name=name, X=X, Y=y)


def write_catalog_fixture(name: str, path, rows: int | None = None, seed: int = 0) -> None:
    """Write a synthetic CSV with exactly the catalog schema of `name`.

    Values are random but the target is a smooth function of the features,
    so loaders, normalization and even short training runs behave sanely.
    The numbers are synthetic; only the schema matches the real files.
    """
    entry = CATALOG[name]
    n = rows if rows is not None else (entry.expected_rows or 1000)
    d = entry.expected_features
    rng = np.random.default_rng(seed)
    X = rng.normal(0.0, 2.0, (n, d))
    y = X[:, 0] * 0.5 + np.sin(X[:, min(1, d - 1)]) + rng.normal(0.0, 0.1, n)
    y = y / entry.target_scale  # loader multiplies the scale back on
    lines = []
    if entry.categorical_first_column:
        sexes = rng.choice(["M", "F", "I"], n)
        for i in range(n):
            lines.append(",".join([sexes[i], *(f"{v:.6f}" for v in X[i]), f"{y[i]:.6f}"]))
    else:
        for i in range(n):
            lines.append(",".join([*(f"{v:.6f}" for v in X[i]), f"{y[i]:.6f}"]))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def real_data_dir():
    """Directory with the actual benchmark CSVs, or None if unavailable."""
    candidate = os.environ.get("FUZZYGAN_DATA", "data")
    if all(os.path.exists(os.path.join(candidate, e.filename)) for e in CATALOG.values()):
        return candidate
    return None


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
