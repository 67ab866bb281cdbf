"""Synthetic datasets for the two benchmark problems."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .. import rng as rngs
from ..errors import ContractViolation, UsageError
from ..objectives import FiniteSumObjective, SphereClassifier, StudentT

PROBLEMS = ("student_t", "sphere_classifier")


@dataclass
class Dataset:
    problem: str
    samples: np.ndarray
    truth: np.ndarray
    seed: int
    replicate: int = 0
    labels: np.ndarray | None = None
    params: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    def objective(self) -> FiniteSumObjective:
        if self.problem == "student_t":
            return StudentT(self.samples, self.params["nu"])
        return SphereClassifier(self.samples, self.labels)


def simulate_student_t(p: int, N: int, nu: float, tau2: float, seed: int, replicate: int = 0) -> Dataset:
    """Multivariate t samples with scale ``A A^T + 0.1 I`` plus Gaussian noise.

    ``a_i = z_i / sqrt(w_i / nu) + eps_i`` with ``z_i ~ N(0, Sigma)``,
    ``w_i ~ chi2(nu)`` and ``eps_i ~ N(0, tau2 I)``.
    """
    if p < 1 or N < 1 or nu < 1 or tau2 < 0:
        raise ContractViolation("need p >= 1, N >= 1, nu >= 1, tau2 >= 0")
    g = rngs.stream(seed, replicate, rngs.DATA)
    A = g.standard_normal((p, p))
    sigma = A @ A.T + 0.1 * np.eye(p)
    L = np.linalg.cholesky(sigma)
    z = g.standard_normal((N, p)) @ L.T
    w = g.chisquare(nu, size=N)
    eps = np.sqrt(tau2) * g.standard_normal((N, p))
    a = z / np.sqrt(w / nu)[:, None] + eps
    return Dataset("student_t", a, sigma, seed, replicate, None, {"p": p, "N": N, "nu": nu, "tau2": tau2})


def simulate_classifier(d: int, N: int, tau2: float, seed: int, replicate: int = 0) -> Dataset:
    """Uniform features on ``[-1, 1]^d``; label +1 iff ``x_true^T a + eps >= 0``."""
    if d < 2 or N < 1 or tau2 < 0:
        raise ContractViolation("need d >= 2, N >= 1, tau2 >= 0")
    g = rngs.stream(seed, replicate, rngs.DATA)
    x_true = g.standard_normal(d)
    x_true /= np.linalg.norm(x_true)
    a = g.uniform(-1.0, 1.0, size=(N, d))
    eps = np.sqrt(tau2) * g.standard_normal(N)
    labels = np.where(a @ x_true + eps >= 0.0, 1.0, -1.0)
    return Dataset("sphere_classifier", a, x_true, seed, replicate, labels, {"d": d, "N": N, "tau2": tau2})


def save_dataset(ds: Dataset, path) -> None:
    meta = json.dumps({"problem": ds.problem, "seed": ds.seed, "replicate": ds.replicate, "params": ds.params},
                      sort_keys=True)
    arrays = {"samples": ds.samples, "truth": ds.truth, "meta": np.array(meta)}
    if ds.labels is not None:
        arrays["labels"] = ds.labels
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_dataset(path) -> Dataset:
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(str(z["meta"]))
        labels = z["labels"] if "labels" in z.files else None
        if meta["problem"] not in PROBLEMS:
            raise UsageError(f"unknown problem {meta['problem']!r} in {path}")
        return Dataset(meta["problem"], z["samples"], z["truth"], meta["seed"], meta["replicate"], labels,
                       meta["params"])


def write_dataset_csv(ds: Dataset, path) -> None:
    k = ds.samples.shape[1]
    header = [f"a{j}" for j in range(k)] + (["label"] if ds.labels is not None else [])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(ds.n):
            row = [repr(float(v)) for v in ds.samples[i]]
            if ds.labels is not None:
                row.append(str(int(ds.labels[i])))
            w.writerow(row)
