"""Shared fixtures: small synthetic recordings and quickly trained models."""
from __future__ import annotations

import numpy as np
import pytest

import floss
from floss import gbt


@pytest.fixture(scope="session")
def tiny_samples():
    samples = floss.gen_labeled_dataset(n_subjects=2, epochs_per_class_per_subject=6, seed=7)
    return floss.balance_rus(samples, seed=7)


@pytest.fixture(scope="session")
def tiny_train_config():
    return gbt.TrainConfig(n_iterations=12, eta=0.3, max_leaves=7, min_samples_leaf=2, seed=7)


@pytest.fixture(scope="session")
def tiny_model(tiny_samples, tiny_train_config):
    return floss.train_usability(tiny_samples, fs=256.0, variant="lite", config=tiny_train_config)


@pytest.fixture(scope="session")
def tiny_mobility_model():
    from floss.cli import _mobility_training_data
    from floss.mobility import fit_mobility

    acc, labels = _mobility_training_data(256.0, 10.0, seed=5)
    cfg = gbt.TrainConfig(n_iterations=10, eta=0.3, max_leaves=7, min_samples_leaf=2, seed=5)
    return fit_mobility(acc, labels, 256.0, 10.0, config=cfg)


@pytest.fixture(scope="session")
def small_night():
    rec, spans, sleep_scores, mobility = floss.gen_night(
        subject_index=0, n_epochs=60, seed=11
    )
    return rec, spans, sleep_scores, mobility


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
