"""Shared fixtures: reference model constants and the large bump corpus."""

import pytest

from pubdyn.fitkit import FitModel
from pubdyn.synth import (AnomalyBump, MixtureComponent, SynthConfig,
                          generate)

REFERENCE_MODEL = FitModel(amplitude=295376.0, tail_coef=1e-4, tail_exp=2.78,
                           mid_coef=0.1, mid_exp=1.545)

WINDOW = (1356998400, 1370217600)

MIXTURE = (MixtureComponent(weight=0.5, median_seconds=300.0, sigma=1.2),
           MixtureComponent(weight=0.5, median_seconds=43200.0, sigma=0.8))


def bump_config(seed: int = 20260822) -> SynthConfig:
    """300k baseline accounts plus a 10k bump on [85, 160]."""
    return SynthConfig(
        seed=seed,
        n_accounts=300000,
        performance_model=REFERENCE_MODEL,
        window=WINDOW,
        interevent_profile=MIXTURE,
        anomaly_bump=AnomalyBump(lo=85, hi=160, accounts=10000),
        comment_rate=0.02,
        max_performance=300,
    )


@pytest.fixture(scope="session")
def reference_model() -> FitModel:
    return REFERENCE_MODEL


@pytest.fixture(scope="session")
def bump_corpus_dir(tmp_path_factory):
    """The large bump corpus written to disk once per session."""
    out = tmp_path_factory.mktemp("bump_corpus")
    output = generate(bump_config(), out)
    return out, output
