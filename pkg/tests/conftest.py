from __future__ import annotations

import random

import pytest

from dagmpcs.generators import fixture_names, load_fixture, random_skeletal
from dagmpcs.spec import expand

CORPUS_SEED = 20240611
CORPUS_SIZE = 220


@pytest.fixture(scope="session")
def fixtures():
    """Expanded shipped fixtures keyed by name."""
    return {name: expand(load_fixture(name)) for name in fixture_names()}


@pytest.fixture(scope="session")
def corpus(fixtures):
    """Shipped fixtures plus a seeded batch of random optimistic protocols."""
    rng = random.Random(CORPUS_SEED)
    out = list(fixtures.items())
    for k in range(CORPUS_SIZE):
        out.append((f"random{k}", expand(random_skeletal(rng, max_signers=3, max_vertices=12))))
    return out
