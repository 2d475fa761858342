"""Shared fixtures: the synthetic corpus, resolution output, embeddings
and a full pipeline run, all computed once per session."""

from __future__ import annotations

import numpy as np
import pytest

from rimap import entity_resolution as er
from rimap import ingest
from rimap import text_embedding as te
from rimap.config import load_config
from rimap.fixtures import generate_fixture
from rimap.pipeline import run_pipeline


@pytest.fixture(scope="session")
def fixture_paths(tmp_path_factory):
    return generate_fixture(tmp_path_factory.mktemp("fixture"))


@pytest.fixture(scope="session")
def corpus(fixture_paths):
    eu, _ = ingest.parse_eu_csv(fixture_paths.eu_projects, fixture_paths.eu_participants)
    regional, _ = ingest.parse_regional_csv(fixture_paths.regional)
    return ingest.unify(eu, regional)


@pytest.fixture(scope="session")
def resolution(corpus):
    return er.resolve_with_index(er.corpus_raw_orgs(corpus), home_country="ES")


@pytest.fixture(scope="session")
def embeddings(corpus):
    vocab, matrix = te.fit_tfidf(corpus)
    emb = te.project_dense(matrix, dim=128, seed=42)
    return vocab, matrix, emb


@pytest.fixture(scope="session")
def pipeline_run(fixture_paths):
    config = load_config(fixture_paths.config)
    return run_pipeline(config)


@pytest.fixture(scope="session")
def snapshot(pipeline_run):
    return pipeline_run.snapshot


def make_blobs(n_per: int, dim: int = 8, sigma: float = 0.05, seed: int = 123):
    """Three Gaussian blobs around orthogonal unit centers."""
    rng = np.random.Generator(np.random.PCG64(seed))
    centers = np.eye(dim)[:3]
    X = np.vstack([centers[c] + sigma * rng.standard_normal((n_per, dim))
                   for c in range(3)])
    y = np.repeat([0, 1, 2], n_per)
    return X, y


def blob_embeddings(n_per: int, dim: int = 8, sigma: float = 0.05, seed: int = 123):
    X, y = make_blobs(n_per, dim, sigma, seed)
    ids = [f"blob{i:04d}" for i in range(len(X))]
    return te.EmbeddingMatrix(ids=ids, matrix=X, provider=te.Provider.TFIDF_PROJECTION), y
