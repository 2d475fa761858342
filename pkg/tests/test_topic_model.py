"""K-means clustering, the k sweep and c-TF-IDF topic naming."""

import numpy as np
import pytest
from sklearn.metrics import adjusted_rand_score, silhouette_score

from rimap import text_embedding as te
from rimap import topic_model as tm
from conftest import blob_embeddings


def labels_of(result, emb):
    return np.array([result.assignments[pid] for pid in emb.ids])


def test_three_blobs_ari_one_across_seeds():
    emb, truth = blob_embeddings(n_per=50)
    for seed in range(10):
        result = tm.kmeans(emb, tm.TopicModelConfig(k=3, seed=seed))
        assert adjusted_rand_score(truth, labels_of(result, emb)) == 1.0


def test_inertia_trace_non_increasing():
    emb, _ = blob_embeddings(n_per=60, sigma=0.3)
    result = tm.kmeans(emb, tm.TopicModelConfig(k=5, seed=2))
    trace = result.inertia_trace
    assert all(b <= a + 1e-9 for a, b in zip(trace, trace[1:]))


def test_k_equals_n_gives_singletons():
    emb, _ = blob_embeddings(n_per=4)
    result = tm.kmeans(emb, tm.TopicModelConfig(k=12, seed=0))
    assert result.inertia == pytest.approx(0.0, abs=1e-18)
    assert all(len(t.member_ids) == 1 for t in result.topics)


def test_k_too_large():
    emb, _ = blob_embeddings(n_per=2)
    with pytest.raises(tm.KTooLarge):
        tm.kmeans(emb, tm.TopicModelConfig(k=7, seed=0))


def test_centroid_equals_member_mean():
    emb, _ = blob_embeddings(n_per=40, sigma=0.2)
    result = tm.kmeans(emb, tm.TopicModelConfig(k=4, seed=1))
    pos = {pid: i for i, pid in enumerate(emb.ids)}
    for topic in result.topics:
        rows = emb.matrix[[pos[m] for m in topic.member_ids]]
        assert np.allclose(topic.centroid, rows.mean(axis=0), atol=1e-9)


def test_partition_covers_corpus():
    emb, _ = blob_embeddings(n_per=30)
    result = tm.kmeans(emb, tm.TopicModelConfig(k=4, seed=3))
    members = [m for t in result.topics for m in t.member_ids]
    assert sorted(members) == sorted(emb.ids)


def test_bitwise_determinism():
    emb, _ = blob_embeddings(n_per=30, sigma=0.2)
    r1 = tm.kmeans(emb, tm.TopicModelConfig(k=4, seed=9))
    r2 = tm.kmeans(emb, tm.TopicModelConfig(k=4, seed=9))
    assert r1.assignments == r2.assignments
    for t1, t2 in zip(r1.topics, r2.topics):
        assert np.array_equal(t1.centroid, t2.centroid)


def test_sweep_inertia_non_increasing_and_silhouette_peaks_at_three():
    emb, _ = blob_embeddings(n_per=40)
    rows = tm.sweep_k(emb, range(2, 9), seed=5)
    assert all(b.inertia <= a.inertia + 1e-9 for a, b in zip(rows, rows[1:]))
    best = max(rows, key=lambda r: r.silhouette)
    assert best.k == 3


def test_silhouette_matches_sklearn():
    emb, truth = blob_embeddings(n_per=25, sigma=0.4)
    mine = tm.silhouette(emb.matrix, truth)
    theirs = silhouette_score(emb.matrix, truth)
    assert mine == pytest.approx(float(theirs), abs=1e-9)


def test_silhouette_identical_point_sets_is_one():
    # two clusters, each a stack of identical points -> a=0, b>0 -> s=1
    X = np.vstack([np.zeros((3, 2)), np.ones((3, 2))])
    labels = np.array([0, 0, 0, 1, 1, 1])
    assert tm.silhouette(X, labels) == 1.0


def test_silhouette_all_identical_points_is_zero():
    X = np.zeros((4, 2))
    labels = np.array([0, 0, 1, 1])
    assert tm.silhouette(X, labels) == 0.0


def _toy_matrix(docs: dict[str, list[str]]):
    ids = sorted(docs)
    return te._fit_documents(ids, [docs[i] for i in ids])


def test_ctfidf_distinctive_term_ranks_first():
    docs = {
        "a1": ["hydrogen", "storage", "project"],
        "a2": ["hydrogen", "electrolysis", "project"],
        "b1": ["museum", "heritage", "project"],
        "b2": ["museum", "archive", "project"],
    }
    vocab, matrix = _toy_matrix(docs)
    topics = [
        tm.Topic(topic_id=0, centroid=np.zeros(2), member_ids=("a1", "a2")),
        tm.Topic(topic_id=1, centroid=np.zeros(2), member_ids=("b1", "b2")),
    ]
    named = tm.name_topics(topics, matrix, vocab)
    assert named[0].top_terms[0][0] == "hydrogen"
    assert named[1].top_terms[0][0] == "museum"
    # "project" appears in both clusters -> idf ln(2/2)=0 -> excluded
    for topic in named:
        assert "project" not in [t for t, _ in topic.top_terms]
    assert named[0].label.startswith("hydrogen")


def test_ctfidf_hand_computed_score():
    docs = {
        "a1": ["hydrogen", "hydrogen", "storage"],
        "a2": ["hydrogen", "storage"],
        "b1": ["museum", "storage"],
        "b2": ["museum", "storage"],
    }
    vocab, matrix = _toy_matrix(docs)
    topics = [
        tm.Topic(topic_id=0, centroid=np.zeros(2), member_ids=("a1", "a2")),
        tm.Topic(topic_id=1, centroid=np.zeros(2), member_ids=("b1", "b2")),
    ]
    named = tm.name_topics(topics, matrix, vocab)
    # hydrogen: count 3 in cluster 0, present in 1 of 2 clusters -> 3*ln(2)
    scores = dict(named[0].top_terms)
    assert scores["hydrogen"] == pytest.approx(3 * np.log(2))


def test_label_override(tmp_path):
    docs = {"a1": ["solar", "solar"], "b1": ["museum", "museum"],
            "a2": ["solar"], "b2": ["museum"]}
    vocab, matrix = _toy_matrix(docs)
    topics = [
        tm.Topic(topic_id=0, centroid=np.zeros(1), member_ids=("a1", "a2")),
        tm.Topic(topic_id=1, centroid=np.zeros(1), member_ids=("b1", "b2")),
    ]
    f = tmp_path / "labels.csv"
    f.write_text("topicId,label\n0,Precision agriculture\n", encoding="utf-8")
    named = tm.name_topics(topics, matrix, vocab, overrides=f)
    assert named[0].label == "Precision agriculture"
    assert named[1].label == "museum"


def test_unknown_topic_override(tmp_path):
    docs = {"a1": ["solar"], "a2": ["solar"]}
    vocab, matrix = _toy_matrix(docs)
    topics = [tm.Topic(topic_id=0, centroid=np.zeros(1), member_ids=("a1", "a2"))]
    f = tmp_path / "labels.csv"
    f.write_text("topicId,label\n4,Nope\n", encoding="utf-8")
    with pytest.raises(tm.UnknownTopicId):
        tm.name_topics(topics, matrix, vocab, overrides=f)


def test_fixture_topics_partition(pipeline_run):
    snap = pipeline_run.snapshot
    topic_ids = [p.enrichment.topic_id for p in snap.corpus.projects]
    assert all(t is not None for t in topic_ids)
    assert set(topic_ids) == set(range(12))
