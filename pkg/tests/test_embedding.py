import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semtl import embedding as em
from semtl.domain import InconsistentTargetError, SemanticLearningTask, target_union
from semtl.embedding import (
    ParameterError,
    build_embedding_matrix,
    consistency_bit,
    embedding_from_csv,
    estimate_epsilon,
    estimate_epsilons,
    feature_index,
    transfer_gain,
    variability_weight,
)
from semtl.entailment import Entailment
from semtl.ontology import merge_abox
from semtl.reasoner import is_consistent
from semtl.synthgen import SynthConfig, generate_domain_pair

E = Entailment.parse


def synth_tasks(seed, **kw):
    src, tgt = generate_domain_pair(SynthConfig(seed=seed, **kw))
    return SemanticLearningTask.from_domain(src), SemanticLearningTask.from_domain(tgt)


# -- v -----------------------------------------------------------------------


def test_weight_of_running_example():
    assert variability_weight(2 / 3, 0.0, 0.5, 0.5) == 1 / 3


def test_weight_projection():
    assert variability_weight(0.37, 0.9, 1.0, 0.0) == 0.37


@pytest.mark.parametrize("a, b", [(0.0, 0.0), (-0.1, 0.5), (0.5, 1.5)])
def test_weight_parameter_errors(a, b):
    with pytest.raises(ParameterError):
        variability_weight(0.5, 0.5, a, b)


@settings(max_examples=200, deadline=None)
@given(
    st.floats(0, 1), st.floats(0, 1), st.floats(0.01, 1), st.floats(0.01, 1), st.floats(0.05, 1)
)
def test_weight_scale_invariant(vO, vY, a, b, k):
    assert variability_weight(vO, vY, a * k, b * k) == pytest.approx(variability_weight(vO, vY, a, b), abs=1e-12)
    assert 0 <= variability_weight(vO, vY, a, b) <= 1


# -- c -----------------------------------------------------------------------


def test_fixture_consistency_bits(uk_ie):
    lsos = uk_ie[1].train_lsos()
    assert consistency_bit(E("CA Disrupted(r4)"), lsos) == 1
    assert consistency_bit(E("CA Cleared(r0)"), lsos) == 0


def test_target_entailments_are_consistent(uk_ie):
    lsos = uk_ie[1].train_lsos()
    for x in lsos:
        for g in x.closure:
            assert consistency_bit(g, lsos) == 1


def test_inconsistent_target_union_rejected(uk_ie):
    from semtl.domain import Lso

    t1 = uk_ie[1].domain.lso("t1")
    bad = Lso("bad", merge_abox(t1.ontology, [E("CA Cleared(r0)")]))
    with pytest.raises(InconsistentTargetError):
        consistency_bit(E("CA Road(r3)"), [t1, bad])


def test_c_channel_matches_oracle():
    task_s, task_t = synth_tasks(2, n_lsos_source=20, n_lsos_target=12)
    emb = build_embedding_matrix(task_s, task_t)
    union = target_union(task_t.train_lsos())
    for g, c in zip(emb.index, emb.c):
        assert c == int(is_consistent(merge_abox(union, [g])))
    assert 0 in emb.c  # inconsistent slots are present


# -- t -----------------------------------------------------------------------


def split_instances(task_s, task_t, target):
    index = feature_index(task_s, task_t)
    tgt = em.raw_instances(task_t.train_lsos(), index, target, "target")
    src = em.raw_instances(task_s.train_lsos(), index, em.source_target(task_s, task_t, target), "source")
    folds = em._folds(task_t.train_lsos(), target, 5, 0)
    return index, tgt, src, folds


@pytest.mark.parametrize("seed", range(3))
def test_closed_form_matches_trained_presence_learner(seed):
    task_s, task_t = synth_tasks(seed, n_lsos_source=16, n_lsos_target=12, n_noise=1)
    target = task_t.targets[0]
    index, tgt, src, folds = split_instances(task_s, task_t, target)
    sets = [frozenset({g}) for g in index] + [frozenset(index[:4])]
    for S in sets:
        closed = em._presence_gain(S, tgt, src, folds)
        trained = em._generic_gain(S, tgt, src, folds, "presence", 0)
        assert closed == pytest.approx(trained, abs=1e-12)


def test_gain_without_source_instances_is_zero():
    task_s, task_t = synth_tasks(0, n_lsos_source=16, n_lsos_target=12)
    target = task_t.targets[0]
    index, tgt, src, _ = split_instances(task_s, task_t, target)
    target_only = sorted({r.entailment for r in tgt} - {r.entailment for r in src}, key=str)
    assert target_only
    assert estimate_epsilon(target_only[0], task_s, task_t, target) == 0.0


def test_epsilons_nonnegative_and_floor(uk_ie):
    task_s, task_t = uk_ie
    target = task_t.targets[1]
    index = feature_index(task_s, task_t)
    for g, t in zip(index, estimate_epsilons(index, task_s, task_t, target)):
        assert t >= 0
        assert t == max(0.0, transfer_gain({g}, task_s, task_t, target))


def test_planted_signal_positive_noise_zero():
    signal_pos, noise_zero = 0, 0
    for seed in range(10):
        task_s, task_t = synth_tasks(seed, n_noise=2)
        target = task_t.targets[0]
        signal_pos += estimate_epsilon(E("CA Sig0(e0)"), task_s, task_t, target, seed=seed) > 0
        noise_zero += estimate_epsilon(E("CA Noise0(n0)"), task_s, task_t, target, seed=seed) == 0
    assert signal_pos > 5 and noise_zero > 5


def test_order_equivariance():
    task_s, task_t = synth_tasks(1, n_lsos_source=16, n_lsos_target=12)
    target = task_t.targets[0]
    index = list(feature_index(task_s, task_t))
    perm = np.random.default_rng(0).permutation(len(index))
    base = estimate_epsilons(index, task_s, task_t, target)
    permuted = estimate_epsilons([index[i] for i in perm], task_s, task_t, target)
    assert permuted == [base[i] for i in perm]


def test_sampled_epsilons_impute_by_predicate():
    task_s, task_t = synth_tasks(1, n_lsos_source=16, n_lsos_target=12)
    target = task_t.targets[0]
    index = feature_index(task_s, task_t)
    exact = dict(zip(index, estimate_epsilons(index, task_s, task_t, target)))
    sampled = dict(zip(index, estimate_epsilons(index, task_s, task_t, target, sample=5)))
    matches = [g for g in index if sampled[g] == exact[g]]
    assert len(matches) >= 5
    with pytest.raises(ParameterError):
        estimate_epsilons(index, task_s, task_t, target, sample=0)


def test_targets_never_features(uk_ie):
    index = feature_index(*uk_ie)
    assert not set(index) & set(uk_ie[1].targets)
    assert not set(index) & set(uk_ie[0].targets)


# -- the matrix --------------------------------------------------------------


def test_fixture_matrix(uk_ie):
    emb = build_embedding_matrix(*uk_ie)
    assert emb.m == 7 == len(emb.t) == len(emb.c)
    assert all(t >= 0 for t in emb.t)
    assert emb.v == 1 / 3
    assert emb.features(E("CA Disrupted(r1)"))[1] == 0.0
    assert emb.feature_rows().shape == (7, 3)


def test_identical_tasks_matrix(uk_ie):
    task_t = uk_ie[1]
    emb = build_embedding_matrix(task_t, task_t)
    assert emb.v == 0 and set(emb.c) == {1}


def test_csv_round_trip(uk_ie):
    emb = build_embedding_matrix(*uk_ie)
    text = emb.to_csv()
    assert text.splitlines()[0] == "entailment,t,c,v,source_member,target_member"
    rows = text.splitlines()[1:]
    assert rows == sorted(rows, key=lambda r: r.split(",")[0])
    back = embedding_from_csv(text, emb.target)
    assert back == emb
    assert back.index_hash() == emb.index_hash()


def test_matrix_validation():
    with pytest.raises(ValueError):
        em.EmbeddingMatrix((E("CA A(a)"),), (-0.1,), (1,), 0.5, 0.5, 0.5, E("CA B(a)"))
    with pytest.raises(ValueError):
        em.EmbeddingMatrix((E("CA A(a)"),), (0.1,), (2,), 0.5, 0.5, 0.5, E("CA B(a)"))
