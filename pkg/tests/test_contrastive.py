from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gradcheck import max_relative_error, random_instance
from slangsense import contrastive, corpus, embeddings
from slangsense.errors import ConfigError, DataError, DivergenceError


@pytest.fixture(scope="module")
def mini_sentence_table(mini_paths):
    return embeddings.load_table(mini_paths["sentence_embeddings"], "sentence")


class TestTripletLoss:
    def test_all_equal_gives_margin(self):
        v = np.array([0.5, -1.0])
        assert contrastive.triplet_loss(v, v, v, 1.0) == 1.0

    def test_inactive_hinge(self):
        a, p, n = np.array([0.0, 0.0]), np.array([1.0, 0.0]), np.array([3.0, 0.0])
        assert contrastive.triplet_loss(a, p, n, 1.0) == 0.0

    def test_active_hinge(self):
        a, p, n = np.array([0.0, 0.0]), np.array([2.0, 0.0]), np.array([1.0, 0.0])
        assert contrastive.triplet_loss(a, p, n, 1.0) == 2.0

    @given(
        st.lists(st.floats(-5, 5), min_size=3, max_size=3),
        st.lists(st.floats(-5, 5), min_size=3, max_size=3),
        st.lists(st.floats(-5, 5), min_size=3, max_size=3),
        st.floats(0.01, 3.0),
    )
    def test_nonnegative_and_zero_condition(self, a, p, n, margin):
        a, p, n = np.array(a), np.array(p), np.array(n)
        loss = contrastive.triplet_loss(a, p, n, margin)
        assert loss >= 0.0
        d_ap = embeddings.euclidean_distance(a, p)
        d_an = embeddings.euclidean_distance(a, n)
        assert (loss == 0.0) == (d_an >= d_ap + margin)


class TestEncode:
    def test_zero_output_layer(self):
        params = contrastive.init_encoder(3, 4, seed=0)
        params.w2[:] = 0.0
        params.b2[:] = 0.0
        assert not contrastive.encode(params, np.array([1.0, -2.0, 0.5])).any()

    def test_deterministic(self):
        params = contrastive.init_encoder(4, 6, seed=1)
        v = np.array([0.1, 0.2, 0.3, 0.4])
        assert contrastive.encode(params, v).tobytes() == contrastive.encode(params, v).tobytes()

    def test_batch_matches_single(self):
        # BLAS picks different kernels per shape, so agreement is to the ulp,
        # not bitwise
        rng = np.random.default_rng(2)
        params = contrastive.init_encoder(5, 7, seed=3)
        batch = rng.normal(size=(100, 5))
        encoded = contrastive.encode_batch(params, batch)
        for i in range(100):
            np.testing.assert_allclose(
                encoded[i], contrastive.encode(params, batch[i]), rtol=1e-13, atol=1e-15
            )

    def test_width_mismatch(self):
        params = contrastive.init_encoder(3, 4, seed=0)
        with pytest.raises(DataError, match="width"):
            contrastive.encode(params, np.zeros(5))


class TestGradients:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(97)
        for _ in range(20):
            params, a, p, n = random_instance(rng)
            assert max_relative_error(params, a, p, n, 1.0) < 1e-4

    def test_zero_hinge_contributes_zero_gradient(self):
        # planted instance where the hinge argument is exactly zero: a == p == n
        params = contrastive.init_encoder(3, 4, seed=5)
        x = np.array([[0.3, -0.4, 0.9]])
        loss, grads = contrastive.batch_loss_and_grads(params, x, x, x, 0.0)
        assert loss == 0.0
        for grad in grads.values():
            assert not grad.any()


class TestBuildTriplets:
    def test_fanout_two_senses(self, mini_dataset, mini_sentence_table):
        config = contrastive.TrainConfig(negatives_per_positive=1, seed=0)
        triplets = contrastive.build_triplets(mini_dataset, mini_sentence_table, config)
        train_defs = {e.definition_id for e in mini_dataset.split("train")}
        per_def = Counter(t.anchor for t in triplets)
        assert set(per_def) == train_defs
        assert set(per_def.values()) == {2}  # two senses per word in the mini corpus

    def test_degenerate_pool_errors(self):
        inventory = corpus.SenseInventory({"only": [corpus.SenseDef("s:only:0", "the sole sense")]})
        entries = (
            corpus.GlossEntry("e", "d", "only", "meaning", "the only thing", None, "train", "x"),
        )
        dataset = corpus.Dataset(entries, inventory, frozenset())
        table = embeddings.EmbeddingTable(2, {"d": np.zeros(2), "s:only:0": np.ones(2)}, "sentence")
        with pytest.raises(DataError, match="negative pool"):
            contrastive.build_triplets(dataset, table, contrastive.TrainConfig())

    def test_multiset_matches_enumeration_oracle(self, mini_dataset, mini_sentence_table):
        config = contrastive.TrainConfig(negatives_per_positive=2, seed=42)
        triplets = contrastive.build_triplets(mini_dataset, mini_sentence_table, config)

        # oracle: enumerate the full (anchor, positive) space directly
        word_of_sense = {}
        for word in mini_dataset.inventory.words:
            for sense in mini_dataset.inventory.senses(word):
                word_of_sense[sense.sense_id] = word
        expected_pairs = Counter()
        seen_defs = set()
        for entry in mini_dataset.split("train"):
            if entry.definition_id in seen_defs:
                continue
            seen_defs.add(entry.definition_id)
            for sense in mini_dataset.inventory.senses(entry.word):
                expected_pairs[(entry.definition_id, sense.sense_id)] = config.negatives_per_positive

        assert Counter((t.anchor, t.positive) for t in triplets) == expected_pairs
        for t in triplets:
            anchor_word = t.anchor.split(":")[1]  # d:<word>:<k>
            assert word_of_sense[t.negative] != anchor_word
            assert word_of_sense[t.positive] == anchor_word

    def test_seeded_reproducible(self, mini_dataset, mini_sentence_table):
        config = contrastive.TrainConfig(seed=9)
        a = contrastive.build_triplets(mini_dataset, mini_sentence_table, config)
        b = contrastive.build_triplets(mini_dataset, mini_sentence_table, config)
        assert a == b


class TestTraining:
    def _toy_world(self):
        # two themes: conventional axis 0 extends to slang axis 1
        rng = np.random.default_rng(8)
        vectors = {}
        inventory_rows = {}
        entries = []
        for i in range(8):
            word = f"word{chr(97 + i)}"
            theme = i % 2
            sid = f"s:{word}:0"
            did = f"d:{word}:0"
            base = np.zeros(4)
            base[theme] = 1.0
            ext = np.zeros(4)
            ext[theme + 2] = 1.0
            vectors[sid] = base + 0.05 * rng.normal(size=4)
            vectors[did] = ext + 0.05 * rng.normal(size=4)
            inventory_rows[word] = [corpus.SenseDef(sid, f"sense of {word}")]
            entries.append(
                corpus.GlossEntry(f"e:{word}", did, word, f"meaning of {word}", f"such a {word} here", None, "train", "x")
            )
        dataset = corpus.Dataset(tuple(entries), corpus.SenseInventory(inventory_rows), frozenset())
        table = embeddings.EmbeddingTable(4, vectors, "sentence")
        return dataset, table

    def test_loss_decreases_on_planted_toy(self):
        dataset, table = self._toy_world()
        config = contrastive.TrainConfig(epochs=4, seed=1, batch_size=4, output_dim=8)
        triplets = contrastive.build_triplets(dataset, table, config)
        result = contrastive.train_encoder(triplets, table, config)
        assert result.train_losses[-1] < result.initial_train_loss

    def test_zero_loss_leaves_parameters_unchanged(self):
        table = embeddings.EmbeddingTable(
            2,
            {"a": np.array([0.0, 0.0]), "p": np.array([0.1, 0.0]), "n": np.array([5.0, 5.0])},
            "sentence",
        )
        config = contrastive.TrainConfig(epochs=2, margin=0.01, seed=0, output_dim=4)
        params0 = contrastive.init_encoder(2, 4, config.seed)
        triplets = [contrastive.Triplet("a", "p", "n")]
        # planted inactive hinge: with the margin tiny and n far away, loss is 0
        a, p, n = (table.lookup(x)[None, :] for x in ("a", "p", "n"))
        assert contrastive.batch_loss(params0, a, p, n, config.margin) == 0.0
        result = contrastive.train_encoder(triplets, table, config)
        for name, arr in result.params.arrays().items():
            np.testing.assert_array_equal(arr, params0.arrays()[name])

    def test_bitwise_reproducible(self, mini_dataset, mini_sentence_table):
        config = contrastive.TrainConfig(epochs=2, seed=23, batch_size=16, output_dim=16)
        triplets = contrastive.build_triplets(mini_dataset, mini_sentence_table, config)
        r1 = contrastive.train_encoder(triplets, mini_sentence_table, config)
        r2 = contrastive.train_encoder(triplets, mini_sentence_table, config)
        for name in ("w1", "b1", "w2", "b2"):
            assert r1.params.arrays()[name].tobytes() == r2.params.arrays()[name].tobytes()
        assert r1.train_losses == r2.train_losses

    def test_divergence_guard(self):
        table = embeddings.EmbeddingTable(
            2,
            {"a": np.array([1.0, 1.0]), "p": np.array([-1.0, 1.0]), "n": np.array([1.0, -1.0])},
            "sentence",
        )
        # finite parameters whose pairwise output distances both overflow to
        # inf: the hinge becomes inf - inf = nan on the first batch
        blown = contrastive.EncoderParams(
            w1=np.eye(2) * 1e3,
            b1=np.zeros(2),
            w2=np.array([[1e200, -1e200], [-1e200, 1e200]]),
            b2=np.zeros(2),
        )
        config = contrastive.TrainConfig(epochs=1, seed=0, output_dim=2)
        with pytest.raises(DivergenceError):
            contrastive.train_encoder(
                [contrastive.Triplet("a", "p", "n")], table, config, init=blown
            )

    def test_empty_triplets_rejected(self, mini_sentence_table):
        with pytest.raises(ConfigError, match="empty"):
            contrastive.train_encoder([], mini_sentence_table, contrastive.TrainConfig())

    def test_dev_losses_reported(self, mini_dataset, mini_sentence_table):
        with_dev = corpus.assign_dev_split(mini_dataset, fraction=0.15, seed=0)
        config = contrastive.TrainConfig(epochs=2, seed=3, output_dim=8)
        train_triplets = contrastive.build_triplets(with_dev, mini_sentence_table, config, split="train")
        dev_triplets = contrastive.build_triplets(with_dev, mini_sentence_table, config, split="dev")
        result = contrastive.train_encoder(
            train_triplets, mini_sentence_table, config, dev_triplets=dev_triplets
        )
        assert len(result.dev_losses) == 2
        assert result.initial_dev_loss is not None


class TestSerialization:
    def test_round_trip_bitwise(self, tmp_path):
        params = contrastive.init_encoder(6, 10, seed=77)
        params.b1 += 0.25
        path = tmp_path / "encoder.txt"
        contrastive.save_params(params, path)
        loaded = contrastive.load_params(path)
        for name, arr in params.arrays().items():
            assert arr.tobytes() == loaded.arrays()[name].tobytes()
        v = np.linspace(-1, 1, 6)
        assert contrastive.encode(params, v).tobytes() == contrastive.encode(loaded, v).tobytes()

    def test_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("not an encoder file\n")
        with pytest.raises(DataError):
            contrastive.load_params(path)

    def test_rejects_truncated(self, tmp_path):
        params = contrastive.init_encoder(3, 4, seed=0)
        path = tmp_path / "encoder.txt"
        contrastive.save_params(params, path)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:-2]) + "\n")
        with pytest.raises(DataError):
            contrastive.load_params(path)
