"""
Tests for dataset assembly, the EVDS format, the training loop and ensembles
"""

import numpy as np
import pytest
from pydantic import ValidationError

from src.losses import LossKind, LossSpec, loss_value, optimal_f_oracle
from src.models import TimeSeriesPair
from src.network import init_network, parameter_vector
from src.training import (
    Dataset,
    TrainConfig,
    TrainingHistory,
    augment_sign_flip,
    batch_bounds,
    ensemble_log_k,
    generate_training_set,
    jackknife,
    load_ensemble,
    member_log_k,
    read_dataset,
    save_ensemble,
    split_dataset,
    train,
    train_ensemble,
    write_dataset,
)
from src.utils.exceptions import InvalidArgumentError, TrainingError

FAST = TrainConfig(batch_size=32, max_epochs=15, patience=5, learning_rate=1e-3, augment_sign_flip=False)


def shifted_gaussians(n_per_model, dim=2, shift=1.5, seed=0):
    rng = np.random.default_rng(seed)
    x1 = rng.normal(shift, 1.0, size=(n_per_model, dim))
    x0 = rng.normal(-shift, 1.0, size=(n_per_model, dim))
    labels = np.concatenate([np.ones(n_per_model), np.zeros(n_per_model)])
    return Dataset(np.vstack([x1, x0]), labels)


class TestDataset:

    def test_generation_is_balanced_and_shuffled(self):
        dataset = generate_training_set(TimeSeriesPair(4), 50, seed=3)
        assert len(dataset) == 100
        assert dataset.label_counts == (50, 50)
        assert dataset.is_balanced
        assert not np.all(dataset.labels[:50] == 1)

    def test_generation_is_deterministic(self):
        a = generate_training_set(TimeSeriesPair(4), 20, seed=3)
        b = generate_training_set(TimeSeriesPair(4), 20, seed=3)
        np.testing.assert_array_equal(a.data, b.data)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_validation(self):
        with pytest.raises(InvalidArgumentError):
            Dataset(np.zeros((3, 2)), np.array([0, 1]))
        with pytest.raises(InvalidArgumentError):
            Dataset(np.zeros((2, 2)), np.array([0, 2]))
        with pytest.raises(InvalidArgumentError):
            generate_training_set(TimeSeriesPair(4), 0, seed=1)

    def test_prior_ratio(self):
        imbalanced = Dataset(np.zeros((3, 1)), np.array([1, 1, 0]))
        with pytest.raises(InvalidArgumentError, match="imbalanced"):
            imbalanced.prior_ratio()
        assert imbalanced.prior_ratio(allow_imbalance=True).log_ratio == pytest.approx(np.log(2.0))
        assert shifted_gaussians(5).prior_ratio().log_ratio == 0.0

    def test_select_columns(self):
        dataset = shifted_gaussians(5, dim=3)
        subset = dataset.select_columns([0, 2])
        np.testing.assert_array_equal(subset.data, dataset.data[:, [0, 2]])
        assert dataset.select_columns(None) is dataset
        with pytest.raises(InvalidArgumentError):
            dataset.select_columns([3])

    def test_sign_flip_augmentation(self):
        batch = np.array([[1.0, -2.0], [0.5, 3.0]])
        x, m = augment_sign_flip(batch, np.array([1, 0]))
        np.testing.assert_array_equal(x, np.array([[1.0, -2.0], [0.5, 3.0], [-1.0, 2.0], [-0.5, -3.0]]))
        np.testing.assert_array_equal(m, [1, 0, 1, 0])


class TestDatasetFile:

    def test_round_trip(self, tmp_path):
        dataset = generate_training_set(TimeSeriesPair(3), 10, seed=1)
        path = write_dataset(dataset, tmp_path / "nested" / "train.evds")
        loaded = read_dataset(path)
        np.testing.assert_array_equal(loaded.data, dataset.data)
        np.testing.assert_array_equal(loaded.labels, dataset.labels)
        again = write_dataset(loaded, tmp_path / "again.evds")
        assert again.read_bytes() == path.read_bytes()

    def test_header_layout(self, tmp_path):
        path = write_dataset(shifted_gaussians(2, dim=3), tmp_path / "d.evds")
        raw = path.read_bytes()
        assert raw[:4] == b"EVDS"
        assert len(raw) == 4 + 16 + 4 * 3 * 8 + 4

    def test_rejects_bad_files(self, tmp_path):
        path = write_dataset(shifted_gaussians(2), tmp_path / "d.evds")
        raw = path.read_bytes()
        (tmp_path / "short.evds").write_bytes(raw[:-1])
        (tmp_path / "long.evds").write_bytes(raw + b"\x00")
        (tmp_path / "magic.evds").write_bytes(b"NOPE" + raw[4:])
        for name in ("short", "long", "magic"):
            with pytest.raises(InvalidArgumentError):
                read_dataset(tmp_path / f"{name}.evds")

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_dataset(tmp_path / "absent.evds")


class TestTrainConfig:

    def test_defaults(self):
        config = TrainConfig()
        assert config.batch_size == 128
        assert config.max_epochs == 200
        assert config.patience == 10
        assert config.validation_fraction == 0.1
        assert config.learning_rate == 1e-4
        assert config.decay_rate == 0.95

    @pytest.mark.parametrize("overrides", [
        {"batch_size": 1},
        {"validation_fraction": 1.0},
        {"patience": 20, "max_epochs": 10},
        {"unknown": 1},
    ])
    def test_invalid(self, overrides):
        with pytest.raises(ValidationError):
            TrainConfig(**overrides)


class TestTrainer:

    def test_split_is_stratified(self):
        dataset = shifted_gaussians(50)
        train_set, val_set = split_dataset(dataset, 0.2, seed=4)
        assert len(train_set) == 80 and len(val_set) == 20
        assert val_set.label_counts == (10, 10)

    def test_validation_loss_improves(self):
        net = init_network(2, seed=0)
        best, history = train(net, shifted_gaussians(200), LossSpec(LossKind.EXPONENTIAL), FAST)
        assert history.best_val_loss < history.initial_val_loss
        assert 1 <= history.n_epochs <= FAST.max_epochs
        assert history.best_epoch == int(np.argmin(history.val_loss))
        assert best is not net

    def test_overfits_tiny_dataset(self):
        dataset = generate_training_set(TimeSeriesPair(5), 16, seed=3)
        config = TrainConfig(batch_size=32, max_epochs=500, patience=500, learning_rate=5e-3, decay_rate=1.0,
                             validation_fraction=0.25, augment_sign_flip=False)
        loss = LossSpec(LossKind.LPOP_EXPONENTIAL, 2.0)
        _, history = train(init_network(5, seed=1), dataset, loss, config)
        assert history.n_epochs == 500
        assert history.train_loss[-1] < 0.5 * history.train_loss[0]

    def test_constant_features_cannot_beat_even_odds(self):
        data = np.ones((200, 3))
        dataset = Dataset(data, np.array([1] * 100 + [0] * 100))
        loss = LossSpec(LossKind.LPOP_EXPONENTIAL, 2.0)
        _, history = train(init_network(3, seed=2), dataset, loss, FAST.model_copy(update={"max_epochs": 30}))
        f_even = optimal_f_oracle(loss, 1.0, 1.0)
        even_odds_loss = 0.5 * (loss_value(loss, f_even, 1) + loss_value(loss, f_even, 0))
        assert history.best_val_loss >= 0.98 * even_odds_loss

    def test_training_beats_untrained_network_across_seeds(self):
        pair = TimeSeriesPair(20, t=np.linspace(0.0, 90.0, 20))
        dataset = generate_training_set(pair, 1000, seed=7)
        loss = LossSpec(LossKind.LPOP_EXPONENTIAL, 2.0)
        config = TrainConfig(batch_size=64, max_epochs=8, patience=8, learning_rate=1e-3)
        improved = 0
        for seed in range(20):
            _, history = train(init_network(20, seed=seed), dataset, loss, config.model_copy(update={"seed": seed}))
            improved += history.best_val_loss < history.initial_val_loss
        assert improved >= 19

    def test_batch_bounds_fold_single_row_tail(self):
        assert batch_bounds(65, 32) == [(0, 32), (32, 65)]
        assert batch_bounds(66, 32) == [(0, 32), (32, 64), (64, 66)]
        assert batch_bounds(64, 32) == [(0, 32), (32, 64)]
        assert batch_bounds(5, 8) == [(0, 5)]

    def test_trains_with_single_row_tail(self):
        # 40 rows, 7 held out: 33 training rows against a batch size of 32
        config = FAST.model_copy(update={"max_epochs": 2, "patience": 1, "validation_fraction": 0.17})
        _, history = train(init_network(2, seed=0), shifted_gaussians(20), LossSpec(LossKind.EXPONENTIAL), config)
        assert np.all(np.isfinite(history.train_loss))

    def test_deterministic(self):
        loss = LossSpec(LossKind.LPOP_EXPONENTIAL, 2.0)
        a, _ = train(init_network(2, seed=5), shifted_gaussians(100), loss, FAST)
        b, _ = train(init_network(2, seed=5), shifted_gaussians(100), loss, FAST)
        np.testing.assert_array_equal(parameter_vector(a), parameter_vector(b))

    def test_input_scale_is_set(self):
        net = init_network(2, seed=0)
        best, _ = train(net, shifted_gaussians(50), LossSpec(), FAST.model_copy(update={"max_epochs": 2, "patience": 1}))
        assert np.all(best.input_scale > 1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            train(init_network(3, seed=0), shifted_gaussians(20), LossSpec(), FAST)

    def test_imbalance_must_be_declared(self):
        dataset = Dataset(np.random.default_rng(0).normal(size=(30, 2)), np.array([1] * 20 + [0] * 10))
        with pytest.raises(InvalidArgumentError):
            train(init_network(2, seed=0), dataset, LossSpec(), FAST)

    def test_history_frame_round_trip(self):
        history = TrainingHistory(initial_val_loss=2.0)
        history.record(1.0, 0.9, 1e-3)
        history.record(0.8, 0.95, 9.5e-4)
        frame = history.to_frame()
        assert list(frame.columns) == ["epoch", "train_loss", "val_loss", "lr"]
        restored = TrainingHistory.from_frame(frame)
        assert restored.best_epoch == 0
        assert restored.val_loss == history.val_loss

    def test_training_error_names_member(self):
        error = TrainingError("non-finite training loss", epoch=2, batch=5).for_member(3)
        assert (error.member, error.epoch, error.batch) == (3, 2, 5)
        assert "member 3, epoch 2, batch 5" in str(error)


class TestEnsemble:

    def test_jackknife_two_members(self):
        mean, stderr = jackknife(np.array([[1.0, 4.0], [3.0, 4.0]]))
        np.testing.assert_allclose(mean, [2.0, 4.0])
        np.testing.assert_allclose(stderr, [1.0, 0.0])

    def test_jackknife_single_member(self):
        mean, stderr = jackknife(np.array([[1.0, 2.0]]))
        np.testing.assert_array_equal(stderr, [0.0, 0.0])

    def test_jackknife_permutation_invariant(self, rng):
        values = rng.normal(size=(5, 7))
        np.testing.assert_allclose(jackknife(values)[1], jackknife(values[::-1])[1])

    def test_seeds_and_threads(self):
        dataset = shifted_gaussians(60)
        config = FAST.model_copy(update={"max_epochs": 3, "seed": 10})
        serial = train_ensemble(2, dataset, LossSpec(), config, threads=1)
        parallel = train_ensemble(2, dataset, LossSpec(), config, threads=2)
        assert serial.seeds == [10, 11]
        x = dataset.data[:10]
        np.testing.assert_array_equal(member_log_k(serial, x), member_log_k(parallel, x))
        mean, stderr = ensemble_log_k(serial, x)
        assert mean.shape == stderr.shape == (10,)
        assert np.all(stderr > 0)

    def test_identical_members_have_zero_stderr(self):
        dataset = shifted_gaussians(40)
        ensemble = train_ensemble(1, dataset, LossSpec(), FAST.model_copy(update={"max_epochs": 2, "patience": 1}))
        ensemble.members.append(ensemble.members[0])
        _, stderr = ensemble_log_k(ensemble, dataset.data[:5])
        np.testing.assert_array_equal(stderr, np.zeros(5))

    def test_save_and_load(self, tmp_path):
        dataset = shifted_gaussians(40, dim=3)
        ensemble = train_ensemble(2, dataset, LossSpec(LossKind.CROSS_ENTROPY), FAST.model_copy(update={"max_epochs": 2, "patience": 1}), columns=[0, 2])
        save_ensemble(ensemble, tmp_path / "ckpt", provenance={"seed": 0, "config_hash": "abc"})
        loaded = load_ensemble(tmp_path / "ckpt")
        assert loaded.loss == ensemble.loss
        assert loaded.columns == [0, 2]
        assert loaded.histories[1].val_loss == pytest.approx(ensemble.histories[1].val_loss)
        x = dataset.data[:6, [0, 2]]
        np.testing.assert_array_equal(member_log_k(loaded, x), member_log_k(ensemble, x))

    def test_load_missing(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_ensemble(tmp_path)

    def test_batch_dimension_checked(self):
        ensemble = train_ensemble(1, shifted_gaussians(20), LossSpec(), FAST.model_copy(update={"max_epochs": 1, "patience": 1}))
        with pytest.raises(InvalidArgumentError):
            member_log_k(ensemble, np.zeros((2, 3)))

    def test_invalid_size(self):
        with pytest.raises(InvalidArgumentError):
            train_ensemble(0, shifted_gaussians(10), LossSpec())
