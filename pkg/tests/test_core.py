import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spmiml.core import (Bag, ConfigError, EmptyInputError, Instance, NumericError, ShapeError,
                         TrainConfig, WeightStore, INSTANCE_LEVEL, LABEL_LEVEL, label_vector)


def label_store(values):
    store = WeightStore(len(values[0]), LABEL_LEVEL)
    store.set_bag("b", values)
    return store


def test_get_label_level_is_identity():
    store = label_store([[0.3, -0.2, 0.5]])
    np.testing.assert_array_equal(store.get("b", 0), [0.3, -0.2, 0.5])


def test_get_instance_level_broadcasts():
    store = WeightStore(3, INSTANCE_LEVEL)
    store.set_bag("b", [0.4])
    np.testing.assert_array_equal(store.get("b", 0), [0.4, 0.4, 0.4])


def test_missing_entry_raises_lookup_error():
    store = label_store([[0.1, 0.2]])
    with pytest.raises(KeyError):
        store.get("nope", 0)
    with pytest.raises(KeyError):
        store.get("b", 5)


def test_update_descends():
    store = label_store([[0.5]])
    store.update("b", 0, [0.2], eta=1.0)
    assert store.get("b", 0)[0] == pytest.approx(0.3)


def test_update_clips_at_lower_bound():
    store = label_store([[-0.95]])
    store.update("b", 0, [0.2], eta=1.0)
    assert store.get("b", 0)[0] == -1.0


def test_instance_level_update_uses_mean_gradient():
    store = WeightStore(3, INSTANCE_LEVEL)
    store.set_bag("b", [0.4])
    store.update("b", 0, [0.3, 0.1, 0.2], eta=1.0)
    assert store.get("b", 0)[0] == pytest.approx(0.2)


def test_update_rejects_non_finite_gradient():
    store = label_store([[0.5, 0.5]])
    with pytest.raises(NumericError):
        store.update("b", 0, [np.nan, 0.0], eta=1.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.floats(-5, 5), min_size=3, max_size=3), min_size=1, max_size=30),
       st.sampled_from([LABEL_LEVEL, INSTANCE_LEVEL]))
def test_values_never_below_clip(grads, granularity):
    store = WeightStore(3, granularity, lower_clip=-1.0)
    store.set_bag("b", [[0.2, 0.2, 0.2]] if granularity == LABEL_LEVEL else [0.2])
    for g in grads:
        store.update("b", 0, g, eta=0.7)
        assert np.all(store.get("b", 0) >= -1.0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-0.9, 3), min_size=4, max_size=4))
def test_write_then_read_roundtrip(values):
    store = label_store([[0.0] * 4, [0.0] * 4])
    store.set_bag("b", [values, [0.0] * 4])
    np.testing.assert_array_equal(store.get("b", 0), values)
    restored = WeightStore.from_dict(store.to_dict())
    np.testing.assert_array_equal(restored.get("b", 0), values)


def test_instance_level_read_is_constant_across_classes():
    store = WeightStore(5, INSTANCE_LEVEL)
    store.set_bag("b", [0.1, -0.3, 0.7])
    for j in range(3):
        assert len(set(store.get("b", j))) == 1


def test_bag_validation():
    with pytest.raises(EmptyInputError):
        Bag("x", [], label_vector([0], 2))
    with pytest.raises(ShapeError):
        Bag("x", [Instance(0, [1.0]), Instance(1, [1.0, 2.0])], label_vector([0], 2))
    with pytest.raises(NumericError):
        Instance(0, [np.inf])


def test_train_config_validation():
    TrainConfig().validate(8)
    for bad in [dict(tau=0.0), dict(tau=1.0), dict(C=9), dict(C=0), dict(lr_theta=0),
                dict(prob_clamp=0.5), dict(sample_count=0)]:
        with pytest.raises(ConfigError):
            TrainConfig(**bad).validate(8)


def test_instance_level_rejects_dispatcher():
    with pytest.raises(ConfigError, match="dispatcher"):
        TrainConfig(granularity=INSTANCE_LEVEL, init_mode="global_freq").validate(8)
    TrainConfig(granularity=INSTANCE_LEVEL, init_mode="global_freq",
                use_dispatcher=False).validate(8)


def test_config_hash_is_stable_and_sensitive():
    a, b = TrainConfig(seed=1), TrainConfig(seed=1)
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != TrainConfig(seed=2).config_hash()
    assert TrainConfig.from_dict(a.to_dict()) == a
