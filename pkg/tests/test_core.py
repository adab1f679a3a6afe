import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from memore.core import (
    LABEL_ORDER,
    AllZeroError,
    EmotionDistribution,
    EmotionLabel,
    Modality,
    ValenceMap,
    normalize,
    valence_score,
)

from conftest import assert_close, dist, distributions


class TestTaxonomy:
    def test_exactly_eight_labels(self):
        assert len(EmotionLabel) == 8
        assert len(LABEL_ORDER) == 8

    def test_serialized_names_lowercase_ascii(self):
        for label in EmotionLabel:
            assert label.value == label.value.lower()
            assert label.value.isascii()

    def test_listing_order_surprise_last(self):
        assert LABEL_ORDER[0] is EmotionLabel.JOY
        assert LABEL_ORDER[-1] is EmotionLabel.SURPRISE

    def test_modalities_closed_set(self):
        assert {m.value for m in Modality} == {"video", "audio", "text"}


class TestDistribution:
    def test_rejects_wrong_cardinality(self):
        with pytest.raises(ValueError):
            EmotionDistribution((1.0,))

    def test_rejects_negative(self):
        vals = [0.0] * 8
        vals[0], vals[1] = 1.1, -0.1
        with pytest.raises(ValueError):
            EmotionDistribution(tuple(vals))

    def test_rejects_bad_sum(self):
        with pytest.raises(ValueError):
            EmotionDistribution(tuple([0.2] * 8))

    def test_json_round_trip(self):
        d = dist(joy=3, fear=1)
        assert EmotionDistribution.from_json_obj(d.to_json_obj()) == d

    def test_json_keys_are_lowercase_labels(self):
        obj = EmotionDistribution.uniform().to_json_obj()
        assert sorted(obj) == sorted(l.value for l in EmotionLabel)


class TestNormalize:
    def test_single_nonzero_mass(self):
        d = normalize({l: (2.0 if l is EmotionLabel.JOY else 0.0) for l in LABEL_ORDER})
        assert d[EmotionLabel.JOY] == 1.0
        assert all(d[l] == 0.0 for l in LABEL_ORDER if l is not EmotionLabel.JOY)

    def test_symmetry(self):
        d = normalize({l: 1.0 for l in LABEL_ORDER})
        assert all(d[l] == 0.125 for l in LABEL_ORDER)

    def test_hand_computed_ratio(self):
        # joy:3, fear:1 -> 3/4 and 1/4
        raw = {l: 0.0 for l in LABEL_ORDER}
        raw[EmotionLabel.JOY] = 3.0
        raw[EmotionLabel.FEAR] = 1.0
        d = normalize(raw)
        assert d[EmotionLabel.JOY] == 0.75
        assert d[EmotionLabel.FEAR] == 0.25

    def test_all_zero_raises(self):
        with pytest.raises(AllZeroError):
            normalize({l: 0.0 for l in LABEL_ORDER})

    @given(distributions())
    def test_idempotent(self, d):
        again = normalize(d.as_dict())
        for l in LABEL_ORDER:
            assert abs(again[l] - d[l]) <= 1e-12


class TestValence:
    def test_default_map_values(self):
        v = ValenceMap.default()
        assert v[EmotionLabel.JOY] == 1.0
        assert v[EmotionLabel.TRUST] == 1.0
        assert v[EmotionLabel.ANTICIPATION] == 1.0
        assert v[EmotionLabel.SURPRISE] == 0.0
        for l in (EmotionLabel.SADNESS, EmotionLabel.ANGER, EmotionLabel.DISGUST,
                  EmotionLabel.FEAR):
            assert v[l] == -1.0

    def test_uniform_hand_sum(self):
        # (3*(+1) + 0 + 4*(-1)) / 8 = -0.125
        assert_close(valence_score(EmotionDistribution.uniform(), ValenceMap.default()),
                     -0.125, 1e-12)

    def test_pure_positive_label(self):
        assert valence_score(dist(joy=1), ValenceMap.default()) == 1.0

    def test_hand_dot_product(self):
        assert_close(valence_score(dist(joy=0.6, sadness=0.4), ValenceMap.default()),
                     0.2, 1e-12)

    @given(distributions(), distributions(),
           st.floats(min_value=0.0, max_value=1.0, allow_nan=False))
    def test_linearity(self, a, b, alpha):
        v = ValenceMap.default()
        mixed = EmotionDistribution(
            tuple(alpha * a[l] + (1 - alpha) * b[l] for l in LABEL_ORDER)
        )
        lhs = valence_score(mixed, v)
        rhs = alpha * valence_score(a, v) + (1 - alpha) * valence_score(b, v)
        assert abs(lhs - rhs) <= 1e-12

    @given(distributions(), st.permutations(list(range(8))))
    def test_label_permutation_invariance(self, d, perm):
        v = ValenceMap.default()
        pd = EmotionDistribution(tuple(d._values[perm[i]] for i in range(8)))
        pv = ValenceMap(tuple(v.weights[perm[i]] for i in range(8)))
        assert abs(valence_score(pd, pv) - valence_score(d, v)) <= 1e-12
