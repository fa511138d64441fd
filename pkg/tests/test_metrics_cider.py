import math

import pytest
from hypothesis import given, settings, strategies as st

from capfuse.errors import EmptyCandidateList, EmptyReferenceSet, LengthMismatch
from capfuse.metrics import cider, tokenize

from oracles import oracle_cider

T = lambda s: tokenize(s).tokens

nonempty_tokens = st.lists(st.sampled_from("abcdefgh"), min_size=4, max_size=10)
image_sets = st.lists(
    st.tuples(nonempty_tokens, st.lists(nonempty_tokens, min_size=1, max_size=3)),
    min_size=2,
    max_size=5,
)

TOY_CANDS = [T("a red tower stands tall"), T("two ducks swim in water")]
TOY_REFS = [[T("a red tower stands tall")], [T("two ducks swim in water")]]


class TestCider:
    def test_toy_identity_is_exactly_ten(self):
        assert cider(TOY_CANDS, TOY_REFS) == 10.0

    def test_plain_variant_identity(self):
        assert cider(TOY_CANDS, TOY_REFS, variant="cider") == 10.0

    def test_disjoint_candidate_scores_zero(self):
        cands = [T("x y z w q"), T("two ducks swim in water")]
        assert cider(cands, TOY_REFS) < cider(TOY_CANDS, TOY_REFS)
        only_disjoint = [T("p q r s t"), T("u v w x y")]
        assert cider(only_disjoint, TOY_REFS) == 0.0

    def test_length_penalty_punishes_difference(self):
        # Same n-gram overlap, increasingly padded candidate.
        refs = [[T("a b c d e")], [T("p q r s t")]]
        short = [T("a b c d e"), T("p q r s t")]
        padded = [T("a b c d e x y z w v u"), T("p q r s t")]
        clipped = cider(padded, refs)
        plain = cider(padded, refs, variant="cider")
        assert clipped < plain
        assert cider(short, refs) == 10.0

    def test_idf_downweights_shared_ngrams(self):
        # "a" appears in both images' references, so matching it is worth
        # less than matching image-specific words.
        refs = [[T("a red tower stands tall")], [T("a duck swims near water")]]
        common_only = [T("a a a a"), T("a a a a")]
        specific = [T("red tower stands tall"), T("duck swims near water")]
        assert cider(common_only, refs) < cider(specific, refs)

    def test_multiple_references_average(self):
        refs = [[T("a b c d"), T("x y z w")], [T("p q r s")]]
        cands = [T("a b c d"), T("p q r s")]
        value = cider(cands, refs)
        assert 0.0 < value < 10.0

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            cider(TOY_CANDS, TOY_REFS, variant="spice")

    def test_empty_candidates(self):
        with pytest.raises(EmptyCandidateList):
            cider([], [])

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            cider([T("a b")], [])

    def test_empty_reference_set(self):
        with pytest.raises(EmptyReferenceSet):
            cider([T("a b"), T("c d")], [[T("a b")], []])

    @settings(max_examples=100, deadline=None)
    @given(image_sets)
    def test_matches_oracle_clipped(self, images):
        cands = [c for c, _ in images]
        refs = [r for _, r in images]
        assert cider(cands, refs) == pytest.approx(
            oracle_cider(cands, refs), abs=1e-9
        )

    @settings(max_examples=100, deadline=None)
    @given(image_sets)
    def test_matches_oracle_plain(self, images):
        cands = [c for c, _ in images]
        refs = [r for _, r in images]
        assert cider(cands, refs, variant="cider") == pytest.approx(
            oracle_cider(cands, refs, variant="cider"), abs=1e-9
        )

    @given(image_sets)
    def test_clipped_variant_bounded(self, images):
        value = cider([c for c, _ in images], [r for _, r in images])
        assert 0.0 <= value <= 10.0 + 1e-9

    def test_sigma_controls_penalty_width(self):
        refs = [[T("a b c d e")], [T("p q r s t")]]
        padded = [T("a b c d e x y z"), T("p q r s t")]
        narrow = cider(padded, refs, sigma=1.0)
        wide = cider(padded, refs, sigma=20.0)
        assert narrow < wide

    def test_gaussian_penalty_value(self):
        # One image, one reference, same unigrams, length delta 3:
        # every per-order similarity picks up exp(-9/72).
        refs = [[T("a b c d e")], [T("p q r s t")]]
        padded = [T("a b c d e x y z"), T("p q r s t")]
        expected_factor = math.exp(-9.0 / (2.0 * 36.0))
        with_pen = cider(padded, refs)
        without = cider(padded, refs, variant="cider")
        # Clipping does not bite here (counts are all 1), so the variants
        # differ only by the penalty on the first image.
        first_image_plain = 2 * without - 10.0
        first_image_clipped = 2 * with_pen - 10.0
        assert first_image_clipped == pytest.approx(
            first_image_plain * expected_factor, rel=1e-9
        )
