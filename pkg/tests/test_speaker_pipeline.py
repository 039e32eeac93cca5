import numpy as np
import pytest
from autograd import Tensor, grad_check_params
from speaker import SpeakerPipeline, StreamFusion, TemporalPooling, align_content, negate, speaker_forward
from utils.errors import DimensionError, UsageError


def small_pipeline(rng, **overrides):
    options = dict(
        dim=8, ffn_dim=16, dropout=0.0, encoder_channels=2, content_bank_channels=2,
        content_bank_kernels=2, content_channels=4,
    )
    options.update(overrides)
    return SpeakerPipeline(rng, **options)


class TestAlignment:
    def test_equal_length_is_identity(self, rng):
        content = Tensor(rng.normal(size=(5, 3)))
        assert align_content(content, 5) is content

    def test_ramp_interpolates_linearly(self):
        ramp = Tensor(np.arange(4.0).reshape(4, 1))
        out = align_content(ramp, 7).values[:, 0]
        assert np.allclose(out, np.arange(7) * 0.5, atol=1e-12)

    def test_constant_stays_constant(self, rng):
        row = rng.normal(size=6)
        out = align_content(Tensor(np.tile(row, (3, 1))), 11).values
        assert np.allclose(out, row, atol=1e-12)

    def test_endpoints_preserved(self, rng):
        content = rng.normal(size=(9, 4))
        out = align_content(Tensor(content), 4).values
        assert np.allclose(out[0], content[0], atol=1e-12)
        assert np.allclose(out[-1], content[-1], atol=1e-12)

    def test_rejects_empty_target(self, rng):
        with pytest.raises(UsageError):
            align_content(Tensor(rng.normal(size=(3, 2))), 0)


class TestNegation:
    def test_subtracts_itself_to_zero(self, rng):
        full = Tensor(rng.normal(size=(6, 4)))
        assert not negate(full, full).values.any()

    def test_zero_content_is_identity(self, rng):
        full = Tensor(rng.normal(size=(6, 4)))
        assert np.array_equal(negate(full, Tensor(np.zeros((6, 4)))).values, full.values)

    def test_reconstruction(self, rng):
        full = rng.normal(size=(20, 8))
        content = full * rng.uniform(0.5, 1.0, size=full.shape)
        rebuilt = negate(Tensor(full), Tensor(content)).values + content
        np.testing.assert_array_max_ulp(rebuilt, full, maxulp=1)

    def test_shape_mismatch(self, rng):
        with pytest.raises(DimensionError):
            negate(Tensor(rng.normal(size=(6, 4))), Tensor(rng.normal(size=(5, 4))))


class TestPreTransformer:
    def test_shape(self, rng):
        pipeline = small_pipeline(rng)
        assert pipeline.pre_transformer(Tensor(rng.normal(size=(7, 8)))).shape == (7, 8)

    def test_permutation_equivariant_without_positions(self, rng):
        pipeline = small_pipeline(rng)
        pipeline.positional = False
        cif = rng.normal(size=(6, 8))
        order = rng.permutation(6)
        out = pipeline.pre_transformer(Tensor(cif)).values
        assert np.allclose(pipeline.pre_transformer(Tensor(cif[order])).values, out[order], atol=1e-12)

    def test_positions_break_equivariance(self, rng):
        pipeline = small_pipeline(rng)
        cif = rng.normal(size=(6, 8))
        order = np.array([5, 4, 3, 2, 1, 0])
        out = pipeline.pre_transformer(Tensor(cif)).values
        assert not np.allclose(pipeline.pre_transformer(Tensor(cif[order])).values, out[order])


class TestStreams:
    def test_stream_count(self, rng):
        pipeline = small_pipeline(rng, n_streams=3)
        streams = pipeline.multi_stream(Tensor(rng.normal(size=(5, 8))))
        assert len(streams) == 3
        assert all(s.shape == (5, 8) for s in streams)

    def test_shared_weights_give_identical_streams(self, rng):
        pipeline = small_pipeline(rng, n_streams=2)
        first = pipeline.streams[0].parameters()
        for name, param in pipeline.streams[1].parameters().items():
            param.values[:] = first[name].values
        a, b = pipeline.multi_stream(Tensor(rng.normal(size=(5, 8))))
        assert np.array_equal(a.values, b.values)

    def test_attention_pool_identical_streams(self, rng):
        pipeline = small_pipeline(rng, n_streams=3)
        stream = Tensor(rng.normal(size=(5, 8)))
        pooled, weights = pipeline.attention_pool_streams([stream, stream, stream])
        assert np.allclose(pooled.values, stream.values, atol=1e-12)
        assert np.allclose(weights.values.sum(axis=0), 1.0, atol=1e-12)

    def test_attention_pool_single_stream(self, rng):
        pipeline = small_pipeline(rng, n_streams=1)
        stream = Tensor(rng.normal(size=(5, 8)))
        pooled, weights = pipeline.attention_pool_streams([stream])
        assert pooled is stream
        assert np.array_equal(weights.values, np.ones((1, 5)))

    def test_attention_pool_needs_pooler(self, rng):
        pipeline = small_pipeline(rng, n_streams=2, stream_fusion=StreamFusion.CONCAT)
        stream = Tensor(rng.normal(size=(5, 8)))
        with pytest.raises(UsageError):
            pipeline.attention_pool_streams([stream, stream])

    def test_concat_pool(self, rng):
        pipeline = small_pipeline(rng, n_streams=2, stream_fusion="concat")
        pipeline.stream_projection.bias.values[:] = rng.normal(size=8)
        streams = [Tensor(rng.normal(size=(5, 8))) for _ in range(2)]
        assert pipeline.concat_pool_streams(streams).shape == (5, 8)
        zeros = [Tensor(np.zeros((5, 8))) for _ in range(2)]
        out = pipeline.concat_pool_streams(zeros).values
        assert np.allclose(out, np.tile(pipeline.stream_projection.bias.values, (5, 1)), atol=1e-12)

    def test_concat_pool_shape_mismatch(self, rng):
        pipeline = small_pipeline(rng, n_streams=2, stream_fusion="concat")
        with pytest.raises(DimensionError):
            pipeline.concat_pool_streams([Tensor(np.zeros((5, 8))), Tensor(np.zeros((4, 8)))])


class TestTemporalPooling:
    @pytest.mark.parametrize("pooling", list(TemporalPooling))
    def test_single_frame(self, rng, pooling):
        pipeline = small_pipeline(rng, temporal_pooling=pooling)
        frame = rng.normal(size=(1, 8))
        embedding, weights = pipeline.temporal_pool(Tensor(frame))
        assert np.allclose(embedding.values, frame[0], atol=1e-12)
        assert np.allclose(weights.values, [1.0])

    @pytest.mark.parametrize("pooling", list(TemporalPooling))
    def test_constant_sequence(self, rng, pooling):
        pipeline = small_pipeline(rng, temporal_pooling=pooling)
        row = rng.normal(size=8)
        embedding, weights = pipeline.temporal_pool(Tensor(np.tile(row, (9, 1))))
        assert np.allclose(embedding.values, row, atol=1e-12)
        assert weights.values.sum() == pytest.approx(1.0, abs=1e-12)


class TestSpeakerForward:
    def test_default_embedding_width(self, rng):
        pipeline = SpeakerPipeline(rng)
        for n in (3200, 5000):
            assert speaker_forward(pipeline, rng.normal(scale=0.1, size=n)).shape == (128,)

    def test_bad_stream_and_depth(self, rng):
        with pytest.raises(UsageError):
            small_pipeline(rng, n_streams=0)
        with pytest.raises(UsageError):
            small_pipeline(rng, depth=0)

    @pytest.mark.parametrize("heads", [2, 4, 8])
    @pytest.mark.parametrize("depth", [1, 2, 4])
    def test_heads_depth_grid(self, heads, depth):
        rng = np.random.default_rng(heads * 10 + depth)
        pipeline = small_pipeline(rng, n_heads=heads, depth=depth)
        assert len(pipeline.streams[0].blocks) == depth
        assert pipeline(rng.normal(scale=0.1, size=1280)).shape == (8,)

    @pytest.mark.parametrize("negation", [True, False])
    def test_negation_switch(self, rng, negation):
        pipeline = small_pipeline(rng, negation=negation)
        assert (pipeline.content is not None) == negation
        assert pipeline(rng.normal(scale=0.1, size=960)).shape == (8,)

    def test_deterministic(self):
        audio = np.random.default_rng(1).normal(scale=0.1, size=1600)
        first = small_pipeline(np.random.default_rng(6)).embed(audio)
        second = small_pipeline(np.random.default_rng(6)).embed(audio)
        assert np.array_equal(first, second)

    def test_embed_restores_training_mode(self, rng):
        pipeline = small_pipeline(rng)
        pipeline.embed(rng.normal(scale=0.1, size=640))
        assert pipeline.training

    def test_gradients(self, rng):
        pipeline = small_pipeline(rng, n_streams=2)
        audio = rng.normal(scale=0.1, size=960)
        weights = rng.normal(size=8)
        errors = grad_check_params(lambda: (pipeline(audio) * weights).sum(), pipeline.parameters(), coords_per_param=2)
        assert max(errors.values()) < 1e-4
