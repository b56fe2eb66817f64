"""Tests for star packing, the ring transformer and the multi-node loss."""

import numpy as np
import pytest
import torch

from meshrollout.autodiff import parameter_gradient_check
from meshrollout.mesh import internal_nodes
from meshrollout.mnp import (
    CenterBias,
    CenterSampler,
    CenterSamplingError,
    MnpOutput,
    RingTransformer,
    StarBatch,
    boundary_distance,
    build_stars,
    combine_losses,
    mnp_loss,
    neighbor_table,
    sample_centers,
)


class TestCenters:
    """Center sampling among internal nodes."""

    def test_distinct_sorted_internal(self, small_mesh):
        """Centers are distinct Normal nodes in ascending order."""
        centers = sample_centers(small_mesh, 10, seed=0)
        assert centers.tolist() == sorted(set(centers.tolist()))
        assert set(centers.tolist()) <= set(internal_nodes(small_mesh).tolist())

    def test_too_many(self, small_mesh):
        """Requesting more centers than internal nodes fails."""
        available = internal_nodes(small_mesh).shape[0]
        with pytest.raises(CenterSamplingError) as excinfo:
            sample_centers(small_mesh, available + 1, seed=0)
        assert excinfo.value.available == available

    def test_sampler_streams(self, small_mesh):
        """A sampler is reproducible per step and clamps m to the pool."""
        sampler = CenterSampler(small_mesh, 10_000, seed=3)
        assert sampler.m == internal_nodes(small_mesh).shape[0]
        small = CenterSampler(small_mesh, 5, seed=3)
        assert np.array_equal(small.sample(7), small.sample(7))

    def test_boundary_bias(self, small_mesh):
        """Biased sampling shifts the mean boundary distance."""
        toward = CenterSampler(small_mesh, 5, seed=1, bias=CenterBias.TOWARD_BOUNDARY)
        away = CenterSampler(small_mesh, 5, seed=1, bias=CenterBias.AWAY_FROM_BOUNDARY)

        def mean_distance(sampler):
            picks = np.concatenate([sampler.sample(step) for step in range(50)])
            return boundary_distance(small_mesh, picks).mean()

        assert mean_distance(toward) < mean_distance(away)


class TestStars:
    """Star sequences and their masks."""

    def test_neighbor_table_padding(self, path_mesh):
        """Rows list ascending neighbors followed by -1."""
        assert neighbor_table(path_mesh, 3).tolist() == [
            [1, -1, -1],
            [0, 2, -1],
            [1, -1, -1],
        ]

    def test_center_and_neighbor_tokens(self, path_mesh):
        """Token 0 comes from the last latent, the rest from the first."""
        z_last = torch.arange(6.0).reshape(3, 2)
        z_first = -torch.arange(6.0).reshape(3, 2) - 1.0
        batch = build_stars(z_last, z_first, path_mesh, np.array([1]), cap=3)
        sequence = batch.sequences[0]
        assert torch.equal(sequence[0], z_last[1])
        assert torch.equal(sequence[1], z_first[0])
        assert torch.equal(sequence[2], z_first[2])
        assert torch.all(sequence[3] == 0.0)
        assert batch.valid[0].tolist() == [True, True, True, False]

    def test_center_not_a_key(self, path_mesh):
        """Neighbors can be kept from attending to the center."""
        z = torch.randn(3, 4)
        batch = build_stars(z, z, path_mesh, np.array([1]), cap=2)
        mask = batch.attention_mask(exclude_center_as_key=True)
        assert mask[0, 0, 0]
        assert not mask[0, 1:, 0].any()

    def test_block_diagonal(self, path_mesh):
        """The flattened mask never links two stars."""
        z = torch.randn(3, 4)
        batch = build_stars(z, z, path_mesh, np.array([0, 1]), cap=2)
        dense = batch.block_diagonal_mask()
        assert dense.shape == (6, 6)
        assert not dense[:3, 3:].any()
        assert not dense[3:, :3].any()


class TestRing:
    """Ring transformer inside each star."""

    def test_batched_matches_looped(self, small_mesh):
        """Stars are independent: one batch equals one call per star."""
        ring = RingTransformer(8, 2)
        z_last, z_first = torch.randn(60, 8), torch.randn(60, 8)
        centers = sample_centers(small_mesh, 4, seed=2)
        batched = ring(build_stars(z_last, z_first, small_mesh, centers)).tokens
        for s, center in enumerate(centers):
            single = ring(build_stars(z_last, z_first, small_mesh, np.array([center])))
            assert torch.allclose(batched[s], single.tokens[0], atol=1e-5)

    def test_other_star_is_invisible(self, small_mesh):
        """Changing every token of one star leaves the other bit-identical."""
        ring = RingTransformer(8, 2)
        z_last, z_first = torch.randn(60, 8), torch.randn(60, 8)
        batch = build_stars(z_last, z_first, small_mesh, sample_centers(small_mesh, 2, seed=5))
        perturbed = batch.sequences.clone()
        perturbed[1] = perturbed[1] * 3.0 + torch.randn_like(perturbed[1])
        changed = StarBatch(
            sequences=perturbed,
            valid=batch.valid,
            center_ids=batch.center_ids,
            neighbor_ids=batch.neighbor_ids,
        )
        before, after = ring(batch).tokens, ring(changed).tokens
        assert torch.equal(before[0], after[0])
        assert not torch.equal(before[1], after[1])

    def test_padding_stays_zero(self, path_mesh):
        """Padded positions leave the ring as zero vectors."""
        ring = RingTransformer(4, 2)
        z = torch.randn(3, 4)
        out = ring(build_stars(z, z, path_mesh, np.array([0]), cap=3)).tokens
        assert torch.all(out[0, 2:] == 0.0)
        assert torch.isfinite(out).all()

    def test_gradients(self, path_mesh):
        """The ring passes the float64 finite-difference check."""
        ring = RingTransformer(4, 2).double()
        z = torch.randn(3, 4, dtype=torch.float64)
        batch = build_stars(z, z, path_mesh, np.array([0, 1]), cap=2)
        readout = torch.randn(2, 3, 4, dtype=torch.float64)

        def loss():
            return (ring(batch).tokens * readout).sum()

        assert parameter_gradient_check(loss, ring) < 1e-4


class TestLoss:
    """Multi-node prediction objective."""

    def test_hand_value(self, path_mesh):
        """Per-center mean over valid neighbors, then mean over centers."""
        z_first = torch.zeros(3, 2)
        targets = torch.tensor([[1.0, 0.0], [0.0, 2.0], [3.0, 0.0]])
        batch = build_stars(z_first, z_first, path_mesh, np.array([0, 1]), cap=3)
        loss = mnp_loss(MnpOutput(tokens=batch.sequences), lambda t: t, targets, batch)
        assert loss.item() == pytest.approx((4.0 + (1.0 + 9.0) / 2) / 2)

    def test_padding_neutral(self, small_mesh):
        """A cap above the largest degree only adds padding and keeps the loss."""
        ring = RingTransformer(8, 2).double()
        decoder = torch.nn.Linear(8, 3).double()
        z_last = torch.randn(60, 8, dtype=torch.float64)
        z_first = torch.randn(60, 8, dtype=torch.float64)
        targets = torch.randn(60, 3, dtype=torch.float64)
        centers = sample_centers(small_mesh, 6, seed=1)
        max_degree = int((neighbor_table(small_mesh, 59) >= 0).sum(axis=1).max())

        def loss(cap):
            batch = build_stars(z_last, z_first, small_mesh, centers, cap=cap)
            return mnp_loss(ring(batch), decoder, targets, batch).item()

        exact = loss(max_degree)
        assert loss(max_degree + 5) == pytest.approx(exact, rel=1e-7)

    def test_empty_batch(self, path_mesh):
        """No centers gives a zero loss."""
        z = torch.zeros(3, 2)
        batch = build_stars(z, z, path_mesh, np.array([], dtype=np.int64), cap=2)
        loss = mnp_loss(MnpOutput(tokens=batch.sequences), lambda t: t, z, batch)
        assert loss.item() == 0.0

    def test_alpha_zero(self):
        """alpha=0 returns the main loss exactly."""
        main = torch.tensor(0.75)
        assert combine_losses(main, torch.tensor(123.0), alpha=0.0).item() == 0.75

    def test_weighted_sum(self):
        """L = L_main + alpha * L_mnp."""
        total = combine_losses(torch.tensor(1.0), torch.tensor(2.0), alpha=0.2)
        assert total.item() == pytest.approx(1.4)
