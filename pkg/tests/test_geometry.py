import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dircollapse import (
    DegeneratePairError,
    cdnv_averages,
    class_stats,
    directional_variance,
    pair_geometry,
    variance_decomposition,
)
from dircollapse.geometry import _top_k_eigenvalues

from conftest import make_dataset


def rotate(ds, seed=11):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(ds.d, ds.d)))
    out = make_dataset(ds.embeddings @ q.T, ds.labelings[0].labels)
    return out


class TestClassStats:
    def test_two_symmetric_points(self):
        ds = make_dataset([[0.0, 0.0], [2.0, 0.0]], [0, 0])
        s = class_stats(ds, "class", 0)
        np.testing.assert_array_equal(s.mu, [1.0, 0.0])
        assert s.v == 1.0 and s.m4 == 1.0

    def test_identical_samples(self):
        ds = make_dataset([[3.0, 1.0]] * 5, [0] * 5)
        s = class_stats(ds, "class", 0)
        assert s.v == 0.0 and s.m4 == 0.0

    def test_gaussian_moments_oracle(self):
        # standard 4-dim Gaussian: v = d = 4, m4 = d^2 + 2d = 24
        rng = np.random.default_rng(0)
        z = rng.standard_normal((10**6, 4))
        ds = make_dataset(z, np.zeros(len(z), dtype=int))
        s = class_stats(ds, "class", 0)
        assert s.v == pytest.approx(4.0, rel=0.02)
        assert s.m4 == pytest.approx(24.0, rel=0.02)

    def test_jensen(self, random_dataset):
        for c in range(3):
            s = class_stats(random_dataset, "class", c)
            assert s.m4 >= s.v**2


class TestPairGeometry:
    def _unit_var_pair(self, cov_diag=(1.0, 1.0)):
        rng = np.random.default_rng(3)
        zi = rng.standard_normal((4000, 2)) * np.sqrt(cov_diag)
        zi -= zi.mean(axis=0)  # exact empirical mean at origin
        zj = np.tile([4.0, 0.0], (50, 1))
        emb = np.vstack([zi, zj])
        labels = np.array([0] * len(zi) + [1] * len(zj))
        return make_dataset(emb, labels)

    def test_hand_evaluated_definition(self):
        ds = self._unit_var_pair()
        pg = pair_geometry(ds, "class", 0, 1)
        assert pg.d == pytest.approx(4.0)
        np.testing.assert_allclose(pg.u, [1.0, 0.0], atol=1e-12)
        # empirical variance along e1 of the sample, over d^2
        zi = ds.class_rows("class", 0)
        expect = (zi[:, 0] ** 2).mean() / 16.0
        assert pg.dir_cdnv == pytest.approx(expect, rel=1e-12)

    def test_anisotropy_leaves_dir_cdnv(self):
        # variance orthogonal to the axis inflates V but not dirV
        iso = pair_geometry(self._unit_var_pair((1.0, 1.0)), "class", 0, 1)
        aniso = pair_geometry(self._unit_var_pair((1.0, 100.0)), "class", 0, 1)
        assert aniso.dir_cdnv == pytest.approx(iso.dir_cdnv, rel=1e-9)
        assert aniso.cdnv > 5 * iso.cdnv

    def test_scale_equivariance(self, random_dataset):
        pg = pair_geometry(random_dataset, "class", 0, 1)
        scaled = make_dataset(3.0 * random_dataset.embeddings, random_dataset.labelings[0].labels)
        pg3 = pair_geometry(scaled, "class", 0, 1)
        assert pg3.d == pytest.approx(3.0 * pg.d, rel=1e-12)
        assert pg3.cdnv == pytest.approx(pg.cdnv, rel=1e-12)
        assert pg3.dir_cdnv == pytest.approx(pg.dir_cdnv, rel=1e-12)
        assert pg3.theta == pytest.approx(pg.theta, rel=1e-12)

    def test_rotation_invariance(self, random_dataset):
        pg = pair_geometry(random_dataset, "class", 0, 1)
        pgr = pair_geometry(rotate(random_dataset), "class", 0, 1)
        for attr in ("d", "cdnv", "dir_cdnv", "theta", "v_i", "v_j"):
            assert getattr(pgr, attr) == pytest.approx(getattr(pg, attr), rel=1e-9)

    def test_reverse_pair(self, random_dataset):
        pg = pair_geometry(random_dataset, "class", 0, 1)
        rev = pair_geometry(random_dataset, "class", 1, 0)
        assert rev.d == pg.d and rev.cdnv == pg.cdnv and rev.theta == pg.theta
        np.testing.assert_allclose(rev.u, -pg.u, atol=1e-15)

    def test_ordering_dir_below_cdnv(self, random_dataset):
        for i in range(3):
            for j in range(3):
                if i != j:
                    pg = pair_geometry(random_dataset, "class", i, j)
                    assert 0.0 <= pg.dir_cdnv <= pg.cdnv
        assert abs(np.linalg.norm(pg.u) - 1.0) < 1e-12

    def test_degenerate_pair(self):
        ds = make_dataset([[0.0, 0], [1.0, 0], [0.5, 1], [0.5, -1]], [0, 0, 1, 1])
        with pytest.raises(DegeneratePairError):
            pair_geometry(ds, "class", 0, 1)


class TestDirectionalVariance:
    def test_axis_projection(self):
        ds = make_dataset([[-1.0, 5.0], [1.0, -5.0]], [0, 0])
        assert directional_variance(ds, "class", 0, np.array([1.0, 0.0])) == 1.0
        assert directional_variance(ds, "class", 0, np.array([0.0, 1.0])) == 25.0

    def test_non_unit_axis_rejected(self):
        ds = make_dataset([[-1.0, 5.0], [1.0, -5.0]], [0, 0])
        with pytest.raises(ValueError, match="unit-norm"):
            directional_variance(ds, "class", 0, np.array([1.0, 1.0]))

    def test_explicit_covariance_oracle(self, random_dataset):
        rng = np.random.default_rng(5)
        axis = rng.normal(size=8)
        axis /= np.linalg.norm(axis)
        z = random_dataset.class_rows("class", 1)
        centered = z - z.mean(axis=0)
        sigma = centered.T @ centered / len(z)
        expect = float(axis @ sigma @ axis)
        got = directional_variance(random_dataset, "class", 1, axis)
        assert got == pytest.approx(expect, rel=1e-10)


class TestDecomposition:
    def test_axis_aligned_diagonal(self):
        rng = np.random.default_rng(9)
        zi = rng.standard_normal((20000, 2)) * [2.0, 3.0]
        zi -= zi.mean(axis=0)
        zj = np.tile([5.0, 0.0], (10, 1))
        ds = make_dataset(np.vstack([zi, zj]), [0] * len(zi) + [1] * len(zj))
        rep = variance_decomposition(ds, "class", 0, 1, [1])
        # pooled covariance is dominated by class 0; axis is e1
        zi0 = ds.class_rows("class", 0)
        frac = len(zi) / (len(zi) + len(zj))
        assert rep.axis_variance == pytest.approx(frac * (zi0[:, 0] ** 2).mean(), rel=1e-9)
        assert rep.ortho_cumulative[1] == pytest.approx(rep.ortho_total, rel=1e-9)

    def test_trace_conservation(self, random_dataset):
        rep = variance_decomposition(random_dataset, "class", 0, 2, [1, 3, 7])
        z0 = random_dataset.class_rows("class", 0)
        z2 = random_dataset.class_rows("class", 2)
        pooled = np.vstack([z0 - z0.mean(axis=0), z2 - z2.mean(axis=0)])
        trace = (pooled**2).sum() / len(pooled)
        assert rep.axis_variance + rep.ortho_total == pytest.approx(trace, rel=1e-9)
        ks = sorted(rep.ortho_cumulative)
        vals = [rep.ortho_cumulative[k] for k in ks]
        assert vals == sorted(vals)
        assert vals[-1] <= rep.ortho_total + 1e-9

    def test_k_too_large(self, random_dataset):
        with pytest.raises(ValueError, match="exceeds"):
            variance_decomposition(random_dataset, "class", 0, 1, [8])

    def test_power_iteration_matches_eigh(self):
        rng = np.random.default_rng(1)
        a = rng.normal(size=(40, 40))
        mat = a @ a.T
        top = _top_k_eigenvalues(mat, 5)
        expect = np.linalg.eigvalsh(mat)[::-1][:5]
        np.testing.assert_allclose(top, expect, rtol=1e-4)


class TestAverages:
    def test_symmetric_two_class(self):
        rng = np.random.default_rng(2)
        z0 = rng.standard_normal((5000, 3))
        z0 -= z0.mean(axis=0)
        z1 = z0 + [4.0, 0, 0]
        ds = make_dataset(np.vstack([z0, z1]), [0] * 5000 + [1] * 5000)
        avg = cdnv_averages(ds, "class")
        pg = pair_geometry(ds, "class", 0, 1)
        assert avg.avg_dir == pytest.approx(pg.dir_cdnv, rel=1e-12)
        assert avg.avg_cdnv == pytest.approx(pg.cdnv, rel=1e-12)

    def test_brute_force_ordered_pairs(self, random_dataset):
        avg = cdnv_averages(random_dataset, "class")
        dirs, cdnvs, sqrts = [], [], []
        for i in range(3):
            for j in range(3):
                if i != j:
                    pg = pair_geometry(random_dataset, "class", i, j)
                    dirs.append(pg.dir_cdnv)
                    cdnvs.append(pg.cdnv)
                    sqrts.append(np.sqrt(pg.cdnv))
        assert avg.avg_dir == pytest.approx(np.mean(dirs), rel=1e-12)
        assert avg.avg_cdnv == pytest.approx(np.mean(cdnvs), rel=1e-12)
        assert avg.avg_sqrt_cdnv == pytest.approx(np.mean(sqrts), rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), alpha=st.floats(0.01, 100.0))
def test_scale_invariance_property(seed, alpha):
    rng = np.random.default_rng(seed)
    labels = np.array([0] * 10 + [1] * 10)
    emb = rng.normal(size=(20, 4)) + np.array([4.0, 0, 0, 0]) * labels[:, None]
    ds = make_dataset(emb, labels)
    scaled = make_dataset(alpha * emb, labels)
    try:
        pg = pair_geometry(ds, "class", 0, 1)
    except DegeneratePairError:
        return
    pga = pair_geometry(scaled, "class", 0, 1)
    assert pga.cdnv == pytest.approx(pg.cdnv, rel=1e-10)
    assert pga.dir_cdnv == pytest.approx(pg.dir_cdnv, rel=1e-10)
    assert pga.theta == pytest.approx(pg.theta, rel=1e-10)
