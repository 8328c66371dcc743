import math

import numpy as np
import pytest

from sliceforge.errors import ValidationError
from sliceforge.mesh import (
    Mesh,
    MeshSet,
    REFERENCE_EXTENT_MM,
    golden_palette,
    load_obj,
    save_obj,
    voxelize_meshes,
)
from sliceforge.synth import icosphere, nested_spheres, unit_cube


def grid_centers_world(meshes: MeshSet, resolution):
    """Voxel centers in the original (pre-normalization) world frame,
    mirroring the padded-bounds construction."""
    lo, hi = meshes.bounds()
    extent = hi - lo
    extent[extent == 0] = 1.0
    lo = lo - 0.08 * extent
    hi = hi + 0.08 * extent
    spacing = (hi - lo) / np.asarray(resolution, float)
    return tuple(lo[a] + (np.arange(resolution[a]) + 0.5) * spacing[a] for a in range(3))


class TestObjIO:
    def test_round_trip(self, tmp_path):
        mesh = unit_cube()
        path = tmp_path / "cube.obj"
        save_obj(mesh, path)
        loaded = load_obj(path)
        np.testing.assert_allclose(loaded.vertices, mesh.vertices)
        np.testing.assert_array_equal(loaded.triangles, mesh.triangles)

    def test_face_with_texture_normals(self, tmp_path):
        path = tmp_path / "m.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2/2/2 3/3/3\n")
        mesh = load_obj(path)
        assert mesh.triangles.tolist() == [[0, 1, 2]]

    def test_quad_rejected(self, tmp_path):
        path = tmp_path / "m.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
        with pytest.raises(ValidationError, match="triangulated"):
            load_obj(path)


class TestVoxelize:
    def test_unit_cube_interior_labeled(self):
        meshes = MeshSet((unit_cube(),))
        volume, tf = voxelize_meshes(meshes, (8, 8, 8))
        centers = grid_centers_world(meshes, (8, 8, 8))
        inside = np.zeros((8, 8, 8), bool)
        for i, x in enumerate(centers[0]):
            for j, y in enumerate(centers[1]):
                for k, z in enumerate(centers[2]):
                    inside[i, j, k] = 0 < x < 1 and 0 < y < 1 and 0 < z < 1
        np.testing.assert_array_equal(volume.scalars > 0, inside)
        # padding guarantees an exterior shell
        assert volume.scalars[0, :, :].max() == 0
        assert volume.scalars[-1, :, :].max() == 0
        assert len(tf.bins) == 1 and tf.bins[0].opacity == 1.0

    def test_two_nested_spheres_analytic_oracle(self):
        meshes = MeshSet(
            (
                icosphere(radius=0.5, subdivisions=3, name="outer"),
                icosphere(radius=0.25, subdivisions=3, name="inner"),
            )
        )
        res = (48, 48, 48)
        volume, tf = voxelize_meshes(meshes, res)
        centers = grid_centers_world(meshes, res)
        gx, gy, gz = np.meshgrid(*centers, indexing="ij")
        r = np.sqrt(gx**2 + gy**2 + gz**2)
        # an icosphere is inscribed in the analytic sphere: exempt a band of
        # its max flatness error (about 1% of r at 3 subdivisions) plus half
        # a voxel of sampling slack
        slack = 0.01 * 0.5 + float(np.max((centers[0][1] - centers[0][0],)))
        expect_inner = r < 0.25 - slack
        expect_outer_shell = (r < 0.5 - slack) & (r > 0.25 + slack)
        expect_outside = r > 0.5 + slack
        assert (volume.scalars[expect_inner] == 2).all()
        assert (volume.scalars[expect_outer_shell] == 1).all()
        assert (volume.scalars[expect_outside] == 0).all()
        # inner structure is more opaque
        assert tf.bins[1].opacity > tf.bins[0].opacity

    def test_four_nested_spheres_bins(self):
        meshes = nested_spheres(subdivisions=2)
        _volume, tf = voxelize_meshes(meshes, (32, 32, 32))
        assert len(tf.bins) == 4
        opacities = [b.opacity for b in tf.bins]
        # innermost mesh (index 3, smallest radius) has the maximal opacity
        assert opacities[3] == max(opacities) == 1.0
        assert opacities == sorted(opacities)
        assert math.isclose(opacities[0], 0.35)

    def test_nested_innermost_wins(self):
        meshes = MeshSet(
            (
                icosphere(radius=0.5, subdivisions=2, name="outer"),
                icosphere(radius=0.25, subdivisions=2, name="inner"),
            )
        )
        volume, _tf = voxelize_meshes(meshes, (16, 16, 16))
        center_voxel = volume.scalars[8, 8, 8]
        assert center_voxel == 2.0

    def test_disjoint_meshes_single_label_per_voxel(self):
        meshes = MeshSet(
            (
                unit_cube(name="a", center=(0.0, 0.0, 0.0)),
                unit_cube(name="b", center=(3.0, 0.0, 0.0)),
            )
        )
        volume, _tf = voxelize_meshes(meshes, (32, 16, 16))
        assert set(np.unique(volume.scalars)) <= {0.0, 1.0, 2.0}

    def test_normalized_extent(self):
        meshes = MeshSet((unit_cube(),))
        volume, _tf = voxelize_meshes(meshes, (8, 8, 8))
        sizes = [volume.dims[a] * volume.spacing[a] for a in range(3)]
        assert math.isclose(max(sizes), REFERENCE_EXTENT_MM)

    def test_degenerate_triangle_warned(self):
        cube = unit_cube()
        vertices = np.vstack([cube.vertices, cube.vertices[0]])
        triangles = np.vstack([cube.triangles, [[0, 0, 8]]])
        bad = Mesh(name="bad", vertices=vertices, triangles=triangles)
        with pytest.warns(UserWarning, match="degenerate"):
            voxelize_meshes(MeshSet((bad,)), (8, 8, 8))

    def test_resolution_floor(self):
        with pytest.raises(ValidationError, match="resolution"):
            voxelize_meshes(MeshSet((unit_cube(),)), (4, 8, 8))

    def test_empty_meshset_rejected(self):
        with pytest.raises(ValidationError, match="empty"):
            MeshSet(())


class TestPalette:
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 6, 8, 13, 14, 22, 32])
    def test_hue_separation_invariant(self, n):
        import colorsys

        colors = golden_palette(n)
        hues = [colorsys.rgb_to_hsv(*c)[0] for c in colors]
        assert len(set(colors)) == n
        if n == 1:
            return
        for i in range(n):
            for j in range(i + 1, n):
                d = abs(hues[i] - hues[j])
                d = min(d, 1.0 - d)
                assert d >= 1.0 / (2 * n) - 1e-9

    def test_small_n_matches_golden_formula(self):
        import colorsys

        hues = [colorsys.rgb_to_hsv(*c)[0] for c in golden_palette(4)]
        for i, h in enumerate(hues):
            assert math.isclose(h, (i * 0.618) % 1.0, abs_tol=1e-9)
