import json

import numpy as np
import pytest

from cubedim import (DegenerateBallError, InvalidArgumentError, MetricDescriptor,
                     MetricSpace, ScaleExhaustedError, StaleCubesError)
from cubedim.cubes import (build_adjacent_family, build_system, circumscribed_cube,
                           default_max_level, load_family, save_family, verify_system)
from cubedim.nets import NetParams


class TestBuildSystem:
    def test_single_point_space(self):
        sp = MetricSpace(MetricDescriptor("euclidean"), coords=[[0.0]])
        system = build_system(sp, NetParams(), seed=0, max_level=3)
        for k in range(4):
            cubes = system.cubes_at(k)
            assert len(cubes) == 1 and list(cubes[0].members) == [0]

    def test_ultrametric_levels_are_cylinders(self, ultra6_system):
        system = ultra6_system
        strings = system.space.strings
        for k in range(system.max_level + 1):
            cubes = system.cubes_at(k)
            assert len(cubes) == 2 ** k
            for cube in cubes:
                prefixes = {strings[m][:k] for m in cube.members}
                assert len(prefixes) == 1

    def test_grid_level1_cubes_contiguous(self, grid257, params):
        system = build_system(grid257, params, seed=0)
        for cube in system.cubes_at(1):
            members = np.sort(cube.members)
            assert np.array_equal(members, np.arange(members[0], members[-1] + 1))

    def test_center_belongs_to_own_cube(self, ultra6_system):
        for k in range(ultra6_system.max_level + 1):
            for cube in ultra6_system.cubes_at(k):
                assert cube.center in cube.members

    def test_default_max_level_tracks_resolution(self, grid257, params):
        # smallest gap 1/256 resolves levels with delta^L >= 1/256 (delta = 1/16)
        assert default_max_level(grid257.normalized(), params.delta) == 2

    def test_deep_max_level_warns(self, grid257, params):
        system = build_system(grid257, params, seed=0, max_level=5)
        assert any("resolution" in w for w in system.report.warnings)


class TestVerifySystem:
    def test_all_properties_pass(self, ultra6_system, grid257, params):
        for system in (ultra6_system, build_system(grid257, params, seed=1)):
            checks = verify_system(system)
            for name, chk in checks.items():
                assert not chk.applicable or chk.ok, (name, chk.witness)

    def test_tampered_assignment_fails_inner_ball(self, ultra6, params):
        system = build_system(ultra6, params, seed=0)
        k = system.max_level
        # move one deepest-level point into a sibling cube
        labels = system.labels[k].copy()
        victim = int(system.levels[k].centers[0])
        labels[victim] = (labels[victim] + 1) % system.levels[k].centers.size
        system.labels[k] = labels
        system._cubes = [None] * (system.max_level + 1)
        checks = verify_system(system)
        assert not checks["iii_inner"].ok
        assert checks["iii_inner"].witness is not None

    def test_tampered_parent_fails_ball_monotonicity(self, ultra6, params):
        system = build_system(ultra6, params, seed=0)
        k = 3
        # reparent one level-3 cube to a center on the far side of the space
        pidx = system.parent_idx[k].copy()
        far = 0 if pidx[0] != 0 else 1
        victim = int(np.argmax(pidx != far))
        pidx[victim] = far
        system.parent_idx[k] = pidx
        for lvl in range(k - 1, -1, -1):
            system.labels[lvl] = system.parent_idx[lvl + 1][system.labels[lvl + 1]]
        system._cubes = [None] * (system.max_level + 1)
        checks = verify_system(system)
        assert not checks["iv_ball_monotone"].ok

    def test_depth_limited_nesting_not_applicable(self):
        sp = MetricSpace(MetricDescriptor("euclidean"), coords=[[0.0], [1.0]])
        system = build_system(sp, NetParams(), seed=0, max_level=0)
        checks = verify_system(system)
        assert not checks["i_nesting"].applicable


class TestCubeQueries:
    def test_cube_of_root(self, ultra6_system):
        root = ultra6_system.cube_of(5, 0)
        assert root.k == 0 and root.members.size == ultra6_system.space.n

    def test_cube_of_prefix(self, ultra6_system):
        x = ultra6_system.space.strings.index("011000")
        cube = ultra6_system.cube_of(x, 2)
        assert {ultra6_system.space.strings[m][:2] for m in cube.members} == {"01"}

    def test_parent_consistency(self, ultra6_system):
        for x in (0, 17, 40):
            for k in range(ultra6_system.max_level):
                child = ultra6_system.cube_of(x, k + 1)
                assert child.parent is ultra6_system.cube_of(x, k)

    def test_level_out_of_range(self, ultra6_system):
        with pytest.raises(InvalidArgumentError):
            ultra6_system.cube_of(0, ultra6_system.max_level + 1)

    def test_descendants_identity(self, ultra6_system):
        root = ultra6_system.cube_of(0, 0)
        assert ultra6_system.descendants_at(root, 0) == [root]

    def test_descendants_cylinder_count(self, ultra6_system):
        root = ultra6_system.cube_of(0, 0)
        assert len(ultra6_system.descendants_at(root, 3)) == 8

    def test_descendants_partition_members(self, ultra6_system):
        cube = ultra6_system.cube_of(0, 1)
        desc = ultra6_system.descendants_at(cube, 2)
        merged = np.sort(np.concatenate([d.members for d in desc]))
        assert np.array_equal(merged, np.sort(cube.members))
        sizes = sum(d.members.size for d in desc)
        assert sizes == cube.members.size

    def test_descendants_depth_overflow(self, ultra6_system):
        cube = ultra6_system.cube_of(0, 2)
        with pytest.raises(ScaleExhaustedError) as err:
            ultra6_system.descendants_at(cube, 20)
        assert err.value.deepest_available == ultra6_system.max_level - 2


class TestAdjacentFamily:
    def test_single_point_family(self):
        sp = MetricSpace(MetricDescriptor("euclidean"), coords=[[0.0]])
        fam = build_adjacent_family(sp, NetParams(), K_max=4, query_budget=10,
                                    target_ratio=16.0, seed=0, max_level=1)
        assert fam.K == 1 and fam.C_delta_hat == 1.0

    def test_ultrametric_single_system_suffices(self, ultra6_family):
        assert ultra6_family.K == 1
        assert ultra6_family.C_delta_hat <= 16.0
        assert not ultra6_family.best_effort

    def test_c_tilde_formula(self, ultra6_family):
        p = ultra6_family.params
        expect = 12.0 * p.C0 * ultra6_family.C_delta_hat / p.c0
        assert ultra6_family.C_tilde == pytest.approx(expect)

    def test_determinism(self, ultra6, params):
        a = build_adjacent_family(ultra6, params, K_max=3, query_budget=50,
                                  target_ratio=8.0, seed=3)
        b = build_adjacent_family(ultra6, params, K_max=3, query_budget=50,
                                  target_ratio=8.0, seed=3)
        assert a.K == b.K and a.C_delta_hat == b.C_delta_hat
        for sa, sb in zip(a.systems, b.systems):
            for la, lb in zip(sa.levels, sb.levels):
                assert np.array_equal(la.centers, lb.centers)

    def test_grid257_certificate_bounded(self, grid257, params):
        fam = build_adjacent_family(grid257, params, K_max=8, query_budget=300,
                                    target_ratio=64.0, seed=5)
        assert fam.C_delta_hat <= 64.0
        good = [q for q in fam.query_log if not q["degenerate"]]
        assert good and all(q["cert"] is not None for q in good)


class TestCircumscribed:
    def test_whole_space_ball_is_root(self, ultra6_family):
        cc = circumscribed_cube(ultra6_family, 0, 0.9999999999)
        assert cc.level == 0
        assert cc.cube.members.size == ultra6_family.space.n

    def test_cylinder_balls(self, ultra6_family):
        space = ultra6_family.space
        x = 11
        for j in (1, 2, 3):
            cc = circumscribed_cube(ultra6_family, x, 1.5 * 16.0 ** -j)
            assert cc.level == j
            prefix = space.strings[x][:j]
            assert {space.strings[m][:j] for m in cc.cube.members} == {prefix}

    def test_ball_contained_in_cube(self, cantor10_family):
        space = cantor10_family.space
        rng = np.random.default_rng(8)
        for _ in range(50):
            x = int(rng.integers(space.n))
            R = float(16.0 ** -rng.integers(1, 4) * rng.uniform(0.5, 2.0))
            try:
                cc = circumscribed_cube(cantor10_family, x, R)
            except DegenerateBallError:
                continue
            members = space.ball_members(x, R)
            assert np.setdiff1d(members, cc.cube.members).size == 0

    def test_degenerate_ball_rejected(self, cantor10_family):
        gap = cantor10_family.space.min_positive_distance()
        with pytest.raises(DegenerateBallError):
            circumscribed_cube(cantor10_family, 0, gap * 0.5)

    def test_level_independent_of_x_within_one(self, cantor10_family):
        space = cantor10_family.space
        rng = np.random.default_rng(9)
        for j in (1, 2, 3):
            R = float(space.descriptor.scale) * 16.0 ** -j
            levels = set()
            for x in rng.integers(space.n, size=40):
                try:
                    levels.add(circumscribed_cube(cantor10_family, int(x), R).level)
                except DegenerateBallError:
                    continue
            if levels:
                assert max(levels) - min(levels) <= 1, (j, levels)


class TestSerialization:
    def test_round_trip(self, ultra6, ultra6_family, tmp_path):
        path = tmp_path / "cubes.json"
        save_family(ultra6_family, path, points_hash="h1")
        back = load_family(path, ultra6, points_hash="h1")
        assert back.K == ultra6_family.K
        assert back.C_delta_hat == ultra6_family.C_delta_hat
        for sa, sb in zip(back.systems, ultra6_family.systems):
            for k in range(sa.max_level + 1):
                assert np.array_equal(sa.labels[k], sb.labels[k])

    def test_hash_mismatch_rejected(self, ultra6, ultra6_family, tmp_path):
        path = tmp_path / "cubes.json"
        save_family(ultra6_family, path, points_hash="h1")
        with pytest.raises(StaleCubesError):
            load_family(path, ultra6, points_hash="other")

    def test_corrupted_file_refused(self, ultra6, ultra6_family, tmp_path):
        path = tmp_path / "cubes.json"
        save_family(ultra6_family, path, points_hash="h1")
        doc = json.loads(path.read_text())
        # swap two deepest-level centers between sibling cubes
        levels = doc["systems"][0]["levels"]
        deepest = levels[-1]["centers"]
        deepest[0], deepest[1] = deepest[1], deepest[0]
        path.write_text(json.dumps(doc))
        with pytest.raises(StaleCubesError):
            load_family(path, ultra6, points_hash="h1")
