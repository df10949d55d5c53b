import json
import math

import pytest

from porodim.dyadic import CubeAddress, root
from porodim.measure import (
    Bernoulli,
    CantorMiddleHalf,
    CascadeDirichlet,
    CascadeFiniteMixture,
    GeneratorSpec,
    Homothety,
    Uniform,
    UnrealizedNodeError,
    apply_homothety,
    build_tree_measure,
    spec_from_json,
    spec_to_json,
)

from conftest import make_measure


class TestBuildAndMass:
    def test_uniform_masses(self, uniform2):
        for j in range(3):
            assert uniform2.offspring_weights(root(2).descendant((j, j), 2)) == (0.25,) * 4
        assert uniform2.mass(CubeAddress(3, (5, 2))) == pytest.approx(4.0**-3, abs=1e-12)

    def test_bernoulli_direct_read(self, bern_quarter):
        assert bern_quarter.mass(CubeAddress(1, (1,))) == 0.75
        assert bern_quarter.mass(CubeAddress(2, (3,))) == pytest.approx(9 / 16, abs=1e-12)

    def test_root_mass_is_one(self, bern_quarter):
        assert bern_quarter.mass(root(1)) == 1.0

    def test_rebuild_determinism(self):
        model = CascadeFiniteMixture(((0.5, 0.5), (0.25, 0.75)), (0.5, 0.5))
        a = make_measure(1, model, depth=12, seed=7)
        b = make_measure(1, model, depth=12, seed=7)
        nodes = [CubeAddress(le, (c,)) for le in range(6) for c in range(1 << le)]
        assert [a.offspring_weights(q) for q in nodes] == [
            b.offspring_weights(q) for q in nodes
        ]

    def test_distinct_seeds_differ(self):
        model = CascadeDirichlet((1.0, 1.0))
        a = make_measure(1, model, seed=1)
        b = make_measure(1, model, seed=2)
        assert a.offspring_weights(root(1)) != b.offspring_weights(root(1))

    def test_node_draws_are_independent_of_visit_order(self):
        model = CascadeDirichlet((0.5, 0.5, 0.5, 0.5))
        mu = make_measure(2, model, seed=11)
        q = CubeAddress(3, (1, 6))
        first = mu.offspring_weights(q)
        # probing a bunch of other nodes must not disturb q's draw
        for le in range(3):
            for c in range(1 << le):
                mu.offspring_weights(CubeAddress(le, (c, c)))
        assert mu.offspring_weights(q) == first

    def test_conservation(self):
        mu = make_measure(2, CascadeDirichlet((0.7, 0.7, 0.7, 0.7)), seed=3)
        for q in [root(2), CubeAddress(1, (0, 1)), CubeAddress(2, (3, 2))]:
            part, w = mu.offspring(q)
            m = mu.mass(q)
            children_total = math.fsum(mu.mass(c) for c in part.children)
            assert abs(children_total - m) < 1e-10

    def test_depth_guard(self):
        with pytest.raises(ValueError, match="configured maximum"):
            build_tree_measure(GeneratorSpec(1, Uniform()), "uniform", 100)
        mu = build_tree_measure(GeneratorSpec(1, Uniform()), "uniform", 100, max_level=100)
        deep = CubeAddress(100, (0,))
        with pytest.raises(UnrealizedNodeError):
            mu.offspring(deep)

    def test_invalid_specs(self):
        with pytest.raises(ValueError):
            Bernoulli((0.5, 0.6))
        with pytest.raises(ValueError):
            GeneratorSpec(2, Bernoulli((0.5, 0.5)))
        with pytest.raises(ValueError):
            CascadeDirichlet((1.0, 0.0))
        with pytest.raises(ValueError):
            GeneratorSpec(2, CantorMiddleHalf())

    def test_log_mass_deep(self):
        mu = make_measure(1, Bernoulli((0.25, 0.75)), depth=200)
        path = mu.sample_path(5, steps=100)
        q = path[-1]
        lw = mu.lineage_weights(q)
        assert mu.log_mass(q) == pytest.approx(math.fsum(math.log(w) for w in lw))

    def test_explicit_node_map(self):
        from porodim.dyadic import subdivide_uniform
        from porodim.measure import from_nodes

        r = root(1)
        part = subdivide_uniform(r, 5)
        mu = from_nodes(1, {r: (part, (0.25, 0.75))}, depth=1)
        assert mu.mass(CubeAddress(1, (1,))) == 0.75
        assert mu.dyadic_splits
        with pytest.raises(UnrealizedNodeError, match="not realized"):
            mu.offspring(CubeAddress(1, (1,)))


class TestSamplePath:
    def test_point_mass_path_is_deterministic(self, point_mass):
        path = point_mass.sample_path(123, steps=12)
        assert [q.coords[0] for q in path] == [0] * 13

    def test_uniform_digit_frequency(self):
        mu = build_tree_measure(
            GeneratorSpec(1, Uniform()), "uniform", 10_000, max_level=10_000
        )
        path = mu.sample_path(7, steps=10_000)
        digits = [b.coords[0] & 1 for b in path[1:]]
        assert abs(sum(digits) / len(digits) - 0.5) < 0.02

    def test_bernoulli_digit_frequency(self):
        mu = build_tree_measure(
            GeneratorSpec(1, Bernoulli((0.25, 0.75))), "uniform", 10_000, max_level=10_000
        )
        path = mu.sample_path(11, steps=10_000)
        digits = [b.coords[0] & 1 for b in path[1:]]
        assert abs(sum(digits) / len(digits) - 0.75) < 0.02

    def test_path_reproducible(self, bern_quarter):
        assert bern_quarter.sample_path(9, steps=25) == bern_quarter.sample_path(
            9, steps=25
        )

    def test_all_zero_vector_rejected(self):
        from porodim.dyadic import subdivide_uniform
        from porodim.measure import TreeMeasure

        def realizer(q):
            return subdivide_uniform(q, 10), (0.0, 0.0)

        broken = TreeMeasure(1, 5, realizer, max_level=5)
        with pytest.raises(ValueError, match="all-zero"):
            broken.sample_path(1, steps=2)


class TestJsonConfig:
    def test_roundtrip(self):
        spec = GeneratorSpec(
            2, CascadeFiniteMixture(((0.25,) * 4, (0.1, 0.2, 0.3, 0.4)), (0.5, 0.5)), 42
        )
        spec2, depth = spec_from_json(spec_to_json(spec, depth=17))
        assert spec2 == spec
        assert depth == 17

    def test_all_types_parse(self):
        for gen in (
            {"type": "uniform"},
            {"type": "bernoulli", "weights": [0.5, 0.5]},
            {"type": "dirichlet", "concentration": [1, 1]},
            {"type": "cantor_middle_half"},
            {"type": "mixture", "mixture": [{"weights": [0.5, 0.5], "prob": 1.0}]},
        ):
            spec, _ = spec_from_json(json.dumps({"d": 1, "seed": 3, "generator": gen}))
            assert spec.d == 1

    def test_malformed_config(self):
        with pytest.raises(ValueError, match="malformed"):
            spec_from_json('{"generator": {"type": "uniform"}}')
        with pytest.raises(ValueError, match="unknown generator type"):
            spec_from_json('{"d": 1, "generator": {"type": "nope"}}')


class TestHomothety:
    def test_uniform_quarter_scaling(self, uniform2):
        nu = apply_homothety(uniform2, Homothety(0.25, (0.0, 0.0)), 8)
        assert nu.mass(CubeAddress(2, (0, 0))) == 1.0
        # deeper structure uniform within the image
        assert nu.offspring_weights(CubeAddress(2, (0, 0))) == (0.25,) * 4
        assert nu.mass(CubeAddress(4, (1, 1))) == pytest.approx(1 / 16, abs=1e-12)

    def test_point_mass_pushforward(self):
        pt = make_measure(2, Bernoulli((1.0, 0.0, 0.0, 0.0)))
        nu = apply_homothety(pt, Homothety(0.25, (0.5, 0.5)), 10)
        assert nu.mass(CubeAddress(1, (1, 1))) == 1.0
        assert nu.mass(CubeAddress(6, (32, 32))) == 1.0

    def test_bernoulli_shift(self, bern_quarter):
        nu = apply_homothety(bern_quarter, Homothety(0.25, (0.25,)), 10)
        assert nu.mass(CubeAddress(2, (1,))) == 1.0
        assert nu.mass(CubeAddress(3, (2,))) == pytest.approx(0.25, abs=1e-12)

    def test_total_mass_preserved(self, cantor):
        nu = apply_homothety(cantor, Homothety(0.125, (0.375,)), 12)
        assert nu.mass(root(1)) == 1.0
        level3 = [CubeAddress(3, (c,)) for c in range(8)]
        assert math.fsum(nu.mass(q) for q in level3) == pytest.approx(1.0, abs=1e-12)

    def test_dyadic_cubes_map_to_dyadic_cubes(self, cantor):
        # side 2^-m -> side 2^-(m+2) for r = 1/4 and grid-aligned t
        nu = apply_homothety(cantor, Homothety(0.25, (0.5,)), 12)
        for m in range(4):
            for c in range(1 << m):
                src = CubeAddress(m, (c,))
                img = CubeAddress(m + 2, ((1 << (m + 1)) + c,))
                assert nu.mass(img) == pytest.approx(cantor.mass(src), abs=1e-12)

    def test_support_leaving_cube_rejected(self, uniform1):
        with pytest.raises(ValueError, match="unit cube"):
            apply_homothety(uniform1, Homothety(0.25, (0.875,)), 8)

    def test_ratio_validation(self):
        with pytest.raises(ValueError, match="power of two"):
            Homothety(0.3, (0.0,))
        with pytest.raises(ValueError, match="0, 1/2"):
            Homothety(0.5, (0.0,))

    def test_zero_mass_nodes_not_expanded(self, cantor):
        nu = apply_homothety(cantor, Homothety(0.25, (0.0,)), 10)
        gap = CubeAddress(4, (5,))  # inside the image's middle gap
        assert nu.mass(gap) == 0.0
        with pytest.raises(UnrealizedNodeError, match="zero-mass"):
            nu.offspring(gap)

    def test_agrees_with_exhaustive_enumeration(self):
        # independent oracle: the image of a level-L source cube under
        # x -> 2^-m x + t is the level-(L+m) dyadic cube shifted by t, so
        # pushforward masses are plain sums over an exhaustive enumeration
        mu = make_measure(1, CascadeDirichlet((0.7, 0.7)), depth=16, seed=13)
        h = Homothety(0.125, (0.3125,))  # m = 3, t = 5/16
        nu = apply_homothety(mu, h, 10)
        (tn,), t_grid = h.translation_grid()
        m = h.log2_ratio
        for n in (1, 2, 4, 6):
            for coord in range(1 << n):
                q = CubeAddress(n, (coord,))
                L = max(n, t_grid) - m
                total = math.fsum(
                    mu.mass(CubeAddress(L, (c,)))
                    for c in range(1 << L)
                    if (c + (tn << (L + m - t_grid))) >> (L + m - n) == coord
                )
                assert nu.mass(q) == pytest.approx(total, abs=1e-12)
