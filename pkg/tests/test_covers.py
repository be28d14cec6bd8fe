"""Covers and control: components, Lebesgue numbers, coset closures, pullbacks."""

from __future__ import annotations

from fractions import Fraction

import pytest

from wreathdim import (
    CyclicGroup,
    ExplicitMetricView,
    FreeGroup,
    GroupWindowView,
    LengthOracle,
    StructureError,
    VirtuallyZStructure,
    WreathContext,
    WreathElement,
    component_diameters,
    control_sample,
    coset_cover,
    cover_of,
    growth_linear_bound,
    kernel_control_bound,
    kernel_window,
    lebesgue_ok,
    pullback_cover,
    r_components,
    vz_closure_constant,
    weakly_dominates,
)


def line_view(n=10):
    return ExplicitMetricView(range(n), lambda a, b: abs(a - b))


# -- metric views -------------------------------------------------------------


def test_explicit_view_distances():
    view = line_view()
    assert view.dist(2, 7) == 5
    assert view.dist_lt(2, 7, 6)
    assert not view.dist_lt(2, 7, 5)


def test_explicit_view_rejects_negative_distance():
    with pytest.raises(ValueError, match="negative"):
        ExplicitMetricView([0, 1], lambda a, b: -1 if a != b else 0)


def test_explicit_view_rejects_asymmetry():
    def dist(a, b):
        if (a, b) == (0, 1):
            return 1
        if (a, b) == (1, 0):
            return 2
        return 0

    with pytest.raises(ValueError, match="asymmetric"):
        ExplicitMetricView([0, 1], dist)


def test_explicit_view_rejects_triangle_violation():
    def dist(a, b):
        if a == b:
            return 0
        return 10 if {a, b} == {0, 2} else 1

    with pytest.raises(ValueError, match="triangle"):
        ExplicitMetricView([0, 1, 2], dist)


def test_explicit_view_rejects_nonzero_self_distance():
    with pytest.raises(ValueError):
        ExplicitMetricView([0, 1], lambda a, b: 1)


def test_explicit_view_neighbors_within():
    view = line_view()
    # Strictly-below-r neighbors, center excluded.
    assert set(view.neighbors_within(5, set(view.points), 2)) == {4, 6}


def test_group_window_view_matches_word_metric(lamplighter, oracle_lamplighter):
    window = oracle_lamplighter.ball(4).elements
    view = GroupWindowView(lamplighter, window, oracle_lamplighter)
    for x in window[:6]:
        for y in window[:6]:
            assert view.dist(x, y) == oracle_lamplighter.distance(x, y)
            assert view.dist_lt(x, y, 3) == (oracle_lamplighter.distance(x, y) < 3)


def test_group_window_view_neighbors_by_translation(z, oracle_z):
    points = tuple(range(-5, 6))
    view = GroupWindowView(z, points, oracle_z)
    assert set(view.neighbors_within(0, set(points), 2)) == {-1, 1}
    assert set(view.neighbors_within(4, set(points), 3)) == {2, 3, 5}


# -- components ----------------------------------------------------------------


def test_r_components_split_on_gaps():
    view = line_view()
    assert r_components(view, (0, 1, 5, 6), 2) == ((0, 1), (5, 6))


def test_r_components_r1_is_singletons():
    view = line_view(4)
    assert r_components(view, None, 1) == ((0,), (1,), (2,), (3,))


def test_r_components_merge_at_larger_scale():
    view = line_view()
    assert r_components(view, (0, 1, 5, 6), 5) == ((0, 1, 5, 6),)


def test_r_components_deterministic_order():
    view = line_view()
    assert r_components(view, (6, 5, 1, 0), 2) == ((6, 5), (1, 0))


# -- covers and control -----------------------------------------------------------


def test_cover_of_reports_first_missing_point():
    cover = cover_of([[0, 1], [2]])
    assert cover.covers([0, 1, 2]) is None
    assert cover.covers([0, 3]) == 3
    with pytest.raises(ValueError):
        cover.require_covers([3])


def test_lebesgue_number_of_interval_cover():
    view = line_view()
    cover = cover_of([range(0, 6), range(4, 10)])
    assert lebesgue_ok(view, cover, 2).ok
    bad = lebesgue_ok(view, cover, 4)
    assert not bad.ok
    assert bad.witness == 3  # its open 4-ball {0..6} fits in neither part


def test_component_diameters_on_interval_cover():
    view = line_view()
    cover = cover_of([range(0, 6), range(4, 10)])
    meas = component_diameters(view, cover, 2)
    assert meas.per_part == (5, 5)
    assert meas.value == 5


def test_control_sample_combines_lebesgue_and_diameter():
    view = line_view()
    cover = cover_of([range(0, 6), range(4, 10)])
    points = control_sample(view, cover, [2, 4])
    assert [p.lebesgue for p in points] == [True, False]
    assert [p.control for p in points] == [5, 5]
    assert points[1].witness == 3


# -- kernel control ------------------------------------------------------------


def test_kernel_control_bound_scales_with_base_growth(lamplighter, c2, z2, f2):
    assert kernel_control_bound(lamplighter, 1) == 3
    assert kernel_control_bound(lamplighter, 2) == 15
    assert kernel_control_bound(WreathContext(c2, z2), 1) == 3
    assert kernel_control_bound(WreathContext(c2, f2), 2) == 25


def test_kernel_control_bound_needs_nontrivial_fiber(z):
    trivial = WreathContext(CyclicGroup(1), z)
    with pytest.raises(StructureError):
        kernel_control_bound(trivial, 2)


def test_kernel_components_within_bound(lamplighter, oracle_lamplighter):
    # Every r-component of a kernel window stays within (2r+1) * growth(r).
    window = kernel_window(lamplighter, 6)
    view = GroupWindowView(lamplighter, window, oracle_lamplighter)
    for r in (1, 2):
        bound = kernel_control_bound(lamplighter, r)
        for comp in r_components(view, window, r):
            for x in comp:
                for y in comp:
                    assert view.dist(x, y) <= bound


# -- coset closures -------------------------------------------------------------


def test_coset_cover_small_window(lamplighter, oracle_lamplighter):
    window = kernel_window(lamplighter, 4)
    cc = coset_cover(lamplighter, window, 2, oracle=oracle_lamplighter)
    assert len(cc.closure) == 2
    assert cc.max_length == 1
    assert len(cc.cosets) == 3


def test_coset_cover_partitions_window(lamplighter, oracle_lamplighter):
    window = kernel_window(lamplighter, 8)
    cc = coset_cover(lamplighter, window, 3, oracle=oracle_lamplighter)
    seen = [g for part in cc.cosets for g in part]
    assert sorted(seen, key=lamplighter.sort_key) == sorted(
        window, key=lamplighter.sort_key
    )
    assert len(seen) == len(set(seen))


def test_coset_cover_parts_lie_in_single_cosets(lamplighter, oracle_lamplighter):
    window = kernel_window(lamplighter, 8)
    cc = coset_cover(lamplighter, window, 3, oracle=oracle_lamplighter)
    closure = set(cc.closure)
    for part in cc.cosets:
        rep = part[0]
        for g in part[1:]:
            assert lamplighter.multiply(lamplighter.inverse(rep), g) in closure


def test_vz_closure_constant_values(z_structure, zxc2_structure, z):
    assert vz_closure_constant(z_structure) == 8
    assert vz_closure_constant(zxc2_structure) == 24
    distorted = VirtuallyZStructure(z, 1, (0,), Fraction(2))
    assert vz_closure_constant(distorted) == 14


def test_growth_linear_bound_values(z_structure, zxc2_structure):
    assert growth_linear_bound(z_structure, 2) == 7
    assert growth_linear_bound(zxc2_structure, 2) == 26


# -- pullbacks -----------------------------------------------------------------


def make_pullback(lamplighter, oracle_lamplighter, oracle_z, z):
    window = oracle_lamplighter.ball(6).elements
    oracle_lamplighter.ball(11)  # window pairs are at distance <= 10
    sub_points = tuple(range(-15, 16))
    sub_view = GroupWindowView(z, sub_points, oracle_z)
    parts = [{a for a in sub_points if ((a - 8 * j) % 16) <= 11} for j in (0, 1)]
    return window, sub_view, cover_of(parts)


def test_pullback_cover_controls_components(
    lamplighter, oracle_lamplighter, oracle_z, z
):
    window, sub_view, sub_cover = make_pullback(
        lamplighter, oracle_lamplighter, oracle_z, z
    )
    result = pullback_cover(
        lamplighter,
        window,
        z,
        project=lambda g: g.cursor,
        embed=lambda a: WreathElement((), a),
        sub_view=sub_view,
        sub_cover=sub_cover,
        r=2,
        kernel_bound=lambda rr: kernel_control_bound(
            lamplighter, rr, base_oracle=oracle_z
        ),
    )
    assert result.base_control == 11
    # measured interval control d = 11 plus the kernel bound at 2 + 2*11.
    assert result.predicted == 11 + kernel_control_bound(lamplighter, 24)
    assert result.predicted == 2314
    view = GroupWindowView(lamplighter, window, oracle_lamplighter)
    meas = component_diameters(view, result.cover, 2)
    assert meas.value == 10
    assert meas.value <= result.predicted


def test_pullback_rejects_non_retraction(lamplighter, oracle_lamplighter, oracle_z, z):
    window, sub_view, sub_cover = make_pullback(
        lamplighter, oracle_lamplighter, oracle_z, z
    )
    with pytest.raises(ValueError, match="retract"):
        pullback_cover(
            lamplighter,
            window,
            z,
            project=lambda g: 0,
            embed=lambda a: WreathElement((), a),
            sub_view=sub_view,
            sub_cover=sub_cover,
            r=2,
            kernel_bound=lambda rr: Fraction(1),
        )


def test_pullback_rejects_unmarked_embedding(
    lamplighter, oracle_lamplighter, oracle_z, z
):
    window, sub_view, sub_cover = make_pullback(
        lamplighter, oracle_lamplighter, oracle_z, z
    )
    with pytest.raises(ValueError, match="marked generator"):
        pullback_cover(
            lamplighter,
            window,
            z,
            project=lambda g: g.cursor,
            embed=lambda a: WreathElement((), 2 * a),
            sub_view=sub_view,
            sub_cover=sub_cover,
            r=2,
            kernel_bound=lambda rr: Fraction(1),
        )


def test_pullback_rejects_low_lebesgue_subcover(
    lamplighter, oracle_lamplighter, oracle_z, z
):
    window, sub_view, _ = make_pullback(lamplighter, oracle_lamplighter, oracle_z, z)
    singletons = cover_of([{a} for a in sub_view.points])
    with pytest.raises(ValueError, match="Lebesgue"):
        pullback_cover(
            lamplighter,
            window,
            z,
            project=lambda g: g.cursor,
            embed=lambda a: WreathElement((), a),
            sub_view=sub_view,
            sub_cover=singletons,
            r=2,
            kernel_bound=lambda rr: Fraction(1),
        )


# -- domination ----------------------------------------------------------------


def test_weakly_dominates():
    samples = range(1, 20)
    assert weakly_dominates(lambda r: 2 * r, lambda r: r, 1, 0, samples)
    assert weakly_dominates(lambda r: r, lambda r: r + 5, 1, 5, samples)
    assert not weakly_dominates(lambda r: r, lambda r: r * r, 1, 0, samples)
