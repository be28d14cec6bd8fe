"""Acceptance gate: ten exact end-to-end checks on fixed desk-scale instances.

Each test runs one check of the built-in verification suite, prints a single
pass/fail line (visible even under pytest's capture), and then asserts both
the verdict and the frozen measurement values for that instance, so any drift
in the underlying machinery fails loudly.
"""

from __future__ import annotations

import pytest

from wreathdim import run_suite
from wreathdim.cli import main


@pytest.fixture(scope="module")
def suite_results():
    return {result.name: result for result in run_suite()}


def report(capsys, index, result, limit_seconds):
    verdict = "PASS" if result.passed else "FAIL"
    with capsys.disabled():
        print(
            f"criterion {index:2d} {verdict} {result.name} ({result.seconds:.2f}s)",
            flush=True,
        )
    assert result.passed, result.details
    assert result.seconds < limit_seconds, "runtime budget exceeded"


def test_criterion_01_bulb_length_lower_bound(suite_results, capsys):
    """Every distinct-index bulb product (support in {-3..3}, up to 4 bulbs)
    has BFS word length at least its bulb count."""
    result = suite_results["bulb-length-lower-bound"]
    report(capsys, 1, result, 60)
    assert result.details == {"products": 98, "max_length": 16, "min_margin": 0}


def test_criterion_02_bulb_word_bound(suite_results, capsys):
    """The constructed word for each of the 127 bulb products over {-3..3}
    evaluates correctly within the letter bound n*(k + 2 + 4*max|e|)."""
    result = suite_results["bulb-word-bound"]
    report(capsys, 2, result, 10)
    assert result.details == {"products": 127, "max_letters": 19}


def test_criterion_03_word_bulb_decomposition(suite_results, capsys):
    """Every generator word of length <= 5 with kernel value decomposes into
    bulbs with trivial residual cursor and index length below 6."""
    result = suite_results["word-bulb-decomposition"]
    report(capsys, 3, result, 60)
    assert result.details == {"words": 364, "kernel_words": 82}


def test_criterion_04_kernel_component_control(suite_results, capsys):
    """r-components of the kernel window at radius 10 have diameter at most
    (2r+1) * growth(r) for r in {1, 2, 3}."""
    result = suite_results["kernel-component-control"]
    report(capsys, 4, result, 300)
    assert result.details["window"] == 38
    assert result.details["rows"] == [
        {"r": 1, "components": 38, "max_diameter": 0, "bound": "3"},
        {"r": 2, "components": 22, "max_diameter": 1, "bound": "15"},
        {"r": 3, "components": 22, "max_diameter": 1, "bound": "35"},
    ]


def test_criterion_05_kernel_cube_certificate(suite_results, capsys):
    """The 3x3 kernel cube over the plane at r = 2 has all edges shorter than
    3r and separation at least l1 on all 36 vertex pairs."""
    result = suite_results["kernel-cube-certificate"]
    report(capsys, 5, result, 10)
    assert result.details == {"k": 2, "edges": 12, "pairs": 36, "max_edge_bound": 3}


def test_criterion_06_lattice_witness_exhaustive(suite_results, capsys):
    """All 19683 two-part assignments of the 3x3 lattice: whenever the open
    3-ball hypothesis holds, some part contains a pair with coordinate
    spread 2."""
    result = suite_results["lattice-witness-exhaustive"]
    report(capsys, 6, result, 60)
    assert result.details == {
        "assignments": 19683,
        "hypothesis_count": 1023,
        "witness_count": 1023,
        "failures": [],
    }


def test_criterion_07_kernel_closure_cosets(suite_results, capsys):
    """The subgroup generated by the kernel r-ball stays within length 8r and
    every r-component of the radius-10 kernel window sits in one coset."""
    result = suite_results["kernel-closure-cosets"]
    report(capsys, 7, result, 300)
    assert result.details["rows"] == [
        {
            "r": 2,
            "closure_size": 2,
            "max_length": 1,
            "scaled_bound": 16,
            "cosets": 22,
            "components_split": True,
        },
        {
            "r": 3,
            "closure_size": 2,
            "max_length": 1,
            "scaled_bound": 24,
            "cosets": 22,
            "components_split": True,
        },
        {
            "r": 4,
            "closure_size": 8,
            "max_length": 7,
            "scaled_bound": 32,
            "cosets": 9,
            "components_split": True,
        },
    ]


def test_criterion_08_pullback_cover_control(suite_results, capsys):
    """A measured interval cover of the line pulls back to the radius-8 ball
    with component diameters at most d + (2(2+2d)+1) * growth(2+2d)."""
    result = suite_results["pullback-cover-control"]
    report(capsys, 8, result, 300)
    assert result.details == {
        "window": 278,
        "base_control": 11,
        "predicted": "2314",
        "measured": 14,
        "per_part": ["14", "14"],
    }


def test_criterion_09_growth_linear_bound(suite_results, capsys):
    """Growth of the declared virtually-Z groups is bounded by n*(3nCr + 1)
    for r in {1..6}."""
    result = suite_results["growth-linear-bound"]
    report(capsys, 9, result, 10)
    rows = result.details["rows"]
    assert [row["growth"] for row in rows if row["group"] == "Z"] == [1, 3, 5, 7, 9, 11]
    assert [row["bound"] for row in rows if row["group"] == "Z"] == [
        "4",
        "7",
        "10",
        "13",
        "16",
        "19",
    ]
    assert [row["growth"] for row in rows if row["group"] == "ZxC2"] == [
        1,
        4,
        8,
        12,
        16,
        20,
    ]
    assert [row["bound"] for row in rows if row["group"] == "ZxC2"] == [
        "14",
        "26",
        "38",
        "50",
        "62",
        "74",
    ]


def test_criterion_10_length_oracle_cross_check(suite_results, capsys):
    """Bidirectional BFS lengths agree with ball membership on the radius-8
    ball, and free-group growth matches the independent reduced-word count
    1, 5, 17, 53, 161."""
    result = suite_results["length-oracle-cross-check"]
    report(capsys, 10, result, 60)
    assert result.details["checked_elements"] == 278
    assert result.details["rows"] == [
        {"r": 1, "growth": 1, "independent": 1},
        {"r": 2, "growth": 5, "independent": 5},
        {"r": 3, "growth": 17, "independent": 17},
        {"r": 4, "growth": 53, "independent": 53},
        {"r": 5, "growth": 161, "independent": 161},
    ]


def test_verify_command_reruns_all_criteria(capsys):
    """The same ten checks are runnable as one CLI invocation."""
    assert main(["verify"]) == 0
    captured = capsys.readouterr()
    assert captured.err.count("pass ") == 10
