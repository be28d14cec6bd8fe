"""Lattice-cube separation witnesses and growth-driven lower-bound certificates.

The combinatorial core: any cover of the l1 lattice ``{0..k}^n`` in which
every open (n+1)-ball fits inside one part must contain, inside a single
2-component of some part i, two points whose i-th coordinates differ by the
full k.  Mapping such a lattice into a group window by an r-cube (all edges
shorter than r) turns that witness into a diameter lower bound for any
cover's components, and wreath-product kernels admit explicit r-cubes built
from bulbs whose inverse is 1-Lipschitz by the index-counting bound.
"""

from __future__ import annotations

import itertools
import multiprocessing
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Iterable, Iterator, Mapping, Sequence

from .covers import Cover, ExplicitMetricView, MetricView, lebesgue_ok, r_components
from .groups import Element, LengthOracle, as_radius
from .wreath import BulbProduct, WreathContext, bulb_product, kernel_bulbs

Point = tuple[int, ...]


def l1(a: Point, b: Point) -> int:
    return sum(abs(x - y) for x, y in zip(a, b))


def lattice_points(n: int, k: int) -> tuple[Point, ...]:
    """All points of {0..k}^n in lexicographic order."""
    return tuple(itertools.product(range(k + 1), repeat=n))


def lattice_view(n: int, k: int) -> ExplicitMetricView:
    return ExplicitMetricView(lattice_points(n, k), l1)


@dataclass(frozen=True)
class LatticeOutcome:
    """Result of the cover-witness search on one lattice cover."""

    hypothesis_ok: bool
    violator: Point | None
    witness: tuple[int, Point, Point] | None


def lattice_cover_witness(n: int, k: int, parts: Sequence[Iterable[Point]]) -> LatticeOutcome:
    """Check the open-(n+1)-ball hypothesis and hunt the k-spread witness.

    With the hypothesis satisfied, some part i contains two points of one
    2-component whose i-th coordinates differ by k; the first such pair in
    (part, component, lex) order is returned.  A missing witness on a
    hypothesis-satisfying cover would refute the underlying fact.
    """
    points = lattice_points(n, k)
    part_sets = [frozenset(p) for p in parts]
    if len(part_sets) > n:
        raise ValueError(
            f"the witness claim pairs parts with coordinates; at most {n} parts allowed"
        )
    covered = set().union(*part_sets) if part_sets else set()
    for x in points:
        if x not in covered:
            raise ValueError(f"parts do not cover the lattice point {x}")
    for x in points:
        ball = [y for y in points if l1(x, y) <= n]
        if not any(all(y in part for y in ball) for part in part_sets):
            return LatticeOutcome(False, x, None)
    view = lattice_view(n, k)
    for index, part in enumerate(part_sets, start=1):
        part_pts = [x for x in points if x in part]
        for comp in r_components(view, part_pts, 2):
            for a in comp:
                for b in comp:
                    if a < b and abs(a[index - 1] - b[index - 1]) == k:
                        return LatticeOutcome(True, None, (index, a, b))
    return LatticeOutcome(True, None, None)


@dataclass(frozen=True)
class LatticeSearchReport:
    """Tally of an assignment sweep over lattice covers with a fixed part count."""

    n: int
    k: int
    num_parts: int
    assignments: int
    hypothesis_count: int
    witness_count: int
    failures: tuple[int, ...]  # assignment codes passing the hypothesis without a witness


def _decode_assignment(code: int, num_points: int, num_parts: int) -> list[int]:
    # Base (2**p - 1) digits, one per point; digit + 1 is the part bitmask.
    radix = (1 << num_parts) - 1
    masks = []
    for _ in range(num_points):
        code, digit = divmod(code, radix)
        masks.append(digit + 1)
    return masks


def _scan_lattice_codes(
    args: tuple[int, int, int, int, int]
) -> tuple[int, int, list[int]]:
    n, k, num_parts, start, stop = args
    points = lattice_points(n, k)
    num_points = len(points)
    balls = [
        tuple(j for j, y in enumerate(points) if l1(x, y) <= n) for x in points
    ]
    view = lattice_view(n, k)
    hypothesis_count = 0
    witness_count = 0
    failures: list[int] = []
    for code in range(start, stop):
        masks = _decode_assignment(code, num_points, num_parts)
        ok = True
        for j in range(num_points):
            ball = balls[j]
            if not any(
                all(masks[m] & (1 << i) for m in ball) for i in range(num_parts)
            ):
                ok = False
                break
        if not ok:
            continue
        hypothesis_count += 1
        found = False
        for index in range(1, min(n, num_parts) + 1):
            part_pts = [points[j] for j in range(num_points) if masks[j] & (1 << (index - 1))]
            for comp in r_components(view, part_pts, 2):
                coords = [p[index - 1] for p in comp]
                if max(coords) - min(coords) == k:
                    found = True
                    break
            if found:
                break
        if found:
            witness_count += 1
        else:
            failures.append(code)
    return hypothesis_count, witness_count, failures


def exhaustive_lattice_search(
    n: int, k: int, num_parts: int, *, workers: int = 1
) -> LatticeSearchReport:
    """Sweep every assignment of lattice points to nonempty part subsets.

    Every assignment satisfying the open-(n+1)-ball hypothesis must yield a
    witness; assignment codes that do not are reported as failures.  The
    report is identical for any worker count.
    """
    if num_parts > n:
        raise ValueError(f"at most {n} parts allowed for the witness claim")
    num_points = (k + 1) ** n
    radix = (1 << num_parts) - 1
    total = radix**num_points
    if workers <= 1:
        h, w, failures = _scan_lattice_codes((n, k, num_parts, 0, total))
    else:
        chunk = -(-total // workers)
        tasks = [
            (n, k, num_parts, lo, min(lo + chunk, total))
            for lo in range(0, total, chunk)
        ]
        with multiprocessing.Pool(workers) as pool:
            results = pool.map(_scan_lattice_codes, tasks)
        h = sum(res[0] for res in results)
        w = sum(res[1] for res in results)
        failures = [code for res in results for code in res[2]]
    return LatticeSearchReport(
        n, k, num_parts, total, h, w, tuple(sorted(failures))
    )


def sampled_lattice_search(
    n: int, k: int, num_parts: int, samples: int, *, seed: int = 0
) -> LatticeSearchReport:
    """Same tally over a seeded random sample of assignment codes."""
    num_points = (k + 1) ** n
    radix = (1 << num_parts) - 1
    total = radix**num_points
    rng = random.Random(seed)
    h = w = 0
    failures: list[int] = []
    for _ in range(samples):
        code = rng.randrange(total)
        dh, dw, df = _scan_lattice_codes((n, k, num_parts, code, code + 1))
        h += dh
        w += dw
        failures.extend(df)
    return LatticeSearchReport(n, k, num_parts, samples, h, w, tuple(sorted(failures)))


# ---------------------------------------------------------------------------
# r-cubes in group windows


@dataclass
class RCube:
    """A lattice mapped into a group window with all edges shorter than ``scale``."""

    n: int
    k: int
    scale: Fraction
    vertices: Mapping[Point, Element]

    def __post_init__(self) -> None:
        expected = lattice_points(self.n, self.k)
        if set(self.vertices) != set(expected):
            raise ValueError(f"cube needs exactly the vertex set of {{0..{self.k}}}^{self.n}")
        self.scale = as_radius(self.scale)

    def edges(self) -> Iterator[tuple[Point, Point]]:
        for x in lattice_points(self.n, self.k):
            for i in range(self.n):
                if x[i] < self.k:
                    y = x[:i] + (x[i] + 1,) + x[i + 1 :]
                    yield x, y

    def vertex_pairs(self) -> Iterator[tuple[Point, Point]]:
        pts = lattice_points(self.n, self.k)
        for a_idx, a in enumerate(pts):
            for b in pts[a_idx + 1 :]:
                yield a, b


def verify_cube_edges(
    cube: RCube, dist_lt: Callable[[Element, Element, Fraction], bool]
) -> list[tuple[Point, Point]]:
    """Edges whose endpoint images are not strictly closer than the cube scale."""
    return [
        (x, y)
        for x, y in cube.edges()
        if not dist_lt(cube.vertices[x], cube.vertices[y], cube.scale)
    ]


@dataclass(frozen=True)
class CubeObstruction:
    """A pair of cube vertices forcing a large component in one cover part."""

    part_index: int
    a: Point
    b: Point
    lattice_spread: int
    separation: int | Fraction


def cube_obstruction(view: MetricView, cover: Cover, cube: RCube) -> CubeObstruction:
    """Turn a cube plus a cover with Lebesgue number >= n*scale into an obstruction.

    The witness pair maps to two points of one part lying in a common
    (n*scale)-component, so that component's diameter is at least the
    returned separation.
    """
    if len(cover.parts) > cube.n:
        raise ValueError(
            f"obstruction pairs parts with cube axes; at most {cube.n} parts allowed"
        )
    scale = cube.n * cube.scale
    leb = lebesgue_ok(view, cover, scale)
    if not leb.ok:
        raise ValueError(
            f"cover has Lebesgue number below {scale}; obstruction needs it at least n*scale"
        )
    image_index = {x: cube.vertices[x] for x in cube.vertices}
    parts = [
        {x for x, g in image_index.items() if g in part} for part in cover.parts
    ]
    outcome = lattice_cover_witness(cube.n, cube.k, parts)
    if not outcome.hypothesis_ok:
        raise ValueError(
            "cube image escapes the cover's Lebesgue guarantee; "
            f"lattice point {outcome.violator} has no enclosing part"
        )
    if outcome.witness is None:
        raise ValueError("no spread witness; the lattice fact is violated")
    index, a, b = outcome.witness
    separation = view.dist(cube.vertices[a], cube.vertices[b])
    return CubeObstruction(index, a, b, cube.k, separation)


def max_cube_spread(control_value: int | Fraction, lip_inv: int | Fraction) -> int:
    """Largest k an r-cube with inverse-Lipschitz constant ``lip_inv`` can have.

    k <= control_value * lip_inv, rounded down.
    """
    bound = Fraction(control_value) * Fraction(lip_inv)
    if bound < 0:
        raise ValueError("control value and Lipschitz constant must be nonnegative")
    return bound.numerator // bound.denominator


# ---------------------------------------------------------------------------
# kernel cubes in wreath products


@dataclass
class KernelCube:
    """An r-cube of bulb products in a wreath kernel, with certified edge bounds.

    ``index_table[(j, i)]`` is the base element whose bulb is switched on when
    coordinate i passes level j; all indices are distinct, so vertex supports
    are exactly readable and the inverse map is 1-Lipschitz by index counting.
    """

    ctx: WreathContext
    cube: RCube
    index_table: Mapping[tuple[int, int], Element]
    lamp_value: Element
    edge_bounds: Mapping[tuple[Point, Point], int]


def build_kernel_cube(
    ctx: WreathContext,
    n: int,
    r: int | Fraction,
    k: int | None = None,
    *,
    base_oracle: LengthOracle | None = None,
) -> KernelCube:
    """Build the standard (3r)-cube of bulb products over the base r-ball.

    The base ball is enumerated in canonical order and assigned row-major to
    the index table; ``k`` defaults to the largest value the growth allows
    (``growth(r) // n``).  Edge bounds are the constructive word bounds
    ``2 * length(index) + 1``, each strictly below 3r.
    """
    if n < 1:
        raise ValueError(f"cube dimension must be >= 1, got {n}")
    radius = as_radius(r)
    oracle = base_oracle if base_oracle is not None else LengthOracle(ctx.base)
    table = oracle.ball(radius)
    gamma = len(table)
    if k is None:
        k = gamma // n
    if k < 1 or n * k > gamma:
        raise ValueError(
            f"cube needs {n}*{max(k, 1)} distinct indices but the r-ball only has {gamma} elements"
        )
    index_table = {
        (j, i): table.elements[(j - 1) * n + (i - 1)]
        for j in range(1, k + 1)
        for i in range(1, n + 1)
    }
    u = ctx._lamp_values[0] if ctx._lamp_values else None
    if u is None:
        raise ValueError("kernel cube needs a nontrivial fiber")
    scale = 3 * radius
    vertices: dict[Point, Element] = {}
    for x in lattice_points(n, k):
        pairs = [
            (index_table[(j, i)], u)
            for i in range(1, n + 1)
            for j in range(1, x[i - 1] + 1)
        ]
        vertices[x] = bulb_product(ctx, pairs).element(ctx)
    cube = RCube(n, k, scale, vertices)
    edge_bounds: dict[tuple[Point, Point], int] = {}
    for x, y in cube.edges():
        axis = next(i for i in range(n) if x[i] != y[i])
        g = index_table[(max(x[axis], y[axis]), axis + 1)]
        bound = 2 * table.lengths[g] + 1
        if not bound < scale:
            raise ValueError(
                f"edge bound {bound} is not below the cube scale {scale}; "
                "the base ball is too shallow for this k"
            )
        edge_bounds[(x, y)] = bound
    return KernelCube(ctx, cube, index_table, u, edge_bounds)


def lipschitz_pairs(
    kcube: KernelCube, *, limit: int = 256, seed: int = 0
) -> list[tuple[Point, Point, int, int]]:
    """Per-pair unit-Lipschitz evidence: (a, b, l1, support separation).

    The support separation (number of positions where the two vertex lamp
    configurations differ) is a certified word-metric lower bound between the
    images, and for these cubes it equals the l1 distance exactly.  All pairs
    are checked when there are at most ``limit``; otherwise a seeded sample.
    """
    ctx = kcube.ctx
    pairs = list(kcube.cube.vertex_pairs())
    if len(pairs) > limit:
        rng = random.Random(seed)
        pairs = [pairs[i] for i in sorted(rng.sample(range(len(pairs)), limit))]
    out = []
    for a, b in pairs:
        ga = kcube.cube.vertices[a]
        gb = kcube.cube.vertices[b]
        diff = kernel_bulbs(ctx, ctx.multiply(ctx.inverse(ga), gb))
        out.append((a, b, l1(a, b), len(diff.bulbs)))
    return out


def verify_unit_lipschitz(kcube: KernelCube, **kwargs: Any) -> None:
    """Raise unless every checked vertex pair has separation >= its l1 distance."""
    for a, b, want, got in lipschitz_pairs(kcube, **kwargs):
        if got < want:
            raise ValueError(
                f"vertex pair {a}, {b} separates only {got} indices; needs {want}"
            )


@dataclass
class KernelCubeCertificate:
    """A fully checked kernel cube packaged with its lower-bound claim."""

    kcube: KernelCube
    growth_at_r: int
    pair_evidence: list[tuple[Point, Point, int, int]]

    def to_json_dict(self) -> dict[str, Any]:
        ctx = self.kcube.ctx
        cube = self.kcube.cube
        return {
            "schema": "kernel-cube-certificate/1",
            "spec": ctx.spec_string(),
            "spec_hash": ctx.spec_hash,
            "n": cube.n,
            "k": cube.k,
            "r": str(cube.scale / 3),
            "scale": str(cube.scale),
            "growth_at_r": self.growth_at_r,
            "lamp_value": ctx.fiber.format_element(self.kcube.lamp_value),
            "index_table": [
                {
                    "row": j,
                    "axis": i,
                    "element": ctx.base.format_element(g),
                }
                for (j, i), g in sorted(self.kcube.index_table.items())
            ],
            "edge_bounds": [
                {"from": list(x), "to": list(y), "bound": bound}
                for (x, y), bound in sorted(self.kcube.edge_bounds.items())
            ],
            "pairs": [
                {"a": list(a), "b": list(b), "l1": want, "separation": got}
                for a, b, want, got in self.pair_evidence
            ],
            "claim": {
                "lebesgue_scale": str(cube.n * cube.scale),
                "component_scale": str(cube.n * cube.scale),
                "control_lower_bound": cube.k,
            },
        }


def growth_lower_bound_certificate(
    ctx: WreathContext,
    n: int,
    r: int | Fraction,
    *,
    base_oracle: LengthOracle | None = None,
    pair_limit: int = 256,
    seed: int = 0,
) -> KernelCubeCertificate:
    """Build and fully check the growth-driven kernel cube at scale 3r.

    The resulting certificate witnesses: any cover of a window containing the
    cube with Lebesgue number >= n*3r has a part with an (n*3r)-component of
    diameter at least k = growth(r) // n.
    """
    oracle = base_oracle if base_oracle is not None else LengthOracle(ctx.base)
    kcube = build_kernel_cube(ctx, n, r, base_oracle=oracle)
    evidence = lipschitz_pairs(kcube, limit=pair_limit, seed=seed)
    for a, b, want, got in evidence:
        if got < want:
            raise ValueError(
                f"vertex pair {a}, {b} separates only {got} indices; needs {want}"
            )
    return KernelCubeCertificate(kcube, oracle.growth(as_radius(r)), evidence)
