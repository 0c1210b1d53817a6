import math
from dataclasses import replace

import numpy as np
import pytest

from detector_placement.coverage import (
    build_coverage,
    detection_prob,
    path_exposure,
    segment_circle_chord,
)
from detector_placement.grid_model import DETECTOR_PARAMETERS, with_parameter
from detector_placement.pathing import all_paths
from oracles import sampled_exposure
from conftest import make_scenario
from instances import random_scenario


@pytest.mark.parametrize("p0,p1,center,r,expected", [
    ((-2, 0), (2, 0), (0, 0), 1.0, 2.0),
    ((0, 0), (4, 0), (2, 1), math.sqrt(2), 2.0),
    ((0, 0), (1, 0), (5, 5), 1.0, 0.0),
    ((0, 0), (1, 0), (0.5, 0), 3.0, 1.0),      # fully inside
    ((-1, 1), (1, 1), (0, 0), 1.0, 0.0),       # tangent
    ((0, 0), (2, 0), (0, 0), 1.0, 1.0),        # starts at center
    ((1, 0), (3, 0), (0, 0), 1.0, 0.0),        # starts on circle, heads out
    ((3, 3), (3, 3), (3, 3), 1.0, 0.0),        # degenerate segment
])
def test_chord_examples(p0, p1, center, r, expected):
    assert segment_circle_chord(p0, p1, center, r) == pytest.approx(expected, abs=1e-12)


def test_exposure_examples():
    assert path_exposure((), (0, 0), 1.0) == 0.0
    assert path_exposure(((0, 0), (10, 0)), (5, 0), 2.0) == pytest.approx(4.0)
    ell = ((0, 0), (2, 0), (2, 2))
    assert sampled_exposure(ell, (2, 0), 1.0) == pytest.approx(2.0, abs=1e-3)
    assert path_exposure(ell, (2, 0), 1.0) == pytest.approx(2.0, abs=1e-12)


def test_exposure_vs_sampling_random():
    rng = np.random.default_rng(2)
    for _ in range(150):
        pts = [tuple(p) for p in np.cumsum(rng.uniform(-3, 3, size=(int(rng.integers(2, 5)), 2)), axis=0)]
        center = tuple(rng.uniform(-4, 4, size=2))
        r = float(rng.uniform(0.1, 4))
        l = path_exposure(pts, center, r)
        assert 0 <= l <= sum(math.dist(a, b) for a, b in zip(pts, pts[1:])) + 1e-12
        assert l == pytest.approx(sampled_exposure(pts, center, r), abs=1e-3)


@pytest.mark.parametrize("beta,l,expected", [
    (0.0, 7.0, 0.0),
    (0.5, 2.0, 1 - math.exp(-1)),
    (3.0, 0.0, 0.0),
])
def test_detection_prob(beta, l, expected):
    assert detection_prob(beta, l) == pytest.approx(expected, abs=1e-15)


def corridor(chi=0.0, alpha=1.5, beta=1.0):
    return make_scenario(1, 5, [1], [(5, 10.0)], {(1, 5): 1.0}, chi=chi,
                         primary=(alpha, beta, 1.0, 1.0), secondary=(alpha, beta, 1.0, 1.0))


def test_corridor_coverage():
    s = corridor()
    paths = all_paths(s)
    cov = build_coverage(s, paths)
    ref = sampled_exposure(paths[(1, 5)].polyline, (2.5, 0.5), 1.5)
    assert ref == pytest.approx(3.0, abs=1e-3)
    assert cov.rho_primary[(3, 1, 5)] == pytest.approx(1 - math.exp(-3.0), abs=1e-12)
    assert cov.candidates_P == {1, 2, 3, 4, 5}


def test_corridor_timeliness_prefix():
    s = corridor(chi=2.0)  # k * chi = 2 m
    paths = all_paths(s)
    cov = build_coverage(s, paths)
    prefix = paths[(1, 5)].prefix
    assert sampled_exposure(prefix, (2.5, 0.5), 1.5) == pytest.approx(1.5, abs=1e-3)
    assert cov.rho_primary[(3, 1, 5)] == pytest.approx(1 - math.exp(-1.5), abs=1e-12)
    assert 5 not in cov.eligible_primary[(1, 5)]
    assert 5 in cov.eligible_secondary[(1, 5)]


def test_no_coverage_when_radius_tiny():
    s = corridor(alpha=1e-12)
    cov = build_coverage(s, all_paths(s))
    assert not cov.candidates_P and not cov.candidates_S


def test_zero_rate_has_no_candidates():
    s = corridor(beta=0.0)
    cov = build_coverage(s, all_paths(s))
    assert not cov.candidates_P


def test_coverage_invariants_random():
    rng = np.random.default_rng(4)
    for _ in range(40):
        s = random_scenario(rng)
        cov = build_coverage(s, all_paths(s))
        unblocked = set(s.unblocked())
        assert cov.candidates_P <= unblocked and cov.candidates_S <= unblocked
        assert all(0 < r < 1 for r in cov.rho_primary.values())
        assert all(0 < r < 1 for r in cov.rho_secondary.values())
        for (e, j), cells in cov.eligible_primary.items():
            assert cells == {i for (i, ee, jj) in cov.rho_primary if (ee, jj) == (e, j)}


def test_monotone_in_radius_and_rate():
    rng = np.random.default_rng(6)
    for _ in range(25):
        s = random_scenario(rng)
        base = build_coverage(s, all_paths(s))
        for param, factor in (("alpha_p", 1.7), ("beta_p", 2.0), ("alpha_s", 1.3), ("beta_s", 1.5)):
            layer, fname = DETECTOR_PARAMETERS[param]
            bigger = with_parameter(s, param, getattr(getattr(s, layer), fname) * factor)
            cov = build_coverage(bigger, all_paths(bigger))
            table_old = base.rho_primary if param.endswith("_p") else base.rho_secondary
            table_new = cov.rho_primary if param.endswith("_p") else cov.rho_secondary
            for key, r in table_old.items():
                assert table_new.get(key, 0.0) >= r - 1e-12


def test_primary_subset_of_secondary_when_no_buffer():
    rng = np.random.default_rng(8)
    for _ in range(25):
        s = random_scenario(rng).replace(response_time_chi=0.0)
        ps = s.primary_spec
        s = s.replace(secondary_spec=replace(s.secondary_spec, radius_alpha=ps.radius_alpha * 1.2,
                                             rate_beta=0.7))
        cov = build_coverage(s, all_paths(s))
        for pair, cells in cov.eligible_primary.items():
            assert cells <= cov.eligible_secondary[pair]
