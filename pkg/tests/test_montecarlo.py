import math
from dataclasses import replace

import numpy as np
import pytest

from lew.errors import MaxStepsExceeded, WrongGraphKind
from lew.hitting import affine_determinant, fomin_determinant, hitting_probability_matrix
from lew.lattice import build_grid, build_strip
from lew.loop_erasure import fomin_condition
from lew.montecarlo import (McConfig, McEstimate, absorption_counts, estimate_affine_and_cylinder,
                            estimate_affine_lhs, estimate_fomin_lhs, sample_walk, z_report)


def test_sample_walk_is_reproducible_and_ends_on_boundary():
    g = build_grid(4, 3)
    cfg = McConfig(samples=1, seed=11)
    p = sample_walk(g, (1, 0), cfg, sample=5)
    q = sample_walk(g, (1, 0), cfg, sample=5)
    assert p == q
    assert g.is_boundary(p.end)
    assert all(not g.is_boundary(v) for v in p.vertices[:-1])
    assert sample_walk(g, (1, 0), cfg, sample=6) != p or len(p) < 3


def test_max_steps_abort():
    g = build_grid(4, 6)
    with pytest.raises(MaxStepsExceeded):
        for s in range(50):
            sample_walk(g, (0, 0), McConfig(samples=1, max_steps=2), sample=s)


def test_absorption_histogram_matches_hitting():
    g = build_grid(4, 3)
    cfg = McConfig(samples=200_000, seed=3)
    hist = absorption_counts(g, (1, 0), cfg)
    targets = [(c, 3) for c in range(4)]
    H = hitting_probability_matrix(g, [(1, 0)], targets).entries[0]
    for t, h in zip(targets, H):
        est = McEstimate.from_counts(hist.get(t, 0), cfg.samples, 0)
        assert abs(z_report(est, h).z) <= 4


def test_fomin_estimate_small_grid():
    g = build_grid(4, 3)
    a, b = [(3, 0), (0, 0)], [(3, 3), (0, 3)]
    est = estimate_fomin_lhs(g, a, b, McConfig(samples=100_000, seed=5))
    assert z_report(est, fomin_determinant(g, a, b).value).passed


def test_fomin_tally_agrees_with_python_reference():
    g = build_grid(3, 2)
    a, b = [(2, 0), (0, 0)], [(2, 2), (0, 2)]
    cfg = McConfig(samples=2000, seed=9)
    hits = 0
    for s in range(cfg.samples):
        paths = [sample_walk(g, v, cfg, walker=i, sample=s) for i, v in enumerate(a)]
        if all(p.end == tuple(t) for p, t in zip(paths, b)) and fomin_condition(paths):
            hits += 1
    assert estimate_fomin_lhs(g, a, b, cfg).p_hat == hits / cfg.samples


def test_results_ignore_threads_but_not_streams():
    g = build_grid(4, 3)
    a, b = [(3, 0), (0, 0)], [(3, 3), (0, 3)]
    cfg = McConfig(samples=20_000, seed=1)
    base = estimate_fomin_lhs(g, a, b, cfg)
    assert estimate_fomin_lhs(g, a, b, replace(cfg, threads=1)) == base
    assert estimate_fomin_lhs(g, a, b, replace(cfg, threads=8)) == base
    assert estimate_fomin_lhs(g, a, b, replace(cfg, stream_count=3)) != base


def test_strip_rejected_for_fomin_and_grid_for_affine():
    with pytest.raises(WrongGraphKind):
        estimate_fomin_lhs(build_strip(4, 2), [(0, 0)], [(0, 2)], McConfig(samples=10))
    with pytest.raises(WrongGraphKind):
        estimate_affine_lhs(build_grid(4, 2), [(0, 0)], [(0, 2)], McConfig(samples=10))


def test_single_walker_affine_is_cylinder_hitting():
    s = build_strip(4, 2)
    est = estimate_affine_lhs(s, [(0, 0)], [(1, 2)], McConfig(samples=100_000, seed=2))
    assert z_report(est, affine_determinant(s, [(0, 0)], [(1, 2)]).value).passed


def test_cylinder_event_matches_odd_determinant():
    s = build_strip(6, 3)
    a, b = [(4, 0), (2, 0), (0, 0)], [(4, 3), (2, 3), (0, 3)]
    both = estimate_affine_and_cylinder(s, a, b, McConfig(samples=200_000, seed=4))
    assert z_report(both.cylinder, affine_determinant(s, a, b).value).passed
    assert both.diff_std_err > 0
    assert sum(sum(row) for row in both.sectors) == round(both.affine.p_hat * both.affine.samples_used)


def test_z_report_requires_spread():
    with pytest.raises(ValueError):
        z_report(McEstimate(0.0, 0.0, 10, 0), 0.1)
    zr = z_report(McEstimate(0.5, 0.01, 100, 0), 0.47)
    assert zr.z == pytest.approx(3.0) and zr.passed


def test_config_validation_and_json():
    with pytest.raises(ValueError):
        McConfig(samples=0)
    d = McConfig(samples=5, threads=3).to_json(build_grid(3, 2))
    assert "threads" not in d and d["max_steps"] == 100 * 2 * 9
