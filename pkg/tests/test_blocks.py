import numpy as np
import pytest

from qslab.blocks import (
    BlockTriple,
    block_region,
    classify,
    resonance_defect,
    support_feasible,
)


def test_classify_balanced_resonant():
    pred = classify(BlockTriple(10, 20, 10, 5, 10, 5))
    assert pred.feasible and pred.case_label == "i"
    assert pred.predicted == pytest.approx(2.0**2.5 * 2.0**1.25)


def test_classify_support_violation_zero():
    pred = classify(BlockTriple(10, 5, 10, 6, 10, 7))
    assert not pred.feasible and pred.case_label == "zero" and pred.predicted == 0.0
    # the frequency constraint alone also kills it
    pred2 = classify(BlockTriple(10, 25, 3, 0, 4, 0))
    assert not pred2.feasible


def test_classify_generic_case_iii():
    pred = classify(BlockTriple(0, 25, 10, 3, 10, 3))
    assert pred.feasible and pred.case_label == "iii"
    assert pred.predicted == pytest.approx(0.25)


def test_classify_low_slot_resonant_case_ii():
    # the lone low-frequency leg carries the resonance-scale top modulation
    pred = classify(BlockTriple(0, 8, 8, 0, 8, 0))
    assert pred.case_label == "ii"
    assert pred.predicted == pytest.approx(1.0)
    # the same geometry through the duality exchange keeps the label
    pred2 = classify(BlockTriple(8, 0, 0, 8, 8, 0))
    assert pred2.case_label == "ii"
    pred3 = classify(BlockTriple(8, 0, 8, 0, 0, 8))
    assert pred3.case_label == "ii"


def test_classify_precedence_total():
    for k1 in range(-2, 6):
        for j1 in (0, 3, 9):
            p = classify(BlockTriple(k1, j1, 4, 0, 3, 2))
            assert p.case_label in ("i", "ii", "iii", "zero")
            assert (p.case_label == "zero") == (not p.feasible)
            assert (p.predicted == 0.0) == (not p.feasible)


def test_block_region_membership():
    pts = block_region(2, 0, 8.0)
    xi, tau = pts[:, 0], pts[:, 1]
    assert np.all((xi >= 2.0) & (xi <= 8.0))
    assert np.all(np.abs(tau + xi**2) <= 2.0)
    # the stated member point
    assert np.any((xi == 4.0) & (tau == -16.0))


def test_block_region_reflection():
    pts = block_region(2, 0, 8.0, reflected=True)
    assert np.any((pts[:, 0] == -4.0) & (pts[:, 1] == 16.0))
    assert np.all(pts[:, 0] < 0)


def test_block_region_two_sided_modulation():
    pts = block_region(1, 2, 8.0)
    sig = pts[:, 1] + pts[:, 0] ** 2
    assert np.all((np.abs(sig) >= 2.0 - 1e-9) & (np.abs(sig) <= 8.0 + 1e-9))
    assert np.any(sig > 0) and np.any(sig < 0)


def test_block_region_empty_error():
    with pytest.raises(ValueError, match="finer density"):
        block_region(-6, 0, 8.0)


def test_resonance_identity_machine_precision():
    rng = np.random.default_rng(0)
    step = 1.0 / 8.0
    xi1 = rng.integers(-4096, 4096, size=1_000_00) * step
    xi2 = rng.integers(-4096, 4096, size=1_000_00) * step
    tau1 = rng.integers(-(2**20), 2**20, size=1_000_00) * step
    tau2 = rng.integers(-(2**20), 2**20, size=1_000_00) * step
    defect = resonance_defect(xi1, tau1, xi2, tau2)
    scale = np.maximum(1.0, np.abs(xi1 * xi2))
    assert np.max(np.abs(defect) / scale) <= 1e-12


def test_support_feasibility_matches_paper_constraints():
    assert support_feasible(BlockTriple(5, 2, 5, 0, 5, 8))
    assert not support_feasible(BlockTriple(8, 0, 8, 0, 8, 0))  # top modulation below resonance
    assert not support_feasible(BlockTriple(8, 3, 2, 3, 2, 3))  # k_max - k_med > 3
