import itertools
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trojscan.metrics import LabeledScore, cross_entropy, fleet_metrics, roc_auc
from trojscan.synthfleet import FleetManifest, GroundTruth


def brute_force_auc(labels, probs):
    """Independent pair-counting oracle: (concordant + 0.5*tied) / (pos*neg)."""
    pos = [p for y, p in zip(labels, probs) if y == 1]
    neg = [p for y, p in zip(labels, probs) if y == 0]
    total = 0.0
    for pp in pos:
        for pn in neg:
            if pp > pn:
                total += 1.0
            elif pp == pn:
                total += 0.5
    return total / (len(pos) * len(neg))


def as_scores(labels, probs):
    return [LabeledScore(f"m{i}", y, p) for i, (y, p) in enumerate(zip(labels, probs))]


# ---------------------------------------------------------------------------
# cross entropy
# ---------------------------------------------------------------------------


def test_cross_entropy_analytic_values():
    assert cross_entropy(1, 0.999999) == pytest.approx(0.0, abs=1e-5)
    assert cross_entropy(1, 0.5) == pytest.approx(math.log(2), abs=1e-12)
    assert cross_entropy(0, 0.9) == pytest.approx(-math.log(0.1), abs=1e-12)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.1])
def test_cross_entropy_rejects_boundary_probabilities(p):
    with pytest.raises(ValueError):
        cross_entropy(1, p)


def test_cross_entropy_rejects_bad_labels():
    with pytest.raises(ValueError):
        cross_entropy(2, 0.5)


def test_cross_entropy_monotonicity():
    grid = [0.01 * k for k in range(1, 100)]
    losses_pos = [cross_entropy(1, p) for p in grid]
    losses_neg = [cross_entropy(0, p) for p in grid]
    assert all(a > b for a, b in zip(losses_pos, losses_pos[1:]))  # decreasing in p
    assert all(a < b for a, b in zip(losses_neg, losses_neg[1:]))  # increasing in p


# ---------------------------------------------------------------------------
# roc auc
# ---------------------------------------------------------------------------


def test_auc_perfect_separation():
    scores = as_scores([1, 1, 0, 0], [0.9, 0.9, 0.1, 0.1])
    assert roc_auc(scores) == 1.0


def test_auc_all_tied_is_half():
    assert roc_auc(as_scores([1, 0], [0.5, 0.5])) == 0.5


def test_auc_hand_derived_four_element_example():
    labels = [1, 1, 0, 0]
    probs = [0.9, 0.4, 0.6, 0.2]
    assert brute_force_auc(labels, probs) == 0.75  # 3 concordant, 0 tied, of 4 pairs
    assert roc_auc(as_scores(labels, probs)) == 0.75


def test_auc_single_class_rejected():
    with pytest.raises(ValueError):
        roc_auc(as_scores([1, 1], [0.2, 0.8]))
    with pytest.raises(ValueError):
        roc_auc(as_scores([0, 0], [0.2, 0.8]))


def test_labeled_score_validation():
    with pytest.raises(ValueError):
        LabeledScore("m", 2, 0.5)
    with pytest.raises(ValueError):
        LabeledScore("m", 1, 1.0)
    with pytest.raises(ValueError):
        LabeledScore("m", 0, 0.0)


def test_auc_matches_brute_force_exhaustively():
    # Every list up to length 5 over a 3-value score alphabet, and every list
    # of lengths 6-8 over a 2-value alphabet (full label enumeration in both).
    def check_all(lengths, alphabet):
        for n in lengths:
            for labels in itertools.product((0, 1), repeat=n):
                if len(set(labels)) < 2:
                    continue
                for probs in itertools.product(alphabet, repeat=n):
                    expect = brute_force_auc(labels, probs)
                    got = roc_auc(as_scores(labels, probs))
                    assert abs(got - expect) <= 1e-12, (labels, probs)

    check_all(range(2, 6), (0.2, 0.5, 0.8))
    check_all(range(6, 9), (0.3, 0.7))


def test_auc_matches_brute_force_randomly():
    rng = random.Random(2024)
    for _ in range(200):
        n = rng.randint(2, 64)
        labels = [rng.randint(0, 1) for _ in range(n)]
        if len(set(labels)) < 2:
            labels[0], labels[1] = 0, 1
        probs = [rng.choice([0.1, 0.25, 0.5, 0.75, 0.9, rng.uniform(0.01, 0.99)]) for _ in range(n)]
        expect = brute_force_auc(labels, probs)
        assert abs(roc_auc(as_scores(labels, probs)) - expect) <= 1e-12


@given(seed=st.integers(min_value=0, max_value=2**31 - 1))
@settings(max_examples=50, deadline=None)
def test_auc_invariant_under_increasing_transforms(seed):
    rng = random.Random(seed)
    n = rng.randint(4, 24)
    labels = [rng.randint(0, 1) for _ in range(n)]
    if len(set(labels)) < 2:
        labels[0], labels[1] = 0, 1
    probs = [rng.choice([0.2, 0.4, 0.6, 0.8]) for _ in range(n)]
    base = roc_auc(as_scores(labels, probs))
    for transform in (lambda p: p**3, lambda p: 1 - math.exp(-3 * p), lambda p: p / 2 + 0.1):
        mapped = [transform(p) for p in probs]
        assert roc_auc(as_scores(labels, mapped)) == pytest.approx(base, abs=1e-12)


# ---------------------------------------------------------------------------
# fleet metrics
# ---------------------------------------------------------------------------


def tiny_manifest():
    models = []
    for i in range(4):
        models.append(GroundTruth(model_id=f"model_{i:03d}", poisoned=False, trigger_kind="none"))
    models.append(
        GroundTruth(
            model_id="model_004",
            poisoned=True,
            trigger_kind="polygon",
            target_class=1,
            source_classes=(0, 1, 2),
            color=(120, 120, 120),
            color_tolerance=114,
            min_area_fraction=0.05,
            shape_seed=0,
        )
    )
    models.append(
        GroundTruth(
            model_id="model_005",
            poisoned=True,
            trigger_kind="polygon",
            target_class=0,
            source_classes=(0, 1),
            color=(130, 130, 130),
            color_tolerance=114,
            min_area_fraction=0.05,
            shape_seed=0,
        )
    )
    models.append(
        GroundTruth(
            model_id="model_006",
            poisoned=True,
            trigger_kind="filter",
            target_class=2,
            source_classes=(0, 1, 2),
            filter_type="Kelvin",
        )
    )
    models.append(
        GroundTruth(
            model_id="model_007",
            poisoned=True,
            trigger_kind="filter",
            target_class=0,
            source_classes=(0, 1, 2),
            filter_type="Lomo",
        )
    )
    return FleetManifest(seed=0, height=48, width=48, classes=3, per_class=2, models=models)


def perfect_reports(manifest, p1=0.9, p2=0.1):
    reports = []
    for gt in manifest.models:
        p = p1 if gt.poisoned else p2
        reports.append(
            {
                "model_id": gt.model_id,
                "probability": p,
                "poisoned": gt.poisoned,
                "wall_ms": 10,
            }
        )
    return reports


def test_perfect_fleet_metrics():
    manifest = tiny_manifest()
    metrics = fleet_metrics(perfect_reports(manifest), manifest)
    assert metrics.roc_auc == 1.0
    # All-correct verdicts at p1=0.9 / p2=0.1 give CE = -ln(0.9).
    assert metrics.ce_loss == pytest.approx(-math.log(0.9), abs=1e-12)
    assert metrics.n_models == 8
    assert metrics.per_category["clean"]["detection_rate"] == 1.0
    assert metrics.per_category["polygon"]["n_models"] == 2
    assert metrics.per_category["instagram"]["n_models"] == 2
    assert metrics.runtime_s == pytest.approx(0.08)


def test_inverted_reports_score_zero_auc():
    manifest = tiny_manifest()
    reports = perfect_reports(manifest)
    for r in reports:
        r["probability"] = 1.0 - r["probability"]
        r["poisoned"] = not r["poisoned"]
    metrics = fleet_metrics(reports, manifest)
    assert metrics.roc_auc == 0.0
    assert metrics.per_category["clean"]["detection_rate"] == 0.0


def test_metrics_order_invariance():
    manifest = tiny_manifest()
    reports = perfect_reports(manifest)
    shuffled = list(reversed(reports))
    a = fleet_metrics(reports, manifest)
    b = fleet_metrics(shuffled, manifest)
    assert a == b


def test_category_rows_recombine_to_total():
    manifest = tiny_manifest()
    reports = perfect_reports(manifest)
    reports[0]["probability"] = 0.7  # one noisy clean model
    metrics = fleet_metrics(reports, manifest)
    weighted = sum(
        row["ce_loss"] * row["n_models"] for row in metrics.per_category.values()
    )
    assert weighted / metrics.n_models == pytest.approx(metrics.ce_loss, abs=1e-12)


def test_error_reports_excluded_with_warning_count():
    manifest = tiny_manifest()
    reports = perfect_reports(manifest)
    reports[2] = {"model_id": reports[2]["model_id"], "status": "error", "error": "boom"}
    metrics = fleet_metrics(reports, manifest)
    assert metrics.n_errors == 1
    assert metrics.n_models == 7


def test_missing_duplicate_and_unknown_reports_rejected():
    manifest = tiny_manifest()
    reports = perfect_reports(manifest)
    with pytest.raises(ValueError):
        fleet_metrics(reports[:-1], manifest)
    with pytest.raises(ValueError):
        fleet_metrics(reports + [reports[0]], manifest)
    rogue = dict(reports[0], model_id="model_999")
    with pytest.raises(ValueError):
        fleet_metrics(reports + [rogue], manifest)


def test_secretless_manifest_rejected():
    manifest = tiny_manifest()
    stripped = FleetManifest.from_dict(manifest.to_dict(include_secrets=False))
    with pytest.raises(ValueError):
        fleet_metrics(perfect_reports(manifest), stripped)
