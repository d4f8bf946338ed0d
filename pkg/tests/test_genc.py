import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ricconflict.dataset import Dataset, meta_path_for
from ricconflict.domain import ConflictLabel, validate_model
from ricconflict.genc import (
    HIGH,
    LOW,
    MEDIUM,
    PROFILES,
    breach_radius,
    gaussian_response,
    get_profile,
    icp_buckets,
    per_update_breach_prob,
    simulate,
    synthesize_entities,
)
from ricconflict.rules import annotate_dataset


def test_profiles_are_ordered():
    assert LOW.update_freq < MEDIUM.update_freq < HIGH.update_freq
    assert LOW.sla_band > MEDIUM.sla_band > HIGH.sla_band
    assert LOW.threshold_range == pytest.approx((0.6, 0.9))
    assert get_profile("Medium") is MEDIUM
    with pytest.raises(ValueError):
        get_profile("extreme")


def test_gaussian_response_and_radius():
    assert gaussian_response(0.0, 0.0, 50.0) == 1.0
    r = float(breach_radius(0.7, 50.0))
    assert gaussian_response(r, 0.0, 50.0) == pytest.approx(0.7)
    assert gaussian_response(-30.0, 30.0, 10.0) == 1.0
    with pytest.raises(ValueError):
        gaussian_response(1.0, 0.0, 0.0)


def test_breach_prob_modes():
    assert per_update_breach_prob(LOW, "per-update") == LOW.breach_prob
    assert per_update_breach_prob(LOW) == pytest.approx(LOW.breach_prob / LOW.update_freq)
    with pytest.raises(ValueError):
        per_update_breach_prob(LOW, "sometimes")


def test_ownership_degrees_are_heavy_tailed():
    model = synthesize_entities(10, seed=3)
    deg = np.bincount([len(model.mappings.p2x.get(p, ())) for p in range(model.p_count)])
    assert deg[0] >= 1  # unassigned
    assert np.argmax(deg[1:]) == 0  # mode is one owner
    assert len(deg) - 1 == 2  # nobody has three owners
    assert all(len(b) for b in icp_buckets(model))


def test_entities_are_deterministic():
    assert synthesize_entities(7, seed=11) == synthesize_entities(7, seed=11)
    assert synthesize_entities(7, seed=11) != synthesize_entities(7, seed=12)


@pytest.mark.parametrize("bad", [dict(m=0), dict(m=3, share_prob=1.0), dict(m=3, share_prob=-0.1)])
def test_entities_reject_bad_args(bad):
    with pytest.raises(ValueError):
        synthesize_entities(**bad)


@pytest.mark.parametrize("bad", [dict(t_max=0), dict(sigma=0.0), dict(icp_limit=10.0)])
def test_simulate_rejects_bad_args(bad):
    args = dict(t_max=10) | bad
    with pytest.raises(ValueError):
        simulate(synthesize_entities(3), "low", **args)


def test_simulate_is_deterministic():
    model = synthesize_entities(5, seed=0)
    a = simulate(model, "medium", 3000, seed=4)
    b = simulate(model, "medium", 3000, seed=4)
    for f in ("rcp_xapp", "rcp_icp", "icp_values", "kpi_values", "vk", "labels"):
        assert np.array_equal(getattr(a, f), getattr(b, f))


def test_rows_are_consistent(small_ds):
    ds = small_ds
    idle = ds.rcp_icp < 0
    assert np.array_equal(idle, ds.rcp_xapp < 0)
    assert not ds.vk[idle].any()
    assert (ds.labels[idle] == 0).all()
    # V holds breaches the row's change started: below threshold now, not before
    below = ds.kpi_values < ds.sla
    assert not (ds.vk & ~below).any()
    assert not (ds.vk[1:] & below[:-1]).any()
    assert (np.abs(ds.icp_values) <= 100.0).all()
    assert set(np.unique(ds.labels)) == {0, 1, 2, 3}


@pytest.mark.parametrize("name", list(PROFILES))
def test_conflict_ratio_in_band(name):
    # smaller than the acceptance run, so the band is widened by 1 point
    ds = simulate(synthesize_entities(5, seed=0), name, 100_000, seed=1)
    lo, hi = PROFILES[name].expected_conflict_ratio
    assert lo - 1.0 <= 100 * ds.conflict_ratio <= hi + 1.0
    assert ds.conflict_ratio < 0.10


def test_medium_mix_close_to_target():
    ds = simulate(synthesize_entities(5, seed=0), "medium", 100_000, seed=2)
    mix = ds.conflict_mix()
    for lab, want in zip(("Direct", "Indirect", "Implicit"), (0.3, 0.5, 0.2)):
        assert want / 2 <= mix[lab] <= want * 2, mix


@settings(max_examples=15, deadline=None)
@given(
    m=st.integers(1, 8),
    profile=st.sampled_from(sorted(PROFILES)),
    steps=st.integers(1, 400),
    seed=st.integers(0, 10_000),
    sigma=st.floats(5.0, 200.0),
)
def test_property_generated_rows(m, profile, steps, seed, sigma):
    model = synthesize_entities(m, seed=seed)
    assert validate_model(model) == []
    ds = simulate(model, profile, steps, sigma=sigma, seed=seed)
    assert len(ds) == steps
    assert ((ds.kpi_values > 0) & (ds.kpi_values <= 1)).all()
    labels, _ = annotate_dataset(ds, model.mappings)
    assert np.array_equal(labels, ds.labels)


def test_csv_roundtrip(tmp_path, small_ds):
    ds = small_ds.subset(np.arange(500))
    path = tmp_path / "rows.csv"
    meta = ds.to_csv(path, note="x")
    assert meta == meta_path_for(path) and meta.exists()
    back = Dataset.from_csv(path)
    assert back.model == ds.model
    for f in ("t", "rcp_xapp", "rcp_icp", "icp_values", "kpi_values", "vk", "labels"):
        assert np.array_equal(getattr(back, f), getattr(ds, f)), f
    assert np.array_equal(back.sla, np.asarray(ds.sla))
    assert back.meta["note"] == "x"


def test_csv_header_mismatch(tmp_path, small_ds):
    path = tmp_path / "rows.csv"
    small_ds.subset(np.arange(5)).to_csv(path)
    lines = path.read_text().splitlines()
    lines[0] = lines[0].replace("k_0,", "kk,")
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ValueError, match="header"):
        Dataset.from_csv(path)


def test_csv_needs_sidecar_or_model(tmp_path, small_ds):
    path = tmp_path / "rows.csv"
    small_ds.subset(np.arange(5)).to_csv(path)
    meta_path_for(path).unlink()
    with pytest.raises(FileNotFoundError):
        Dataset.from_csv(path)
    assert len(Dataset.from_csv(path, model=small_ds.model)) == 5


def test_record_view(small_ds):
    i = int(np.flatnonzero(small_ds.labels == ConflictLabel.DIRECT)[0])
    rec = small_ds.record(i)
    assert rec.label is ConflictLabel.DIRECT
    assert rec.vk == tuple(np.flatnonzero(small_ds.vk[i]))
