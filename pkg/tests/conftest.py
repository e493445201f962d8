import pytest

from trojscan.synthfleet import FleetConfig, gen_fleet


@pytest.fixture(scope="session")
def fleet8(tmp_path_factory):
    """Small shared fleet: 8 models (4 benign, 2 patch, 2 filter), 3 classes."""
    out = tmp_path_factory.mktemp("fleet") / "f8"
    config = FleetConfig(models=8, classes=3, per_class=2, height=48, width=48)
    manifest = gen_fleet(config, seed=7, out_dir=out)
    return out, config, manifest
