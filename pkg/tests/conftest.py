import numpy as np
import pytest

from leadaug import MultiLeadRecord


def random_record(rng, n_leads=4, n_samples=64, *, record_id="rec",
                  sample_rate=100.0, lead_names=None):
    if lead_names is None:
        lead_names = tuple(f"L{i}" for i in range(n_leads))
    return MultiLeadRecord(
        leads=rng.normal(size=(n_leads, n_samples)),
        sample_rate=sample_rate,
        lead_names=lead_names,
        record_id=record_id,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
