import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=30, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=300, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def builtin_weights():
    from rwlab.weights import log_weight, power_tail_weight, standard

    return {
        "std0": standard(0.0),
        "std1": standard(1.0),
        "log2": log_weight(2.0),
        "powtail": power_tail_weight(standard(0.0), 0.5),
    }
