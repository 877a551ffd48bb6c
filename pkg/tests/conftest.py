import pytest

from vrlab import SensorSpec, build, classify, observe


@pytest.fixture(scope="session")
def default_sensor():
    return SensorSpec(sample_period=0.01, quantum=1e-3, duration=60.0)


@pytest.fixture(scope="session")
def observed(default_sensor):
    """Cache of (calculator, trajectory) per catalog id at default settings."""
    cache = {}

    def get(calculator_id):
        if calculator_id not in cache:
            calc = build(calculator_id)
            cache[calculator_id] = (calc, observe(calc, default_sensor))
        return cache[calculator_id]

    return get


@pytest.fixture(scope="session")
def classified(observed):
    """Cache of passive verdicts per catalog id at default settings."""
    cache = {}

    def get(calculator_id):
        if calculator_id not in cache:
            calc, traj = observed(calculator_id)
            cache[calculator_id] = classify(traj, calc.declaration)
        return cache[calculator_id]

    return get
