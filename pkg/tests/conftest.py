import pytest

from affine_kit import (brownian_model, chain_model, interval_drift_model,
                        wishart_model)


@pytest.fixture(scope="session")
def brownian():
    return brownian_model()


@pytest.fixture(scope="session")
def wishart1():
    return wishart_model(1, 1)


@pytest.fixture(scope="session")
def wishart2():
    return wishart_model(2, 1)


@pytest.fixture(scope="session")
def interval():
    return interval_drift_model()


@pytest.fixture(scope="session")
def chain2():
    return chain_model(2)


@pytest.fixture()
def model_file(tmp_path):
    """Writes a model to JSON under tmp_path; returns the path as str."""
    def write(model, name="model.json"):
        path = tmp_path / name
        model.to_json(str(path))
        return str(path)
    return write
