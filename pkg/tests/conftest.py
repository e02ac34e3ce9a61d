import pytest

from walklab.models import ModelSpec, build_model


@pytest.fixture(scope="session")
def tree2():
    return build_model(ModelSpec("tree", b=2))


@pytest.fixture(scope="session")
def fixed_end2():
    return build_model(ModelSpec("fixed_end_tree", b=2))


@pytest.fixture(scope="session")
def grandparent2():
    return build_model(ModelSpec("grandparent", b=2))


@pytest.fixture(scope="session")
def dl23():
    return build_model(ModelSpec("diestel_leader", q=2, r=3))
