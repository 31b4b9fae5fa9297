import os
import pathlib

import pytest

HERE = pathlib.Path(__file__).resolve().parent
DATA = HERE.parent / "data"


@pytest.fixture
def data():
    return DATA


@pytest.fixture
def cli():
    path = os.environ.get("OBNN_CLI")
    if not path:
        pytest.skip("OBNN_CLI not set")
    return path
