from __future__ import annotations

import pytest

from helpers import toy_revisions


@pytest.fixture
def toy():
    return toy_revisions()
