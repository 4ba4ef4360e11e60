import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURE = Path(__file__).resolve().parents[1] / "src" / "semtl" / "fixtures" / "uk_ie"


@pytest.fixture(scope="session")
def uk_ie():
    from semtl.domain import SemanticLearningTask, load_lso_bundle

    src = load_lso_bundle(FIXTURE / "source")
    tgt = load_lso_bundle(FIXTURE / "target")
    return SemanticLearningTask.from_domain(src), SemanticLearningTask.from_domain(tgt)
