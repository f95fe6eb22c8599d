import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from biaslens import corpus


def record(rec_id: str, rows, modality=None) -> corpus.EmbeddingRecord:
    return corpus.EmbeddingRecord(rec_id, np.asarray(rows, dtype=np.float32),
                                  modality=modality)


def single(rec_id: str, vec, modality=None) -> corpus.EmbeddingRecord:
    return record(rec_id, [list(vec)], modality=modality)


@pytest.fixture
def tiny_world():
    """Two-label, two-concept annotated sets plus a consistent manifest."""
    from biaslens import synth
    spec = synth.ClusterSpec(
        labels=(("th", "THA"), ("sw", "KEN")),
        concepts=("food", "dance"),
        points_per_label=2,
        dim=8,
        seed=123,
        alignment=1.0,
    )
    return synth.gen_embedding_world(spec)
