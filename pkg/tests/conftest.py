import json
import sysconfig
from pathlib import Path

import numpy as np
import pytest

from sparseglu.container import save_container_file
from sparseglu.ffn import Activation
from sparseglu.model import ModelManifest, TinyLM, generate_weights


# Verdict lines appended by the acceptance gate, echoed after the test run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def corpus_bytes(size: int) -> bytes:
    """Deterministic text corpus: a slice of a stdlib source file."""
    src = Path(sysconfig.get_paths()["stdlib"]) / "argparse.py"
    data = src.read_bytes()
    assert len(data) >= size
    return data[:size]


@pytest.fixture(scope="session")
def tiny_manifest() -> ModelManifest:
    return ModelManifest(
        n_layers=2,
        hidden_dim=32,
        intermediate_dim=64,
        n_heads=2,
        vocab_size=256,
        activation=Activation.SILU,
        norm_eps=1e-6,
        max_seq_len=128,
    )


@pytest.fixture(scope="session")
def tiny_model(tiny_manifest) -> TinyLM:
    return TinyLM(tiny_manifest, generate_weights(tiny_manifest, 0))


@pytest.fixture(scope="session")
def corpus_4k() -> np.ndarray:
    return np.frombuffer(corpus_bytes(4096), dtype=np.uint8).astype(np.int64)


@pytest.fixture(scope="session")
def model_files(tmp_path_factory, tiny_manifest):
    """On-disk model container + manifest + 1 KiB corpus for CLI tests."""
    root = tmp_path_factory.mktemp("model")
    manifest_path = root / "manifest.json"
    manifest_path.write_text(tiny_manifest.to_json())
    container_path = root / "model.gspt"
    save_container_file(generate_weights(tiny_manifest, 0), container_path)
    data_path = root / "corpus.bin"
    data_path.write_bytes(corpus_bytes(1024))
    return {
        "manifest": manifest_path,
        "container": container_path,
        "data": data_path,
        "manifest_obj": tiny_manifest,
    }
