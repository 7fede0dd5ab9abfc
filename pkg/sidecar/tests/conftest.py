import json

import pytest
import torch
from transformers import BertConfig, BertForMaskedLM

from precog_sidecar.service import MaskedLM, SidecarConfig, create_app

TINY_VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "the", "cat", "sat", "on", "mat", "paris", "capital", "of", "france",
    "is", ".", "hello", "world", "big", "small", "un", "##aff", "##able",
]


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """A deterministic, randomly initialized masked LM saved to disk; loads
    without any network access. The tokenizer ships as the classic
    vocab.txt + tokenizer_config.json layout."""
    directory = tmp_path_factory.mktemp("tiny-mlm")
    (directory / "vocab.txt").write_text("\n".join(TINY_VOCAB) + "\n")
    (directory / "tokenizer_config.json").write_text(json.dumps(
        {"tokenizer_class": "BertTokenizer", "do_lower_case": True}))
    config = BertConfig(vocab_size=len(TINY_VOCAB), hidden_size=32,
                        num_hidden_layers=2, num_attention_heads=2,
                        intermediate_size=64, max_position_embeddings=64)
    torch.manual_seed(0)
    model = BertForMaskedLM(config)
    model.save_pretrained(directory)
    return str(directory)


@pytest.fixture(scope="session")
def tiny_config(tiny_model_dir):
    return SidecarConfig(model_id="tiny-mlm", max_length=48, device="cpu")


@pytest.fixture(scope="session")
def app(tiny_config, tiny_model_dir):
    def loader(config):
        return MaskedLM(config.model_id, device=config.device,
                        local_path=tiny_model_dir)

    return create_app(tiny_config, loader=loader, eager=True)


@pytest.fixture
def client(app):
    from fastapi.testclient import TestClient

    with TestClient(app) as test_client:
        yield test_client
