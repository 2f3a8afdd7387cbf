import pytest
import torch
from tokenizers import Tokenizer, models, pre_tokenizers, trainers
from transformers import BertConfig, BertModel, PreTrainedTokenizerFast

CORPUS_TEXT = """\
saḥ <rāja-putra-gṛham> gacchati
<<rāja-putra>T6-gṛham>T6

<upa-gaṅgam> vasati muniḥ
<upa-gaṅgam>AV

<nīla-megha-varṇaḥ> <bala-bandhu> paśyati
<<nīla-megha>T6-varṇaḥ>BV
<bala-bandhu>T6
"""


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    """A saved random-weight transformer plus a character-level tokenizer.

    The tokenizer is trained on bare characters so real words split into
    several subtokens, exercising the alignment and pooling paths.
    """
    directory = tmp_path_factory.mktemp("tiny-model")
    tok = Tokenizer(models.BPE(unk_token="[UNK]"))
    tok.pre_tokenizer = pre_tokenizers.Whitespace()
    trainer = trainers.BpeTrainer(
        vocab_size=8,  # forced below the alphabet size: merges never fire
        special_tokens=["[UNK]", "[PAD]"],
    )
    alphabet = "saḥ rāja putra gṛham gacchati upa gaṅgam vasati muniḥ nīla megha varṇaḥ bala bandhu paśyati < >"
    tok.train_from_iterator([" ".join(alphabet)], trainer)
    fast = PreTrainedTokenizerFast(
        tokenizer_object=tok, unk_token="[UNK]", pad_token="[PAD]"
    )
    torch.manual_seed(1234)
    config = BertConfig(
        vocab_size=fast.vocab_size + 4,
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=48,
        max_position_embeddings=256,
    )
    model = BertModel(config)
    model.eval()
    fast.save_pretrained(directory)
    model.save_pretrained(directory)
    return str(directory)


@pytest.fixture
def corpus_file(tmp_path):
    path = tmp_path / "corpus.txt"
    path.write_text(CORPUS_TEXT, encoding="utf-8")
    return path
