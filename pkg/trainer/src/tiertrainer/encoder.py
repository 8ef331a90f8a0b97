"""Optional transformer-encoder backbone (requires torch).

A small explicit encoder over hashed token ids with a linear classification
head. Base weights freeze after initialization; only low-rank adapters on
the feedforward projections, the structural-feature projection, and the
head train. The layers are written out rather than borrowed from
nn.TransformerEncoderLayer so no fused fast path can bypass the adapters.
Not required by any acceptance criterion; import fails cleanly without
torch.
"""

from __future__ import annotations

import re
import zlib

import numpy as np

try:
    import torch
    from torch import nn
except ImportError as _exc:  # pragma: no cover - exercised only without torch
    raise ImportError("the encoder backbone requires torch; pip install torch") from _exc

from .backbone import BackboneSpec
from .data import TrainerExample, pair_index

_TOKEN = re.compile(r"[a-z0-9_]+")
MAX_TOKENS = 64


def token_ids(text: str, vocab: int, max_tokens: int = MAX_TOKENS) -> list[int]:
    ids = [zlib.crc32(t.encode()) % (vocab - 1) + 1 for t in _TOKEN.findall(text.lower())]
    return ids[:max_tokens] or [0]


class LoRALinear(nn.Module):
    """Frozen linear layer plus a trainable low-rank delta."""

    def __init__(self, base: nn.Linear, rank: int):
        super().__init__()
        self.base = base
        self.down = nn.Linear(base.in_features, rank, bias=False)
        self.up = nn.Linear(rank, base.out_features, bias=False)
        nn.init.normal_(self.down.weight, std=0.01)
        nn.init.zeros_(self.up.weight)

    def forward(self, x):
        return self.base(x) + self.up(self.down(x))


class EncoderLayer(nn.Module):
    def __init__(self, d_model: int, n_heads: int, rank: int):
        super().__init__()
        self.attn = nn.MultiheadAttention(d_model, n_heads, batch_first=True)
        self.norm1 = nn.LayerNorm(d_model)
        self.ff_in = LoRALinear(nn.Linear(d_model, 2 * d_model), rank)
        self.ff_out = LoRALinear(nn.Linear(2 * d_model, d_model), rank)
        self.norm2 = nn.LayerNorm(d_model)

    def forward(self, x, pad_mask):
        attended, _ = self.attn(x, x, x, key_padding_mask=pad_mask, need_weights=False)
        x = self.norm1(x + attended)
        fed = self.ff_out(torch.relu(self.ff_in(x)))
        return self.norm2(x + fed)


class EncoderBackbone(nn.Module):
    def __init__(self, spec: BackboneSpec, n_outputs: int = 3, seed: int = 42,
                 d_model: int = 64, n_layers: int = 2, n_heads: int = 4):
        super().__init__()
        torch.manual_seed(seed)
        self.spec = spec
        self.vocab = max(spec.buckets, 64)
        self.embed = nn.Embedding(self.vocab, d_model)
        self.layers = nn.ModuleList(
            EncoderLayer(d_model, n_heads, spec.adapter_rank) for _ in range(n_layers)
        )
        self.structural = nn.Linear(2, d_model)
        self.head = nn.Linear(d_model, n_outputs)
        for p in self.parameters():
            p.requires_grad_(False)
        for name, p in self.named_parameters():
            if ".down." in name or ".up." in name or name.startswith(("head", "structural")):
                p.requires_grad_(True)

    def forward(self, ids: torch.Tensor, mask: torch.Tensor, counts: torch.Tensor):
        x = self.embed(ids)
        for layer in self.layers:
            x = layer(x, pad_mask=~mask)
        mask_f = mask.unsqueeze(-1).float()
        pooled = (x * mask_f).sum(1) / mask_f.sum(1).clamp(min=1.0)
        return self.head(pooled + self.structural(counts))

    def batch(self, examples: list[TrainerExample]):
        ids_list = [token_ids(e.text, self.vocab) for e in examples]
        width = max(len(ids) for ids in ids_list)
        ids = torch.zeros(len(examples), width, dtype=torch.long)
        mask = torch.zeros(len(examples), width, dtype=torch.bool)
        for row, seq in enumerate(ids_list):
            ids[row, : len(seq)] = torch.tensor(seq)
            mask[row, : len(seq)] = True
        counts = torch.tensor(
            [[float(e.n_tables), float(e.n_columns)] for e in examples]
        )
        return ids, mask, counts


def train_encoder(
    examples: list[TrainerExample],
    mode: str = "multiclass",
    spec: BackboneSpec = BackboneSpec(kind="encoder"),
    target_tier_index: int | None = None,
    margin: float = 1.0,
    beta: float = 0.1,
    epochs: int = 3,
    seed: int = 42,
) -> EncoderBackbone:
    """Train the adapter-equipped encoder with one of the four losses."""
    n_outputs = 1 if mode == "binary" else 3
    model = EncoderBackbone(spec, n_outputs=n_outputs, seed=seed)
    ids, mask, counts = model.batch(examples)
    labels = torch.tensor([e.label for e in examples])
    pairs = pair_index(examples)
    reference = None
    if mode == "dpo":
        with torch.no_grad():
            reference = model(ids, mask, counts).detach()
    params = [p for p in model.parameters() if p.requires_grad]
    optimizer = torch.optim.Adam(params, lr=spec.learning_rate)

    for _ in range(epochs):
        optimizer.zero_grad()
        logits = model(ids, mask, counts)
        if mode == "multiclass":
            loss = nn.functional.cross_entropy(logits, labels)
        elif mode == "binary":
            if target_tier_index is None:
                raise ValueError("binary mode needs target_tier_index")
            targets = (labels <= target_tier_index).float()
            loss = nn.functional.binary_cross_entropy_with_logits(logits[:, 0], targets)
        elif mode == "rank":
            rows = torch.tensor([r for r, _, _ in pairs])
            pref = torch.tensor([p for _, p, _ in pairs])
            rej = torch.tensor([r for _, _, r in pairs])
            slack = margin - logits[rows, pref] + logits[rows, rej]
            loss = torch.clamp(slack, min=0.0).mean()
        elif mode == "dpo":
            rows = torch.tensor([r for r, _, _ in pairs])
            pref = torch.tensor([p for _, p, _ in pairs])
            rej = torch.tensor([r for _, _, r in pairs])
            h = beta * (
                (logits[rows, pref] - logits[rows, rej])
                - (reference[rows, pref] - reference[rows, rej])
            )
            loss = nn.functional.softplus(-h).mean()
        else:
            raise ValueError(f"unknown mode {mode!r}")
        loss.backward()
        optimizer.step()
    model.eval()
    return model


def encoder_logits(model: EncoderBackbone, examples: list[TrainerExample]) -> np.ndarray:
    with torch.no_grad():
        ids, mask, counts = model.batch(examples)
        return model(ids, mask, counts).numpy()
