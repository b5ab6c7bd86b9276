"""Text-side extraction: final-layer last-token hidden states."""

from __future__ import annotations

import numpy as np

from .emb1 import write_emb1
from .errors import ModelLoadFailure, TokenizationFailure
from .jobs import ExtractionJob, read_manifest


def _load_model(identifier: str):
    try:
        import torch
        from transformers import AutoModel, AutoTokenizer
    except ImportError as exc:
        raise ModelLoadFailure(f"transformers/torch unavailable: {exc}") from exc
    try:
        tokenizer = AutoTokenizer.from_pretrained(identifier)
        model = AutoModel.from_pretrained(identifier)
    except Exception as exc:
        raise ModelLoadFailure(f"cannot load {identifier!r}: {exc}") from exc
    model.eval()
    return torch, tokenizer, model


def extract_text_embeddings(job: ExtractionJob) -> dict:
    """Run the model over each description and write one vector per protein.

    The vector is the final hidden layer's representation of the last
    input token, up-converted to float32 on write.
    """
    rows = read_manifest(job.manifest_path)
    torch, tokenizer, model = _load_model(job.model)
    hidden = int(model.config.hidden_size)
    declared = job.declared_dim
    if declared is not None and declared != hidden:
        raise ModelLoadFailure(
            f"model {job.model!r} has hidden size {hidden}, expected {declared}"
        )
    records: dict[str, np.ndarray] = {}
    with torch.no_grad():
        for row in rows:
            text = row.get("text") or row.get("description") or ""
            if not text.strip():
                raise TokenizationFailure(f"empty description for {row['id']!r}")
            try:
                encoded = tokenizer(text, return_tensors="pt", truncation=True)
            except Exception as exc:
                raise TokenizationFailure(f"{row['id']!r}: {exc}") from exc
            if encoded["input_ids"].shape[1] == 0:
                raise TokenizationFailure(f"no tokens for {row['id']!r}")
            out = model(**encoded)
            vec = out.last_hidden_state[0, -1]
            records[row["id"]] = vec.to(torch.float32).cpu().numpy()
    write_emb1(records, hidden, job.out_path, model_name=job.model, modality="text")
    return {"count": len(records), "dim": hidden}
