"""Toolkit for aligning protein structure-model and language-model embeddings."""

from .embedding_store import (
    DatasetSplit,
    EmbeddingSet,
    PairedDataset,
    pair_datasets,
    read_embedding_file,
    split_dataset,
    write_embedding_file,
)
from .projection_head import (
    HeadConfig,
    ProjectionHead,
    forward,
    init_head,
    load_head,
    preset_configs,
    save_head,
)
from .trainer import ReweightSpec, TrainConfig, TrainHistory, batch_loss, train_pair
from .alignment_metrics import (
    AlignmentReport,
    correlation_matrix,
    group_summary,
    model_pair_score,
    ols_fit,
    pearson,
    per_protein_scores,
)
from .protein_meta import (
    ProteinRecord,
    category_label,
    describe_protein,
    parse_fasta,
    rank_rarity,
)
from .retrieval import (
    RetrievalIndex,
    RetrievalResult,
    augment_input,
    build_index,
    query_topk,
    query_topk_by_id,
)
from .text_metrics import bleu, rouge_l, score_corpus, tokenize
from .synthetic import gen_synthetic

__version__ = "0.1.0"
