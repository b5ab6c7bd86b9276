"""Retrieval-augmented input text for a query protein.

Trains heads on a small fixture, indexes the projected training proteins,
retrieves the top-3 neighbors of a test protein, and prepends their
descriptions to the query's own description.
"""

from modal_align import (
    HeadConfig,
    TrainConfig,
    augment_input,
    build_index,
    gen_synthetic,
    init_head,
    pair_datasets,
    query_topk_by_id,
    split_dataset,
    train_pair,
)


def main():
    g_set, t_set = gen_synthetic(
        n=200, latent_dim=16, g_dim=32, t_dim=48, noise=0.1, seed=7
    )
    paired = pair_datasets(g_set, t_set)
    split = split_dataset(paired, seed=7)

    g_head = init_head(HeadConfig(32, 48, hidden_dims=(), seed=1))
    t_head = init_head(HeadConfig(48, 48, hidden_dims=(), seed=2))
    g_head, t_head, _ = train_pair(
        paired, split, g_head, t_head, TrainConfig(epochs=10, batch_size=16)
    )

    index = build_index(split.train, g_head, paired)
    query = split.test[0]
    result = query_topk_by_id(index, paired, g_head, query, k=3)
    print(f"query {query}, top-3 neighbors:")
    for pid, cos in result.neighbors:
        print(f"  {pid}  cosine={cos:+.4f}")

    descriptions = {pid: f"Description of {pid}." for pid in paired.ids}
    augmented = augment_input(result, descriptions, descriptions[query])
    print("\naugmented input:")
    print(augmented)


if __name__ == "__main__":
    main()
