"""Turn FASTA metadata into description text and rarity labels.

Parses a small FASTA snippet, renders the fixed description template for
each protein, and ranks the proteins by how common their
"molecule, organism" category is.
"""

from modal_align import category_label, describe_protein, parse_fasta, rank_rarity

FASTA = """\
>3PYK_1|Chains A, B|Carbonic anhydrase|Homo sapiens (9606)
MSHHWGYGKHNGPEHWHKDFPIAKGERQSPVDIDTHTAKYDPSLKPLSVSYDQATSLRIL
>3I1A_1|Chain A|Spectinomycin phosphotransferase|Legionella pneumophila (446)
MKLNELVNSLQGELIPFE
>1AAA_A mol:protein length:14  Carbonic anhydrase organism:Homo sapiens
VLSPADKTNVKAAW
"""


def main():
    records = parse_fasta(FASTA)
    for rec in records:
        print(f"-- {rec.protein_id} --")
        print(describe_protein(rec))
        print()

    table = rank_rarity(records, top_n=1)
    for rec in records:
        label = category_label(rec.molecule_name, rec.organism)
        count = table.categories[label]["count"]
        print(f"{rec.protein_id}: category={label!r} members={count} "
              f"-> {table.label_of(rec.protein_id)}")


if __name__ == "__main__":
    main()
