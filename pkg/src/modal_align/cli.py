"""Command-line entry point: ingest, train, evaluate, analyze, retrieve, score.

Exit codes: 0 success, 1 validation/user error, 2 internal error. Errors are
emitted as one JSON object on stderr: {"error": <code>, "message": <text>}.

Environment:
    MODAL_ALIGN_THREADS        0 = auto; any other value caps BLAS threads
    MODAL_ALIGN_SUMMARIZER_URL optional remote summarizer for `describe`
"""

from __future__ import annotations

import os

_threads = os.environ.get("MODAL_ALIGN_THREADS", "1")
if _threads not in ("", "0"):
    # Pin BLAS thread pools before numpy loads so outputs are reproducible
    # regardless of the requested worker count.
    for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, "1")

import argparse
import csv
import json
import sys
import urllib.request

import numpy as np

from . import __version__
from .alignment_metrics import group_summary, model_pair_score, ols_fit, pearson, per_protein_scores
from .embedding_store import (
    DatasetSplit,
    PairedDataset,
    pair_datasets,
    read_embedding_file,
    split_dataset,
    write_embedding_file,
)
from .errors import ConfigMismatch, InternalError, ModalAlignError, ValidationError
from .projection_head import (
    HeadConfig,
    init_head,
    load_head,
    preset_configs,
    save_head,
)
from .protein_meta import describe_protein, parse_fasta, rank_rarity
from .retrieval import augment_input, build_index, query_topk_by_id
from .synthetic import gen_synthetic
from .text_metrics import score_corpus
from .trainer import ReweightSpec, TrainConfig, pair_gradients, pair_loss, train_pair

SUMMARIZER_PROMPT = (
    "Summarize the following protein knowledge, start with the sentence: "
    "'The protein structure {protein_id} has a sequence length of: "
    "{sequence_length} amino acids.'\n"
    "Here is more information about {protein_id}:\n{fasta_text}"
)


# --- shared helpers -----------------------------------------------------------

def _load_pair(manifest_path: str) -> tuple[PairedDataset, DatasetSplit]:
    try:
        with open(manifest_path) as fh:
            manifest = json.load(fh)
    except FileNotFoundError as exc:
        raise ValidationError(f"manifest not found: {manifest_path}") from exc
    base = os.path.dirname(os.path.abspath(manifest_path))

    def resolve(p):
        return p if os.path.isabs(p) else os.path.join(base, p)

    graph = read_embedding_file(resolve(manifest["graph"]["path"]), modality="graph")
    text = read_embedding_file(resolve(manifest["text"]["path"]), modality="text")
    paired = pair_datasets(graph, text)
    s = manifest["split"]
    split = DatasetSplit(
        train=s["train"], validation=s["validation"], test=s["test"], seed=s["seed"]
    )
    return paired, split


def _split_ids(split: DatasetSplit, name: str) -> list[str]:
    try:
        return {"train": split.train, "validation": split.validation, "test": split.test}[name]
    except KeyError:
        raise ValidationError(f"unknown split {name!r}") from None


def _read_jsonl(path: str) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                obj = json.loads(line)
                out[obj["id"]] = obj.get("text") or obj.get("description", "")
    return out


def _write_text(path: str | None, content: str):
    if path:
        with open(path, "w") as fh:
            fh.write(content)
    else:
        sys.stdout.write(content)


# --- subcommands ----------------------------------------------------------------

def cmd_ingest(args) -> int:
    graph = read_embedding_file(args.graph, modality="graph")
    text = read_embedding_file(args.text, modality="text")
    paired = pair_datasets(graph, text)
    split = split_dataset(paired, args.seed)
    os.makedirs(args.out, exist_ok=True)
    manifest = {
        "graph": {
            "path": os.path.abspath(args.graph),
            "model_name": graph.model_name,
            "dim": graph.dim,
        },
        "text": {
            "path": os.path.abspath(args.text),
            "model_name": text.model_name,
            "dim": text.dim,
        },
        "ids": paired.ids,
        "split": {
            "seed": split.seed,
            "train": split.train,
            "validation": split.validation,
            "test": split.test,
        },
    }
    with open(os.path.join(args.out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    with open(os.path.join(args.out, "splits.json"), "w") as fh:
        json.dump(manifest["split"], fh, indent=2)
        fh.write("\n")
    print(json.dumps({"ids": len(paired.ids), "train": len(split.train),
                      "validation": len(split.validation), "test": len(split.test)}))
    return 0


def _remote_describe(url: str, record) -> str:
    payload = json.dumps({
        "system_prompt": (
            "You are a biologist with expertise in protein sequence analysis. "
            "Your task is to summarize complex protein sequence data into two or "
            "three sentences that highlight key features such as molecule type, "
            "chains, structural motifs, organism, etc."
        ),
        "user_query": SUMMARIZER_PROMPT.format(
            protein_id=record.protein_id,
            sequence_length=record.sequence_length,
            fasta_text=describe_protein(record),
        ),
    }).encode()
    req = urllib.request.Request(url, data=payload, headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(req) as resp:
        return resp.read().decode("utf-8").strip()


def cmd_describe(args) -> int:
    with open(args.fasta) as fh:
        records = parse_fasta(fh.read())
    summarizer = os.environ.get("MODAL_ALIGN_SUMMARIZER_URL")
    lines = []
    meta_rows = []
    for rec in records:
        desc = _remote_describe(summarizer, rec) if summarizer else describe_protein(rec)
        lines.append(json.dumps({"id": rec.protein_id, "description": desc}))
        meta_rows.append((rec.protein_id, rec.sequence_length, len(rec.chains)))
    _write_text(args.out, "\n".join(lines) + "\n")
    if args.meta_out:
        with open(args.meta_out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "sequence_length", "chain_count"])
            writer.writerows(meta_rows)
    return 0


def cmd_rarity(args) -> int:
    records = []
    for name in sorted(os.listdir(args.fasta_dir)):
        if name.endswith((".fasta", ".fa")):
            with open(os.path.join(args.fasta_dir, name)) as fh:
                records.extend(parse_fasta(fh.read()))
    if not records:
        raise ValidationError(f"no FASTA files with records under {args.fasta_dir}")
    table = rank_rarity(records, top_n=args.top)
    out = ["id,category,count,label"]
    for rec in records:
        from .protein_meta import category_label

        label = category_label(rec.molecule_name, rec.organism)
        count = table.categories.get(label, {"count": 0})["count"]
        out.append(f"{rec.protein_id},\"{label}\",{count},{table.label_of(rec.protein_id)}")
    _write_text(args.out, "\n".join(out) + "\n")
    return 0


def _read_rare_ids(path: str) -> frozenset[str]:
    ids = []
    with open(path) as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if not rows:
        return frozenset()
    header = [c.strip().lower() for c in rows[0]]
    if "label" in header:
        id_col, label_col = header.index("id"), header.index("label")
        ids = [row[id_col] for row in rows[1:] if row[label_col].strip() == "rare"]
    else:
        start = 1 if header[0] == "id" else 0
        ids = [row[0] for row in rows[start:]]
    return frozenset(ids)


def cmd_train(args) -> int:
    paired, split = _load_pair(args.pair)
    if args.preset:
        try:
            gdm, llm = args.preset.split(":", 1)
        except ValueError:
            raise ValidationError("--preset must look like <gdm>:<llm>") from None
        g_cfg, t_cfg = preset_configs(gdm, llm, args.layers, seed=args.seed)
    else:
        hidden = tuple(int(d) for d in args.hidden.split(",")) if args.hidden else ()
        if len(hidden) != args.layers - 1:
            raise ValidationError(
                f"--layers {args.layers} needs {args.layers - 1} hidden dims, got {len(hidden)}"
            )
        g_cfg = HeadConfig(paired.graph.dim, paired.text.dim, hidden, seed=args.seed)
        t_cfg = HeadConfig(paired.text.dim, paired.text.dim, (), seed=args.seed + 1)

    reweight = None
    if args.reweight:
        reweight = ReweightSpec(rare_ids=_read_rare_ids(args.reweight), factor=args.factor)
    cfg = TrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch,
        temperature=args.tau,
        seed=args.seed,
        reweight=reweight,
    )
    g_head, t_head, history = train_pair(paired, split, init_head(g_cfg), init_head(t_cfg), cfg)
    os.makedirs(args.out, exist_ok=True)
    save_head(g_head, os.path.join(args.out, "g_head.phd1"))
    save_head(t_head, os.path.join(args.out, "t_head.phd1"))
    with open(os.path.join(args.out, "history.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_loss", "checkpointed"])
        for epoch, (tr, va, ck) in enumerate(
            zip(history.train_loss, history.val_loss, history.checkpointed), start=1
        ):
            writer.writerow([epoch, repr(tr), repr(va), int(ck)])
    final = {"epochs": len(history.train_loss)}
    if history.val_loss:
        final["best_val_loss"] = min(history.val_loss)
    print(json.dumps(final))
    return 0


def cmd_eval(args) -> int:
    paired, split = _load_pair(args.pair)
    g_head, t_head = load_head(args.gh), load_head(args.th)
    report = model_pair_score(_split_ids(split, args.split), g_head, t_head, paired)
    print(json.dumps({
        "positive": report.positive_score,
        "negative": report.negative_score,
        "alignment": report.alignment,
        "N": report.n,
    }))
    return 0


def cmd_per_protein(args) -> int:
    paired, split = _load_pair(args.pair)
    g_head, t_head = load_head(args.gh), load_head(args.th)
    scores = per_protein_scores(_split_ids(split, args.split), g_head, t_head, paired)
    lines = ["id,score"] + [f"{pid},{repr(score)}" for pid, score in scores]
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def _read_scores_csv(path: str) -> list[tuple[str, float]]:
    with open(path) as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    return [(row[0], float(row[1])) for row in rows[1:] if row]


def cmd_correlate(args) -> int:
    from .alignment_metrics import correlation_matrix

    score_lists = {}
    for path in args.scores:
        label = os.path.splitext(os.path.basename(path))[0]
        score_lists[label] = _read_scores_csv(path)
    labels, mat = correlation_matrix(score_lists)
    lines = ["," + ",".join(labels)]
    for i, label in enumerate(labels):
        lines.append(label + "," + ",".join(repr(float(v)) for v in mat[i]))
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def _read_meta_csv(path: str) -> dict[str, dict]:
    with open(path) as fh:
        reader = csv.DictReader(fh)
        return {row["id"]: row for row in reader}


def cmd_analyze(args) -> int:
    scores = _read_scores_csv(args.scores)
    meta = _read_meta_csv(args.meta)
    missing = [pid for pid, _ in scores if pid not in meta]
    if missing:
        raise ValidationError(f"metadata missing for {len(missing)} proteins, e.g. {missing[0]!r}")
    if args.what == "length":
        xs = [float(meta[pid]["sequence_length"]) for pid, _ in scores]
        ys = [score for _, score in scores]
        fit = ols_fit(xs, ys)
        print(json.dumps({
            "slope": fit.slope,
            "intercept": fit.intercept,
            "pearson_r": fit.pearson_r,
            "n": fit.n,
        }))
    else:
        summary = group_summary(
            scores,
            lambda pid: "single" if int(meta[pid]["chain_count"]) == 1 else "multiple",
        )
        print(json.dumps(summary))
    return 0


def cmd_retrieve(args) -> int:
    manifest = os.path.join(args.index, "manifest.json")
    paired, split = _load_pair(manifest)
    g_head = load_head(os.path.join(args.index, "g_head.phd1"))
    descriptions = _read_jsonl(args.descriptions)
    index = build_index(split.train, g_head, paired)
    result = query_topk_by_id(index, paired, g_head, args.query_id, args.k)
    original = descriptions.get(args.query_id, "")
    result.augmented_text = augment_input(result, descriptions, original)
    print(json.dumps({
        "query_id": result.query_id,
        "neighbors": [{"id": pid, "cosine": cos} for pid, cos in result.neighbors],
        "augmented_text": result.augmented_text,
    }))
    return 0


def cmd_textscore(args) -> int:
    candidates = _read_jsonl(args.candidates)
    references = _read_jsonl(args.references)
    print(json.dumps(score_corpus(candidates, references)))
    return 0


def cmd_gen_synthetic(args) -> int:
    g_set, t_set = gen_synthetic(
        n=args.n,
        latent_dim=args.latent,
        g_dim=args.g_dim,
        t_dim=args.t_dim,
        noise=args.noise,
        seed=args.seed,
        identity=args.identity,
    )
    os.makedirs(args.out, exist_ok=True)
    write_embedding_file(g_set, os.path.join(args.out, "graph.emb"))
    write_embedding_file(t_set, os.path.join(args.out, "text.emb"))
    print(json.dumps({"n": args.n, "g_dim": args.g_dim, "t_dim": args.t_dim}))
    return 0


def cmd_gradcheck(args) -> int:
    rng = np.random.default_rng(args.seed)
    max_rel = 0.0
    eps = 1e-4
    for _ in range(args.instances):
        out_dim = int(rng.integers(2, 17))
        n_hidden = int(rng.integers(0, 3))
        hidden = tuple(int(rng.integers(2, 17)) for _ in range(n_hidden))
        g_cfg = HeadConfig(int(rng.integers(2, 17)), out_dim, hidden, seed=int(rng.integers(1 << 31)))
        t_cfg = HeadConfig(int(rng.integers(2, 17)), out_dim, (), seed=int(rng.integers(1 << 31)))
        g_head, t_head = init_head(g_cfg), init_head(t_cfg)
        b = int(rng.integers(2, 5))
        xg = rng.standard_normal((b, g_cfg.input_dim))
        xt = rng.standard_normal((b, t_cfg.input_dim))
        tau = 0.2
        _, g_grads, t_grads = pair_gradients(g_head, t_head, xg, xt, tau)
        for head, grads in ((g_head, g_grads), (t_head, t_grads)):
            for param, grad in zip(head.parameters(), grads.parameters()):
                flat_p, flat_g = param.ravel(), grad.ravel()
                for idx in range(flat_p.size):
                    orig = flat_p[idx]
                    flat_p[idx] = orig + eps
                    up = pair_loss(g_head, t_head, xg, xt, tau)
                    flat_p[idx] = orig - eps
                    down = pair_loss(g_head, t_head, xg, xt, tau)
                    flat_p[idx] = orig
                    fd = (up - down) / (2 * eps)
                    denom = max(abs(fd), abs(flat_g[idx]), 1e-8)
                    max_rel = max(max_rel, float(abs(fd - flat_g[idx]) / denom))
    ok = max_rel < 1e-4
    print(json.dumps({"instances": args.instances, "max_rel_err": max_rel, "pass": ok}))
    return 0 if ok else 2


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modal-align",
        description="Train and evaluate cross-modal protein embedding alignment.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="pair two embedding files and split them")
    p.add_argument("--graph", required=True)
    p.add_argument("--text", required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("describe", help="render protein descriptions from FASTA")
    p.add_argument("--fasta", required=True)
    p.add_argument("--out")
    p.add_argument("--meta-out", help="also write id,sequence_length,chain_count CSV")
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("rarity", help="rank protein rarity by category frequency")
    p.add_argument("--fasta-dir", required=True)
    p.add_argument("--top", type=int, default=100)
    p.add_argument("--out")
    p.set_defaults(func=cmd_rarity)

    p = sub.add_parser("train", help="train projection heads with InfoNCE")
    p.add_argument("--pair", required=True, help="manifest.json from ingest")
    p.add_argument("--layers", type=int, choices=(1, 2, 3), default=1)
    p.add_argument("--hidden", help="comma-separated hidden dims for the graph head")
    p.add_argument("--preset", help="<gdm>:<llm> built-in dimension preset")
    p.add_argument("--reweight", help="CSV of rare protein IDs (rarity output accepted)")
    p.add_argument("--factor", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--epochs", type=int, default=40)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--tau", type=float, default=0.2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="model-pair alignment score on a split")
    p.add_argument("--pair", required=True)
    p.add_argument("--gh", required=True)
    p.add_argument("--th", required=True)
    p.add_argument("--split", default="test")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("per-protein", help="per-protein positive-pair cosines")
    p.add_argument("--pair", required=True)
    p.add_argument("--gh", required=True)
    p.add_argument("--th", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--out")
    p.set_defaults(func=cmd_per_protein)

    p = sub.add_parser("correlate", help="Pearson matrix across score CSVs")
    p.add_argument("scores", nargs="+")
    p.add_argument("--out")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("analyze", help="length regression or chain-group summary")
    p.add_argument("what", choices=("length", "chains"))
    p.add_argument("--scores", required=True)
    p.add_argument("--meta", required=True, help="CSV: id,sequence_length,chain_count")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("retrieve", help="top-k neighbors plus augmented input text")
    p.add_argument("--index", required=True, help="dir with manifest.json and g_head.phd1")
    p.add_argument("--query-id", required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--descriptions", required=True, help="JSONL {id, description|text}")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("textscore", help="BLEU / ROUGE-L over candidate descriptions")
    p.add_argument("--candidates", required=True)
    p.add_argument("--references", required=True)
    p.set_defaults(func=cmd_textscore)

    p = sub.add_parser("gen-synthetic", help="write a correlated synthetic fixture")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--latent", type=int, required=True)
    p.add_argument("--g-dim", type=int, required=True)
    p.add_argument("--t-dim", type=int, required=True)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--identity", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("gradcheck", help="finite-difference check of the training gradients")
    p.add_argument("--instances", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, FileNotFoundError) as exc:
        code = getattr(exc, "code", "FileNotFound")
        print(json.dumps({"error": code, "message": str(exc)}), file=sys.stderr)
        return 1
    except (InternalError, ModalAlignError, Exception) as exc:  # noqa: BLE001
        code = getattr(exc, "code", type(exc).__name__)
        print(json.dumps({"error": code, "message": str(exc)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
