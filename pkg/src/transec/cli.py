"""Operator command surface tying the pipeline stages together.

Exit codes: 0 success, 1 validation failure, 2 runtime error.  Every output
file starts with a metadata header (config hash, seeds, tool version).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from transec import __version__, corpus as corpus_mod, metrics as metrics_mod
from transec import rag as rag_mod, taxonomy as taxonomy_mod, translator as translator_mod
from transec.judge import ExemplarStore, adjudicate
from transec.records import make_meta, read_records, write_records

EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


@click.group()
@click.version_option(version=__version__)
def main() -> None:
    """Security-centric evaluation harness for LLM code translation."""


def _fail(message: str, code: int = EXIT_RUNTIME) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_profile(path: str | None, model_id: str | None) -> translator_mod.ModelProfile:
    if path:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
        return translator_mod.ModelProfile(**cfg)
    if not model_id:
        _fail("either --model-config or --model is required")
    return translator_mod.ModelProfile(model_id=model_id)


def _make_client(profile: translator_mod.ModelProfile, scripted: str | None):
    if scripted:
        with open(scripted, encoding="utf-8") as fh:
            script = json.load(fh)
        return translator_mod.ScriptedClient(script, profile)
    if not profile.endpoint:
        _fail(f"profile {profile.model_id!r} has no endpoint and no --scripted file")
    return translator_mod.HttpChatClient(profile)


# --- corpus ------------------------------------------------------------------

@main.command()
@click.argument("feed", type=click.Path(exists=True))
@click.option("--out", "-o", required=True, type=click.Path())
@click.option("--cwe", "cwes", multiple=True, default=corpus_mod.COVERED_CWES)
@click.option("--language", "languages", multiple=True, default=corpus_mod.SOURCE_LANGUAGES)
@click.option("--min-tokens", default=500, show_default=True)
@click.option("--max-tokens", default=1600, show_default=True)
@click.option("--tokenizer", default=corpus_mod.DEFAULT_TOKENIZER, show_default=True)
def ingest(feed, out, cwes, languages, min_tokens, max_tokens, tokenizer):
    """Filter a pre-fetched vulnerability feed into candidate samples."""
    filt = corpus_mod.IngestFilter(
        cwes=tuple(cwes),
        languages=tuple(languages),
        token_range=(min_tokens, max_tokens),
        tokenizer_id=tokenizer,
    )
    records = []
    for _, rec in read_records(feed):
        records.append(
            corpus_mod.VulnRecord(
                cve_id=rec.get("cve_id", ""),
                cwes=tuple(rec.get("cwes", ())),
                commit_urls=tuple(rec.get("commit_urls", ())),
                files=tuple(
                    (f["language"], f["code"]) for f in rec.get("files", ())
                ),
            )
        )
    kept, dropped = corpus_mod.ingest_with_reasons(records, filt)
    meta = make_meta(config={"filter": filt.__dict__}, dropped=len(dropped))
    write_records(out, (vars(c) for c in kept), meta=meta)
    click.echo(f"kept {len(kept)} candidates, dropped {len(dropped)} records")


@main.command()
@click.argument("corpus_path", type=click.Path(exists=True))
@click.argument("spec_path", type=click.Path(exists=True))
def validate(corpus_path, spec_path):
    """Validate a corpus against a distribution spec; exit 1 on mismatch."""
    try:
        corp = corpus_mod.load_corpus(corpus_path)
        spec = corpus_mod.DistributionSpec.load(spec_path)
    except corpus_mod.CorpusError as exc:
        _fail(str(exc), EXIT_VALIDATION)
    report = corpus_mod.validate_distribution(corp, spec)
    if report.ok:
        click.echo(f"OK: {len(corp)} samples match the distribution spec")
        return
    for m in report.mismatches:
        click.echo(
            f"MISMATCH {m.language_group} {m.cwe} {m.security_status}: "
            f"expected {m.expected}, observed {m.observed}"
        )
    sys.exit(EXIT_VALIDATION)


# --- translation ---------------------------------------------------------------

def _translate_corpus(corpus_path, pairs, profile, client, out, concurrency, rag_index=None, embedder=None):
    corp = corpus_mod.load_corpus(corpus_path)
    pair_list = [tuple(p.split(":", 1)) for p in pairs]
    done_ids: set[tuple[str, str, str]] = set()
    existing: list[dict] = []
    out_path = Path(out)
    if out_path.exists():
        for _, rec in read_records(out_path):
            if rec.get("parse_status") != translator_mod.PARSE_TRANSPORT_ERROR:
                done_ids.add((rec["sample_id"], rec["target_lang"], rec["model_id"]))
                existing.append(rec)

    items = []
    hits_by_task = {}
    for sample in corp:
        for source_lang, target_lang in pair_list:
            group = sample.language_group
            if source_lang not in (sample.language, group):
                continue
            task = translator_mod.TranslationTask(
                sample_id=sample.id,
                source_lang=source_lang,
                target_lang=target_lang,
                model_id=profile.model_id,
            )
            if (task.sample_id, task.target_lang, task.model_id) in done_ids:
                continue
            items.append((task, sample.code))

    marker = out_path.with_suffix(out_path.suffix + ".inprogress")
    marker.touch()
    try:
        if rag_index is not None:
            results = []
            for task, code in items:
                query = rag_mod.embed_query(code, embedder, rag_index)
                matches = rag_mod.retrieve(rag_index, query)
                hits_by_task[(task.sample_id, task.target_lang)] = [
                    {"entry_id": m.entry.entry_id, "similarity": m.similarity}
                    for m in matches
                ]
                prompt = rag_mod.build_rag_prompt(
                    code, task.source_lang, task.target_lang, matches
                )
                raw_result = _run_prompt(task, prompt, client)
                results.append(raw_result)
        else:
            results = translator_mod.run_batch(items, client, concurrency)
        meta = make_meta(
            config={
                "corpus": str(corpus_path),
                "pairs": pairs,
                "model": profile.model_id,
            }
        )
        records = existing + [r.to_record() for r in results]
        for rec in records:
            key = (rec["sample_id"], rec["target_lang"])
            if key in hits_by_task:
                rec["retrieval_hits"] = hits_by_task[key]
        write_records(out_path, records, meta=meta)
    finally:
        marker.unlink(missing_ok=True)
    click.echo(f"translated {len(items)} tasks ({len(existing)} already done)")


def _run_prompt(task, prompt, client):
    """Single-prompt variant of run_translation for pre-built prompts."""
    profile = client.profile
    attempts = 0
    last_error = ""
    while attempts <= profile.max_retries:
        attempts += 1
        try:
            raw = client.send(prompt, profile.sampling_params())
        except translator_mod.TransportError as exc:
            last_error = str(exc)
            continue
        translated, status = translator_mod.extract_translation(raw)
        return translator_mod.TranslationResult(
            task=task,
            raw_output=raw,
            parse_status=status,
            translated_code=translated,
            attempt_count=attempts,
        )
    return translator_mod.TranslationResult(
        task=task,
        raw_output=last_error,
        parse_status=translator_mod.PARSE_TRANSPORT_ERROR,
        attempt_count=attempts,
    )


@main.command()
@click.argument("corpus_path", type=click.Path(exists=True))
@click.option("--pair", "pairs", multiple=True, required=True,
              help="source:target, e.g. Java:Python (repeatable)")
@click.option("--model", default=None)
@click.option("--model-config", default=None, type=click.Path(exists=True))
@click.option("--scripted", default=None, type=click.Path(exists=True))
@click.option("--out", "-o", required=True, type=click.Path())
@click.option("--concurrency", default=4, show_default=True)
def translate(corpus_path, pairs, model, model_config, scripted, out, concurrency):
    """Translate corpus samples; resumable (completed task ids are skipped)."""
    profile = _load_profile(model_config, model)
    client = _make_client(profile, scripted)
    _translate_corpus(corpus_path, pairs, profile, client, out, concurrency)


# --- judging ---------------------------------------------------------------------

@main.command("judge")
@click.argument("results_path", type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--judge-config", "judge_configs", multiple=True, required=True,
              type=click.Path(exists=True))
@click.option("--arbiter-config", required=True, type=click.Path(exists=True))
@click.option("--scripted", default=None, type=click.Path(exists=True))
@click.option("--exemplars", "exemplars_path", default=None, type=click.Path(exists=True))
@click.option("--out", "-o", required=True, type=click.Path())
def judge_cmd(results_path, corpus_path, judge_configs, arbiter_config, scripted,
              exemplars_path, out):
    """Run the automated judging pipeline over translation results."""
    corp = corpus_mod.load_corpus(corpus_path)
    by_id = {s.id: s for s in corp}
    judges = [
        _make_client(_load_profile(p, None), scripted) for p in judge_configs
    ]
    arbiter = _make_client(_load_profile(arbiter_config, None), scripted)
    store = (
        ExemplarStore.load(exemplars_path)
        if exemplars_path
        else ExemplarStore.load_default()
    )
    verdicts = []
    skipped = 0
    for _, rec in read_records(results_path):
        result = translator_mod.TranslationResult.from_record(rec)
        if result.parse_status != translator_mod.PARSE_OK:
            skipped += 1
            continue
        sample = by_id.get(result.task.sample_id)
        if sample is None:
            _fail(f"result references unknown sample {result.task.sample_id!r}")
        fv = adjudicate(
            sample,
            result.translated_code,
            result.task.target_lang,
            judges,
            arbiter,
            store,
            model_id=result.task.model_id,
        )
        verdicts.append(fv.to_record())
    meta = make_meta(config={"results": str(results_path), "corpus": str(corpus_path)})
    write_records(out, verdicts, meta=meta)
    click.echo(f"judged {len(verdicts)} translations, skipped {skipped} unparseable")


# --- review service ------------------------------------------------------------------

@main.group()
def review() -> None:
    """Human review workflow service."""


@review.command()
@click.option("--log", "log_path", required=True, type=click.Path())
@click.option("--tokens", "tokens_path", default=None, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8321, show_default=True)
def serve(log_path, tokens_path, host, port):
    """Serve the review HTTP API (replays the event log on start)."""
    import uvicorn

    from transec.review import ReviewStore
    from transec.review_api import create_app

    token_map = None
    if tokens_path:
        with open(tokens_path, encoding="utf-8") as fh:
            token_map = json.load(fh)
    store = ReviewStore(log_path=log_path)
    uvicorn.run(create_app(store, token_map), host=host, port=port)


@review.command()
@click.option("--log", "log_path", required=True, type=click.Path())
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--results", "results_path", required=True, type=click.Path(exists=True))
@click.option("--reviewers", required=True, help="comma-separated reviewer ids")
@click.option("--seed", default=0, show_default=True)
def setup(log_path, corpus_path, results_path, reviewers, seed):
    """Create review cases from translation results and assign reviewers."""
    from transec.review import ReviewStore

    corp = corpus_mod.load_corpus(corpus_path)
    by_id = {s.id: s for s in corp}
    store = ReviewStore(log_path=log_path)
    created = 0
    for _, rec in read_records(results_path):
        result = translator_mod.TranslationResult.from_record(rec)
        if result.parse_status != translator_mod.PARSE_OK:
            continue
        sample = by_id[result.task.sample_id]
        case_id = f"{result.task.sample_id}:{result.task.target_lang}:{result.task.model_id}"
        if case_id in store.cases:
            continue
        store.create_case(
            case_id,
            sample_id=sample.id,
            translation_id=case_id,
            materials={
                "source_code": sample.code,
                "translated_code": result.translated_code,
                "cwe": sample.cwe,
                "patch_description": sample.patch_annotation.description,
                "patch_locations": [list(s) for s in sample.patch_annotation.locations],
                "cve_record": sample.provenance.cve_id or "",
                "source_lang": result.task.source_lang,
                "target_lang": result.task.target_lang,
                "model_id": result.task.model_id,
            },
        )
        created += 1
    assignments = store.assign_all(reviewers.split(","), seed=seed)
    click.echo(f"created {created} cases, assigned {len(assignments)}")


# --- metrics -----------------------------------------------------------------------

def _load_outcomes(path, corpus_path=None, results_path=None):
    rows = [rec for _, rec in read_records(path)]
    if rows and "translated_is_vulnerable" in rows[0]:
        return [metrics_mod.outcome_from_record(r) for r in rows]
    if corpus_path is None:
        _fail("verdict records need --corpus to resolve sample metadata")
    corp = corpus_mod.load_corpus(corpus_path)
    by_id = {s.id: s for s in corp}
    thresholds = corpus_mod.compute_thresholds(corp)
    parse_by_task = {}
    source_lang_by_task = {}
    if results_path:
        for _, rec in read_records(results_path):
            key = (rec["sample_id"], rec["target_lang"], rec["model_id"])
            parse_by_task[key] = rec["parse_status"] == translator_mod.PARSE_OK
            source_lang_by_task[key] = rec["source_lang"]
    outcomes = []
    for rec in rows:
        sample = by_id.get(rec["sample_id"])
        if sample is None:
            _fail(f"verdict references unknown sample {rec['sample_id']!r}")
        key = (rec["sample_id"], rec["target_lang"], rec["model_id"])
        outcomes.append(
            metrics_mod.OutcomeRecord(
                sample_id=sample.id,
                source_security_status=sample.security_status,
                translated_is_vulnerable=bool(rec["isVul"]),
                is_functional=rec.get("is_functional"),
                parse_ok=parse_by_task.get(key, True),
                model=rec["model_id"],
                source_lang=source_lang_by_task.get(key, sample.language_group),
                target_lang=rec["target_lang"],
                cwe=sample.cwe,
                complexity=corpus_mod.classify_complexity(sample.token_count, thresholds),
                verdict_provenance=rec.get("provenance", ""),
            )
        )
    return outcomes


@main.command("metrics")
@click.argument("verdicts_path", type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", default=None, type=click.Path(exists=True))
@click.option("--results", "results_path", default=None, type=click.Path(exists=True))
@click.option("--by", "dims", default="", help="comma list of model,language_pair,cwe,complexity")
@click.option("--out", "-o", default=None, type=click.Path())
def metrics_cmd(verdicts_path, corpus_path, results_path, dims, out):
    """Compute FCR/VIR/VPR, optionally sliced."""
    outcomes = _load_outcomes(verdicts_path, corpus_path, results_path)
    dim_list = [d for d in dims.split(",") if d]
    try:
        reports = (
            metrics_mod.slice_reports(outcomes, dim_list)
            if dim_list
            else [metrics_mod.report(outcomes)]
        )
    except KeyError as exc:
        _fail(str(exc), EXIT_VALIDATION)
    table = metrics_mod.report_table(reports, dim_list)
    if out:
        header = json.dumps({"_meta": make_meta(config={"by": dim_list})}, sort_keys=True)
        Path(out).write_text(f"# {header}\n{table}", encoding="utf-8")
    click.echo(table, nl=False)


@main.command()
@click.argument("baseline_path", type=click.Path(exists=True))
@click.argument("strategy_path", type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", default=None, type=click.Path(exists=True))
def compare(baseline_path, strategy_path, corpus_path):
    """Mitigation-improvement arithmetic between two verdict/outcome files."""
    baseline = _load_outcomes(baseline_path, corpus_path)
    strategy = _load_outcomes(strategy_path, corpus_path)
    result = metrics_mod.vir_relative(baseline, strategy)
    if result is None:
        _fail("VIR undefined or baseline VIR is zero", EXIT_VALIDATION)
    relative, improvement = result
    click.echo("strategy\trelative_vir\timprovement")
    click.echo(f"baseline\t100.0%\t0.0%")
    click.echo(
        f"strategy\t{metrics_mod.round1(relative):.1f}%\t{metrics_mod.round1(improvement):.1f}%"
    )


# --- taxonomy -----------------------------------------------------------------------

@main.group()
def taxonomy() -> None:
    """Vulnerable-translation pattern taxonomy."""


@taxonomy.command("table")
@click.argument("labels_path", type=click.Path(exists=True))
@click.option("--cases", "cases_path", required=True, type=click.Path(exists=True),
              help="record file mapping case_id to cwe")
@click.option("--out", "-o", default=None, type=click.Path())
def taxonomy_table(labels_path, cases_path, out):
    """Per-CWE percentage distribution of pattern labels."""
    labels = taxonomy_mod.load_labels(labels_path)
    case_cwe = {rec["case_id"]: rec["cwe"] for _, rec in read_records(cases_path)}
    try:
        table = taxonomy_mod.distribution_table(labels, case_cwe)
    except (KeyError, taxonomy_mod.UnknownPatternError) as exc:
        _fail(str(exc), EXIT_VALIDATION)
    text = taxonomy_mod.format_table(table)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    click.echo(text, nl=False)


# --- rag ----------------------------------------------------------------------------

def _make_embedder(spec: str):
    if spec.startswith("hashing"):
        parts = spec.split(":")
        dim = int(parts[1]) if len(parts) > 1 else 32
        return rag_mod.HashingEmbedder(dim=dim)
    if spec.startswith("st:"):
        return rag_mod.SentenceTransformerEmbedder(spec[3:])
    _fail(f"unknown embedder spec {spec!r}")


@main.group()
def rag() -> None:
    """Retrieval-augmented mitigation pipeline."""


@rag.command("build-index")
@click.argument("kb_path", type=click.Path(exists=True))
@click.option("--embedder", default="hashing:32", show_default=True)
@click.option("--out", "-o", required=True, type=click.Path())
def rag_build_index(kb_path, embedder, out):
    """Embed the knowledge base into a persistent vector index."""
    entries = rag_mod.load_knowledge_base(kb_path)
    provider = _make_embedder(embedder)
    index = rag_mod.build_index(entries, provider)
    index.save(out)
    click.echo(f"indexed {len(index)} entries (dim {index.dim}) -> {out}")


@rag.command("translate")
@click.argument("corpus_path", type=click.Path(exists=True))
@click.option("--index", "index_path", required=True, type=click.Path(exists=True))
@click.option("--embedder", default="hashing:32", show_default=True)
@click.option("--pair", "pairs", multiple=True, required=True)
@click.option("--model", default=None)
@click.option("--model-config", default=None, type=click.Path(exists=True))
@click.option("--scripted", default=None, type=click.Path(exists=True))
@click.option("--out", "-o", required=True, type=click.Path())
def rag_translate(corpus_path, index_path, embedder, pairs, model, model_config,
                  scripted, out):
    """Translate with retrieval-augmented security considerations."""
    profile = _load_profile(model_config, model)
    client = _make_client(profile, scripted)
    index = rag_mod.KnowledgeIndex.load(index_path)
    provider = _make_embedder(embedder)
    _translate_corpus(
        corpus_path, pairs, profile, client, out, concurrency=1,
        rag_index=index, embedder=provider,
    )


if __name__ == "__main__":
    main()
