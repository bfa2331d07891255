//! One function per subcommand, all following the same shape: resolve
//! settings (flag > config file > default), log the effective config, run
//! the core pipeline, and print a machine-readable JSON result on stdout.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, Context};
use serde::Deserialize;
use serde_json::json;

use fitb_core::dataset::{
    self, generate_fitb_queries, generate_synthetic, parse_outfits, parse_queries, product_pool,
    split_outfits, SyntheticParams,
};
use fitb_core::embedding_store::write_embeddings;
use fitb_core::{
    evaluate, rank_all, train, Aggregation, EmbeddingStore, EmbeddingTable, LossConfig, Modality,
    Optimizer, RepresentationMode, Scorer, ScoringConfig, SiameseHead, TrainConfig,
};

use crate::config::ConfigFile;
use crate::{
    CliError, CliResult, EvalArgs, GenSyntheticArgs, IngestArgs, PredictArgs, SplitArgs, TrainArgs,
};

fn usage(err: anyhow::Error) -> CliError {
    CliError::Usage(err)
}

fn data(err: impl Into<anyhow::Error>) -> CliError {
    CliError::Data(err.into())
}

fn parse_mode(raw: &str) -> CliResult<RepresentationMode> {
    raw.parse::<RepresentationMode>().map_err(|e| usage(anyhow!(e)))
}

fn parse_scorer(raw: &str) -> CliResult<Scorer> {
    raw.parse::<Scorer>().map_err(|e| usage(anyhow!(e)))
}

fn parse_aggregation(raw: &str) -> CliResult<Aggregation> {
    raw.parse::<Aggregation>().map_err(|e| usage(anyhow!(e)))
}

fn parse_modality(raw: &str) -> CliResult<Modality> {
    match raw {
        "image" => Ok(Modality::Image),
        "text" => Ok(Modality::Text),
        other => Err(usage(anyhow!("unknown modality `{other}` (expected image or text)"))),
    }
}

fn parse_layer_dims(raw: &str) -> CliResult<Vec<usize>> {
    raw.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|e| usage(anyhow!("bad layer width `{part}` in `{raw}`: {e}")))
        })
        .collect()
}

/// Loads only the modalities the mode needs; paths for unused modalities may
/// be omitted entirely.
fn load_store(
    mode: RepresentationMode,
    image: Option<&PathBuf>,
    text: Option<&PathBuf>,
) -> CliResult<EmbeddingStore> {
    let image = if mode.uses_image() {
        Some(image.ok_or_else(|| usage(anyhow!("mode `{mode}` requires --image-emb")))?)
    } else {
        None
    };
    let text = if mode.uses_text() {
        Some(text.ok_or_else(|| usage(anyhow!("mode `{mode}` requires --text-emb")))?)
    } else {
        None
    };
    EmbeddingStore::load(image.map(PathBuf::as_path), text.map(PathBuf::as_path))
        .context("loading embeddings")
        .map_err(data)
}

fn read_outfits(path: &PathBuf) -> CliResult<Vec<fitb_core::Outfit>> {
    parse_outfits(path)
        .with_context(|| format!("reading outfits from {}", path.display()))
        .map_err(data)
}

pub fn ingest(args: &IngestArgs, cfg: &ConfigFile) -> CliResult<()> {
    let input: PathBuf = cfg.require(args.input.clone(), "input")?;
    let modality = parse_modality(&cfg.require(args.modality.clone(), "modality")?)?;
    let out: PathBuf = cfg.require(args.out.clone(), "out")?;
    log::info!(
        "effective config: {}",
        json!({"command": "ingest", "input": input, "modality": modality.to_string(), "out": out})
    );

    #[derive(Deserialize)]
    struct RawEmbedding {
        product_id: String,
        vector: Vec<f32>,
    }

    let text = fs::read_to_string(&input)
        .with_context(|| format!("reading {}", input.display()))
        .map_err(data)?;
    let mut records = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawEmbedding = serde_json::from_str(line)
            .with_context(|| format!("line {} of {}", index + 1, input.display()))
            .map_err(data)?;
        records.push(fitb_core::embedding_store::ModalityEmbedding {
            product_id: raw.product_id,
            vector: raw.vector,
        });
    }
    let dim = records
        .first()
        .map(|r| r.vector.len())
        .ok_or_else(|| data(anyhow!("{} holds no embeddings", input.display())))?;
    let table = EmbeddingTable::new(dim, records).map_err(data)?;
    write_embeddings(&table, modality, &out).map_err(data)?;
    println!(
        "{}",
        json!({
            "command": "ingest",
            "out": out,
            "modality": modality.to_string(),
            "products": table.len(),
            "dim": dim,
        })
    );
    Ok(())
}

pub fn gen_synthetic(args: &GenSyntheticArgs, cfg: &ConfigFile) -> CliResult<()> {
    let params = SyntheticParams {
        n_clusters: cfg.resolve(args.clusters, "clusters", 8)?,
        products_per_cluster: cfg.resolve(args.products_per_cluster, "products-per-cluster", 20)?,
        outfit_size: cfg.resolve(args.outfit_size, "outfit-size", 4)?,
        d_img: cfg.resolve(args.d_img, "d-img", 16)?,
        d_txt: cfg.resolve(args.d_txt, "d-txt", 16)?,
        noise_sigma: cfg.resolve(args.sigma, "sigma", 0.05)?,
        modality_split: cfg.resolve(args.modality_split, "modality-split", false)?,
        seed: cfg.resolve(args.seed, "seed", 42)?,
    };
    let out: PathBuf = cfg.require(args.out.clone(), "out")?;
    log::info!(
        "effective config: {}",
        json!({
            "command": "gen-synthetic",
            "clusters": params.n_clusters,
            "products_per_cluster": params.products_per_cluster,
            "outfit_size": params.outfit_size,
            "d_img": params.d_img,
            "d_txt": params.d_txt,
            "sigma": params.noise_sigma,
            "modality_split": params.modality_split,
            "seed": params.seed,
            "out": out,
        })
    );

    let generated = generate_synthetic(&params).map_err(data)?;
    fs::create_dir_all(&out)
        .with_context(|| format!("creating {}", out.display()))
        .map_err(data)?;
    let files = generated.write_to(&out).map_err(data)?;
    println!(
        "{}",
        json!({
            "command": "gen-synthetic",
            "products": params.n_products(),
            "outfits": generated.outfits.len(),
            "image": files.image,
            "text": files.text,
            "outfits_file": files.outfits,
            "manifest": files.manifest,
        })
    );
    Ok(())
}

pub fn split(args: &SplitArgs, cfg: &ConfigFile) -> CliResult<()> {
    let outfits_path: PathBuf = cfg.require(args.outfits.clone(), "outfits")?;
    let test_fraction = cfg.resolve(args.test_fraction, "test-fraction", 0.1)?;
    let candidates = cfg.resolve(args.candidates, "candidates", 5)?;
    let seed = cfg.resolve(args.seed, "seed", 42)?;
    let out: PathBuf = cfg.require(args.out.clone(), "out")?;
    if !(0.0..=1.0).contains(&test_fraction) || !test_fraction.is_finite() {
        return Err(usage(anyhow!("--test-fraction must be in [0, 1], got {test_fraction}")));
    }
    if candidates < 2 {
        return Err(usage(anyhow!("--candidates must be at least 2, got {candidates}")));
    }
    log::info!(
        "effective config: {}",
        json!({
            "command": "split",
            "outfits": outfits_path,
            "test_fraction": test_fraction,
            "candidates": candidates,
            "seed": seed,
            "out": out,
        })
    );

    let outfits = read_outfits(&outfits_path)?;
    let (train_side, test_side) = split_outfits(&outfits, test_fraction, seed).map_err(data)?;
    // Distractors are drawn from the full catalog, not just the test side.
    let pool = product_pool(&outfits);
    let generated = generate_fitb_queries(&test_side, &pool, candidates, seed).map_err(data)?;

    fs::create_dir_all(&out)
        .with_context(|| format!("creating {}", out.display()))
        .map_err(data)?;
    let train_path = out.join("train_outfits.jsonl");
    let test_path = out.join("test_outfits.jsonl");
    let queries_path = out.join("test_queries.jsonl");
    dataset::write_outfits(&train_side, &train_path).map_err(data)?;
    dataset::write_outfits(&test_side, &test_path).map_err(data)?;
    dataset::write_queries(&generated.queries, &queries_path).map_err(data)?;
    println!(
        "{}",
        json!({
            "command": "split",
            "train_outfits": train_side.len(),
            "test_outfits": test_side.len(),
            "queries": generated.queries.len(),
            "skipped_outfits": generated.skipped_outfits,
            "train_file": train_path,
            "test_file": test_path,
            "queries_file": queries_path,
        })
    );
    Ok(())
}

pub fn train_cmd(args: &TrainArgs, cfg: &ConfigFile) -> CliResult<()> {
    let outfits_path: PathBuf = cfg.require(args.outfits.clone(), "outfits")?;
    let mode = parse_mode(&cfg.resolve(args.mode.clone(), "mode", "both".into())?)?;
    let epochs = cfg.resolve(args.epochs, "epochs", 10)?;
    let batch_size = cfg.resolve(args.batch_size, "batch-size", 64)?;
    let lr = cfg.resolve(args.lr, "lr", 1e-3)?;
    let margin = cfg.resolve(args.margin, "margin", 1.0)?;
    let seed = cfg.resolve(args.seed, "seed", 42)?;
    let optimizer_name: String = cfg.resolve(args.optimizer.clone(), "optimizer", "adam".into())?;
    let momentum = cfg.resolve(args.momentum, "momentum", 0.0)?;
    let negatives = cfg.resolve(args.negatives, "negatives", 1)?;
    let max_positives = cfg.resolve(args.max_positives, "max-positives", 15)?;
    let layer_dims =
        parse_layer_dims(&cfg.resolve(args.layer_dims.clone(), "layer-dims", "512,128".into())?)?;
    let resample = cfg.resolve(args.resample, "resample", false)?;
    let out: PathBuf = cfg.require(args.out.clone(), "out")?;

    let optimizer = match optimizer_name.as_str() {
        "adam" => Optimizer::adam(lr),
        "sgd" => Optimizer::sgd(lr, momentum),
        other => return Err(usage(anyhow!("unknown optimizer `{other}` (expected adam or sgd)"))),
    };
    let train_config = TrainConfig {
        mode,
        epochs,
        batch_size,
        optimizer,
        loss: LossConfig { margin, ..LossConfig::default() },
        seed,
        negatives_per_positive: negatives,
        max_positives_per_outfit: max_positives,
        layer_dims: layer_dims.clone(),
        resample_pairs_each_epoch: resample,
    };
    // Config mistakes (bad lr, empty layer list) are usage errors; anything
    // after this point is a data problem.
    train_config.validate().map_err(|e| usage(anyhow!(e)))?;

    let effective = json!({
        "command": "train",
        "outfits": outfits_path,
        "mode": mode.to_string(),
        "epochs": epochs,
        "batch_size": batch_size,
        "lr": lr,
        "margin": margin,
        "seed": seed,
        "optimizer": optimizer_name,
        "momentum": momentum,
        "negatives_per_positive": negatives,
        "max_positives_per_outfit": max_positives,
        "layer_dims": layer_dims,
        "resample": resample,
        "checkpoint": out,
    });
    log::info!("effective config: {effective}");

    let outfits = read_outfits(&outfits_path)?;
    let image: Option<PathBuf> = cfg.resolve_opt(args.image_emb.clone(), "image-emb")?;
    let text: Option<PathBuf> = cfg.resolve_opt(args.text_emb.clone(), "text-emb")?;
    let store = load_store(mode, image.as_ref(), text.as_ref())?;
    let report = train(&outfits, &store, &train_config).map_err(data)?;
    report.head.save_checkpoint(&out).map_err(data)?;

    let mut summary = effective;
    let extras = json!({
        "n_pairs": report.n_pairs,
        "n_positives": report.n_positives,
        "n_negatives": report.n_negatives,
        "first_epoch_loss": report.epoch_losses.first(),
        "last_epoch_loss": report.epoch_losses.last(),
    });
    summary
        .as_object_mut()
        .expect("summary is an object")
        .extend(extras.as_object().expect("extras is an object").clone());
    println!("{summary}");
    Ok(())
}

/// Everything eval and predict share: query loading, store loading, scorer
/// wiring, and the head/checkpoint mutual requirements.
struct ScoringSetup {
    queries: Vec<fitb_core::FitbQuery>,
    store: EmbeddingStore,
    scoring: ScoringConfig,
    head: Option<SiameseHead>,
    threads: usize,
}

#[allow(clippy::too_many_arguments)]
fn scoring_setup(
    cfg: &ConfigFile,
    command: &str,
    queries_flag: Option<PathBuf>,
    image_flag: Option<PathBuf>,
    text_flag: Option<PathBuf>,
    mode_flag: Option<String>,
    scorer_flag: Option<String>,
    aggregation_flag: Option<String>,
    checkpoint_flag: Option<PathBuf>,
    threads_flag: Option<usize>,
) -> CliResult<ScoringSetup> {
    let queries_path: PathBuf = cfg.require(queries_flag, "queries")?;
    let mode = parse_mode(&cfg.resolve(mode_flag, "mode", "both".into())?)?;
    let scorer = parse_scorer(&cfg.resolve(scorer_flag, "scorer", "zeroshot".into())?)?;
    let aggregation =
        parse_aggregation(&cfg.resolve(aggregation_flag, "aggregation", "mean".into())?)?;
    let threads = cfg.resolve(threads_flag, "threads", 1)?;
    if threads == 0 {
        return Err(usage(anyhow!("--threads must be at least 1")));
    }
    let checkpoint = match scorer {
        // A config file may carry `checkpoint` for other subcommands; only
        // an explicit flag clashes with the zero-shot scorer.
        Scorer::ZeroShot => {
            if checkpoint_flag.is_some() {
                return Err(usage(anyhow!("--checkpoint is only used with --scorer head")));
            }
            None
        }
        Scorer::TrainedHead => Some(cfg.require::<PathBuf>(checkpoint_flag, "checkpoint")?),
    };

    log::info!(
        "effective config: {}",
        json!({
            "command": command,
            "queries": queries_path,
            "mode": mode.to_string(),
            "scorer": scorer.to_string(),
            "aggregation": aggregation.to_string(),
            "checkpoint": checkpoint,
            "threads": threads,
        })
    );

    let image: Option<PathBuf> = cfg.resolve_opt(image_flag, "image-emb")?;
    let text: Option<PathBuf> = cfg.resolve_opt(text_flag, "text-emb")?;
    let store = load_store(mode, image.as_ref(), text.as_ref())?;
    let queries = parse_queries(&queries_path)
        .with_context(|| format!("reading queries from {}", queries_path.display()))
        .map_err(data)?;
    let head = checkpoint
        .map(|path| {
            SiameseHead::load_checkpoint(&path)
                .with_context(|| format!("loading checkpoint {}", path.display()))
                .map_err(data)
        })
        .transpose()?;
    Ok(ScoringSetup {
        queries,
        store,
        scoring: ScoringConfig { scorer, aggregation, mode },
        head,
        threads,
    })
}

pub fn eval(args: &EvalArgs, cfg: &ConfigFile) -> CliResult<()> {
    let setup = scoring_setup(
        cfg,
        "eval",
        args.queries.clone(),
        args.image_emb.clone(),
        args.text_emb.clone(),
        args.mode.clone(),
        args.scorer.clone(),
        args.aggregation.clone(),
        args.checkpoint.clone(),
        args.threads,
    )?;
    let report = evaluate(
        &setup.queries,
        &setup.scoring,
        setup.head.as_ref(),
        &setup.store,
        setup.threads,
    )
    .map_err(data)?;
    let rendered = serde_json::to_string(&report).expect("report serializes");
    if let Some(out) = cfg.resolve_opt(args.out.clone(), "out")? {
        fs::write(&out, format!("{rendered}\n"))
            .with_context(|| format!("writing {}", out.display()))
            .map_err(data)?;
    }
    // Human-readable table first, machine-readable record last.
    println!("{report}");
    println!("{rendered}");
    Ok(())
}

pub fn predict(args: &PredictArgs, cfg: &ConfigFile) -> CliResult<()> {
    let setup = scoring_setup(
        cfg,
        "predict",
        args.queries.clone(),
        args.image_emb.clone(),
        args.text_emb.clone(),
        args.mode.clone(),
        args.scorer.clone(),
        args.aggregation.clone(),
        args.checkpoint.clone(),
        args.threads,
    )?;
    let rankings = rank_all(
        &setup.queries,
        &setup.scoring,
        setup.head.as_ref(),
        &setup.store,
        setup.threads,
    )
    .map_err(data)?;
    let mut body = String::new();
    for ranking in &rankings {
        body.push_str(&serde_json::to_string(ranking).expect("ranking serializes"));
        body.push('\n');
    }
    match cfg.resolve_opt::<PathBuf>(args.out.clone(), "out")? {
        Some(out) => {
            fs::write(&out, &body)
                .with_context(|| format!("writing {}", out.display()))
                .map_err(data)?;
            println!(
                "{}",
                json!({"command": "predict", "queries": rankings.len(), "out": out})
            );
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes()).map_err(data)?;
        }
    }
    Ok(())
}
