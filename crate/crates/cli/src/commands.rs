use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use apigraph_annotate::{AnnotationConfig, AnnotationStore};
use apigraph_core::bench::{
    evaluate_classifier, make_splits, ChatEdgeClassifier, ConstantClassifier, EdgeClassifier, GoldOracle,
    HeuristicClassifier, SplitSpec,
};
use apigraph_core::docmodel::{load_corpus_dir, refine_missing, ParseOptions, Refiner};
use apigraph_core::filter::{run_pipeline, DomainPolicy, FilterConfig, FilterReport};
use apigraph_core::graph::{
    build_graph, compute_stats_with, deserialize, perturb_graph, read_labels, serialize, Denominator, LabelRow,
};
use apigraph_core::providers::{CachedScorer, RelevanceScorer};
use apigraph_core::retrieval::{
    evaluate_retrieval, metrics_table, read_instances, ChatSelector, Selector, TopRankSelector,
};
use apigraph_core::subsets::{
    heuristic_adjacency, pattern_edges, precision_table, run_pattern_eval, ChatSubsetGenerator, GraphWalkGenerator,
    PatternKind, PoolSpec, SubsetGenerator,
};
use apigraph_core::{ApiGraph, Corpus};
use clap::ValueEnum;

use crate::config::RunConfig;
use crate::providers;
use crate::{ClassifierArg, Cli, Command, DenominatorArg, GeneratorArg, SelectorArg};

struct Ctx {
    cfg: RunConfig,
    graph: Option<String>,
}

impl Ctx {
    fn corpus_path(&self) -> Result<&Path> {
        self.cfg
            .corpus
            .as_deref()
            .ok_or_else(|| anyhow!("no corpus given (use --corpus or `corpus` in the config)"))
    }

    fn corpus(&self) -> Result<Corpus> {
        load_corpus(self.corpus_path()?)
    }

    fn out_dir(&self) -> Result<PathBuf> {
        let dir = self.cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        fs::create_dir_all(&dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(dir)
    }

    fn write(&self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.out_dir()?.join(name);
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }

    /// `--graph` as a path; `None` for a missing flag or `none`.
    fn graph_path(&self) -> Option<PathBuf> {
        match self.graph.as_deref() {
            None | Some("none") => None,
            Some(p) => Some(PathBuf::from(p)),
        }
    }

    fn require_graph(&self) -> Result<ApiGraph> {
        let path = self
            .graph_path()
            .ok_or_else(|| anyhow!("this command needs --graph PATH"))?;
        load_graph(&path)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// A directory of API documents or a canonical corpus file.
fn load_corpus(path: &Path) -> Result<Corpus> {
    if path.is_dir() {
        Ok(load_corpus_dir(path, &ParseOptions::default())?.corpus)
    } else {
        Corpus::from_json(&read(path)?).with_context(|| format!("invalid corpus file {}", path.display()))
    }
}

fn load_graph(path: &Path) -> Result<ApiGraph> {
    deserialize(&read(path)?).with_context(|| format!("invalid graph file {}", path.display()))
}

fn load_labels(path: &Path) -> Result<Vec<LabelRow>> {
    read_labels(&read(path)?).with_context(|| format!("invalid labels file {}", path.display()))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

pub fn run(cli: Cli) -> Result<()> {
    let g = cli.global;
    let mut cfg = match &g.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if g.corpus.is_some() {
        cfg.corpus = g.corpus;
    }
    if g.out.is_some() {
        cfg.out = g.out;
    }
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if g.mask.is_some() {
        cfg.mask = g.mask;
    }
    if g.jobs.is_some() {
        cfg.jobs = g.jobs;
    }
    cfg.validate()?;
    if let Some(jobs) = cfg.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("cannot size the worker pool")?;
    }
    let ctx = Ctx { cfg, graph: g.graph };

    match cli.command {
        Command::Ingest => ingest(&ctx),
        Command::Filter { policy, multi_provider } => filter(&ctx, policy, multi_provider),
        Command::BuildGraph { labels, perturb } => build(&ctx, &labels, perturb),
        Command::Stats { denominator } => stats(&ctx, denominator),
        Command::BenchEdges {
            labels,
            heldout,
            classifier,
        } => bench(&ctx, labels, heldout, classifier),
        Command::RetrieveEval { instances, selector } => retrieve(&ctx, instances, selector),
        Command::SubsetsEval {
            kind,
            n,
            runs,
            generator,
            generator_graph,
            pool_size,
            min_valid,
        } => subsets(
            &ctx,
            SubsetArgs {
                kind,
                n,
                runs,
                generator,
                generator_graph,
                pool_size,
                min_valid,
            },
        ),
        Command::Serve { queue, addr, log } => serve(&ctx, queue, addr, log),
    }
}

fn ingest(ctx: &Ctx) -> Result<()> {
    let path = ctx.corpus_path()?;
    if !path.is_dir() {
        bail!("{} is not a directory", path.display());
    }
    let loaded = load_corpus_dir(path, &ParseOptions::default())?;
    let mut corpus = loaded.corpus;
    let model = providers::chat(&ctx.cfg.provider);
    let refiner = match &model {
        Some(m) => Refiner::with_model(m.as_ref(), true),
        None => Refiner::fallback_only(),
    };
    let refined = refine_missing(&mut corpus, &refiner)?;
    let out = ctx.write("corpus.json", &corpus.to_json())?;
    for (file, w) in &loaded.warnings {
        println!("warning: {}: {}: {}", file.display(), w.field, w.message);
    }
    println!(
        "{} APIs, {} warnings, {refined} descriptions filled -> {}",
        corpus.len(),
        loaded.warnings.len(),
        out.display()
    );
    Ok(())
}

fn filter(ctx: &Ctx, policy: Option<PathBuf>, multi_provider: bool) -> Result<()> {
    let corpus = ctx.corpus()?;
    let f = &ctx.cfg.filter;
    let config = FilterConfig {
        semantic_threshold: f.semantic_threshold,
        context_threshold: f.context_threshold,
        include_self: f.include_self,
        multi_provider: multi_provider || f.multi_provider,
        jobs: ctx.cfg.jobs,
    };
    let policy = match policy.or_else(|| f.domain_policy.clone()) {
        Some(p) => {
            Some(DomainPolicy::from_json(&read(&p)?).with_context(|| format!("invalid policy {}", p.display()))?)
        }
        None => None,
    };
    if config.multi_provider && policy.is_none() {
        bail!("multi-provider filtering needs a domain policy (--policy or filter.domain_policy)");
    }
    let embedder = providers::embedder(&ctx.cfg.provider);
    let scorer = providers::scorer(&ctx.cfg.provider);
    let report = match &f.relevance_cache {
        Some(path) => {
            let cached = CachedScorer::open(scorer, path)
                .with_context(|| format!("cannot open relevance cache {}", path.display()))?;
            let report = run_pipeline(&corpus, policy.as_ref(), &embedder, &cached, &config);
            cached
                .flush()
                .with_context(|| format!("cannot write {}", path.display()))?;
            report?
        }
        None => run_pipeline(
            &corpus,
            policy.as_ref(),
            &embedder,
            scorer.as_ref() as &dyn RelevanceScorer,
            &config,
        )?,
    };
    let out = ctx.write("filter_report.json", &report.to_json())?;
    print!("{}", report.table());
    println!("report -> {}", out.display());
    Ok(())
}

fn build(ctx: &Ctx, labels: &Path, perturb: Option<f64>) -> Result<()> {
    let corpus = ctx.corpus()?;
    let rows = load_labels(labels)?;
    let mut graph = build_graph(&corpus, &rows)?;
    if let Some(fraction) = perturb {
        if !(0.0..=1.0).contains(&fraction) {
            bail!("--perturb must lie in [0, 1], got {fraction}");
        }
        graph = perturb_graph(&graph, fraction, ctx.cfg.seed, ctx.cfg.edge_mask()?);
    }
    let out = ctx.write("graph.json", &serialize(&graph))?;
    println!(
        "{} APIs, {} edges -> {}",
        graph.apis().len(),
        graph.edge_count(),
        out.display()
    );
    Ok(())
}

fn stats(ctx: &Ctx, denominator: DenominatorArg) -> Result<()> {
    let graph = ctx.require_graph()?;
    let d = match denominator {
        DenominatorArg::Active => Denominator::ActiveNodes,
        DenominatorArg::All => Denominator::AllNodes,
    };
    let s = compute_stats_with(&graph, ctx.cfg.edge_mask()?, d);
    ctx.write("stats.json", &to_json(&s))?;
    print!("{}", s.table());
    Ok(())
}

fn bench(ctx: &Ctx, labels: Option<PathBuf>, heldout: Vec<String>, classifier: Option<ClassifierArg>) -> Result<()> {
    let b = &ctx.cfg.bench;
    let labels = labels
        .or_else(|| b.labels.clone())
        .ok_or_else(|| anyhow!("no labels given (--labels or bench.labels)"))?;
    let heldout = if heldout.is_empty() {
        b.heldout_domains.clone()
    } else {
        heldout
    };
    if heldout.len() != 2 {
        bail!("exactly 2 held-out domains are required, got {}", heldout.len());
    }
    let classifier = match classifier {
        Some(c) => c,
        None => match b.classifier.as_deref() {
            None => ClassifierArg::Heuristic,
            Some(name) => ClassifierArg::from_str(name, true).map_err(|e| anyhow!("bench.classifier: {e}"))?,
        },
    };
    let corpus = ctx.corpus()?;
    let rows = load_labels(&labels)?;
    let mut spec = SplitSpec::new(ctx.cfg.seed, heldout);
    spec.val_per_class = b.val_per_class;
    spec.test_per_class = b.test_per_class;
    let splits = make_splits(&rows, &corpus, &spec)?;
    ctx.write("splits.json", &splits.to_json())?;

    let embedder = providers::embedder(&ctx.cfg.provider);
    let model = providers::chat(&ctx.cfg.provider);
    let clf: Box<dyn EdgeClassifier + '_> = match classifier {
        ClassifierArg::Gold => Box::new(GoldOracle::from_labels(&rows)),
        ClassifierArg::Heuristic => Box::new(HeuristicClassifier::new(&embedder)),
        ClassifierArg::Constant => Box::new(ConstantClassifier(apigraph_core::EdgeType::Non)),
        ClassifierArg::Model => {
            Box::new(ChatEdgeClassifier::new(model.ok_or_else(|| {
                anyhow!("the model classifier needs provider.kind = \"http\"")
            })?))
        }
    };
    let report = evaluate_classifier(clf.as_ref(), &corpus, &splits.test)?;
    let out = ctx.write("bench_report.json", &report.to_json())?;
    println!(
        "train {} / val {} / test {} (discarded {})",
        splits.train.len(),
        splits.val.len(),
        splits.test.len(),
        splits.discarded
    );
    print!("{}", report.table());
    println!("report -> {}", out.display());
    Ok(())
}

fn retrieve(ctx: &Ctx, instances: Option<PathBuf>, selector: Option<SelectorArg>) -> Result<()> {
    let r = &ctx.cfg.retrieval;
    let path = instances
        .or_else(|| r.instances.clone())
        .ok_or_else(|| anyhow!("no instances given (--instances or retrieval.instances)"))?;
    let selector = match selector {
        Some(s) => s,
        None => match r.selector.as_deref() {
            None => SelectorArg::TopRank,
            Some(name) => SelectorArg::from_str(name, true).map_err(|e| anyhow!("retrieval.selector: {e}"))?,
        },
    };
    let corpus = ctx.corpus()?;
    let instances =
        read_instances(&read(&path)?, &corpus).with_context(|| format!("invalid instances {}", path.display()))?;
    let graph = match ctx.graph_path() {
        Some(p) => Some(load_graph(&p)?),
        None => None,
    };
    let embedder = providers::embedder(&ctx.cfg.provider);
    let sel: Box<dyn Selector> = match selector {
        SelectorArg::TopRank => Box::new(TopRankSelector),
        SelectorArg::Model => Box::new(ChatSelector::new(
            providers::chat(&ctx.cfg.provider)
                .ok_or_else(|| anyhow!("the model selector needs provider.kind = \"http\""))?,
        )),
    };
    let report = evaluate_retrieval(
        &instances,
        &corpus,
        graph.as_ref(),
        &embedder,
        sel.as_ref(),
        ctx.cfg.edge_mask()?,
    )?;
    let out = ctx.write("retrieval_report.json", &report.to_json())?;
    let label = if graph.is_some() { "graph" } else { "no graph" };
    print!("{}", metrics_table(&[(label, &report.metrics)]));
    println!("report -> {}", out.display());
    Ok(())
}

struct SubsetArgs {
    kind: Option<String>,
    n: Option<usize>,
    runs: Option<usize>,
    generator: Option<GeneratorArg>,
    generator_graph: Option<PathBuf>,
    pool_size: Option<usize>,
    min_valid: Option<usize>,
}

fn subsets(ctx: &Ctx, args: SubsetArgs) -> Result<()> {
    let s = &ctx.cfg.subsets;
    let kind: PatternKind = args
        .kind
        .or_else(|| s.kind.clone())
        .unwrap_or_else(|| "chain".into())
        .parse()
        .map_err(anyhow::Error::msg)?;
    let n = args.n.or(s.n).unwrap_or(3);
    let runs = args.runs.unwrap_or(s.runs);
    if runs == 0 {
        bail!("--runs must be at least 1");
    }
    let pattern = pattern_edges(kind, n)?;
    let mask = ctx.cfg.edge_mask()?;
    let gold = ctx.require_graph()?;
    let pool = PoolSpec {
        size: args.pool_size.or(s.pool_size),
        min_valid: args.min_valid.unwrap_or(s.min_valid),
        max_tries: s.max_tries,
    };
    let generator = match args.generator {
        Some(g) => g,
        None => match s.generator.as_deref() {
            None => GeneratorArg::Heuristic,
            Some(name) => GeneratorArg::from_str(name, true).map_err(|e| anyhow!("subsets.generator: {e}"))?,
        },
    };
    let corpus;
    let gen: Box<dyn SubsetGenerator + '_> = match generator {
        GeneratorArg::Walk => match &args.generator_graph {
            Some(p) => Box::new(GraphWalkGenerator::from_graph(&load_graph(p)?, mask)),
            None => Box::new(GraphWalkGenerator::from_graph(&gold, mask)),
        },
        GeneratorArg::Heuristic => {
            let c = ctx.corpus()?;
            let adj = heuristic_adjacency(&c, &providers::embedder(&ctx.cfg.provider), s.heuristic_threshold)?;
            Box::new(GraphWalkGenerator::from_adjacency(adj))
        }
        GeneratorArg::Model => {
            corpus = ctx.corpus()?;
            let model = providers::chat(&ctx.cfg.provider)
                .ok_or_else(|| anyhow!("the model generator needs provider.kind = \"http\""))?;
            let connections = match &args.generator_graph {
                Some(p) => Some(load_graph(p)?.project_api_level(mask)),
                None => None,
            };
            Box::new(ChatSubsetGenerator::new(model, &corpus, connections))
        }
    };
    let report = run_pattern_eval(&gold, gen.as_ref(), &pattern, runs, ctx.cfg.seed, mask, &pool)?;
    let out = ctx.write("subsets_report.json", &to_json(&report))?;
    print!("{}", precision_table(std::slice::from_ref(&report)));
    println!("report -> {}", out.display());
    Ok(())
}

fn serve(ctx: &Ctx, queue: Option<PathBuf>, addr: Option<String>, log_path: Option<PathBuf>) -> Result<()> {
    let a = &ctx.cfg.annotation;
    let token = std::env::var(apigraph_annotate::http::TOKEN_ENV)
        .ok()
        .filter(|t| !t.is_empty())
        .ok_or_else(|| {
            anyhow!(
                "set {} to the shared annotation token",
                apigraph_annotate::http::TOKEN_ENV
            )
        })?;
    let queue = queue
        .or_else(|| a.queue.clone())
        .ok_or_else(|| anyhow!("no queue given (--queue or annotation.queue)"))?;
    let addr: SocketAddr = addr
        .unwrap_or_else(|| a.addr.clone())
        .parse()
        .context("invalid listen address")?;
    let report = FilterReport::from_json(&read(&queue)?)
        .with_context(|| format!("invalid filter report {}", queue.display()))?;
    let pairs = report.survivors.into_iter().map(|p| (p.source, p.target)).collect();
    let config = AnnotationConfig {
        annotators: a.annotators.clone(),
        calibration: a.calibration,
    };
    let corpus = ctx.corpus()?;
    let log_path = log_path.or_else(|| a.log.clone()).unwrap_or_else(|| {
        ctx.cfg
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from("out"))
            .join("annotation_events.jsonl")
    });
    if let Some(parent) = log_path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
    }
    let store = AnnotationStore::open(config, corpus, pairs, &log_path)?;
    println!(
        "serving {} pairs on {addr}, events -> {}",
        store.len(),
        log_path.display()
    );
    tokio::runtime::Runtime::new()?.block_on(apigraph_annotate::http::serve(store, token, addr))?;
    Ok(())
}
