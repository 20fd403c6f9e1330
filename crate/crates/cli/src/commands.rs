use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use hotda_core::backend::{Backend, Epsilon, SinkhornBackend};
use hotda_core::bounds::{
    bound_corollary, bound_multisource_combined, bound_multisource_pairwise,
    bound_semisupervised, bound_unsupervised, BoundKind, BoundOptions, BoundReport,
    ConcentrationParams, SourceCollection,
};
use hotda_core::datagen::{generate, ScenarioSpec};
use hotda_core::pipeline::{adapt, AdaptConfig};
use hotda_core::risk::{Classifier, NearestNeighbor};
use hotda_core::structures::{classes_from_labels, clusters_kmeans};
use hotda_core::{hierarchical_wasserstein, wasserstein, Label, LabeledDataset};
use ndarray::Array2;
use serde::Serialize;

use crate::io;
use crate::CliError;

#[derive(Subcommand)]
pub enum Command {
    /// Transport distance between two measure files
    Ot(OtArgs),
    /// Hierarchical Wasserstein distance between two structured datasets
    Hw(HwArgs),
    /// Match structures and transport the source onto the target
    Adapt(AdaptArgs),
    /// Evaluate a generalization bound and write its report as JSON
    Bound(BoundArgs),
    /// Generate a synthetic two-domain Gaussian-mixture scenario
    Gen(GenArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Auto,
    Exact,
    Sinkhorn,
}

#[derive(Args)]
pub struct OtArgs {
    /// First measure file (CSV; optional `weight` column)
    #[arg(long)]
    mu: PathBuf,
    /// Second measure file
    #[arg(long)]
    nu: PathBuf,
    /// Order of the distance (ground cost is Euclidean^p)
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, value_enum, default_value_t = BackendArg::Auto)]
    backend: BackendArg,
    /// Regularization for the sinkhorn backend: a number or `auto`
    #[arg(long, default_value = "auto")]
    epsilon: String,
    /// Marginal tolerance for the sinkhorn backend
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// Write the coupling matrix as CSV
    #[arg(long)]
    plan: Option<PathBuf>,
}

#[derive(Args)]
pub struct HwArgs {
    /// Labeled source dataset (CSV with a `label` column)
    #[arg(long)]
    source: PathBuf,
    /// Target dataset; clustered when it has no `label` column
    #[arg(long)]
    target: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// Cluster count for an unlabeled target (defaults to the source k)
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum, default_value_t = BackendArg::Exact)]
    backend: BackendArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    /// Write the outer coupling as CSV
    #[arg(long)]
    plan: Option<PathBuf>,
}

#[derive(Args)]
pub struct AdaptArgs {
    /// Labeled source dataset
    #[arg(long)]
    source: PathBuf,
    /// Unlabeled target dataset
    #[arg(long)]
    target: PathBuf,
    /// Directory for transported.csv, matching.json, predictions.csv
    #[arg(long)]
    out_dir: PathBuf,
    /// Outer matching regularization: a number or `auto`
    #[arg(long, default_value = "auto")]
    epsilon: String,
    /// Barycentric regularization: a number or `auto`
    #[arg(long, default_value = "auto")]
    epsilon_prime: String,
    /// Order of the inner matching distances
    #[arg(long, default_value_t = 2.0)]
    order: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundKindArg {
    Unsupervised,
    Corollary,
    #[value(name = "semi-supervised")]
    SemiSupervised,
    #[value(name = "multi-pairwise")]
    MultiPairwise,
    #[value(name = "multi-combined")]
    MultiCombined,
}

#[derive(Args)]
pub struct BoundArgs {
    #[arg(long, value_enum)]
    kind: BoundKindArg,
    /// Labeled source dataset; repeat for multi-source kinds
    #[arg(long, required = true)]
    source: Vec<PathBuf>,
    /// Target dataset (label column used only with --diagnostic)
    #[arg(long)]
    target: PathBuf,
    /// Labeled target subset for the semi-supervised bound
    #[arg(long)]
    target_labeled: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Transport-inequality constant governing empirical concentration;
    /// required because no principled default exists
    #[arg(long)]
    zeta_prime: Option<f64>,
    /// Kernel bound K in the sample-complexity terms
    #[arg(long, default_value_t = 1.0, value_name = "K")]
    kernel_bound: f64,
    /// Comma-separated mixture weights (semi: single value)
    #[arg(long)]
    theta: Option<String>,
    /// Comma-separated sample fractions
    #[arg(long)]
    vartheta: Option<String>,
    #[arg(long, value_enum, default_value_t = BackendArg::Exact)]
    backend: BackendArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    /// Use the target's label column for lhs_target_risk and lambda
    #[arg(long, default_value_t = false)]
    diagnostic: bool,
    /// Output path for the report JSON
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 200)]
    n_source: usize,
    #[arg(long, default_value_t = 200)]
    n_target: usize,
    /// Minimum pairwise distance between class centers
    #[arg(long, default_value_t = 10.0)]
    separation: f64,
    /// Isotropic standard deviation of every class
    #[arg(long, default_value_t = 1.0)]
    spread: f64,
    /// Norm of the common source-to-target shift vector
    #[arg(long, default_value_t = 3.0)]
    shift_norm: f64,
    /// Comma-separated permutation of 0..k applied to target identities
    #[arg(long)]
    permute: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_source: PathBuf,
    #[arg(long)]
    out_target: PathBuf,
    /// Also write the target with its true labels
    #[arg(long)]
    out_target_labels: Option<PathBuf>,
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Ot(args) => cmd_ot(args),
        Command::Hw(args) => cmd_hw(args),
        Command::Adapt(args) => cmd_adapt(args),
        Command::Bound(args) => cmd_bound(args),
        Command::Gen(args) => cmd_gen(args),
    }
}

fn parse_epsilon(raw: &str) -> Result<Epsilon, CliError> {
    if raw.eq_ignore_ascii_case("auto") {
        return Ok(Epsilon::AutoMedian);
    }
    let v: f64 = raw
        .parse()
        .map_err(|_| CliError::usage(format!("--epsilon must be a number or 'auto', got '{raw}'")))?;
    if !(v > 0.0) {
        return Err(CliError::usage("--epsilon must be positive"));
    }
    Ok(Epsilon::Fixed(v))
}

fn parse_epsilon_opt(raw: &str) -> Result<Option<f64>, CliError> {
    match parse_epsilon(raw)? {
        Epsilon::AutoMedian => Ok(None),
        Epsilon::Fixed(v) => Ok(Some(v)),
    }
}

fn build_backend(arg: BackendArg, epsilon: Epsilon, tol: f64, max_iter: usize) -> Backend {
    match arg {
        BackendArg::Auto => Backend::Auto,
        BackendArg::Exact => Backend::Exact,
        BackendArg::Sinkhorn => Backend::Sinkhorn(SinkhornBackend {
            epsilon,
            tol,
            max_iter,
        }),
    }
}

fn backend_name(arg: BackendArg) -> &'static str {
    match arg {
        BackendArg::Auto => "auto",
        BackendArg::Exact => "exact",
        BackendArg::Sinkhorn => "sinkhorn",
    }
}

fn parse_weights(raw: &Option<String>, flag: &str) -> Result<Option<Vec<f64>>, CliError> {
    let Some(raw) = raw else { return Ok(None) };
    let parsed: Result<Vec<f64>, _> = raw.split(',').map(|s| s.trim().parse::<f64>()).collect();
    parsed
        .map(Some)
        .map_err(|_| CliError::usage(format!("{flag} must be a comma-separated list of numbers")))
}

fn validate_order(p: f64) -> Result<(), CliError> {
    if !(p >= 1.0) {
        return Err(CliError::usage(format!("--p must be at least 1, got {p}")));
    }
    Ok(())
}

fn cmd_ot(args: OtArgs) -> Result<(), CliError> {
    validate_order(args.p)?;
    let mu = io::read_measure(&args.mu)?;
    let nu = io::read_measure(&args.nu)?;
    let epsilon = parse_epsilon(&args.epsilon)?;
    let backend = build_backend(args.backend, epsilon, args.tol, args.max_iter);
    let result = wasserstein(&mu, &nu, args.p, &backend)?;
    if let Some(path) = args.plan {
        io::write_matrix(&path, &result.plan.coupling)?;
    }
    println!("{}", result.distance);
    Ok(())
}

fn cmd_hw(args: HwArgs) -> Result<(), CliError> {
    validate_order(args.p)?;
    let source = io::read_labeled(&args.source)?;
    let src_dec = classes_from_labels(&source)?;

    let target_table = io::read_table(&args.target)?;
    let tgt_structures = match target_table.labels {
        Some(labels) => {
            let target = LabeledDataset::new(target_table.points, labels)?;
            classes_from_labels(&target)?.structures
        }
        None => {
            let target = hotda_core::UnlabeledDataset::new(target_table.points)?;
            let k = args.k.unwrap_or_else(|| src_dec.k());
            clusters_kmeans(&target, k, args.seed, args.restarts)?.structures
        }
    };

    let backend = build_backend(args.backend, Epsilon::AutoMedian, 1e-9, 10_000);
    let result =
        hierarchical_wasserstein(&src_dec.structures, &tgt_structures, args.p, &backend, &backend)?;
    if let Some(path) = args.plan {
        io::write_matrix(&path, &result.outer_plan.coupling)?;
    }
    println!("{}", result.distance);
    Ok(())
}

#[derive(Serialize)]
struct MatchingDoc {
    epsilon: f64,
    sigma: Vec<usize>,
    ties: Vec<usize>,
    collisions: Vec<usize>,
    class_labels: Vec<String>,
    cluster_sizes: Vec<usize>,
    /// Final k-means inertia, the clustering-quality metric.
    target_inertia: Option<f64>,
    inner_cost: Vec<Vec<f64>>,
    gamma: Vec<Vec<f64>>,
}

fn matrix_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).to_vec()).collect()
}

fn cmd_adapt(args: AdaptArgs) -> Result<(), CliError> {
    let source = io::read_labeled(&args.source)?;
    let target = io::read_unlabeled(&args.target)?;
    let config = AdaptConfig {
        epsilon: parse_epsilon_opt(&args.epsilon)?,
        epsilon_prime: parse_epsilon_opt(&args.epsilon_prime)?,
        matching_order: args.order,
        seed: args.seed,
        restarts: args.restarts,
        ..Default::default()
    };
    let out = adapt(&source, &target, &config)?;

    io::write_points(
        &args.out_dir.join("transported.csv"),
        out.transported.points.view(),
        Some(&out.transported.labels),
    )?;

    let class_labels: Vec<String> = out
        .source_structures
        .class_labels
        .as_ref()
        .map(|ls| ls.iter().map(|l| l.to_string()).collect())
        .unwrap_or_default();
    let cluster_sizes: Vec<usize> = (0..out.target_structures.k())
        .map(|c| {
            out.target_structures
                .membership
                .iter()
                .filter(|&&x| x == c)
                .count()
        })
        .collect();
    let doc = MatchingDoc {
        epsilon: out.matching.epsilon,
        sigma: out.matching.sigma.clone(),
        ties: out.matching.tie_report.clone(),
        collisions: out.matching.collisions(),
        class_labels,
        cluster_sizes,
        target_inertia: out.target_structures.inertia,
        inner_cost: matrix_rows(&out.matching.inner_cost),
        gamma: matrix_rows(&out.matching.outer_plan.coupling),
    };
    let json = serde_json::to_string_pretty(&doc)
        .map_err(|e| CliError::data(format!("cannot serialize matching: {e}")))?;
    io::write_file(&args.out_dir.join("matching.json"), json.as_bytes())?;

    let classifier = NearestNeighbor::fit(&out.transported.as_labeled(), "1nn-transported");
    let predictions = classifier.predict_all(target.points());
    io::write_points(
        &args.out_dir.join("predictions.csv"),
        target.points(),
        Some(&predictions),
    )?;

    println!(
        "adapted {} source points onto {} target points (k = {})",
        source.len(),
        target.len(),
        out.source_structures.k()
    );
    println!("sigma: {:?}", out.matching.sigma);
    if !out.matching.tie_report.is_empty() {
        println!("argmax ties in rows: {:?}", out.matching.tie_report);
    }
    let collisions = out.matching.collisions();
    if !collisions.is_empty() {
        println!("warning: non-bijective assignment for classes {collisions:?}");
    }
    println!("outputs in {}", args.out_dir.display());
    Ok(())
}

#[derive(Serialize)]
struct ParamsDoc {
    delta: f64,
    zeta_prime: f64,
    #[serde(rename = "K")]
    kernel_bound: f64,
    k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vartheta: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct ProvenanceDoc {
    seed: u64,
    backend: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    #[serde(flatten)]
    report: &'a BoundReport,
    params: ParamsDoc,
    provenance: ProvenanceDoc,
}

fn cmd_bound(args: BoundArgs) -> Result<(), CliError> {
    let Some(zeta_prime) = args.zeta_prime else {
        return Err(CliError::usage(
            "--zeta-prime is required: the concentration term depends on the \
             transport-inequality (Talagrand) constant zeta', which is only \
             guaranteed to exist and has no principled default value",
        ));
    };

    let sources: Vec<LabeledDataset> = args
        .source
        .iter()
        .map(|p| io::read_labeled(p))
        .collect::<Result<_, _>>()?;
    let multi = matches!(
        args.kind,
        BoundKindArg::MultiPairwise | BoundKindArg::MultiCombined
    );
    if !multi && sources.len() != 1 {
        return Err(CliError::usage(
            "this bound kind takes exactly one --source",
        ));
    }

    let target_table = io::read_table(&args.target)?;
    let target = hotda_core::UnlabeledDataset::new(target_table.points.clone())?;
    let diag_labels: Option<Vec<Label>> = if args.diagnostic {
        match target_table.labels {
            Some(labels) => Some(labels),
            None => {
                return Err(CliError::data(
                    "--diagnostic needs a label column in the target file",
                ))
            }
        }
    } else {
        None
    };

    let k = classes_from_labels(&sources[0])?.k();
    let params = ConcentrationParams::new(args.delta, zeta_prime, k)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let opts = BoundOptions {
        backend: build_backend(args.backend, Epsilon::AutoMedian, 1e-9, 10_000),
        seed: args.seed,
        restarts: args.restarts,
        cluster_init: None,
        kernel_bound: args.kernel_bound,
    };

    let theta = parse_weights(&args.theta, "--theta")?;
    let vartheta = parse_weights(&args.vartheta, "--vartheta")?;

    let report = match args.kind {
        BoundKindArg::Unsupervised | BoundKindArg::Corollary => {
            let source = &sources[0];
            let h = NearestNeighbor::fit(source, "1nn-source");
            let pool: Vec<Box<dyn Classifier>> = vec![Box::new(h.clone())];
            let labels = diag_labels.as_deref();
            if args.kind == BoundKindArg::Unsupervised {
                bound_unsupervised(source, &target, labels, &h, &pool, &params, &opts)?
            } else {
                bound_corollary(source, &target, labels, &h, &pool, &params, &opts)?
            }
        }
        BoundKindArg::SemiSupervised => {
            let source = &sources[0];
            let labeled_path = args.target_labeled.as_ref().ok_or_else(|| {
                CliError::usage("--target-labeled is required for the semi-supervised bound")
            })?;
            let target_labeled = io::read_labeled(labeled_path)?;
            let theta = match theta.as_deref() {
                Some([t]) => *t,
                Some(_) => {
                    return Err(CliError::usage(
                        "--theta takes a single value for the semi-supervised bound",
                    ))
                }
                None => 0.5,
            };
            let vartheta = match vartheta.as_deref() {
                Some([v]) => Some(*v),
                Some(_) => {
                    return Err(CliError::usage(
                        "--vartheta takes a single value for the semi-supervised bound",
                    ))
                }
                None => None,
            };
            let union = concat_labeled(source, &target_labeled)?;
            let pool: Vec<Box<dyn Classifier>> = vec![
                Box::new(NearestNeighbor::fit(source, "1nn-source")),
                Box::new(NearestNeighbor::fit(&target_labeled, "1nn-target-labeled")),
                Box::new(NearestNeighbor::fit(&union, "1nn-union")),
            ];
            bound_semisupervised(
                source,
                &target_labeled,
                &target,
                &pool,
                &params,
                theta,
                vartheta,
                &opts,
            )?
        }
        BoundKindArg::MultiPairwise | BoundKindArg::MultiCombined => {
            let mut pool: Vec<Box<dyn Classifier>> = sources
                .iter()
                .enumerate()
                .map(|(j, s)| {
                    Box::new(NearestNeighbor::fit(s, format!("1nn-source-{j}")))
                        as Box<dyn Classifier>
                })
                .collect();
            let union = sources
                .iter()
                .skip(1)
                .try_fold(sources[0].clone(), |acc, s| concat_labeled(&acc, s))?;
            pool.push(Box::new(NearestNeighbor::fit(&union, "1nn-union-sources")));
            let collection = SourceCollection::new(sources.clone(), theta.clone(), vartheta.clone())?;
            let labels = diag_labels.as_deref();
            if args.kind == BoundKindArg::MultiPairwise {
                bound_multisource_pairwise(&collection, &target, labels, &pool, &params, &opts)?
            } else {
                bound_multisource_combined(&collection, &target, labels, &pool, &params, &opts)?
            }
        }
    };

    let doc = ReportDoc {
        report: &report,
        params: ParamsDoc {
            delta: args.delta,
            zeta_prime,
            kernel_bound: args.kernel_bound,
            k,
            theta,
            vartheta,
        },
        provenance: ProvenanceDoc {
            seed: args.seed,
            backend: backend_name(args.backend),
            epsilon: None,
        },
    };
    let json = serde_json::to_string_pretty(&doc)
        .map_err(|e| CliError::data(format!("cannot serialize report: {e}")))?;
    io::write_file(&args.out, json.as_bytes())?;

    println!("{}: rhs_total = {}", kind_name(&report.kind), report.rhs_total);
    if let (Some(lhs), Some(sat)) = (report.lhs_target_risk, report.satisfied) {
        println!("target risk {lhs} -> bound {}", if sat { "holds" } else { "VIOLATED" });
    }
    println!("report written to {}", args.out.display());
    Ok(())
}

fn kind_name(kind: &BoundKind) -> &'static str {
    match kind {
        BoundKind::Unsupervised => "unsupervised",
        BoundKind::Corollary => "corollary",
        BoundKind::SemiSupervised => "semi-supervised",
        BoundKind::MultiPairwise => "multi-pairwise",
        BoundKind::MultiCombined => "multi-combined",
    }
}

fn concat_labeled(a: &LabeledDataset, b: &LabeledDataset) -> Result<LabeledDataset, CliError> {
    if a.dim() != b.dim() {
        return Err(CliError::data("datasets have different dimensions"));
    }
    let mut points = Array2::zeros((a.len() + b.len(), a.dim()));
    for i in 0..a.len() {
        points.row_mut(i).assign(&a.points().row(i));
    }
    for i in 0..b.len() {
        points.row_mut(a.len() + i).assign(&b.points().row(i));
    }
    let mut labels = a.labels().to_vec();
    labels.extend_from_slice(b.labels());
    LabeledDataset::new(points, labels).map_err(CliError::from)
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let mut spec = ScenarioSpec::separated(
        args.k,
        args.d,
        args.n_source,
        args.n_target,
        args.separation,
        args.spread,
        args.shift_norm,
        args.seed,
    )
    .map_err(|e| CliError::usage(e.to_string()))?;
    if let Some(raw) = &args.permute {
        let perm: Result<Vec<usize>, _> =
            raw.split(',').map(|s| s.trim().parse::<usize>()).collect();
        spec.label_permutation = Some(perm.map_err(|_| {
            CliError::usage("--permute must be a comma-separated permutation of 0..k")
        })?);
    }
    let (source, target_labeled) = generate(&spec).map_err(CliError::from)?;

    io::write_points(&args.out_source, source.points(), Some(source.labels()))?;
    io::write_points(&args.out_target, target_labeled.points(), None)?;
    if let Some(path) = &args.out_target_labels {
        io::write_points(path, target_labeled.points(), Some(target_labeled.labels()))?;
    }
    println!(
        "wrote {} source and {} target points (k = {}, d = {})",
        source.len(),
        target_labeled.len(),
        args.k,
        args.d
    );
    Ok(())
}
