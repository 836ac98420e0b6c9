use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use relpool::experiment::{build_csl_dataset, emit_report, make_folds, run_experiment, ModelKind, TrainConfig};
use relpool::graph::io::{read_graph, write_graph};
use relpool::graph::{brute_force_isomorphic, make_csl, CslParams, Graph, Permutation};
use relpool::nn::{Activation, Matrix, Mlp, ParamStore, Tape};
use relpool::rp::{kary_rp, rp_exact_joint, rp_pool, GraphFunction, KaryMode, RpConfig};
use relpool::wl::{wl_fingerprint, wl_refine};

#[derive(Parser)]
#[command(name = "relpool", version, about = "Relational pooling toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a circulant skip-link graph as JSON.
    GenCsl {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        r: usize,
        /// Relabel the vertices with a random permutation from this seed.
        #[arg(long)]
        permute_seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact isomorphism test (at most 12 vertices).
    IsoCheck { a: PathBuf, b: PathBuf },
    /// Whether 1-WL colour refinement separates two graphs.
    WlTest {
        a: PathBuf,
        b: PathBuf,
        /// Also print the stable colouring of each graph.
        #[arg(long)]
        colors: bool,
    },
    /// Exact joint or k-ary pooling of a fixed function; prints the vector as JSON.
    RpExact {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, value_enum, default_value_t = ExactStrategy::Exact)]
        strategy: ExactStrategy,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum, default_value_t = FunctionKind::Vec)]
        f: FunctionKind,
        /// Seed for the random MLP.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Pooling described by a JSON pooling config.
    Pool {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = FunctionKind::Vec)]
        f: FunctionKind,
    },
    /// Cross-validated CSL classification; writes runs.csv, summary.json and config.json.
    Train {
        #[arg(long, value_enum, default_value_t = ModelArg::RpGin)]
        model: ModelArg,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        /// Mini-batch size; 0 trains full-batch.
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        id_mod: Option<usize>,
        #[arg(long)]
        inference_samples: Option<usize>,
        #[arg(long)]
        init_seeds: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        folds_seed: u64,
        #[arg(long, default_value_t = 0)]
        data_seed: u64,
        /// JSON training config; flags override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExactStrategy {
    Exact,
    Kary,
}

#[derive(Clone, Copy, ValueEnum)]
enum FunctionKind {
    /// The flattened tensor itself.
    Vec,
    /// A seeded random two-layer MLP on the flattened tensor.
    Mlp,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Gin,
    RpGin,
}

/// A fixed random MLP applied to `vec(G)` of graphs with `n` vertices.
struct VecMlp {
    mlp: Mlp,
    store: ParamStore,
}

impl VecMlp {
    fn new(input: usize, seed: u64) -> Result<Self> {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mlp = Mlp::new(&mut store, "f", &[input, 16, 4], Activation::Relu, false, &mut rng)?;
        Ok(Self { mlp, store })
    }
}

impl GraphFunction for VecMlp {
    fn eval(&self, g: &Graph) -> relpool::Result<Vec<f64>> {
        let mut tape = Tape::new();
        let x = tape.leaf(Matrix::row_vector(g.vec()));
        let y = self.mlp.forward(&mut tape, &self.store, x)?;
        Ok(tape.value(y).as_slice().to_vec())
    }
}

fn vec_len(g: &Graph, k: usize) -> usize {
    k * (k * (1 + g.d_e()) + g.d_v())
}

fn function(kind: FunctionKind, g: &Graph, k: usize, seed: u64) -> Result<Box<dyn GraphFunction>> {
    Ok(match kind {
        FunctionKind::Vec => Box::new(|h: &Graph| h.vec()),
        FunctionKind::Mlp => Box::new(VecMlp::new(vec_len(g, k), seed)?),
    })
}

fn print_vector(v: &[f64]) -> Result<()> {
    println!("{}", serde_json::to_string(v)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenCsl { m, r, permute_seed, out } => {
            let mut g = make_csl(CslParams::new(m, r)?)?;
            if let Some(seed) = permute_seed {
                g = g.permute(&Permutation::random(m, &mut ChaCha8Rng::seed_from_u64(seed)))?;
            }
            write_graph(&g, &out).with_context(|| format!("writing {}", out.display()))?;
        }
        Command::IsoCheck { a, b } => {
            let (ga, gb) = (read_graph(&a)?, read_graph(&b)?);
            let iso = brute_force_isomorphic(&ga, &gb)?;
            println!("{}", if iso { "isomorphic" } else { "nonisomorphic" });
        }
        Command::WlTest { a, b, colors } => {
            let (ga, gb) = (read_graph(&a)?, read_graph(&b)?);
            let (fa, fb) = (wl_fingerprint(&ga), wl_fingerprint(&gb));
            println!("{}", if fa == fb { "WL-equivalent" } else { "WL-distinguishable" });
            if colors {
                for (name, g) in [("a", &ga), ("b", &gb)] {
                    let c = wl_refine(g, g.n() + 1);
                    println!("{name}: rounds {} classes {} colors {:?}", c.round, c.num_classes(), c.colors);
                }
            }
        }
        Command::RpExact { graph, strategy, k, f, seed } => {
            let g = read_graph(&graph)?;
            let pooled = match strategy {
                ExactStrategy::Exact => {
                    if k.is_some() {
                        bail!("--k only applies to --strategy kary");
                    }
                    rp_exact_joint(&g, function(f, &g, g.n(), seed)?.as_ref())?
                }
                ExactStrategy::Kary => {
                    let Some(k) = k else { bail!("--strategy kary needs --k") };
                    let func = function(f, &g, k, seed)?;
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    kary_rp(&g, func.as_ref(), k, KaryMode::Exact, false, &mut rng)?.value
                }
            };
            print_vector(&pooled)?;
        }
        Command::Pool { graph, config, f } => {
            let g = read_graph(&graph)?;
            let cfg: RpConfig = serde_json::from_str(&std::fs::read_to_string(&config)?)
                .with_context(|| format!("parsing {}", config.display()))?;
            let func = function(f, &g, cfg.k_ary.unwrap_or(g.n()), cfg.seed)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            print_vector(&rp_pool(&g, func.as_ref(), &cfg, &mut rng)?)?;
        }
        Command::Train {
            model,
            epochs,
            lr,
            batch_size,
            id_mod,
            inference_samples,
            init_seeds,
            seed,
            folds_seed,
            data_seed,
            config,
            out,
        } => {
            let mut cfg = match config {
                Some(path) => serde_json::from_str(&std::fs::read_to_string(&path)?)
                    .with_context(|| format!("parsing {}", path.display()))?,
                None => TrainConfig::default(),
            };
            cfg.model = match model {
                ModelArg::Gin => ModelKind::Gin,
                ModelArg::RpGin => ModelKind::RpGin,
            };
            cfg.seed = seed;
            if let Some(v) = epochs {
                cfg.epochs = v;
            }
            if let Some(v) = lr {
                cfg.lr = v;
            }
            if let Some(v) = batch_size {
                cfg.batch_size = (v > 0).then_some(v);
            }
            if let Some(v) = id_mod {
                cfg.id_modulus = v;
            }
            if let Some(v) = inference_samples {
                cfg.inference_samples = v;
            }
            if let Some(v) = init_seeds {
                cfg.init_seeds = v;
            }
            let ds = build_csl_dataset(data_seed)?;
            let plan = make_folds(&ds, folds_seed)?;
            let report = run_experiment(&ds, &plan, &cfg)?;
            emit_report(&report, &out).with_context(|| format!("writing report to {}", out.display()))?;
            let s = &report.by_run;
            println!("runs   {:>3}  mean {:.1}  median {:.1}  max {:.1}  min {:.1}  sd {:.1}", s.count, s.mean, s.median, s.max, s.min, s.sd);
            let s = &report.by_fold;
            println!("folds  {:>3}  mean {:.1}  median {:.1}  max {:.1}  min {:.1}  sd {:.1}", s.count, s.mean, s.median, s.max, s.min, s.sd);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
