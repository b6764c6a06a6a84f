//! The `qhmm` command line.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::circuits::{efficient_su2, real_amplitudes, Entanglement, RotationPair};
use crate::error::{Error, Result};
use crate::experiments::{self, bin_samples, landscape_study, write_samples_csv, Experiment, ReproduceOptions, WalkMode};
use crate::language::{
    empirical_estimate, format_sequence, hankel, order_estimate, read_tables_csv, write_tables_csv,
    DistributionTable,
};
use crate::learning::{
    evolve, flatten_target, train_ansatz_restarts, AnsatzProblem, HypothesisSpace, InitialState, LearningConfig,
};
use crate::linalg::DEFAULT_RANK_TOL;
use crate::optimize;
use crate::qhmm::{quantize_classical, Model, QhmmUnitary};

#[derive(Parser, Debug)]
#[command(name = "qhmm", version, about = "Simulate, analyze and learn quantum hidden Markov models")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct SeedArg {
    /// RNG seed; a random one is drawn and logged when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl SeedArg {
    fn resolve(&self) -> u64 {
        self.seed.unwrap_or_else(|| {
            let s = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_nanos() as u64);
            eprintln!("seed: {s}");
            s
        })
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample sequences from a model.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value_t = 10_000)]
        shots: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact distribution of length-t sequences.
    Distribution {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Hankel matrix and rank of a model or of target tables.
    Hankel {
        #[arg(long, conflicts_with = "target")]
        model: Option<PathBuf>,
        #[arg(long)]
        target: Option<PathBuf>,
        /// Longest prefix and suffix.
        #[arg(long, default_value_t = 2)]
        t: usize,
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert a classical HMM into an equivalent QHMM.
    Quantize {
        #[arg(long)]
        model: PathBuf,
        /// Emit the unitary form with this emission dimension instead of Kraus form.
        #[arg(long)]
        emission_dim: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evolutionary learning of a circuit QHMM.
    LearnEvo {
        #[command(flatten)]
        target: TargetArgs,
        /// Learning config JSON; missing fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the parameters of an ansatz circuit.
    LearnAnsatz {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long, value_enum, default_value_t = Template::RealAmplitudes)]
        template: Template,
        #[arg(long, default_value = "full")]
        entanglement: String,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long, default_value = "rzrx")]
        rotations: String,
        #[arg(long, default_value_t = 1)]
        state_qubits: usize,
        #[arg(long, default_value_t = 1)]
        emission_qubits: usize,
        /// Optimizer label: tnc, cbla, bfsg, gc, slsqp or nm.
        #[arg(long, default_value = "nm")]
        optimizer: String,
        #[arg(long, default_value_t = 10)]
        restarts: usize,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample the fitness landscape around a circuit model.
    Landscape {
        /// Unitary model JSON with a circuit.
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2")]
        rates: Vec<f64>,
        /// Longest sequence length compared.
        #[arg(long, default_value_t = 5)]
        t: usize,
        #[arg(long, default_value = "star")]
        mode: String,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a named reproduction experiment.
    Reproduce {
        /// table2, monras_ansatz, market_ansatz, market_evo or gaussian_evo.
        name: String,
        #[arg(long, default_value_t = 10)]
        restarts: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Template {
    RealAmplitudes,
    EfficientSu2,
}

/// A learning target: a tables CSV or a model whose distributions are used.
#[derive(Args, Debug, Clone)]
pub struct TargetArgs {
    /// `sequence,probability` CSV with one block per length.
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    pub target: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Longest target length.
    #[arg(long, default_value_t = 5)]
    pub t: usize,
}

impl TargetArgs {
    fn load(&self) -> Result<Vec<DistributionTable>> {
        let mut tables = match (&self.target, &self.model) {
            (Some(p), _) => read_tables_csv(fs::File::open(p)?, None)?,
            (None, Some(p)) => {
                let m = load_model(p)?;
                (1..=self.t).map(|t| m.distribution(t)).collect::<Result<_>>()?
            }
            (None, None) => return Err(Error::Config("need --target or --model".into())),
        };
        tables.retain(|t| t.length() >= 1 && t.length() <= self.t);
        if tables.is_empty() {
            return Err(Error::Empty("no target tables within the length limit".into()));
        }
        Ok(tables)
    }
}

fn load_model(p: &Path) -> Result<Model> {
    Model::from_json(&fs::read_to_string(p)?)
}

fn out_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p)?;
    Ok(())
}

fn write_json<T: Serialize>(p: &Path, v: &T) -> Result<()> {
    fs::write(p, serde_json::to_string_pretty(v)? + "\n")?;
    Ok(())
}

fn write_tables(p: &Path, tables: &[DistributionTable]) -> Result<()> {
    write_tables_csv(tables, fs::File::create(p)?)
}

fn hankel_of_tables(tables: &[DistributionTable]) -> impl Fn(&[usize]) -> f64 + '_ {
    move |s: &[usize]| {
        if s.is_empty() {
            return 1.0;
        }
        tables
            .iter()
            .find(|t| t.length() == s.len())
            .map_or(f64::NAN, |t| t.get(s))
    }
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate {
            model,
            t,
            shots,
            seed,
            out,
        } => {
            let m = load_model(&model)?;
            let seed = seed.resolve();
            let seqs = m.simulate(t, shots, seed)?;
            out_dir(&out)?;
            let k = m.n_symbols();
            let mut lines = String::new();
            for s in &seqs {
                lines.push_str(&format_sequence(s, k));
                lines.push('\n');
            }
            fs::write(out.join("sequences.csv"), lines)?;
            if t > 0 && !seqs.is_empty() {
                write_tables(&out.join("empirical.csv"), &[empirical_estimate(&seqs, k, t)?])?;
            }
        }
        Command::Distribution { model, t, out } => {
            let m = load_model(&model)?;
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                out_dir(dir)?;
            }
            write_tables(&out, &[m.distribution(t)?])?;
        }
        Command::Hankel {
            model,
            target,
            t,
            tol,
            out,
        } => {
            let (h, k) = match (model, target) {
                (Some(p), _) => {
                    let m = load_model(&p)?;
                    let k = m.n_symbols();
                    (hankel(|s| m.sequence_probability(s).unwrap_or(f64::NAN), k, t, t)?, k)
                }
                (None, Some(p)) => {
                    let tables = read_tables_csv(fs::File::open(p)?, None)?;
                    let k = tables.first().map_or(1, |t| t.alphabet_size());
                    if !(1..=2 * t).all(|l| tables.iter().any(|x| x.length() == l)) {
                        return Err(Error::Config(format!("target needs every length 1..={}", 2 * t)));
                    }
                    (hankel(hankel_of_tables(&tables), k, t, t)?, k)
                }
                (None, None) => return Err(Error::Config("need --model or --target".into())),
            };
            out_dir(&out)?;
            h.write_csv(k, fs::File::create(out.join("hankel.csv"))?)?;
            let est = order_estimate(&h, tol);
            write_json(
                &out.join("rank.json"),
                &serde_json::json!({
                    "tol": tol,
                    "rank": est.rank,
                    "classical_order": est.classical_order,
                    "quantum_dim": est.quantum_dim,
                    "singular_values": h.singular_values(),
                }),
            )?;
            println!("rank {}", est.rank);
        }
        Command::Quantize {
            model,
            emission_dim,
            out,
        } => {
            let Model::Classical(h) = load_model(&model)? else {
                return Err(Error::InvalidModel("quantize expects a classical HMM".into()));
            };
            let q = quantize_classical(&h)?;
            let m = match emission_dim {
                Some(d) => Model::Unitary(QhmmUnitary::from_kraus(&q, d)?),
                None => Model::Kraus(q),
            };
            fs::write(out, m.to_json()? + "\n")?;
        }
        Command::LearnEvo {
            target,
            config,
            seed,
            out,
        } => {
            let tables = target.load()?;
            let raw: serde_json::Value = match config {
                Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
                None => serde_json::json!({}),
            };
            let file_seed = raw.get("seed").is_some();
            let mut cfg: LearningConfig = serde_json::from_value(raw)?;
            // the flag wins over the file
            if seed.seed.is_some() || !file_seed {
                cfg.seed = seed.resolve();
            }
            cfg.n_max = cfg.n_max.min(target.t);
            let problem = cfg.problem(&tables)?;
            let report = evolve(&problem, &cfg)?;
            eprintln!(
                "{} generations, divergence {:.3e}, {:.1}s",
                report.generations.len(),
                report.best.divergence,
                report.wall_time_s
            );
            out_dir(&out)?;
            write_json(&out.join("report.json"), &report)?;
            let model = problem.space.model(&report.best.circuit)?;
            fs::write(out.join("best_model.json"), Model::Unitary(model).to_json()? + "\n")?;
            report.write_trace_csv(fs::File::create(out.join("trace.csv"))?)?;
        }
        Command::LearnAnsatz {
            target,
            template,
            entanglement,
            reps,
            rotations,
            state_qubits,
            emission_qubits,
            optimizer,
            restarts,
            budget,
            seed,
            out,
        } => {
            let tables = target.load()?;
            let k = tables[0].alphabet_size();
            let n = state_qubits + emission_qubits;
            let ent: Entanglement = entanglement.parse()?;
            let circuit = match template {
                Template::RealAmplitudes => real_amplitudes(n, reps, ent)?,
                Template::EfficientSu2 => efficient_su2(n, reps, ent, rotations.parse::<RotationPair>()?)?,
            };
            let mut space = HypothesisSpace::new(state_qubits, emission_qubits, k)?;
            space.rho0 = InitialState::MaximallyMixed;
            let p = AnsatzProblem::new(circuit, space, flatten_target(&tables))?;
            let kind = optimize::lookup(&optimizer)?;
            let (best, runs) = train_ansatz_restarts(&p, kind, restarts, budget, seed.resolve())?;
            eprintln!("best cost {:.3e} (restart {})", best.cost, best.restart);
            out_dir(&out)?;
            write_json(
                &out.join("params.json"),
                &serde_json::json!({
                    "cost": best.cost,
                    "params": best.params,
                    "restart": best.restart,
                    "costs": runs.iter().map(|r| r.cost).collect::<Vec<_>>(),
                }),
            )?;
            let mut csv = String::from("restart,iteration,cost\n");
            for r in &runs {
                for (i, c) in r.trace.iter().enumerate() {
                    csv.push_str(&format!("{},{},{}\n", r.restart, i, c));
                }
            }
            fs::write(out.join("training_curve.csv"), csv)?;
            fs::write(out.join("model.json"), Model::Unitary(p.model(&best.params)?).to_json()? + "\n")?;
        }
        Command::Landscape {
            model,
            steps,
            rates,
            t,
            mode,
            seed,
            out,
        } => {
            let Model::Unitary(q) = load_model(&model)? else {
                return Err(Error::InvalidModel("landscape needs a unitary model with a circuit".into()));
            };
            let circuit = q
                .circuit()
                .ok_or_else(|| Error::InvalidModel("landscape needs a circuit, not a bare unitary".into()))?
                .clone();
            let mode: WalkMode = mode.parse()?;
            let study = landscape_study(&q.spec(), &circuit, steps, &rates, t, mode, seed.resolve())?;
            out_dir(&out)?;
            let mut summary = Vec::new();
            for (corr, samples) in &study {
                write_samples_csv(samples, fs::File::create(out.join(format!("samples_{}.csv", corr.rate)))?)?;
                summary.push(serde_json::json!({
                    "rate": corr.rate,
                    "pearson": corr.pearson,
                    "max_bound_excess": corr.max_bound_excess,
                    "bins": bin_samples(samples, 0.05),
                }));
            }
            write_json(&out.join("correlation.json"), &summary)?;
        }
        Command::Reproduce {
            name,
            restarts,
            seed,
            out,
        } => {
            let exp: Experiment = name.parse()?;
            let opts = ReproduceOptions {
                seed: seed.resolve(),
                restarts,
                ..ReproduceOptions::default()
            };
            let report = experiments::reproduce(exp, &opts)?;
            out_dir(&out)?;
            for (file, body) in &report.artifacts {
                fs::write(out.join(file), body)?;
            }
            write_json(&out.join("report.json"), &report)?;
            for c in &report.checks {
                println!(
                    "{} {}: {:.3e} (threshold {:.1e})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.achieved,
                    c.threshold
                );
            }
            eprintln!("{:.1}s", report.wall_time_s);
            if !report.passed {
                return Err(Error::Config(format!("{} did not meet its thresholds", report.name)));
            }
        }
    }
    Ok(())
}
