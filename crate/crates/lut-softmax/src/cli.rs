//! Command-line front end.
//!
//! Exit codes: 0 on success (including `--help` and `--version`), 1 on usage
//! errors, 2 on runtime errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use lut_softmax_core::presets::{
    exp_table, rexp_tables_with_boundary, two_d_tables, DetrCase, DEFAULT_SCALE_EX,
    DEFAULT_SCALE_SUM,
};
use lut_softmax_core::{
    build_lut_exp, build_lut_sigma, softmax_op_count, AttentionConfig, Engine, KernelConfig, Lut,
    LutKind, Method, Precision,
};
use serde_json::json;

use crate::config::{config_to_args, read_config, FlagKind};
use crate::corpus::{CorpusSpec, Distribution, DEFAULT_SEED};
use crate::error::{HarnessError, Result};
use crate::histogram::{fraction_above, sum_exp_histogram};
use crate::io::{luts_to_json, probs_to_csv, read_logits, read_luts, to_pretty_json, write_luts};
use crate::probe::stacked_error_probe;
use crate::sweep::{run_engine, sweep, to_csv, to_json};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "lut-softmax",
    version,
    about = "Divider-free lookup-table softmax toolkit"
)]
pub struct Cli {
    /// Flat `key = value` file of default flag values for the subcommand.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Worker threads for corpus-level work.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,

    /// Seed for every generated corpus and probe.
    #[arg(long, global = true, env = "LUT_SOFTMAX_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableMethod {
    Rexp,
    #[value(name = "2dlut")]
    TwoDLut,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a table pair and write it as a binary table file.
    Lutgen {
        #[arg(long)]
        method: TableMethod,
        #[arg(long, default_value = "uint8")]
        precision: Precision,
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// Overrides the alpha table's last index (REXP only).
        #[arg(long, conflicts_with = "detr_case")]
        alpha_boundary: Option<u32>,
        /// Detection-model alpha boundary preset, 1 to 3 (REXP only).
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        detr_case: Option<u8>,
        /// Exp table length (2D only).
        #[arg(long)]
        exp_entries: Option<usize>,
        /// 2D table row quantum.
        #[arg(long)]
        scale_ex: Option<f64>,
        /// 2D table column quantum.
        #[arg(long)]
        scale_sum: Option<f64>,
        /// Largest denominator covered by the 2D table.
        #[arg(long)]
        max_sum: Option<f64>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Apply one method to every vector of a logit file.
    Softmax {
        #[arg(long, default_value = "rexp")]
        method: Method,
        #[arg(long, default_value = "uint8")]
        precision: Precision,
        /// Logits as CSV, or `.bin` for the binary f32 layout.
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        /// Table file from `lutgen`; its bit width replaces `--precision`.
        #[arg(long, value_name = "PATH")]
        lut: Option<PathBuf>,
        #[arg(long)]
        dequant_scale: Option<f64>,
        /// Snap inputs to multiples of `1 / scale` first.
        #[arg(long)]
        input_scale: Option<f64>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Error of each method and precision against the exact softmax.
    Sweep {
        #[arg(long, value_delimiter = ',', default_values = ["rexp", "2dlut", "rexp-raw", "logexp", "logexp-plus"])]
        methods: Vec<Method>,
        #[arg(long, value_delimiter = ',', default_values = ["uint2", "uint4", "uint8", "int16"])]
        precisions: Vec<Precision>,
        #[arg(long, default_value_t = 1000)]
        n_vectors: usize,
        #[arg(long, default_value_t = 1)]
        min_len: usize,
        #[arg(long, default_value_t = 128)]
        max_len: usize,
        /// `uniform(a,b)`, `gaussian(m,s)` or `attention(d)`; repeatable.
        #[arg(long)]
        dist: Vec<Distribution>,
        /// Use a logit file instead of a generated corpus.
        #[arg(long = "in", value_name = "PATH")]
        input: Option<PathBuf>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Histogram of the max-normalized softmax denominator.
    Hist {
        #[arg(long, default_value_t = 1000)]
        n_vectors: usize,
        #[arg(long, default_value_t = 128)]
        max_len: usize,
        /// Defaults to `attention(64)`; repeatable.
        #[arg(long)]
        dist: Vec<Distribution>,
        #[arg(long = "in", value_name = "PATH")]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        bins: usize,
        #[arg(long, default_value_t = 0.0)]
        lo: f64,
        #[arg(long, default_value_t = 500.0)]
        hi: f64,
        /// Reported as the fraction of denominators above it.
        #[arg(long, default_value_t = 60.0)]
        threshold: f64,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Per-layer divergence of a stacked attention probe.
    Attn {
        #[arg(long, default_value = "rexp")]
        method: Method,
        #[arg(long, default_value = "uint8")]
        precision: Precision,
        #[arg(long, default_value_t = 6)]
        layers: usize,
        #[arg(long, default_value_t = 8)]
        heads: usize,
        #[arg(long, default_value_t = 32)]
        seq: usize,
        #[arg(long, default_value_t = 64)]
        d_k: usize,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Number of softmax evaluations in an encoder.
    Opcount {
        #[arg(long)]
        layers: usize,
        #[arg(long)]
        heads: usize,
        #[arg(long)]
        seq: usize,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Dump a table file.
    Inspect {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match with_config_args(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Some(n) = cli.threads {
        // Fails only if a pool already exists, e.g. on a second call in-process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.into())
            .build_global();
    }
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

/// Inserts config file values after the subcommand name, skipping any flag
/// already present on the command line.
fn with_config_args(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let strings: Vec<Option<&str>> = argv.iter().map(|a| a.to_str()).collect();
    let mut config = None;
    let mut sub = None;
    let mut i = 1;
    while i < strings.len() {
        match strings[i] {
            Some("--config") => {
                config = strings.get(i + 1).copied().flatten();
                i += 2;
                continue;
            }
            Some(s) if s.starts_with("--config=") => config = Some(&s["--config=".len()..]),
            Some("--threads" | "--seed") => i += 1,
            Some(s) if !s.starts_with('-') && sub.is_none() => sub = Some((i, s)),
            _ => {}
        }
        i += 1;
    }
    let (Some(path), Some((at, name))) = (config, sub) else {
        return Ok(argv);
    };
    let map = read_config(Path::new(path))?;

    let root = Cli::command();
    let Some(sub_cmd) = root.find_subcommand(name) else {
        return Ok(argv);
    };
    let present = |key: &str| {
        let flag = format!("--{key}");
        strings
            .iter()
            .flatten()
            .any(|s| *s == flag || s.starts_with(&format!("{flag}=")))
    };
    let lookup = |key: &str| {
        if key == "config" || present(key) {
            return None;
        }
        root.get_arguments()
            .chain(sub_cmd.get_arguments())
            .find(|a| a.get_long() == Some(key))
            .map(|a| {
                if a.get_action().takes_values() {
                    FlagKind::Value
                } else {
                    FlagKind::Switch
                }
            })
    };
    let extra = config_to_args(&map, lookup);
    let mut out = argv;
    out.splice(at + 1..at + 1, extra.into_iter().map(OsString::from));
    Ok(out)
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| HarnessError::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|()| stdout.flush())
                .map_err(|e| HarnessError::io("<stdout>", e))
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Lutgen {
            method,
            precision,
            out,
            alpha_boundary,
            detr_case,
            exp_entries,
            scale_ex,
            scale_sum,
            max_sum,
            format,
        } => {
            let luts: Vec<Lut> = match method {
                TableMethod::Rexp => {
                    let x_s = match (alpha_boundary, detr_case) {
                        (Some(b), _) => *b,
                        (None, Some(c)) => DetrCase::ALL[usize::from(*c) - 1].alpha_boundary(),
                        (None, None) => precision.alpha_boundary(),
                    };
                    rexp_tables_with_boundary(*precision, x_s)?
                        .into_luts()
                        .into()
                }
                TableMethod::TwoDLut => {
                    let spec = precision.spec();
                    let exp = match exp_entries {
                        Some(n) => {
                            let n = *n;
                            let step = (2.0 * spec.q_max() as f64).ln() / (n.max(2) - 1) as f64;
                            build_lut_exp(spec, n, step)?.with_zero_tail()
                        }
                        None => exp_table(*precision),
                    };
                    let sigma = if scale_ex.is_some() || scale_sum.is_some() || max_sum.is_some() {
                        build_lut_sigma(
                            spec,
                            scale_ex.unwrap_or(DEFAULT_SCALE_EX),
                            scale_sum.unwrap_or(DEFAULT_SCALE_SUM),
                            max_sum.unwrap_or(precision.sigma_max_sum()),
                        )?
                    } else {
                        two_d_tables(*precision).sigma
                    };
                    vec![exp.into(), sigma.into()]
                }
            };
            write_luts(out, &luts)?;
            let text = match format {
                Format::Json => to_pretty_json(&luts_to_json(&luts))?,
                Format::Csv => luts_summary_csv(&luts),
            };
            emit(&text, None)
        }
        Command::Softmax {
            method,
            precision,
            input,
            lut,
            dequant_scale,
            input_scale,
            out,
            format,
        } => {
            let engine = build_engine(
                *method,
                *precision,
                lut.as_deref(),
                *dequant_scale,
                *input_scale,
            )?;
            let vectors = read_logits(input)?;
            let probs = run_engine(&engine, &vectors)?;
            let text = match format {
                Format::Csv => probs_to_csv(&probs),
                Format::Json => to_pretty_json(&json!({
                    "method": method.name(),
                    "outputs": probs.iter().map(|p| p.values()).collect::<Vec<_>>(),
                }))?,
            };
            emit(&text, out.as_deref())
        }
        Command::Sweep {
            methods,
            precisions,
            n_vectors,
            min_len,
            max_len,
            dist,
            input,
            out,
            format,
        } => {
            let corpus = match input {
                Some(path) => read_logits(path)?,
                None => {
                    let mut spec = CorpusSpec::default_with(*n_vectors, cli.seed);
                    if !dist.is_empty() {
                        spec.distributions = dist.clone();
                    }
                    spec.min_len = *min_len;
                    spec.max_len = *max_len;
                    spec.generate()?
                }
            };
            let rows = sweep(methods, precisions, &corpus)?;
            let text = match format {
                Format::Csv => to_csv(&rows),
                Format::Json => to_pretty_json(&to_json(&rows))?,
            };
            emit(&text, out.as_deref())
        }
        Command::Hist {
            n_vectors,
            max_len,
            dist,
            input,
            bins,
            lo,
            hi,
            threshold,
            out,
            format,
        } => {
            let vectors = match input {
                Some(path) => read_logits(path)?,
                None => {
                    let mut spec = CorpusSpec::nlp(*n_vectors, *max_len, cli.seed);
                    if !dist.is_empty() {
                        spec.distributions = dist.clone();
                    }
                    spec.generate()?
                }
            };
            let hist = sum_exp_histogram(&vectors, *bins, (*lo, *hi))?;
            let text = match format {
                Format::Csv => hist.to_csv(),
                Format::Json => to_pretty_json(&json!({
                    "histogram": hist,
                    "threshold": threshold,
                    "fraction_above": fraction_above(&vectors, *threshold),
                }))?,
            };
            emit(&text, out.as_deref())
        }
        Command::Attn {
            method,
            precision,
            layers,
            heads,
            seq,
            d_k,
            out,
            format,
        } => {
            let cfg = AttentionConfig::with_head_dim(*layers, *heads, *seq, *d_k)?;
            let engine = Engine::preset(*method, *precision);
            let reports = stacked_error_probe(&cfg, &engine, cli.seed)?;
            let text = match format {
                Format::Json => to_pretty_json(&reports)?,
                Format::Csv => {
                    let mut s = String::from(
                        "layer,output_linf,output_l1_mean,softmax_linf,softmax_l1_mean,softmax_kl_div,softmax_norm_dev\n",
                    );
                    for r in &reports {
                        let _ = writeln!(
                            s,
                            "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                            r.layer,
                            r.output_linf,
                            r.output_l1_mean,
                            r.softmax.linf,
                            r.softmax.l1_mean,
                            r.softmax.kl_div,
                            r.softmax.norm_dev
                        );
                    }
                    s
                }
            };
            emit(&text, out.as_deref())
        }
        Command::Opcount {
            layers,
            heads,
            seq,
            format,
        } => {
            let cfg = AttentionConfig::with_head_dim(*layers, *heads, *seq, 1)?;
            let ops = softmax_op_count(&cfg);
            let text = match format {
                Format::Csv => format!("{ops}\n"),
                Format::Json => to_pretty_json(&json!({
                    "layers": layers,
                    "heads": heads,
                    "seq": seq,
                    // Strings keep values beyond 2^53 exact.
                    "softmax_ops": ops.to_string(),
                }))?,
            };
            emit(&text, None)
        }
        Command::Inspect { input, format } => {
            let luts = read_luts(input)?;
            let text = match format {
                Format::Json => to_pretty_json(&luts_to_json(&luts))?,
                Format::Csv => luts_summary_csv(&luts),
            };
            emit(&text, None)
        }
    }
}

fn luts_summary_csv(luts: &[Lut]) -> String {
    let mut s = String::from("kind,bits,rows,cols,bytes\n");
    for lut in luts {
        let (rows, cols) = lut.dims();
        let kind = match lut {
            Lut::OneD(t) => t.kind().name(),
            Lut::TwoD(_) => "sigma_2d",
        };
        let _ = writeln!(
            s,
            "{kind},{},{rows},{cols},{}",
            lut.spec().bits(),
            lut.byte_size()
        );
    }
    let total: usize = luts.iter().map(Lut::byte_size).sum();
    let _ = writeln!(s, "total,,,,{total}");
    s
}

/// Preset engine, or one built from a table file for the two table methods.
fn build_engine(
    method: Method,
    precision: Precision,
    lut: Option<&Path>,
    dequant_scale: Option<f64>,
    input_scale: Option<f64>,
) -> Result<Engine> {
    let table_method = matches!(method, Method::Rexp | Method::TwoDLut);
    if !table_method {
        if lut.is_some() || dequant_scale.is_some() || input_scale.is_some() {
            return Err(HarnessError::InvalidParams(format!(
                "--lut, --dequant-scale and --input-scale apply only to rexp and 2dlut, not {method}"
            )));
        }
        return Ok(Engine::preset(method, precision));
    }
    let mut cfg = match lut {
        None => KernelConfig::preset(precision),
        Some(path) => kernel_from_file(method, &read_luts(path)?)?,
    };
    if let Some(s) = dequant_scale {
        cfg = cfg.with_dequant_scale(s)?;
    }
    if let Some(s) = input_scale {
        cfg = cfg.with_input_scale(s)?;
    }
    Ok(match method {
        Method::Rexp => Engine::Rexp(cfg),
        _ => Engine::TwoDLut(cfg),
    })
}

fn kernel_from_file(method: Method, luts: &[Lut]) -> Result<KernelConfig> {
    let wrong =
        || HarnessError::InvalidParams(format!("table file does not hold the {method} table pair"));
    let (first, second) = match luts {
        [a, b] => (a, b),
        _ => return Err(wrong()),
    };
    let cfg = KernelConfig::new(first.spec());
    match (method, first, second) {
        (Method::Rexp, Lut::OneD(recip), Lut::OneD(alpha))
            if recip.kind() == LutKind::RecipExp && alpha.kind() == LutKind::Alpha =>
        {
            Ok(cfg.with_rexp_tables(recip.clone(), alpha.clone())?)
        }
        (Method::TwoDLut, Lut::OneD(exp), Lut::TwoD(sigma)) if exp.kind() == LutKind::Exp => {
            Ok(cfg.with_2d_tables(exp.clone(), sigma.clone())?)
        }
        _ => Err(wrong()),
    }
}
