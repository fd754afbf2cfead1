//! Command-line harness: `gen`, `solve`, `verify`, `ranktable`, `bench`.
//!
//! Exit codes: 0 success, 1 usage, 2 numerical failure, 3 I/O.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::cauchy::CauchyEvecMatrix;
use crate::dc::{adc_solve, EigenResult, Method, SolverConfig};
use crate::dense::Mat;
use crate::error::{Error, Result};
use crate::flops::FlopTotals;
use crate::matgen::{read_matrix, write_matrix, Family, SymTridiagonal};
use crate::metrics::{backward_error, max_deviation, orthogonality};
use crate::oracle::{jacobi_eig, numerical_rank, DenseSym, MAX_ORDER};
use crate::rng::GaussianRng;
use crate::secular::{solve_secular, RankOneSystem};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Largest order `bench` accepts.
pub const BENCH_LIMIT: usize = 8192;

pub const REPORT_HEADER: &str = "family,n,method,seed,wall_s,flops_secular,flops_update_dense,flops_hss_construct,flops_hss_mult,deflated_frac,orth_metric,backward_metric,max_eig_dev";

#[derive(Debug, Parser)]
#[command(name = "hss-eig", version, about = "Symmetric tridiagonal eigensolver and benchmark harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a test matrix.
    Gen {
        family: Family,
        n: usize,
        out: PathBuf,
    },
    /// Solve a matrix file; writes `<out>.eig.csv` and `<out>.report.csv`.
    Solve {
        matrix: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Output prefix.
        #[arg(long, default_value = "hss-eig")]
        out: PathBuf,
        /// Also write eigenvectors to `<out>.vec.bin`.
        #[arg(long)]
        vectors: bool,
        /// Compute the orthogonality and backward-error metrics.
        #[arg(long)]
        metrics: bool,
        /// Compare eigenvalues against the dense Jacobi oracle.
        #[arg(long)]
        oracle: bool,
        /// Family label for the report.
        #[arg(long, default_value = "file")]
        family: String,
    },
    /// Metrics of a computed decomposition, in the entrywise max norm.
    Verify {
        matrix: PathBuf,
        eigenvalues: PathBuf,
        vectors: PathBuf,
        #[arg(long)]
        oracle: bool,
        /// Metrics CSV; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Numerical ranks of off-diagonal blocks of a rank-one eigenvector matrix.
    Ranktable {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 9.0)]
        b: f64,
        #[arg(long, default_value_t = 1e-13)]
        threshold: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Block splits; defaults to n/20, 2n/20, ..., n/2.
        #[arg(long, value_delimiter = ',')]
        m: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One report row per size and method.
    Bench {
        family: Family,
        #[arg(long, value_delimiter = ',', default_value = "1024,2048,4096")]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "dense-dc,adc-rand")]
        methods: Vec<Method>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        metrics: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value = "adc-rand")]
    pub method: Method,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub leaf_size: usize,
    #[arg(long, default_value_t = 2000)]
    pub hss_threshold: usize,
    #[arg(long, default_value_t = 10)]
    pub oversample: usize,
    #[arg(long, default_value_t = crate::hss::DEFAULT_RANK_EPS)]
    pub rank_eps: f64,
    #[arg(long, default_value_t = 25)]
    pub base_size: usize,
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            base_size: self.base_size,
            hss_threshold: self.hss_threshold,
            leaf_size: self.leaf_size,
            oversample: self.oversample,
            rank_eps: self.rank_eps,
            seed: self.seed,
            method: self.method,
            ..SolverConfig::default()
        }
    }
}

/// One row of the report CSV. Metrics that were not computed are empty.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub family: String,
    pub n: usize,
    pub method: Method,
    pub seed: u64,
    pub wall_s: f64,
    pub flops: FlopTotals,
    pub deflated_frac: f64,
    pub orth_metric: Option<f64>,
    pub backward_metric: Option<f64>,
    pub max_eig_dev: Option<f64>,
}

impl RunReport {
    pub fn csv_row(&self) -> String {
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:e}"));
        format!(
            "{},{},{},{},{:.6},{},{},{},{},{:.6},{},{},{}",
            self.family,
            self.n,
            self.method,
            self.seed,
            self.wall_s,
            self.flops.secular,
            self.flops.dense_update,
            self.flops.hss_construct,
            self.flops.hss_mult,
            self.deflated_frac,
            opt(self.orth_metric),
            opt(self.backward_metric),
            opt(self.max_eig_dev)
        )
    }
}

/// Solve `t` and fill a report; the metrics are optional because each costs
/// a dense product of order `n`.
pub fn run_report(
    t: &SymTridiagonal,
    family: &str,
    cfg: &SolverConfig,
    metrics: bool,
    oracle: bool,
) -> Result<(RunReport, EigenResult)> {
    let t0 = Instant::now();
    let r = adc_solve(t, cfg)?;
    let wall_s = t0.elapsed().as_secs_f64();
    let (orth, back) = if metrics {
        (Some(orthogonality(&r.q)), Some(backward_error(t, &r.lambda, &r.q)?))
    } else {
        (None, None)
    };
    let dev = if oracle { Some(oracle_deviation(t, &r.lambda)?) } else { None };
    Ok((
        RunReport {
            family: family.to_string(),
            n: t.n(),
            method: cfg.method,
            seed: cfg.seed,
            wall_s,
            flops: r.flops,
            deflated_frac: r.max_deflated_fraction(),
            orth_metric: orth,
            backward_metric: back,
            max_eig_dev: dev,
        },
        r,
    ))
}

pub fn oracle_deviation(t: &SymTridiagonal, lambda: &[f64]) -> Result<f64> {
    if t.n() > MAX_ORDER {
        return Err(Error::TooLarge {
            n: t.n(),
            limit: MAX_ORDER,
            what: "the Jacobi oracle",
        });
    }
    let (exact, _) = jacobi_eig(&DenseSym::from_tridiagonal(t)?)?;
    max_deviation(lambda, &exact)
}

/// Poles `d_i = i (b - a) / n`, `i = 1..n`, a random unit weight vector and
/// `rho = 1`; returns `(m, rank of C(0..m, m..n))` for every split `m`.
pub fn rank_profile(n: usize, a: f64, b: f64, threshold: f64, seed: u64, ms: &[usize]) -> Result<Vec<(usize, usize)>> {
    if n < 2 || n > MAX_ORDER {
        return Err(Error::InvalidOrder {
            n,
            reason: "rank table needs 2 <= n <= 4096",
        });
    }
    if !(b > a) || !(threshold > 0.0) {
        return Err(Error::InvalidArgument("rank table needs b > a and a positive threshold".into()));
    }
    if let Some(&m) = ms.iter().find(|&&m| m == 0 || m >= n) {
        return Err(Error::InvalidArgument(format!("split {m} outside 1..{n}")));
    }
    let h = (b - a) / n as f64;
    let d: Vec<f64> = (1..=n).map(|i| i as f64 * h).collect();
    let u = GaussianRng::new(seed).unit_vector(n);
    let sol = solve_secular(&RankOneSystem::new(d, u, 1.0)?)?;
    let c = CauchyEvecMatrix::from_solution(&sol);
    ms.iter()
        .map(|&m| Ok((m, numerical_rank(&c.block(0..m, m..n), threshold)?)))
        .collect()
}

pub fn default_splits(n: usize) -> Vec<usize> {
    let step = (n / 20).max(1);
    (1..=10).map(|i| i * step).filter(|&m| m < n).collect()
}

pub fn write_eigenvalues(lambda: &[f64], path: &Path) -> Result<()> {
    let mut s = String::with_capacity(lambda.len() * 24);
    for x in lambda {
        writeln!(s, "{x:?}").expect("writing to a String");
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_eigenvalues(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<f64>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("bad number `{}`", l.trim()),
            })
        })
        .collect()
}

/// `n` as little-endian `u64`, then the `n x n` matrix column-major as
/// little-endian `f64`.
pub fn write_vectors(q: &Mat, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    w.write_all(&(q.cols() as u64).to_le_bytes()).map_err(io)?;
    for x in q.as_slice() {
        w.write_all(&x.to_le_bytes()).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn read_vectors(path: &Path) -> Result<Mat> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let bad = |msg: String| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg,
    };
    if bytes.len() < 8 {
        return Err(bad("missing order".into()));
    }
    let n = u64::from_le_bytes(bytes[..8].try_into().expect("eight bytes")) as usize;
    let body = &bytes[8..];
    if n.checked_mul(n).and_then(|x| x.checked_mul(8)) != Some(body.len()) {
        return Err(bad(format!("{} bytes do not hold a {n}x{n} matrix", body.len())));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes")))
        .collect();
    Mat::from_col_major(n, n, data)
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => {
            let f = std::fs::File::create(p).map_err(|e| Error::io(p, e))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    let mut w = open_out(path)?;
    let name = path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf);
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(name, e))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Gen { family, n, out } => write_matrix(&family.generate(n)?, &out),
        Command::Solve {
            matrix,
            solver,
            out,
            vectors,
            metrics,
            oracle,
            family,
        } => {
            let t = read_matrix(&matrix)?;
            let (report, r) = run_report(&t, &family, &solver.config(), metrics, oracle)?;
            write_eigenvalues(&r.lambda, &with_suffix(&out, ".eig.csv"))?;
            emit(
                Some(&with_suffix(&out, ".report.csv")),
                &format!("{REPORT_HEADER}\n{}\n", report.csv_row()),
            )?;
            if vectors {
                write_vectors(&r.q, &with_suffix(&out, ".vec.bin"))?;
            }
            Ok(())
        }
        Command::Verify {
            matrix,
            eigenvalues,
            vectors,
            oracle,
            out,
        } => {
            let t = read_matrix(&matrix)?;
            let lambda = read_eigenvalues(&eigenvalues)?;
            let q = read_vectors(&vectors)?;
            let back = backward_error(&t, &lambda, &q)?;
            let orth = orthogonality(&q);
            let dev = if oracle {
                format!("{:e}", oracle_deviation(&t, &lambda)?)
            } else {
                String::new()
            };
            emit(
                out.as_deref(),
                &format!("n,orth_metric,backward_metric,max_eig_dev\n{},{orth:e},{back:e},{dev}\n", t.n()),
            )
        }
        Command::Ranktable {
            n,
            a,
            b,
            threshold,
            seed,
            m,
            out,
        } => {
            let ms = if m.is_empty() { default_splits(n) } else { m };
            let rows = rank_profile(n, a, b, threshold, seed, &ms)?;
            let mut s = String::from("m,rank\n");
            for (m, r) in rows {
                writeln!(s, "{m},{r}").expect("writing to a String");
            }
            emit(out.as_deref(), &s)
        }
        Command::Bench {
            family,
            sizes,
            methods,
            solver,
            metrics,
            out,
        } => {
            if let Some(&n) = sizes.iter().find(|&&n| n > BENCH_LIMIT) {
                return Err(Error::TooLarge {
                    n,
                    limit: BENCH_LIMIT,
                    what: "bench",
                });
            }
            let mut s = format!("{REPORT_HEADER}\n");
            for &n in &sizes {
                let t = family.generate(n)?;
                for &method in &methods {
                    let cfg = SolverConfig {
                        method,
                        ..solver.config()
                    };
                    let (report, _) = run_report(&t, family.name(), &cfg, metrics, false)?;
                    writeln!(s, "{}", report.csv_row()).expect("writing to a String");
                }
            }
            emit(out.as_deref(), &s)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } | Error::Parse { .. } => EXIT_IO,
        e if e.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

/// Parse `args` (program name first), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("hss-eig: {e}");
            exit_code(&e)
        }
    }
}
