use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use hyperrate::synthetic::{correlated_cube, SyntheticParams};
use hyperrate::{
    decode, encode, metrics, ByteOrder, ControllerConfig, CubeGeometry, EncoderConfig, ImageCube,
    LineTrace, PredictorConfig, RateLut, DEFAULT_SUBSET_LEN,
};

/// Near-lossless hyperspectral compression with line-level rate control.
#[derive(Parser)]
#[command(name = "hyperrate", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress a raw BIL cube to a target rate.
    Compress(CompressArgs),
    /// Decompress a container back to raw samples.
    Decompress(DecompressArgs),
    /// Compare two raw cubes (SNR and maximum absolute difference).
    Metrics(MetricsArgs),
    /// Time the encoder and count rate table lookups.
    Bench(BenchArgs),
    /// Write the rate table as a binary blob.
    LutDump(LutDumpArgs),
}

#[derive(Args)]
struct GeometryArgs {
    /// Sidecar file with `key = value` geometry lines.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    bands: Option<usize>,
    /// Bits per sample (2..=16).
    #[arg(long)]
    depth: Option<u8>,
    #[arg(long)]
    signed: bool,
    /// le or be.
    #[arg(long)]
    byteorder: Option<ByteOrder>,
}

#[derive(Args)]
struct CodingArgs {
    /// Target rate in bits per sample.
    #[arg(long, default_value_t = 2.0)]
    rate: f64,
    /// Largest allowed step (odd).
    #[arg(long, default_value_t = 511)]
    qmax: u16,
    /// Median subset length.
    #[arg(long = "L", default_value_t = DEFAULT_SUBSET_LEN)]
    subset_len: usize,
    /// Lines over which a budget deficit is spread.
    #[arg(long, default_value_t = 5)]
    tau: u32,
    /// Step of the first line (odd).
    #[arg(long, default_value_t = 1)]
    qinit: u16,
    /// Previous bands used by the predictor.
    #[arg(long)]
    predictor_bands: Option<u16>,
}

#[derive(Args)]
struct CompressArgs {
    input: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    #[command(flatten)]
    geometry: GeometryArgs,
    #[command(flatten)]
    coding: CodingArgs,
    /// Write a per-line controller trace as CSV.
    #[arg(long, value_name = "CSV")]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct DecompressArgs {
    input: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    /// Also write the geometry sidecar to this path.
    #[arg(long, value_name = "FILE")]
    sidecar: Option<PathBuf>,
}

#[derive(Args)]
struct MetricsArgs {
    original: PathBuf,
    reconstructed: PathBuf,
    #[command(flatten)]
    geometry: GeometryArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Raw cube; omit with --synthetic.
    input: Option<PathBuf>,
    /// Use a generated 128 x 256 x 32 16-bit correlated cube.
    #[arg(long, conflicts_with = "input")]
    synthetic: bool,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Target rates to run; repeatable.
    #[arg(long = "rate", num_args = 1.., default_values_t = [0.5, 1.0, 2.0, 3.0])]
    rates: Vec<f64>,
    #[arg(long, default_value_t = 511)]
    qmax: u16,
    #[arg(long = "L", default_value_t = DEFAULT_SUBSET_LEN)]
    subset_len: usize,
    #[arg(long, default_value_t = 5)]
    tau: u32,
    #[arg(long, default_value_t = 1)]
    qinit: u16,
    /// Print CSV instead of key=value lines.
    #[arg(long)]
    csv: bool,
    #[command(flatten)]
    geometry: GeometryArgs,
}

#[derive(Args)]
struct LutDumpArgs {
    #[arg(long, short)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Run(String),
}

impl From<hyperrate::Error> for Failure {
    fn from(e: hyperrate::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compress(a) => compress(a),
        Command::Decompress(a) => decompress(a),
        Command::Metrics(a) => run_metrics(a),
        Command::Bench(a) => bench(a),
        Command::LutDump(a) => lut_dump(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("see `hyperrate --help`");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

impl GeometryArgs {
    fn resolve(&self) -> CliResult<CubeGeometry> {
        let mut g = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Failure::Run(format!("{}: {e}", path.display())))?;
                CubeGeometry::parse_sidecar(&text).map_err(|e| Failure::Usage(e.to_string()))?
            }
            None => {
                let (Some(cols), Some(rows), Some(bands), Some(depth)) =
                    (self.cols, self.rows, self.bands, self.depth)
                else {
                    let missing: Vec<_> = [
                        ("--cols", self.cols.is_none()),
                        ("--rows", self.rows.is_none()),
                        ("--bands", self.bands.is_none()),
                        ("--depth", self.depth.is_none()),
                    ]
                    .into_iter()
                    .filter_map(|(name, absent)| absent.then_some(name))
                    .collect();
                    return Err(Failure::Usage(format!(
                        "raw input needs geometry: missing {} (or pass --config)",
                        missing.join(", ")
                    )));
                };
                CubeGeometry::new(cols, rows, bands, depth)
                    .map_err(|e| Failure::Usage(e.to_string()))?
            }
        };
        g.n_cols = self.cols.unwrap_or(g.n_cols);
        g.n_rows = self.rows.unwrap_or(g.n_rows);
        g.n_bands = self.bands.unwrap_or(g.n_bands);
        g.bit_depth = self.depth.unwrap_or(g.bit_depth);
        g.signed |= self.signed;
        g.byte_order = self.byteorder.unwrap_or(g.byte_order);
        g.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(g)
    }
}

impl CodingArgs {
    fn encoder_config(&self, geometry: &CubeGeometry) -> CliResult<EncoderConfig> {
        let controller = ControllerConfig {
            target_rate: self.rate,
            q_max: self.qmax,
            tau: self.tau,
            window: 1,
            q_init: self.qinit,
        };
        controller
            .validate()
            .map_err(|e| Failure::Usage(e.to_string()))?;
        if self.subset_len == 0 {
            return Err(Failure::Usage("--L must be at least 1".into()));
        }
        let predictor = self.predictor_bands.map(|p| PredictorConfig {
            bands: p,
            ..PredictorConfig::for_geometry(geometry)
        });
        if let Some(p) = &predictor {
            p.validate(geometry)
                .map_err(|e| Failure::Usage(e.to_string()))?;
        }
        Ok(EncoderConfig {
            controller,
            predictor,
            subset_len: self.subset_len,
            trace: false,
        })
    }
}

fn load_lut() -> CliResult<RateLut> {
    RateLut::from_env_or_build().map_err(|e| Failure::Run(format!("HYPERRATE_LUT_PATH: {e}")))
}

fn load_cube(path: &Path, geometry: CubeGeometry) -> CliResult<ImageCube> {
    ImageCube::load_raw(path, geometry)
        .map_err(|e| Failure::Run(format!("{}: {e}", path.display())))
}

fn compress(args: CompressArgs) -> CliResult<()> {
    let geometry = args.geometry.resolve()?;
    let mut cfg = args.coding.encoder_config(&geometry)?;
    cfg.trace = args.trace.is_some();
    let lut = load_lut()?;
    let cube = load_cube(&args.input, geometry)?;
    let enc = encode(&cube, &cfg, &lut)?;
    fs::write(&args.out, enc.bitstream.to_bytes())?;
    let r = &enc.report;
    if let Some(path) = &args.trace {
        let mut f = std::io::BufWriter::new(fs::File::create(path)?);
        writeln!(f, "{}", LineTrace::CSV_HEADER)?;
        for row in &r.trace {
            writeln!(f, "{}", row.to_csv())?;
        }
        f.flush()?;
    }
    println!(
        "target_bpp={:.3} payload_bpp={:.3} container_bpp={:.3} lossless={} samples={} payload_bytes={} container_bytes={} max_q={} lookups={}",
        cfg.controller.target_rate,
        r.payload_bpp(),
        r.container_bpp(),
        r.lossless(),
        r.samples,
        r.payload_bytes,
        r.container_bytes,
        2 * r.max_delta as u32 + 1,
        r.lookups,
    );
    Ok(())
}

fn decompress(args: DecompressArgs) -> CliResult<()> {
    let bytes = fs::read(&args.input)?;
    let cube = decode(&bytes)?;
    cube.store_raw(&args.out)?;
    if let Some(path) = &args.sidecar {
        fs::write(path, cube.geometry().to_sidecar())?;
    }
    let g = cube.geometry();
    println!(
        "cols={} rows={} bands={} depth={} signed={} byteorder={} samples={}",
        g.n_cols,
        g.n_rows,
        g.n_bands,
        g.bit_depth,
        g.signed,
        g.byte_order,
        g.sample_count()
    );
    Ok(())
}

fn run_metrics(args: MetricsArgs) -> CliResult<()> {
    let geometry = args.geometry.resolve()?;
    let a = load_cube(&args.original, geometry)?;
    let b = load_cube(&args.reconstructed, geometry)?;
    let q = metrics(&a, &b)?;
    println!("{q}");
    Ok(())
}

fn bench(args: BenchArgs) -> CliResult<()> {
    let cube = match (&args.input, args.synthetic) {
        (Some(path), _) => load_cube(path, args.geometry.resolve()?)?,
        (None, true) => {
            let g = CubeGeometry::new(256, 128, 32, 16)?;
            correlated_cube(&g, &SyntheticParams::default(), args.seed)
        }
        (None, false) => {
            return Err(Failure::Usage(
                "bench needs an input file or --synthetic".into(),
            ))
        }
    };
    let lut = load_lut()?;
    if args.csv {
        println!("target_bpp,payload_bpp,container_bpp,lookups_per_msample,controller_ms,total_ms,msamples_per_s,snr_db,mad");
    }
    for &rate in &args.rates {
        let coding = CodingArgs {
            rate,
            qmax: args.qmax,
            subset_len: args.subset_len,
            tau: args.tau,
            qinit: args.qinit,
            predictor_bands: None,
        };
        let cfg = coding.encoder_config(cube.geometry())?;
        let started = Instant::now();
        let enc = encode(&cube, &cfg, &lut)?;
        let wall = started.elapsed();
        let r = &enc.report;
        let q = metrics(&cube, &enc.reconstruction)?;
        let controller_ms = r.controller_time.as_secs_f64() * 1e3;
        let total_ms = r.total_time.as_secs_f64() * 1e3;
        let throughput = r.samples as f64 / wall.as_secs_f64() / 1e6;
        if args.csv {
            println!(
                "{rate:.3},{:.3},{:.3},{:.0},{controller_ms:.3},{total_ms:.3},{throughput:.3},{:.2},{}",
                r.payload_bpp(),
                r.container_bpp(),
                r.lookups_per_megasample(),
                q.snr_db,
                q.mad
            );
        } else {
            println!(
                "target_bpp={rate:.3} payload_bpp={:.3} container_bpp={:.3} lookups_per_msample={:.0} controller_ms={controller_ms:.3} total_ms={total_ms:.3} msamples_per_s={throughput:.3} {q}",
                r.payload_bpp(),
                r.container_bpp(),
                r.lookups_per_megasample(),
            );
        }
    }
    Ok(())
}

fn lut_dump(args: LutDumpArgs) -> CliResult<()> {
    let lut = RateLut::build();
    lut.dump(&args.out)?;
    println!(
        "entries={} bytes={}",
        lut.as_slice().len(),
        lut.to_blob().len()
    );
    Ok(())
}
