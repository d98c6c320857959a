//! `gridcast` command line.
//!
//! Subcommands: `synth`, `convert-csv`, `train`, `predict`, `eval`, `sweep`,
//! `update`. Every subcommand accepts `--config FILE`, a TOML file whose keys
//! are flag names without the leading dashes; flags given on the command
//! line take precedence. `GRIDCAST_THREADS` caps the worker pool.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use chrono::{Duration, NaiveDate};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::data::{
    convert_csv, load_grid, save_grid, split, window_series, DateRange, Drift, GridDataset, GridGeometry, SplitSpec,
    SynthConfig,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate_grid, evaluate_persistence, evaluate_svr, summarize, write_report_csv, CellReport, SvrParams};
use crate::fsutil::write_atomic;
use crate::lstm::CellVariant;
use crate::model::{load_checkpoint, save_checkpoint, train_grid, update_online, BlockConfig};
use crate::optim::TrainConfig;

#[derive(Parser, Debug)]
#[command(name = "gridcast", version, about = "Per-cell LSTM forecasting of gridded daily SST")]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Generate a synthetic SSTG grid
    Synth(SynthArgs),
    /// Convert a `date,lat,lon,sst` CSV into an SSTG grid
    ConvertCsv(ConvertArgs),
    /// Train one block per sea cell and write a checkpoint
    Train(TrainCmd),
    /// Forecast the days following a date
    Predict(PredictArgs),
    /// Score a checkpoint (and optional baselines) on a split
    Eval(EvalArgs),
    /// Compare candidate values of one architecture setting
    Sweep(SweepArgs),
    /// Continue training a checkpoint on new observations
    Update(UpdateArgs),
}

#[derive(Args, Debug, Serialize)]
struct ConfigArg {
    /// TOML file of flag defaults (keys are flag names)
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SynthArgs {
    #[command(flatten)]
    #[serde(skip)]
    config: ConfigArg,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 4)]
    nlat: usize,
    #[arg(long, default_value_t = 4)]
    nlon: usize,
    #[arg(long, default_value_t = 7305)]
    ntime: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "1981-09-01")]
    start_date: NaiveDate,
    /// Day index from which the drift applies
    #[arg(long)]
    drift_day: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    drift_offset: f64,
    #[arg(long, default_value_t = 1.0)]
    drift_amplitude_scale: f64,
    #[arg(long, default_value_t = 0.0)]
    drift_phase_days: f64,
}

#[derive(Args, Debug, Serialize)]
struct ConvertArgs {
    #[command(flatten)]
    #[serde(skip)]
    config: ConfigArg,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Explicit grid as `nlat,nlon,lat0,lon0,dlat,dlon`; inferred when absent
    #[arg(long, value_delimiter = ',', value_name = "NLAT,NLON,LAT0,LON0,DLAT,DLON")]
    geometry: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum VariantArg {
    Paper,
    Standard,
}

impl From<VariantArg> for CellVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Paper => CellVariant::Paper,
            VariantArg::Standard => CellVariant::Standard,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct BlockArgs {
    /// History length; defaults to 4 × l
    #[arg(long)]
    k: Option<usize>,
    /// Prediction length
    #[arg(long, default_value_t = 7)]
    l: usize,
    #[arg(long, default_value_t = 6)]
    units_r: usize,
    #[arg(long, default_value_t = 1)]
    l_r: usize,
    #[arg(long, default_value_t = 1)]
    l_fc: usize,
    /// Sizes of the fully-connected layers; defaults to l for each
    #[arg(long, value_delimiter = ',')]
    fc_units: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value_t = VariantArg::Paper)]
    variant: VariantArg,
}

impl BlockArgs {
    fn resolve(&self) -> Result<BlockConfig> {
        let k = self.k.unwrap_or(4 * self.l);
        if self.l == 0 {
            return Err(Error::arg("--l must be at least 1"));
        }
        if k < self.l {
            return Err(Error::arg(format!("--k ({k}) must be at least --l ({})", self.l)));
        }
        if self.units_r == 0 {
            return Err(Error::arg("--units-r must be at least 1"));
        }
        if self.l_r == 0 {
            return Err(Error::arg("--l-r must be at least 1"));
        }
        if self.l_fc == 0 {
            return Err(Error::arg("--l-fc must be at least 1"));
        }
        let fc_units = match &self.fc_units {
            Some(units) => {
                if units.len() != self.l_fc {
                    return Err(Error::arg(format!(
                        "--fc-units lists {} layers but --l-fc is {}",
                        units.len(),
                        self.l_fc
                    )));
                }
                if units.last() != Some(&self.l) {
                    return Err(Error::arg(format!("--fc-units must end with --l ({})", self.l)));
                }
                units.clone()
            }
            None => vec![self.l; self.l_fc],
        };
        let config = BlockConfig {
            k,
            l: self.l,
            lstm_layers: self.l_r,
            units: self.units_r,
            fc_units,
            variant: self.variant.into(),
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct OptimArgs {
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 100)]
    batch_size: usize,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    /// Early-stopping patience in epochs; 0 disables
    #[arg(long, default_value_t = 10)]
    patience: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl OptimArgs {
    fn resolve(&self) -> Result<TrainConfig> {
        if self.batch_size == 0 {
            return Err(Error::arg("--batch-size must be at least 1"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::arg(format!("--lr must be positive, got {}", self.lr)));
        }
        Ok(TrainConfig {
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed: self.seed,
            shuffle: true,
            lr: self.lr,
            patience: (self.patience > 0).then_some(self.patience),
        })
    }
}

#[derive(Args, Debug, Clone, Default, Serialize)]
struct SplitArgs {
    #[arg(long)]
    train_start: Option<NaiveDate>,
    #[arg(long)]
    train_end: Option<NaiveDate>,
    #[arg(long)]
    val_start: Option<NaiveDate>,
    #[arg(long)]
    val_end: Option<NaiveDate>,
    #[arg(long)]
    test_start: Option<NaiveDate>,
    #[arg(long)]
    test_end: Option<NaiveDate>,
    /// Fraction of days used for training when no dates are given
    #[arg(long, default_value_t = 0.85)]
    train_fraction: f64,
    #[arg(long, default_value_t = 0.05)]
    val_fraction: f64,
}

impl SplitArgs {
    fn any_date(&self) -> bool {
        [
            self.train_start,
            self.train_end,
            self.val_start,
            self.val_end,
            self.test_start,
            self.test_end,
        ]
        .iter()
        .any(Option::is_some)
    }

    /// Explicit dates when given (each range must be complete), otherwise
    /// `fallback`, otherwise fractions of the dataset span.
    fn resolve(&self, data: &GridDataset, fallback: Option<SplitSpec>) -> Result<SplitSpec> {
        if self.any_date() {
            let pair = |s: Option<NaiveDate>, e: Option<NaiveDate>, name: &str| {
                match (s, e) {
                    (Some(s), Some(e)) => Ok(DateRange::new(s, e)),
                    _ => Err(Error::arg(format!("--{name}-start and --{name}-end must be given together with the other split dates"))),
                }
            };
            let spec = SplitSpec {
                train: pair(self.train_start, self.train_end, "train")?,
                validation: pair(self.val_start, self.val_end, "val")?,
                test: pair(self.test_start, self.test_end, "test")?,
            };
            spec.validate()?;
            return Ok(spec);
        }
        match fallback {
            Some(spec) => Ok(spec),
            None => SplitSpec::by_fraction(data, self.train_fraction, self.val_fraction),
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct TrainCmd {
    #[command(flatten)]
    #[serde(skip)]
    config: ConfigArg,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    block: BlockArgs,
    #[command(flatten)]
    optim: OptimArgs,
    #[command(flatten)]
    split: SplitArgs,
    /// Restrict training to cells given as `lat:lon,lat:lon`
    #[arg(long, value_delimiter = ',')]
    cells: Option<Vec<String>>,
    /// Optional CSV of per-epoch validation loss
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct PredictArgs {
    #[command(flatten)]
    #[serde(skip)]
    config: ConfigArg,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Last observed day; defaults to the final day of the data
    #[arg(long)]
    end_date: Option<NaiveDate>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SplitName {
    Train,
    Validation,
    Test,
    All,
}

#[derive(Args, Debug, Serialize)]
struct EvalArgs {
    #[command(flatten)]
    #[serde(skip)]
    config: ConfigArg,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_enum, default_value_t = SplitName::Test)]
    split: SplitName,
    #[command(flatten)]
    dates: SplitArgs,
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    persistence_report: Option<PathBuf>,
    #[arg(long)]
    svr_report: Option<PathBuf>,
    #[arg(long, default_value_t = 10.0)]
    svr_c: f64,
    #[arg(long, default_value_t = 0.01)]
    svr_epsilon: f64,
    #[arg(long, default_value_t = 1.6)]
    svr_sigma: f64,
    /// Fit each SVR on at most this many of the latest training windows
    #[arg(long)]
    svr_max_train: Option<usize>,
    /// SVG of predicted against observed first-day values for one cell
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Cell for --plot as `lat:lon`; defaults to the first sea cell
    #[arg(long)]
    plot_cell: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SweepParam {
    UnitsR,
    #[value(name = "l-r")]
    #[serde(rename = "l-r")]
    LR,
    LFc,
    FcUnits,
}

#[derive(Args, Debug, Serialize)]
struct SweepArgs {
    #[command(flatten)]
    #[serde(skip)]
    config: ConfigArg,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    param: SweepParam,
    /// Candidate values separated by `;` (e.g. `3;4;5` or `7;7,7;10,7` for fc-units)
    #[arg(long)]
    candidates: String,
    /// Cells as `lat:lon,lat:lon`
    #[arg(long, value_delimiter = ',')]
    cells: Vec<String>,
    #[command(flatten)]
    block: BlockArgs,
    #[command(flatten)]
    optim: OptimArgs,
    #[command(flatten)]
    split: SplitArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct UpdateArgs {
    #[command(flatten)]
    #[serde(skip)]
    config: ConfigArg,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Defaults to the epoch count the model was trained with
    #[arg(long)]
    epochs: Option<usize>,
    /// Only use observations from this day on
    #[arg(long)]
    start_date: Option<NaiveDate>,
    /// Only use observations up to this day
    #[arg(long)]
    end_date: Option<NaiveDate>,
    #[arg(long)]
    out: PathBuf,
}

/// Runs the command line and returns the process exit code: 0 on success,
/// 2 on usage errors, 1 on runtime failures.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let threads = match std::env::var("GRIDCAST_THREADS") {
        Ok(v) => match v.parse::<usize>() {
            Ok(n) if n > 0 => Some(n),
            _ => {
                eprintln!("error: GRIDCAST_THREADS must be a positive integer, got {v:?}");
                return 2;
            }
        },
        Err(_) => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .expect("thread pool");
    match pool.install(|| run(&cli.command)) {
        Ok(()) => 0,
        Err(e @ Error::Argument(_)) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Splices `--key value` pairs from a `--config` TOML file in front of the
/// subcommand's own flags so the explicit flags win.
fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let strs: Vec<String> = argv.iter().map(|s| s.to_string_lossy().into_owned()).collect();
    let mut path = None;
    let mut keep = Vec::with_capacity(argv.len());
    let mut i = 0;
    while i < argv.len() {
        if strs[i] == "--config" && i + 1 < argv.len() {
            path = Some(PathBuf::from(&argv[i + 1]));
            i += 2;
            continue;
        }
        if let Some(p) = strs[i].strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
            i += 1;
            continue;
        }
        keep.push(argv[i].clone());
        i += 1;
    }
    let Some(path) = path else { return Ok(argv) };
    if keep.len() < 2 {
        return Ok(keep);
    }
    let text = std::fs::read_to_string(&path).map_err(|e| Error::arg(format!("config file {}: {e}", path.display())))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| Error::arg(format!("config file {}: {e}", path.display())))?;
    let mut injected = Vec::new();
    for (key, value) in table {
        let flag = format!("--{}", key.replace('_', "-"));
        let scalar = |v: &toml::Value| -> Result<String> {
            match v {
                toml::Value::String(s) => Ok(s.clone()),
                toml::Value::Integer(n) => Ok(n.to_string()),
                toml::Value::Float(f) => Ok(f.to_string()),
                toml::Value::Datetime(d) => Ok(d.to_string()),
                other => Err(Error::arg(format!("config key {key:?}: unsupported value {other}"))),
            }
        };
        match &value {
            toml::Value::Boolean(true) => injected.push(flag),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                let parts = items.iter().map(scalar).collect::<Result<Vec<_>>>()?;
                injected.push(flag);
                injected.push(parts.join(","));
            }
            v => {
                injected.push(flag);
                injected.push(scalar(v)?);
            }
        }
    }
    let mut out: Vec<OsString> = keep[..2].to_vec();
    out.extend(injected.into_iter().map(OsString::from));
    out.extend(keep[2..].iter().cloned());
    Ok(out)
}

fn log_config<T: Serialize>(name: &str, args: &T) {
    match serde_json::to_string(args) {
        Ok(json) => eprintln!("gridcast {name}: {json}"),
        Err(_) => eprintln!("gridcast {name}"),
    }
}

fn run(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Synth(a) => {
            log_config("synth", a);
            run_synth(a)
        }
        Command::ConvertCsv(a) => {
            log_config("convert-csv", a);
            run_convert(a)
        }
        Command::Train(a) => {
            log_config("train", a);
            run_train(a)
        }
        Command::Predict(a) => {
            log_config("predict", a);
            run_predict(a)
        }
        Command::Eval(a) => {
            log_config("eval", a);
            run_eval(a)
        }
        Command::Sweep(a) => {
            log_config("sweep", a);
            run_sweep(a)
        }
        Command::Update(a) => {
            log_config("update", a);
            run_update(a)
        }
    }
}

fn run_synth(a: &SynthArgs) -> Result<()> {
    if a.nlat == 0 || a.nlon == 0 || a.ntime == 0 {
        return Err(Error::arg("--nlat, --nlon and --ntime must be positive"));
    }
    let mut cfg = SynthConfig::new(a.nlat, a.nlon, a.ntime, a.seed);
    cfg.start_date = a.start_date;
    if let Some(day) = a.drift_day {
        cfg.drift = Some(Drift {
            start_day: day,
            offset: a.drift_offset,
            amplitude_scale: a.drift_amplitude_scale,
            phase_shift_days: a.drift_phase_days,
        });
    }
    let g = cfg.generate();
    save_grid(&g, &a.out)?;
    println!("wrote {} ({}x{}x{})", a.out.display(), g.nlat(), g.nlon(), g.ntime());
    Ok(())
}

fn run_convert(a: &ConvertArgs) -> Result<()> {
    let geometry = match &a.geometry {
        None => None,
        Some(v) if v.len() != 6 => {
            return Err(Error::arg(format!("--geometry takes 6 comma-separated values, got {}", v.len())));
        }
        Some(v) => {
            let count = |x: f64, name: &str| {
                if x >= 1.0 && x.fract() == 0.0 {
                    Ok(x as usize)
                } else {
                    Err(Error::arg(format!("--geometry {name} must be a positive integer, got {x}")))
                }
            };
            Some(GridGeometry {
                nlat: count(v[0], "nlat")?,
                nlon: count(v[1], "nlon")?,
                lat0: v[2],
                lon0: v[3],
                dlat: v[4],
                dlon: v[5],
            })
        }
    };
    let g = convert_csv(&a.input, geometry)?;
    save_grid(&g, &a.out)?;
    println!(
        "wrote {} ({}x{}x{}, {} sea cells)",
        a.out.display(),
        g.nlat(),
        g.nlon(),
        g.ntime(),
        g.sea_cells().len()
    );
    Ok(())
}

fn parse_cell(s: &str) -> Result<(usize, usize)> {
    let (lat, lon) = s
        .split_once(':')
        .ok_or_else(|| Error::arg(format!("cell {s:?} is not of the form lat:lon")))?;
    let idx = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|_| Error::arg(format!("cell {s:?} is not of the form lat:lon")))
    };
    Ok((idx(lat)?, idx(lon)?))
}

fn run_train(a: &TrainCmd) -> Result<()> {
    let config = a.block.resolve()?;
    let cfg = a.optim.resolve()?;
    let data = load_grid(&a.data)?;
    let spec = a.split.resolve(&data, None)?;
    let parts = split(&data, &spec)?;
    let cells = a
        .cells
        .as_ref()
        .map(|c| c.iter().map(|s| parse_cell(s)).collect::<Result<Vec<_>>>())
        .transpose()?;
    let (mut grid, report) = train_grid(&parts.train, Some(&parts.validation), &config, &cfg, cells.as_deref())?;
    grid.split = Some(spec);
    save_checkpoint(&grid, &a.out)?;

    if let Some(path) = &a.history {
        let mut text = String::from("cell_lat_idx,cell_lon_idx,epoch,val_loss\n");
        for ((lat, lon), r) in &report.cells {
            for (e, v) in r.val_losses.iter().enumerate() {
                let _ = writeln!(text, "{lat},{lon},{},{v}", e + 1);
            }
        }
        write_atomic(path, text.as_bytes())?;
    }
    println!(
        "trained {} cell models (k {}, l {}) -> {}",
        report.cells.len(),
        config.k,
        config.l,
        a.out.display()
    );
    Ok(())
}

fn run_predict(a: &PredictArgs) -> Result<()> {
    let grid = load_checkpoint(&a.model)?;
    let data = load_grid(&a.data)?;
    grid.check_shape(&data)?;
    let end = a.end_date.unwrap_or_else(|| data.end_date());
    let last = data
        .index_of(end)
        .ok_or_else(|| Error::arg(format!("--end-date {end} is outside the data span")))?;
    let k = grid.config.k;
    if last + 1 < k {
        return Err(Error::arg(format!("--end-date {end} leaves fewer than k = {k} observed days")));
    }
    let mut text = String::from("cell_lat_idx,cell_lon_idx,issue_date,target_date,lead,prediction\n");
    for (lat, lon) in grid.model_cells() {
        let series = data.series(lat, lon);
        let forecast = grid.predict(lat, lon, &series[last + 1 - k..=last])?;
        for (lead, v) in forecast.iter().enumerate() {
            let target = end + Duration::days(lead as i64 + 1);
            let _ = writeln!(text, "{lat},{lon},{end},{target},{},{v}", lead + 1);
        }
    }
    write_atomic(&a.out, text.as_bytes())?;
    println!("wrote {}", a.out.display());
    Ok(())
}

fn select_split(data: &GridDataset, spec: &SplitSpec, which: SplitName) -> Result<GridDataset> {
    let parts = split(data, spec)?;
    Ok(match which {
        SplitName::Train => parts.train,
        SplitName::Validation => parts.validation,
        SplitName::Test => parts.test,
        SplitName::All => data.clone(),
    })
}

fn report_bytes(reports: &[CellReport]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_report_csv(&mut buf, reports)?;
    Ok(buf)
}

fn run_eval(a: &EvalArgs) -> Result<()> {
    let grid = load_checkpoint(&a.model)?;
    let data = load_grid(&a.data)?;
    grid.check_shape(&data)?;
    let spec = a.dates.resolve(&data, grid.split)?;
    let target = select_split(&data, &spec, a.split)?;
    let (k, l) = (grid.config.k, grid.config.l);
    let cells = grid.model_cells();

    let lstm = evaluate_grid(&grid, &target)?;
    write_atomic(&a.report, &report_bytes(&lstm)?)?;
    let s = summarize(&lstm)?;
    println!("lstm        area-average rmse {:.4} acc {:.4} ({} cells, l {l})", s.rmse, s.acc, lstm.len());

    if let Some(path) = &a.persistence_report {
        let reports = evaluate_persistence(&target, k, l, &cells)?;
        write_atomic(path, &report_bytes(&reports)?)?;
        let s = summarize(&reports)?;
        println!("persistence area-average rmse {:.4} acc {:.4}", s.rmse, s.acc);
    }

    if let Some(path) = &a.svr_report {
        let params = SvrParams {
            c: a.svr_c,
            epsilon: a.svr_epsilon,
            sigma: a.svr_sigma,
            ..SvrParams::default()
        };
        if !(params.c > 0.0) {
            return Err(Error::arg("--svr-c must be positive"));
        }
        if !(params.sigma > 0.0) {
            return Err(Error::arg("--svr-sigma must be positive"));
        }
        if !(params.epsilon >= 0.0) {
            return Err(Error::arg("--svr-epsilon must be non-negative"));
        }
        let train = select_split(&data, &spec, SplitName::Train)?;
        let reports = evaluate_svr(&grid, &train, &target, &params, a.svr_max_train)?;
        write_atomic(path, &report_bytes(&reports)?)?;
        let s = summarize(&reports)?;
        println!("svr         area-average rmse {:.4} acc {:.4}", s.rmse, s.acc);
    }

    if let Some(path) = &a.plot {
        let cell = match &a.plot_cell {
            Some(c) => parse_cell(c)?,
            None => *cells.first().ok_or_else(|| Error::arg("no cells to plot"))?,
        };
        let series = target.series(cell.0, cell.1);
        let windows = window_series(&series, k, l)?;
        let mut predicted = Vec::with_capacity(windows.len());
        for x in &windows.inputs {
            predicted.push(grid.predict(cell.0, cell.1, x)?[0]);
        }
        let observed: Vec<f64> = windows.targets.iter().map(|t| t[0]).collect();
        write_atomic(path, plot_svg(&observed, &predicted, cell).as_bytes())?;
    }
    Ok(())
}

fn plot_svg(observed: &[f64], predicted: &[f64], cell: (usize, usize)) -> String {
    let (w, h, pad) = (900.0, 360.0, 40.0);
    let all = observed.iter().chain(predicted).copied().filter(|v| v.is_finite());
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let n = observed.len().max(2) as f64 - 1.0;
    let points = |s: &[f64]| {
        s.iter()
            .enumerate()
            .map(|(i, v)| {
                let x = pad + (w - 2.0 * pad) * i as f64 / n;
                let y = h - pad - (h - 2.0 * pad) * (v - lo) / span;
                format!("{x:.1},{y:.1}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    format!(
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">
<rect width="100%" height="100%" fill="white"/>
<text x="{pad}" y="24" font-family="sans-serif" font-size="14">cell ({}, {}): observed (green) vs predicted (red), {lo:.2} to {hi:.2} °C</text>
<polyline fill="none" stroke="green" stroke-width="1" points="{}"/>
<polyline fill="none" stroke="red" stroke-width="1" points="{}"/>
</svg>
"##,
        cell.0,
        cell.1,
        points(observed),
        points(predicted)
    )
}

#[derive(Clone, Debug, PartialEq)]
enum Candidate {
    Count(usize),
    Layers(Vec<usize>),
}

impl Candidate {
    fn label(&self) -> String {
        match self {
            Candidate::Count(n) => n.to_string(),
            Candidate::Layers(v) => format!(
                "{}[{}]",
                v.len(),
                v.iter().map(|u| u.to_string()).collect::<Vec<_>>().join(" ")
            ),
        }
    }
}

fn parse_candidates(param: SweepParam, text: &str) -> Result<Vec<Candidate>> {
    let items: Vec<&str> = text.split(';').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(Error::arg("--candidates must list at least one value"));
    }
    items
        .into_iter()
        .map(|item| match param {
            SweepParam::FcUnits => item
                .split(',')
                .map(|u| u.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(Candidate::Layers)
                .map_err(|_| Error::arg(format!("--candidates entry {item:?} is not a list of counts"))),
            _ => item
                .parse::<usize>()
                .map(Candidate::Count)
                .map_err(|_| Error::arg(format!("--candidates entry {item:?} is not a count"))),
        })
        .collect()
}

fn run_sweep(a: &SweepArgs) -> Result<()> {
    let candidates = parse_candidates(a.param, &a.candidates)?;
    let cells = a.cells.iter().map(|s| parse_cell(s)).collect::<Result<Vec<_>>>()?;
    if cells.is_empty() {
        return Err(Error::arg("--cells must list at least one cell"));
    }
    let cfg = a.optim.resolve()?;
    let data = load_grid(&a.data)?;
    let spec = a.split.resolve(&data, None)?;
    let parts = split(&data, &spec)?;

    let mut rows: Vec<(String, Vec<CellReport>)> = Vec::with_capacity(candidates.len());
    for cand in &candidates {
        let mut block = a.block.clone();
        match (a.param, cand) {
            (SweepParam::UnitsR, Candidate::Count(n)) => block.units_r = *n,
            (SweepParam::LR, Candidate::Count(n)) => block.l_r = *n,
            (SweepParam::LFc, Candidate::Count(n)) => {
                block.l_fc = *n;
                block.fc_units = None;
            }
            (SweepParam::FcUnits, Candidate::Layers(v)) => {
                block.l_fc = v.len();
                block.fc_units = Some(v.clone());
            }
            _ => unreachable!("candidate kind follows the swept parameter"),
        }
        let config = block.resolve()?;
        let (grid, _) = train_grid(&parts.train, Some(&parts.validation), &config, &cfg, Some(&cells))?;
        let mut reports = evaluate_grid(&grid, &parts.test)?;
        reports.sort_by_key(|r| cells.iter().position(|&c| c == (r.lat, r.lon)));
        rows.push((cand.label(), reports));
    }

    let mut text = String::from("candidate,metric");
    for (lat, lon) in &cells {
        let _ = write!(text, ",{lat}:{lon}");
    }
    text.push('\n');
    for (label, reports) in &rows {
        for (metric, pick) in [("rmse", 0), ("acc", 1)] {
            let _ = write!(text, "{label},{metric}");
            for r in reports {
                let v = if pick == 0 { r.report.rmse } else { r.report.acc };
                let _ = write!(text, ",{v}");
            }
            text.push('\n');
        }
    }
    for (metric, pick) in [("rmse", 0), ("acc", 1)] {
        let _ = write!(text, "best,{metric}");
        for c in 0..cells.len() {
            let value = |row: &(String, Vec<CellReport>)| {
                let r = row.1[c].report;
                if pick == 0 { r.rmse } else { -r.acc }
            };
            let best = rows
                .iter()
                .min_by(|x, y| value(x).total_cmp(&value(y)))
                .map(|row| row.0.clone())
                .unwrap_or_default();
            let _ = write!(text, ",{best}");
        }
        text.push('\n');
    }
    write_atomic(&a.out, text.as_bytes())?;
    println!("wrote {} ({} candidates x {} cells)", a.out.display(), candidates.len(), cells.len());
    Ok(())
}

fn run_update(a: &UpdateArgs) -> Result<()> {
    let grid = load_checkpoint(&a.model)?;
    let data = load_grid(&a.data)?;
    let start = match a.start_date {
        Some(d) => data
            .index_of(d)
            .ok_or_else(|| Error::arg(format!("--start-date {d} is outside the data span")))?,
        None => 0,
    };
    let end = match a.end_date {
        Some(d) => data
            .index_of(d)
            .ok_or_else(|| Error::arg(format!("--end-date {d} is outside the data span")))?,
        None => data.ntime() - 1,
    };
    let window = data.slice_days(start, end + 1)?;
    let epochs = a.epochs.unwrap_or(grid.train_config.epochs);
    let updated = update_online(&grid, &window, epochs)?;
    save_checkpoint(&updated, &a.out)?;
    println!(
        "updated {} cell models on {} days ({} epochs) -> {}",
        updated.model_cells().len(),
        window.ntime(),
        epochs,
        a.out.display()
    );
    Ok(())
}
