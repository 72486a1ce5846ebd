use std::io::Write;
use std::path::{Path, PathBuf};

use sit2stand::grf::{read_stat_rows, StatRow};
use sit2stand::table::fmt_num;

use crate::manifest::RunManifest;
use crate::{Failure, Inputs, Outputs, Settings, PARAMETERS_FILE};

#[derive(Debug, Clone)]
pub struct CompareArgs {
    /// Run directory holding `parameters.csv`, or the table itself.
    pub run_a: PathBuf,
    pub run_b: PathBuf,
    pub out: PathBuf,
    pub config: Option<PathBuf>,
}

pub const COMPARISON_HEADERS: [&str; 8] = [
    "param",
    "mean_a",
    "sd_a",
    "mean_b",
    "sd_b",
    "delta",
    "change_pct",
    "reduced",
];

fn table_path(run: &Path) -> PathBuf {
    if run.is_dir() {
        run.join(PARAMETERS_FILE)
    } else {
        run.to_path_buf()
    }
}

fn load(role: &str, run: &Path, inputs: &mut Inputs) -> Result<Vec<StatRow>, Failure> {
    let path = table_path(run);
    if !path.is_file() {
        return Err(Failure::Input(format!(
            "{role}: no parameter file at {}",
            path.display()
        )));
    }
    let bytes = inputs.read(role, &path)?;
    read_stat_rows(&path.display().to_string(), bytes.as_slice()).map_err(Failure::input)
}

/// Side-by-side parameter table, B relative to A.
///
/// `reduced` is 1 where |B| < |A| beyond rounding, so a smaller force and a
/// shallower slope read the same way. F1 and F2 also appear in %BW when the
/// inputs carry those rows.
pub fn compare(args: &CompareArgs) -> Result<(), Failure> {
    let mut inputs = Inputs::default();
    let settings = Settings::load(args.config.as_deref(), &mut inputs)?;
    let a = load("run_a", &args.run_a, &mut inputs)?;
    let b = load("run_b", &args.run_b, &mut inputs)?;
    let names = |rows: &[StatRow]| rows.iter().map(|r| r.param.clone()).collect::<Vec<_>>();
    if names(&a) != names(&b) {
        return Err(Failure::Input(format!(
            "schema mismatch: run_a has [{}], run_b has [{}]",
            names(&a).join(","),
            names(&b).join(",")
        )));
    }

    let mut out = Outputs::default();
    out.with("comparison.csv", |w| {
        writeln!(w, "{}", COMPARISON_HEADERS.join(","))?;
        for (x, y) in a.iter().zip(&b) {
            let delta = y.mean - x.mean;
            let change = if x.mean != 0.0 {
                100.0 * delta / x.mean.abs()
            } else {
                f64::NAN
            };
            let reduced = match (x.mean.is_finite(), y.mean.is_finite()) {
                // agreement to nine digits is not a change
                (true, true) if y.mean.abs() < x.mean.abs() * (1.0 - 1e-9) => "1",
                (true, true) => "0",
                _ => "",
            };
            writeln!(
                w,
                "{},{},{},{},{},{},{},{reduced}",
                x.param,
                fmt_num(x.mean),
                fmt_num(x.sd),
                fmt_num(y.mean),
                fmt_num(y.sd),
                fmt_num(delta),
                fmt_num(change)
            )?;
        }
        Ok(())
    })?;
    let manifest = RunManifest::new("compare", inputs.records()).with_config("settings", settings.entries());
    out.write(&args.out, manifest)?;
    Ok(())
}
