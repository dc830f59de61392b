use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use cevi::montecarlo::{run_experiment, DEFAULT_SEED};
use cevi::{CensorModel, HeavyTailDist, McConfig, McSummary};
use clap::Args;

use crate::simulate::{study_estimators, STUDY_ESTIMATORS};
use crate::{create, fmt_opt, io_error, CliError};

pub const PLOT_SCRIPT: &str = "figures.gp";
pub const PANEL_HEADER: &str = "estimator,k,median_bias,mse,valid_count,gamma1";

#[derive(Debug, Clone, Args)]
pub struct FiguresArgs {
    /// Directory for the panel CSVs and the plot script; created if missing.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 2000)]
    pub reps: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub name: &'static str,
    pub model: CensorModel<f64>,
}

impl Panel {
    pub fn title(&self) -> String {
        format!("{} censored by {}", self.model.target, self.model.censor)
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }
}

fn burr(theta: f64, beta: f64, lambda: f64) -> HeavyTailDist<f64> {
    HeavyTailDist::burr(theta, beta, lambda).expect("valid parameters")
}

fn frechet(gamma: f64) -> HeavyTailDist<f64> {
    HeavyTailDist::frechet(gamma).expect("valid parameters")
}

/// The four Burr-Burr and two Frechet-Frechet settings of the study.
pub fn panels() -> Vec<Panel> {
    let p = |name, x, c| Panel {
        name,
        model: CensorModel::new(x, c),
    };
    vec![
        p("fig1a", burr(10.0, 2.0, 5.0), burr(10.0, 4.0, 1.0)),
        p("fig1b", burr(10.0, 2.0, 2.0), burr(10.0, 5.0, 2.0)),
        p("fig1c", burr(10.0, 5.0, 2.0), burr(10.0, 2.0, 2.0)),
        p("fig1d", burr(10.0, 4.0, 1.0), burr(10.0, 2.0, 5.0)),
        p("fig2a", frechet(0.25), frechet(0.5)),
        p("fig2b", frechet(0.5), frechet(0.25)),
    ]
}

pub fn panel_config(panel: &Panel, n: usize, reps: usize, seed: u64) -> McConfig {
    McConfig {
        model: panel.model,
        n,
        replicates: reps,
        k_grid: Vec::new(),
        estimators: study_estimators(),
        seed,
    }
    .with_default_grid()
}

pub fn run_panel(panel: &Panel, n: usize, reps: usize, seed: u64) -> Result<McSummary, CliError> {
    Ok(run_experiment(&panel_config(panel, n, reps, seed))?)
}

pub fn write_panel_csv(summary: &McSummary, w: &mut dyn Write) -> std::io::Result<()> {
    writeln!(w, "{PANEL_HEADER}")?;
    for r in &summary.rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.estimator,
            r.k,
            fmt_opt(r.median_bias),
            fmt_opt(r.mse),
            r.valid_count,
            summary.gamma1
        )?;
    }
    Ok(())
}

/// Gnuplot script drawing median bias and MSE against k for every panel.
pub fn plot_script(panels: &[Panel]) -> String {
    let mut s = String::new();
    s.push_str("# gnuplot figures.gp  ->  figures.pdf\n");
    s.push_str("set datafile separator \",\"\n");
    s.push_str("set datafile columnheaders\n");
    s.push_str("set terminal pdfcairo size 11in,4in\n");
    s.push_str("set output \"figures.pdf\"\n");
    s.push_str(&format!("estimators = \"{}\"\n", STUDY_ESTIMATORS.join(" ")));
    s.push_str("set xlabel \"k\"\nset key outside right\n\n");
    for panel in panels {
        let file = panel.file_name();
        s.push_str(&format!(
            "set multiplot layout 1,2 title \"{} ({})\"\n",
            panel.title(),
            panel.name
        ));
        s.push_str("set ylabel \"median bias\"\n");
        s.push_str(&format!(
            "plot for [e in estimators] \"{file}\" using (strcol(\"estimator\") eq e ? column(\"k\") : NaN):(column(\"median_bias\")) with lines title e, 0 with lines dashtype 2 notitle\n"
        ));
        s.push_str("set ylabel \"MSE\"\n");
        s.push_str(&format!(
            "plot for [e in estimators] \"{file}\" using (strcol(\"estimator\") eq e ? column(\"k\") : NaN):(column(\"mse\")) with lines title e\n"
        ));
        s.push_str("unset multiplot\n\n");
    }
    s
}

fn write_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
    let mut w = BufWriter::new(create(path)?);
    f(&mut w).and_then(|()| w.flush()).map_err(|e| io_error(path, e))
}

pub fn run(args: &FiguresArgs, stderr: &mut dyn Write) -> Result<(), CliError> {
    fs::create_dir_all(&args.out).map_err(|e| io_error(&args.out, e))?;
    let panels = panels();
    for panel in &panels {
        let summary = run_panel(panel, args.n, args.reps, args.seed)?;
        let path = args.out.join(panel.file_name());
        write_file(&path, |w| write_panel_csv(&summary, w))?;
        writeln!(stderr, "wrote {} ({})", path.display(), panel.title())?;
    }
    let path = args.out.join(PLOT_SCRIPT);
    let script = plot_script(&panels);
    write_file(&path, |w| w.write_all(script.as_bytes()))?;
    writeln!(stderr, "wrote {}", path.display())?;
    Ok(())
}
