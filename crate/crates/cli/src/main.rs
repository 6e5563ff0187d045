use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use qdsoa_ramsey::{run_scan, Error, PlannedDelay, RunConfig};

/// Ramsey-fringe delay scans through a quantum-dot optical amplifier.
#[derive(Debug, Parser)]
#[command(name = "qdsoa-ramsey", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the delay scan described by a config file.
    Run {
        config: PathBuf,
        /// Concurrent propagations (0 = all cores); overrides the config.
        #[arg(long)]
        parallelism: Option<usize>,
        /// Output directory; overrides `outputs.dir`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Parse and validate a config file without running it.
    Validate { config: PathBuf },
    /// Print the full default config.
    PrintDefaults,
}

fn load(path: &PathBuf) -> Result<RunConfig, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        // A missing or unreadable config is a config problem, not an output failure.
        Error::Validation(format!("cannot read config {}: {e}", path.display()))
    })?;
    RunConfig::parse(&text)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::PrintDefaults => {
            print!("{}", RunConfig::defaults_toml());
        }
        Command::Validate { config } => {
            let c = load(&config)?;
            let delays = c.scan.nominal_delays_s.len() * c.scan.fine_count();
            println!("ok: {delays} delays, {} spectral groups", c.ensemble.num_groups);
        }
        Command::Run { config, parallelism, output_dir } => {
            let mut c = load(&config)?;
            if let Some(p) = parallelism {
                c.parallelism = p;
            }
            if let Some(dir) = output_dir {
                c.outputs.dir = dir;
            }
            c.validate()?;
            let start = Instant::now();
            let progress = |p: &PlannedDelay, done: usize, total: usize| {
                eprintln!("[{done}/{total}] delay {:.3} fs ({:.0} s)", p.delay_s * 1e15, start.elapsed().as_secs_f64());
            };
            let result = run_scan(&c, Some(&progress))?;
            let s = &result.summary;
            for n in &s.nominal {
                eprintln!(
                    "{:>6.1} fs: visibility {:.4e}, period {:.4} fs, lag {:+.3} cycles",
                    n.nominal_delay_fs, n.visibility, n.fitted_period_fs, n.lag_cycles
                );
            }
            if let (Some(t), Some(r2)) = (s.t_coh_fs, s.r_squared) {
                eprintln!("T_coh {t:.1} fs (R² {r2:.3})");
            }
            println!("{}", c.outputs.dir.display());
        }
    }
    Ok(())
}

/// Usage errors share the config-error code; exit 2 is reserved for numerics.
fn usage_exit_code(e: &clap::Error) -> u8 {
    if e.use_stderr() {
        1
    } else {
        0
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(usage_exit_code(&e));
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use std::fs;
    use std::path::Path;

    use super::*;

    /// Eight fine delays through a 10 µm device: seconds rather than minutes.
    const SMALL: &str = "[medium]\nlength_m = 10e-6\n\n[scan]\nnominal_delays_s = [600e-15]\nfine_span_s = 7e-15\n";

    fn parse(args: &[&str]) -> Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("qdsoa-ramsey").chain(args.iter().copied()))
    }

    fn write(dir: &Path, name: &str, text: &str) -> String {
        let path = dir.join(name);
        fs::write(&path, text).unwrap();
        path.to_str().unwrap().to_owned()
    }

    fn run_args(args: &[&str]) -> Result<(), Error> {
        run(parse(args).unwrap())
    }

    #[test]
    fn defaults_validate() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), "defaults.toml", &RunConfig::defaults_toml());
        run_args(&["validate", &path]).unwrap();
        run_args(&["print-defaults"]).unwrap();
    }

    #[test]
    fn usage_errors_exit_one() {
        let e = parse(&["frobnicate"]).unwrap_err();
        assert_eq!(usage_exit_code(&e), 1);
        let e = parse(&["run"]).unwrap_err();
        assert_eq!(usage_exit_code(&e), 1);
        let e = parse(&["--help"]).unwrap_err();
        assert_eq!(usage_exit_code(&e), 0);
    }

    #[test]
    fn config_errors_exit_one() {
        let dir = tempfile::tempdir().unwrap();
        let unknown = write(dir.path(), "unknown.toml", "[medium]\ntemperature = 300\n");
        let e = run_args(&["validate", &unknown]).unwrap_err();
        assert_eq!(e.exit_code(), 1);
        assert!(e.to_string().contains("temperature") && e.to_string().contains("line 2"), "{e}");

        let negative = write(dir.path(), "negative.toml", "[scan]\nfine_step_s = -1e-15\n");
        let e = run_args(&["run", &negative]).unwrap_err();
        assert_eq!(e.exit_code(), 1);
        assert!(e.to_string().contains("fine_step_s"));

        let missing = dir.path().join("missing.toml");
        assert_eq!(run_args(&["validate", missing.to_str().unwrap()]).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn unwritable_output_exits_three() {
        let dir = tempfile::tempdir().unwrap();
        let config = write(dir.path(), "small.toml", SMALL);
        let blocker = dir.path().join("blocker");
        fs::write(&blocker, b"").unwrap();
        let target = blocker.join("out");
        let e = run_args(&["run", &config, "--output-dir", target.to_str().unwrap()]).unwrap_err();
        assert_eq!(e.exit_code(), 3, "{e}");
    }

    #[test]
    fn failing_delay_exits_two_and_leaves_partial() {
        let dir = tempfile::tempdir().unwrap();
        // A probe far below the window-split threshold cannot be located.
        let config = write(dir.path(), "weak.toml", &format!("{SMALL}\n[probe]\nenergy_j = 1e-15\n"));
        let out = dir.path().join("out");
        let e = run_args(&["run", &config, "--output-dir", out.to_str().unwrap()]).unwrap_err();
        assert_eq!(e.exit_code(), 2, "{e}");
        assert!(e.to_string().contains("delay 600.000 fs"), "{e}");
        assert!(out.join("results.csv.partial").exists());
        assert!(!out.join("results.csv").exists());
        assert!(!out.join("summary.json").exists());
    }

    #[test]
    fn small_scan_is_deterministic_and_complete() {
        let dir = tempfile::tempdir().unwrap();
        let config = write(dir.path(), "small.toml", &format!("{SMALL}\n[outputs]\nemit_spectrograms = true\n"));
        let (a, b) = (dir.path().join("a"), dir.path().join("b"));
        run_args(&["run", &config, "--parallelism", "1", "--output-dir", a.to_str().unwrap()]).unwrap();
        run_args(&["run", &config, "--parallelism", "3", "--output-dir", b.to_str().unwrap()]).unwrap();

        let csv = fs::read_to_string(a.join("results.csv")).unwrap();
        assert_eq!(csv, fs::read_to_string(b.join("results.csv")).unwrap());
        assert_eq!(fs::read(a.join("summary.json")).unwrap(), fs::read(b.join("summary.json")).unwrap());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 9);
        assert_eq!(
            lines[0],
            "delay_fs,probe_peak_W,pump_peak_time_fs,probe_peak_time_fs,separation_fs,probe_energy_pJ,peak_inst_freq_THz"
        );
        assert!(lines[1].starts_with("600.000000,"), "{}", lines[1]);
        assert!(csv.ends_with('\n') && !csv.contains('\r'));

        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(a.join("summary.json")).unwrap()).unwrap();
        let nominal = &summary["nominal"][0];
        for key in ["visibility", "fitted_period_fs", "intensity_phase_rad", "separation_phase_rad", "lag_cycles"] {
            assert!(nominal[key].is_number(), "nominal entry lacks {key}");
        }
        // One nominal delay cannot carry a decay fit.
        assert!(summary["t_coh_fs"].is_null() && summary["r_squared"].is_null());

        let mut names: Vec<String> = fs::read_dir(a.join("spectrograms"))
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert_eq!(names.len(), 8);
        assert_eq!(names[0], "xfrog_600000as.bin");
        assert_eq!(names[7], "xfrog_607000as.bin");
        assert!(!a.join("results.csv.partial").exists());
    }
}
