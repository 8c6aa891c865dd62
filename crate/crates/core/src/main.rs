use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use defosc::cli::{emit, parse_config_text, run, RunConfig};

#[derive(Parser)]
#[command(name = "defosc", version, about = "Exact checks for quantized constant-curvature Kähler models")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    global: Global,
}

#[derive(Args)]
struct Global {
    /// Complex dimension.
    #[arg(long, global = true)]
    n: Option<String>,
    /// Curvature, rational `p/q`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    k: Option<String>,
    #[arg(long, global = true)]
    hbar: Option<String>,
    /// Maximal monomial degree of the truncated basis.
    #[arg(long, global = true)]
    cutoff: Option<String>,
    /// `corrected` or `literal`.
    #[arg(long, global = true)]
    measure: Option<String>,
    #[arg(long, global = true)]
    tol: Option<String>,
    /// Relative tolerance of the quadrature.
    #[arg(long, global = true)]
    quad_tol: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    samples: Option<String>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// `json`, `csv` or `text`.
    #[arg(long, global = true)]
    format: Option<String>,
    /// `key=value` file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Record per-suite wall time (makes output nondeterministic).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    Geometry,
    Algebra,
    Operators,
    Spectrum,
    Gram,
    Adjoint,
    Hproj {
        #[command(subcommand)]
        action: Option<HprojCmd>,
    },
    All,
}

#[derive(Subcommand)]
enum HprojCmd {
    /// λ-roots of the flat pair at a point, e.g. `--point 1/2,0`.
    Classify {
        #[arg(long)]
        point: Option<String>,
    },
    Flatness,
    Residual,
    /// H-planarity of a sampled curve (`t, Re z1, Im z1, ...`).
    Curve {
        #[arg(long)]
        input: PathBuf,
    },
}

fn settings(cli: Cli) -> Result<BTreeMap<String, String>, String> {
    let g = cli.global;
    let mut m = match &g.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            parse_config_text(&text).map_err(|e| e.to_string())?
        }
        None => BTreeMap::new(),
    };
    let flags = [
        ("n", g.n),
        ("k", g.k),
        ("hbar", g.hbar),
        ("cutoff", g.cutoff),
        ("measure", g.measure),
        ("tol", g.tol),
        ("quad_tol", g.quad_tol),
        ("seed", g.seed),
        ("samples", g.samples),
        ("format", g.format),
        ("out", g.out.map(|p| p.display().to_string())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            m.insert(k.to_string(), v);
        }
    }
    if g.timing {
        m.insert("timing".into(), "true".into());
    }
    let suite = match cli.command {
        None => None,
        Some(Command::Geometry) => Some("geometry"),
        Some(Command::Algebra) => Some("algebra"),
        Some(Command::Operators) => Some("operators"),
        Some(Command::Spectrum) => Some("spectrum"),
        Some(Command::Gram) => Some("gram"),
        Some(Command::Adjoint) => Some("adjoint"),
        Some(Command::All) => Some("all"),
        Some(Command::Hproj { action }) => {
            match action {
                None => {}
                Some(HprojCmd::Classify { point }) => {
                    m.insert("hproj".into(), "classify".into());
                    if let Some(p) = point {
                        m.insert("point".into(), p);
                    }
                }
                Some(HprojCmd::Flatness) => {
                    m.insert("hproj".into(), "flatness".into());
                }
                Some(HprojCmd::Residual) => {
                    m.insert("hproj".into(), "residual".into());
                }
                Some(HprojCmd::Curve { input }) => {
                    m.insert("hproj".into(), "curve".into());
                    m.insert("input".into(), input.display().to_string());
                }
            }
            Some("hproj")
        }
    };
    if let Some(s) = suite {
        m.insert("suites".into(), s.into());
    }
    Ok(m)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match settings(cli).and_then(|m| RunConfig::from_map(&m).map_err(|e| e.to_string())) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("defosc: {e}");
            return ExitCode::from(3);
        }
    };
    let report = run(&cfg);
    let bytes = match emit(&report, cfg.format) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("defosc: {e}");
            return ExitCode::from(3);
        }
    };
    let written = match &cfg.out {
        Some(path) => std::fs::write(path, &bytes).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().write_all(&bytes).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("defosc: {e}");
        return ExitCode::from(3);
    }
    for s in &report.suites {
        if let Some(e) = &s.error {
            eprintln!("defosc: {e}");
        }
    }
    ExitCode::from(report.exit_code() as u8)
}
