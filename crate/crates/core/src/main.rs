use clap::{Parser, Subcommand};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use symboleo::diagnostic::Diagnostic;
use symboleo::service::{self, ops};
use symboleo::{cnl, lang, runtime, template};

/// Contract specifications: validate, refine, generate and simulate.
#[derive(Parser)]
#[command(name = "symboleo", version)]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and validate a spec, printing its canonical form.
    Parse { file: PathBuf },
    /// Report diagnostics for a spec.
    Validate { file: PathBuf },
    /// List completions at a 1-based line/column.
    Complete {
        file: PathBuf,
        #[arg(long)]
        line: u32,
        #[arg(long)]
        col: u32,
    },
    /// Apply refinement scripts (lines like `P1: before March 31, 2024`) to
    /// a template/spec pair. Each script is applied to the base pair on its
    /// own and yields one refined spec.
    Refine {
        #[arg(long)]
        template: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        /// JSON object mapping template parameters to spec parameters;
        /// defaults to the identity mapping.
        #[arg(long)]
        map: Option<PathBuf>,
        /// Script file; may be repeated.
        #[arg(long, required = true)]
        script: Vec<PathBuf>,
        /// Directory receiving `<script>.symboleo` and `<script>.txt` per
        /// script. Without it a single script's spec goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate the smart-contract bundle for a spec.
    Generate {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write a zip archive of the bundle.
        #[arg(long)]
        zip: Option<PathBuf>,
    },
    /// Run a JSON Lines scenario against a spec.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        /// JSON object of parameter values (overrides the scenario's).
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Compare refined specs against a base spec.
    Report {
        #[arg(long)]
        base: PathBuf,
        /// LABEL=FILE; may be repeated.
        #[arg(long, value_parser = labelled)]
        refined: Vec<(String, PathBuf)>,
        #[arg(long)]
        csv: bool,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long, env = "PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "HOST", default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        #[arg(long, env = "DATA_DIR")]
        data_dir: Option<PathBuf>,
        #[arg(long, env = "UI_DIR")]
        ui_dir: Option<PathBuf>,
    },
}

fn labelled(s: &str) -> Result<(String, PathBuf), String> {
    let (l, f) = s.split_once('=').ok_or("expected LABEL=FILE")?;
    Ok((l.to_owned(), PathBuf::from(f)))
}

/// Exit 1: the input has diagnostics. Exit 2: usage or I/O problems.
enum Failure {
    /// Diagnostics, with the file they refer to when known.
    Diagnostics(Vec<Diagnostic>, Option<PathBuf>),
    Io(String),
}

type Run = Result<bool, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s)
            .map_err(|e| Failure::Io(format!("stdin: {e}")))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: impl AsRef<[u8]>) -> Result<(), Failure> {
    if let Some(p) = path.parent() {
        std::fs::create_dir_all(p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
    }
    std::fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn json_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    serde_json::from_str(&read(path)?).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn emit(json: bool, value: &impl Serialize, text: impl FnOnce() -> String) {
    if json {
        println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
    } else {
        print!("{}", text());
    }
}

fn print_diags(diags: &[Diagnostic], file: &Path) {
    for d in diags {
        eprintln!("{}:{d}", file.display());
    }
}

fn diags(d: Vec<Diagnostic>) -> Failure {
    Failure::Diagnostics(d, None)
}

fn spec_from(path: &Path) -> Result<lang::SymboleoSpec, Failure> {
    let (spec, diags) = lang::check(&read(path)?);
    spec.ok_or_else(|| Failure::Diagnostics(diags, Some(path.to_owned())))
}

fn run(cli: Cli) -> Run {
    let json = cli.json;
    match cli.cmd {
        Cmd::Parse { file } => {
            let (_, out) = ops::parse(&read(&file)?);
            if !json {
                print_diags(&out.diagnostics, &file);
            }
            emit(json, &out, || out.canonical.clone().unwrap_or_default());
            Ok(out.ok)
        }
        Cmd::Validate { file } => {
            let out = ops::validate(&read(&file)?);
            if !json {
                print_diags(&out.diagnostics, &file);
            }
            emit(json, &out, || if out.valid { "valid\n".into() } else { String::new() });
            Ok(out.valid)
        }
        Cmd::Complete { file, line, col } => {
            let out = ops::complete(&read(&file)?, line, col);
            emit(json, &out, || out.suggestions.iter().map(|s| format!("{s}\n")).collect());
            Ok(true)
        }
        Cmd::Refine { template: t, spec, map, script, out } => {
            let tpl = template::ContractTemplate::from_json(&read(&t)?).map_err(diags)?;
            let spec = spec_from(&spec)?;
            let map: BTreeMap<String, String> = match map {
                Some(m) => json_file(&m)?,
                None => template::identity_map(&tpl),
            };
            let base = template::bind(tpl, spec, map).map_err(diags)?;
            #[derive(Serialize)]
            struct Refined {
                script: String,
                refinements: Vec<cnl::RefinementResult>,
                refined_spec: String,
                refined_template_text: String,
            }
            let mut all = Vec::new();
            for path in &script {
                let (pair, refinements) = cnl::apply_script(&base, &read(path)?)
                    .map_err(|d| Failure::Diagnostics(d, Some(path.clone())))?;
                let name = path.file_stem().map_or_else(|| "refined".into(), |s| s.to_string_lossy().into_owned());
                all.push(Refined {
                    script: name,
                    refinements,
                    refined_spec: lang::print(&pair.spec),
                    refined_template_text: pair.refined_text(),
                });
            }
            if let Some(dir) = &out {
                for r in &all {
                    write(&dir.join(format!("{}.symboleo", r.script)), &r.refined_spec)?;
                    write(&dir.join(format!("{}.txt", r.script)), &r.refined_template_text)?;
                }
            } else if all.len() > 1 && !json {
                return Err(Failure::Io("several scripts need --out".into()));
            }
            emit(json, &all, || match (&out, all.first()) {
                (None, Some(r)) => r.refined_spec.clone(),
                (Some(dir), _) => all
                    .iter()
                    .map(|r| format!("{}\n", dir.join(format!("{}.symboleo", r.script)).display()))
                    .collect(),
                _ => String::new(),
            });
            Ok(true)
        }
        Cmd::Generate { file, out, zip } => {
            let (bundle, outcome) = ops::generate_source(&read(&file)?).map_err(|d| Failure::Diagnostics(d, Some(file.clone())))?;
            bundle.write_to(&out).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
            if let Some(z) = zip {
                let bytes = bundle.to_zip().map_err(|e| Failure::Io(e.to_string()))?;
                write(&z, bytes)?;
            }
            emit(json, &outcome, || {
                let mut s: String = outcome
                    .loc
                    .per_file
                    .iter()
                    .map(|(p, n)| format!("{n:>6}  {p}\n"))
                    .collect();
                s.push_str(&format!("{:>6}  total\n", outcome.loc.total));
                s
            });
            Ok(true)
        }
        Cmd::Simulate { spec, scenario, params } => {
            let spec = spec_from(&spec)?;
            let ops = runtime::parse_scenario(&read(&scenario)?).map_err(diags)?;
            let params: Option<serde_json::Map<String, serde_json::Value>> =
                params.map(|p| json_file(&p)).transpose()?;
            let outcome = runtime::run_scenario(&spec, params.as_ref(), &ops).map_err(diags)?;
            emit(json, &outcome, || simulation_text(&outcome));
            Ok(outcome.steps.iter().all(|s| s.errors.is_empty()))
        }
        Cmd::Report { base, refined, csv } => {
            let base = spec_from(&base)?;
            let refined = refined
                .iter()
                .map(|(l, f)| Ok((l.clone(), spec_from(f)?)))
                .collect::<Result<Vec<_>, Failure>>()?;
            let out = ops::report(&base, &refined);
            emit(json, &out, || if csv { out.csv.clone() } else { out.text.clone() });
            Ok(true)
        }
        Cmd::Serve { port, host, data_dir, ui_dir } => {
            let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Io(e.to_string()))?;
            let cfg = service::ServeConfig {
                addr: (host, port).into(),
                data_dir,
                ui_dir,
            };
            rt.block_on(service::serve(cfg)).map_err(|e| Failure::Io(e.to_string()))?;
            Ok(true)
        }
    }
}

fn simulation_text(o: &runtime::ScenarioOutcome) -> String {
    let mut s = String::new();
    let reports = std::iter::once((0, Some(&o.opening), None))
        .chain(o.steps.iter().map(|st| (st.step, st.report.as_ref(), st.errors.first())));
    for (step, report, error) in reports {
        match (report, error) {
            (Some(r), _) => {
                for t in &r.transitions {
                    s.push_str(&format!(
                        "{}  {:<12} {} -> {}  ({})\n",
                        runtime::format_time(r.at),
                        t.entity,
                        t.from,
                        t.to,
                        t.reason
                    ));
                }
            }
            (None, Some(e)) => s.push_str(&format!("step {step}: rejected [{}] {}\n", e.code, e.message)),
            (None, None) => {}
        }
    }
    s.push_str(&format!("contract: {}\n", o.status.contract));
    s
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Diagnostics(d, file)) => {
            if json {
                let body = serde_json::json!({"diagnostics": d});
                eprintln!("{}", serde_json::to_string_pretty(&body).expect("serializable"));
            } else {
                match file {
                    Some(f) => print_diags(&d, &f),
                    None => d.iter().for_each(|x| eprintln!("{x}")),
                }
            }
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
