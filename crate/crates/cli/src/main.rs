//! `gpd`: run groupoid constructions, factorizations and suites on text
//! documents.
//!
//! Exit codes: 0 success, 1 predicate false or failures found, 2 input
//! error, 3 size cap exceeded, 4 internal disagreement.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use gpd_factor::base::{set_size_cap, Backend};
use gpd_factor::factor::{
    comprehensive_factor, em_factor, is_covering, is_final, is_in_e, stability_search,
    trivial_covering_routes, StabilityBudget,
};
use gpd_factor::gpd::{profile, validate_functor, validate_groupoid, GFunctor, Groupoid};
use gpd_factor::harness::{run_suite, scenario_counterexample, GenConfig, PullbackClass};
use gpd_factor::reflection::{decalage, pi0, pi1_inclusion, supp};
use gpd_factor::text::{parse_file, Document, Entity};
use gpd_factor::Error;

#[derive(Parser)]
#[command(name = "gpd", version, about = "Factorization systems on finite internal groupoids")]
struct Cli {
    /// Maximum number of elements of any constructed object.
    #[arg(long, global = true)]
    cap: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Predicate {
    DiscreteFibration,
    TrivialCovering,
    Covering,
    Final,
    InE,
    Full,
    Faithful,
    EssSurjective,
}

#[derive(Clone, Copy, ValueEnum)]
enum System {
    Em,
    Comprehensive,
}

#[derive(Clone, Copy, ValueEnum)]
enum Along {
    All,
    RegularEpi,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Finset,
    Finab,
}

#[derive(Subcommand)]
enum Command {
    /// Check every entity of a document.
    Validate { file: PathBuf },
    /// Components and the unit of the reflection.
    Pi0 {
        file: PathBuf,
        #[arg(long)]
        groupoid: String,
    },
    /// Support relation and the comparison to it.
    Supp {
        file: PathBuf,
        #[arg(long)]
        groupoid: String,
    },
    /// Décalage and its counit.
    Dec {
        file: PathBuf,
        #[arg(long)]
        groupoid: String,
    },
    /// Vertex group at zero (group backend only).
    Pi1 {
        file: PathBuf,
        #[arg(long)]
        groupoid: String,
    },
    /// Factor a functor with certificates.
    Factor {
        file: PathBuf,
        #[arg(long)]
        functor: String,
        #[arg(long, value_enum)]
        system: System,
    },
    /// Decide a class membership; exit 1 when false.
    Check {
        file: PathBuf,
        #[arg(long)]
        functor: String,
        #[arg(long, value_enum)]
        predicate: Predicate,
    },
    /// Search for a pullback not inverted by pi0; exit 1 when found.
    Stability {
        file: PathBuf,
        #[arg(long)]
        functor: String,
        #[arg(long, value_enum, default_value = "all")]
        along: Along,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Arrow bound for random probes.
        #[arg(long, default_value_t = 16)]
        max_size: usize,
        /// Functors of the document probed before the random ones.
        #[arg(long)]
        probe: Vec<String>,
    },
    /// The pullback cube whose front face is final but not stably so.
    PaperExample {
        #[arg(long, default_value = "Z/2")]
        group: String,
    },
    /// Run the property suite; exit 1 on any failure.
    Suite {
        #[arg(long, value_enum)]
        backend: BackendArg,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Write the machine-readable record stream here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::CapExceeded { .. } => 3,
        Error::InternalDisagreement(_) | Error::ActionNotWellDefined(_) | Error::CertificateFailed(_) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(cap) = cli.cap {
        set_size_cap(cap);
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn groupoid_of(doc: &Document, name: &str) -> Result<Groupoid, Error> {
    doc.groupoid(name)
        .cloned()
        .ok_or_else(|| Error::InvalidInput(format!("no groupoid named `{name}`")))
}

fn functor_of(doc: &Document, name: &str) -> Result<GFunctor, Error> {
    doc.functor(name)
        .cloned()
        .ok_or_else(|| Error::InvalidInput(format!("no functor named `{name}`")))
}

fn load(path: &Path) -> Result<Document, Error> {
    parse_file(path)
}

fn run(command: Command) -> Result<u8, Error> {
    match command {
        Command::Validate { file } => validate(&load(&file)?),
        Command::Pi0 { file, groupoid } => {
            let doc = load(&file)?;
            let g = groupoid_of(&doc, &groupoid)?;
            let r = pi0(&g)?;
            let mut out = Document::new(doc.backend);
            out.add_object(&format!("pi0.{groupoid}"), &r.components)?;
            out.add_functor(&format!("eta.{groupoid}"), &r.eta)?;
            print!("{}", out.print());
            Ok(0)
        }
        Command::Supp { file, groupoid } => {
            let doc = load(&file)?;
            let g = groupoid_of(&doc, &groupoid)?;
            let r = supp(&g)?;
            let mut out = Document::new(doc.backend);
            out.add_groupoid(&format!("supp.{groupoid}"), &r.support)?;
            out.add_functor(&format!("sigma.{groupoid}"), &r.sigma)?;
            print!("{}", out.print());
            Ok(0)
        }
        Command::Dec { file, groupoid } => {
            let doc = load(&file)?;
            let g = groupoid_of(&doc, &groupoid)?;
            let r = decalage(&g)?;
            let mut out = Document::new(doc.backend);
            out.add_groupoid(&format!("dec.{groupoid}"), &r.dec)?;
            out.add_functor(&format!("epsilon.{groupoid}"), &r.epsilon)?;
            print!("{}", out.print());
            Ok(0)
        }
        Command::Pi1 { file, groupoid } => {
            let doc = load(&file)?;
            let g = groupoid_of(&doc, &groupoid)?;
            let inc = pi1_inclusion(&g)?;
            let mut out = Document::new(doc.backend);
            out.add_object(&format!("pi1.{groupoid}"), inc.dom())?;
            out.add_morphism(&format!("pi1.{groupoid}.inclusion"), &inc)?;
            print!("{}", out.print());
            Ok(0)
        }
        Command::Factor { file, functor, system } => {
            let doc = load(&file)?;
            let f = functor_of(&doc, &functor)?;
            let fac = match system {
                System::Em => em_factor(&f)?,
                System::Comprehensive => comprehensive_factor(&f)?,
            };
            let mut out = Document::new(doc.backend);
            out.add_functor(&functor, &f)?;
            out.add_factorization(&format!("{}.{functor}", fac.kind), &fac)?;
            print!("{}", out.print());
            Ok(0)
        }
        Command::Check { file, functor, predicate } => {
            let doc = load(&file)?;
            let f = functor_of(&doc, &functor)?;
            let (holds, why) = check(&f, predicate)?;
            println!("{}: {why}", if holds { "true" } else { "false" });
            Ok(if holds { 0 } else { 1 })
        }
        Command::Stability {
            file,
            functor,
            along,
            trials,
            seed,
            max_size,
            probe,
        } => {
            let doc = load(&file)?;
            let f = functor_of(&doc, &functor)?;
            let extra = probe
                .iter()
                .map(|n| functor_of(&doc, n))
                .collect::<Result<Vec<_>, _>>()?;
            let along = match along {
                Along::All => PullbackClass::All,
                Along::RegularEpi => PullbackClass::RegularEpi,
            };
            let budget = StabilityBudget {
                trials,
                max_size,
                seed,
            };
            let verdict = stability_search(&f, along, &budget, &extra)?;
            let mut out = Document::new(doc.backend);
            out.add_functor(&functor, &f)?;
            out.add_stability("verdict", &f, &verdict)?;
            print!("{}", out.print());
            match verdict.counterexample() {
                Some(w) => {
                    println!(
                        "# counterexample at probe {} ({}): the pullback `verdict.pulled` is not inverted by pi0",
                        w.probe,
                        if w.deterministic { "deterministic batch" } else { "random batch" }
                    );
                    Ok(1)
                }
                None => {
                    println!("# no counterexample in {} probes; this is not a proof of stability", verdict.probed);
                    Ok(0)
                }
            }
        }
        Command::PaperExample { group } => {
            let report = scenario_counterexample(&group)?;
            print!("{}", report.summary());
            Ok(if report.passed() { 0 } else { 1 })
        }
        Command::Suite {
            backend,
            seed,
            trials,
            report,
        } => {
            let backend = match backend {
                BackendArg::Finset => Backend::FinSet,
                BackendArg::Finab => Backend::FinAb,
            };
            let cfg = GenConfig {
                trials,
                ..GenConfig::new(backend, seed)
            };
            let r = run_suite(&cfg)?;
            print!("{}", r.summary());
            if let Some(path) = report {
                std::fs::write(&path, r.stream())
                    .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))?;
            }
            Ok(if r.passed() { 0 } else { 1 })
        }
    }
}

fn validate(doc: &Document) -> Result<u8, Error> {
    let mut ok = true;
    for (name, entity) in doc.entries() {
        let problems: Vec<String> = match entity {
            Entity::Object(_) | Entity::Morphism { .. } | Entity::Stability(_) => Vec::new(),
            Entity::Groupoid { groupoid, .. } => {
                let r = validate_groupoid(groupoid);
                if r.is_valid() {
                    Vec::new()
                } else {
                    vec![r.to_string()]
                }
            }
            Entity::Functor { functor, .. } => {
                let r = validate_functor(functor)?;
                if r.is_valid() {
                    Vec::new()
                } else {
                    vec![r.to_string()]
                }
            }
            Entity::Factorization { factorization, .. } => factorization.recheck()?,
        };
        if problems.is_empty() {
            println!("ok      {name}");
        } else {
            ok = false;
            println!("invalid {name}");
            for p in problems {
                for line in p.lines() {
                    println!("    {line}");
                }
            }
        }
    }
    Ok(if ok { 0 } else { 1 })
}

fn check(f: &GFunctor, predicate: Predicate) -> Result<(bool, String), Error> {
    let report = validate_functor(f)?;
    if !report.is_valid() {
        return Err(Error::InvalidFunctor(report.to_string()));
    }
    Ok(match predicate {
        Predicate::DiscreteFibration => {
            let p = profile(f)?;
            (p.discrete_fibration, "unique lifting of arrows along their codomain".into())
        }
        Predicate::TrivialCovering => {
            let r = trivial_covering_routes(f)?;
            (
                r.unit_square,
                format!(
                    "unit square is a pullback: {}; F and Supp F discrete fibrations: {}",
                    r.unit_square, r.fibrations
                ),
            )
        }
        Predicate::Covering => {
            let v = is_covering(f)?;
            let why = if v.covering {
                "discrete fibration; its pullback along the codomain's décalage counit is a trivial covering"
            } else {
                "not a discrete fibration"
            };
            (v.covering, why.into())
        }
        Predicate::Final => {
            let v = is_final(f)?;
            (v.is_final, format!("decided by {}", v.strategy))
        }
        Predicate::InE => {
            let holds = is_in_e(f)?;
            (holds, "pi0 of the functor is an isomorphism".into())
        }
        Predicate::Full => (profile(f)?.full, "every arrow between images lifts".into()),
        Predicate::Faithful => (profile(f)?.faithful, "parallel arrows with equal images are equal".into()),
        Predicate::EssSurjective => (
            profile(f)?.essentially_surjective,
            "every object is connected to an image".into(),
        ),
    })
}
