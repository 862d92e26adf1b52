mod parse;
mod session;
mod suites;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use flowgroups::constructions::{
    all_pass, finite_generating_set, first_return_decomposition, fragment_element, move_domain, show_word,
};
use flowgroups::dyadic::{thompson_generators, PLMap};
use flowgroups::equivalence::{restrict, symbol_expansion, FlowEquivalence, FlowEquivalenceJson, RestrictionMap};
use flowgroups::suspension::{chart_embed, metric, Chart, ElementJson};
use flowgroups::symbolic::{induced_system, return_partition, sft_approximation, ReturnMode, SystemFile};
use flowgroups::{Dyadic, Error, FlowElement, Result, Subshift, SuspensionPoint};
use serde_json::{json, Value};

use session::Session;

#[derive(Parser)]
#[command(name = "flowgroups", version, about = "Exact computations in PL groups of suspension flows")]
struct Cli {
    /// Session file holding named systems and elements.
    #[arg(long, global = true, default_value = "flowgroups-session.json")]
    session: PathBuf,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Cap on return and entry times.
    #[arg(long, global = true, default_value_t = 64)]
    budget_return: usize,
    /// Cap on generator word lengths.
    #[arg(long, global = true, default_value_t = 1 << 20)]
    budget_word: usize,
    #[arg(long, global = true, default_value_t = 100)]
    samples: usize,
    /// Write the JSON or CSV result here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Register a system or an element.
    Define {
        #[command(subcommand)]
        what: Define,
    },
    /// Sample the orbit of a point under a word of elements (CSV).
    Eval {
        #[arg(long)]
        system: String,
        #[arg(long)]
        word: String,
        #[arg(long)]
        point: String,
        #[arg(long, default_value = "0")]
        time: String,
        #[arg(long, default_value_t = 10)]
        steps: usize,
    },
    Compose {
        #[arg(long)]
        system: String,
        g: String,
        h: String,
        #[arg(long = "as")]
        name: Option<String>,
    },
    Invert {
        #[arg(long)]
        system: String,
        g: String,
        #[arg(long = "as")]
        name: Option<String>,
    },
    Commutator {
        #[arg(long)]
        system: String,
        g: String,
        h: String,
        #[arg(long = "as")]
        name: Option<String>,
    },
    Equal {
        #[arg(long)]
        system: String,
        g: String,
        h: String,
    },
    Metric {
        #[arg(long)]
        system: String,
        g: String,
        h: String,
    },
    Support {
        #[arg(long)]
        system: String,
        g: String,
    },
    /// First return (or entry) partition of a clopen set.
    ReturnTime {
        #[arg(long)]
        system: String,
        #[arg(long)]
        clopen: String,
        #[arg(long)]
        entry: bool,
    },
    Induce {
        #[arg(long)]
        system: String,
        #[arg(long)]
        clopen: String,
    },
    /// Register the SFT allowing exactly the length-n words.
    Approx {
        #[arg(long)]
        system: String,
        #[arg(long)]
        level: usize,
        #[arg(long = "as")]
        name: String,
    },
    /// Register the finite generating set as `<system>.<generator>`.
    Generators {
        #[arg(long)]
        system: String,
    },
    MoveDomain {
        #[arg(long)]
        system: String,
        #[arg(long)]
        clopen: String,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long = "as")]
        name: Option<String>,
    },
    DecomposeFirstReturn {
        #[arg(long)]
        system: String,
        #[arg(long)]
        clopen: String,
        #[arg(long)]
        interval: String,
        /// Elements to factor over the return boxes.
        #[arg(long, num_args = 0..)]
        elements: Vec<String>,
    },
    Fragment {
        #[arg(long)]
        system: String,
        #[arg(long)]
        element: String,
        #[arg(long)]
        clopen: String,
        #[arg(long)]
        interval: String,
        /// Cover entries `CLOPEN:lo,hi`.
        #[arg(long, num_args = 1..)]
        cover: Vec<String>,
    },
    Restrict {
        #[arg(long)]
        system: String,
        #[arg(long)]
        element: String,
        #[arg(long)]
        to: String,
        #[arg(long = "as")]
        name: Option<String>,
    },
    /// Conjugate an element along a flow equivalence.
    PsConjugate {
        #[arg(long)]
        system: String,
        #[arg(long)]
        element: String,
        /// Flow equivalence file; its target must be registered with --target.
        #[arg(long, conflicts_with = "expand")]
        equivalence: Option<PathBuf>,
        /// Expand this symbol of an SFT instead of reading a file.
        #[arg(long)]
        expand: Option<String>,
        #[arg(long)]
        target: String,
        #[arg(long = "as")]
        name: Option<String>,
    },
    /// Run a property suite and print its report.
    Check {
        suite: String,
        #[arg(long)]
        system: String,
        /// Corrupt the checked claim to exercise the failure path.
        #[arg(long)]
        inject_bad: bool,
    },
}

#[derive(Subcommand)]
enum Define {
    /// From a system file.
    System { name: String, file: PathBuf },
    /// One of `fibonacci`, `golden-mean`, `full:<s1>,<s2>,…`.
    Builtin { name: String, spec: String },
    /// From an element file over a registered system.
    Element {
        name: String,
        #[arg(long)]
        system: String,
        file: PathBuf,
    },
    /// `chart_embed((C, J), f)` with `f` one of `a`, `b`, or a list of pairs `t:v;t:v;…`.
    Chart {
        name: String,
        #[arg(long)]
        system: String,
        #[arg(long)]
        clopen: String,
        #[arg(long)]
        interval: String,
        #[arg(long)]
        map: String,
    },
    /// The flow `Φ^r`.
    Translation {
        name: String,
        #[arg(long)]
        system: String,
        #[arg(long)]
        by: String,
    },
}

enum Output {
    Json(Value),
    Csv(String),
}

enum Failure {
    Check(Value),
    Err(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure::Err(e)
    }
}

fn exact(d: Dyadic) -> Value {
    json!({"exact": d.to_string(), "decimal": d.decimal()})
}

fn element_summary(g: &FlowElement) -> Value {
    json!({"hash": g.canonical_hash(), "element": g.to_json()})
}

fn read(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| {
        Error::Input(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
    })
}

fn chart_map(j: &flowgroups::Interval, spec: &str) -> Result<PLMap> {
    let (a, b) = thompson_generators(j);
    match spec {
        "a" => Ok(a),
        "b" => Ok(b),
        _ => {
            let pairs = spec
                .split(';')
                .map(|p| {
                    let (t, v) = p.split_once(':').ok_or_else(|| Error::Input(format!("bad pair {p:?}")))?;
                    Ok((parse::dyadic(t)?, parse::dyadic(v)?))
                })
                .collect::<Result<Vec<_>>>()?;
            PLMap::from_pairs(&pairs)
        }
    }
}

fn register(s: &mut Session, name: &Option<String>, system: &str, g: &FlowElement) {
    if let Some(n) = name {
        s.add_element(n, system, g);
    }
}

fn run(cli: &Cli, s: &mut Session) -> std::result::Result<Output, Failure> {
    let word = |s: &Session, sys: &str, w: &str| parse::element_word(s, sys, w);
    let out = match &cli.cmd {
        Cmd::Define { what } => match what {
            Define::System { name, file } => {
                let f: SystemFile = parse_json(file)?;
                let sys = f.build()?;
                s.add_system(name, &sys)?;
                json!({"system": name, "id": sys.id(), "letters": sys.letters()})
            }
            Define::Builtin { name, spec } => {
                let sys = match spec.as_str() {
                    "fibonacci" => Subshift::fibonacci(),
                    "golden-mean" => Subshift::golden_mean(),
                    _ => match spec.strip_prefix("full:") {
                        Some(a) => Subshift::full(&a.split(',').collect::<Vec<_>>()),
                        None => return Err(Error::Input(format!("unknown builtin {spec:?}")).into()),
                    },
                };
                s.add_system(name, &sys)?;
                json!({"system": name, "id": sys.id(), "letters": sys.letters()})
            }
            Define::Element { name, system, file } => {
                let sys = s.system(system)?;
                let j: ElementJson = parse_json(file)?;
                let g = FlowElement::from_json(&sys, &j)?;
                s.add_element(name, system, &g);
                json!({"element": name, "hash": g.canonical_hash()})
            }
            Define::Chart { name, system, clopen, interval, map } => {
                let sys = s.system(system)?;
                let ch = Chart::new(&parse::clopen(&sys, clopen)?, parse::interval(interval)?)?;
                let f = chart_map(&parse::interval(interval)?, map)?;
                let g = chart_embed(&ch, &f)?;
                s.add_element(name, system, &g);
                json!({"element": name, "hash": g.canonical_hash()})
            }
            Define::Translation { name, system, by } => {
                let g = FlowElement::translation(&s.system(system)?, parse::dyadic(by)?);
                s.add_element(name, system, &g);
                json!({"element": name, "hash": g.canonical_hash()})
            }
        },
        Cmd::Eval { system, word: w, point, time, steps } => {
            let sys = s.system(system)?;
            let g = word(s, system, w)?;
            let mut y = SuspensionPoint::new(parse::point(&sys, point)?, parse::dyadic(time)?);
            let mut wtr = csv::Writer::from_writer(Vec::new());
            wtr.write_record(["iterate", "base_window", "time", "decimal"]).unwrap();
            for i in 0..*steps {
                let window = format!("{}.{}", sys.show_word(&y.base.window(-4, 4)), sys.show_word(&y.base.window(0, 4)));
                wtr.write_record([i.to_string(), window, y.time.to_string(), y.time.decimal()]).unwrap();
                y = g.evaluate(&y);
            }
            return Ok(Output::Csv(String::from_utf8(wtr.into_inner().unwrap()).unwrap()));
        }
        Cmd::Compose { system, g, h, name } => {
            let r = word(s, system, g)?.compose(&word(s, system, h)?)?;
            register(s, name, system, &r);
            element_summary(&r)
        }
        Cmd::Invert { system, g, name } => {
            let r = word(s, system, g)?.invert()?;
            register(s, name, system, &r);
            element_summary(&r)
        }
        Cmd::Commutator { system, g, h, name } => {
            let r = word(s, system, g)?.commutator(&word(s, system, h)?)?;
            register(s, name, system, &r);
            element_summary(&r)
        }
        Cmd::Equal { system, g, h } => {
            let (a, b) = (word(s, system, g)?, word(s, system, h)?);
            json!({"equal": a.equals(&b)?, "lhs_hash": a.canonical_hash(), "rhs_hash": b.canonical_hash()})
        }
        Cmd::Metric { system, g, h } => {
            let (a, b) = (word(s, system, g)?, word(s, system, h)?);
            json!({"distance": exact(metric(&a, &b)?), "lhs_hash": a.canonical_hash(), "rhs_hash": b.canonical_hash()})
        }
        Cmd::Support { system, g } => {
            let a = word(s, system, g)?;
            let table: Vec<Value> = a
                .support_table()?
                .into_iter()
                .map(|(c, set)| json!({"clopen": c.describe(), "times": set.to_string()}))
                .collect();
            json!({"hash": a.canonical_hash(), "support": table})
        }
        Cmd::ReturnTime { system, clopen, entry } => {
            let sys = s.system(system)?;
            let c = parse::clopen(&sys, clopen)?;
            let mode = if *entry { ReturnMode::Entry } else { ReturnMode::Return };
            let p = return_partition(&c, mode, cli.budget_return)?;
            let cells: Vec<Value> = p.cells.iter().map(|c| json!({"cell": c.cell.describe(), "time": c.time})).collect();
            let min = p.cells.iter().map(|c| c.time).filter(|&t| t > 0).min();
            json!({"clopen": c.describe(), "mode": if *entry {"entry"} else {"return"}, "first_time": min, "cells": cells})
        }
        Cmd::Induce { system, clopen } => {
            let sys = s.system(system)?;
            let ind = induced_system(&parse::clopen(&sys, clopen)?, cli.budget_return)?;
            let words: Vec<String> = ind.return_words.iter().map(|w| sys.show_word(w)).collect();
            json!({"return_words": words, "letters": ind.system.letters()})
        }
        Cmd::Approx { system, level, name } => {
            let sys = s.system(system)?;
            let a = sft_approximation(&sys, *level)?;
            s.add_system(name, &a)?;
            json!({"system": name, "id": a.id(), "level": level, "words": a.count_words(*level)?})
        }
        Cmd::Generators { system } => {
            let sys = s.system(system)?;
            let gs = finite_generating_set(&sys)?;
            let mut list = Vec::new();
            for (n, g) in gs.names.iter().zip(&gs.elements) {
                let full = format!("{system}.{n}");
                s.add_element(&full, system, g);
                list.push(json!({"name": full, "hash": g.canonical_hash()}));
            }
            json!({"generators": list})
        }
        Cmd::MoveDomain { system, clopen, from, to, name } => {
            let sys = s.system(system)?;
            let m = move_domain(&parse::clopen(&sys, clopen)?, &parse::interval(from)?, &parse::interval(to)?)?;
            register(s, name, system, &m.k);
            let v = json!({
                "hash": m.k.canonical_hash(),
                "word": show_word(&m.word),
                "word_length": m.word.len(),
                "checks": m.checks.iter().map(|(n, b)| json!({"name": n, "pass": b})).collect::<Vec<_>>(),
            });
            if !all_pass(&m.checks) {
                return Err(Failure::Check(v));
            }
            v
        }
        Cmd::DecomposeFirstReturn { system, clopen, interval, elements } => {
            let sys = s.system(system)?;
            let ps = elements.iter().map(|e| word(s, system, e)).collect::<Result<Vec<_>>>()?;
            let fr = first_return_decomposition(&parse::clopen(&sys, clopen)?, &parse::interval(interval)?, &ps)?;
            let v = json!({
                "charts": fr.charts.iter().map(|c| json!({"clopen": c.base.describe(), "interval": c.interval.to_string()})).collect::<Vec<_>>(),
                "factorizations": fr.factorizations.iter().map(|f| f.to_json()).collect::<Vec<_>>(),
                "checks": fr.checks.iter().map(|(n, b)| json!({"name": n, "pass": b})).collect::<Vec<_>>(),
            });
            if !all_pass(&fr.checks) {
                return Err(Failure::Check(v));
            }
            v
        }
        Cmd::Fragment { system, element, clopen, interval, cover } => {
            let sys = s.system(system)?;
            let g = word(s, system, element)?;
            let ch = Chart::new(&parse::clopen(&sys, clopen)?, parse::interval(interval)?)?;
            let cov = cover
                .iter()
                .map(|e| {
                    let (c, iv) = e
                        .rsplit_once(':')
                        .ok_or_else(|| Error::Input(format!("cover entry {e:?} is not CLOPEN:lo,hi")))?;
                    Ok((parse::clopen(&sys, c)?, parse::interval(iv)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let fz = fragment_element(&g, &ch, &cov)?;
            let v = fz.to_json();
            if !fz.verified() {
                return Err(Failure::Check(v));
            }
            v
        }
        Cmd::Restrict { system, element, to, name } => {
            let g = word(s, system, element)?;
            let r = RestrictionMap::new(&s.system(system)?, &s.system(to)?, g.window().1.max(1))?;
            let h = restrict(&g, &r)?;
            register(s, name, to, &h);
            json!({"source_hash": g.canonical_hash(), "restricted": element_summary(&h)})
        }
        Cmd::PsConjugate { system, element, equivalence, expand, target, name } => {
            let sys = s.system(system)?;
            let g = word(s, system, element)?;
            let fe = match (equivalence, expand) {
                (Some(path), None) => {
                    let j: FlowEquivalenceJson = parse_json(path)?;
                    FlowEquivalence::from_json(&sys, &s.system(target)?, &j)?
                }
                (None, Some(sym)) => {
                    let w = sys.parse_word(sym)?;
                    if w.len() != 1 {
                        return Err(Error::Input("expand takes a single symbol".into()).into());
                    }
                    let (t, fe) = symbol_expansion(&sys, w[0])?;
                    s.add_system(target, &t)?;
                    fe
                }
                _ => return Err(Error::Input("give exactly one of --equivalence or --expand".into()).into()),
            };
            let c = fe.conjugate(&g)?;
            register(s, name, target, &c);
            json!({"source_hash": g.canonical_hash(), "conjugate": element_summary(&c), "equivalence": fe.to_json()})
        }
        Cmd::Check { suite, system, inject_bad } => {
            let sys = s.system(system)?;
            let budgets = suites::Budgets { ret: cli.budget_return };
            let r = suites::run(suite, &sys, system, cli.seed, cli.samples, &budgets, *inject_bad)?;
            let v = serde_json::to_value(&r).unwrap();
            if !r.pass {
                return Err(Failure::Check(v));
            }
            v
        }
    };
    Ok(Output::Json(out))
}

fn emit(cli: &Cli, text: String) -> Result<()> {
    match &cli.out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Budget(_) | Error::ReturnUnbounded { .. } => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut session = match Session::open(&cli.session) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = run(&cli, &mut session);
    let (text, code) = match result {
        Ok(Output::Json(v)) => (serde_json::to_string_pretty(&v).unwrap() + "\n", 0),
        Ok(Output::Csv(t)) => (t, 0),
        Err(Failure::Check(v)) => (serde_json::to_string_pretty(&v).unwrap() + "\n", 1),
        Err(Failure::Err(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    if let Err(e) = session.save().and_then(|_| emit(&cli, text)) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(code)
}
