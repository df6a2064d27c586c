//! `shlin`: command-line access to the ω-sharing domain.
//!
//! Exit status: 0 on success, 1 when the operation itself fails (unification
//! failure, invalid graph, a falsified check), 2 on malformed input or usage.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{IsTerminal, Read};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use shlin_core::oracle::{check_coincidence, check_optimality, check_soundness, witness_substitution, Report};
use shlin_core::syntax::{
    element_to_json, graph_to_json, parse_element, parse_equations, parse_graph_json, parse_group, parse_group_set,
    parse_substitution, parse_term, parse_var_list,
};
use shlin_core::term::VarSetDisplay;
use shlin_core::{
    alpha_omega, approximates, mgu_existential, mgu_omega, mgu_p, unify, Bound, ExistentialSubstitution,
    ParallelSharingGraph, ShLinElement, SharingGroup, Substitution, Var,
};

#[derive(Parser)]
#[command(
    name = "shlin",
    version,
    about = "Sharing and linearity analysis with ω-sharing groups"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Comma-separated variable names; every other identifier is a function symbol.
    #[arg(long, global = true, default_value = "")]
    vars: String,
    /// Set of interest, comma-separated (defaults to all declared variables).
    #[arg(long, global = true)]
    universe: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Largest cardinality of reported groups.
    #[arg(long, global = true, default_value_t = 8)]
    bound: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Multiplicity χ of a group in a term.
    Chi {
        #[arg(long)]
        group: String,
        #[arg(long)]
        term: String,
    },
    /// Abstraction of a substitution over the universe.
    Alpha {
        #[arg(long)]
        subst: String,
    },
    /// Whether an element approximates a substitution over the element's universe.
    Approx {
        #[arg(long)]
        element: String,
        #[arg(long)]
        subst: String,
    },
    /// Concrete unification: an equation set, or a substitution class with a substitution.
    Unify {
        /// Equations `l = r; ...`.
        #[arg(long, conflicts_with_all = ["delta", "subst"])]
        equations: Option<String>,
        /// Representative of the class `[δ]_U`, over the universe.
        #[arg(long, requires = "subst")]
        delta: Option<String>,
        #[arg(long, requires = "delta")]
        subst: Option<String>,
    },
    /// Parallel abstract unification.
    MguP(AbstractInput),
    /// Sequential abstract unification.
    MguOmega(AbstractInput),
    /// Checks a sharing graph in the JSON exchange format.
    ValidateGraph {
        /// Graph JSON, a path to it, or `-` for standard input.
        #[arg(long)]
        graph: String,
        #[arg(long)]
        groups: String,
        #[arg(long)]
        subst: String,
    },
    /// Builds the concrete witness substitution of a sharing graph.
    Witness {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        subst: String,
    },
    /// Runs one of the correctness checkers.
    Check {
        #[command(subcommand)]
        check: Check,
    },
}

#[derive(Args)]
struct AbstractInput {
    /// Element `[B, ...] @ {U}`; alternatively give --groups over --universe.
    #[arg(long, conflicts_with = "groups")]
    element: Option<String>,
    /// Groups separated by `|`.
    #[arg(long)]
    groups: Option<String>,
    #[arg(long)]
    subst: String,
}

#[derive(Subcommand)]
enum Check {
    /// Parallel and sequential unification agree.
    Coincidence {
        #[arg(long)]
        groups: String,
        #[arg(long)]
        subst: String,
    },
    /// Every enumerated group has a concrete witness.
    Optimality(AbstractInput),
    /// Random concrete instances produce only predicted groups.
    Soundness {
        #[command(flatten)]
        input: AbstractInput,
        #[arg(long, default_value_t = 50)]
        trials: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Failure {
    Usage(String),
    Domain(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Usage(_) => 2,
        }
    }
}

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn domain(e: impl ToString) -> Failure {
    Failure::Domain(e.to_string())
}

struct Output {
    text: String,
    json: serde_json::Value,
    ok: bool,
}

impl Output {
    fn ok(text: impl Into<String>, json: serde_json::Value) -> Self {
        Output {
            text: text.into(),
            json,
            ok: true,
        }
    }
}

struct Context {
    vars: BTreeSet<Var>,
    universe: BTreeSet<Var>,
    bound: Bound,
}

impl Context {
    fn new(common: &Common) -> Result<Self, Failure> {
        let vars = parse_var_list(&common.vars).map_err(|e| usage(format!("--vars: {e}")))?;
        let universe = match &common.universe {
            None => vars.clone(),
            Some(text) => {
                let u = parse_var_list(text).map_err(|e| usage(format!("--universe: {e}")))?;
                if !u.is_subset(&vars) {
                    let extra: BTreeSet<Var> = u.difference(&vars).cloned().collect();
                    return Err(usage(format!(
                        "--universe: undeclared variables {}",
                        VarSetDisplay(&extra)
                    )));
                }
                u
            }
        };
        let bound = Bound::new(common.bound).map_err(|e| usage(format!("--bound: {e}")))?;
        Ok(Context { vars, universe, bound })
    }

    fn subst(&self, text: &str) -> Result<Substitution, Failure> {
        parse_substitution(text, &self.vars).map_err(|e| usage(format!("--subst: {e}")))
    }

    fn idempotent(&self, text: &str) -> Result<Substitution, Failure> {
        self.idempotent_over(text, &BTreeSet::new())
    }

    /// Like `idempotent`, also treating `extra` (an element's universe) as declared.
    fn idempotent_over(&self, text: &str, extra: &BTreeSet<Var>) -> Result<Substitution, Failure> {
        let vars: BTreeSet<Var> = self.vars.union(extra).cloned().collect();
        let s = parse_substitution(text, &vars).map_err(|e| usage(format!("--subst: {e}")))?;
        if !s.is_idempotent() {
            return Err(usage(format!("--subst: {s} is not idempotent")));
        }
        Ok(s)
    }

    fn groups(&self, text: &str) -> Result<BTreeSet<SharingGroup>, Failure> {
        parse_group_set(text, &self.vars).map_err(|e| usage(format!("--groups: {e}")))
    }

    fn element(&self, input: &AbstractInput) -> Result<ShLinElement, Failure> {
        match (&input.element, &input.groups) {
            (Some(text), _) => parse_element(text).map_err(|e| usage(format!("--element: {e}"))),
            (None, Some(text)) => ShLinElement::new(self.universe.clone(), self.groups(text)?)
                .map_err(|e| usage(format!("--groups: {e}"))),
            (None, None) => Err(usage("one of --element or --groups is required")),
        }
    }

    fn graph(&self, arg: &str) -> Result<ParallelSharingGraph, Failure> {
        let text = if arg.trim_start().starts_with('{') {
            arg.to_string()
        } else if arg == "-" {
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .map_err(|e| usage(format!("--graph: {e}")))?;
            buf
        } else {
            std::fs::read_to_string(arg).map_err(|e| usage(format!("--graph {arg}: {e}")))?
        };
        parse_graph_json(&text, &self.vars).map_err(|e| usage(format!("--graph: {e}")))
    }
}

fn element_output(a: &ShLinElement) -> Output {
    Output::ok(a.to_string(), element_to_json(a))
}

fn report_output(report: Report) -> Output {
    Output {
        text: report.to_string(),
        json: report.to_json(),
        ok: report.passed,
    }
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    let cx = Context::new(&cli.common)?;
    match &cli.command {
        Command::Chi { group, term } => {
            let g = parse_group(group, &cx.vars).map_err(|e| usage(format!("--group: {e}")))?;
            let t = parse_term(term, &cx.vars).map_err(|e| usage(format!("--term: {e}")))?;
            let chi = g.chi(&t);
            Ok(Output::ok(chi.to_string(), json!({ "chi": chi })))
        }
        Command::Alpha { subst } => {
            let theta = cx.idempotent(subst)?;
            let d = ExistentialSubstitution::new(theta, cx.universe.clone()).map_err(usage)?;
            Ok(element_output(&alpha_omega(&d)))
        }
        Command::Approx { element, subst } => {
            let a = parse_element(element).map_err(|e| usage(format!("--element: {e}")))?;
            let mut vars = cx.vars.clone();
            vars.extend(a.universe().iter().cloned());
            let delta = parse_substitution(subst, &vars).map_err(|e| usage(format!("--subst: {e}")))?;
            let d = ExistentialSubstitution::new(delta, a.universe().clone()).map_err(usage)?;
            let holds = approximates(&a, &d);
            Ok(Output::ok(holds.to_string(), json!({ "approximates": holds })))
        }
        Command::Unify {
            equations,
            delta,
            subst,
        } => {
            if let Some(text) = equations {
                let eqs = parse_equations(text, &cx.vars).map_err(|e| usage(format!("--equations: {e}")))?;
                let mgu = unify(&eqs).map_err(|e| domain(format!("unification failed: {e}")))?;
                return Ok(Output::ok(mgu.to_string(), json!({ "mgu": mgu.to_string() })));
            }
            let (Some(delta), Some(subst)) = (delta, subst) else {
                return Err(usage("give --equations, or --delta together with --subst"));
            };
            let delta = parse_substitution(delta, &cx.vars).map_err(|e| usage(format!("--delta: {e}")))?;
            let theta = cx.idempotent(subst)?;
            let class =
                ExistentialSubstitution::new(delta, cx.universe.clone()).map_err(|e| usage(format!("--delta: {e}")))?;
            let result = mgu_existential(&class, &theta).map_err(|e| domain(format!("unification failed: {e}")))?;
            Ok(Output::ok(
                result.to_string(),
                json!({
                    "mgu": result.canonical().to_string(),
                    "universe": result.universe().iter().map(|v| v.name()).collect::<Vec<_>>(),
                }),
            ))
        }
        Command::MguP(input) | Command::MguOmega(input) => {
            let a = cx.element(input)?;
            let theta = cx.idempotent_over(&input.subst, a.universe())?;
            let result = if matches!(cli.command, Command::MguP(_)) {
                mgu_p(&a, &theta, cx.bound)
            } else {
                mgu_omega(&a, &theta, cx.bound)
            }
            .map_err(usage)?;
            Ok(element_output(&result))
        }
        Command::ValidateGraph { graph, groups, subst } => {
            let g = cx.graph(graph)?;
            let s = cx.groups(groups)?;
            let theta = cx.subst(subst)?;
            let resultant = g.resultant();
            match g.validate(&s, &theta) {
                Ok(()) => Ok(Output::ok(
                    format!("valid, resultant {resultant}"),
                    json!({ "valid": true, "violation": null, "resultant": resultant.to_string() }),
                )),
                Err(v) => Ok(Output {
                    text: format!("invalid: {v}"),
                    json: json!({ "valid": false, "violation": v.to_string(), "resultant": resultant.to_string() }),
                    ok: false,
                }),
            }
        }
        Command::Witness { graph, subst } => {
            let g = cx.graph(graph)?;
            let theta = cx.idempotent(subst)?;
            let w = witness_substitution(&g, &cx.universe, &theta).map_err(domain)?;
            let fresh: BTreeMap<String, String> =
                w.fresh.iter().map(|(n, v)| (n.0.to_string(), v.to_string())).collect();
            let assignment: Vec<BTreeMap<String, u32>> = w
                .assignment
                .iter()
                .map(|layer| layer.iter().map(|(p, e)| (p.to_string(), e.0)).collect())
                .collect();
            let mut text = w.delta.to_string();
            for (n, v) in &w.fresh {
                text.push_str(&format!("\nnode {} -> {v}", n.0));
            }
            for (i, layer) in w.assignment.iter().enumerate() {
                let pairs: Vec<String> = layer.iter().map(|(p, e)| format!("{p}->{}", e.0)).collect();
                text.push_str(&format!("\nlayer {i}: {}", pairs.join(" ")));
            }
            text.push_str(&format!("\nresultant: {}", g.resultant()));
            Ok(Output::ok(
                text,
                json!({
                    "delta": w.delta.to_string(),
                    "resultant": g.resultant().to_string(),
                    "fresh": fresh,
                    "assignment": assignment,
                    "graph": graph_to_json(&g),
                }),
            ))
        }
        Command::Check { check } => match check {
            Check::Coincidence { groups, subst } => {
                let s = cx.groups(groups)?;
                let theta = cx.idempotent(subst)?;
                Ok(report_output(check_coincidence(&s, &theta, cx.bound).map_err(usage)?))
            }
            Check::Optimality(input) => {
                let a = cx.element(input)?;
                let theta = cx.idempotent_over(&input.subst, a.universe())?;
                Ok(report_output(check_optimality(&a, &theta, cx.bound).map_err(usage)?))
            }
            Check::Soundness { input, trials, seed } => {
                let a = cx.element(input)?;
                let theta = cx.idempotent_over(&input.subst, a.universe())?;
                Ok(report_output(
                    check_soundness(&a, &theta, cx.bound, *trials, *seed).map_err(usage)?,
                ))
            }
        },
    }
}

fn styled(text: &str, ok: bool) -> String {
    let enabled = std::env::var("SHLIN_COLOR").map_or(true, |v| v != "0") && std::io::stdout().is_terminal();
    if !enabled {
        return text.to_string();
    }
    let code = if ok { "32" } else { "31" };
    format!("\x1b[{code}m{text}\x1b[0m")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(out) => {
            match cli.common.format {
                Format::Text => println!("{}", if out.ok { out.text } else { styled(&out.text, false) }),
                Format::Json => println!("{}", serde_json::to_string_pretty(&out.json).expect("json output")),
            }
            ExitCode::from(if out.ok { 0 } else { 1 })
        }
        Err(f) => {
            let message = match &f {
                Failure::Usage(m) | Failure::Domain(m) => m,
            };
            eprintln!("shlin: {}", styled(message, false));
            ExitCode::from(f.code())
        }
    }
}
