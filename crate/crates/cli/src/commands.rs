//! Subcommands of the `vcsp` binary.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vcsp_core::algebra::{
    find_core, in_support, in_support_among, separating_instance, test_bwc_pipeline, test_sym, Bwc, Language,
    Membership, Operation, Refutation,
};
use vcsp_core::consistency::{kl_minimality_with_order, Minimality, Order};
use vcsp_core::gadgets::{contract_equalities, express, feas_gadget, opt_gadget, Gadget};
use vcsp_core::gap::{build_gap_solution, AbelianGroup, TorusInstance};
use vcsp_core::sa::{build_sa, extract_assignment, solve_sa, Extraction, SaResult, SaVerifier, SaViolation, ScopeIndex};
use vcsp_core::{Error, Instance, DEFAULT_BUDGET};

use crate::format::{self, FormatError};

pub const BUDGET_ENV: &str = "VCSP_SA_BUDGET";

#[derive(Parser, Debug)]
#[command(name = "vcsp", version, about = "Exact Sherali-Adams relaxations and algebraic tests for valued CSPs")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Cap on enumerated assignments, operations and LP entries
    /// (default: $VCSP_SA_BUDGET, else 2^26).
    #[arg(long, global = true)]
    pub budget: Option<u64>,
    /// Worker threads; every verb currently runs on one.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: u64,
}

#[derive(Args, Debug, Clone)]
pub struct Level {
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub l: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, Default)]
pub enum OrderArg {
    #[default]
    Fifo,
    Lifo,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Brute-force optimum and lexicographically smallest optimal assignment.
    SolveExact { instance: PathBuf },
    /// Optimum of the SA(k, l) relaxation.
    SolveSa {
        instance: PathBuf,
        #[command(flatten)]
        level: Level,
        /// Write the optimal point as a lambda file.
        #[arg(long)]
        lambda_out: Option<PathBuf>,
        /// Write the literal SA(k, l) linear program.
        #[arg(long)]
        lp_out: Option<PathBuf>,
    },
    /// Recover an optimal assignment by self-reduction over SA(k, l).
    Extract {
        instance: PathBuf,
        #[command(flatten)]
        level: Level,
    },
    /// Establish (k, l)-minimality of a crisp instance.
    Minimality {
        instance: PathBuf,
        #[command(flatten)]
        level: Level,
        #[arg(long, value_enum, default_value_t)]
        order: OrderArg,
        /// Print every surviving partial assignment.
        #[arg(long)]
        dump: bool,
    },
    /// Decide whether an operation lies in the support of a language.
    TestFpol {
        language: PathBuf,
        /// Operation name from --ops, or one of min, max, majority, minority.
        #[arg(long)]
        op: String,
        #[arg(long)]
        ops: Option<PathBuf>,
        /// Restrict the LP columns to the operations in this file.
        #[arg(long)]
        candidates: Option<PathBuf>,
        /// Write the separating instance of a No certificate here.
        #[arg(long)]
        separating: Option<PathBuf>,
    },
    /// Bounded-width test: core, constants, then linked ternary and quaternary WNUs.
    TestBwc { language: PathBuf },
    /// Symmetric operations of arities 2..=max in the support.
    TestSym {
        language: PathBuf,
        #[arg(long)]
        max: usize,
    },
    /// Reduce a language to a core.
    FindCore { language: PathBuf },
    /// The relation expressed by an instance on designated variables.
    Express {
        instance: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        vars: Vec<usize>,
        #[arg(long, default_value = "expressed")]
        name: String,
    },
    /// Emit the torus gap instance.
    GenGap {
        #[arg(long, default_value = "Z2")]
        group: String,
        #[arg(long)]
        n: usize,
        /// Emit the equation form over R^m_a relations of arity at most r.
        #[arg(long)]
        r: Option<usize>,
    },
    /// Emit the certified SA(k, k) solution of the torus gap instance.
    GapCert {
        #[arg(long, default_value = "Z2")]
        group: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a lambda file against SA(k, l) of an instance.
    Verify {
        instance: PathBuf,
        lambda: PathBuf,
        #[command(flatten)]
        level: Level,
        /// Audit this many random scopes and containment pairs instead of all.
        #[arg(long)]
        sample: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Replace opt(phi) constraints by copies of phi.
    GadgetOpt {
        instance: PathBuf,
        /// Name of the relation phi in the instance file.
        #[arg(long)]
        phi: String,
    },
    /// Replace feas(phi) constraints by scaled copies of phi.
    GadgetFeas {
        instance: PathBuf,
        #[arg(long)]
        phi: String,
    },
    /// Merge variables joined by an equality relation.
    ContractEq {
        instance: PathBuf,
        #[arg(long, default_value = "eq")]
        eq: String,
    },
}

/// Exit status of a run that completed without error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    Infeasible = 3,
    Empty = 4,
    Violated = 5,
    NotExtractable = 6,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Format { path: String, source: FormatError },
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{verb}: {source}")]
    Core { verb: &'static str, source: Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Format { source: FormatError::Io(_), .. } | CliError::Io { .. } => 1,
            CliError::Format { .. } | CliError::Usage(_) => 2,
            CliError::Core { source, .. } => match source {
                Error::InvalidInput(_) => 2,
                Error::BudgetExceeded { .. } => 7,
                Error::Internal(_) => 1,
            },
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

fn with_path<T>(path: &Path, r: std::result::Result<T, FormatError>) -> Result<T> {
    r.map_err(|source| CliError::Format {
        path: path.display().to_string(),
        source,
    })
}

fn load_instance(path: &Path) -> Result<Instance> {
    with_path(path, format::parse_instance(&read(path)?))
}

fn load_language(path: &Path) -> Result<Language> {
    with_path(path, format::parse_language(&read(path)?))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(io_err(path))
}

fn core(verb: &'static str) -> impl Fn(Error) -> CliError {
    move |source| CliError::Core { verb, source }
}

/// `--budget`, else `$VCSP_SA_BUDGET`, else the library default.
pub fn resolve_budget(flag: Option<u64>) -> Result<u64> {
    if let Some(b) = flag {
        return Ok(b);
    }
    match std::env::var(BUDGET_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{BUDGET_ENV}: expected a non-negative integer, found `{v}`"))),
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

fn builtin(name: &str, d: usize) -> Option<vcsp_core::Result<Operation>> {
    Some(match name {
        "min" => Operation::min(d, 2),
        "max" => Operation::max(d, 2),
        "majority" => Operation::majority(d),
        "minority" => Operation::minority(d),
        _ => return None,
    })
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

fn describe_violation(v: &SaViolation) -> String {
    match v {
        SaViolation::Normalization { scope, total } => format!("normalization scope [{}] total {total}", join(scope)),
        SaViolation::Negative { scope, assignment } => {
            format!("negative scope [{}] assignment [{}]", join(scope), join(assignment))
        }
        SaViolation::InfeasibleMass { scope, assignment } => {
            format!("infeasible-mass scope [{}] assignment [{}]", join(scope), join(assignment))
        }
        SaViolation::Marginal {
            sub,
            sup,
            assignment,
            expected,
            found,
        } => format!(
            "marginal sub [{}] sup [{}] assignment [{}] expected {expected} found {found}",
            join(sub),
            join(sup),
            join(assignment)
        ),
    }
}

fn print_gadget(out: &mut dyn Write, g: &Gadget) -> io::Result<()> {
    writeln!(out, "# copies {}", g.copies)?;
    writeln!(out, "# bound {}", g.bound)?;
    match &g.delta {
        Some(delta) => writeln!(out, "# delta {delta}")?,
        None => writeln!(out, "# delta none")?,
    }
    writeln!(out, "# shift {}", g.shift)?;
    writeln!(out, "# replaced {}", g.replaced)?;
    writeln!(out, "# threshold {}", g.threshold)?;
    write!(out, "{}", format::print_instance(&g.instance))
}

fn phi_of(instance: &Instance, name: &str) -> Result<vcsp_core::WeightedRelation> {
    instance
        .relation_id(name)
        .map(|id| instance.relation(id).clone())
        .ok_or_else(|| CliError::Usage(format!("no relation named `{name}` in the instance")))
}

fn torus(group: &str, n: usize) -> Result<TorusInstance> {
    let group = AbelianGroup::parse(group).map_err(core("gen-gap"))?;
    TorusInstance::canonical(group, n).map_err(core("gen-gap"))
}

/// Run one command, writing its report to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<Status> {
    let budget = resolve_budget(cli.common.budget)?;
    let stdout_err = |source: io::Error| CliError::Io {
        path: "<stdout>".into(),
        source,
    };
    match &cli.command {
        Command::SolveExact { instance } => {
            let inst = load_instance(instance)?;
            let (value, witness) = inst.brute_force_opt(budget).map_err(core("solve-exact"))?;
            writeln!(out, "value {value}").map_err(stdout_err)?;
            match witness {
                Some(sigma) => {
                    writeln!(out, "assignment {}", join(&sigma.0)).map_err(stdout_err)?;
                    Ok(Status::Ok)
                }
                None => Ok(Status::Infeasible),
            }
        }
        Command::SolveSa {
            instance,
            level,
            lambda_out,
            lp_out,
        } => {
            let inst = load_instance(instance)?;
            if let Some(path) = lp_out {
                let (lp, _) = build_sa(&inst, level.k, level.l, budget).map_err(core("solve-sa"))?;
                write_file(path, &format::print_lp(&lp))?;
            }
            let res = solve_sa(&inst, level.k, level.l, budget).map_err(core("solve-sa"))?;
            writeln!(out, "value {}", res.value()).map_err(stdout_err)?;
            match res {
                SaResult::Feasible { solution, .. } => {
                    if let Some(path) = lambda_out {
                        let file = File::create(path).map_err(io_err(path))?;
                        let mut w = BufWriter::new(file);
                        format::write_lambda(&mut w, &solution)
                            .and_then(|_| w.flush())
                            .map_err(io_err(path))?;
                    }
                    Ok(Status::Ok)
                }
                SaResult::Infeasible => Ok(Status::Infeasible),
            }
        }
        Command::Extract { instance, level } => {
            let inst = load_instance(instance)?;
            match extract_assignment(&inst, level.k, level.l, budget).map_err(core("extract"))? {
                Extraction::Found { assignment, value } => {
                    writeln!(out, "value {value}\nassignment {}", join(&assignment.0)).map_err(stdout_err)?;
                    Ok(Status::Ok)
                }
                Extraction::NotExtractable { sa_value, fixed } => {
                    writeln!(out, "not-extractable\nsa-value {sa_value}\nfixed {}", join(&fixed))
                        .map_err(stdout_err)?;
                    Ok(Status::NotExtractable)
                }
                Extraction::Infeasible => {
                    writeln!(out, "value inf").map_err(stdout_err)?;
                    Ok(Status::Infeasible)
                }
            }
        }
        Command::Minimality {
            instance,
            level,
            order,
            dump,
        } => {
            let inst = load_instance(instance)?;
            let order = match order {
                OrderArg::Fifo => Order::Fifo,
                OrderArg::Lifo => Order::Lifo,
            };
            match kl_minimality_with_order(&inst, level.k, level.l, budget, order).map_err(core("minimality"))? {
                Minimality::Empty => {
                    writeln!(out, "empty").map_err(stdout_err)?;
                    Ok(Status::Empty)
                }
                Minimality::Minimal(state) => {
                    writeln!(out, "minimal").map_err(stdout_err)?;
                    if *dump {
                        let index = state.index();
                        for i in 0..index.num_scopes() {
                            let vars = join(index.scope(i));
                            for t in state.tuples(i) {
                                writeln!(out, "allowed {vars} | {}", join(&t)).map_err(stdout_err)?;
                            }
                        }
                    }
                    Ok(Status::Ok)
                }
            }
        }
        Command::TestFpol {
            language,
            op,
            ops,
            candidates,
            separating,
        } => {
            let lang = load_language(language)?;
            let mut named = match ops {
                Some(path) => with_path(path, format::parse_operations(&read(path)?))?,
                None => Vec::new(),
            };
            let f = match named.iter().position(|(name, _)| name == op) {
                Some(i) => named.swap_remove(i).1,
                None => builtin(op, lang.domain_size())
                    .ok_or_else(|| CliError::Usage(format!("unknown operation `{op}`")))?
                    .map_err(core("test-fpol"))?,
            };
            if f.domain_size() != lang.domain_size() {
                return Err(CliError::Usage(format!(
                    "operation `{op}` is on domain {}, the language on {}",
                    f.domain_size(),
                    lang.domain_size()
                )));
            }
            let result = match candidates {
                Some(path) => {
                    let columns: Vec<Operation> = with_path(path, format::parse_operations(&read(path)?))?
                        .into_iter()
                        .map(|(_, g)| g)
                        .collect();
                    in_support_among(&f, &lang, &columns, budget)
                }
                None => in_support(&f, &lang, budget),
            }
            .map_err(core("test-fpol"))?;
            match result {
                Membership::Yes(omega) => {
                    writeln!(out, "yes").map_err(stdout_err)?;
                    for (i, (g, w)) in omega.support().iter().enumerate() {
                        writeln!(out, "weight w{i} {w}").map_err(stdout_err)?;
                        write!(out, "{}", format::print_operation(&format!("w{i}"), g)).map_err(stdout_err)?;
                    }
                    Ok(Status::Ok)
                }
                Membership::No(Refutation::NotPolymorphism(ce)) => {
                    writeln!(out, "no\nnot-polymorphism {}", lang.names()[ce.relation]).map_err(stdout_err)?;
                    for t in &ce.tuples {
                        writeln!(out, "tuple {}", join(t)).map_err(stdout_err)?;
                    }
                    writeln!(out, "image {}", join(&ce.image)).map_err(stdout_err)?;
                    Ok(Status::Violated)
                }
                Membership::No(Refutation::Certificate(cert)) => {
                    writeln!(out, "no\ncertificate").map_err(stdout_err)?;
                    for e in &cert.entries {
                        let block: Vec<String> = e.tuples.iter().map(|t| join(t)).collect();
                        writeln!(out, "z {} {} | {}", e.weight, lang.names()[e.relation], block.join(" ; "))
                            .map_err(stdout_err)?;
                    }
                    if let Some(path) = separating {
                        let inst = separating_instance(&cert, &f, &lang).map_err(core("test-fpol"))?;
                        write_file(path, &format::print_instance(&inst))?;
                    }
                    Ok(Status::Violated)
                }
            }
        }
        Command::TestBwc { language } => {
            let lang = load_language(language)?;
            let (core_lang, result) = test_bwc_pipeline(&lang, budget).map_err(core("test-bwc"))?;
            writeln!(out, "core {}", join(&core_lang.domain)).map_err(stdout_err)?;
            match result {
                Bwc::Satisfied { ternary, quaternary } => {
                    writeln!(out, "satisfied").map_err(stdout_err)?;
                    write!(out, "{}", format::print_operation("f", &ternary)).map_err(stdout_err)?;
                    write!(out, "{}", format::print_operation("g", &quaternary)).map_err(stdout_err)?;
                    Ok(Status::Ok)
                }
                Bwc::Violated => {
                    writeln!(out, "violated").map_err(stdout_err)?;
                    Ok(Status::Violated)
                }
            }
        }
        Command::TestSym { language, max } => {
            let lang = load_language(language)?;
            if *max < 2 {
                return Err(CliError::Usage("--max must be at least 2".into()));
            }
            let mut status = Status::Ok;
            for report in test_sym(&lang, *max, budget).map_err(core("test-sym"))? {
                match &report.found {
                    Some(f) => {
                        writeln!(out, "arity {} found", report.arity).map_err(stdout_err)?;
                        write!(out, "{}", format::print_operation(&format!("sym{}", report.arity), f))
                            .map_err(stdout_err)?;
                    }
                    None => {
                        writeln!(out, "arity {} none", report.arity).map_err(stdout_err)?;
                        status = Status::Violated;
                    }
                }
            }
            Ok(status)
        }
        Command::FindCore { language } => {
            let lang = load_language(language)?;
            let c = find_core(&lang, budget).map_err(core("find-core"))?;
            writeln!(out, "# domain {}", join(&c.domain)).map_err(stdout_err)?;
            write!(out, "{}", format::print_language(&c.language)).map_err(stdout_err)?;
            Ok(Status::Ok)
        }
        Command::Express { instance, vars, name } => {
            let inst = load_instance(instance)?;
            let rel = express(&inst, vars, budget).map_err(core("express"))?;
            write!(out, "{}", format::print_relation(name, &rel)).map_err(stdout_err)?;
            Ok(Status::Ok)
        }
        Command::GenGap { group, n, r } => {
            let t = torus(group, *n)?;
            let inst = match r {
                Some(r) => t.eqs_instance(*r).map_err(core("gen-gap"))?,
                None => t.instance().clone(),
            };
            write!(out, "{}", format::print_instance(&inst)).map_err(stdout_err)?;
            Ok(Status::Ok)
        }
        Command::GapCert { group, n, k, out: path } => {
            let t = torus(group, *n)?;
            let lambda = build_gap_solution(&t, *k, budget).map_err(core("gap-cert"))?;
            match path {
                Some(path) => {
                    let file = File::create(path).map_err(io_err(path))?;
                    let mut w = BufWriter::new(file);
                    format::write_lambda(&mut w, &lambda)
                        .and_then(|_| w.flush())
                        .map_err(io_err(path))?;
                }
                None => {
                    let mut w = BufWriter::new(out);
                    format::write_lambda(&mut w, &lambda)
                        .and_then(|_| w.flush())
                        .map_err(stdout_err)?;
                }
            }
            Ok(Status::Ok)
        }
        Command::Verify {
            instance,
            lambda,
            level,
            sample,
            seed,
        } => {
            let inst = load_instance(instance)?;
            let index = ScopeIndex::new(&inst, level.k, level.l, budget).map_err(core("verify"))?;
            let file = File::open(lambda).map_err(io_err(lambda))?;
            let sol = with_path(lambda, format::read_lambda(BufReader::new(file), index))?;
            let verifier = SaVerifier::new(&inst, &sol, level.k, level.l, budget).map_err(core("verify"))?;
            let violation = match sample {
                None => verifier.verify_all().violation,
                Some(s) => sampled_check(&verifier, *s, *seed),
            };
            match violation {
                None => {
                    if let Some(s) = sample {
                        writeln!(out, "feasible sampled {s} seed {seed}").map_err(stdout_err)?;
                    } else {
                        writeln!(out, "feasible").map_err(stdout_err)?;
                    }
                    writeln!(out, "objective {}", verifier.objective()).map_err(stdout_err)?;
                    Ok(Status::Ok)
                }
                Some(v) => {
                    writeln!(out, "violated {}", describe_violation(&v)).map_err(stdout_err)?;
                    Ok(Status::Violated)
                }
            }
        }
        Command::GadgetOpt { instance, phi } => {
            let inst = load_instance(instance)?;
            let g = opt_gadget(&inst, &phi_of(&inst, phi)?).map_err(core("gadget-opt"))?;
            print_gadget(out, &g).map_err(stdout_err)?;
            Ok(Status::Ok)
        }
        Command::GadgetFeas { instance, phi } => {
            let inst = load_instance(instance)?;
            let g = feas_gadget(&inst, &phi_of(&inst, phi)?).map_err(core("gadget-feas"))?;
            print_gadget(out, &g).map_err(stdout_err)?;
            Ok(Status::Ok)
        }
        Command::ContractEq { instance, eq } => {
            let inst = load_instance(instance)?;
            let id = inst
                .relation_id(eq)
                .ok_or_else(|| CliError::Usage(format!("no relation named `{eq}` in the instance")))?;
            let c = contract_equalities(&inst, id).map_err(core("contract-eq"))?;
            writeln!(out, "# classes {}", join(&c.class_of)).map_err(stdout_err)?;
            write!(out, "{}", format::print_instance(&c.instance)).map_err(stdout_err)?;
            Ok(Status::Ok)
        }
    }
}

/// `samples` random scopes, then `samples` random containment pairs; lowest draw wins.
fn sampled_check(verifier: &SaVerifier<'_>, samples: usize, seed: u64) -> Option<SaViolation> {
    let index = verifier.index();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let i = rng.gen_range(0..index.num_scopes());
        if let Some(v) = verifier.check_scope(i) {
            return Some(v);
        }
    }
    for _ in 0..samples {
        let i = rng.gen_range(0..index.num_scopes());
        let subs = index.subscopes(i);
        if subs.is_empty() {
            continue;
        }
        let j = subs[rng.gen_range(0..subs.len())];
        if let Some(v) = verifier.check_pair(j, i) {
            return Some(v);
        }
    }
    None
}
