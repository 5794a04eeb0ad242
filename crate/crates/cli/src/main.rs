use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use posetmod::encoding::{singleton_partition, uptight_encoding, verify_constant_subdivision, Encoding};
use posetmod::filtration::{persistent_homology, MultiFiltration};
use posetmod::fringe::{downset_resolution, fringe_presentation, fringe_presentation_box, trivial_encoding, upset_resolution};
use posetmod::homalg::{minimal_flat_resolution, minimal_injective_resolution};
use posetmod::json::{self as pj, AnyModule};
use posetmod::module::{EncodedModule, FinDetModule};
use posetmod::oracle::{oracle_hom, DEFAULT_HOM_CAP};
use posetmod::poset::hom_indicator;
use posetmod::primary::primary_decomposition;
use posetmod::{Error, Field};

#[derive(Parser)]
#[command(name = "posetmod", version, about = "Modules over posets and Z^n: encodings, resolutions, presentations, persistent homology")]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Coefficient field, `q` or `p:PRIME`; used where the input carries none.
    #[arg(long, global = true, default_value = "q")]
    field: Field,
    /// Accepted for reproducible pipelines; no subcommand samples randomness.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Extra layers added around box modules before computing.
    #[arg(long, global = true, default_value_t = 0)]
    box_margin: i64,
    /// Write the result here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Upset,
    Downset,
}

#[derive(Subcommand)]
enum Command {
    /// Persistent homology of a multifiltration as a box module.
    Phom {
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        dim: usize,
    },
    /// Certify a partition as constant and emit the uptight encoding.
    Encode {
        /// A module, or `{"module", "partition": [[ids]]}`.
        input: PathBuf,
    },
    /// Upset or downset resolution (flat or injective for box modules).
    Resolve {
        input: PathBuf,
        #[arg(long, value_enum)]
        side: Side,
    },
    /// Fringe presentation of an encoding, module, or filtration.
    Fringe {
        input: PathBuf,
        /// Homology degree when the input is a filtration.
        #[arg(long, default_value_t = 0)]
        dim: usize,
    },
    /// Primary decomposition of a box module.
    Primary {
        input: PathBuf,
        /// Greedily drop components that injectivity does not need.
        #[arg(long)]
        prune: bool,
    },
    /// Dimension of Hom between indicator modules or between two modules.
    Hom {
        #[arg(long, requires = "downset")]
        upset: Option<PathBuf>,
        #[arg(long)]
        downset: Option<PathBuf>,
        #[arg(long, requires = "target", conflicts_with = "upset")]
        source: Option<PathBuf>,
        #[arg(long)]
        target: Option<PathBuf>,
    },
    /// Validate a module, morphism, encoding, filtration or region file.
    Verify { input: PathBuf },
}

fn read_json(path: &Path) -> Result<Value, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
    pj::parse_text(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn with_margin(m: FinDetModule, margin: i64) -> Result<FinDetModule, Error> {
    if margin <= 0 {
        return Ok(m);
    }
    m.rebox(&m.grid().enlarged(margin))
}

/// An encoding file, or a plain module encoded by singletons.
fn encoding_or_module(v: &Value) -> Result<Either, Error> {
    if v.get("pi").is_some() {
        return Ok(Either::Encoding(Box::new(pj::encoding_from_json(v)?)));
    }
    Ok(match pj::any_module_from_json(v, "$")? {
        AnyModule::Encoded(m) => Either::Encoding(Box::new(trivial_encoding(&m)?)),
        AnyModule::Box(m) => Either::Box(m),
    })
}

enum Either {
    Encoding(Box<Encoding>),
    Box(FinDetModule),
}

fn run(cli: &Cli) -> Result<Value, Error> {
    match &cli.command {
        Command::Phom { input, dim } => {
            let f: MultiFiltration = pj::filtration_from_json(&read_json(input)?)?;
            let m = persistent_homology(&f, *dim, cli.field)?.module;
            Ok(pj::findet_module_to_json(&with_margin(m, cli.box_margin)?))
        }
        Command::Encode { input } => {
            let v = read_json(input)?;
            let (module_v, partition) = match v.get("module") {
                Some(m) => (m, v.get("partition")),
                None => (&v, None),
            };
            let m = match pj::any_module_from_json(module_v, "$.module")? {
                AnyModule::Encoded(m) => m,
                AnyModule::Box(b) => b.to_encoded()?,
            };
            let regions = match partition {
                None => singleton_partition(m.poset()),
                Some(p) => parse_partition(&m, p)?,
            };
            let s = verify_constant_subdivision(&m, &regions)?;
            Ok(pj::encoding_to_json(&uptight_encoding(&s)?))
        }
        Command::Resolve { input, side } => match encoding_or_module(&read_json(input)?)? {
            Either::Encoding(e) => {
                let res = match side {
                    Side::Upset => upset_resolution(&e)?,
                    Side::Downset => downset_resolution(&e)?,
                };
                let diffs = res
                    .differentials
                    .iter()
                    .map(|d| pj::region_matrix_to_json(d, None))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(json!({
                    "side": side_name(*side),
                    "poset": pj::poset_to_json(e.module().poset()),
                    "terms": res.terms.iter().map(|t| t.iter().map(pj::region_to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
                    "differentials": diffs,
                }))
            }
            Either::Box(m) => {
                let m = with_margin(m, cli.box_margin)?;
                match side {
                    Side::Upset => {
                        let r = minimal_flat_resolution(&m)?;
                        Ok(json!({
                            "side": "upset",
                            "box": pj::box_to_json(r.grid()),
                            "terms": r.terms.iter().map(|t| t.labels.iter().map(|l| json!({"b": l.b, "tau": l.tau.to_one_based()})).collect::<Vec<_>>()).collect::<Vec<_>>(),
                            "differentials": r.differentials.iter().map(pj::flat_labels_matrix_to_json).collect::<Vec<_>>(),
                        }))
                    }
                    Side::Downset => {
                        let r = minimal_injective_resolution(&m)?;
                        Ok(json!({
                            "side": "downset",
                            "box": pj::box_to_json(r.grid()),
                            "terms": r.terms.iter().map(|t| t.labels.iter().map(|l| json!({"b": l.b, "tau": l.tau.to_one_based()})).collect::<Vec<_>>()).collect::<Vec<_>>(),
                            "differentials": r.differentials.iter().map(pj::injective_labels_matrix_to_json).collect::<Vec<_>>(),
                        }))
                    }
                }
            }
        },
        Command::Fringe { input, dim } => {
            let v = read_json(input)?;
            if v.get("simplices").is_some() {
                let f = pj::filtration_from_json(&v)?;
                let m = persistent_homology(&f, *dim, cli.field)?.module;
                return fringe_box(&with_margin(m, cli.box_margin)?);
            }
            match encoding_or_module(&v)? {
                Either::Encoding(e) => pj::region_matrix_to_json(&fringe_presentation(&e)?.matrix, None),
                Either::Box(m) => fringe_box(&with_margin(m, cli.box_margin)?),
            }
        }
        Command::Primary { input, prune } => {
            let m = pj::findet_module_from_json(&read_json(input)?, "$")?;
            let d = primary_decomposition(&with_margin(m, cli.box_margin)?, *prune)?;
            Ok(pj::decomposition_to_json(&d))
        }
        Command::Hom {
            upset,
            downset,
            source,
            target,
        } => {
            if let (Some(u), Some(d)) = (upset, downset) {
                let u = pj::region_file_from_json(&read_json(u)?)?;
                let d = pj::region_file_from_json(&read_json(d)?)?;
                let dim = hom_indicator(&u, &d)?.len();
                return Ok(json!(dim));
            }
            if let (Some(s), Some(t)) = (source, target) {
                let s = pj::encoded_module_from_json(&read_json(s)?, "$")?;
                let t = pj::encoded_module_from_json(&read_json(t)?, "$")?;
                return Ok(json!(oracle_hom(&s, &t, DEFAULT_HOM_CAP)?));
            }
            Err(Error::Invalid("hom needs --upset/--downset or --source/--target".into()))
        }
        Command::Verify { input } => {
            let v = read_json(input)?;
            let what = if v.get("simplices").is_some() {
                pj::filtration_from_json(&v)?.validate()?;
                "filtration"
            } else if v.get("pi").is_some() {
                pj::encoding_from_json(&v)?;
                "encoding"
            } else if v.get("comps").is_some() {
                pj::morphism_from_json(&v, "$")?;
                "morphism"
            } else if v.get("members").is_some() {
                pj::region_file_from_json(&v)?;
                "region"
            } else if v.get("runs").is_some() {
                pj::findet_region_from_json(&v, "$")?;
                "region"
            } else {
                match pj::any_module_from_json(&v, "$")? {
                    AnyModule::Encoded(_) => "module",
                    AnyModule::Box(_) => "box module",
                }
            };
            Ok(json!({ "valid": true, "kind": what }))
        }
    }
}

fn fringe_box(m: &FinDetModule) -> Result<Value, Error> {
    pj::region_matrix_to_json(&fringe_presentation_box(m)?.matrix, Some(m.grid()))
}

fn side_name(s: Side) -> &'static str {
    match s {
        Side::Upset => "upset",
        Side::Downset => "downset",
    }
}

fn parse_partition(m: &EncodedModule, v: &Value) -> Result<Vec<fixedbitset::FixedBitSet>, Error> {
    let blocks = v
        .as_array()
        .ok_or_else(|| Error::Parse("$.partition: expected an array of id lists".into()))?;
    let poset: &Arc<_> = m.poset();
    blocks
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let ids: Vec<String> = serde_json::from_value(b.clone())
                .map_err(|e| Error::Parse(format!("$.partition[{k}]: {e}")))?;
            poset.set_from_ids(&ids)
        })
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(v) => {
            let text = pj::to_text(&v);
            match &cli.output {
                Some(p) => {
                    if let Err(e) = fs::write(p, text) {
                        eprintln!("error: {}: {e}", p.display());
                        return ExitCode::from(1);
                    }
                }
                None => print!("{text}"),
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
