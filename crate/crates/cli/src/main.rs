//! Command-line frontend: cusp expansions, Weil pairings, de Rham reports,
//! verification batches and golden-file comparisons.
//!
//! Exit codes: 0 all checks pass, 1 check failure, 2 usage error,
//! 3 resource cap (extension-degree or precision budget).

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use taumod::derham::{derham_pairing, ks_autodual, DRElement, Derivation};
use taumod::drinfeld::{h_structure_find_field, DrinfeldModule};
use taumod::error::Error;
use taumod::field::{FieldElem, Tower};
use taumod::json as enc;
use taumod::modn::ModElem;
use taumod::motive::WeilContext;
use taumod::poly::Poly;
use taumod::ring::Ring;
use taumod::td::{cusp_data, TdEngine};
use taumod::verify::{run_verification, CheckStatus, VerifyGrid};

#[derive(Parser)]
#[command(
    name = "taumod",
    version,
    about = "exact arithmetic for rank-2 Drinfeld modules: cusp expansions, Weil pairings, de Rham data and verification batches"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct FieldArgs {
    /// Size of the constant field F_q (a prime power p^e with p <= 7, e <= 4).
    #[arg(long, default_value_t = 2)]
    q: u64,
    /// Override the characteristic (else inferred from q).
    #[arg(long)]
    p: Option<u64>,
    /// Override the modulus of F_q over F_p (comma-separated, low first).
    #[arg(long)]
    modulus: Option<String>,
}

impl FieldArgs {
    fn tower(&self) -> Result<Arc<Tower>, Error> {
        let (p, e) = match self.p {
            Some(p) => infer_e(p, self.q)?,
            None => infer_pe(self.q)?,
        };
        let modulus = match &self.modulus {
            None => None,
            Some(s) => Some(parse_u64_list(s)?),
        };
        Tower::fq(p, e, modulus)
    }
}

fn infer_pe(q: u64) -> Result<(u64, usize), Error> {
    for p in [2u64, 3, 5, 7] {
        if let Ok(pe) = infer_e(p, q) {
            return Ok(pe);
        }
    }
    Err(Error::Invalid(format!(
        "q = {q} is not a supported prime power"
    )))
}

fn infer_e(p: u64, q: u64) -> Result<(u64, usize), Error> {
    let mut e = 0usize;
    let mut v = q;
    while v > 1 && v.is_multiple_of(p) {
        v /= p;
        e += 1;
    }
    if v != 1 || e == 0 {
        return Err(Error::Invalid(format!("q = {q} is not a power of p = {p}")));
    }
    Ok((p, e))
}

fn parse_u64_list(s: &str) -> Result<Vec<u64>, Error> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<u64>()
                .map_err(|_| Error::Invalid(format!("bad integer list entry {x:?}")))
        })
        .collect()
}

#[derive(Subcommand)]
enum Cmd {
    /// Emit the Tate-Drinfeld cusp coefficients {a1, a2, bh, l} as JSON.
    TdCoeffs {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, default_value_t = 32)]
        prec: i64,
    },
    /// Compute the h-structure Weil pairing on E[n] and the full basis table.
    Weil {
        #[command(flatten)]
        field: FieldArgs,
        /// Modulus n as comma-separated F_q coefficient indices, low first
        /// (e.g. 0,1 is t; 1,1,1 is t^2+t+1).
        #[arg(long, default_value = "0,1")]
        n: String,
        /// Field tower degree m: the module lives over F_(q^m).
        #[arg(long, default_value_t = 1)]
        ext: usize,
        /// theta as comma-separated F_p coordinates of the base field
        /// element; defaults to the first module admitting an h-structure.
        #[arg(long)]
        theta: Option<String>,
        /// alpha_1 coordinates (same encoding as theta).
        #[arg(long)]
        a1: Option<String>,
        /// alpha_2 coordinates (same encoding as theta).
        #[arg(long)]
        a2: Option<String>,
        /// P as coordinates over A/(n) in the computed torsion basis:
        /// two comma-lists of F_q coefficient indices joined by ';'.
        #[arg(long, default_value = "1;0")]
        pc: String,
        /// Q in the same encoding; defaults to the second basis vector.
        #[arg(long, default_value = "0;1")]
        qc: String,
        /// Replace H by the torsor action [c](H) = c^(-1) H (c an F_q index).
        #[arg(long)]
        scale_h: Option<u64>,
        /// Extension-degree cap for torsion and fixed-point searches.
        #[arg(long, default_value_t = 12)]
        maxdeg: usize,
    },
    /// Emit the de Rham verification report at the cusp: Gram matrix,
    /// Kodaira-Spencer coordinate, membership assertions.
    Derham {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, default_value_t = 32)]
        prec: i64,
    },
    /// Run verification suites over a parameter grid and print the report.
    Verify {
        /// Suites: algebra, ore, drinfeld, motive, td, derham, or all.
        #[arg(default_value = "all")]
        suite: Vec<String>,
        /// Constant-field sizes to verify over (repeatable).
        #[arg(long = "q")]
        qs: Vec<u64>,
        #[arg(long, default_value_t = 32)]
        prec: i64,
        /// Optional explicit modulus n (comma-separated coefficient indices;
        /// repeatable). Defaults to the per-q grid.
        #[arg(long = "n")]
        moduli: Vec<String>,
        #[arg(long, default_value_t = 17)]
        seed: u64,
        /// Modules with h-structure demanded by the autoduality batch.
        #[arg(long, default_value_t = 200)]
        autoduality_samples: usize,
        /// Instances for the structural double-dual batch.
        #[arg(long, default_value_t = 500)]
        structural_samples: usize,
        #[arg(long, default_value_t = 12)]
        maxdeg: usize,
        /// Directory of golden files; enables the golden comparisons.
        /// Overridden by the TAUMOD_GOLDEN_DIR environment variable.
        #[arg(long)]
        golden_dir: Option<PathBuf>,
    },
}

fn parse_field_elem(tower: &Arc<Tower>, level: usize, s: &str) -> Result<FieldElem, Error> {
    let coords = parse_u64_list(s)?;
    let dim = tower.flat_dim(level);
    if coords.len() > dim {
        return Err(Error::Invalid(format!(
            "too many coordinates: got {}, field has F_p-dimension {dim}",
            coords.len()
        )));
    }
    let mut z = tower.zero(level);
    for (i, c) in coords.iter().enumerate() {
        z.data[i] = c % tower.p;
    }
    Ok(z)
}

fn parse_modn_pair(n: &Poly, s: &str) -> Result<(ModElem, ModElem), Error> {
    let parts: Vec<&str> = s.split(';').collect();
    if parts.len() != 2 {
        return Err(Error::Invalid(
            "point coordinates need two ';'-separated lists".into(),
        ));
    }
    let parse_one = |txt: &str| -> Result<ModElem, Error> {
        let idxs = parse_u64_list(txt)?;
        ModElem::new(Poly::from_indices(&n.tower, &idxs), n.clone())
    };
    Ok((parse_one(parts[0])?, parse_one(parts[1])?))
}

fn cmd_td_coeffs(field: &FieldArgs, prec: i64) -> Result<(), Error> {
    let tower = field.tower()?;
    let engine = TdEngine::new(&tower, prec, 2)?;
    let data = cusp_data(&engine)?;
    let doc = enc::td_coeffs_doc(tower.q(), prec, &tower, &data);
    print!("{}", enc::to_canonical_string(&doc));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_weil(
    field: &FieldArgs,
    n_str: &str,
    ext: usize,
    theta: &Option<String>,
    a1: &Option<String>,
    a2: &Option<String>,
    pc: &str,
    qc: &str,
    scale_h: Option<u64>,
    maxdeg: usize,
) -> Result<bool, Error> {
    let base = field.tower()?;
    let n = Poly::from_indices(&base, &parse_u64_list(n_str)?);
    let tower = if ext > 1 {
        base.extend_deterministic(ext)
    } else {
        base.clone()
    };
    let level = tower.top_level();

    // The module: explicit coefficients, or the first with an h-structure.
    let module = match (theta, a1, a2) {
        (Some(th), Some(c1), Some(c2)) => DrinfeldModule::new(
            parse_field_elem(&tower, level, th)?,
            vec![
                parse_field_elem(&tower, level, c1)?,
                parse_field_elem(&tower, level, c2)?,
            ],
        )?,
        (None, None, None) => {
            let size = tower.size(level);
            let mut found = None;
            'search: for theta_idx in 0..size {
                for a1_idx in 0..size {
                    for a2_idx in 1..size {
                        let e = taumod::drinfeld::module_from_indices(
                            &tower, level, theta_idx, a1_idx, a2_idx,
                        )?;
                        if n.eval(&e.theta).is_zero() {
                            continue;
                        }
                        if h_structure_find_field(&e)?.is_some() {
                            found = Some(e);
                            break 'search;
                        }
                    }
                }
            }
            found.ok_or_else(|| Error::Invalid("no module with an h-structure found".into()))?
        }
        _ => {
            return Err(Error::Invalid(
                "supply all of --theta/--a1/--a2 or none".into(),
            ))
        }
    };

    let mut h = h_structure_find_field(&module)?
        .ok_or_else(|| Error::Invalid("the module admits no h-structure over this field".into()))?;
    if let Some(c_idx) = scale_h {
        let c = tower
            .el_from_index(1, c_idx % tower.q())
            .lift_to(&tower, level);
        h = h.act(&c)?;
    }
    let ctx = WeilContext::new(h, &n, maxdeg)?;
    let (pa, pb) = parse_modn_pair(&n, pc)?;
    let (qa, qb) = parse_modn_pair(&n, qc)?;
    let from_coords = |a: &ModElem, b: &ModElem| {
        ctx.tors_e
            .act_mod(a, &ctx.tors_e.basis[0])
            .add(&ctx.tors_e.act_mod(b, &ctx.tors_e.basis[1]))
    };
    let p_point = from_coords(&pa, &pb);
    let q_point = from_coords(&qa, &qb);
    let beta = ctx.pair_coord(&p_point, &q_point)?;
    let value = ctx.pair(&p_point, &q_point)?;
    let b01 = ctx.pair_coord(&ctx.tors_e.basis[0], &ctx.tors_e.basis[1])?;
    let table = json!({
        "b0^b0": enc::modelem(&ctx.pair_coord(&ctx.tors_e.basis[0], &ctx.tors_e.basis[0])?),
        "b0^b1": enc::modelem(&b01),
        "b1^b0": enc::modelem(&ctx.pair_coord(&ctx.tors_e.basis[1], &ctx.tors_e.basis[0])?),
        "b1^b1": enc::modelem(&ctx.pair_coord(&ctx.tors_e.basis[1], &ctx.tors_e.basis[1])?),
    });
    let doc = json!({
        "schema": enc::SCHEMA_VERSION,
        "module": enc::dm_field(&module),
        "n": enc::poly(&n),
        "ext_degree": ctx.tors_e.ext_degree,
        "ext_field": enc::tower_desc(&ctx.tors_e.tower),
        "torsion_points": ctx.tors_e.points.len(),
        "torsion_basis": [
            enc::fq_elem(&ctx.tors_e.basis[0]),
            enc::fq_elem(&ctx.tors_e.basis[1]),
        ],
        "carlitz_generator": enc::fq_elem(&ctx.lambda0),
        "pairing_coordinate": enc::modelem(&beta),
        "pairing_point": enc::fq_elem(&value),
        "generates": beta.is_unit(),
        "basis_table": table,
        "basis_pair_generates": b01.is_unit(),
    });
    print!("{}", enc::to_canonical_string(&doc));
    Ok(b01.is_unit())
}

fn cmd_derham(field: &FieldArgs, prec: i64) -> Result<bool, Error> {
    let tower = field.tower()?;
    let q = tower.q() as i64;
    let engine = TdEngine::new(&tower, prec, 2)?;
    let data = cusp_data(&engine)?;
    let h = &data.h_structure;
    let dx = DRElement::new(data.dx.0.clone(), data.dx.1.clone());
    let eta = DRElement::new(data.eta.0.clone(), data.eta.1.clone());
    let pair = derham_pairing(h, &dx, &eta)?;
    let ksv = ks_autodual(h, &Derivation::d_dx())?;
    let unit_head = |s: &taumod::td::ASeries| {
        s.leading()
            .map(|c| c.is_unit() && c.degree() == Some(0))
            .unwrap_or(false)
    };
    let checks = [
        (
            "pairing <dX,eta> is a unit of A[[x]]",
            pair.valuation() == Some(0) && unit_head(&pair),
        ),
        (
            "KS autodual coordinate has valuation -2 with unit tail",
            ksv.valuation() == Some(-2) && unit_head(&ksv),
        ),
        (
            "a1 in 1 + x^(q-1) A[[x^(q-1)]]",
            data.a1.digit(0) == Poly::one(&tower),
        ),
        (
            "a2 in x^(q-1) A[[x^(q-1)]]^x",
            data.a2.valuation() == Some(q - 1),
        ),
        (
            "b_h^(q-1) = -a2",
            data.bh.pow((q - 1) as u64).agrees_with(&data.a2.neg()),
        ),
        ("l has valuation -1", data.l.valuation() == Some(-1)),
    ];
    let all_ok = checks.iter().all(|(_, ok)| *ok);
    let cut = |s: &taumod::td::ASeries| enc::series_poly(&s.truncated(prec.min(s.prec)));
    let doc = json!({
        "schema": enc::SCHEMA_VERSION,
        "q": tower.q(),
        "prec": prec,
        "gram": {
            "dx_dx": cut(&derham_pairing(h, &dx, &dx)?),
            "dx_eta": cut(&pair),
            "eta_dx": cut(&derham_pairing(h, &eta, &dx)?),
            "eta_eta": cut(&derham_pairing(h, &eta, &eta)?),
        },
        "ks": cut(&data.l),
        "ks_autodual": cut(&ksv),
        "checks": checks
            .iter()
            .map(|(name, ok)| json!({ "check": name, "status": if *ok { "pass" } else { "fail" } }))
            .collect::<Vec<_>>(),
    });
    print!("{}", enc::to_canonical_string(&doc));
    Ok(all_ok)
}

fn run() -> Result<ExitCode, Error> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::TdCoeffs { field, prec } => {
            cmd_td_coeffs(&field, prec)?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Weil {
            field,
            n,
            ext,
            theta,
            a1,
            a2,
            pc,
            qc,
            scale_h,
            maxdeg,
        } => {
            let ok = cmd_weil(&field, &n, ext, &theta, &a1, &a2, &pc, &qc, scale_h, maxdeg)?;
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Cmd::Derham { field, prec } => {
            let ok = cmd_derham(&field, prec)?;
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Cmd::Verify {
            suite,
            qs,
            prec,
            moduli,
            seed,
            autoduality_samples,
            structural_samples,
            maxdeg,
            golden_dir,
        } => {
            for s in &suite {
                if s != "all" && !taumod::verify::SUITES.contains(&s.as_str()) {
                    return Err(Error::Invalid(format!(
                        "unknown suite {s:?}: expected all, {}",
                        taumod::verify::SUITES.join(", ")
                    )));
                }
            }
            let mut grid = VerifyGrid {
                prec,
                seed,
                autoduality_samples,
                structural_samples,
                maxdeg,
                ..VerifyGrid::default()
            };
            if !qs.is_empty() {
                grid.qs = qs;
            }
            grid.moduli = moduli
                .iter()
                .map(|s| parse_u64_list(s))
                .collect::<Result<Vec<_>, _>>()?;
            let golden = std::env::var_os("TAUMOD_GOLDEN_DIR")
                .map(PathBuf::from)
                .or(golden_dir);
            let report = run_verification(&suite, &grid, golden.as_deref())?;
            eprintln!(
                "verified {} checks in {} ms",
                report.checks.len(),
                report.elapsed_ms
            );
            print!("{}", report.to_json_string());
            if report.checks.iter().any(|c| c.status == CheckStatus::Fail) {
                Ok(ExitCode::from(1))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                // Malformed requests are usage errors, like clap's own.
                Error::Invalid(_)
                | Error::NotPrime(_)
                | Error::NoDefaultModulus { .. }
                | Error::ReducibleModulus => ExitCode::from(2),
                Error::ResourceCap { .. }
                | Error::MaxDegreeExceeded { .. }
                | Error::PrecisionUnderflow => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}
