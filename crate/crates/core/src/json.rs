//! The versioned JSON value encoding shared by the CLI and the golden files.
//! serde_json maps are ordered (BTree) so identical values serialize to
//! identical bytes on every platform.

use serde_json::{json, Map, Value};

use crate::drinfeld::DrinfeldModule;
use crate::field::{FieldElem, Tower};
use crate::modn::ModElem;
use crate::ore::OrePoly;
use crate::poly::Poly;
use crate::series::TruncSeries;
use crate::td::CuspData;

pub const SCHEMA_VERSION: u64 = 1;

/// Field elements are flat coefficient vectors over F_p; the tower that
/// interprets them is emitted once per document.
pub fn fq_elem(e: &FieldElem) -> Value {
    Value::Array(e.data.iter().map(|&c| json!(c)).collect())
}

pub fn tower_desc(t: &Tower) -> Value {
    let levels: Vec<Value> = t
        .levels()
        .iter()
        .map(|l| {
            json!({
                "degree": l.degree,
                "modulus": l.modulus,
            })
        })
        .collect();
    json!({ "p": t.p, "levels": levels })
}

pub fn poly(p: &Poly) -> Value {
    let coeffs: Vec<Value> = (0..p.coeff_count()).map(|i| fq_elem(&p.coeff(i))).collect();
    let mut m = Map::new();
    m.insert("t".into(), Value::Array(coeffs));
    Value::Object(m)
}

pub fn modelem(e: &ModElem) -> Value {
    json!({ "mod": poly(&e.modulus), "value": poly(&e.lift()) })
}

pub fn series_poly(s: &TruncSeries<Poly>) -> Value {
    let coeffs: Vec<Value> = s.coeffs.iter().map(poly).collect();
    json!({
        "var": s.var.as_str(),
        "val": s.val,
        "prec": s.prec,
        "coeffs": coeffs,
    })
}

pub fn ore_series(f: &OrePoly<TruncSeries<Poly>>) -> Value {
    let coeffs: Vec<Value> = f.coeffs.iter().map(series_poly).collect();
    json!({ "tau": coeffs })
}

pub fn ore_field(f: &OrePoly<FieldElem>) -> Value {
    let coeffs: Vec<Value> = f.coeffs.iter().map(fq_elem).collect();
    json!({ "tau": coeffs })
}

pub fn dm_field(e: &DrinfeldModule<FieldElem>) -> Value {
    json!({
        "base": tower_desc(&e.theta.tower),
        "theta": fq_elem(&e.theta),
        "rank": e.rank,
        "phi_t": ore_field(&e.phi_t),
    })
}

/// The `td-coeffs` document: a_1, a_2, b_h and l at exactly the requested
/// precision (working guard digits are cut so reruns are byte-stable).
pub fn td_coeffs_doc(q: u64, prec: i64, tower: &Tower, data: &CuspData) -> Value {
    let cut = |s: &TruncSeries<Poly>| series_poly(&s.truncated(prec));
    json!({
        "schema": SCHEMA_VERSION,
        "q": q,
        "prec": prec,
        "field": tower_desc(tower),
        "a1": cut(&data.a1),
        "a2": cut(&data.a2),
        "bh": cut(&data.bh),
        "l": cut(&data.l),
    })
}

/// Canonical single-line encoding with a trailing newline: the byte format
/// of golden files and machine-facing documents.
pub fn to_canonical_string(v: &Value) -> String {
    let mut s = serde_json::to_string(v).expect("serializable");
    s.push('\n');
    s
}

pub fn to_pretty_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}
