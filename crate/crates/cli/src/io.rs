//! Text formats: algebra names, JSON-lines telemetry, CSV plot data and
//! field snapshots.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use palatini_core::algebra::{AlgebraKind, LieAlgebraSpec};
use palatini_core::dynamics::{EvolutionRecord, ResidualNorms};
use palatini_core::lattice::LatticeField;
use palatini_core::mesh::CollarMesh;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// `su2`, `abelian:N` or `lorentz:D` (the Lorentz algebra of `1 + D` dimensions).
pub fn parse_algebra(s: &str) -> Result<AlgebraKind, String> {
    let s = s.trim();
    let (name, arg) = match s.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (s, None),
    };
    let num = |a: Option<&str>| -> Result<usize, String> {
        let a = a.ok_or_else(|| format!("`{name}` needs a dimension, e.g. `{name}:2`"))?;
        a.parse::<usize>().map_err(|_| format!("bad dimension `{a}`"))
    };
    match name.to_ascii_lowercase().as_str() {
        "su2" if arg.is_none() => Ok(AlgebraKind::Su2),
        "abelian" => Ok(AlgebraKind::Abelian(num(arg)?)),
        "lorentz" => Ok(AlgebraKind::Lorentz(num(arg)?)),
        _ => Err(format!("unknown algebra `{s}` (expected su2, abelian:N or lorentz:D)")),
    }
}

pub fn format_algebra(kind: AlgebraKind) -> String {
    match kind {
        AlgebraKind::Su2 => "su2".into(),
        AlgebraKind::Abelian(n) => format!("abelian:{n}"),
        AlgebraKind::Lorentz(d) => format!("lorentz:{d}"),
    }
}

fn num(v: f64) -> String {
    // shortest round-trip form, without negative zero
    if v == 0.0 { "0".into() } else { format!("{v}") }
}

/// Dense text table of an algebra: `dim * dim` structure rows, row `(a, b)`
/// listing `eps^a_bc` over `c`, then the pairing matrix.
pub fn write_algebra_spec(spec: &LieAlgebraSpec) -> String {
    let n = spec.dim;
    let mut out = String::from("# lie algebra\n");
    writeln!(out, "kind {}", format_algebra(spec.kind)).unwrap();
    writeln!(out, "dim {n}").unwrap();
    writeln!(out, "labels {}", spec.labels.join(" ")).unwrap();
    out.push_str("structure\n");
    for a in 0..n {
        for b in 0..n {
            let row: Vec<String> = (0..n).map(|c| num(spec.eps(a, b, c))).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out.push_str("pairing\n");
    for a in 0..n {
        let row: Vec<String> = (0..n).map(|b| num(spec.pairing[(a, b)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraTable {
    pub kind: AlgebraKind,
    pub dim: usize,
    pub labels: Vec<String>,
    /// `eps^a_bc` at `a * dim * dim + b * dim + c`.
    pub structure: Vec<f64>,
    pub pairing: DMatrix<f64>,
}

fn table_err(m: &str) -> CliError {
    CliError::Format(format!("algebra table: {m}"))
}

fn keyed<'a>(lines: &mut impl Iterator<Item = &'a str>, key: &str) -> Result<&'a str, CliError> {
    let l = lines.next().ok_or_else(|| table_err(&format!("missing `{key}`")))?;
    l.strip_prefix(key).map(str::trim).ok_or_else(|| table_err(&format!("expected `{key}`")))
}

fn dense_rows<'a>(lines: &mut impl Iterator<Item = &'a str>, count: usize, width: usize) -> Result<Vec<f64>, CliError> {
    let mut v = Vec::with_capacity(count * width);
    for _ in 0..count {
        let l = lines.next().ok_or_else(|| table_err("truncated table"))?;
        let row: Vec<f64> = l.split_whitespace().map(|x| x.parse()).collect::<Result<_, _>>().map_err(|_| table_err("bad value"))?;
        if row.len() != width {
            return Err(table_err("row length does not match dim"));
        }
        v.extend(row);
    }
    Ok(v)
}

pub fn read_algebra_spec(text: &str) -> Result<AlgebraTable, CliError> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let kind = parse_algebra(keyed(&mut lines, "kind")?).map_err(|m| table_err(&m))?;
    let dim: usize = keyed(&mut lines, "dim")?.parse().map_err(|_| table_err("bad dim"))?;
    let labels = keyed(&mut lines, "labels")?.split_whitespace().map(str::to_string).collect();
    keyed(&mut lines, "structure")?;
    let structure = dense_rows(&mut lines, dim * dim, dim)?;
    keyed(&mut lines, "pairing")?;
    let pairing = DMatrix::from_row_slice(dim, dim, &dense_rows(&mut lines, dim, dim)?);
    Ok(AlgebraTable { kind, dim, labels, structure, pairing })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualEntry {
    pub gauss: f64,
    pub flatness: f64,
    pub beta: f64,
    pub p: f64,
    pub torsion0: f64,
    pub torsion1: f64,
}

impl From<&ResidualNorms> for ResidualEntry {
    fn from(r: &ResidualNorms) -> Self {
        ResidualEntry { gauss: r.gauss, flatness: r.flatness, beta: r.beta, p: r.p, torsion0: r.torsion0, torsion1: r.torsion1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEntry {
    pub a: f64,
    pub p: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub t: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub residuals: ResidualEntry,
    pub norms: NormEntry,
}

impl From<&EvolutionRecord> for Telemetry {
    fn from(r: &EvolutionRecord) -> Self {
        Telemetry {
            t: r.t,
            h: r.hamiltonian,
            residuals: (&r.residuals).into(),
            norms: NormEntry { a: r.norms.a, p: r.norms.p, beta: r.norms.beta },
        }
    }
}

/// One JSON object per line.
pub fn telemetry_lines<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for it in items {
        out.push_str(&serde_json::to_string(it).expect("telemetry is plain data"));
        out.push('\n');
    }
    out
}

pub const CSV_HEADER: &str = "t,H,gauss,flatness,beta,p,torsion0,torsion1";

/// CSV of time, Hamiltonian and the six residual norms, 17 significant digits.
pub fn emit_plotdata(records: &[EvolutionRecord]) -> Result<String, CliError> {
    if records.is_empty() {
        return Err(CliError::Format("no records to write".into()));
    }
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let row: Vec<String> = [r.t, r.hamiltonian].into_iter().chain(r.residuals.values()).map(|v| format!("{v:.16e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_plotdata(text: &str) -> Result<Vec<[f64; 8]>, CliError> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(CliError::Format("missing CSV header".into()));
    }
    lines
        .map(|l| {
            let vals: Vec<f64> = l
                .split(',')
                .map(|v| v.parse::<f64>().map_err(|_| CliError::Format(format!("bad number `{v}`"))))
                .collect::<Result<_, _>>()?;
            vals.try_into().map_err(|_| CliError::Format(format!("expected 8 columns: `{l}`")))
        })
        .collect()
}

/// Named fields with a shape header. Layout is site-major, then component,
/// then algebra index; one line per site.
pub fn write_snapshot(mesh: &CollarMesh, algebra: AlgebraKind, algebra_dim: usize, fields: &[(&str, &LatticeField)]) -> String {
    let mut out = String::from("# palatini field snapshot v1\n");
    let dims: Vec<String> = mesh.sites_per_dim.iter().map(|n| n.to_string()).collect();
    writeln!(out, "mesh {}", dims.join(" ")).unwrap();
    writeln!(out, "algebra {} {algebra_dim}", format_algebra(algebra)).unwrap();
    out.push_str("layout site component index\n");
    for (name, f) in fields {
        writeln!(out, "field {name} {} {} {}", f.sites, f.comps, f.dim).unwrap();
        for s in 0..f.sites {
            let row: Vec<String> = (0..f.comps).flat_map(|c| f.at(s, c).iter().map(|v| format!("{v:.16e}"))).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub sites_per_dim: Vec<usize>,
    pub algebra: AlgebraKind,
    pub algebra_dim: usize,
    pub fields: Vec<(String, LatticeField)>,
}

pub fn read_snapshot(text: &str) -> Result<Snapshot, CliError> {
    let bad = |m: &str| CliError::Format(format!("snapshot: {m}"));
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let mesh = lines.next().and_then(|l| l.strip_prefix("mesh ")).ok_or_else(|| bad("missing mesh line"))?;
    let sites_per_dim = mesh.split_whitespace().map(|v| v.parse::<usize>()).collect::<Result<Vec<_>, _>>().map_err(|_| bad("bad mesh line"))?;
    let alg = lines.next().and_then(|l| l.strip_prefix("algebra ")).ok_or_else(|| bad("missing algebra line"))?;
    let (name, adim) = alg.split_once(' ').ok_or_else(|| bad("algebra line needs a dimension"))?;
    let algebra = parse_algebra(name).map_err(|m| bad(&m))?;
    let algebra_dim = adim.trim().parse().map_err(|_| bad("bad algebra dimension"))?;
    if lines.next() != Some("layout site component index") {
        return Err(bad("unknown layout"));
    }
    let mut fields = Vec::new();
    while let Some(head) = lines.next() {
        let parts: Vec<&str> = head.split_whitespace().collect();
        if parts.len() != 5 || parts[0] != "field" {
            return Err(bad("bad field header"));
        }
        let shape: Vec<usize> = parts[2..].iter().map(|v| v.parse()).collect::<Result<_, _>>().map_err(|_| bad("bad field shape"))?;
        let (sites, comps, dim) = (shape[0], shape[1], shape[2]);
        let mut data = Vec::with_capacity(sites * comps * dim);
        for _ in 0..sites {
            let row = lines.next().ok_or_else(|| bad("truncated field"))?;
            for v in row.split_whitespace() {
                data.push(v.parse::<f64>().map_err(|_| bad("bad value"))?);
            }
        }
        if data.len() != sites * comps * dim {
            return Err(bad("field size does not match its header"));
        }
        fields.push((parts[1].to_string(), LatticeField { sites, comps, dim, data }));
    }
    Ok(Snapshot { sites_per_dim, algebra, algebra_dim, fields })
}

#[cfg(test)]
mod tests {
    use super::*;
    use palatini_core::algebra::build_algebra;
    use palatini_core::dynamics::{evolve, flat_vacuum};

    #[test]
    fn algebra_names_round_trip() {
        for k in [AlgebraKind::Su2, AlgebraKind::Abelian(3), AlgebraKind::Lorentz(2)] {
            assert_eq!(parse_algebra(&format_algebra(k)).unwrap(), k);
        }
        assert!(parse_algebra("so3").is_err());
        assert!(parse_algebra("abelian").is_err());
        assert!(parse_algebra("lorentz:x").is_err());
    }

    fn records(n: usize) -> Vec<EvolutionRecord> {
        let mesh = CollarMesh::uniform(1, 4, 0.5, 2, 0.1).unwrap();
        let g = build_algebra(AlgebraKind::Lorentz(1)).unwrap();
        let mut st = flat_vacuum(&mesh, &g).unwrap();
        st.p.data[0] = 0.1 + 1.0 / 3.0;
        evolve(&mesh, &g, &st, n - 1, 0.01, None).unwrap()
    }

    #[test]
    fn csv_shapes_and_round_trip() {
        assert!(emit_plotdata(&[]).is_err());
        let one = emit_plotdata(&records(1)).unwrap();
        assert_eq!(one.lines().count(), 2);
        let recs = records(100);
        let text = emit_plotdata(&recs).unwrap();
        assert_eq!(text.lines().count(), 101);
        let rows = parse_plotdata(&text).unwrap();
        assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
        for (row, r) in rows.iter().zip(&recs) {
            assert_eq!(row[0], r.t);
            assert_eq!(row[1], r.hamiltonian);
            assert_eq!(&row[2..], &r.residuals.values());
        }
    }

    #[test]
    fn telemetry_has_the_documented_keys() {
        let recs = records(2);
        let text = telemetry_lines(&recs.iter().map(Telemetry::from).collect::<Vec<_>>());
        let v: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        for k in ["t", "H", "residuals", "norms"] {
            assert!(v.get(k).is_some(), "{k}");
        }
        for k in ResidualNorms::NAMES {
            assert!(v["residuals"].get(k).is_some(), "{k}");
        }
        let back: Telemetry = serde_json::from_str(text.lines().nth(1).unwrap()).unwrap();
        assert_eq!(back, Telemetry::from(&recs[1]));
    }

    #[test]
    fn algebra_tables_round_trip() {
        for k in [AlgebraKind::Su2, AlgebraKind::Abelian(2), AlgebraKind::Lorentz(1), AlgebraKind::Lorentz(3)] {
            let g = build_algebra(k).unwrap();
            let t = read_algebra_spec(&write_algebra_spec(&g)).unwrap();
            assert_eq!((t.kind, t.dim, &t.labels), (k, g.dim, &g.labels));
            assert_eq!(t.structure, g.structure);
            assert_eq!(t.pairing, g.pairing);
        }
        let text = write_algebra_spec(&build_algebra(AlgebraKind::Su2).unwrap());
        assert!(read_algebra_spec(&text.replacen("dim 3", "dim 2", 1)).is_err());
    }

    #[test]
    fn snapshot_round_trip() {
        let mesh = CollarMesh::uniform(2, 3, 0.5, 2, 0.1).unwrap();
        let f = LatticeField::from_fn(9, 2, 3, |s, c, a| (s * 7 + c * 3 + a) as f64 / 7.0 - 1e-300);
        let g = LatticeField::from_fn(9, 1, 3, |s, _, a| -((s + a) as f64).sqrt());
        let text = write_snapshot(&mesh, AlgebraKind::Su2, 3, &[("a", &f), ("a0", &g)]);
        assert!(text.contains("field a 9 2 3"));
        let snap = read_snapshot(&text).unwrap();
        assert_eq!(snap.sites_per_dim, vec![3, 3]);
        assert_eq!((snap.algebra, snap.algebra_dim), (AlgebraKind::Su2, 3));
        assert_eq!(snap.fields, vec![("a".to_string(), f), ("a0".to_string(), g)]);
        assert!(read_snapshot(&text.replace("field a0 9 1 3", "field a0 9 2 3")).is_err());
    }
}
