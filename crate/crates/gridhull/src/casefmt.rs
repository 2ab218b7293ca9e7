//! File formats: a structured-matrix case-file dialect for network import,
//! a native network JSON schema, aggregation configs, and polytope /
//! polytope-union / sampled-set JSON for results.
//!
//! Case-file essentials: statements `mpc.baseMVA = <num>;` and
//! `mpc.<table> = [ <row>; <row>; ... ];`, `%` comments to end of line,
//! whitespace-insensitive, rows separated by `;` or newline. Bus demand is
//! bus column 3 (Pd, MW); per-bus generation capacity sums gen column 9
//! (Pmax) over in-service units (column 8 > 0); branches take endpoints
//! from columns 1–2, susceptance as the reciprocal of column 4 (reactance),
//! and the limit from column 6 (rateA), with 0 meaning unlimited — mapped
//! to the bounded sentinel so projections stay bounded. Out-of-service
//! branches (column 11 ≤ 0) are dropped. Generator lower bounds are fixed
//! at zero; a positive Pmin only earns a warning.

use std::collections::HashMap;

use crate::capacity::{Corridor, NtcSpec};
use crate::netmodel::{Bus, Line, NetworkModel, UNLIMITED_MW};
use crate::polytope::{PolyUnion, Polyhedron};
use crate::project::{AggregationMap, ApproxSet, ProjError};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FmtError {
    #[error("line {0}: {1}")]
    Case(usize, String),
    #[error("missing table mpc.{0}")]
    MissingTable(&'static str),
    #[error("JSON: {0}")]
    Json(String),
    #[error("schema: {0}")]
    Schema(String),
    #[error(transparent)]
    Proj(#[from] ProjError),
}

impl From<serde_json::Error> for FmtError {
    fn from(e: serde_json::Error) -> Self {
        FmtError::Json(e.to_string())
    }
}

// ---------------------------------------------------------------------------
// Case files
// ---------------------------------------------------------------------------

/// One numeric table with the source line of each row, for diagnostics.
#[derive(Debug, Clone, Default)]
pub struct CaseTable {
    pub rows: Vec<Vec<f64>>,
    pub line_of: Vec<usize>,
}

/// Raw parsed case file: numeric tables plus the MVA base.
#[derive(Debug, Clone)]
pub struct CaseFile {
    pub base_mva: f64,
    pub bus: CaseTable,
    pub gen: CaseTable,
    pub branch: CaseTable,
}

/// Tokenized statements of the structured-matrix dialect.
fn parse_case(text: &str) -> Result<CaseFile, FmtError> {
    // Strip comments, keep 1-based line numbers.
    let cleaned: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('%').next().unwrap_or("")))
        .collect();
    let mut base_mva: Option<f64> = None;
    let mut tables: HashMap<String, CaseTable> = HashMap::new();

    // Flatten into (line, char) stream for statement scanning.
    let mut stream: Vec<(usize, char)> = Vec::new();
    for &(ln, l) in &cleaned {
        for c in l.chars() {
            stream.push((ln, c));
        }
        stream.push((ln, '\n'));
    }
    let mut i = 0;
    while i < stream.len() {
        // Find the next `mpc.` prefix.
        if stream[i].1 != 'm'
            || stream[i..].len() < 4
            || !(stream[i..i + 4].iter().map(|&(_, c)| c).collect::<String>() == "mpc.")
        {
            i += 1;
            continue;
        }
        i += 4;
        let name_start_line = stream[i.min(stream.len() - 1)].0;
        let mut name = String::new();
        while i < stream.len() && (stream[i].1.is_alphanumeric() || stream[i].1 == '_') {
            name.push(stream[i].1);
            i += 1;
        }
        while i < stream.len() && stream[i].1.is_whitespace() {
            i += 1;
        }
        if i >= stream.len() || stream[i].1 != '=' {
            return Err(FmtError::Case(
                name_start_line,
                format!("expected '=' after mpc.{name}"),
            ));
        }
        i += 1;
        while i < stream.len() && stream[i].1.is_whitespace() {
            i += 1;
        }
        if i >= stream.len() {
            return Err(FmtError::Case(name_start_line, format!("mpc.{name} has no value")));
        }
        match stream[i].1 {
            '[' => {
                i += 1;
                let mut table = CaseTable::default();
                let mut cell = String::new();
                let mut row: Vec<f64> = Vec::new();
                let mut row_line = stream[i.min(stream.len() - 1)].0;
                fn flush_cell(
                    cell: &mut String,
                    row: &mut Vec<f64>,
                    ln: usize,
                ) -> Result<(), FmtError> {
                    if cell.is_empty() {
                        return Ok(());
                    }
                    let v: f64 = cell
                        .parse()
                        .map_err(|_| FmtError::Case(ln, format!("bad number '{cell}'")))?;
                    row.push(v);
                    cell.clear();
                    Ok(())
                }
                let mut closed = false;
                while i < stream.len() {
                    let (ln, c) = stream[i];
                    match c {
                        ']' => {
                            flush_cell(&mut cell, &mut row, ln)?;
                            if !row.is_empty() {
                                table.rows.push(std::mem::take(&mut row));
                                table.line_of.push(row_line);
                            }
                            closed = true;
                            i += 1;
                            break;
                        }
                        ';' | '\n' => {
                            flush_cell(&mut cell, &mut row, ln)?;
                            if !row.is_empty() {
                                table.rows.push(std::mem::take(&mut row));
                                table.line_of.push(row_line);
                            }
                            row_line = if i + 1 < stream.len() { stream[i + 1].0 } else { ln };
                            i += 1;
                        }
                        c if c.is_whitespace() || c == ',' => {
                            flush_cell(&mut cell, &mut row, ln)?;
                            i += 1;
                        }
                        c => {
                            if cell.is_empty() {
                                row_line = ln;
                            }
                            cell.push(c);
                            i += 1;
                        }
                    }
                }
                if !closed {
                    return Err(FmtError::Case(
                        name_start_line,
                        format!("mpc.{name}: unterminated matrix"),
                    ));
                }
                tables.insert(name, table);
            }
            '\'' | '"' => {
                // Quoted value (e.g. a format version): skip to the
                // terminating statement semicolon.
                while i < stream.len() && stream[i].1 != ';' {
                    i += 1;
                }
            }
            _ => {
                let mut cell = String::new();
                let ln = stream[i].0;
                while i < stream.len() && stream[i].1 != ';' && stream[i].1 != '\n' {
                    if !stream[i].1.is_whitespace() {
                        cell.push(stream[i].1);
                    }
                    i += 1;
                }
                if name == "baseMVA" {
                    base_mva = Some(
                        cell.parse()
                            .map_err(|_| FmtError::Case(ln, format!("bad number '{cell}'")))?,
                    );
                }
            }
        }
    }

    let take = |tables: &mut HashMap<String, CaseTable>,
                name: &'static str,
                min_cols: usize|
     -> Result<CaseTable, FmtError> {
        let t = tables.remove(name).ok_or(FmtError::MissingTable(name))?;
        let width = t.rows.first().map_or(0, |r| r.len());
        for (r, row) in t.rows.iter().enumerate() {
            if row.len() != width {
                return Err(FmtError::Case(
                    t.line_of[r],
                    format!(
                        "mpc.{name}: ragged row ({} columns, table has {width})",
                        row.len()
                    ),
                ));
            }
        }
        if width < min_cols {
            return Err(FmtError::Case(
                t.line_of.first().copied().unwrap_or(0),
                format!("mpc.{name}: {width} columns, need at least {min_cols}"),
            ));
        }
        Ok(t)
    };

    Ok(CaseFile {
        base_mva: base_mva.ok_or(FmtError::MissingTable("baseMVA"))?,
        bus: take(&mut tables, "bus", 13)?,
        gen: take(&mut tables, "gen", 10)?,
        branch: take(&mut tables, "branch", 13)?,
    })
}

/// Parse a case file into a network model. Connectivity is not checked
/// here; `NetworkModel::validate` owns that.
pub fn parse_matpower(text: &str) -> Result<NetworkModel, FmtError> {
    let case = parse_case(text)?;
    let mut gen_max: HashMap<i64, f64> = HashMap::new();
    let mut pmin_warned = 0usize;
    for (r, row) in case.gen.rows.iter().enumerate() {
        if row[7] <= 0.0 {
            continue;
        }
        let bus = row[0] as i64;
        *gen_max.entry(bus).or_insert(0.0) += row[8];
        if row[9] > 0.0 {
            pmin_warned += 1;
            if pmin_warned <= 3 {
                eprintln!(
                    "warning: line {}: generator at bus {bus} has Pmin {} > 0; lower bound fixed at 0",
                    case.gen.line_of[r], row[9]
                );
            }
        }
    }
    let buses: Vec<Bus> = case
        .bus
        .rows
        .iter()
        .map(|row| {
            let id = row[0] as i64;
            Bus {
                id,
                demand: row[2],
                gen_max: gen_max.get(&id).copied().unwrap_or(0.0),
            }
        })
        .collect();
    let known: std::collections::HashSet<i64> = buses.iter().map(|b| b.id).collect();
    for (r, row) in case.gen.rows.iter().enumerate() {
        let bus = row[0] as i64;
        if !known.contains(&bus) {
            return Err(FmtError::Case(
                case.gen.line_of[r],
                format!("generator references unknown bus {bus}"),
            ));
        }
    }
    let mut lines = Vec::new();
    let mut unlimited = 0usize;
    for (r, row) in case.branch.rows.iter().enumerate() {
        if row[10] <= 0.0 {
            continue;
        }
        let ln = case.branch.line_of[r];
        let (from, to) = (row[0] as i64, row[1] as i64);
        for end in [from, to] {
            if !known.contains(&end) {
                return Err(FmtError::Case(ln, format!("branch references unknown bus {end}")));
            }
        }
        let x = row[3];
        if x == 0.0 {
            return Err(FmtError::Case(ln, "zero branch reactance".into()));
        }
        let mut limit = row[5];
        if limit == 0.0 {
            limit = UNLIMITED_MW;
            unlimited += 1;
        }
        lines.push(Line {
            id: lines.len() as i64 + 1,
            from_bus: from,
            to_bus: to,
            susceptance: 1.0 / x,
            limit,
        });
    }
    if unlimited > 0 {
        eprintln!(
            "warning: {unlimited} branch(es) with rateA = 0 treated as unlimited ({UNLIMITED_MW} MW)"
        );
    }
    Ok(NetworkModel { base_mva: case.base_mva, buses, lines })
}

// ---------------------------------------------------------------------------
// Network JSON
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetDto {
    base_mva: f64,
    buses: Vec<BusDto>,
    lines: Vec<LineDto>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BusDto {
    id: i64,
    demand_mw: f64,
    gen_max_mw: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineDto {
    id: i64,
    from: i64,
    to: i64,
    susceptance_pu: f64,
    limit_mw: f64,
}

pub fn write_network_json(net: &NetworkModel) -> String {
    let dto = NetDto {
        base_mva: net.base_mva,
        buses: net
            .buses
            .iter()
            .map(|b| BusDto { id: b.id, demand_mw: b.demand, gen_max_mw: b.gen_max })
            .collect(),
        lines: net
            .lines
            .iter()
            .map(|l| LineDto {
                id: l.id,
                from: l.from_bus,
                to: l.to_bus,
                susceptance_pu: l.susceptance,
                limit_mw: l.limit,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&dto).expect("network serialization cannot fail")
}

pub fn parse_network_json(text: &str) -> Result<NetworkModel, FmtError> {
    let dto: NetDto = serde_json::from_str(text)?;
    Ok(NetworkModel {
        base_mva: dto.base_mva,
        buses: dto
            .buses
            .into_iter()
            .map(|b| Bus { id: b.id, demand: b.demand_mw, gen_max: b.gen_max_mw })
            .collect(),
        lines: dto
            .lines
            .into_iter()
            .map(|l| Line {
                id: l.id,
                from_bus: l.from,
                to_bus: l.to,
                susceptance: l.susceptance_pu,
                limit: l.limit_mw,
            })
            .collect(),
    })
}

// ---------------------------------------------------------------------------
// Aggregation configs
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AggDto {
    regions: serde_json::Map<String, serde_json::Value>,
}

/// Parse `{"regions": {name: [bus ids], ...}}` against a network. Region
/// order is declaration order. The config must partition the buses into
/// strictly fewer regions than buses — aggregation that renames every bus
/// is rejected.
pub fn parse_aggregation(text: &str, net: &NetworkModel) -> Result<AggregationMap, FmtError> {
    let dto: AggDto = serde_json::from_str(text)?;
    let n_bus = net.n_bus();
    let mut region_of: Vec<Option<usize>> = vec![None; n_bus];
    let mut names = Vec::new();
    for (r, (name, ids)) in dto.regions.iter().enumerate() {
        let ids: Vec<i64> = serde_json::from_value(ids.clone())
            .map_err(|e| FmtError::Schema(format!("region '{name}': {e}")))?;
        if ids.is_empty() {
            return Err(FmtError::Schema(format!("region '{name}' is empty")));
        }
        for id in ids {
            let pos = net
                .bus_index(id)
                .ok_or_else(|| FmtError::Schema(format!("region '{name}': unknown bus {id}")))?;
            if let Some(prev) = region_of[pos] {
                return Err(FmtError::Schema(format!(
                    "bus {id} assigned to both '{}' and '{name}'",
                    names[prev]
                )));
            }
            region_of[pos] = Some(r);
        }
        names.push(name.clone());
    }
    let region_of: Vec<usize> = region_of
        .into_iter()
        .enumerate()
        .map(|(pos, r)| {
            r.ok_or_else(|| {
                FmtError::Schema(format!("bus {} not assigned to any region", net.buses[pos].id))
            })
        })
        .collect::<Result<_, _>>()?;
    if names.len() >= n_bus {
        return Err(FmtError::Schema(format!(
            "{} regions over {n_bus} buses: aggregation must reduce the dimension",
            names.len()
        )));
    }
    Ok(AggregationMap::with_names(region_of, names)?)
}

// ---------------------------------------------------------------------------
// NTC specs
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NtcDto {
    corridors: Vec<CorridorDto>,
    #[serde(default)]
    bounds_mw: Option<Vec<f64>>,
    #[serde(default)]
    nominal: Option<Vec<f64>>,
    #[serde(default)]
    weights: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorridorDto {
    name: String,
    terms: Vec<(i64, f64)>,
}

/// Parse `{"corridors": [{name, terms: [[line id, ±1], ...]}, ...]}` with
/// optional `bounds_mw` (default 0), `nominal` (default 1), `weights`
/// (default 1), each one entry per corridor.
pub fn parse_ntc_spec(text: &str) -> Result<NtcSpec, FmtError> {
    let dto: NtcDto = serde_json::from_str(text)?;
    let n = dto.corridors.len();
    let vector = |v: Option<Vec<f64>>, default: f64, what: &str| -> Result<DVector<f64>, FmtError> {
        match v {
            None => Ok(DVector::from_element(n, default)),
            Some(v) if v.len() == n => Ok(DVector::from_vec(v)),
            Some(v) => Err(FmtError::Schema(format!(
                "{what} has {} entries, spec has {n} corridors",
                v.len()
            ))),
        }
    };
    let spec = NtcSpec {
        corridors: dto
            .corridors
            .into_iter()
            .map(|c| Corridor { name: c.name, terms: c.terms })
            .collect(),
        bounds: vector(dto.bounds_mw, 0.0, "bounds_mw")?,
        nominal: vector(dto.nominal, 1.0, "nominal")?,
        weights: vector(dto.weights, 1.0, "weights")?,
    };
    spec.validate().map_err(|e| FmtError::Schema(e.to_string()))?;
    Ok(spec)
}

pub fn write_ntc_spec(spec: &NtcSpec) -> String {
    let dto = NtcDto {
        corridors: spec
            .corridors
            .iter()
            .map(|c| CorridorDto { name: c.name.clone(), terms: c.terms.clone() })
            .collect(),
        bounds_mw: Some(spec.bounds.iter().copied().collect()),
        nominal: Some(spec.nominal.iter().copied().collect()),
        weights: Some(spec.weights.iter().copied().collect()),
    };
    serde_json::to_string_pretty(&dto).expect("spec serialization cannot fail")
}

// ---------------------------------------------------------------------------
// Polytope JSON
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IneqDto {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EqDto {
    #[serde(rename = "E")]
    e: Vec<Vec<f64>>,
    f: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyDto {
    dim: usize,
    ineq: IneqDto,
    eq: EqDto,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UnionDto {
    parts: Vec<PolyDto>,
    disjoint_interiors: bool,
    /// Redundant marker so downstream consumers need not count `parts`.
    #[serde(default)]
    empty: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ApproxDto {
    inner_vertices: Vec<Vec<f64>>,
    inner_hull: Option<PolyDto>,
    outer: PolyDto,
    /// `null` encodes an unbounded (infinite) sandwich gap.
    gap: Option<f64>,
}

/// Any set artifact the tools exchange as JSON.
#[derive(Debug, Clone)]
pub enum SetFile {
    Polyhedron(Polyhedron),
    Union(PolyUnion),
    Approx(ApproxSet),
}

impl From<Polyhedron> for SetFile {
    fn from(p: Polyhedron) -> Self {
        SetFile::Polyhedron(p)
    }
}
impl From<PolyUnion> for SetFile {
    fn from(u: PolyUnion) -> Self {
        SetFile::Union(u)
    }
}
impl From<ApproxSet> for SetFile {
    fn from(a: ApproxSet) -> Self {
        SetFile::Approx(a)
    }
}

fn matrix_dto(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn poly_dto(p: &Polyhedron) -> PolyDto {
    PolyDto {
        dim: p.dim,
        ineq: IneqDto { a: matrix_dto(&p.a), b: p.b.iter().copied().collect() },
        eq: EqDto { e: matrix_dto(&p.e), f: p.f.iter().copied().collect() },
    }
}

fn dto_matrix(rows: &[Vec<f64>], dim: usize, what: &str) -> Result<DMatrix<f64>, FmtError> {
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(FmtError::Schema(format!(
                "{what} row {i} has {} entries, dim is {dim}",
                r.len()
            )));
        }
    }
    Ok(DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]))
}

fn dto_poly(dto: &PolyDto) -> Result<Polyhedron, FmtError> {
    if dto.ineq.a.len() != dto.ineq.b.len() {
        return Err(FmtError::Schema(format!(
            "ineq: {} rows vs {} offsets",
            dto.ineq.a.len(),
            dto.ineq.b.len()
        )));
    }
    if dto.eq.e.len() != dto.eq.f.len() {
        return Err(FmtError::Schema(format!(
            "eq: {} rows vs {} offsets",
            dto.eq.e.len(),
            dto.eq.f.len()
        )));
    }
    let a = dto_matrix(&dto.ineq.a, dto.dim, "ineq")?;
    let e = dto_matrix(&dto.eq.e, dto.dim, "eq")?;
    Ok(Polyhedron::from_ineq(a, DVector::from_row_slice(&dto.ineq.b))
        .with_eq(e, DVector::from_row_slice(&dto.eq.f)))
}

pub fn write_polytope_json(set: &SetFile) -> String {
    let value = match set {
        SetFile::Polyhedron(p) => serde_json::to_value(poly_dto(p)),
        SetFile::Union(u) => serde_json::to_value(UnionDto {
            parts: u.parts.iter().map(poly_dto).collect(),
            disjoint_interiors: u.disjoint_interiors,
            empty: u.parts.is_empty(),
        }),
        SetFile::Approx(a) => serde_json::to_value(ApproxDto {
            inner_vertices: a.inner_vertices.iter().map(|v| v.iter().copied().collect()).collect(),
            inner_hull: a.inner_hull.as_ref().map(poly_dto),
            outer: poly_dto(&a.outer),
            gap: a.gap.is_finite().then_some(a.gap),
        }),
    };
    serde_json::to_string_pretty(&value.expect("set serialization cannot fail"))
        .expect("set serialization cannot fail")
}

pub fn parse_polytope_json(text: &str) -> Result<SetFile, FmtError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let obj = value
        .as_object()
        .ok_or_else(|| FmtError::Schema("top level must be an object".into()))?;
    if obj.contains_key("parts") {
        let dto: UnionDto = serde_json::from_value(value)?;
        let parts = dto.parts.iter().map(dto_poly).collect::<Result<Vec<_>, _>>()?;
        if dto.empty && !parts.is_empty() {
            return Err(FmtError::Schema(
                "union is marked empty but lists parts".into(),
            ));
        }
        return Ok(SetFile::Union(PolyUnion {
            parts,
            disjoint_interiors: dto.disjoint_interiors,
        }));
    }
    if obj.contains_key("outer") {
        let dto: ApproxDto = serde_json::from_value(value)?;
        return Ok(SetFile::Approx(ApproxSet {
            inner_vertices: dto
                .inner_vertices
                .iter()
                .map(|v| DVector::from_row_slice(v))
                .collect(),
            inner_hull: dto.inner_hull.as_ref().map(dto_poly).transpose()?,
            outer: dto_poly(&dto.outer)?,
            gap: dto.gap.unwrap_or(f64::INFINITY),
        }));
    }
    if obj.contains_key("dim") {
        let dto: PolyDto = serde_json::from_value(value)?;
        return Ok(SetFile::Polyhedron(dto_poly(&dto)?));
    }
    Err(FmtError::Schema(
        "unrecognized set file: expected keys 'dim', 'parts', or 'outer'".into(),
    ))
}
