//! Channel spec files, the five analysis commands, and their reports.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error as ThisError;

use crate::error::Error;
use crate::geom::{
    build_dtm, local_capacity, svd, verify_divergence_symmetry, verify_quadratic_approx, Dtm,
};
use crate::prob::{unscale, Channel, ProbDist};
use crate::solver::{
    efficiency, k_letter_construction, letter_schedule, maxmin_ensemble, maxmin_rank1,
    second_moment, tangent_form, CouplingEnsemble, EfficiencyMode, MaxMinSolution, Optimizer,
    QuadraticForm, SolverOptions,
};
use crate::tensor::{dense_kron, product_singular_values, DEFAULT_DENSE_LIMIT};
use crate::windmill::{make_windmill, min_efficiency_curve, phi};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const DEFAULT_EPS_LIST: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

const KRON_TOL: f64 = 1e-9;
const CURVE_POINTS: usize = 180;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("{path}: parse error at byte {offset}: {message}")]
    Parse {
        path: String,
        offset: usize,
        message: String,
    },
    #[error("{path}: {field}: {source}")]
    Field {
        path: String,
        field: String,
        source: Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    /// 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(
                Error::ConvergenceFailure
                | Error::FeasibilityFailure { .. }
                | Error::GapDetected { .. },
            ) => 3,
            _ => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelEntry {
    pub name: String,
    /// `matrix[y][x] = W(y|x)`.
    pub matrix: Vec<Vec<f64>>,
}

/// On-disk channel specification: one input distribution shared by every
/// channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpecFile {
    pub input_dist: Vec<f64>,
    pub channels: Vec<ChannelEntry>,
}

/// A validated spec with its content digest.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSpec {
    pub input: ProbDist,
    pub channels: Vec<(String, Dtm)>,
    pub digest: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn byte_offset(text: &[u8], line: usize, column: usize) -> usize {
    let mut start = 0;
    for _ in 1..line {
        match text[start..].iter().position(|&b| b == b'\n') {
            Some(p) => start += p + 1,
            None => return text.len(),
        }
    }
    (start + column.saturating_sub(1)).min(text.len())
}

fn field(path: &str, field: impl Into<String>, source: Error) -> CliError {
    CliError::Field {
        path: path.to_string(),
        field: field.into(),
        source,
    }
}

/// Parses and validates spec bytes; `path` only labels errors.
pub fn parse_spec(path: &str, bytes: &[u8]) -> CliResult<LoadedSpec> {
    let raw: ChannelSpecFile = serde_json::from_slice(bytes).map_err(|e| CliError::Parse {
        path: path.to_string(),
        offset: byte_offset(bytes, e.line(), e.column()),
        message: e.to_string(),
    })?;
    let input = ProbDist::new(raw.input_dist.clone()).map_err(|e| match e {
        Error::NonPositiveEntry { index, .. } => field(path, format!("input_dist[{index}]"), e),
        _ => field(path, "input_dist", e),
    })?;
    if raw.channels.is_empty() {
        return Err(field(path, "channels", Error::EmptyInput));
    }
    let mut channels = Vec::with_capacity(raw.channels.len());
    for (i, entry) in raw.channels.iter().enumerate() {
        let at = |suffix: String| format!("channels[{i}].matrix{suffix}");
        if let Some(first) = entry.matrix.first() {
            for (r, row) in entry.matrix.iter().enumerate() {
                if row.len() != first.len() {
                    return Err(field(
                        path,
                        at(format!("[{r}]")),
                        Error::DimensionMismatch {
                            expected: first.len(),
                            found: row.len(),
                        },
                    ));
                }
            }
        }
        let w = Channel::from_rows(&entry.matrix).map_err(|e| match e {
            Error::InvalidChannelEntry { row, col, .. } => {
                field(path, at(format!("[{row}][{col}]")), e)
            }
            Error::ColumnNotStochastic { col, .. } => field(path, at(format!(" column {col}")), e),
            _ => field(path, at(String::new()), e),
        })?;
        if w.input_size() != input.len() {
            return Err(field(
                path,
                at(String::new()),
                Error::DimensionMismatch {
                    expected: input.len(),
                    found: w.input_size(),
                },
            ));
        }
        let d = build_dtm(&w, &input).map_err(|e| match e {
            Error::SingularOutput { index } => field(path, at(format!("[{index}]")), e),
            _ => field(path, at(String::new()), e),
        })?;
        channels.push((entry.name.clone(), d));
    }
    Ok(LoadedSpec {
        input,
        channels,
        digest: sha256_hex(bytes),
    })
}

pub fn load_spec(path: &Path) -> CliResult<LoadedSpec> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_spec(&path.display().to_string(), &bytes)
}

/// Rounds to 12 significant digits; non-finite values become `null`.
pub fn round12(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let y: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    Value::from(if y == 0.0 { 0.0 } else { y })
}

fn vec12(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| round12(x)).collect())
}

fn rows12(m: &DMatrix<f64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|r| vec12(&m.row(r).iter().copied().collect::<Vec<_>>()))
            .collect(),
    )
}

fn cols12(m: &DMatrix<f64>) -> Value {
    Value::Array(
        (0..m.ncols())
            .map(|c| vec12(&m.column(c).iter().copied().collect::<Vec<_>>()))
            .collect(),
    )
}

/// A flat table for `--format csv`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, label: Option<&str>, values: &[f64]) {
        let mut row: Vec<String> = label.map(|l| vec![l.to_string()]).unwrap_or_default();
        row.extend(values.iter().map(|&v| match round12(v) {
            Value::Null => String::new(),
            n => n.to_string(),
        }));
        self.rows.push(row);
    }
}

/// A command's output. Keys inside `results` are sorted, numbers carry 12
/// significant digits, so equal inputs give byte-identical documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub command: String,
    pub tool_version: String,
    pub inputs_digest: String,
    pub seed: u64,
    pub warnings: Vec<String>,
    pub results: Value,
    #[serde(skip)]
    pub table: Table,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(&self.table.header).map_err(io)?;
        for row in &self.table.rows {
            w.write_record(row).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
    }
}

/// Flags shared by the commands; unused ones are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct Flags {
    pub eps: f64,
    pub eps_list: Option<Vec<f64>>,
    pub letters: usize,
    pub cardinality: Option<usize>,
    pub grid: usize,
    pub seed: u64,
    pub tol: f64,
    pub verify_exact: bool,
}

impl Default for Flags {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            eps: o.epsilon,
            eps_list: None,
            letters: 1,
            cardinality: None,
            grid: o.grid,
            seed: o.seed,
            tol: o.tol,
            verify_exact: false,
        }
    }
}

impl Flags {
    fn solver(&self) -> SolverOptions {
        SolverOptions {
            grid: self.grid,
            seed: self.seed,
            tol: self.tol,
            epsilon: self.eps,
            max_atoms: self.cardinality,
            ..SolverOptions::default()
        }
    }
}

fn report(
    command: &str,
    digest: String,
    flags: &Flags,
    warnings: Vec<String>,
    results: Value,
    table: Table,
) -> Report {
    for w in &warnings {
        eprintln!("WARNING: {w}");
    }
    Report {
        command: command.to_string(),
        tool_version: TOOL_VERSION.to_string(),
        inputs_digest: digest,
        seed: flags.seed,
        warnings,
        results,
        table,
    }
}

pub fn cmd_dtm(path: &Path, flags: &Flags) -> CliResult<Report> {
    let spec = load_spec(path)?;
    let mut table = Table::new(&["channel", "index", "singular_value"]);
    let mut channels = Vec::new();
    for (name, d) in &spec.channels {
        let s = svd(d)?;
        for (i, &v) in s.singular_values.iter().enumerate() {
            table.push(Some(name), &[i as f64, v]);
        }
        let mut entry = json!({
            "name": name,
            "dtm": rows12(d.matrix()),
            "output_dist": vec12(d.output_dist().as_slice()),
            "singular_values": vec12(&s.singular_values),
            "right_vectors": cols12(&s.right_vectors),
            "left_vectors": cols12(&s.left_vectors),
        });
        if d.input_size() >= 2 {
            let cap = local_capacity(d)?;
            entry["local_capacity"] = json!({
                "sigma": round12(cap.sigma),
                "efficiency": round12(cap.efficiency()),
                "multiplicity": cap.multiplicity,
                "locally_useless": cap.locally_useless,
            });
        }
        channels.push(entry);
    }
    let results = json!({
        "input_dist": vec12(spec.input.as_slice()),
        "channels": channels,
    });
    Ok(report(
        "dtm",
        spec.digest,
        flags,
        Vec::new(),
        results,
        table,
    ))
}

pub fn cmd_p2p(path: &Path, flags: &Flags) -> CliResult<Report> {
    let spec = load_spec(path)?;
    if spec.channels.len() != 1 {
        return Err(CliError::Usage(format!(
            "p2p needs exactly one channel, spec has {}",
            spec.channels.len()
        )));
    }
    let (name, d) = &spec.channels[0];
    let cap = local_capacity(d)?;
    let value = cap.efficiency();
    let mut warnings = Vec::new();
    if cap.locally_useless {
        warnings.push(format!(
            "{name}: locally useless channel (second singular value is 0)"
        ));
    }
    let direction = cap.direction.as_slice().to_vec();
    let mut table = Table::new(&["epsilon", "quadratic", "exact", "relative_error"]);
    let mut checks = Vec::new();
    if flags.verify_exact {
        let forms = [tangent_form(d)?];
        let eps_list = flags.eps_list.clone().unwrap_or_else(|| vec![flags.eps]);
        for eps in eps_list {
            let e = CouplingEnsemble::binary(direction.clone(), 1, eps)?;
            let exact = efficiency(&e, &forms, EfficiencyMode::Exact)?[0];
            let rel = if value > 0.0 {
                (exact - value).abs() / value
            } else {
                exact.abs()
            };
            table.push(None, &[eps, value, exact, rel]);
            checks.push(json!({
                "epsilon": round12(eps),
                "quadratic": round12(value),
                "exact": round12(exact),
                "relative_error": round12(rel),
            }));
        }
    } else {
        table.push(None, &[flags.eps, value, f64::NAN, f64::NAN]);
    }
    let results = json!({
        "channel": name,
        "efficiency": round12(value),
        "sigma": round12(cap.sigma),
        "multiplicity": cap.multiplicity,
        "locally_useless": cap.locally_useless,
        "direction_scaled": vec12(&direction),
        "direction_unscaled": vec12(&unscale(&cap.direction)),
        "exact_checks": checks,
    });
    Ok(report("p2p", spec.digest, flags, warnings, results, table))
}

fn rank1_direction(s: &MaxMinSolution) -> Vec<f64> {
    match &s.optimizer {
        Optimizer::Rank1(x) => x.clone(),
        Optimizer::Ensemble(_) => Vec::new(),
    }
}

fn ensemble_json(e: &CouplingEnsemble, forms: &[QuadraticForm]) -> Value {
    json!({
        "cardinality": e.cardinality(),
        "letters": e.letters(),
        "epsilon": round12(e.epsilon()),
        "weights": vec12(e.weights().as_slice()),
        "atoms_tangent": e.atoms().iter().map(|a| vec12(&forms[0].project(a))).collect::<Vec<_>>(),
        "atoms_scaled": e.atoms().iter().map(|a| vec12(a)).collect::<Vec<_>>(),
    })
}

/// Directions for an n-letter schedule of an ensemble's mixing matrix. When
/// `n` is below its rank the best single direction is repeated.
fn schedule_for(
    ens: &CouplingEnsemble,
    forms: &[QuadraticForm],
    fallback: &[f64],
    n: usize,
    warnings: &mut Vec<String>,
) -> CliResult<Vec<Vec<f64>>> {
    let m = second_moment(ens, &forms[0])?;
    match letter_schedule(&m, n) {
        Ok(dirs) => Ok(dirs),
        Err(Error::DimensionMismatch { expected, .. }) => {
            warnings.push(format!(
                "--letters {n} is below the ensemble rank {expected}; repeating the best single direction"
            ));
            Ok(vec![fallback.to_vec(); n])
        }
        Err(e) => Err(e.into()),
    }
}

pub fn cmd_broadcast(path: &Path, flags: &Flags) -> CliResult<Report> {
    let spec = load_spec(path)?;
    let k = spec.channels.len();
    if k < 2 {
        return Err(CliError::Usage(
            "broadcast needs at least two channels; use p2p for one".into(),
        ));
    }
    if flags.letters == 0 {
        return Err(CliError::Usage("--letters must be at least 1".into()));
    }
    let names: Vec<&str> = spec.channels.iter().map(|(n, _)| n.as_str()).collect();
    let forms: Vec<QuadraticForm> = spec
        .channels
        .iter()
        .map(|(_, d)| tangent_form(d))
        .collect::<crate::error::Result<_>>()?;
    let opts = flags.solver();
    let rank1 = maxmin_rank1(&forms, &opts)?;
    let ens_sol = maxmin_ensemble(&forms, &opts)?;
    let Optimizer::Ensemble(ens) = &ens_sol.optimizer else {
        unreachable!("ensemble solver returns an ensemble")
    };
    let mut warnings = Vec::new();
    if k == 2 && rank1.gap > flags.tol {
        warnings.push(format!(
            "GapDetected: two-receiver gap {:e} exceeds tolerance {:e} (rank-1 {}, dual {})",
            rank1.gap, flags.tol, rank1.value, rank1.dual_value
        ));
    }
    let direction = rank1_direction(&rank1);
    let mut results = json!({
        "receivers": k,
        "channels": names,
        "rank1": {
            "value": round12(rank1.value),
            "direction_tangent": vec12(&direction),
            "direction_scaled": vec12(&forms[0].lift(&direction)),
            "per_channel": vec12(&rank1.per_form_values),
        },
        "dual": {
            "value": round12(rank1.dual_value),
            "weights": vec12(&rank1.dual_weights),
        },
        "gap": round12(rank1.gap),
        "single_letter_optimal": rank1.gap <= flags.tol,
        "ensemble": {
            "value": round12(ens_sol.value),
            "per_channel": vec12(&ens_sol.per_form_values),
            "solution": ensemble_json(ens, &forms),
        },
    });
    let mut letter_values = vec![f64::NAN; k];
    if flags.letters > 1 {
        let dirs = schedule_for(ens, &forms, &direction, flags.letters, &mut warnings)?;
        let r = k_letter_construction(&forms, &dirs, flags.eps)?;
        letter_values = r.tensor.clone();
        results["letters"] = json!({
            "n": flags.letters,
            "directions_tangent": dirs.iter().map(|d| vec12(d)).collect::<Vec<_>>(),
            "per_channel": vec12(&r.tensor),
            "per_channel_algebraic": vec12(&r.algebraic),
            "min": round12(r.tensor.iter().copied().fold(f64::INFINITY, f64::min)),
        });
    }
    let mut table = Table::new(&["channel", "rank1", "ensemble", "letters"]);
    for i in 0..k {
        table.push(
            Some(names[i]),
            &[
                rank1.per_form_values[i],
                ens_sol.per_form_values[i],
                letter_values[i],
            ],
        );
    }
    Ok(report(
        "broadcast",
        spec.digest,
        flags,
        warnings,
        results,
        table,
    ))
}

fn kronecker_check(d: &Dtm, n: usize) -> CliResult<Option<Value>> {
    if d.input_size().pow(n as u32) > DEFAULT_DENSE_LIMIT
        || d.output_size().pow(n as u32) > DEFAULT_DENSE_LIMIT
    {
        return Ok(None);
    }
    let s = svd(d)?;
    let products: Vec<f64> = product_singular_values(&s, n, usize::MAX)?
        .into_iter()
        .map(|(v, _)| v)
        .collect();
    let mut dense: Vec<f64> = dense_kron(d, n)?
        .singular_values()
        .iter()
        .copied()
        .collect();
    dense.sort_by(|a, b| b.total_cmp(a));
    let len = products.len().max(dense.len());
    let deviation = (0..len)
        .map(|i| {
            (products.get(i).copied().unwrap_or(0.0) - dense.get(i).copied().unwrap_or(0.0)).abs()
        })
        .fold(0.0_f64, f64::max);
    Ok(Some(json!({
        "letters": n,
        "max_deviation": round12(deviation),
        "passed": deviation <= KRON_TOL,
    })))
}

pub fn cmd_verify(path: &Path, flags: &Flags) -> CliResult<Report> {
    let spec = load_spec(path)?;
    let eps_list = flags
        .eps_list
        .clone()
        .unwrap_or_else(|| DEFAULT_EPS_LIST.to_vec());
    let mut table = Table::new(&[
        "channel",
        "epsilon",
        "exact_kl",
        "reverse_kl",
        "half_eps2_norm",
        "residual",
        "reverse_residual",
        "symmetry_gap",
    ]);
    let mut channels = Vec::new();
    for (name, d) in &spec.channels {
        if d.input_size() < 2 {
            return Err(CliError::Usage(format!(
                "{name}: verify needs at least two input symbols"
            )));
        }
        let cap = local_capacity(d)?;
        let j = unscale(&cap.direction);
        let approx = verify_quadratic_approx(&spec.input, &j, &eps_list)?;
        let sym = verify_divergence_symmetry(&spec.input, &j, &eps_list)?;
        for (a, s) in approx.rows.iter().zip(&sym.rows) {
            table.push(
                Some(name),
                &[
                    a.epsilon,
                    a.exact_kl,
                    a.reverse_kl,
                    a.half_eps2_norm,
                    a.residual,
                    a.reverse_residual,
                    s.gap,
                ],
            );
        }
        let mut kron = Vec::new();
        for n in [2, 3] {
            if let Some(v) = kronecker_check(d, n)? {
                kron.push(v);
            }
        }
        channels.push(json!({
            "name": name,
            "direction_unscaled": vec12(&j),
            "quadratic_approx": {
                "rows": approx.rows.iter().map(|r| json!({
                    "epsilon": round12(r.epsilon),
                    "exact_kl": round12(r.exact_kl),
                    "reverse_kl": round12(r.reverse_kl),
                    "half_eps2_norm": round12(r.half_eps2_norm),
                    "residual": round12(r.residual),
                    "reverse_residual": round12(r.reverse_residual),
                })).collect::<Vec<_>>(),
                "ratios": vec12(&approx.ratios),
                "reverse_ratios": vec12(&approx.reverse_ratios),
                "passed": approx.passed,
            },
            "symmetry": {
                "rows": sym.rows.iter().map(|r| json!({
                    "epsilon": round12(r.epsilon),
                    "gap": round12(r.gap),
                })).collect::<Vec<_>>(),
                "ratios": vec12(&sym.ratios),
                "passed": sym.passed,
            },
            "kronecker": kron,
        }));
    }
    let results = json!({
        "eps_list": vec12(&eps_list),
        "channels": channels,
    });
    Ok(report(
        "verify",
        spec.digest,
        flags,
        Vec::new(),
        results,
        table,
    ))
}

/// `k`-receiver windmill; `letters = 0` means `k`.
pub fn cmd_windmill(k: usize, letters: usize, theta: f64, flags: &Flags) -> CliResult<Report> {
    let w = make_windmill(k)?;
    let n = if letters == 0 { k } else { letters };
    let digest = sha256_hex(
        format!(
            "windmill k={k} letters={n} theta={theta:e} grid={} seed={} tol={:e} eps={:e} cardinality={:?}",
            flags.grid, flags.seed, flags.tol, flags.eps, flags.cardinality
        )
        .as_bytes(),
    );
    let opts = flags.solver();
    let single = maxmin_rank1(&w.forms, &opts)?;
    let direction = rank1_direction(&single);
    let mut warnings = Vec::new();
    let mut results = json!({
        "k": k,
        "angles": vec12(&w.angles),
        "degenerate": w.degenerate,
        "single_letter": {
            "value": round12(single.value),
            "direction": vec12(&direction),
            "per_channel": vec12(&single.per_form_values),
        },
        "dual": {
            "value": round12(single.dual_value),
            "weights": vec12(&single.dual_weights),
        },
        "gap": round12(single.gap),
    });
    let curve = min_efficiency_curve(&w, CURVE_POINTS);
    let multi_at = |t: f64| -> CliResult<Vec<f64>> {
        let dirs: Vec<Vec<f64>> = (0..n)
            .map(|j| phi(t + 2.0 * std::f64::consts::PI * j as f64 / n as f64))
            .collect();
        Ok(k_letter_construction(&w.forms, &dirs, flags.eps)?.tensor)
    };
    let mut table = Table::new(&["angle", "single_letter_min", "multiletter_min"]);
    if w.degenerate {
        warnings.push("k = 2 is degenerate: both receivers see the same line".into());
        for (a, v) in &curve {
            table.push(None, &[*a, *v, f64::NAN]);
        }
    } else {
        let multi = multi_at(theta)?;
        let min_multi = multi.iter().copied().fold(f64::INFINITY, f64::min);
        let ens = crate::windmill::cardinality_solution(&w, flags.eps)?;
        let ens_values = efficiency(&ens, &w.forms, EfficiencyMode::Quadratic)?;
        let mut sweep = Vec::with_capacity(curve.len());
        for (a, v) in &curve {
            let m = multi_at(*a)?.into_iter().fold(f64::INFINITY, f64::min);
            table.push(None, &[*a, *v, m]);
            sweep.push(json!([round12(*a), round12(m)]));
        }
        results["multiletter"] = json!({
            "letters": n,
            "theta": round12(theta),
            "per_channel": vec12(&multi),
            "min": round12(min_multi),
            "ratio_to_single_letter": if single.value > 0.0 { round12(min_multi / single.value) } else { Value::Null },
        });
        results["ensemble"] = json!({
            "per_channel": vec12(&ens_values),
            "solution": ensemble_json(&ens, &w.forms),
        });
        results["plot"] = json!({
            "theta_sweep": sweep,
        });
    }
    results["plot"]["min_efficiency_curve"] = Value::Array(
        curve
            .iter()
            .map(|(a, v)| json!([round12(*a), round12(*v)]))
            .collect(),
    );
    Ok(report("windmill", digest, flags, warnings, results, table))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BSC: &str = r#"{"input_dist": [0.5, 0.5], "channels": [{"name": "bsc", "matrix": [[0.9, 0.1], [0.1, 0.9]]}]}"#;

    #[test]
    fn parse_valid_spec() {
        let s = parse_spec("bsc.json", BSC.as_bytes()).unwrap();
        assert_eq!(s.channels.len(), 1);
        assert_eq!(s.digest, sha256_hex(BSC.as_bytes()));
    }

    #[test]
    fn malformed_json_names_offset() {
        let text = "{\"input_dist\": [0.5, 0.5],\n \"channels\": [}";
        let err = parse_spec("x.json", text.as_bytes()).unwrap_err();
        let CliError::Parse { offset, .. } = err else {
            panic!("{err}")
        };
        assert_eq!(&text[offset..offset + 1], "}");
    }

    #[test]
    fn field_addressed_errors() {
        let zero = r#"{"input_dist": [1.0, 0.0], "channels": [{"name": "c", "matrix": [[1, 0], [0, 1]]}]}"#;
        let err = parse_spec("z.json", zero.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("input_dist[1]"), "{err}");
        assert_eq!(err.exit_code(), 2);
        let col = r#"{"input_dist": [0.5, 0.5], "channels": [{"name": "c", "matrix": [[0.9, 0.1], [0.2, 0.9]]}]}"#;
        let err = parse_spec("c.json", col.as_bytes()).unwrap_err();
        assert!(
            err.to_string().contains("channels[0].matrix column 0"),
            "{err}"
        );
        let extra = r#"{"input_dist": [0.5, 0.5], "channels": [{"name": "c", "input_dist": [0.5, 0.5], "matrix": [[1, 0], [0, 1]]}]}"#;
        assert!(matches!(
            parse_spec("e.json", extra.as_bytes()),
            Err(CliError::Parse { .. })
        ));
    }

    #[test]
    fn rounding_is_twelve_digits() {
        assert_eq!(round12(0.1 + 0.2).to_string(), "0.3");
        assert_eq!(round12(-0.0).to_string(), "0.0");
        assert_eq!(round12(f64::NAN), Value::Null);
        assert_eq!(round12(1.23456789012345e-7).to_string(), "1.23456789012e-7");
    }

    #[test]
    fn windmill_report_values() {
        let r = cmd_windmill(3, 0, 0.0, &Flags::default()).unwrap();
        let v = &r.results;
        assert_eq!(v["single_letter"]["value"].as_f64().unwrap(), 0.25);
        assert_eq!(v["multiletter"]["min"].as_f64().unwrap(), 0.5);
        assert_eq!(
            v["ensemble"]["solution"]["cardinality"].as_u64().unwrap(),
            6
        );
        let r2 = cmd_windmill(2, 0, 0.0, &Flags::default()).unwrap();
        assert_eq!(r2.warnings.len(), 1);
        assert!(matches!(
            cmd_windmill(1, 0, 0.0, &Flags::default()),
            Err(CliError::Core(Error::InvalidK { k: 1 }))
        ));
    }
}
