//! Counts files (raw shot data), report files, and channel files.
//!
//! All files are single JSON documents with a `format_version` gate. Counts
//! files are validated by hand against the schema so that every diagnostic
//! carries the JSON path of the offending item and the name of the key
//! involved.
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "metadata": { "synthetic": true },
//!   "settings": [
//!     {
//!       "input_basis": ["Z", "Z"],
//!       "output_basis": ["Z", "Z"],
//!       "records": [
//!         { "input": "00", "counts": { "00": 98, "01": 2, "10": 0, "11": 0 } }
//!       ]
//!     }
//!   ]
//! }
//! ```

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::algebra::{Mat16, Pauli, SuperOperator, PHYSICAL_TOL};
use crate::channels::{reconstruct_from_fidelities, ExpansionCoefficients};
use crate::entanglement::{bound_from_correlations, bound_from_fidelities, output_correlations};
use crate::error::{Error, Result};
use crate::fidelity::{
    self, evaluate_tables, label_string, parse_label, p_e_estimate, BasisSetting, FidelityKind,
    FidelityTriple, ProbabilityTable, WernerEstimate, LABELS,
};
use crate::sampling::{counts_to_table, CountsRecord};

pub const FORMAT_VERSION: u64 = 1;

const OUTCOME_KEYS: [&str; 4] = ["00", "01", "10", "11"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputCounts {
    pub input: String,
    pub counts: BTreeMap<String, u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingCounts {
    pub input_basis: [Pauli; 2],
    pub output_basis: [Pauli; 2],
    pub records: Vec<InputCounts>,
}

impl SettingCounts {
    pub fn setting(&self) -> BasisSetting {
        BasisSetting::new(self.input_basis, self.output_basis)
    }

    pub fn from_records(setting: BasisSetting, records: &[CountsRecord]) -> Self {
        SettingCounts {
            input_basis: setting.input_basis,
            output_basis: setting.output_basis,
            records: records
                .iter()
                .map(|r| InputCounts {
                    input: label_string(r.input),
                    counts: LABELS
                        .into_iter()
                        .map(|o| (label_string(o), r.counts[o as usize]))
                        .collect(),
                })
                .collect(),
        }
    }
}

/// Raw experimental (or simulated) shot counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountsFile {
    pub format_version: u64,
    pub metadata: BTreeMap<String, Value>,
    pub settings: Vec<SettingCounts>,
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| Error::schema(path, "expected an object"))
}

/// Checks that `obj` has exactly the `required` keys. A missing key is
/// reported by name; an unexpected key alongside it is mentioned too, since
/// that is usually a misspelling.
fn check_keys(obj: &Map<String, Value>, required: &[&str], path: &str) -> Result<()> {
    let unexpected: Vec<&str> = obj
        .keys()
        .map(String::as_str)
        .filter(|k| !required.contains(k))
        .collect();
    if let Some(missing) = required.iter().find(|k| !obj.contains_key(**k)) {
        let mut reason = format!("missing required key `{missing}`");
        if !unexpected.is_empty() {
            reason.push_str(&format!(" (found unexpected key `{}`)", unexpected.join("`, `")));
        }
        return Err(Error::schema(path, reason));
    }
    if let Some(k) = unexpected.first() {
        return Err(Error::schema(path, format!("unexpected key `{k}`")));
    }
    Ok(())
}

fn basis_pair(v: &Value, path: &str) -> Result<[Pauli; 2]> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| Error::schema(path, "expected an array of two basis labels"))?;
    let mut out = [Pauli::Z; 2];
    for (i, item) in arr.iter().enumerate() {
        let p = match item.as_str() {
            Some("X") => Pauli::X,
            Some("Y") => Pauli::Y,
            Some("Z") => Pauli::Z,
            _ => {
                return Err(Error::schema(
                    format!("{path}[{i}]"),
                    format!("basis label must be one of \"X\", \"Y\", \"Z\", got {item}"),
                ))
            }
        };
        out[i] = p;
    }
    Ok(out)
}

fn parse_record(v: &Value, path: &str) -> Result<InputCounts> {
    let obj = object(v, path)?;
    check_keys(obj, &["input", "counts"], path)?;
    let input = obj["input"]
        .as_str()
        .filter(|s| parse_label(s).is_some())
        .ok_or_else(|| {
            Error::schema(
                format!("{path}.input"),
                "input must be one of \"00\", \"01\", \"10\", \"11\"",
            )
        })?
        .to_string();
    let counts_path = format!("{path}.counts");
    let counts_obj = object(&obj["counts"], &counts_path)?;
    check_keys(counts_obj, &OUTCOME_KEYS, &counts_path)?;
    let mut counts = BTreeMap::new();
    for key in OUTCOME_KEYS {
        let item_path = format!("{counts_path}.{key}");
        let value = &counts_obj[key];
        let n = match (value.as_u64(), value.as_i64()) {
            (Some(n), _) => n,
            (None, Some(n)) if n < 0 => {
                return Err(Error::schema(item_path, format!("negative count {n}")))
            }
            _ => {
                return Err(Error::schema(
                    item_path,
                    format!("count must be a nonnegative integer, got {value}"),
                ))
            }
        };
        counts.insert(key.to_string(), n);
    }
    Ok(InputCounts { input, counts })
}

impl CountsFile {
    pub fn new(metadata: BTreeMap<String, Value>, settings: Vec<SettingCounts>) -> Self {
        CountsFile {
            format_version: FORMAT_VERSION,
            metadata,
            settings,
        }
    }

    /// Parses and validates a counts document.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let root: Value = serde_json::from_str(text)?;
        let obj = object(&root, "$")?;
        check_keys(obj, &["format_version", "metadata", "settings"], "$")?;

        match obj["format_version"].as_u64() {
            Some(FORMAT_VERSION) => {}
            _ => {
                return Err(Error::schema(
                    "$.format_version",
                    format!("unsupported format_version {}, expected {FORMAT_VERSION}", obj["format_version"]),
                ))
            }
        }

        let meta = object(&obj["metadata"], "$.metadata")?;
        match meta.get("synthetic") {
            Some(Value::Bool(_)) => {}
            Some(other) => {
                return Err(Error::schema(
                    "$.metadata.synthetic",
                    format!("`synthetic` must be true or false, got {other}"),
                ))
            }
            None => {
                return Err(Error::schema(
                    "$.metadata",
                    "missing required key `synthetic`",
                ))
            }
        }
        let metadata = meta.iter().map(|(k, v)| (k.clone(), v.clone())).collect();

        let settings_v = obj["settings"]
            .as_array()
            .ok_or_else(|| Error::schema("$.settings", "expected an array"))?;
        let mut settings = Vec::with_capacity(settings_v.len());
        for (i, s) in settings_v.iter().enumerate() {
            let path = format!("$.settings[{i}]");
            let so = object(s, &path)?;
            check_keys(so, &["input_basis", "output_basis", "records"], &path)?;
            let input_basis = basis_pair(&so["input_basis"], &format!("{path}.input_basis"))?;
            let output_basis = basis_pair(&so["output_basis"], &format!("{path}.output_basis"))?;
            let records_path = format!("{path}.records");
            let records = so["records"]
                .as_array()
                .ok_or_else(|| Error::schema(&records_path, "expected an array"))?
                .iter()
                .enumerate()
                .map(|(j, r)| parse_record(r, &format!("{records_path}[{j}]")))
                .collect::<Result<Vec<_>>>()?;
            settings.push(SettingCounts {
                input_basis,
                output_basis,
                records,
            });
        }
        Ok(CountsFile {
            format_version: FORMAT_VERSION,
            metadata,
            settings,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Records of the three canonical settings, in F1, F2, F3 order, plus
    /// warnings about ignored extra settings.
    pub fn canonical_records(&self) -> Result<([Vec<CountsRecord>; 3], Vec<String>)> {
        let mut found: [Option<usize>; 3] = [None; 3];
        let mut warnings = Vec::new();
        for (i, block) in self.settings.iter().enumerate() {
            let setting = block.setting();
            match BasisSetting::CANONICAL.iter().position(|c| *c == setting) {
                Some(k) if found[k].is_some() => {
                    return Err(Error::schema(
                        format!("$.settings[{i}]"),
                        format!("duplicate setting {setting}"),
                    ))
                }
                Some(k) => found[k] = Some(i),
                None => warnings.push(format!(
                    "ignoring non-canonical setting {setting} at $.settings[{i}]"
                )),
            }
        }
        let mut out: [Vec<CountsRecord>; 3] = Default::default();
        for (k, setting) in BasisSetting::CANONICAL.into_iter().enumerate() {
            let i = found[k].ok_or_else(|| {
                Error::schema(
                    "$.settings",
                    format!(
                        "missing canonical setting {setting} (input_basis [{}, {}], output_basis [{}, {}])",
                        setting.input_basis[0],
                        setting.input_basis[1],
                        setting.output_basis[0],
                        setting.output_basis[1]
                    ),
                )
            })?;
            let path = format!("$.settings[{i}].records");
            let block = &self.settings[i];
            let mut records = Vec::with_capacity(4);
            for (j, rec) in block.records.iter().enumerate() {
                let input = parse_label(&rec.input).ok_or_else(|| {
                    Error::schema(format!("{path}[{j}].input"), "invalid input label")
                })?;
                let mut counts = [0u64; 4];
                for o in LABELS {
                    counts[o as usize] = *rec.counts.get(&label_string(o)).ok_or_else(|| {
                        Error::schema(
                            format!("{path}[{j}].counts"),
                            format!("missing required key `{}`", label_string(o)),
                        )
                    })?;
                }
                records.push(CountsRecord { setting, input, counts });
            }
            // Coverage, duplicates and zero-shot rows.
            counts_to_table(&records).map_err(|e| match e {
                Error::Counts(reason) => Error::schema(path.clone(), reason),
                other => other,
            })?;
            out[k] = records;
        }
        Ok((out, warnings))
    }
}

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerFidelity<T> {
    #[serde(rename = "F1")]
    pub f1: T,
    #[serde(rename = "F2")]
    pub f2: T,
    #[serde(rename = "F3")]
    pub f3: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelitySection {
    #[serde(rename = "F1")]
    pub f1: f64,
    #[serde(rename = "F2")]
    pub f2: f64,
    #[serde(rename = "F3")]
    pub f3: f64,
    pub standard_errors: PerFidelity<f64>,
    pub shots: PerFidelity<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcurrenceSection {
    pub bound_from_fidelities: f64,
    pub bound_from_correlations: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableSection {
    pub fidelity: FidelityKind,
    pub input_basis: [Pauli; 2],
    pub output_basis: [Pauli; 2],
    /// input label → outcome label → probability
    pub rows: BTreeMap<String, BTreeMap<String, f64>>,
}

impl TableSection {
    pub fn new(kind: FidelityKind, table: &ProbabilityTable) -> Self {
        TableSection {
            fidelity: kind,
            input_basis: table.setting.input_basis,
            output_basis: table.setting.output_basis,
            rows: LABELS
                .into_iter()
                .map(|i| {
                    let row = LABELS
                        .into_iter()
                        .map(|o| (label_string(o), table.get(i, o)))
                        .collect();
                    (label_string(i), row)
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionSection {
    pub coefficients: ExpansionCoefficients,
    pub is_cp: bool,
    pub is_tp: bool,
    pub min_choi_eigenvalue: f64,
    pub choi_available: bool,
}

impl ReconstructionSection {
    pub fn from_fidelities(f: &FidelityTriple) -> Result<(Self, SuperOperator)> {
        let clamped = FidelityTriple {
            f1: f.f1.clamp(0.0, 1.0),
            f2: f.f2.clamp(0.0, 1.0),
            f3: f.f3.clamp(0.0, 1.0),
        };
        let map = reconstruct_from_fidelities(&clamped)?;
        let min = map.min_choi_eigenvalue();
        Ok((
            ReconstructionSection {
                coefficients: ExpansionCoefficients::from_fidelities(&clamped),
                is_cp: min >= -PHYSICAL_TOL,
                is_tp: map.is_tp(PHYSICAL_TOL),
                min_choi_eigenvalue: min,
                choi_available: min.is_finite(),
            },
            map,
        ))
    }
}

/// Evaluation of one counts file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format_version: u64,
    pub fidelities: FidelitySection,
    pub sum: f64,
    pub parallelism_number: f64,
    pub criterion_met: bool,
    pub p_e_estimate: WernerEstimate,
    pub concurrence: ConcurrenceSection,
    pub tables: Vec<TableSection>,
    pub channel_reconstruction: ReconstructionSection,
}

impl Report {
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn fidelity_triple(&self) -> FidelityTriple {
        FidelityTriple {
            f1: self.fidelities.f1,
            f2: self.fidelities.f2,
            f3: self.fidelities.f3,
        }
    }

    /// Whether `criterion_met` agrees with the report's own fidelities.
    pub fn is_consistent(&self) -> bool {
        let f = self.fidelity_triple();
        self.criterion_met == fidelity::criterion_from_sum(f.f1 + f.f2 + f.f3)
            && [self.sum, self.parallelism_number, f.f1, f.f2, f.f3]
                .iter()
                .all(|v| v.is_finite())
    }
}

/// Binomial standard error `√(F(1−F)/n)`.
pub fn binomial_standard_error(f: f64, n: u64) -> f64 {
    (f * (1.0 - f) / n as f64).max(0.0).sqrt()
}

/// Turns a validated counts file into a report. Returns warnings about
/// ignored settings alongside.
pub fn evaluate_counts(file: &CountsFile, equality_tol: f64) -> Result<(Report, Vec<String>)> {
    let (records, warnings) = file.canonical_records()?;
    let shots: Vec<u64> = records
        .iter()
        .map(|r| r.iter().map(CountsRecord::shots).sum())
        .collect();
    let tables = [
        counts_to_table(&records[0])?,
        counts_to_table(&records[1])?,
        counts_to_table(&records[2])?,
    ];
    let eval = evaluate_tables(tables)?;
    let f = eval.fidelities;
    let (reconstruction, _) = ReconstructionSection::from_fidelities(&f)?;
    let report = Report {
        format_version: FORMAT_VERSION,
        fidelities: FidelitySection {
            f1: f.f1,
            f2: f.f2,
            f3: f.f3,
            standard_errors: PerFidelity {
                f1: binomial_standard_error(f.f1, shots[0]),
                f2: binomial_standard_error(f.f2, shots[1]),
                f3: binomial_standard_error(f.f3, shots[2]),
            },
            shots: PerFidelity {
                f1: shots[0],
                f2: shots[1],
                f3: shots[2],
            },
        },
        sum: f.sum(),
        parallelism_number: f.parallelism_number(),
        criterion_met: f.criterion_met(),
        p_e_estimate: p_e_estimate(&f, equality_tol),
        concurrence: ConcurrenceSection {
            bound_from_fidelities: bound_from_fidelities(&f),
            bound_from_correlations: None,
        },
        tables: FidelityKind::ALL
            .iter()
            .zip(eval.tables.iter())
            .map(|(k, t)| TableSection::new(*k, t))
            .collect(),
        channel_reconstruction: reconstruction,
    };
    Ok((report, warnings))
}

/// Real and imaginary parts of a complex matrix, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrixJson {
    pub convention: String,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl ComplexMatrixJson {
    pub fn from_mat16(m: &Mat16, convention: &str) -> Self {
        let rows = |f: fn(&crate::algebra::C64) -> f64| {
            (0..16)
                .map(|r| (0..16).map(|c| f(&m[(r, c)])).collect())
                .collect()
        };
        ComplexMatrixJson {
            convention: convention.to_string(),
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }
}

pub const SUPEROP_CONVENTION: &str =
    "16x16 map on column-stacked 4x4 density matrices; entry (r,c) of rho at index c*4+r; qubit one is the left tensor factor";
pub const CHOI_CONVENTION: &str =
    "sum_ij |i><j| (input) tensor S(|i><j|) (output); unnormalized";

/// Reconstructed channel for a given fidelity triple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub format_version: u64,
    pub fidelities: FidelityTriple,
    pub coefficients: ExpansionCoefficients,
    pub is_cp: bool,
    pub is_tp: bool,
    pub min_choi_eigenvalue: f64,
    pub criterion_met: bool,
    pub bound_from_fidelities: f64,
    pub bound_from_correlations: f64,
    pub superoperator: ComplexMatrixJson,
    pub choi: ComplexMatrixJson,
}

impl ChannelFile {
    pub fn build(f: &FidelityTriple) -> Result<Self> {
        let map = reconstruct_from_fidelities(f)?;
        let min = map.min_choi_eigenvalue();
        let corr = output_correlations(&map)?;
        Ok(ChannelFile {
            format_version: FORMAT_VERSION,
            fidelities: *f,
            coefficients: ExpansionCoefficients::from_fidelities(f),
            is_cp: min >= -PHYSICAL_TOL,
            is_tp: map.is_tp(PHYSICAL_TOL),
            min_choi_eigenvalue: min,
            criterion_met: f.criterion_met(),
            bound_from_fidelities: bound_from_fidelities(f),
            bound_from_correlations: bound_from_correlations(&corr),
            superoperator: ComplexMatrixJson::from_mat16(map.matrix(), SUPEROP_CONVENTION),
            choi: ComplexMatrixJson::from_mat16(&map.choi(), CHOI_CONVENTION),
        })
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{superop, werner_mixture, ChannelName};
    use crate::sampling::sample_canonical;
    use proptest::prelude::*;

    fn simulated(s: &SuperOperator, shots: u64, seed: u64) -> CountsFile {
        let recs = sample_canonical(s, shots, seed).unwrap();
        let settings = BasisSetting::CANONICAL
            .iter()
            .zip(recs.iter())
            .map(|(st, r)| SettingCounts::from_records(*st, r))
            .collect();
        let mut meta = BTreeMap::new();
        meta.insert("synthetic".to_string(), Value::Bool(true));
        CountsFile::new(meta, settings)
    }

    #[test]
    fn ideal_gate_counts_give_unit_fidelities() {
        let file = simulated(&superop(ChannelName::Cnot), 50, 1);
        let text = file.to_json_string().unwrap();
        let parsed = CountsFile::from_json_str(&text).unwrap();
        assert_eq!(parsed, file);
        let (report, warnings) = evaluate_counts(&parsed, 0.01).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(report.fidelity_triple(), FidelityTriple { f1: 1.0, f2: 1.0, f3: 1.0 });
        assert!(report.criterion_met);
        assert!(report.channel_reconstruction.is_cp);
        assert_eq!(report.fidelities.standard_errors.f1, 0.0);
        assert!(report.is_consistent());
    }

    #[test]
    fn report_fields() {
        let file = simulated(&werner_mixture(0.5).unwrap(), 2000, 3);
        let (report, _) = evaluate_counts(&file, 0.05).unwrap();
        let f = report.fidelity_triple();
        assert_eq!(report.fidelities.shots.f3, 8000);
        let se = (f.f1 * (1.0 - f.f1) / 8000.0).sqrt();
        assert!((report.fidelities.standard_errors.f1 - se).abs() < 1e-15);
        assert!(report.p_e_estimate.value.is_some());
        assert_eq!(report.tables.len(), 3);
        assert_eq!(report.tables[2].output_basis, [Pauli::Y, Pauli::Y]);
        assert!((report.concurrence.bound_from_fidelities - (f.sum() - 2.0)).abs() < 1e-15);
        assert!(report.concurrence.bound_from_correlations.is_none());
        let c = report.channel_reconstruction.coefficients;
        assert!((c.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_setting_is_named() {
        let mut file = simulated(&superop(ChannelName::Cnot), 10, 1);
        file.settings.remove(1);
        let err = evaluate_counts(&file, 0.01).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("XX|XX"), "{msg}");
        assert!(err.is_io_or_schema());
    }

    #[test]
    fn extra_settings_warn() {
        let mut file = simulated(&superop(ChannelName::Cnot), 10, 1);
        let mut extra = file.settings[0].clone();
        extra.output_basis = [Pauli::X, Pauli::Z];
        file.settings.push(extra);
        let (_, warnings) = evaluate_counts(&file, 0.01).unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("XZ|ZZ"));
    }

    #[test]
    fn schema_errors_carry_paths() {
        let file = simulated(&superop(ChannelName::Cnot), 10, 1);
        let text = file.to_json_string().unwrap();
        let negative = text.replacen("\"00\": 10", "\"00\": -3", 1);
        let err = CountsFile::from_json_str(&negative).unwrap_err().to_string();
        assert!(err.contains("negative count -3") && err.contains("$.settings[0].records[0].counts.00"), "{err}");

        let bad_basis = text.replacen("\"Z\"", "\"I\"", 1);
        let err = CountsFile::from_json_str(&bad_basis).unwrap_err().to_string();
        assert!(err.contains("input_basis[0]"), "{err}");

        let version = text.replacen("\"format_version\": 1", "\"format_version\": 2", 1);
        assert!(CountsFile::from_json_str(&version).is_err());

        let not_bool = text.replacen("\"synthetic\": true", "\"synthetic\": \"yes\"", 1);
        assert!(CountsFile::from_json_str(&not_bool).unwrap_err().to_string().contains("synthetic"));
    }

    #[test]
    fn renamed_keys_are_named() {
        let file = simulated(&superop(ChannelName::Cnot), 10, 1);
        let text = file.to_json_string().unwrap();
        let keys = [
            "format_version",
            "metadata",
            "synthetic",
            "settings",
            "input_basis",
            "output_basis",
            "records",
            "input",
            "counts",
            "00",
            "01",
            "10",
            "11",
        ];
        for key in keys {
            let quoted = format!("\"{key}\":");
            let mutated = text.replacen(&quoted, &format!("\"{key}_renamed\":"), 1);
            assert_ne!(mutated, text, "{key} not found");
            let err = CountsFile::from_json_str(&mutated)
                .and_then(|f| evaluate_counts(&f, 0.01).map(|_| ()))
                .unwrap_err();
            assert!(err.to_string().contains(&format!("`{key}`")), "{key}: {err}");
        }
    }

    #[test]
    fn zero_shot_row_is_rejected() {
        let mut file = simulated(&superop(ChannelName::Cnot), 10, 1);
        for v in file.settings[2].records[1].counts.values_mut() {
            *v = 0;
        }
        let err = evaluate_counts(&file, 0.01).unwrap_err().to_string();
        assert!(err.contains("zero shots"), "{err}");
    }

    #[test]
    fn channel_file_for_ideal_and_dephasing() {
        let ideal = ChannelFile::build(&FidelityTriple::new(1.0, 1.0, 1.0).unwrap()).unwrap();
        assert!(ideal.is_cp && ideal.is_tp && ideal.criterion_met);
        assert!((ideal.bound_from_correlations - 1.0).abs() < 1e-12);
        let cnot = superop(ChannelName::Cnot);
        for r in 0..16 {
            for c in 0..16 {
                assert!((ideal.superoperator.re[r][c] - cnot.matrix()[(r, c)].re).abs() < 1e-12);
            }
        }
        let d = ChannelFile::build(&FidelityTriple::new(0.5, 0.5, 0.5).unwrap()).unwrap();
        assert_eq!(d.coefficients.dephase, 1.0);
        assert!(ChannelFile::build(&FidelityTriple { f1: 1.5, f2: 0.5, f3: 0.5 }).is_err());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"second");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    proptest! {
        #[test]
        fn counts_files_round_trip(counts in proptest::collection::vec(0u64..1000, 48), synthetic in any::<bool>()) {
            let settings = BasisSetting::CANONICAL
                .iter()
                .enumerate()
                .map(|(k, st)| {
                    let recs: Vec<CountsRecord> = LABELS
                        .into_iter()
                        .map(|i| {
                            let base = k * 16 + i as usize * 4;
                            let mut c = [counts[base], counts[base + 1], counts[base + 2], counts[base + 3]];
                            c[0] += 1;
                            CountsRecord { setting: *st, input: i, counts: c }
                        })
                        .collect();
                    SettingCounts::from_records(*st, &recs)
                })
                .collect();
            let mut meta = BTreeMap::new();
            meta.insert("synthetic".to_string(), Value::Bool(synthetic));
            let file = CountsFile::new(meta, settings);
            let back = CountsFile::from_json_str(&file.to_json_string().unwrap()).unwrap();
            prop_assert_eq!(&back, &file);
            let (report, _) = evaluate_counts(&back, 0.01).unwrap();
            prop_assert!(report.is_consistent());
        }
    }
}
