//! Instance files (`.csq`) and run-result logs (`.runs`).
//!
//! The instance grammar follows the classic public car-sequencing
//! benchmark layout, whitespace-separated:
//!
//! ```text
//! D O K
//! p_1 ... p_O
//! q_1 ... q_O
//! 0 d_1 r_11 ... r_1O        (K class lines, 0-indexed class ids in order)
//! ...
//! ```
//!
//! Lines starting with `#` are comments, with three directives: `# name:`
//! carries the instance name, and the literal markers `#A` / `#B` introduce
//! optional O x D penalty blocks (over- and under-assignment weights,
//! row-major, one row per option). Absent blocks default to `a = 1`,
//! `b = 0`. Published CSPLib-style files therefore load unmodified.
//!
//! Result logs hold one record per line as `key=value` fields in fixed
//! order; numbers print with full round-trip precision, so rewriting a log
//! is byte-stable.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::core::{objective_gap, CoreError, Instance};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: instance invariant violated: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: CoreError,
    },
    #[error("unexpected end of input: {expecting}")]
    UnexpectedEof { expecting: String },
    #[error("field may not contain whitespace or '=': {value:?}")]
    UnescapableField { value: String },
}

fn malformed(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Malformed { line, message: message.into() }
}

/// Numbered, comment-stripped token lines.
struct Lines<'a> {
    rows: Vec<(usize, &'a str)>,
    next: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let rows = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        Lines { rows, next: 0 }
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.rows.get(self.next).copied()
    }

    fn advance(&mut self) {
        self.next += 1;
    }

    /// Next non-comment line, or an EOF error naming what was expected.
    fn next_data(&mut self, expecting: &str) -> Result<(usize, &'a str), FormatError> {
        loop {
            match self.peek() {
                None => {
                    return Err(FormatError::UnexpectedEof { expecting: expecting.to_string() })
                }
                Some((_, l)) if l.starts_with('#') => self.advance(),
                Some(row) => {
                    self.advance();
                    return Ok(row);
                }
            }
        }
    }

    /// Scans comment lines for directives before the next data line.
    fn take_directive(&mut self, key: &str) -> Option<String> {
        let mut i = self.next;
        while let Some(&(_, l)) = self.rows.get(i) {
            if !l.starts_with('#') {
                return None;
            }
            if let Some(rest) = l.strip_prefix(key) {
                return Some(rest.trim().to_string());
            }
            i += 1;
        }
        None
    }

    /// Positions the cursor after an `#A`/`#B` style marker if it is the
    /// next marker-comment; returns whether it was found.
    fn take_marker(&mut self, marker: &str) -> bool {
        while let Some((_, l)) = self.peek() {
            if l == marker {
                self.advance();
                return true;
            }
            if l.starts_with('#') {
                self.advance();
                continue;
            }
            return false;
        }
        false
    }
}

fn parse_counts(line: usize, text: &str, expect: usize, what: &str) -> Result<Vec<usize>, FormatError> {
    let values: Result<Vec<usize>, _> = text.split_whitespace().map(usize::from_str).collect();
    let values = values.map_err(|e| malformed(line, format!("bad {what}: {e}")))?;
    if values.len() != expect {
        return Err(malformed(line, format!("expected {expect} {what} values, found {}", values.len())));
    }
    Ok(values)
}

fn parse_floats(line: usize, text: &str, expect: usize, what: &str) -> Result<Vec<f64>, FormatError> {
    let values: Result<Vec<f64>, _> = text.split_whitespace().map(f64::from_str).collect();
    let values = values.map_err(|e| malformed(line, format!("bad {what}: {e}")))?;
    if values.len() != expect {
        return Err(malformed(line, format!("expected {expect} {what} values, found {}", values.len())));
    }
    Ok(values)
}

/// Parses an instance from the `.csq` grammar, validating every data-model
/// invariant (demand total, window rules, distinct class vectors).
pub fn parse_instance(text: &str) -> Result<Instance, FormatError> {
    let mut lines = Lines::new(text);
    let name = lines.take_directive("# name:").unwrap_or_default();

    let (hline, header) = lines.next_data("header line `D O K`")?;
    let header = parse_counts(hline, header, 3, "header")?;
    let (d, o, k) = (header[0], header[1], header[2]);
    if d == 0 || o == 0 || k == 0 {
        return Err(malformed(hline, format!("header D={d} O={o} K={k}: all must be positive")));
    }

    let (pline, ptext) = lines.next_data("capacity line p_1..p_O")?;
    let capacity = parse_counts(pline, ptext, o, "capacity")?;
    let (qline, qtext) = lines.next_data("window line q_1..q_O")?;
    let window = parse_counts(qline, qtext, o, "window")?;
    for j in 0..o {
        if capacity[j] > window[j] {
            return Err(malformed(qline.max(pline), format!("option {j}: p={} > q={}", capacity[j], window[j])));
        }
    }

    let mut demand = Vec::with_capacity(k);
    let mut requires = Vec::with_capacity(k);
    let mut last_line = qline;
    for class in 0..k {
        let (cline, ctext) = lines.next_data("class line")?;
        last_line = cline;
        let values = parse_counts(cline, ctext, o + 2, "class line")?;
        if values[0] != class {
            return Err(malformed(cline, format!("class index {} out of order, expected {class}", values[0])));
        }
        demand.push(values[1]);
        let row: Result<Vec<bool>, FormatError> = values[2..]
            .iter()
            .map(|&v| match v {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(malformed(cline, format!("requirement flag must be 0 or 1, found {other}"))),
            })
            .collect();
        requires.push(row?);
    }

    let total: usize = demand.iter().sum();
    if total != d {
        return Err(malformed(last_line, format!("class demands sum to {total}, header declares {d} cars")));
    }

    let mut over = vec![vec![1.0; d]; o];
    let mut under = vec![vec![0.0; d]; o];
    for (marker, matrix) in [("#A", &mut over), ("#B", &mut under)] {
        if lines.take_marker(marker) {
            for row in matrix.iter_mut() {
                let (wline, wtext) = lines.next_data(&format!("{marker} penalty row"))?;
                *row = parse_floats(wline, wtext, d, "penalty")?;
            }
        }
    }

    let mut inst =
        Instance::with_penalties(name, demand, requires, capacity, window, over, under)
            .map_err(|source| FormatError::Invalid { line: last_line, source })?;
    if inst.name().is_empty() {
        inst.set_name("");
    }
    Ok(inst)
}

/// Serialises an instance so that [`parse_instance`] reconstructs it
/// exactly, including penalty weights when they differ from the defaults.
pub fn write_instance(inst: &Instance) -> String {
    let mut out = String::new();
    if !inst.name().is_empty() {
        let _ = writeln!(out, "# name: {}", inst.name());
    }
    let _ = writeln!(out, "{} {} {}", inst.num_cars(), inst.num_options(), inst.num_classes());
    let join = |values: &[usize]| {
        values.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
    };
    let _ = writeln!(out, "{}", join(inst.capacities()));
    let _ = writeln!(out, "{}", join(inst.window_lens()));
    for class in 0..inst.num_classes() {
        let flags: Vec<String> = (0..inst.num_options())
            .map(|j| if inst.requires(class, j) { "1".into() } else { "0".into() })
            .collect();
        let _ = writeln!(out, "{} {} {}", class, inst.demand()[class], flags.join(" "));
    }
    if !inst.has_default_penalties() {
        out.push_str("#A\n");
        for j in 0..inst.num_options() {
            let row: Vec<String> =
                (1..=inst.num_cars()).map(|t| format_float(inst.over_penalty(j, t))).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out.push_str("#B\n");
        for j in 0..inst.num_options() {
            let row: Vec<String> =
                (1..=inst.num_cars()).map(|t| format_float(inst.under_penalty(j, t))).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}

/// Shortest decimal text that parses back to the identical f64.
fn format_float(v: f64) -> String {
    format!("{v}")
}

/// The six solver configurations compared by the suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Exact,
    Lazy,
    Lraco,
    Lns10,
    LnsLcm,
    Adaptive,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Exact,
        Algorithm::Lazy,
        Algorithm::Lraco,
        Algorithm::Lns10,
        Algorithm::LnsLcm,
        Algorithm::Adaptive,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Algorithm::Exact => "EXACT",
            Algorithm::Lazy => "LAZY",
            Algorithm::Lraco => "LRACO",
            Algorithm::Lns10 => "LNS10",
            Algorithm::LnsLcm => "LNSLCM",
            Algorithm::Adaptive => "ADAPTIVE",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    /// Accepts the canonical token plus common aliases (`mip`, `10-lns`,
    /// `lcm-lns`, `adaptive-lns`), case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "EXACT" | "MIP" => Ok(Algorithm::Exact),
            "LAZY" => Ok(Algorithm::Lazy),
            "LRACO" | "LR-ACO" => Ok(Algorithm::Lraco),
            "LNS10" | "10-LNS" => Ok(Algorithm::Lns10),
            "LNSLCM" | "LCM-LNS" => Ok(Algorithm::LnsLcm),
            "ADAPTIVE" | "ADAPTIVE-LNS" => Ok(Algorithm::Adaptive),
            other => Err(format!("unknown algorithm {other:?}")),
        }
    }
}

/// One solver run on one instance, as stored in `.runs` logs.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub instance_name: String,
    pub algorithm: Algorithm,
    pub objective: f64,
    pub lower_bound: f64,
    pub bound_certified: bool,
    pub gap: f64,
    pub wall_seconds: f64,
    pub seed: u64,
    pub config_digest: String,
}

impl ResultRecord {
    /// Recomputes the stored gap from the record's own bound. Standalone
    /// `solve` records satisfy this; experiment records carry a gap against
    /// the best bound over all runs instead.
    pub fn own_gap(&self) -> Result<f64, CoreError> {
        objective_gap(self.objective, self.lower_bound.max(0.0))
    }
}

const RECORD_KEYS: [&str; 9] = [
    "instance",
    "alg",
    "objective",
    "lower_bound",
    "certified",
    "gap",
    "wall_seconds",
    "seed",
    "config",
];

fn check_field(value: &str) -> Result<(), FormatError> {
    if value.is_empty() || value.contains(char::is_whitespace) || value.contains('=') {
        return Err(FormatError::UnescapableField { value: value.to_string() });
    }
    Ok(())
}

/// Writes records as one `key=value` line each, append-safe.
pub fn write_results(records: &[ResultRecord]) -> Result<String, FormatError> {
    let mut out = String::new();
    for r in records {
        out.push_str(&write_record(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_record(r: &ResultRecord) -> Result<String, FormatError> {
    check_field(&r.instance_name)?;
    check_field(&r.config_digest)?;
    Ok(format!(
        "instance={} alg={} objective={} lower_bound={} certified={} gap={} wall_seconds={} seed={} config={}",
        r.instance_name,
        r.algorithm,
        format_float(r.objective),
        format_float(r.lower_bound),
        r.bound_certified,
        format_float(r.gap),
        format_float(r.wall_seconds),
        r.seed,
        r.config_digest
    ))
}

/// Parses a `.runs` log produced by [`write_results`].
pub fn read_results(text: &str) -> Result<Vec<ResultRecord>, FormatError> {
    let mut records = Vec::new();
    for (line_index, line) in text.lines().enumerate() {
        let line_no = line_index + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != RECORD_KEYS.len() {
            return Err(malformed(line_no, format!("expected {} fields, found {}", RECORD_KEYS.len(), fields.len())));
        }
        let mut values = Vec::with_capacity(RECORD_KEYS.len());
        for (field, key) in fields.iter().zip(RECORD_KEYS) {
            match field.split_once('=') {
                Some((k, v)) if k == key => values.push(v),
                _ => return Err(malformed(line_no, format!("expected field {key}=..., found {field:?}"))),
            }
        }
        let parse_f = |i: usize, what: &str| -> Result<f64, FormatError> {
            values[i].parse().map_err(|e| malformed(line_no, format!("bad {what}: {e}")))
        };
        records.push(ResultRecord {
            instance_name: values[0].to_string(),
            algorithm: values[1].parse().map_err(|e| malformed(line_no, e))?,
            objective: parse_f(2, "objective")?,
            lower_bound: parse_f(3, "lower_bound")?,
            bound_certified: values[4]
                .parse()
                .map_err(|e| malformed(line_no, format!("bad certified flag: {e}")))?,
            gap: parse_f(5, "gap")?,
            wall_seconds: parse_f(6, "wall_seconds")?,
            seed: values[7].parse().map_err(|e| malformed(line_no, format!("bad seed: {e}")))?,
            config_digest: values[8].to_string(),
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e4() -> Instance {
        Instance::new("e4", vec![2, 2], vec![vec![true], vec![false]], vec![1], vec![2]).unwrap()
    }

    #[test]
    fn e4_round_trips() {
        let inst = e4();
        let text = write_instance(&inst);
        let parsed = parse_instance(&text).unwrap();
        assert_eq!(parsed, inst);
        assert_eq!(parsed.num_cars(), 4);
        assert_eq!(parsed.num_options(), 1);
        assert_eq!(parsed.num_classes(), 2);
    }

    #[test]
    fn classic_layout_without_directives_parses() {
        let text = "4 1 2\n1\n2\n0 2 1\n1 2 0\n";
        let inst = parse_instance(text).unwrap();
        assert_eq!(inst.name(), "");
        assert_eq!(inst.num_cars(), 4);
        assert!(inst.requires(0, 0));
        assert!(!inst.requires(1, 0));
    }

    #[test]
    fn zero_cars_is_rejected() {
        let err = parse_instance("0 1 1\n1\n2\n0 0 1\n").unwrap_err();
        assert!(matches!(err, FormatError::Malformed { line: 1, .. }), "{err}");
    }

    #[test]
    fn demand_mismatch_is_rejected() {
        let text = "4 1 2\n1\n2\n0 2 1\n1 1 0\n";
        let err = parse_instance(text).unwrap_err();
        assert!(err.to_string().contains("sum to 3"), "{err}");
    }

    #[test]
    fn p_above_q_is_rejected() {
        let text = "4 1 2\n2\n1\n0 2 1\n1 2 0\n";
        let err = parse_instance(text).unwrap_err();
        assert!(err.to_string().contains("p=2 > q=1"), "{err}");
    }

    #[test]
    fn duplicate_class_rows_are_rejected() {
        let text = "4 1 2\n1\n2\n0 2 1\n1 2 1\n";
        let err = parse_instance(text).unwrap_err();
        assert!(matches!(err, FormatError::Invalid { .. }), "{err}");
    }

    #[test]
    fn out_of_order_class_index_is_rejected() {
        let text = "4 1 2\n1\n2\n1 2 1\n0 2 0\n";
        let err = parse_instance(text).unwrap_err();
        assert!(err.to_string().contains("out of order"), "{err}");
    }

    #[test]
    fn penalties_round_trip_bit_exactly() {
        let over = vec![vec![0.125, 1.5e-3, 2.0, 0.7000000000000001]];
        let under = vec![vec![0.0, 0.1, 0.30000000000000004, 9.0]];
        let inst = Instance::with_penalties(
            "weighted",
            vec![2, 2],
            vec![vec![true], vec![false]],
            vec![1],
            vec![2],
            over,
            under,
        )
        .unwrap();
        let parsed = parse_instance(&write_instance(&inst)).unwrap();
        assert_eq!(parsed, inst);
    }

    #[test]
    fn results_round_trip() {
        let records = vec![
            ResultRecord {
                instance_name: "e4".into(),
                algorithm: Algorithm::Exact,
                objective: 1.0,
                lower_bound: 1.0,
                bound_certified: true,
                gap: 0.0,
                wall_seconds: 0.25,
                seed: 42,
                config_digest: "abcd1234".into(),
            },
            ResultRecord {
                instance_name: "nobhiu-100-0".into(),
                algorithm: Algorithm::Adaptive,
                objective: 17.0,
                lower_bound: 3.5,
                bound_certified: false,
                gap: 0.7941176470588235,
                wall_seconds: 10.0,
                seed: 7,
                config_digest: "ffee".into(),
            },
        ];
        let text = write_results(&records).unwrap();
        assert_eq!(read_results(&text).unwrap(), records);
        assert_eq!(read_results("").unwrap(), Vec::new());
    }

    #[test]
    fn malformed_record_names_line() {
        let text = "instance=a alg=EXACT objective=1\n";
        let err = read_results(text).unwrap_err();
        assert!(err.to_string().starts_with("line 1:"), "{err}");
    }

    #[test]
    fn whitespace_in_name_is_refused() {
        let record = ResultRecord {
            instance_name: "has space".into(),
            algorithm: Algorithm::Exact,
            objective: 0.0,
            lower_bound: 0.0,
            bound_certified: true,
            gap: 0.0,
            wall_seconds: 0.0,
            seed: 0,
            config_digest: "d".into(),
        };
        assert!(write_record(&record).is_err());
    }
}
