//! The fourteen static instance features.
//!
//! Option utilisation follows the minimum-accommodating-sequence
//! definition: `mu(t) = q*((t-1) div p) + ((t-1) mod p) + 1` is the
//! shortest sequence length that can host `t` cars requiring an option
//! with rule `(p, q)`, and the utilisation of the option is `mu(T)/D`
//! where `T` is the total demand of classes requiring it. A utilisation
//! above 1 means the demand cannot be hosted without violations.
//!
//! All standard deviations are population standard deviations (divide by
//! the count, not `count - 1`).

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::core::Instance;

/// Names of the fourteen features, in canonical column order.
pub const FEATURE_NAMES: [&str; 14] = [
    "num_cars",
    "num_options",
    "num_classes",
    "usage_min",
    "usage_ave",
    "usage_max",
    "usage_std",
    "ave_ops",
    "pq_min",
    "pq_ave",
    "pq_max",
    "pq_std",
    "lcm_q",
    "classpop_std",
];

/// The fourteen features of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub instance_name: String,
    pub num_cars: usize,
    pub num_options: usize,
    pub num_classes: usize,
    pub usage_min: f64,
    pub usage_ave: f64,
    pub usage_max: f64,
    pub usage_std: f64,
    /// Mean options per class divided by the option count, in [0, 1].
    pub ave_ops: f64,
    pub pq_min: f64,
    pub pq_ave: f64,
    pub pq_max: f64,
    pub pq_std: f64,
    pub lcm_q: u128,
    pub classpop_std: f64,
}

impl FeatureVector {
    /// Values in [`FEATURE_NAMES`] order.
    pub fn values(&self) -> [f64; 14] {
        [
            self.num_cars as f64,
            self.num_options as f64,
            self.num_classes as f64,
            self.usage_min,
            self.usage_ave,
            self.usage_max,
            self.usage_std,
            self.ave_ops,
            self.pq_min,
            self.pq_ave,
            self.pq_max,
            self.pq_std,
            self.lcm_q as f64,
            self.classpop_std,
        ]
    }
}

/// Minimum sequence length hosting `t` option cars under rule `(p, q)`.
pub fn min_accommodating_length(p: usize, q: usize, t: usize) -> u128 {
    if t == 0 {
        return 0;
    }
    let groups = ((t - 1) / p) as u128;
    let rest = ((t - 1) % p) as u128;
    q as u128 * groups + rest + 1
}

/// Utilisation of option `j`: fraction of the sequence length minimally
/// needed to host all cars requiring the option; 0 for an unused option.
pub fn option_utilisation(inst: &Instance, option: usize) -> f64 {
    let demand: usize = (0..inst.num_classes())
        .filter(|&i| inst.requires(i, option))
        .map(|i| inst.demand()[i])
        .sum();
    if demand == 0 {
        return 0.0;
    }
    let mu = min_accommodating_length(inst.capacity(option), inst.window_len(option), demand);
    mu as f64 / inst.num_cars() as f64
}

fn population_std(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    var.sqrt()
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u128, b: u128) -> u128 {
    a / gcd(a, b) * b
}

/// Computes all fourteen features. Deterministic and total on valid
/// instances.
pub fn extract(inst: &Instance) -> FeatureVector {
    let o = inst.num_options();
    let k = inst.num_classes();

    let usages: Vec<f64> = (0..o).map(|j| option_utilisation(inst, j)).collect();
    let usage_min = usages.iter().copied().fold(f64::INFINITY, f64::min);
    let usage_max = usages.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let usage_ave = usages.iter().sum::<f64>() / o as f64;

    let ops_per_class: Vec<f64> = (0..k).map(|i| inst.options_of_class(i) as f64).collect();
    let ave_ops = ops_per_class.iter().sum::<f64>() / k as f64 / o as f64;

    let ratios: Vec<f64> =
        (0..o).map(|j| inst.capacity(j) as f64 / inst.window_len(j) as f64).collect();
    let pq_min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let pq_max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pq_ave = ratios.iter().sum::<f64>() / o as f64;

    let lcm_q = (0..o).map(|j| inst.window_len(j) as u128).fold(1u128, lcm);

    let populations: Vec<f64> = inst.demand().iter().map(|&d| d as f64).collect();

    FeatureVector {
        instance_name: inst.name().to_string(),
        num_cars: inst.num_cars(),
        num_options: o,
        num_classes: k,
        usage_min,
        usage_ave,
        usage_max,
        usage_std: population_std(&usages),
        ave_ops,
        pq_min,
        pq_ave,
        pq_max,
        pq_std: population_std(&ratios),
        lcm_q,
        classpop_std: population_std(&populations),
    }
}

#[derive(Debug, Error)]
pub enum FeatureCsvError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("missing header line")]
    MissingHeader,
}

/// Writes the feature table as CSV: `instance_name` plus the fourteen
/// named columns. Comment lines (`#`) may precede the header.
pub fn write_features_csv(rows: &[FeatureVector], comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let _ = writeln!(out, "instance_name,{}", FEATURE_NAMES.join(","));
    for row in rows {
        let values = row.values();
        let mut cells = vec![row.instance_name.clone()];
        for (name, value) in FEATURE_NAMES.iter().zip(values) {
            match *name {
                "num_cars" | "num_options" | "num_classes" | "lcm_q" => {
                    cells.push(format!("{}", value as u128));
                }
                _ => cells.push(format!("{value}")),
            }
        }
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Reads a feature table written by [`write_features_csv`].
pub fn read_features_csv(text: &str) -> Result<Vec<FeatureVector>, FeatureCsvError> {
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (line_index, line) in text.lines().enumerate() {
        let line_no = line_index + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            let expected = format!("instance_name,{}", FEATURE_NAMES.join(","));
            if line != expected {
                return Err(FeatureCsvError::Malformed {
                    line: line_no,
                    message: format!("unexpected header {line:?}"),
                });
            }
            saw_header = true;
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 15 {
            return Err(FeatureCsvError::Malformed {
                line: line_no,
                message: format!("expected 15 cells, found {}", cells.len()),
            });
        }
        let f = |i: usize| -> Result<f64, FeatureCsvError> {
            f64::from_str(cells[i]).map_err(|e| FeatureCsvError::Malformed {
                line: line_no,
                message: format!("bad number in column {}: {e}", FEATURE_NAMES[i - 1]),
            })
        };
        let int = |i: usize| -> Result<u128, FeatureCsvError> {
            u128::from_str(cells[i]).map_err(|e| FeatureCsvError::Malformed {
                line: line_no,
                message: format!("bad integer in column {}: {e}", FEATURE_NAMES[i - 1]),
            })
        };
        rows.push(FeatureVector {
            instance_name: cells[0].to_string(),
            num_cars: int(1)? as usize,
            num_options: int(2)? as usize,
            num_classes: int(3)? as usize,
            usage_min: f(4)?,
            usage_ave: f(5)?,
            usage_max: f(6)?,
            usage_std: f(7)?,
            ave_ops: f(8)?,
            pq_min: f(9)?,
            pq_ave: f(10)?,
            pq_max: f(11)?,
            pq_std: f(12)?,
            lcm_q: int(13)?,
            classpop_std: f(14)?,
        });
    }
    if !saw_header {
        return Err(FeatureCsvError::MissingHeader);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn e4() -> Instance {
        Instance::new("e4", vec![2, 2], vec![vec![true], vec![false]], vec![1], vec![2]).unwrap()
    }

    #[test]
    fn accommodating_length_examples() {
        // p=1, q=2, two cars: positions 1 and 3.
        assert_eq!(min_accommodating_length(1, 2, 2), 3);
        // p equal to q collapses the formula to t.
        for pq in 1..=6 {
            for t in 0..=20 {
                assert_eq!(min_accommodating_length(pq, pq, t), t as u128);
            }
        }
        // p=2, q=3, five cars: 1,2,4,5,7.
        assert_eq!(min_accommodating_length(2, 3, 5), 7);
    }

    #[test]
    fn utilisation_of_unused_option_is_zero() {
        let inst = Instance::new(
            "unused",
            vec![1, 1],
            vec![vec![true, false], vec![false, false]],
            vec![1, 1],
            vec![2, 2],
        )
        .unwrap();
        assert_eq!(option_utilisation(&inst, 1), 0.0);
    }

    #[test]
    fn e4_features_by_hand() {
        let fv = extract(&e4());
        assert_eq!(fv.num_cars, 4);
        assert_eq!(fv.num_options, 1);
        assert_eq!(fv.num_classes, 2);
        assert_abs_diff_eq!(fv.usage_min, 0.75);
        assert_abs_diff_eq!(fv.usage_ave, 0.75);
        assert_abs_diff_eq!(fv.usage_max, 0.75);
        assert_abs_diff_eq!(fv.usage_std, 0.0);
        assert_abs_diff_eq!(fv.ave_ops, 0.5);
        assert_abs_diff_eq!(fv.pq_min, 0.5);
        assert_abs_diff_eq!(fv.pq_ave, 0.5);
        assert_abs_diff_eq!(fv.pq_max, 0.5);
        assert_abs_diff_eq!(fv.pq_std, 0.0);
        assert_eq!(fv.lcm_q, 2);
        assert_abs_diff_eq!(fv.classpop_std, 0.0);
    }

    #[test]
    fn lcm_of_fixed_q_vector() {
        let demand = vec![4, 4, 4, 4, 4];
        let requires = vec![
            vec![true, false, false, false, false],
            vec![false, true, false, false, false],
            vec![false, false, true, false, false],
            vec![false, false, false, true, false],
            vec![false, false, false, false, true],
        ];
        let inst = Instance::new(
            "fixedpq",
            demand,
            requires,
            vec![3, 2, 1, 2, 1],
            vec![4, 3, 4, 5, 2],
        )
        .unwrap();
        assert_eq!(extract(&inst).lcm_q, 60);
    }

    #[test]
    fn single_class_population_std_is_zero() {
        let inst =
            Instance::new("one", vec![5], vec![vec![true]], vec![1], vec![2]).unwrap();
        assert_eq!(extract(&inst).classpop_std, 0.0);
    }

    #[test]
    fn demand_scaling_leaves_structural_features_unchanged() {
        let base = Instance::new(
            "base",
            vec![2, 3],
            vec![vec![true, true], vec![false, true]],
            vec![1, 2],
            vec![2, 3],
        )
        .unwrap();
        let scaled = Instance::new(
            "scaled",
            vec![6, 9],
            vec![vec![true, true], vec![false, true]],
            vec![1, 2],
            vec![2, 3],
        )
        .unwrap();
        let (a, b) = (extract(&base), extract(&scaled));
        assert_eq!(a.num_options, b.num_options);
        assert_eq!(a.num_classes, b.num_classes);
        assert_eq!(a.pq_min, b.pq_min);
        assert_eq!(a.pq_ave, b.pq_ave);
        assert_eq!(a.pq_max, b.pq_max);
        assert_eq!(a.pq_std, b.pq_std);
    }

    #[test]
    fn csv_round_trips() {
        let rows = vec![extract(&e4())];
        let text = write_features_csv(&rows, &["config=deadbeef".into()]);
        let parsed = read_features_csv(&text).unwrap();
        assert_eq!(parsed, rows);
    }
}
