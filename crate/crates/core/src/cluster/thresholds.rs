use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Merge/split passing-rate thresholds as a function of cluster size, for
/// one network size. Knots are piecewise-linear in cluster size and clamp
/// flat beyond the table's range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeTable {
    pub network_size: u64,
    /// (cluster size, threshold) knots, sizes strictly increasing.
    pub split: Vec<(f64, f64)>,
    pub merge: Vec<(f64, f64)>,
}

/// Thresholds resolved for one (cluster size, network size) query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    pub merge: f64,
    pub split: f64,
}

/// Piecewise-linear merge/split threshold tables, optionally stacked along
/// a network-size axis (lookups interpolate between the two bracketing
/// network sizes first).
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdTable {
    tables: Vec<SizeTable>,
}

impl ThresholdTable {
    pub fn new(mut tables: Vec<SizeTable>) -> Result<Self> {
        if tables.is_empty() {
            return Err(Error::InvalidConfig("threshold table is empty".into()));
        }
        tables.sort_by_key(|t| t.network_size);
        for pair in tables.windows(2) {
            if pair[0].network_size == pair[1].network_size {
                return Err(Error::InvalidConfig(format!(
                    "duplicate network size {} in threshold table",
                    pair[0].network_size
                )));
            }
        }
        for t in &tables {
            validate_curve(&t.split, "split")?;
            validate_curve(&t.merge, "merge")?;
            let mut knot_sizes: Vec<f64> = t
                .split
                .iter()
                .chain(t.merge.iter())
                .map(|(s, _)| *s)
                .collect();
            knot_sizes.sort_by(|a, b| a.partial_cmp(b).expect("finite sizes"));
            knot_sizes.dedup();
            for s in knot_sizes {
                let m = interp(&t.merge, s);
                let sp = interp(&t.split, s);
                if m > sp + 1e-12 {
                    return Err(Error::InvalidConfig(format!(
                        "merge threshold {m} exceeds split threshold {sp} at cluster size {s}"
                    )));
                }
            }
        }
        Ok(Self { tables })
    }

    pub fn tables(&self) -> &[SizeTable] {
        &self.tables
    }

    /// Interpolated thresholds for a cluster of `cluster_size` nodes in a
    /// network of `network_size` nodes.
    pub fn lookup(&self, cluster_size: usize, network_size: usize) -> Thresholds {
        let s = cluster_size as f64;
        let n = network_size as f64;
        let at = |t: &SizeTable| Thresholds {
            merge: interp(&t.merge, s),
            split: interp(&t.split, s),
        };
        let first = self.tables.first().expect("non-empty");
        let last = self.tables.last().expect("non-empty");
        if n <= first.network_size as f64 {
            return at(first);
        }
        if n >= last.network_size as f64 {
            return at(last);
        }
        let hi_idx = self
            .tables
            .iter()
            .position(|t| t.network_size as f64 >= n)
            .expect("bracketing table exists");
        let lo = &self.tables[hi_idx - 1];
        let hi = &self.tables[hi_idx];
        let frac = (n - lo.network_size as f64) / (hi.network_size as f64 - lo.network_size as f64);
        let a = at(lo);
        let b = at(hi);
        Thresholds {
            merge: a.merge + frac * (b.merge - a.merge),
            split: a.split + frac * (b.split - a.split),
        }
    }

    /// Parse the JSON document form; accepts either a flat single-network
    /// table or the stacked `network_sizes` form.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TableJson = serde_json::from_str(text)?;
        let tables = match doc.network_sizes {
            None => {
                let split = flat(doc.split, "split")?;
                let merge = flat(doc.merge, "merge")?;
                vec![SizeTable {
                    network_size: 0,
                    split,
                    merge,
                }]
            }
            Some(sizes) => {
                let split = nested(doc.split, sizes.len(), "split")?;
                let merge = nested(doc.merge, sizes.len(), "merge")?;
                sizes
                    .into_iter()
                    .zip(split)
                    .zip(merge)
                    .map(|((network_size, split), merge)| SizeTable {
                        network_size,
                        split,
                        merge,
                    })
                    .collect()
            }
        };
        Self::new(tables)
    }

    pub fn to_json(&self) -> String {
        let doc = TableJson {
            network_sizes: Some(self.tables.iter().map(|t| t.network_size).collect()),
            split: CurveJson::PerNetwork(self.tables.iter().map(|t| t.split.clone()).collect()),
            merge: CurveJson::PerNetwork(self.tables.iter().map(|t| t.merge.clone()).collect()),
        };
        serde_json::to_string_pretty(&doc).expect("threshold table serializes")
    }
}

fn validate_curve(points: &[(f64, f64)], label: &str) -> Result<()> {
    if points.is_empty() {
        return Err(Error::InvalidConfig(format!("{label} curve is empty")));
    }
    for pair in points.windows(2) {
        if pair[0].0 >= pair[1].0 {
            return Err(Error::InvalidConfig(format!(
                "{label} curve sizes must be strictly increasing"
            )));
        }
    }
    if points.iter().any(|(_, t)| !(0.0..=1.0).contains(t)) {
        return Err(Error::InvalidConfig(format!(
            "{label} thresholds must lie in [0,1]"
        )));
    }
    Ok(())
}

fn interp(points: &[(f64, f64)], size: f64) -> f64 {
    let first = points.first().expect("validated non-empty");
    let last = points.last().expect("validated non-empty");
    if size <= first.0 {
        return first.1;
    }
    if size >= last.0 {
        return last.1;
    }
    let hi = points
        .iter()
        .position(|(s, _)| *s >= size)
        .expect("bracketing knot exists");
    let (s0, t0) = points[hi - 1];
    let (s1, t1) = points[hi];
    t0 + (size - s0) / (s1 - s0) * (t1 - t0)
}

#[derive(Serialize, Deserialize)]
struct TableJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    network_sizes: Option<Vec<u64>>,
    split: CurveJson,
    merge: CurveJson,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CurveJson {
    Flat(Vec<(f64, f64)>),
    PerNetwork(Vec<Vec<(f64, f64)>>),
}

fn flat(c: CurveJson, label: &str) -> Result<Vec<(f64, f64)>> {
    match c {
        CurveJson::Flat(v) => Ok(v),
        CurveJson::PerNetwork(_) => Err(Error::InvalidConfig(format!(
            "{label} is nested but network_sizes is absent"
        ))),
    }
}

fn nested(c: CurveJson, expected: usize, label: &str) -> Result<Vec<Vec<(f64, f64)>>> {
    match c {
        CurveJson::PerNetwork(v) if v.len() == expected => Ok(v),
        CurveJson::PerNetwork(v) => Err(Error::InvalidConfig(format!(
            "{label} has {} tables but network_sizes lists {expected}",
            v.len()
        ))),
        CurveJson::Flat(_) => Err(Error::InvalidConfig(format!(
            "{label} must be nested when network_sizes is present"
        ))),
    }
}

/// Grid-derived thresholds shipped with the crate, produced by the
/// calibration pipeline on 8x8 and 16x16 grids (see the CLI's
/// `calibrate-grid` subcommand).
pub fn builtin_2d() -> ThresholdTable {
    ThresholdTable::from_json(include_str!("builtin_2d.json"))
        .expect("embedded threshold table is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ThresholdTable {
        ThresholdTable::new(vec![SizeTable {
            network_size: 256,
            split: vec![(4.0, 0.6), (16.0, 0.4)],
            merge: vec![(4.0, 0.3), (16.0, 0.2)],
        }])
        .unwrap()
    }

    #[test]
    fn midpoint_interpolation() {
        let t = table().lookup(10, 256);
        assert!((t.split - 0.5).abs() < 1e-12);
        assert!((t.merge - 0.25).abs() < 1e-12);
    }

    #[test]
    fn clamps_outside_range() {
        assert_eq!(table().lookup(2, 256).split, 0.6);
        assert_eq!(table().lookup(100, 256).split, 0.4);
    }

    #[test]
    fn exact_knot() {
        assert_eq!(table().lookup(16, 256).split, 0.4);
    }

    #[test]
    fn network_size_axis_interpolates() {
        let t = ThresholdTable::new(vec![
            SizeTable {
                network_size: 64,
                split: vec![(4.0, 0.8)],
                merge: vec![(4.0, 0.4)],
            },
            SizeTable {
                network_size: 256,
                split: vec![(4.0, 0.6)],
                merge: vec![(4.0, 0.2)],
            },
        ])
        .unwrap();
        let mid = t.lookup(4, 160);
        assert!((mid.split - 0.7).abs() < 1e-12);
        assert!((mid.merge - 0.3).abs() < 1e-12);
        assert_eq!(t.lookup(4, 16).split, 0.8);
        assert_eq!(t.lookup(4, 1000).split, 0.6);
    }

    #[test]
    fn rejects_merge_above_split() {
        let bad = ThresholdTable::new(vec![SizeTable {
            network_size: 0,
            split: vec![(4.0, 0.3)],
            merge: vec![(4.0, 0.5)],
        }]);
        assert!(bad.is_err());
    }

    #[test]
    fn json_round_trip_and_flat_form() {
        let t = table();
        let parsed = ThresholdTable::from_json(&t.to_json()).unwrap();
        assert_eq!(t, parsed);

        let flat = r#"{"split": [[4, 0.6], [16, 0.4]], "merge": [[4, 0.3]]}"#;
        let parsed = ThresholdTable::from_json(flat).unwrap();
        assert_eq!(parsed.lookup(16, 999).split, 0.4);
    }

    #[test]
    fn builtin_table_is_valid() {
        let t = builtin_2d();
        let th = t.lookup(16, 256);
        assert!(th.merge <= th.split);
    }

    proptest::proptest! {
        /// Lookup is continuous and monotone along each linear segment.
        #[test]
        fn lookup_is_continuous(size in 1.0f64..300.0) {
            let t = table();
            let eps = 1e-6;
            let a = t.lookup(size as usize, 256);
            let here = interp(&[(4.0, 0.6), (16.0, 0.4)], size);
            let near = interp(&[(4.0, 0.6), (16.0, 0.4)], size + eps);
            proptest::prop_assert!((here - near).abs() < 1e-4);
            proptest::prop_assert!(a.merge <= a.split);
        }
    }
}
