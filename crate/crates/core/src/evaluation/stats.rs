use serde::{Deserialize, Serialize};

use super::rubric::{Criterion, Rubric, System};
use super::store::ScoreStore;
use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumberSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Five-number summary with Tukey hinges as the quartiles.
pub fn summarize(values: &[f64]) -> Result<FiveNumberSummary, EvalError> {
    if values.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    // for odd n the median belongs to both halves
    let half = n.div_ceil(2);
    let (q1, q3) = (median_sorted(&v[..half]), median_sorted(&v[n - half..]));
    Ok(FiveNumberSummary {
        min: v[0],
        q1,
        median: median_sorted(&v),
        q3,
        max: v[n - 1],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSummary {
    pub system: System,
    pub runs: usize,
    pub summary: FiveNumberSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub location: String,
    pub criterion: Criterion,
    pub rows: Vec<SystemSummary>,
}

/// Summaries per system for one location and criterion.
///
/// With `systems` empty, every system graded on `criterion` that has
/// scores for `location` is included.
pub fn compare_systems(
    store: &ScoreStore,
    location: &str,
    criterion: Criterion,
    systems: &[System],
) -> Result<Comparison, EvalError> {
    let eligible: Vec<System> = System::ALL
        .into_iter()
        .filter(|s| Rubric::for_target(s.target()).has(criterion))
        .collect();
    let chosen: Vec<System> = if systems.is_empty() {
        let with_data: Vec<System> = eligible
            .iter()
            .copied()
            .filter(|s| !store.values(location, *s, criterion).is_empty())
            .collect();
        if with_data.is_empty() {
            return Err(EvalError::NoData {
                location: location.into(),
                system: eligible[0],
                criterion,
            });
        }
        with_data
    } else {
        systems.to_vec()
    };
    let rows = chosen
        .into_iter()
        .map(|system| {
            let values: Vec<f64> = store
                .values(location, system, criterion)
                .into_iter()
                .map(f64::from)
                .collect();
            let summary = summarize(&values).map_err(|_| EvalError::NoData {
                location: location.into(),
                system,
                criterion,
            })?;
            Ok(SystemSummary {
                system,
                runs: values.len(),
                summary,
            })
        })
        .collect::<Result<_, EvalError>>()?;
    Ok(Comparison {
        location: location.into(),
        criterion,
        rows,
    })
}

impl Comparison {
    pub fn to_table(&self) -> String {
        let header = ["system", "n", "min", "q1", "median", "q3", "max"];
        let mut rows: Vec<[String; 7]> = vec![header.map(String::from)];
        for r in &self.rows {
            let s = &r.summary;
            rows.push([
                r.system.to_string(),
                r.runs.to_string(),
                fmt_num(s.min),
                fmt_num(s.q1),
                fmt_num(s.median),
                fmt_num(s.q3),
                fmt_num(s.max),
            ]);
        }
        let widths: Vec<usize> = (0..7)
            .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = format!("{} / {}\n", self.location, self.criterion);
        for row in &rows {
            let cells: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, cell)| {
                    if c == 0 {
                        format!("{cell:<w$}", w = widths[c])
                    } else {
                        format!("{cell:>w$}", w = widths[c])
                    }
                })
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("comparison serializes")
    }
}

fn fmt_num(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{x:.0}")
    } else {
        format!("{x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn five(v: &[f64]) -> [f64; 5] {
        let s = summarize(v).unwrap();
        [s.min, s.q1, s.median, s.q3, s.max]
    }

    #[test]
    fn hand_checked_summaries() {
        assert_eq!(five(&[4.0, 5.0, 4.0, 5.0, 5.0]), [4.0, 4.0, 5.0, 5.0, 5.0]);
        assert_eq!(five(&[3.0, 3.0, 4.0, 3.0, 3.0])[2], 3.0);
        assert_eq!(five(&[2.0]), [2.0; 5]);
        // 1 2 | 3 4 -> hinges 1.5, 3.5
        assert_eq!(five(&[4.0, 1.0, 3.0, 2.0]), [1.0, 1.5, 2.5, 3.5, 4.0]);
        // 1 2 [3] 4 5 -> hinges 2, 4
        assert_eq!(five(&[5.0, 4.0, 3.0, 2.0, 1.0]), [1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(five(&[1.0, 9.0, 5.0]), [1.0, 3.0, 5.0, 7.0, 9.0]);
        assert!(matches!(summarize(&[]), Err(EvalError::EmptyInput)));
    }

    #[test]
    fn table_is_aligned() {
        let c = Comparison {
            location: "X".into(),
            criterion: Criterion::Relevancy,
            rows: vec![SystemSummary {
                system: System::CcEcoScapes,
                runs: 5,
                summary: summarize(&[5.0, 4.0]).unwrap(),
            }],
        };
        let t = c.to_table();
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "X / Relevancy");
        assert_eq!(lines[1].find("max").map(|i| i + 3), Some(lines[2].len()));
        assert!(lines[2].contains("4.5"));
    }
}
