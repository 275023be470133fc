use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum System {
    #[serde(rename = "CC")]
    Cc,
    #[serde(rename = "CC+EcoScapes")]
    CcEcoScapes,
    EcoScapes,
}

impl System {
    pub const ALL: [System; 3] = [System::Cc, System::CcEcoScapes, System::EcoScapes];

    pub fn as_str(self) -> &'static str {
        match self {
            System::Cc => "CC",
            System::CcEcoScapes => "CC+EcoScapes",
            System::EcoScapes => "EcoScapes",
        }
    }

    /// What this system's output is graded as.
    pub fn target(self) -> RubricTarget {
        match self {
            System::EcoScapes => RubricTarget::EcoScapesReport,
            System::Cc | System::CcEcoScapes => RubricTarget::AdaptationStrategy,
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for System {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        System::ALL
            .into_iter()
            .find(|x| x.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown system {s:?} (expected CC, CC+EcoScapes or EcoScapes)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Criterion {
    Correctness,
    DepthCoverage,
    Usability,
    Relevancy,
}

impl Criterion {
    pub const ALL: [Criterion; 4] = [
        Criterion::Correctness,
        Criterion::DepthCoverage,
        Criterion::Usability,
        Criterion::Relevancy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::Correctness => "Correctness",
            Criterion::DepthCoverage => "DepthCoverage",
            Criterion::Usability => "Usability",
            Criterion::Relevancy => "Relevancy",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Criterion {
    type Err = String;

    /// Case-insensitive; `depth-coverage` and `depth_coverage` are accepted too.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let folded: String = s
            .trim()
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .collect();
        Criterion::ALL
            .into_iter()
            .find(|x| x.as_str().eq_ignore_ascii_case(&folded))
            .ok_or_else(|| format!("unknown criterion {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RubricTarget {
    EcoScapesReport,
    AdaptationStrategy,
}

pub const MAX_SCORE: u8 = 5;

/// One criterion with the description of each level 0..=5.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriterionScale {
    pub criterion: Criterion,
    pub levels: [&'static str; 6],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rubric {
    pub target: RubricTarget,
    pub criteria: Vec<CriterionScale>,
}

impl Rubric {
    pub fn for_target(target: RubricTarget) -> Self {
        let criteria = match target {
            RubricTarget::EcoScapesReport => vec![
                CriterionScale {
                    criterion: Criterion::Correctness,
                    levels: [
                        "Massive mistakes",
                        "Major mistakes in one part of the analysis",
                        "Medium mistakes",
                        "Many smaller mistakes",
                        "Few smaller mistakes",
                        "No mistakes",
                    ],
                },
                CriterionScale {
                    criterion: Criterion::DepthCoverage,
                    levels: [
                        "Skips most sections or gives too vague info",
                        "Skips a major section like water and flood management when needed for the city",
                        "Covers all important sections, but omits key details",
                        "Covers all important sections, medium depth",
                        "Covers all important sections, some vagueness",
                        "Detailed coverage of all important sections",
                    ],
                },
            ],
            RubricTarget::AdaptationStrategy => vec![
                CriterionScale {
                    criterion: Criterion::Usability,
                    levels: [
                        "Output is too vague or generic to be helpful",
                        "Output presents general suggestions with little detail",
                        "Output gives basic, practical suggestions but lacks creativity",
                        "Output is detailed but lacks practical aspects",
                        "Output is detailed with some alterations needed",
                        "Output is detailed, creative, and practical",
                    ],
                },
                CriterionScale {
                    criterion: Criterion::Correctness,
                    levels: [
                        "Output contains misinformation",
                        "Major factual errors",
                        "Several significant factual inaccuracies",
                        "Some minor inaccuracies",
                        "Mostly factually correct, with only small details wrong",
                        "Fully accurate",
                    ],
                },
                CriterionScale {
                    criterion: Criterion::Relevancy,
                    levels: [
                        "Entirely ignores the local context",
                        "Mostly irrelevant to the local context",
                        "Partially relevant or vague answers",
                        "Generally relevant, but hard to implement",
                        "Mostly relevant with only minor mismatches",
                        "Perfectly aligned with the local context",
                    ],
                },
            ],
        };
        Self { target, criteria }
    }

    pub fn has(&self, c: Criterion) -> bool {
        self.criteria.iter().any(|s| s.criterion == c)
    }

    pub fn describe(&self, c: Criterion, value: u8) -> Option<&'static str> {
        self.criteria
            .iter()
            .find(|s| s.criterion == c)
            .and_then(|s| s.levels.get(usize::from(value)).copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criteria_sets_are_fixed() {
        let report = Rubric::for_target(RubricTarget::EcoScapesReport);
        let strategy = Rubric::for_target(RubricTarget::AdaptationStrategy);
        let names = |r: &Rubric| r.criteria.iter().map(|s| s.criterion).collect::<Vec<_>>();
        assert_eq!(
            names(&report),
            [Criterion::Correctness, Criterion::DepthCoverage]
        );
        assert_eq!(
            names(&strategy),
            [
                Criterion::Usability,
                Criterion::Correctness,
                Criterion::Relevancy
            ]
        );
        assert_eq!(
            report.describe(Criterion::Correctness, 5),
            Some("No mistakes")
        );
        assert_eq!(report.describe(Criterion::Correctness, 6), None);
    }

    #[test]
    fn names_round_trip() {
        for s in System::ALL {
            assert_eq!(s.as_str().parse::<System>().unwrap(), s);
        }
        for c in Criterion::ALL {
            assert_eq!(c.as_str().parse::<Criterion>().unwrap(), c);
        }
        assert_eq!(
            "cc+ecoscapes".parse::<System>().unwrap(),
            System::CcEcoScapes
        );
        assert_eq!(
            "depth-coverage".parse::<Criterion>().unwrap(),
            Criterion::DepthCoverage
        );
        assert!("ChatGPT".parse::<System>().is_err());
        assert!("depth".parse::<Criterion>().is_err());
    }
}
