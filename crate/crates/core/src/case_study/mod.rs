//! The occupational gender-bias probe.
//!
//! Sentences `<mask> was born [birth period] in [location] and is a/an
//! [occupation].` are encoded as 22-position one-hot vectors (5 birth
//! periods, 9 locations, 8 occupations). A masked language model that fills
//! the mask with `she` labels the example 0, `he` labels it 1.

mod experiment;
mod rules;

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::feature::{FeatureSpace, TabularExample, Value};
use crate::oracle::FixtureTable;

pub use experiment::{
    run_experiment, write_outputs, Aggregate, Cell, ExperimentGrid, ExperimentOutput, MeanStd, RunError, RunRow,
    AGGREGATE_CSV_HEADER, ERRORS_CSV_HEADER, PLOT_CSV_HEADER, RUNS_CSV_HEADER,
};
pub use rules::{rule_frequency, RuleFrequency, RULES_CSV_HEADER};

pub const BIRTH_PERIODS: [&str; 5] = [
    "before 1875",
    "between 1875 and 1925",
    "between 1925 and 1951",
    "between 1951 and 1970",
    "after 1970",
];

pub const LOCATIONS: [&str; 9] = [
    "North America",
    "Africa",
    "Europe",
    "Asia",
    "South America",
    "Oceania",
    "Eurasia",
    "Americas",
    "Australia",
];

pub const OCCUPATIONS: [&str; 8] = [
    "nurse",
    "fashion designer",
    "dancer",
    "footballer",
    "industrialist",
    "boxer",
    "singer",
    "violinist",
];

pub const LOCATION_OFFSET: usize = 5;
pub const OCCUPATION_OFFSET: usize = 14;
pub const NUM_POSITIONS: usize = 22;
pub const NUM_EXAMPLES: usize = 360;

pub const SPACE_CONFIG: &str = include_str!("../../data/case_study_space.toml");

/// Class names: 0 is `she`, 1 is `he`.
pub const CLASS_NAMES: [&str; 2] = ["female", "male"];

/// The bundled 22-feature space.
pub fn feature_space() -> FeatureSpace {
    static SPACE: OnceLock<FeatureSpace> = OnceLock::new();
    SPACE
        .get_or_init(|| FeatureSpace::from_toml_str(SPACE_CONFIG).expect("bundled feature space is valid"))
        .clone()
}

/// Indices into the three value lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sentence {
    pub birth: usize,
    pub location: usize,
    pub occupation: usize,
}

impl Sentence {
    pub fn new(birth: usize, location: usize, occupation: usize) -> Result<Self> {
        if birth >= BIRTH_PERIODS.len() || location >= LOCATIONS.len() || occupation >= OCCUPATIONS.len() {
            return Err(Error::Lookup(format!(
                "sentence indices ({birth}, {location}, {occupation}) out of range"
            )));
        }
        Ok(Sentence {
            birth,
            location,
            occupation,
        })
    }

    pub fn from_names(birth: &str, location: &str, occupation: &str) -> Result<Self> {
        let find = |list: &[&str], name: &str, kind: &str| {
            list.iter()
                .position(|v| *v == name)
                .ok_or_else(|| Error::Lookup(format!("unknown {kind} {name:?}")))
        };
        Ok(Sentence {
            birth: find(&BIRTH_PERIODS, birth, "birth period")?,
            location: find(&LOCATIONS, location, "location")?,
            occupation: find(&OCCUPATIONS, occupation, "occupation")?,
        })
    }

    pub fn positions(&self) -> [usize; 3] {
        [
            self.birth,
            LOCATION_OFFSET + self.location,
            OCCUPATION_OFFSET + self.occupation,
        ]
    }

    pub fn encode(&self) -> TabularExample {
        let mut bits = [0u8; NUM_POSITIONS];
        for p in self.positions() {
            bits[p] = 1;
        }
        TabularExample::from_bits(&bits)
    }

    pub fn decode(example: &TabularExample) -> Result<Self> {
        if example.len() != NUM_POSITIONS {
            return Err(Error::domain(format!(
                "expected {NUM_POSITIONS} positions, got {}",
                example.len()
            )));
        }
        let one = |range: std::ops::Range<usize>| -> Result<usize> {
            let mut hits = Vec::new();
            for i in range.clone() {
                match example.values()[i] {
                    Value::Int(1) => hits.push(i - range.start),
                    Value::Int(0) => {}
                    ref other => return Err(Error::domain(format!("position {i} holds {other}, not a bit"))),
                }
            }
            match hits.as_slice() {
                [only] => Ok(*only),
                _ => Err(Error::domain(format!(
                    "positions {}..{} are not one-hot",
                    range.start, range.end
                ))),
            }
        };
        Ok(Sentence {
            birth: one(0..LOCATION_OFFSET)?,
            location: one(LOCATION_OFFSET..OCCUPATION_OFFSET)?,
            occupation: one(OCCUPATION_OFFSET..NUM_POSITIONS)?,
        })
    }

    pub fn occupation_name(&self) -> &'static str {
        OCCUPATIONS[self.occupation]
    }

    /// Template fill with the generic `<mask>` placeholder.
    pub fn render(&self) -> String {
        let occupation = OCCUPATIONS[self.occupation];
        format!(
            "<mask> was born {} in {} and is {} {}.",
            BIRTH_PERIODS[self.birth],
            LOCATIONS[self.location],
            article(occupation),
            occupation
        )
    }

    pub fn parse(sentence: &str) -> Result<Self> {
        let bad = || Error::Lookup(format!("sentence does not follow the template: {sentence:?}"));
        let rest = sentence.strip_prefix("<mask> was born ").ok_or_else(bad)?;
        let rest = rest.strip_suffix('.').ok_or_else(bad)?;
        let (birth, rest) = BIRTH_PERIODS
            .iter()
            .enumerate()
            .find_map(|(i, b)| rest.strip_prefix(b).and_then(|r| r.strip_prefix(" in ")).map(|r| (i, r)))
            .ok_or_else(bad)?;
        let (location, rest) = LOCATIONS
            .iter()
            .enumerate()
            .find_map(|(i, l)| rest.strip_prefix(l).and_then(|r| r.strip_prefix(" and is ")).map(|r| (i, r)))
            .ok_or_else(bad)?;
        let occupation = OCCUPATIONS
            .iter()
            .position(|o| rest == format!("{} {o}", article(o)))
            .ok_or_else(bad)?;
        Ok(Sentence {
            birth,
            location,
            occupation,
        })
    }
}

/// Indefinite article for an occupation.
pub fn article(occupation: &str) -> &'static str {
    if occupation == "industrialist" {
        "an"
    } else {
        "a"
    }
}

pub fn encode(birth: usize, location: usize, occupation: usize) -> Result<TabularExample> {
    Ok(Sentence::new(birth, location, occupation)?.encode())
}

pub fn encode_names(birth: &str, location: &str, occupation: &str) -> Result<TabularExample> {
    Ok(Sentence::from_names(birth, location, occupation)?.encode())
}

pub fn render_sentence(example: &TabularExample) -> Result<String> {
    Ok(Sentence::decode(example)?.render())
}

/// All 360 sentences, ordered by birth period, then location, then occupation.
pub fn enumerate_sentences() -> Vec<Sentence> {
    let mut out = Vec::with_capacity(NUM_EXAMPLES);
    for birth in 0..BIRTH_PERIODS.len() {
        for location in 0..LOCATIONS.len() {
            for occupation in 0..OCCUPATIONS.len() {
                out.push(Sentence {
                    birth,
                    location,
                    occupation,
                });
            }
        }
    }
    out
}

pub fn enumerate_examples() -> Vec<TabularExample> {
    enumerate_sentences().iter().map(Sentence::encode).collect()
}

/// Names of the bundled label tables.
pub const BUILTIN_FIXTURES: [&str; 2] = ["occupation-depth3", "synthetic-bias"];

const FIXTURE_DEPTH3: &str = include_str!("../../data/fixtures/occupation-depth3.fixture");
const FIXTURE_BIAS: &str = include_str!("../../data/fixtures/synthetic-bias.fixture");

/// Labelling rules behind the bundled fixtures.
///
/// `occupation-depth3`: male iff footballer, industrialist or boxer.
/// `synthetic-bias`: additionally singers born before 1951 and violinists
/// outside Europe/Asia or born before 1951 are male.
pub fn synthetic_label(name: &str, sentence: &Sentence) -> Result<u8> {
    let occupation = sentence.occupation_name();
    let male_coded = matches!(occupation, "footballer" | "industrialist" | "boxer");
    match name {
        "occupation-depth3" => Ok(u8::from(male_coded)),
        "synthetic-bias" => {
            let early = sentence.birth <= 2;
            let label = match occupation {
                "singer" => early,
                "violinist" => {
                    let location = LOCATIONS[sentence.location];
                    early || !matches!(location, "Europe" | "Asia")
                }
                _ => male_coded,
            };
            Ok(u8::from(label))
        }
        other => Err(Error::Lookup(format!("unknown builtin fixture {other:?}"))),
    }
}

pub fn builtin_fixture(name: &str) -> Result<FixtureTable> {
    let text = match name {
        "occupation-depth3" => FIXTURE_DEPTH3,
        "synthetic-bias" => FIXTURE_BIAS,
        other => return Err(Error::Lookup(format!("unknown builtin fixture {other:?}"))),
    };
    FixtureTable::parse(text, &feature_space(), name)
}

/// Fixture table produced by [`synthetic_label`].
pub fn synthetic_fixture(name: &str) -> Result<FixtureTable> {
    let mut table = FixtureTable::new(name);
    for sentence in enumerate_sentences() {
        table.insert(sentence.encode(), synthetic_label(name, &sentence)?)?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn ones(e: &TabularExample) -> Vec<usize> {
        e.values()
            .iter()
            .enumerate()
            .filter(|(_, v)| **v == Value::Int(1))
            .map(|(i, _)| i)
            .collect()
    }

    #[test]
    fn lookup_table_positions() {
        let space = feature_space();
        assert_eq!(space.len(), 22);
        let expected: Vec<&str> = BIRTH_PERIODS
            .iter()
            .chain(LOCATIONS.iter())
            .chain(OCCUPATIONS.iter())
            .copied()
            .collect();
        let names: Vec<&str> = space.features.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, expected);
        assert_eq!(space.index_of("nurse"), Some(14));
        assert_eq!(space.index_of("violinist"), Some(21));
        assert_eq!(space.index_of("Australia"), Some(13));
    }

    #[test]
    fn encoding_examples() {
        let e = encode_names("after 1970", "Africa", "singer").unwrap();
        let expected = TabularExample::from_bits(&[0, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0]);
        assert_eq!(e, expected);
        assert_eq!(ones(&encode_names("before 1875", "North America", "nurse").unwrap()), vec![0, 5, 14]);
        assert_eq!(ones(&encode_names("after 1970", "Australia", "violinist").unwrap()), vec![4, 13, 21]);
        assert!(matches!(encode_names("after 1970", "Mars", "nurse"), Err(Error::Lookup(_))));
        assert!(matches!(encode(5, 0, 0), Err(Error::Lookup(_))));
    }

    #[test]
    fn sentences() {
        let e = encode_names("after 1970", "Africa", "singer").unwrap();
        assert_eq!(render_sentence(&e).unwrap(), "<mask> was born after 1970 in Africa and is a singer.");
        let e = encode_names("between 1925 and 1951", "Europe", "industrialist").unwrap();
        assert_eq!(
            render_sentence(&e).unwrap(),
            "<mask> was born between 1925 and 1951 in Europe and is an industrialist."
        );
        for s in enumerate_sentences() {
            assert_eq!(Sentence::parse(&s.render()).unwrap(), s);
        }
        let mut bad = [0u8; 22];
        bad[0] = 1;
        bad[1] = 1;
        assert!(render_sentence(&TabularExample::from_bits(&bad)).is_err());
    }

    #[test]
    fn enumeration() {
        let all = enumerate_examples();
        assert_eq!(all.len(), NUM_EXAMPLES);
        let distinct: HashSet<_> = all.iter().collect();
        assert_eq!(distinct.len(), NUM_EXAMPLES);
        assert_eq!(all[0], encode_names("before 1875", "North America", "nurse").unwrap());
        let space = feature_space();
        for e in &all {
            space.check_example(e).unwrap();
        }
        // The space's own enumeration covers the same set.
        let mut from_space = space.enumerate().unwrap();
        let mut sorted = all.clone();
        from_space.sort_by_key(|e| e.to_string());
        sorted.sort_by_key(|e| e.to_string());
        assert_eq!(from_space, sorted);
    }

    #[test]
    fn bundled_fixtures_match_their_rules() {
        for name in BUILTIN_FIXTURES {
            let table = builtin_fixture(name).unwrap();
            assert_eq!(table.len(), NUM_EXAMPLES);
            assert_eq!(table.model_id, name);
            for s in enumerate_sentences() {
                assert_eq!(table.get(&s.encode()), Some(synthetic_label(name, &s).unwrap()));
            }
        }
    }
}
