//! Human ratings and the six success rates.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RATINGS_HEADER: [&str; 5] = ["item_id", "direction", "content", "understanding", "grammar"];
pub const SUCCESS_THRESHOLD: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    E2L,
    L2E,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub item_id: String,
    pub direction: Direction,
    pub content: u8,
    pub understanding: u8,
    pub grammar: u8,
}

impl RatingRecord {
    pub fn new(item_id: impl Into<String>, direction: Direction, content: u8, understanding: u8, grammar: u8) -> Self {
        RatingRecord {
            item_id: item_id.into(),
            direction,
            content,
            understanding,
            grammar,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("content", self.content),
            ("understanding", self.understanding),
            ("grammar", self.grammar),
        ] {
            if !(1..=5).contains(&v) {
                return Err(Error::Input(format!(
                    "item {:?}: {name} rating {v} is outside 1-5",
                    self.item_id
                )));
            }
        }
        Ok(())
    }
}

/// How several annotators' ratings of one item become one verdict per scale.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Mean rating, then success iff the mean reaches the threshold.
    #[default]
    Mean,
    /// Success iff a strict majority of annotators reach the threshold.
    Majority,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessReport {
    pub csr: f64,
    pub usr: f64,
    pub gsr: f64,
    pub ucsr: f64,
    pub ugsr: f64,
    pub osr: f64,
    pub n: usize,
}

impl SuccessReport {
    /// Conjunctive rates never exceed the rates of their conjuncts.
    pub fn is_dominance_consistent(&self) -> bool {
        self.osr <= self.ucsr.min(self.ugsr)
            && self.ucsr <= self.usr.min(self.csr)
            && self.ugsr <= self.usr.min(self.gsr)
    }
}

fn verdicts(ratings: &[&RatingRecord], how: Aggregation) -> [bool; 3] {
    let n = ratings.len() as f64;
    let scales: [fn(&RatingRecord) -> u8; 3] = [|r| r.content, |r| r.understanding, |r| r.grammar];
    scales.map(|get| match how {
        Aggregation::Mean => ratings.iter().map(|r| f64::from(get(r))).sum::<f64>() / n >= SUCCESS_THRESHOLD,
        Aggregation::Majority => {
            let ok = ratings.iter().filter(|r| f64::from(get(r)) >= SUCCESS_THRESHOLD).count();
            2 * ok > ratings.len()
        }
    })
}

/// Success rates with the default mean-then-threshold aggregation.
pub fn success_rates(records: &[RatingRecord]) -> Result<SuccessReport> {
    success_rates_with(records, Aggregation::Mean)
}

/// Success rates over items keyed by `(item_id, direction)`; records sharing a
/// key are treated as annotations of the same item.
pub fn success_rates_with(records: &[RatingRecord], how: Aggregation) -> Result<SuccessReport> {
    if records.is_empty() {
        return Err(Error::Input("no ratings to aggregate".into()));
    }
    let mut items: BTreeMap<(&str, Direction), Vec<&RatingRecord>> = BTreeMap::new();
    for r in records {
        r.validate()?;
        items.entry((r.item_id.as_str(), r.direction)).or_default().push(r);
    }
    let mut hits = [0usize; 6];
    for ratings in items.values() {
        let [c, u, g] = verdicts(ratings, how);
        for (slot, ok) in hits.iter_mut().zip([c, u, g, u && c, u && g, u && c && g]) {
            *slot += usize::from(ok);
        }
    }
    let n = items.len();
    let rate = |i: usize| hits[i] as f64 / n as f64;
    let report = SuccessReport {
        csr: rate(0),
        usr: rate(1),
        gsr: rate(2),
        ucsr: rate(3),
        ugsr: rate(4),
        osr: rate(5),
        n,
    };
    debug_assert!(report.is_dominance_consistent());
    Ok(report)
}

pub fn read_ratings<R: Read>(reader: R, source: &str) -> Result<Vec<RatingRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::schema(source, 1, e.to_string()))?
        .clone();
    if header.iter().ne(RATINGS_HEADER) {
        return Err(Error::schema(
            source,
            1,
            format!("expected header {:?}, found {:?}", RATINGS_HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut out = Vec::new();
    for row in rdr.deserialize::<RatingRecord>() {
        let record = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::schema(source, line, e.to_string())
        })?;
        record.validate()?;
        out.push(record);
    }
    Ok(out)
}

pub fn load_ratings(path: &Path) -> Result<Vec<RatingRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_ratings(file, &path.display().to_string())
}

pub fn write_ratings<W: Write>(writer: W, records: &[RatingRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r).map_err(|e| Error::Input(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Input(e.to_string()))?;
    Ok(())
}
