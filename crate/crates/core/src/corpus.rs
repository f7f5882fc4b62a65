//! The shipped example corpus, embedded at build time.

use crate::diagram::{parse_diagram, Diagram};
use crate::dsl::{parse, ParseError, ParseTree};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntryKind {
    System,
    Diagram,
}

#[derive(Clone, Copy, Debug)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub file: &'static str,
    pub kind: EntryKind,
    pub source: &'static str,
}

const ENTRIES: [CorpusEntry; 6] = [
    CorpusEntry { name: "min", file: "min.rg", kind: EntryKind::System, source: include_str!("../specs/min.rg") },
    CorpusEntry { name: "gcd", file: "gcd.rg", kind: EntryKind::System, source: include_str!("../specs/gcd.rg") },
    CorpusEntry {
        name: "counter",
        file: "counter.rg",
        kind: EntryKind::System,
        source: include_str!("../specs/counter.rg"),
    },
    CorpusEntry {
        name: "counter_literal",
        file: "counter_literal.rg",
        kind: EntryKind::System,
        source: include_str!("../specs/counter_literal.rg"),
    },
    CorpusEntry {
        name: "cruise",
        file: "cruise.rg",
        kind: EntryKind::System,
        source: include_str!("../specs/cruise.rg"),
    },
    CorpusEntry {
        name: "monitor",
        file: "monitor.pf",
        kind: EntryKind::Diagram,
        source: include_str!("../specs/monitor.pf"),
    },
];

/// Negative specs used to show that the static checks can fail.
const NEGATIVE: [CorpusEntry; 3] = [
    CorpusEntry {
        name: "counter_rogue",
        file: "negative/counter_rogue.rg",
        kind: EntryKind::System,
        source: include_str!("../specs/negative/counter_rogue.rg"),
    },
    CorpusEntry {
        name: "counter_unframed",
        file: "negative/counter_unframed.rg",
        kind: EntryKind::System,
        source: include_str!("../specs/negative/counter_unframed.rg"),
    },
    CorpusEntry {
        name: "cruise_swapped",
        file: "negative/cruise_swapped.rg",
        kind: EntryKind::System,
        source: include_str!("../specs/negative/cruise_swapped.rg"),
    },
];

/// The shipped specs (min, gcd, counter with its literal variant, cruise)
/// and the patient monitoring diagram.
pub fn corpus() -> &'static [CorpusEntry] {
    &ENTRIES
}

pub fn negative_corpus() -> &'static [CorpusEntry] {
    &NEGATIVE
}

pub fn entry(name: &str) -> Option<&'static CorpusEntry> {
    ENTRIES.iter().chain(NEGATIVE.iter()).find(|e| e.name == name)
}

impl CorpusEntry {
    pub fn system(&self) -> Result<ParseTree, Vec<ParseError>> {
        parse(self.source, self.file)
    }

    pub fn diagram(&self) -> Result<Diagram, ParseError> {
        parse_diagram(self.source)
    }
}
