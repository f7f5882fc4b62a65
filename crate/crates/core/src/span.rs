use std::fmt;

/// A position in source text. `line` and `col` are 1-based; `offset` is a byte offset.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
    pub offset: usize,
}

/// Half-open source range. The default span (all zeros) marks synthesized nodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: Pos,
    pub end: Pos,
}

impl Span {
    pub fn new(start: Pos, end: Pos) -> Self {
        debug_assert!(start.offset <= end.offset);
        Span { start, end }
    }

    pub fn is_synthetic(&self) -> bool {
        self.start.line == 0
    }

    /// Smallest span covering both.
    pub fn to(self, other: Span) -> Span {
        if self.is_synthetic() {
            return other;
        }
        if other.is_synthetic() {
            return self;
        }
        let start = if self.start.offset <= other.start.offset { self.start } else { other.start };
        let end = if self.end.offset >= other.end.offset { self.end } else { other.end };
        Span { start, end }
    }

    pub fn contains(&self, inner: &Span) -> bool {
        inner.is_synthetic() || (self.start.offset <= inner.start.offset && inner.end.offset <= self.end.offset)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_synthetic() {
            return f.write_str("<generated>");
        }
        write!(f, "{}:{}-{}:{}", self.start.line, self.start.col, self.end.line, self.end.col)
    }
}

/// A span qualified by the file it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: String,
    pub span: Span,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file, self.span)
    }
}
