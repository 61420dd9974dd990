//! Placement delivery arrays: the grid type, exact validation of the three
//! defining conditions, and the text format used on disk.
//!
//! An `N x K` array over `*` and integer labels is a PDA when every column
//! carries the same number of stars, every label occurs somewhere, and any
//! two equal labels sit in distinct rows and columns with stars at the two
//! crossing positions. Stars encode storage; a label names one coded
//! multicast opportunity shared by the nodes that carry it.

use std::fmt;

use thiserror::Error;

/// One cell of a PDA grid: a star or an integer label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PdaEntry {
    Star,
    Code(usize),
}

impl fmt::Display for PdaEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PdaEntry::Star => f.write_str("*"),
            PdaEntry::Code(u) => write!(f, "{u}"),
        }
    }
}

/// An `N x K` placement delivery array with its declared parameters.
///
/// Construction only enforces structural sanity (dimensions match, labels in
/// range); whether the grid actually satisfies the PDA conditions is the job
/// of [`Pda::validate`]. The grid is immutable after construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pda {
    num_nodes: usize,
    num_files: usize,
    stars_per_column: usize,
    num_labels: usize,
    grid: Vec<PdaEntry>, // row-major, num_files rows by num_nodes columns
}

/// Structural errors raised when assembling a [`Pda`].
#[derive(Debug, Error, PartialEq, Eq)]
pub enum PdaError {
    #[error("PDA dimensions must be positive, got {rows} rows x {cols} columns")]
    EmptyDimensions { rows: usize, cols: usize },
    #[error("grid has {found} entries, expected {rows} x {cols} = {expected}")]
    GridSizeMismatch {
        rows: usize,
        cols: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row} has width {found}, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("label {label} at row {row}, column {col} is out of range (labels: {num_labels})")]
    LabelOutOfRange {
        row: usize,
        col: usize,
        label: usize,
        num_labels: usize,
    },
}

/// Violations of the three PDA conditions found by [`Pda::validate`].
///
/// Reported deterministically: column star counts in ascending column order,
/// then missing labels in ascending label order, then the first label-pair
/// violation in row-major scan order.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ValidateError {
    #[error("column {column} contains {found} stars, expected {expected}")]
    ColumnStarCount {
        column: usize,
        found: usize,
        expected: usize,
    },
    #[error("label {label} never occurs in the array")]
    MissingLabel { label: usize },
    #[error(
        "label {label} at rows ({row_a},{row_b}) and columns ({col_a},{col_b}) \
         violates the star-crossing condition"
    )]
    PairViolation {
        label: usize,
        row_a: usize,
        col_a: usize,
        row_b: usize,
        col_b: usize,
    },
}

/// Summary produced by a successful validation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PdaProfile {
    /// `Some(g)` when every label occurs exactly `g` times. `None` when the
    /// counts differ or the array has no labels at all.
    pub regularity: Option<usize>,
    /// Occurrence count per label, indexed by label.
    pub label_occurrences: Vec<usize>,
    /// Total coded entries, `(N - Z) * K` for a valid array.
    pub coded_entries: usize,
}

impl Pda {
    /// Assemble a PDA from a row-major grid.
    pub fn new(
        num_nodes: usize,
        num_files: usize,
        stars_per_column: usize,
        num_labels: usize,
        grid: Vec<PdaEntry>,
    ) -> Result<Self, PdaError> {
        if num_nodes == 0 || num_files == 0 {
            return Err(PdaError::EmptyDimensions {
                rows: num_files,
                cols: num_nodes,
            });
        }
        let expected = num_nodes * num_files;
        if grid.len() != expected {
            return Err(PdaError::GridSizeMismatch {
                rows: num_files,
                cols: num_nodes,
                expected,
                found: grid.len(),
            });
        }
        for (idx, entry) in grid.iter().enumerate() {
            if let PdaEntry::Code(label) = entry {
                if *label >= num_labels {
                    return Err(PdaError::LabelOutOfRange {
                        row: idx / num_nodes,
                        col: idx % num_nodes,
                        label: *label,
                        num_labels,
                    });
                }
            }
        }
        Ok(Pda {
            num_nodes,
            num_files,
            stars_per_column,
            num_labels,
            grid,
        })
    }

    /// Assemble from nested rows, inferring the dimensions.
    pub fn from_rows(
        stars_per_column: usize,
        num_labels: usize,
        rows: Vec<Vec<PdaEntry>>,
    ) -> Result<Self, PdaError> {
        let num_files = rows.len();
        let num_nodes = rows.first().map_or(0, Vec::len);
        for (row, cells) in rows.iter().enumerate() {
            if cells.len() != num_nodes {
                return Err(PdaError::RaggedRow {
                    row,
                    expected: num_nodes,
                    found: cells.len(),
                });
            }
        }
        Self::new(
            num_nodes,
            num_files,
            stars_per_column,
            num_labels,
            rows.into_iter().flatten().collect(),
        )
    }

    /// Number of columns (computing nodes), `K`.
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of rows (input files), `N`.
    pub fn num_files(&self) -> usize {
        self.num_files
    }

    /// Declared stars per column, `Z`.
    pub fn stars_per_column(&self) -> usize {
        self.stars_per_column
    }

    /// Declared label count, `S`.
    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    /// Entry at file `row`, node `col`.
    pub fn entry(&self, row: usize, col: usize) -> PdaEntry {
        self.grid[row * self.num_nodes + col]
    }

    /// One grid row.
    pub fn row(&self, row: usize) -> &[PdaEntry] {
        &self.grid[row * self.num_nodes..(row + 1) * self.num_nodes]
    }

    /// Check the three PDA conditions exactly.
    ///
    /// A pure function of the grid: identical inputs give identical outputs,
    /// including which violation is reported first.
    pub fn validate(&self) -> Result<PdaProfile, ValidateError> {
        // Condition 1: star count per column.
        for col in 0..self.num_nodes {
            let found = (0..self.num_files)
                .filter(|&row| self.entry(row, col) == PdaEntry::Star)
                .count();
            if found != self.stars_per_column {
                return Err(ValidateError::ColumnStarCount {
                    column: col,
                    found,
                    expected: self.stars_per_column,
                });
            }
        }

        // Condition 2: every label occurs at least once.
        let mut occurrences = vec![0usize; self.num_labels];
        for entry in &self.grid {
            if let PdaEntry::Code(label) = entry {
                occurrences[*label] += 1;
            }
        }
        if let Some(label) = occurrences.iter().position(|&count| count == 0) {
            return Err(ValidateError::MissingLabel { label });
        }

        // Condition 3: equal labels lie in distinct rows and columns and the
        // two crossing entries are stars. Row-major scan; each coded entry is
        // checked against every earlier occurrence of its label, so the first
        // violating pair in scan order wins.
        let mut seen: Vec<Vec<(usize, usize)>> = vec![Vec::new(); self.num_labels];
        for row in 0..self.num_files {
            for col in 0..self.num_nodes {
                let PdaEntry::Code(label) = self.entry(row, col) else {
                    continue;
                };
                for &(row_a, col_a) in &seen[label] {
                    let ok = row_a != row
                        && col_a != col
                        && self.entry(row_a, col) == PdaEntry::Star
                        && self.entry(row, col_a) == PdaEntry::Star;
                    if !ok {
                        return Err(ValidateError::PairViolation {
                            label,
                            row_a,
                            col_a,
                            row_b: row,
                            col_b: col,
                        });
                    }
                }
                seen[label].push((row, col));
            }
        }

        let regularity = match occurrences.first() {
            Some(&g) if occurrences.iter().all(|&count| count == g) => Some(g),
            _ => None, // irregular, or no labels at all
        };
        let coded_entries = occurrences.iter().sum();
        Ok(PdaProfile {
            regularity,
            label_occurrences: occurrences,
            coded_entries,
        })
    }

    /// Positions of `label` in ascending column order.
    pub fn occurrences(&self, label: usize) -> Result<Vec<(usize, usize)>, UnknownLabel> {
        if label >= self.num_labels {
            return Err(UnknownLabel {
                label,
                num_labels: self.num_labels,
            });
        }
        let mut positions = Vec::new();
        for col in 0..self.num_nodes {
            for row in 0..self.num_files {
                if self.entry(row, col) == PdaEntry::Code(label) {
                    positions.push((row, col));
                }
            }
        }
        Ok(positions)
    }

    /// Compact `g-(K,N,Z,S)` / `(K,N,Z,S)` parameter string.
    pub fn parameter_string(&self, profile: &PdaProfile) -> String {
        let params = format!(
            "({},{},{},{})",
            self.num_nodes, self.num_files, self.stars_per_column, self.num_labels
        );
        match profile.regularity {
            Some(g) => format!("{g}-{params}"),
            None => params,
        }
    }
}

/// Label outside `0..S`.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown label {label} (labels: {num_labels})")]
pub struct UnknownLabel {
    pub label: usize,
    pub num_labels: usize,
}

/// Errors from [`parse_pda`], with 1-based line numbers.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("missing header line `K N Z S`")]
    MissingHeader,
    #[error("line {line}: header must be four integers `K N Z S`")]
    BadHeader { line: usize },
    #[error("line {line}: K and N must be positive")]
    ZeroDimension { line: usize },
    #[error("line {line}, token {token}: `{text}` is neither `*` nor a label")]
    BadToken {
        line: usize,
        token: usize,
        text: String,
    },
    #[error("line {line}: row has {found} entries, expected {expected} columns")]
    RowWidth {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("grid ended after {found} rows, expected {expected}")]
    MissingRows { expected: usize, found: usize },
    #[error("line {line}: unexpected extra row, grid already has all rows")]
    ExtraRow { line: usize },
    #[error("header declares {declared} labels but the grid uses {found} distinct labels")]
    LabelCountMismatch { declared: usize, found: usize },
}

/// Parse the PDA text format.
///
/// First non-comment line is `K N Z S`; then `N` rows of `K` whitespace
/// separated tokens, each `*` or a decimal label. `#` starts a comment.
/// Raw labels may be arbitrary non-negative integers; they are canonicalized
/// to dense `0..S-1` in ascending numeric order, and the distinct count must
/// match the declared `S`.
pub fn parse_pda(text: &str) -> Result<Pda, ParseError> {
    let mut header: Option<(usize, usize, usize, usize)> = None;
    let mut raw_rows: Vec<Vec<Option<u64>>> = Vec::new(); // None = star

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let Some((num_nodes, num_files, _, _)) = header else {
            if tokens.len() != 4 {
                return Err(ParseError::BadHeader { line: line_no });
            }
            let mut values = [0usize; 4];
            for (slot, token) in values.iter_mut().zip(&tokens) {
                *slot = token
                    .parse()
                    .map_err(|_| ParseError::BadHeader { line: line_no })?;
            }
            if values[0] == 0 || values[1] == 0 {
                return Err(ParseError::ZeroDimension { line: line_no });
            }
            header = Some((values[0], values[1], values[2], values[3]));
            continue;
        };
        if raw_rows.len() == num_files {
            return Err(ParseError::ExtraRow { line: line_no });
        }
        if tokens.len() != num_nodes {
            return Err(ParseError::RowWidth {
                line: line_no,
                expected: num_nodes,
                found: tokens.len(),
            });
        }
        let mut row = Vec::with_capacity(num_nodes);
        for (pos, token) in tokens.iter().enumerate() {
            if *token == "*" {
                row.push(None);
            } else {
                let label = token.parse::<u64>().map_err(|_| ParseError::BadToken {
                    line: line_no,
                    token: pos + 1,
                    text: (*token).to_string(),
                })?;
                row.push(Some(label));
            }
        }
        raw_rows.push(row);
    }

    let Some((num_nodes, num_files, stars_per_column, num_labels)) = header else {
        return Err(ParseError::MissingHeader);
    };
    if raw_rows.len() != num_files {
        return Err(ParseError::MissingRows {
            expected: num_files,
            found: raw_rows.len(),
        });
    }

    // Canonicalize labels to dense 0..S-1 in ascending numeric order.
    let mut distinct: Vec<u64> = raw_rows.iter().flatten().filter_map(|&x| x).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() != num_labels {
        return Err(ParseError::LabelCountMismatch {
            declared: num_labels,
            found: distinct.len(),
        });
    }
    let grid = raw_rows
        .into_iter()
        .flatten()
        .map(|cell| match cell {
            None => PdaEntry::Star,
            Some(raw) => PdaEntry::Code(distinct.binary_search(&raw).unwrap()),
        })
        .collect();

    // Structural errors cannot occur here: dimensions and label ranges were
    // established above.
    Ok(Pda::new(num_nodes, num_files, stars_per_column, num_labels, grid)
        .expect("parser enforced structure"))
}

/// Render to the text format accepted by [`parse_pda`].
pub fn render_pda(pda: &Pda) -> String {
    let mut out = format!(
        "{} {} {} {}\n",
        pda.num_nodes(),
        pda.num_files(),
        pda.stars_per_column(),
        pda.num_labels()
    );
    for row in 0..pda.num_files() {
        let cells: Vec<String> = pda.row(row).iter().map(PdaEntry::to_string).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}
