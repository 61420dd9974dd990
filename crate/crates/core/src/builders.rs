//! Constructions for the known PDA families, plus two verbatim example
//! arrays shipped as fixtures.
//!
//! Three families are provided:
//!
//! * `subset`: rows are the `t`-subsets of the node set; a `(t+1)`-regular
//!   array with `N = C(K,t)`, `Z = C(K-1,t-1)`, `S = C(K,t+1)`.
//! * `partition`: nodes form `m+1` classes of size `q`; rows are the
//!   zero-sum vectors of `{0..q-1}^(m+1)`. `t`-regular with `t = m+1`,
//!   `N = q^m`, `Z = q^(m-1)`, `S = q^(m+1) - q^m`.
//! * `partition-complement`: rows are the nonzero-sum vectors; a
//!   `(m+1)(q-1)`-regular array with `N = (q-1)q^m`, `Z = (q-1)^2 q^(m-1)`,
//!   `S = q^m`.
//!
//! The label assignments below (lexicographic subset ranks, lexicographic
//! vector ranks) are one concrete choice; downstream compilation depends
//! only on the arrays being valid PDAs with these parameters.

use thiserror::Error;

use crate::pda::{parse_pda, Pda, PdaEntry};

/// Refuse to materialize grids above this entry count.
const MAX_GRID_ENTRIES: u128 = 20_000_000;

/// Errors from the PDA builders.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum BuildError {
    #[error("subset family requires 1 <= t <= K-1, got K={num_nodes}, t={subset_size}")]
    SubsetParams { num_nodes: usize, subset_size: usize },
    #[error("partition families require q >= 2 and m >= 1, got q={q}, m={m}")]
    PartitionParams { q: usize, m: usize },
    #[error("family `{family}` requires t >= 2 dividing K with K/t >= 2, got K={num_nodes}, t={t}")]
    PartitionDivisibility {
        family: &'static str,
        num_nodes: usize,
        t: usize,
    },
    #[error("array would have {entries} entries, above the {MAX_GRID_ENTRIES} limit")]
    TooLarge { entries: u128 },
    #[error("unknown fixture `{name}`")]
    UnknownFixture { name: String },
}

/// PDA family selector for the CLI-facing parameter form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuilderFamily {
    Subset,
    Partition,
    PartitionComplement,
}

/// `(family, K, t)` parameter triple as exposed on the command line.
///
/// For the partition families `t` must divide `K`; internally `q = K/t` and
/// `m = t - 1`.
#[derive(Clone, Copy, Debug)]
pub struct BuilderParams {
    pub family: BuilderFamily,
    pub num_nodes: usize,
    pub t: usize,
}

impl BuilderParams {
    pub fn build(&self) -> Result<Pda, BuildError> {
        match self.family {
            BuilderFamily::Subset => build_subset(self.num_nodes, self.t),
            BuilderFamily::Partition | BuilderFamily::PartitionComplement => {
                let family = match self.family {
                    BuilderFamily::Partition => "partition",
                    _ => "partition-complement",
                };
                if self.t < 2 || self.num_nodes % self.t != 0 || self.num_nodes / self.t < 2 {
                    return Err(BuildError::PartitionDivisibility {
                        family,
                        num_nodes: self.num_nodes,
                        t: self.t,
                    });
                }
                let q = self.num_nodes / self.t;
                let m = self.t - 1;
                match self.family {
                    BuilderFamily::Partition => build_partition(q, m),
                    _ => build_partition_complement(q, m),
                }
            }
        }
    }
}

fn binomial_u128(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 0..k {
        result = result * (n - (k - 1 - i)) as u128 / (i as u128 + 1);
    }
    result
}

fn check_size(rows: u128, cols: u128) -> Result<(), BuildError> {
    let entries = rows.saturating_mul(cols);
    if entries > MAX_GRID_ENTRIES {
        return Err(BuildError::TooLarge { entries });
    }
    Ok(())
}

/// Lexicographic rank of a sorted subset among all `len`-subsets of
/// `{0..universe-1}`.
fn rank_subset(universe: usize, subset: &[usize]) -> usize {
    let len = subset.len();
    let mut rank: u128 = 0;
    let mut start = 0;
    for (i, &c) in subset.iter().enumerate() {
        for j in start..c {
            rank += binomial_u128(universe - 1 - j, len - 1 - i);
        }
        start = c + 1;
    }
    rank as usize
}

/// Advance `subset` to the next `t`-subset in lexicographic order.
fn next_subset(universe: usize, subset: &mut [usize]) -> bool {
    let len = subset.len();
    for i in (0..len).rev() {
        if subset[i] < universe - (len - i) {
            subset[i] += 1;
            for j in i + 1..len {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Subset-family PDA: rows indexed by `t`-subsets of the nodes in
/// lexicographic order, `(T, k)` a star iff `k` is in `T`, otherwise the
/// rank of `T + {k}` among `(t+1)`-subsets.
pub fn build_subset(num_nodes: usize, subset_size: usize) -> Result<Pda, BuildError> {
    if subset_size == 0 || subset_size >= num_nodes {
        return Err(BuildError::SubsetParams {
            num_nodes,
            subset_size,
        });
    }
    let num_files = binomial_u128(num_nodes, subset_size);
    check_size(num_files, num_nodes as u128)?;
    let num_files = num_files as usize;
    let stars = binomial_u128(num_nodes - 1, subset_size - 1) as usize;
    let num_labels = binomial_u128(num_nodes, subset_size + 1) as usize;

    let mut grid = Vec::with_capacity(num_files * num_nodes);
    let mut row_subset: Vec<usize> = (0..subset_size).collect();
    let mut extended = vec![0usize; subset_size + 1];
    loop {
        for node in 0..num_nodes {
            if row_subset.contains(&node) {
                grid.push(PdaEntry::Star);
            } else {
                // Merge `node` into the sorted row subset.
                let pos = row_subset.partition_point(|&x| x < node);
                extended[..pos].copy_from_slice(&row_subset[..pos]);
                extended[pos] = node;
                extended[pos + 1..].copy_from_slice(&row_subset[pos..]);
                grid.push(PdaEntry::Code(rank_subset(num_nodes, &extended)));
            }
        }
        if !next_subset(num_nodes, &mut row_subset) {
            break;
        }
    }

    Ok(Pda::new(num_nodes, num_files, stars, num_labels, grid)
        .expect("subset construction is structurally sound"))
}

/// Rank of a zero-sum vector among all zero-sum vectors in lexicographic
/// order. The last coordinate is determined by the rest, so this is just the
/// base-`q` value of the first `m` coordinates.
fn zero_sum_rank(q: usize, vector: &[usize]) -> usize {
    vector[..vector.len() - 1]
        .iter()
        .fold(0, |acc, &digit| acc * q + digit)
}

/// Rank of a nonzero-sum vector among all nonzero-sum vectors in
/// lexicographic order.
fn nonzero_sum_rank(q: usize, vector: &[usize]) -> usize {
    let full: usize = vector.iter().fold(0, |acc, &digit| acc * q + digit);
    // Zero-sum vectors lexicographically below: one per prefix value, plus
    // possibly the one sharing this prefix.
    let prefix = zero_sum_rank(q, vector);
    let sum_prefix: usize = vector[..vector.len() - 1].iter().sum();
    let completion = (q - sum_prefix % q) % q;
    let below = prefix + usize::from(completion < vector[vector.len() - 1]);
    full - below
}

fn partition_dims(q: usize, m: usize) -> Result<(), BuildError> {
    if q < 2 || m < 1 {
        return Err(BuildError::PartitionParams { q, m });
    }
    Ok(())
}

fn pow_u128(base: usize, exp: usize) -> u128 {
    (0..exp).fold(1u128, |acc, _| acc.saturating_mul(base as u128))
}

/// Partition-family PDA on `K = q(m+1)` nodes.
///
/// Column `(u, v)` is node `u` of class `v` (index `v*q + u`); row `a` runs
/// over zero-sum vectors of `{0..q-1}^(m+1)`. The entry is a star iff
/// `a[v] == u`, otherwise the rank of the nonzero-sum vector obtained by
/// writing `u` into coordinate `v`.
pub fn build_partition(q: usize, m: usize) -> Result<Pda, BuildError> {
    partition_dims(q, m)?;
    let num_nodes = q * (m + 1);
    let num_files = pow_u128(q, m);
    check_size(num_files, num_nodes as u128)?;
    let num_files = num_files as usize;
    let stars = pow_u128(q, m - 1) as usize;
    let num_labels = (pow_u128(q, m + 1) - pow_u128(q, m)) as usize;

    let mut grid = Vec::with_capacity(num_files * num_nodes);
    let mut vector = vec![0usize; m + 1];
    for prefix in 0..num_files {
        // Decode the row's zero-sum vector from its prefix value.
        let mut rest = prefix;
        for slot in vector[..m].iter_mut().rev() {
            *slot = rest % q;
            rest /= q;
        }
        let sum_prefix: usize = vector[..m].iter().sum();
        vector[m] = (q - sum_prefix % q) % q;

        for class in 0..=m {
            for symbol in 0..q {
                if vector[class] == symbol {
                    grid.push(PdaEntry::Star);
                } else {
                    let kept = vector[class];
                    vector[class] = symbol;
                    grid.push(PdaEntry::Code(nonzero_sum_rank(q, &vector)));
                    vector[class] = kept;
                }
            }
        }
    }

    Ok(Pda::new(num_nodes, num_files, stars, num_labels, grid)
        .expect("partition construction is structurally sound"))
}

/// Complement partition-family PDA on `K = q(m+1)` nodes.
///
/// Rows run over nonzero-sum vectors; the entry at row `f`, column `(u, v)`
/// is a star iff `f[v] != u`, otherwise the rank of the zero-sum vector that
/// agrees with `f` away from coordinate `v`.
pub fn build_partition_complement(q: usize, m: usize) -> Result<Pda, BuildError> {
    partition_dims(q, m)?;
    let num_nodes = q * (m + 1);
    let num_files = pow_u128(q, m + 1) - pow_u128(q, m);
    check_size(num_files, num_nodes as u128)?;
    let num_files = num_files as usize;
    let stars = (q - 1) * (q - 1) * pow_u128(q, m - 1) as usize;
    let num_labels = pow_u128(q, m) as usize;

    let mut grid = Vec::with_capacity(num_files * num_nodes);
    let mut vector = vec![0usize; m + 1];
    loop {
        let total: usize = vector.iter().sum();
        if total % q != 0 {
            for class in 0..=m {
                for symbol in 0..q {
                    if vector[class] != symbol {
                        grid.push(PdaEntry::Star);
                    } else {
                        let kept = vector[class];
                        vector[class] = (q - (total - kept) % q) % q;
                        grid.push(PdaEntry::Code(zero_sum_rank(q, &vector)));
                        vector[class] = kept;
                    }
                }
            }
        }
        // Next vector in lexicographic order.
        let mut pos = m + 1;
        let exhausted = loop {
            if pos == 0 {
                break true;
            }
            pos -= 1;
            vector[pos] += 1;
            if vector[pos] < q {
                break false;
            }
            vector[pos] = 0;
        };
        if exhausted {
            break;
        }
    }

    Ok(Pda::new(num_nodes, num_files, stars, num_labels, grid)
        .expect("complement construction is structurally sound"))
}

/// The 4 x 6 example array.
const FIXTURE_6X4: &str = "\
6 4 2 4
* * 0 * 1 2
* 0 * 1 * 3
0 * * 2 3 *
1 2 3 * * *
";

/// The 5 x 10 example array.
const FIXTURE_10X5: &str = "\
10 5 3 5
* * * * * * 0 1 2 3
* * * 0 1 2 * * * 4
* 0 1 * * 3 * * 4 *
0 * 2 * 3 * * 4 * *
1 2 * 3 * * 4 * * *
";

/// Names accepted by [`fixture`].
pub const FIXTURE_NAMES: [&str; 2] = ["example-6x4", "example-10x5"];

/// Return one of the shipped example arrays verbatim.
pub fn fixture(name: &str) -> Result<Pda, BuildError> {
    let text = match name {
        "example-6x4" => FIXTURE_6X4,
        "example-10x5" => FIXTURE_10X5,
        _ => {
            return Err(BuildError::UnknownFixture {
                name: name.to_string(),
            })
        }
    };
    Ok(parse_pda(text).expect("fixtures are well-formed"))
}
