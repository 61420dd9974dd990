//! Compile a regular PDA plus a replication choice into a complete cascaded
//! CDC scheme: file placement, reduce-function assignment, and a per-round
//! multicast plan.
//!
//! Each label of a `g`-regular PDA names a multicast group of `g` nodes.
//! Within a group every node is missing exactly one intermediate value (IVA)
//! and stores the files behind everyone else's missing value, so each node
//! can broadcast one XOR of segments that serves the other `g - 1` members
//! simultaneously. With replication factor `s`, nodes are assigned
//! `e = s / gcd(K, s)` reduce functions out of `Q = K / gcd(K, s)` through a
//! sliding window, and the exchange runs once per assignment round.

use num_bigint::BigInt;
use thiserror::Error;

use crate::pda::{Pda, PdaEntry, ValidateError};
use crate::rational::Rational;

/// Errors from assignment construction and scheme compilation.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum CompileError {
    #[error("replication factor s={s} out of range 1..={num_nodes}")]
    ReplicationOutOfRange { s: usize, num_nodes: usize },
    #[error("custom assignment must name at least one node")]
    EmptyCustomAssignment,
    #[error("assignment covers {found} nodes but the PDA has {expected} columns")]
    NodeCountMismatch { expected: usize, found: usize },
    #[error("PDA is not a valid placement delivery array: {0}")]
    InvalidPda(ValidateError),
    #[error("PDA is not regular: label occurrence counts differ or no labels exist")]
    NonRegular,
    #[error("PDA regularity g={g} is too low; coded exchange needs g >= 2")]
    RegularityTooLow { g: usize },
}

/// How nodes were mapped to reduce functions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AssignmentKind {
    /// Sliding-window assignment for replication factor `s`.
    Window { replication: usize },
    /// Caller-provided single-round assignment; functions may repeat freely.
    Custom,
}

/// Assignment of reduce functions to nodes, one function per node per round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionAssignment {
    kind: AssignmentKind,
    num_functions: usize,
    /// `per_node[k][i]` is the function node `k` computes in round `i`.
    per_node: Vec<Vec<usize>>,
}

impl FunctionAssignment {
    /// Window assignment: `Q = K / gcd(K, s)` functions, `e = s / gcd(K, s)`
    /// rounds, node `k` computing functions `k*e .. (k+1)*e - 1` modulo `Q`.
    ///
    /// Consecutive windows tile the function ring end to end, so every
    /// function lands on exactly `s` nodes.
    pub fn window(num_nodes: usize, replication: usize) -> Result<Self, CompileError> {
        if replication == 0 || replication > num_nodes {
            return Err(CompileError::ReplicationOutOfRange {
                s: replication,
                num_nodes,
            });
        }
        let gcd = num_integer::gcd(num_nodes, replication);
        let num_functions = num_nodes / gcd;
        let rounds = replication / gcd;
        let per_node = (0..num_nodes)
            .map(|node| {
                (0..rounds)
                    .map(|round| (node * rounds + round) % num_functions)
                    .collect()
            })
            .collect();
        Ok(FunctionAssignment {
            kind: AssignmentKind::Window { replication },
            num_functions,
            per_node,
        })
    }

    /// Single-round assignment from an explicit per-node function vector.
    ///
    /// Sparse ids are canonicalized to dense `0..Q-1` in ascending order,
    /// with `Q` the number of distinct ids.
    pub fn custom(functions: &[usize]) -> Result<Self, CompileError> {
        if functions.is_empty() {
            return Err(CompileError::EmptyCustomAssignment);
        }
        let mut distinct: Vec<usize> = functions.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        let per_node = functions
            .iter()
            .map(|id| vec![distinct.binary_search(id).unwrap()])
            .collect();
        Ok(FunctionAssignment {
            kind: AssignmentKind::Custom,
            num_functions: distinct.len(),
            per_node,
        })
    }

    pub fn kind(&self) -> &AssignmentKind {
        &self.kind
    }

    /// Total number of reduce functions, `Q`.
    pub fn num_functions(&self) -> usize {
        self.num_functions
    }

    /// Number of assignment rounds, `e`.
    pub fn num_rounds(&self) -> usize {
        self.per_node.first().map_or(0, Vec::len)
    }

    pub fn num_nodes(&self) -> usize {
        self.per_node.len()
    }

    /// Ordered function list of one node across rounds.
    pub fn functions_of(&self, node: usize) -> &[usize] {
        &self.per_node[node]
    }

    /// Replication factor for window assignments.
    pub fn replication(&self) -> Option<usize> {
        match self.kind {
            AssignmentKind::Window { replication } => Some(replication),
            AssignmentKind::Custom => None,
        }
    }
}

/// One slot of a multicast group: a coded PDA position plus the function its
/// node computes this round. The node at `col` is missing IVA
/// `(function, row)` and recovers it from the group exchange.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GroupMember {
    pub row: usize,
    pub col: usize,
    pub function: usize,
}

/// One XOR term of a multicast message: segment `segment` of IVA
/// `(function, file)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SegmentRef {
    pub function: usize,
    pub file: usize,
    pub segment: usize,
}

/// All occurrences of one label, in ascending column order, with the round's
/// function per member.
///
/// Member `j`'s missing IVA is split into `g - 1` segments, one per other
/// member in list order; member `l` transmits the XOR of the `l`-indexed
/// segments of everyone else's missing IVA.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MulticastGroup {
    pub label: usize,
    pub members: Vec<GroupMember>,
}

impl MulticastGroup {
    /// Segments per IVA in this group.
    pub fn segments_per_iva(&self) -> usize {
        self.members.len() - 1
    }

    /// Which segment of member `target`'s IVA is carried by member
    /// `transmitter`: its position among the other members in group order.
    pub fn segment_index(&self, target: usize, transmitter: usize) -> usize {
        debug_assert_ne!(target, transmitter);
        if transmitter < target {
            transmitter
        } else {
            transmitter - 1
        }
    }

    /// XOR recipe of the message sent by member `transmitter`.
    pub fn message_terms(&self, transmitter: usize) -> Vec<SegmentRef> {
        (0..self.members.len())
            .filter(|&target| target != transmitter)
            .map(|target| SegmentRef {
                function: self.members[target].function,
                file: self.members[target].row,
                segment: self.segment_index(target, transmitter),
            })
            .collect()
    }
}

/// One shuffle round: the function each node computes, and one multicast
/// group per label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Round {
    /// `functions[k]` is node `k`'s function this round.
    pub functions: Vec<usize>,
    /// Indexed by label.
    pub groups: Vec<MulticastGroup>,
}

/// Predicted loads of a compiled scheme, as exact rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredictedLoads {
    /// Computation load `r = K * Z / N`.
    pub computation: Rational,
    /// Communication load `g * s * S / ((g-1) * K * N)`, uncapped. `None`
    /// for custom assignments, which carry no replication factor.
    pub communication: Option<Rational>,
    /// Total coded IVA-equivalents shuffled, `e * g * S / (g - 1)`.
    pub total_coded_units: Rational,
    /// Whether the uncapped communication load exceeds 1, i.e. plain
    /// uncoded forwarding would be cheaper.
    pub exceeds_unity: bool,
}

/// A fully compiled cascaded CDC scheme. Immutable once built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompiledScheme {
    pda: Pda,
    regularity: usize,
    placement: Vec<Vec<usize>>,
    assignment: FunctionAssignment,
    rounds: Vec<Round>,
    uncoded_fallback: bool,
}

impl CompiledScheme {
    pub fn pda(&self) -> &Pda {
        &self.pda
    }

    /// PDA regularity `g`.
    pub fn regularity(&self) -> usize {
        self.regularity
    }

    /// Files stored by each node, ascending.
    pub fn placement(&self) -> &[Vec<usize>] {
        &self.placement
    }

    pub fn assignment(&self) -> &FunctionAssignment {
        &self.assignment
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn num_nodes(&self) -> usize {
        self.pda.num_nodes()
    }

    pub fn num_files(&self) -> usize {
        self.pda.num_files()
    }

    pub fn num_functions(&self) -> usize {
        self.assignment.num_functions()
    }

    /// Whether the shuffle should fall back to whole-IVA multicasts instead
    /// of the coded exchange.
    pub fn uncoded_fallback(&self) -> bool {
        self.uncoded_fallback
    }

    pub fn stores_file(&self, node: usize, file: usize) -> bool {
        self.placement[node].binary_search(&file).is_ok()
    }

    /// Exact predicted loads.
    pub fn predicted_loads(&self) -> PredictedLoads {
        let k = BigInt::from(self.pda.num_nodes());
        let n = BigInt::from(self.pda.num_files());
        let z = BigInt::from(self.pda.stars_per_column());
        let s_labels = BigInt::from(self.pda.num_labels());
        let g = BigInt::from(self.regularity);
        let rounds = BigInt::from(self.rounds.len());

        let computation = Rational::new(&k * z, n.clone());
        let total_coded_units = Rational::new(&rounds * &g * &s_labels, &g - BigInt::from(1));
        let communication = self.assignment.replication().map(|s| {
            Rational::new(
                &g * BigInt::from(s) * &s_labels,
                (&g - BigInt::from(1)) * &k * &n,
            )
        });
        let exceeds_unity = communication
            .as_ref()
            .is_some_and(|l| *l > Rational::from_integer(BigInt::from(1)));
        PredictedLoads {
            computation,
            communication,
            total_coded_units,
            exceeds_unity,
        }
    }
}

/// Per-node file placement read off the PDA stars.
pub fn placement_from_pda(pda: &Pda) -> Vec<Vec<usize>> {
    (0..pda.num_nodes())
        .map(|col| {
            (0..pda.num_files())
                .filter(|&row| pda.entry(row, col) == PdaEntry::Star)
                .collect()
        })
        .collect()
}

/// Compile a regular PDA and an assignment into a full scheme.
pub fn compile(
    pda: &Pda,
    assignment: FunctionAssignment,
    uncoded_fallback: bool,
) -> Result<CompiledScheme, CompileError> {
    let profile = pda.validate().map_err(CompileError::InvalidPda)?;
    let regularity = profile.regularity.ok_or(CompileError::NonRegular)?;
    if regularity < 2 {
        return Err(CompileError::RegularityTooLow { g: regularity });
    }
    if assignment.num_nodes() != pda.num_nodes() {
        return Err(CompileError::NodeCountMismatch {
            expected: pda.num_nodes(),
            found: assignment.num_nodes(),
        });
    }

    let occurrences: Vec<Vec<(usize, usize)>> = (0..pda.num_labels())
        .map(|label| pda.occurrences(label).expect("label in range"))
        .collect();

    let rounds = (0..assignment.num_rounds())
        .map(|round| {
            let functions: Vec<usize> = (0..pda.num_nodes())
                .map(|node| assignment.functions_of(node)[round])
                .collect();
            let groups = occurrences
                .iter()
                .enumerate()
                .map(|(label, positions)| MulticastGroup {
                    label,
                    members: positions
                        .iter()
                        .map(|&(row, col)| GroupMember {
                            row,
                            col,
                            function: functions[col],
                        })
                        .collect(),
                })
                .collect();
            Round { functions, groups }
        })
        .collect();

    Ok(CompiledScheme {
        pda: pda.clone(),
        regularity,
        placement: placement_from_pda(pda),
        assignment,
        rounds,
        uncoded_fallback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{build_partition, build_subset, fixture};
    use crate::rational::rat;

    #[test]
    fn window_assignment_matches_the_ten_node_example() {
        let assignment = FunctionAssignment::window(10, 4).unwrap();
        assert_eq!(assignment.num_functions(), 5);
        assert_eq!(assignment.num_rounds(), 2);
        assert_eq!(assignment.functions_of(0), &[0, 1]);
        assert_eq!(assignment.functions_of(2), &[4, 0]);
        assert_eq!(assignment.functions_of(9), &[3, 4]);
    }

    #[test]
    fn window_assignment_degenerate_cases() {
        let all = FunctionAssignment::window(7, 7).unwrap();
        assert_eq!(all.num_functions(), 1);
        assert_eq!(all.num_rounds(), 1);
        for node in 0..7 {
            assert_eq!(all.functions_of(node), &[0]);
        }

        let one = FunctionAssignment::window(6, 1).unwrap();
        assert_eq!(one.num_functions(), 6);
        for node in 0..6 {
            assert_eq!(one.functions_of(node), &[node]);
        }
    }

    #[test]
    fn window_assignment_replicates_each_function_s_times() {
        for num_nodes in 1..=12 {
            for s in 1..=num_nodes {
                let assignment = FunctionAssignment::window(num_nodes, s).unwrap();
                let mut counts = vec![0usize; assignment.num_functions()];
                for node in 0..num_nodes {
                    let functions = assignment.functions_of(node);
                    assert_eq!(functions.len(), assignment.num_rounds());
                    let mut sorted = functions.to_vec();
                    sorted.sort_unstable();
                    sorted.dedup();
                    assert_eq!(sorted.len(), functions.len(), "duplicate function on a node");
                    for &f in functions {
                        counts[f] += 1;
                    }
                }
                assert!(counts.iter().all(|&c| c == s), "K={num_nodes} s={s}");
            }
        }
    }

    #[test]
    fn window_rejects_out_of_range_replication() {
        assert!(matches!(
            FunctionAssignment::window(5, 0),
            Err(CompileError::ReplicationOutOfRange { .. })
        ));
        assert!(matches!(
            FunctionAssignment::window(5, 6),
            Err(CompileError::ReplicationOutOfRange { .. })
        ));
    }

    #[test]
    fn custom_assignment_canonicalizes_sparse_ids() {
        let assignment = FunctionAssignment::custom(&[0, 0, 3, 0, 0, 3]).unwrap();
        assert_eq!(assignment.num_functions(), 2);
        assert_eq!(assignment.functions_of(2), &[1]);
        assert!(FunctionAssignment::custom(&[]).is_err());
    }

    #[test]
    fn placement_reads_stars() {
        let placement = placement_from_pda(&fixture("example-6x4").unwrap());
        assert_eq!(placement[0], vec![0, 1]);
        assert_eq!(placement[5], vec![2, 3]);

        let placement = placement_from_pda(&fixture("example-10x5").unwrap());
        assert_eq!(placement[9], vec![2, 3, 4]);

        // A PDA that is a single all-star column stores every file.
        let pda = Pda::new(1, 3, 3, 0, vec![PdaEntry::Star; 3]).unwrap();
        assert_eq!(placement_from_pda(&pda), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn ten_node_scheme_loads() {
        let pda = fixture("example-10x5").unwrap();
        let scheme = compile(&pda, FunctionAssignment::window(10, 4).unwrap(), false).unwrap();
        let loads = scheme.predicted_loads();
        assert_eq!(loads.computation, rat(6, 1));
        assert_eq!(loads.total_coded_units, rat(40, 3));
        assert_eq!(loads.communication, Some(rat(8, 15)));
        assert!(!loads.exceeds_unity);
    }

    #[test]
    fn six_node_custom_scheme_loads() {
        let pda = fixture("example-6x4").unwrap();
        let assignment = FunctionAssignment::custom(&[0, 0, 1, 0, 0, 1]).unwrap();
        let scheme = compile(&pda, assignment, false).unwrap();
        let loads = scheme.predicted_loads();
        assert_eq!(loads.computation, rat(3, 1));
        assert_eq!(loads.total_coded_units, rat(6, 1));
        assert_eq!(loads.communication, None);
    }

    #[test]
    fn subset_scheme_load_matches_closed_form() {
        // For the subset family, g*s*S/((g-1)*K*N) simplifies to
        // (s/t)*(1 - t/K).
        for (num_nodes, t, s) in [(6, 2, 3), (8, 3, 5), (9, 4, 9), (7, 6, 2)] {
            let pda = build_subset(num_nodes, t).unwrap();
            let scheme =
                compile(&pda, FunctionAssignment::window(num_nodes, s).unwrap(), false).unwrap();
            let closed_form =
                rat(s as i64, t as i64) * (rat(1, 1) - rat(t as i64, num_nodes as i64));
            assert_eq!(
                scheme.predicted_loads().communication,
                Some(closed_form),
                "K={num_nodes} t={t} s={s}"
            );
        }
    }

    #[test]
    fn two_regular_scheme_units_per_round() {
        // g = 2 means g/(g-1) = 2 IVA-equivalents per label per round.
        let pda = build_partition(3, 1).unwrap();
        let scheme = compile(&pda, FunctionAssignment::window(6, 1).unwrap(), false).unwrap();
        assert_eq!(scheme.regularity(), 2);
        assert_eq!(
            scheme.predicted_loads().total_coded_units,
            rat(2 * pda.num_labels() as i64, 1)
        );
    }

    #[test]
    fn load_above_one_is_flagged() {
        // Subset K=4, t=1: L = s * (1 - 1/4) / 1 = 3s/4 > 1 for s >= 2.
        let pda = build_subset(4, 1).unwrap();
        let scheme = compile(&pda, FunctionAssignment::window(4, 2).unwrap(), false).unwrap();
        let loads = scheme.predicted_loads();
        assert_eq!(loads.communication, Some(rat(3, 2)));
        assert!(loads.exceeds_unity);
    }

    #[test]
    fn compile_rejects_irregular_and_low_regularity() {
        // Valid but irregular: label 0 twice, labels 1 and 2 once.
        let irregular = Pda::from_rows(
            1,
            3,
            vec![
                vec![PdaEntry::Star, PdaEntry::Code(0)],
                vec![PdaEntry::Code(0), PdaEntry::Star],
                vec![PdaEntry::Code(1), PdaEntry::Code(2)],
            ],
        )
        .unwrap();
        assert!(irregular.validate().is_ok());
        let err = compile(
            &irregular,
            FunctionAssignment::window(2, 1).unwrap(),
            false,
        )
        .unwrap_err();
        assert_eq!(err, CompileError::NonRegular);

        // 1-regular: single coded cell.
        let low = Pda::new(1, 1, 0, 1, vec![PdaEntry::Code(0)]).unwrap();
        let err = compile(&low, FunctionAssignment::window(1, 1).unwrap(), false).unwrap_err();
        assert_eq!(err, CompileError::RegularityTooLow { g: 1 });

        // All-star degenerate: no labels at all.
        let degenerate = Pda::new(1, 1, 1, 0, vec![PdaEntry::Star]).unwrap();
        let err = compile(
            &degenerate,
            FunctionAssignment::window(1, 1).unwrap(),
            false,
        )
        .unwrap_err();
        assert_eq!(err, CompileError::NonRegular);
    }

    #[test]
    fn compile_checks_assignment_width() {
        let pda = fixture("example-6x4").unwrap();
        let err = compile(&pda, FunctionAssignment::custom(&[0, 1]).unwrap(), false).unwrap_err();
        assert_eq!(
            err,
            CompileError::NodeCountMismatch {
                expected: 6,
                found: 2
            }
        );
        let err = compile(&pda, FunctionAssignment::window(5, 2).unwrap(), false).unwrap_err();
        assert!(matches!(err, CompileError::NodeCountMismatch { .. }));
    }

    #[test]
    fn groups_satisfy_the_exchange_preconditions() {
        let pda = fixture("example-10x5").unwrap();
        let scheme = compile(&pda, FunctionAssignment::window(10, 4).unwrap(), false).unwrap();
        let g = scheme.regularity();

        for round in scheme.rounds() {
            assert_eq!(round.groups.len(), pda.num_labels());
            for group in &round.groups {
                assert_eq!(group.members.len(), g);
                for (j, member) in group.members.iter().enumerate() {
                    // Ascending column order.
                    if j > 0 {
                        assert!(group.members[j - 1].col < member.col);
                    }
                    // The member's own target file is missing locally...
                    assert!(!scheme.stores_file(member.col, member.row));
                    // ...while every other member's file is stored.
                    for (t, other) in group.members.iter().enumerate() {
                        if t != j {
                            assert!(scheme.stores_file(member.col, other.row));
                            assert_ne!(member.row, other.row);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn every_missing_iva_is_covered_exactly_once_per_round() {
        let pda = fixture("example-10x5").unwrap();
        let scheme = compile(&pda, FunctionAssignment::window(10, 4).unwrap(), false).unwrap();

        for round in scheme.rounds() {
            let mut covered = std::collections::HashSet::new();
            for group in &round.groups {
                for member in &group.members {
                    assert!(
                        covered.insert((member.col, member.function, member.row)),
                        "duplicate coverage"
                    );
                }
            }
            for node in 0..scheme.num_nodes() {
                let function = round.functions[node];
                for file in 0..scheme.num_files() {
                    if !scheme.stores_file(node, file) {
                        assert!(covered.contains(&(node, function, file)));
                    }
                }
            }
        }
    }

    #[test]
    fn message_recipes_follow_group_order() {
        let pda = fixture("example-6x4").unwrap();
        let assignment = FunctionAssignment::custom(&[0, 0, 1, 0, 0, 1]).unwrap();
        let scheme = compile(&pda, assignment, false).unwrap();
        let group = &scheme.rounds()[0].groups[0];
        assert_eq!(
            group.members,
            vec![
                GroupMember { row: 2, col: 0, function: 0 },
                GroupMember { row: 1, col: 1, function: 0 },
                GroupMember { row: 0, col: 2, function: 1 },
            ]
        );
        // Node 0 carries segment 0 of both other targets.
        assert_eq!(
            group.message_terms(0),
            vec![
                SegmentRef { function: 0, file: 1, segment: 0 },
                SegmentRef { function: 1, file: 0, segment: 0 },
            ]
        );
        // Node 1 carries segment 0 of member 0's target and segment 1 of
        // member 2's.
        assert_eq!(
            group.message_terms(1),
            vec![
                SegmentRef { function: 0, file: 2, segment: 0 },
                SegmentRef { function: 1, file: 0, segment: 1 },
            ]
        );
        assert_eq!(
            group.message_terms(2),
            vec![
                SegmentRef { function: 0, file: 2, segment: 1 },
                SegmentRef { function: 0, file: 1, segment: 1 },
            ]
        );
    }
}
