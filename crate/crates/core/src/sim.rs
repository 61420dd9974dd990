//! Bit-exact execution of a compiled scheme on synthetic data over a
//! lossless broadcast medium.
//!
//! Map and reduce functions are digest-based: an intermediate value (IVA) is
//! a counter-mode SHA-256 expansion of `(function, file, file bytes)` to `T`
//! bits, and a reduce output digests the concatenated IVAs of its function.
//! This keeps every run deterministic while making any decoding mistake
//! visible as a digest mismatch. The shuffle logs every transmitted message,
//! so loads can be measured from actual bit counts and compared to the
//! closed-form predictions exactly.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::compile::CompiledScheme;
use crate::pda::PdaEntry;
use crate::rational::Rational;

/// Errors from dataset generation and scheme execution.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("dataset needs at least one file and a positive file size")]
    EmptyDataset,
    #[error("file size {bits} is not a whole number of bytes")]
    FileBitsNotBytes { bits: usize },
    #[error("dataset has {found} files but the scheme expects {expected}")]
    FileCountMismatch { expected: usize, found: usize },
    #[error("IVA width {bits} bits is not a positive multiple of {segments} byte-aligned segments")]
    IvaWidthNotDivisible { bits: usize, segments: usize },
    #[error("output width {bits} is not a positive whole number of bytes")]
    OutputBitsNotBytes { bits: usize },
    #[error("expected {expected} per-node stores, got {found}")]
    StoreCountMismatch { expected: usize, found: usize },
    #[error("node {node} is missing local IVA ({function},{file}) needed to transmit")]
    MissingLocalIva {
        node: usize,
        function: usize,
        file: usize,
    },
    #[error("node {node} never received the round-{round} message of label {label} from node {transmitter}")]
    MissingMessage {
        node: usize,
        round: usize,
        label: usize,
        transmitter: usize,
    },
    #[error("node {node} never received IVA ({function},{file}) via the uncoded fallback")]
    MissingWholeIva {
        node: usize,
        function: usize,
        file: usize,
    },
}

/// Synthetic input files, deterministic in the seed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    files: Vec<Vec<u8>>,
    bits_per_file: usize,
    seed: u64,
}

impl Dataset {
    pub fn files(&self) -> &[Vec<u8>] {
        &self.files
    }

    pub fn num_files(&self) -> usize {
        self.files.len()
    }

    pub fn bits_per_file(&self) -> usize {
        self.bits_per_file
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Wrap explicit file contents (all the same length).
    pub fn from_files(files: Vec<Vec<u8>>) -> Result<Self, SimError> {
        let bits = files.first().map_or(0, |f| f.len() * 8);
        if files.is_empty() || bits == 0 || files.iter().any(|f| f.len() * 8 != bits) {
            return Err(SimError::EmptyDataset);
        }
        Ok(Dataset {
            files,
            bits_per_file: bits,
            seed: 0,
        })
    }
}

/// Generate `num_files` files of `bits_per_file` pseudo-random bits each.
pub fn gen_dataset(num_files: usize, bits_per_file: usize, seed: u64) -> Result<Dataset, SimError> {
    if num_files == 0 || bits_per_file == 0 {
        return Err(SimError::EmptyDataset);
    }
    if bits_per_file % 8 != 0 {
        return Err(SimError::FileBitsNotBytes {
            bits: bits_per_file,
        });
    }
    let files = (0..num_files)
        .map(|n| {
            expand(
                &[b"file", &seed.to_le_bytes(), &(n as u64).to_le_bytes()],
                bits_per_file / 8,
            )
        })
        .collect();
    Ok(Dataset {
        files,
        bits_per_file,
        seed,
    })
}

/// Widths of the digest-based map and reduce functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimParams {
    /// IVA width `T` in bits; must be a positive multiple of `(g-1) * 8`.
    pub iva_bits: usize,
    /// Reduce output width `B` in bits.
    pub output_bits: usize,
}

impl SimParams {
    pub const DEFAULT_OUTPUT_BITS: usize = 256;

    /// Default widths for a scheme: `T = (g-1) * 64` so segmentation is
    /// exact, `B = 256`.
    pub fn for_scheme(scheme: &CompiledScheme) -> SimParams {
        SimParams {
            iva_bits: (scheme.regularity() - 1) * 64,
            output_bits: Self::DEFAULT_OUTPUT_BITS,
        }
    }

    fn validate(&self, scheme: &CompiledScheme) -> Result<(), SimError> {
        let segments = scheme.regularity() - 1;
        if self.iva_bits == 0 || self.iva_bits % (segments * 8) != 0 {
            return Err(SimError::IvaWidthNotDivisible {
                bits: self.iva_bits,
                segments,
            });
        }
        if self.output_bits == 0 || self.output_bits % 8 != 0 {
            return Err(SimError::OutputBitsNotBytes {
                bits: self.output_bits,
            });
        }
        Ok(())
    }
}

/// One node's locally computable IVAs, keyed by `(function, file)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IvaStore {
    width_bits: usize,
    entries: BTreeMap<(usize, usize), Vec<u8>>,
}

impl IvaStore {
    pub fn width_bits(&self) -> usize {
        self.width_bits
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, function: usize, file: usize) -> Option<&[u8]> {
        self.entries.get(&(function, file)).map(Vec::as_slice)
    }

    pub fn keys(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.entries.keys().copied()
    }

    /// Distinct files covered by this store.
    pub fn num_files(&self) -> usize {
        self.entries
            .keys()
            .map(|&(_, file)| file)
            .collect::<BTreeSet<_>>()
            .len()
    }
}

/// What a logged message was.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MessageKind {
    /// XOR of segments for one multicast group.
    Coded { label: usize },
    /// Whole IVA sent under the uncoded fallback.
    Uncoded { function: usize, file: usize },
}

/// One transmitted message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrafficRecord {
    pub round: usize,
    pub kind: MessageKind,
    pub transmitter: usize,
    pub bits: u64,
    pub recipients: Vec<usize>,
}

/// Every message of a shuffle, in transmission order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrafficLog {
    records: Vec<TrafficRecord>,
}

impl TrafficLog {
    pub fn records(&self) -> &[TrafficRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn total_bits(&self) -> u64 {
        self.records.iter().map(|r| r.bits).sum()
    }
}

/// Raw payloads delivered to one node.
#[derive(Clone, Debug, Default)]
pub struct Inbox {
    /// Coded messages keyed by `(round, label, transmitter)`.
    coded: HashMap<(usize, usize, usize), Vec<u8>>,
    /// Whole IVAs keyed by `(function, file)` from the fallback path.
    whole: HashMap<(usize, usize), Vec<u8>>,
}

/// Traffic log plus per-node inboxes.
#[derive(Clone, Debug)]
pub struct ShuffleOutcome {
    pub log: TrafficLog,
    inboxes: Vec<Inbox>,
}

/// One reduce output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReduceOutput {
    pub function: usize,
    pub bytes: Vec<u8>,
}

/// Measured loads and decode outcomes of one full run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunReport {
    /// `sum |W_k| / N`, measured from the per-node stores.
    pub measured_computation: Rational,
    /// `total bits / (Q * N * T)`.
    pub measured_communication: Rational,
    /// `total bits / T`.
    pub total_iva_units: Rational,
    pub total_messages: usize,
    pub total_bits: u64,
    /// `decode_success[node][round]`: every reconstructed IVA matched the
    /// directly computed one.
    pub decode_success: Vec<Vec<bool>>,
    /// `outputs[node][round]`: the reduce output produced in that round.
    pub outputs: Vec<Vec<ReduceOutput>>,
}

impl RunReport {
    pub fn all_decodes_succeeded(&self) -> bool {
        self.decode_success.iter().flatten().all(|&ok| ok)
    }
}

/// Counter-mode SHA-256 expansion of a tagged context.
fn expand(context: &[&[u8]], out_len: usize) -> Vec<u8> {
    let mut hasher = Sha256::new();
    for part in context {
        hasher.update(part);
    }
    let seed = hasher.finalize();
    let mut out = Vec::with_capacity(out_len + 31);
    let mut counter = 0u64;
    while out.len() < out_len {
        let mut block = Sha256::new();
        block.update(&seed);
        block.update(counter.to_le_bytes());
        out.extend_from_slice(&block.finalize()[..]);
        counter += 1;
    }
    out.truncate(out_len);
    out
}

/// The map function: IVA of `(function, file)` at `T` bits.
fn iva_bytes(function: usize, file: usize, contents: &[u8], iva_bits: usize) -> Vec<u8> {
    expand(
        &[
            b"iva",
            &(function as u64).to_le_bytes(),
            &(file as u64).to_le_bytes(),
            contents,
        ],
        iva_bits / 8,
    )
}

/// The reduce function: digest of the concatenated IVAs of one function.
fn reduce_digest(function: usize, ivas: &[Vec<u8>], output_bits: usize) -> Vec<u8> {
    let mut context: Vec<&[u8]> = vec![b"out"];
    let function_le = (function as u64).to_le_bytes();
    context.push(&function_le);
    for iva in ivas {
        context.push(iva);
    }
    expand(&context, output_bits / 8)
}

fn xor_into(acc: &mut [u8], data: &[u8]) {
    debug_assert_eq!(acc.len(), data.len());
    for (a, b) in acc.iter_mut().zip(data) {
        *a ^= b;
    }
}

/// Map phase: node `k` computes the IVA of every function for every file it
/// stores.
pub fn run_map(
    scheme: &CompiledScheme,
    dataset: &Dataset,
    params: &SimParams,
) -> Result<Vec<IvaStore>, SimError> {
    params.validate(scheme)?;
    if dataset.num_files() != scheme.num_files() {
        return Err(SimError::FileCountMismatch {
            expected: scheme.num_files(),
            found: dataset.num_files(),
        });
    }
    Ok(scheme
        .placement()
        .iter()
        .map(|stored| {
            let mut entries = BTreeMap::new();
            for function in 0..scheme.num_functions() {
                for &file in stored {
                    entries.insert(
                        (function, file),
                        iva_bytes(function, file, &dataset.files()[file], params.iva_bits),
                    );
                }
            }
            IvaStore {
                width_bits: params.iva_bits,
                entries,
            }
        })
        .collect())
}

/// Shuffle phase: every group member multicasts its XOR of segments (or, in
/// fallback mode, whole IVAs are multicast by one holder each).
pub fn run_shuffle(
    scheme: &CompiledScheme,
    stores: &[IvaStore],
    params: &SimParams,
) -> Result<ShuffleOutcome, SimError> {
    params.validate(scheme)?;
    if stores.len() != scheme.num_nodes() {
        return Err(SimError::StoreCountMismatch {
            expected: scheme.num_nodes(),
            found: stores.len(),
        });
    }
    let mut log = TrafficLog::default();
    let mut inboxes: Vec<Inbox> = vec![Inbox::default(); scheme.num_nodes()];

    if scheme.uncoded_fallback() {
        shuffle_uncoded(scheme, stores, params, &mut log, &mut inboxes)?;
    } else {
        shuffle_coded(scheme, stores, params, &mut log, &mut inboxes)?;
    }
    Ok(ShuffleOutcome { log, inboxes })
}

fn shuffle_coded(
    scheme: &CompiledScheme,
    stores: &[IvaStore],
    params: &SimParams,
    log: &mut TrafficLog,
    inboxes: &mut [Inbox],
) -> Result<(), SimError> {
    let segment_bytes = params.iva_bits / 8 / (scheme.regularity() - 1);
    for (round_idx, round) in scheme.rounds().iter().enumerate() {
        for group in &round.groups {
            for (position, member) in group.members.iter().enumerate() {
                let transmitter = member.col;
                let mut payload = vec![0u8; segment_bytes];
                for term in group.message_terms(position) {
                    let iva = stores[transmitter]
                        .get(term.function, term.file)
                        .ok_or(SimError::MissingLocalIva {
                            node: transmitter,
                            function: term.function,
                            file: term.file,
                        })?;
                    let start = term.segment * segment_bytes;
                    xor_into(&mut payload, &iva[start..start + segment_bytes]);
                }
                let recipients: Vec<usize> = group
                    .members
                    .iter()
                    .map(|m| m.col)
                    .filter(|&col| col != transmitter)
                    .collect();
                for &recipient in &recipients {
                    inboxes[recipient]
                        .coded
                        .insert((round_idx, group.label, transmitter), payload.clone());
                }
                log.records.push(TrafficRecord {
                    round: round_idx,
                    kind: MessageKind::Coded { label: group.label },
                    transmitter,
                    bits: (segment_bytes * 8) as u64,
                    recipients,
                });
            }
        }
    }
    Ok(())
}

fn shuffle_uncoded(
    scheme: &CompiledScheme,
    stores: &[IvaStore],
    params: &SimParams,
    log: &mut TrafficLog,
    inboxes: &mut [Inbox],
) -> Result<(), SimError> {
    // Each needed-but-missing IVA is multicast once, whole, by the
    // lowest-index node storing its file, at the first round anyone needs it.
    let mut needed: BTreeMap<(usize, usize), (usize, BTreeSet<usize>)> = BTreeMap::new();
    for (round_idx, round) in scheme.rounds().iter().enumerate() {
        for node in 0..scheme.num_nodes() {
            let function = round.functions[node];
            for file in 0..scheme.num_files() {
                if !scheme.stores_file(node, file) {
                    needed
                        .entry((function, file))
                        .or_insert_with(|| (round_idx, BTreeSet::new()))
                        .1
                        .insert(node);
                }
            }
        }
    }
    let mut messages: Vec<((usize, usize), (usize, BTreeSet<usize>))> =
        needed.into_iter().collect();
    messages.sort_by_key(|&((function, file), (round, _))| (round, function, file));

    for ((function, file), (round, recipients)) in messages {
        let transmitter = (0..scheme.num_nodes())
            .find(|&node| scheme.stores_file(node, file))
            .expect("every file of a valid PDA is stored somewhere");
        let payload = stores[transmitter]
            .get(function, file)
            .ok_or(SimError::MissingLocalIva {
                node: transmitter,
                function,
                file,
            })?
            .to_vec();
        let recipients: Vec<usize> = recipients.into_iter().collect();
        for &recipient in &recipients {
            inboxes[recipient]
                .whole
                .insert((function, file), payload.clone());
        }
        log.records.push(TrafficRecord {
            round,
            kind: MessageKind::Uncoded { function, file },
            transmitter,
            bits: params.iva_bits as u64,
            recipients,
        });
    }
    Ok(())
}

/// Reduce phase: reconstruct every missing IVA, verify each reconstruction
/// against a direct computation, and digest the per-function IVA vectors.
pub fn run_reduce(
    scheme: &CompiledScheme,
    dataset: &Dataset,
    stores: &[IvaStore],
    shuffle: &ShuffleOutcome,
    params: &SimParams,
) -> Result<RunReport, SimError> {
    params.validate(scheme)?;
    if stores.len() != scheme.num_nodes() {
        return Err(SimError::StoreCountMismatch {
            expected: scheme.num_nodes(),
            found: stores.len(),
        });
    }
    let segment_bytes = params.iva_bits / 8 / (scheme.regularity() - 1);
    let num_nodes = scheme.num_nodes();
    let num_files = scheme.num_files();

    let mut decode_success = Vec::with_capacity(num_nodes);
    let mut outputs = Vec::with_capacity(num_nodes);
    for node in 0..num_nodes {
        let inbox = &shuffle.inboxes[node];
        let mut node_success = Vec::new();
        let mut node_outputs = Vec::new();
        for (round_idx, round) in scheme.rounds().iter().enumerate() {
            let function = round.functions[node];
            let mut all_ok = true;
            let mut ivas: Vec<Vec<u8>> = Vec::with_capacity(num_files);
            for file in 0..num_files {
                let value = if let Some(local) = stores[node].get(function, file) {
                    local.to_vec()
                } else if scheme.uncoded_fallback() {
                    inbox
                        .whole
                        .get(&(function, file))
                        .ok_or(SimError::MissingWholeIva {
                            node,
                            function,
                            file,
                        })?
                        .clone()
                } else {
                    reconstruct_coded(scheme, stores, inbox, node, round_idx, file, segment_bytes)?
                };
                if !scheme.stores_file(node, file) {
                    // Verify against the direct computation.
                    let truth = iva_bytes(function, file, &dataset.files()[file], params.iva_bits);
                    all_ok &= value == truth;
                }
                ivas.push(value);
            }
            node_success.push(all_ok);
            node_outputs.push(ReduceOutput {
                function,
                bytes: reduce_digest(function, &ivas, params.output_bits),
            });
        }
        decode_success.push(node_success);
        outputs.push(node_outputs);
    }

    let total_bits = shuffle.log.total_bits();
    let normalizer = BigInt::from(scheme.num_functions())
        * BigInt::from(num_files)
        * BigInt::from(params.iva_bits);
    Ok(RunReport {
        measured_computation: Rational::new(
            BigInt::from(stores.iter().map(IvaStore::num_files).sum::<usize>()),
            BigInt::from(num_files),
        ),
        measured_communication: Rational::new(BigInt::from(total_bits), normalizer),
        total_iva_units: Rational::new(BigInt::from(total_bits), BigInt::from(params.iva_bits)),
        total_messages: shuffle.log.len(),
        total_bits,
        decode_success,
        outputs,
    })
}

/// Recover one missing IVA from the group messages: peel each received XOR
/// down to this node's segment by cancelling the locally computable terms.
fn reconstruct_coded(
    scheme: &CompiledScheme,
    stores: &[IvaStore],
    inbox: &Inbox,
    node: usize,
    round_idx: usize,
    file: usize,
    segment_bytes: usize,
) -> Result<Vec<u8>, SimError> {
    let PdaEntry::Code(label) = scheme.pda().entry(file, node) else {
        unreachable!("caller only reconstructs files without a local star");
    };
    let group = &scheme.rounds()[round_idx].groups[label];
    let own_position = group
        .members
        .iter()
        .position(|m| m.col == node)
        .expect("node is a member of the group of its own label");

    let mut value = vec![0u8; segment_bytes * group.segments_per_iva()];
    for (position, member) in group.members.iter().enumerate() {
        if position == own_position {
            continue;
        }
        let payload = inbox
            .coded
            .get(&(round_idx, label, member.col))
            .ok_or(SimError::MissingMessage {
                node,
                round: round_idx,
                label,
                transmitter: member.col,
            })?;
        let mut segment = payload.clone();
        for term in group.message_terms(position) {
            if term.function == group.members[own_position].function
                && term.file == group.members[own_position].row
            {
                continue; // that is the unknown this message reveals
            }
            let local = stores[node].get(term.function, term.file).ok_or(
                SimError::MissingLocalIva {
                    node,
                    function: term.function,
                    file: term.file,
                },
            )?;
            let start = term.segment * segment_bytes;
            xor_into(&mut segment, &local[start..start + segment_bytes]);
        }
        let slot = group.segment_index(own_position, position);
        value[slot * segment_bytes..(slot + 1) * segment_bytes].copy_from_slice(&segment);
    }
    Ok(value)
}

/// Map, shuffle, and reduce in one call.
pub fn run_scheme(
    scheme: &CompiledScheme,
    dataset: &Dataset,
    params: &SimParams,
) -> Result<RunReport, SimError> {
    let stores = run_map(scheme, dataset, params)?;
    let shuffle = run_shuffle(scheme, &stores, params)?;
    run_reduce(scheme, dataset, &stores, &shuffle, params)
}

/// Centralized reference computation of one reduce output: every IVA is
/// computed directly from the dataset, with no shuffle involved.
pub fn oracle_reduce(dataset: &Dataset, function: usize, params: &SimParams) -> Vec<u8> {
    let ivas: Vec<Vec<u8>> = dataset
        .files()
        .iter()
        .enumerate()
        .map(|(file, contents)| iva_bytes(function, file, contents, params.iva_bits))
        .collect();
    reduce_digest(function, &ivas, params.output_bits)
}

/// [`oracle_reduce`] over a function list; empty list, empty result.
pub fn oracle_outputs(
    dataset: &Dataset,
    functions: &[usize],
    params: &SimParams,
) -> Vec<(usize, Vec<u8>)> {
    functions
        .iter()
        .map(|&function| (function, oracle_reduce(dataset, function, params)))
        .collect()
}
