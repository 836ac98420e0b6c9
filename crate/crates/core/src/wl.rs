//! 1-WL colour refinement.
//!
//! Colours are relabelled every round by sorting the distinct
//! `(own colour, sorted neighbour colours)` signatures, so colour ids are a
//! function of the graph's isomorphism class and never of its labelling or
//! of a hash function.

use std::fmt;

use sha2::{Digest, Sha256};

use crate::graph::Graph;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coloring {
    /// Dense colour id per vertex, starting at 0.
    pub colors: Vec<usize>,
    /// Number of refinement rounds that split the partition.
    pub round: usize,
    /// Number of colour classes before the first round and after each round.
    pub class_counts: Vec<usize>,
}

impl Coloring {
    pub fn num_classes(&self) -> usize {
        self.class_counts.last().copied().unwrap_or(0)
    }
}

type Signature = (usize, Vec<usize>);

struct Refinement {
    colors: Vec<usize>,
    /// Canonical encoding of everything that determined the colour ids.
    transcript: Vec<u64>,
    round: usize,
    class_counts: Vec<usize>,
}

fn initial_colors(g: &Graph) -> (Vec<usize>, Vec<u64>) {
    let rows: Vec<Vec<u64>> = (0..g.n())
        .map(|i| g.vfeat_row(i).iter().map(|x| canonical_bits(*x)).collect())
        .collect();
    let mut distinct = rows.clone();
    distinct.sort();
    distinct.dedup();
    let colors = rows
        .iter()
        .map(|r| distinct.binary_search(r).unwrap())
        .collect::<Vec<_>>();
    let mut transcript = vec![g.n() as u64, g.d_v() as u64, distinct.len() as u64];
    for (c, row) in distinct.iter().enumerate() {
        transcript.extend_from_slice(row);
        transcript.push(colors.iter().filter(|&&x| x == c).count() as u64);
    }
    (colors, transcript)
}

fn canonical_bits(x: f64) -> u64 {
    // Treat -0.0 and 0.0 as the same feature value.
    if x == 0.0 {
        0
    } else {
        x.to_bits()
    }
}

fn refine(g: &Graph, max_rounds: usize) -> Refinement {
    let adjacency = g.adjacency_lists();
    let (mut colors, mut transcript) = initial_colors(g);
    let mut classes = count_classes(&colors);
    let mut class_counts = vec![classes];
    let mut round = 0;
    for _ in 0..max_rounds.max(1) {
        let signatures: Vec<Signature> = (0..g.n())
            .map(|u| {
                let mut nb: Vec<usize> = adjacency[u].iter().map(|&v| colors[v]).collect();
                nb.sort_unstable();
                (colors[u], nb)
            })
            .collect();
        let mut distinct = signatures.clone();
        distinct.sort();
        distinct.dedup();
        let next: Vec<usize> = signatures
            .iter()
            .map(|s| distinct.binary_search(s).unwrap())
            .collect();

        transcript.push(u64::MAX);
        transcript.push(distinct.len() as u64);
        for (c, (own, nb)) in distinct.iter().enumerate() {
            transcript.push(*own as u64);
            transcript.push(nb.len() as u64);
            transcript.extend(nb.iter().map(|&x| x as u64));
            transcript.push(next.iter().filter(|&&x| x == c).count() as u64);
        }

        let next_classes = distinct.len();
        colors = next;
        class_counts.push(next_classes);
        if next_classes == classes {
            break;
        }
        classes = next_classes;
        round += 1;
    }
    Refinement {
        colors,
        transcript,
        round,
        class_counts,
    }
}

fn count_classes(colors: &[usize]) -> usize {
    colors.iter().max().map_or(0, |m| m + 1)
}

/// Refines until the partition is stable or `max_rounds` rounds have run.
pub fn wl_refine(g: &Graph, max_rounds: usize) -> Coloring {
    let r = refine(g, max_rounds);
    Coloring {
        colors: r.colors,
        round: r.round,
        class_counts: r.class_counts,
    }
}

/// A 256-bit digest of the stable WL colouring.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fingerprint(pub [u8; 32]);

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fingerprint({self})")
    }
}

/// Digest of the full refinement transcript (every round's signature
/// histogram) up to stabilisation. Two graphs get the same fingerprint
/// exactly when 1-WL cannot tell them apart.
pub fn wl_fingerprint(g: &Graph) -> Fingerprint {
    // n + 1 rounds always reach stability: each splitting round adds a class.
    let r = refine(g, g.n() + 1);
    let mut hasher = Sha256::new();
    for word in &r.transcript {
        hasher.update(word.to_le_bytes());
    }
    Fingerprint(hasher.finalize().into())
}

/// Whether 1-WL fails to distinguish `a` and `b`.
pub fn wl_equivalent(a: &Graph, b: &Graph) -> bool {
    wl_fingerprint(a) == wl_fingerprint(b)
}
