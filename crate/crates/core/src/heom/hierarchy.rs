use num_complex::Complex64;
use std::collections::HashMap;

/// Exponential term attached to a coupling channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub channel: usize,
    pub coefficient: Complex64,
    pub rate: f64,
    /// Deep terms are excited up to the full depth; the others only at
    /// tier 1 with every other term unexcited.
    pub deep: bool,
}

/// Link `n -> n +/- e_k` with its scaled prefactor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub term: usize,
    pub target: usize,
    pub scale: f64,
}

/// Auxiliary density matrix index set with tier-sum truncation.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    terms: Vec<Term>,
    depth: usize,
    indices: Vec<Vec<u16>>,
    up: Vec<Vec<Link>>,
    down: Vec<Vec<Link>>,
    decay: Vec<f64>,
}

/// `C(n + k, k)` deep indices plus one per shallow term when `n >= 1`.
pub fn adm_count(depth: usize, deep_terms: usize, shallow_terms: usize) -> usize {
    let mut c: u128 = 1;
    for i in 1..=deep_terms as u128 {
        c = c * (depth as u128 + i) / i;
    }
    c as usize + if depth >= 1 { shallow_terms } else { 0 }
}

fn enumerate(deep: &[usize], n_terms: usize, depth: usize) -> Vec<Vec<u16>> {
    let mut out = Vec::new();
    let mut current = vec![0u16; n_terms];
    fn rec(
        pos: usize,
        left: usize,
        deep: &[usize],
        current: &mut Vec<u16>,
        out: &mut Vec<Vec<u16>>,
    ) {
        if pos == deep.len() {
            out.push(current.clone());
            return;
        }
        for k in 0..=left {
            current[deep[pos]] = k as u16;
            rec(pos + 1, left - k, deep, current, out);
        }
        current[deep[pos]] = 0;
    }
    rec(0, depth, deep, &mut current, &mut out);
    // Order by tier so the root comes first.
    out.sort_by_key(|n| n.iter().map(|&x| x as usize).sum::<usize>());
    out
}

impl Hierarchy {
    pub fn new(terms: Vec<Term>, depth: usize) -> Self {
        let deep: Vec<usize> = (0..terms.len()).filter(|&k| terms[k].deep).collect();
        let mut indices = enumerate(&deep, terms.len(), depth);
        if depth >= 1 {
            for (k, t) in terms.iter().enumerate() {
                if !t.deep {
                    let mut n = vec![0u16; terms.len()];
                    n[k] = 1;
                    indices.push(n);
                }
            }
        }
        let lookup: HashMap<&[u16], usize> = indices
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_slice(), i))
            .collect();
        let mut up = vec![Vec::new(); indices.len()];
        let mut down = vec![Vec::new(); indices.len()];
        let mut decay = vec![0.0; indices.len()];
        let mut probe = vec![0u16; terms.len()];
        for (i, n) in indices.iter().enumerate() {
            decay[i] = n.iter().zip(&terms).map(|(&k, t)| k as f64 * t.rate).sum();
            probe.copy_from_slice(n);
            for (k, t) in terms.iter().enumerate() {
                let nk = n[k] as f64;
                let magnitude = t.coefficient.norm();
                probe[k] += 1;
                if let Some(&target) = lookup.get(probe.as_slice()) {
                    up[i].push(Link {
                        term: k,
                        target,
                        scale: ((nk + 1.0) * magnitude).sqrt(),
                    });
                }
                probe[k] -= 1;
                if n[k] > 0 {
                    probe[k] -= 1;
                    let target = lookup[probe.as_slice()];
                    down[i].push(Link {
                        term: k,
                        target,
                        scale: (nk / magnitude).sqrt(),
                    });
                    probe[k] += 1;
                }
            }
        }
        Self {
            terms,
            depth,
            indices,
            up,
            down,
            decay,
        }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn multi_index(&self, i: usize) -> &[u16] {
        &self.indices[i]
    }

    pub fn tier(&self, i: usize) -> usize {
        self.indices[i].iter().map(|&x| x as usize).sum()
    }

    /// Neighbours one tier up, with `sqrt((n_k + 1) |c_k|)`.
    pub fn up(&self, i: usize) -> &[Link] {
        &self.up[i]
    }

    /// Neighbours one tier down, with `sqrt(n_k / |c_k|)`.
    pub fn down(&self, i: usize) -> &[Link] {
        &self.down[i]
    }

    /// `sum_k n_k nu_k`.
    pub fn decay(&self) -> &[f64] {
        &self.decay
    }
}
