use std::collections::HashMap;
use std::sync::Arc;

/// Occupation-number basis of `num_modes` modes holding at most `cutoff`
/// photons in total.
///
/// States are enumerated in lexicographic order of their occupation tuples,
/// so for a single mode index `n` is the Fock state `|n⟩`.
#[derive(Debug, PartialEq, Eq)]
pub struct FockBasis {
    num_modes: usize,
    cutoff: usize,
    states: Vec<Box<[usize]>>,
    index: HashMap<Box<[usize]>, usize>,
}

impl FockBasis {
    pub fn new(num_modes: usize, cutoff: usize) -> Arc<Self> {
        assert!(num_modes > 0, "a Fock basis needs at least one mode");
        let mut states = Vec::new();
        let mut current = vec![0; num_modes];
        enumerate(&mut current, 0, cutoff, &mut states);
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Arc::new(Self {
            num_modes,
            cutoff,
            states,
            index,
        })
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn occupation(&self, i: usize) -> &[usize] {
        &self.states[i]
    }

    pub fn total(&self, i: usize) -> usize {
        self.states[i].iter().sum()
    }

    pub fn index_of(&self, occupation: &[usize]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.states.iter().map(|s| &**s)
    }
}

fn enumerate(current: &mut Vec<usize>, mode: usize, budget: usize, out: &mut Vec<Box<[usize]>>) {
    if mode == current.len() {
        out.push(current.clone().into_boxed_slice());
        return;
    }
    for n in 0..=budget {
        current[mode] = n;
        enumerate(current, mode + 1, budget - n, out);
    }
    current[mode] = 0;
}

/// Number of states with total occupation at most `cutoff` on `num_modes` modes.
pub fn basis_dim(num_modes: usize, cutoff: usize) -> usize {
    // C(cutoff + num_modes, num_modes)
    let mut acc: u128 = 1;
    for k in 1..=num_modes as u128 {
        acc = acc * (cutoff as u128 + k) / k;
    }
    acc as usize
}
