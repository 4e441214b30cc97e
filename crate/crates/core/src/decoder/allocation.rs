//! Division of a fixed beam across constraint banks `0..=C`.

/// Beam slots per bank, indexed by number of constraint tokens met.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BankAllocation {
    slots: Vec<usize>,
}

impl BankAllocation {
    pub fn new(slots: Vec<usize>) -> Self {
        Self { slots }
    }

    pub fn slots(&self) -> &[usize] {
        &self.slots
    }

    pub fn total(&self) -> usize {
        self.slots.iter().sum()
    }

    pub fn num_banks(&self) -> usize {
        self.slots.len()
    }
}

/// `⌊k / (C+1)⌋` slots per bank, remainder to the topmost bank `C`.
pub fn allocate_banks(k: usize, c: usize) -> BankAllocation {
    let banks = c + 1;
    let base = k / banks;
    let mut slots = vec![base; banks];
    slots[c] += k - base * banks;
    BankAllocation { slots }
}

/// Moves the surplus of every overfilled bank (more slots than candidates) to
/// banks with unmet demand, nearest first.
///
/// Overfilled banks are processed from `C` down to 0; at equal distance the
/// higher (more constrained) bank is served first. Surplus nobody can use is
/// dropped, so the result sums to `min(total slots, total candidates)` and no
/// bank holds more slots than it has candidates.
pub fn adjust_allocation(alloc: &BankAllocation, counts: &[usize]) -> BankAllocation {
    assert_eq!(
        alloc.slots.len(),
        counts.len(),
        "one candidate count per bank required"
    );
    let mut slots = alloc.slots.clone();
    let n = slots.len();
    for i in (0..n).rev() {
        if slots[i] <= counts[i] {
            continue;
        }
        let mut surplus = slots[i] - counts[i];
        slots[i] = counts[i];
        for d in 1..n {
            if surplus == 0 {
                break;
            }
            let neighbors = [i.checked_add(d).filter(|&j| j < n), i.checked_sub(d)];
            for j in neighbors.into_iter().flatten() {
                let give = counts[j].saturating_sub(slots[j]).min(surplus);
                slots[j] += give;
                surplus -= give;
            }
        }
    }
    BankAllocation { slots }
}
