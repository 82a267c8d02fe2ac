//! Exact information functionals on joint tables.

use super::joint::{JointTable, Process, VarId};
use crate::error::Result;

const LN2: f64 = std::f64::consts::LN_2;

/// A resolved variable selection: layout positions, radices, and a dense
/// probability accumulator indexed in mixed radix.
struct Selection {
    positions: Vec<usize>,
    radices: Vec<usize>,
    dense: Vec<f64>,
}

impl Selection {
    fn new(table: &JointTable, vars: &[VarId]) -> Result<Self> {
        let positions: Vec<usize> = vars
            .iter()
            .map(|&v| table.var_position(v))
            .collect::<Result<_>>()?;
        let radices: Vec<usize> = positions.iter().map(|&p| table.radix_at(p)).collect();
        let size = radices.iter().product::<usize>().max(1);
        Ok(Self {
            positions,
            radices,
            dense: vec![0.0; size],
        })
    }

    fn index(&self, table: &JointTable, key: u64) -> usize {
        let mut idx = 0;
        for (&pos, &radix) in self.positions.iter().zip(self.radices.iter()) {
            idx = idx * radix + table.extract(key, pos);
        }
        idx
    }
}

/// Conditional mutual information I(A; B | C) in bits, computed directly
/// from the four marginals p(abc), p(ac), p(bc), p(c). Variables shared
/// between groups are deduplicated inside each union.
pub fn conditional_mi(
    table: &JointTable,
    group_a: &[VarId],
    group_b: &[VarId],
    group_c: &[VarId],
) -> Result<f64> {
    let union = |groups: &[&[VarId]]| -> Vec<VarId> {
        let mut vars = Vec::new();
        for group in groups {
            for &v in *group {
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
        }
        vars
    };

    let mut sel_abc = Selection::new(table, &union(&[group_a, group_b, group_c]))?;
    let mut sel_ac = Selection::new(table, &union(&[group_a, group_c]))?;
    let mut sel_bc = Selection::new(table, &union(&[group_b, group_c]))?;
    let mut sel_c = Selection::new(table, &union(&[group_c]))?;

    for &(key, p) in table.entries() {
        let i = sel_abc.index(table, key);
        sel_abc.dense[i] += p;
        let i = sel_ac.index(table, key);
        sel_ac.dense[i] += p;
        let i = sel_bc.index(table, key);
        sel_bc.dense[i] += p;
        let i = sel_c.index(table, key);
        sel_c.dense[i] += p;
    }

    // Σ over distinct (a,b,c) cells of p(abc)·log[p(abc)p(c)/(p(ac)p(bc))];
    // the support walk below visits each cell once.
    let mut acc = 0.0;
    let mut seen = std::collections::HashSet::new();
    for &(key, p) in table.entries() {
        if p <= 0.0 {
            continue;
        }
        let i_abc = sel_abc.index(table, key);
        if !seen.insert(i_abc) {
            continue;
        }
        let pj = sel_abc.dense[i_abc];
        let pc = sel_c.dense[sel_c.index(table, key)];
        let pa = sel_ac.dense[sel_ac.index(table, key)];
        let pb = sel_bc.dense[sel_bc.index(table, key)];
        acc += pj * (pj.ln() + pc.ln() - pa.ln() - pb.ln());
    }
    Ok(acc / LN2)
}

/// A causally conditioning process: at step t the conditioning window is
/// c^t when inclusive, c^{t−1} when shifted.
#[derive(Debug, Clone, Copy)]
pub struct CausalCond {
    pub process: Process,
    pub shifted: bool,
}

impl CausalCond {
    pub fn inclusive(process: Process) -> Self {
        Self {
            process,
            shifted: false,
        }
    }

    pub fn shifted(process: Process) -> Self {
        Self {
            process,
            shifted: true,
        }
    }
}

/// Causally conditioned directed information
/// Σ_{t=0}^{T} I(source^t; target_t | target^{t−1}, cond windows at t)
/// in bits.
pub fn directed_information(
    table: &JointTable,
    source: Process,
    target: Process,
    conditioning: &[CausalCond],
) -> Result<f64> {
    let mut total = 0.0;
    for t in 0..=table.horizon {
        total += di_summand(table, source, target, conditioning, t)?;
    }
    Ok(total)
}

/// One summand I(source^t; target_t | target^{t−1}, cond^t).
pub fn di_summand(
    table: &JointTable,
    source: Process,
    target: Process,
    conditioning: &[CausalCond],
    t: usize,
) -> Result<f64> {
    let group_a: Vec<VarId> = (0..=t).map(|i| (source, i)).collect();
    let group_b: Vec<VarId> = vec![(target, t)];
    let mut group_c: Vec<VarId> = (0..t).map(|i| (target, i)).collect();
    for cond in conditioning {
        let hi = if cond.shifted { t } else { t + 1 };
        for i in 0..hi {
            group_c.push((cond.process, i));
        }
    }
    conditional_mi(table, &group_a, &group_b, &group_c)
}
