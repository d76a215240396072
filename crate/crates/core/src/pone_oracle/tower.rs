//! Polynomial maps built as towers `z = o + λ (u - b)^n`, with the marked
//! points pulled back level by level.
//!
//! Each step is centered at a marked point `o` of the level above, and `b`
//! is its unique preimage, so every critical value of the composite is
//! marked and the induced cover carries all of its ramification on
//! punctures. Requires the residue characteristic to be prime to every
//! exponent.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{OracleError, PolynomialMap, UltrametricPointSet};
use crate::rational::{q, Ext, Q};

/// `z = o + λ (u - b)^n` with `v(λ) = scale`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerStep {
    /// Label of `o` in the level above.
    pub center: String,
    pub exponent: u32,
    pub scale: Q,
}

/// Points of the level below a step, each with its image index above and
/// local multiplicity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pullback {
    pub points: UltrametricPointSet,
    pub parent: Vec<(usize, u32)>,
}

/// Pulls the marked points back through one step.
///
/// Over `z ≠ o` with `r = v(z - o) - v(λ)` lie `n` points at distance `r/n`
/// from `b` and from each other. Two points `z, z'` with `v(z - z') >
/// v(z - o)` sit in the same direction from `o`; their sheets pair up, the
/// `k`-th lifts at distance `v(z - z') - v(λ) - (n-1) r/n` and all other
/// pairs at `r/n`.
pub fn pull_back(set: &UltrametricPointSet, step: &PowerStep, residue_char: u32) -> Result<Pullback, OracleError> {
    let n = step.exponent;
    if n == 0 {
        return Err(OracleError::ZeroDegree);
    }
    if residue_char != 0 && n % residue_char == 0 {
        return Err(OracleError::WildExponent(n));
    }
    let o = set.index(&step.center).ok_or_else(|| OracleError::UnknownLabel(step.center.clone()))?;
    let nq = q(n as i64);
    let fin = |x: Ext| match x {
        Ext::Finite(v) => v,
        Ext::Infinite => unreachable!("distinct points"),
    };

    // (point above, sheet, distance r/n to b)
    let mut below: Vec<(usize, u32, Q)> = Vec::new();
    let mut labels = Vec::new();
    let mut parent = Vec::new();
    for z in 0..set.len() {
        if z == o {
            below.push((z, 0, Q::from_integer(0)));
            labels.push(format!("{}.0", set.label(z)));
            parent.push((z, n));
        } else {
            let a = (fin(set.val(z, o)) - step.scale) / nq;
            for k in 0..n {
                below.push((z, k, a));
                labels.push(format!("{}.{}", set.label(z), k));
                parent.push((z, 1));
            }
        }
    }
    let m = below.len();
    let mut val = vec![vec![Ext::Infinite; m]; m];
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let (z, k, a) = below[i];
            let (z2, k2, a2) = below[j];
            let v = if z == o {
                a2
            } else if z2 == o || z == z2 {
                a
            } else if a != a2 {
                a.min(a2)
            } else if set.val(z, z2) > set.val(z, o) && k == k2 {
                fin(set.val(z, z2)) - step.scale - (nq - q(1)) * a
            } else {
                a
            };
            val[i][j] = Ext::Finite(v);
        }
    }
    Ok(Pullback { points: UltrametricPointSet::new(labels, val)?, parent })
}

/// A composite of power steps over a marked top level; `steps[0]` is the
/// outermost map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tower {
    pub top: UltrametricPointSet,
    pub steps: Vec<PowerStep>,
    pub residue_char: u32,
}

impl Tower {
    pub fn degree(&self) -> u32 {
        self.steps.iter().map(|s| s.exponent).product()
    }

    /// The marked levels from the top down, ending at the source.
    pub fn levels(&self) -> Result<Vec<Pullback>, OracleError> {
        let mut out: Vec<Pullback> = Vec::new();
        for step in &self.steps {
            let above = out.last().map_or(&self.top, |p| &p.points);
            let next = pull_back(above, step, self.residue_char)?;
            out.push(next);
        }
        Ok(out)
    }

    /// The composite as a [`PolynomialMap`] from the bottom level to the top.
    pub fn polynomial_map(&self) -> Result<PolynomialMap, OracleError> {
        let levels = self.levels()?;
        let Some(bottom) = levels.last() else {
            // no steps: the identity
            let fibers = (0..self.top.len()).map(|i| (String::from(self.top.label(i)), vec![(i, 1)])).collect();
            let mut map = PolynomialMap::new(self.top.clone(), q(0), fibers);
            map.residue_char = self.residue_char;
            return Ok(map);
        };
        // chase each bottom point to the top, multiplying multiplicities
        let mut fibers: Vec<(String, Vec<(usize, u32)>)> =
            (0..self.top.len()).map(|i| (String::from(self.top.label(i)), Vec::new())).collect();
        for start in 0..bottom.points.len() {
            let mut idx = start;
            let mut mult = 1;
            for level in levels.iter().rev() {
                let (up, m) = level.parent[idx];
                mult *= m;
                idx = up;
            }
            fibers[idx].1.push((start, mult));
        }
        // leading coefficient of o + λ (u - b)^n composed inside out
        let mut lead = q(0);
        for s in self.steps.iter().rev() {
            lead = s.scale + q(s.exponent as i64) * lead;
        }
        let mut map = PolynomialMap::new(bottom.points.clone(), lead, fibers);
        map.residue_char = self.residue_char;
        Ok(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genus_audit::{global_rh_audit, WildOrders};
    use crate::pone_oracle::induced_cover;
    use crate::rational::frac;

    fn top(labels: &[&str], f: impl FnMut(usize, usize) -> Q) -> UltrametricPointSet {
        UltrametricPointSet::from_fn(labels.iter().map(|s| String::from(*s)).collect(), f).unwrap()
    }

    #[test]
    fn square_root_pullback() {
        let t = top(&["0", "t"], |_, _| q(1));
        let step = PowerStep { center: "0".into(), exponent: 2, scale: q(0) };
        let p = pull_back(&t, &step, 0).unwrap();
        assert_eq!(p.points.labels(), ["0.0", "t.0", "t.1"]);
        assert_eq!(p.parent, vec![(0, 2), (1, 1), (1, 1)]);
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert_eq!(p.points.val(i, j), Ext::Finite(frac(1, 2)));
        }
        assert!(matches!(pull_back(&t, &step, 2), Err(OracleError::WildExponent(2))));
    }

    #[test]
    fn nearby_points_pair_their_sheets() {
        // 1 and 1 + t lie in the same direction from 0
        let t = top(&["0", "1", "1+t"], |i, j| if (i, j) == (1, 2) { q(1) } else { q(0) });
        let step = PowerStep { center: "0".into(), exponent: 3, scale: q(0) };
        let p = pull_back(&t, &step, 0).unwrap();
        let i = |l: &str| p.points.index(l).unwrap();
        assert_eq!(p.points.val(i("1.0"), i("1+t.0")), Ext::Finite(q(1)));
        assert_eq!(p.points.val(i("1.0"), i("1+t.1")), Ext::Finite(q(0)));
        assert_eq!(p.points.val(i("1.1"), i("1.2")), Ext::Finite(q(0)));
    }

    #[test]
    fn tower_maps_reproduce_their_top_level() {
        let t = top(&["0", "1", "x"], |i, j| if (i, j) == (0, 2) { q(2) } else { q(0) });
        let tower = Tower {
            top: t.clone(),
            steps: vec![
                PowerStep { center: "x".into(), exponent: 2, scale: q(1) },
                PowerStep { center: "0.0".into(), exponent: 3, scale: q(-1) },
            ],
            residue_char: 0,
        };
        assert_eq!(tower.degree(), 6);
        let map = tower.polynomial_map().unwrap();
        assert_eq!(map.degree(), 6);
        assert_eq!(map.target_points().unwrap(), t);
        let ic = induced_cover(&map).unwrap();
        assert!(ic.cover.is_valid());
        assert!(ic.hidden_ramification.is_empty());
        assert_eq!(global_rh_audit(&ic.cover, &WildOrders::new()).unwrap().line.residual(), 0);
    }
}
