//! Byproduct bookkeeping for measurement patterns.
//!
//! A frame stores exponent bits for X and Z on individual sites and for
//! pair phases (CZ) on site pairs. A frame `f` stands for the operator
//! `CZ^cp . Z^z . X^x`, with the X layer acting on the state first. The
//! composition law and the conjugation rules below keep that correspondence
//! exact up to global phase, which is what makes deferred correction sound.
//!
//! Pair exponents appear because pushing X through the three-site entangler
//! leaves a CZ on the other two sites. Unlike plain Pauli bytes these do not
//! commute with later X layers, so composition carries a cross term and the
//! conjugation rules refuse the cases that would leave the tracked family.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{gates, StateVector};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ByproductFrame {
    x: BTreeSet<usize>,
    z: BTreeSet<usize>,
    cp: BTreeSet<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct FrameDump {
    x: BTreeMap<usize, u8>,
    z: BTreeMap<usize, u8>,
    cp: Vec<(usize, usize, u8)>,
}

impl Serialize for ByproductFrame {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FrameDump {
            x: self.x.iter().map(|&s| (s, 1)).collect(),
            z: self.z.iter().map(|&s| (s, 1)).collect(),
            cp: self.cp.iter().map(|&(p, q)| (p, q, 1)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ByproductFrame {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let dump = FrameDump::deserialize(d)?;
        let mut out = ByproductFrame::identity();
        for (site, bit) in dump.x {
            if bit & 1 == 1 {
                out.flip_x(site);
            }
        }
        for (site, bit) in dump.z {
            if bit & 1 == 1 {
                out.flip_z(site);
            }
        }
        for (p, q, bit) in dump.cp {
            if bit & 1 == 1 {
                out.flip_cp(p, q).map_err(serde::de::Error::custom)?;
            }
        }
        Ok(out)
    }
}

fn pair(i: usize, j: usize) -> Result<(usize, usize)> {
    if i == j {
        return Err(Error::DuplicateSite(vec![i, j]));
    }
    Ok((i.min(j), i.max(j)))
}

impl ByproductFrame {
    pub fn identity() -> Self {
        ByproductFrame::default()
    }

    pub fn is_identity(&self) -> bool {
        self.x.is_empty() && self.z.is_empty() && self.cp.is_empty()
    }

    pub fn x_bit(&self, site: usize) -> u8 {
        u8::from(self.x.contains(&site))
    }

    pub fn z_bit(&self, site: usize) -> u8 {
        u8::from(self.z.contains(&site))
    }

    pub fn cp_bit(&self, i: usize, j: usize) -> u8 {
        match pair(i, j) {
            Ok(p) => u8::from(self.cp.contains(&p)),
            Err(_) => 0,
        }
    }

    pub fn flip_x(&mut self, site: usize) {
        toggle(&mut self.x, site);
    }

    pub fn flip_z(&mut self, site: usize) {
        toggle(&mut self.z, site);
    }

    pub fn flip_cp(&mut self, i: usize, j: usize) -> Result<()> {
        toggle(&mut self.cp, pair(i, j)?);
        Ok(())
    }

    pub fn x_sites(&self) -> impl Iterator<Item = usize> + '_ {
        self.x.iter().copied()
    }

    pub fn z_sites(&self) -> impl Iterator<Item = usize> + '_ {
        self.z.iter().copied()
    }

    pub fn cp_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cp.iter().copied()
    }

    /// Operator product: the result stands for `op(a) . op(b)`, i.e. `b`
    /// acts on the state first. Exponents add mod 2, except that commuting
    /// `b`'s pair phases past `a`'s X layer deposits extra Z bits: each pair
    /// (p, q) of `b` with p in `a.x` flips z[q], and vice versa.
    pub fn compose(a: &ByproductFrame, b: &ByproductFrame) -> ByproductFrame {
        let mut out = ByproductFrame {
            x: sym_diff(&a.x, &b.x),
            z: sym_diff(&a.z, &b.z),
            cp: sym_diff(&a.cp, &b.cp),
        };
        for &(p, q) in &b.cp {
            if a.x.contains(&p) {
                toggle(&mut out.z, q);
            }
            if a.x.contains(&q) {
                toggle(&mut out.z, p);
            }
        }
        out
    }

    /// The frame `g` with `op(g) . S = S . op(self)` for the three-site
    /// entangler `S` on `sites`: X bits survive unchanged, but each X flips
    /// the pair phase on the other two sites, and each X pair flips Z on the
    /// remaining site. Errors if a pending pair phase already sits entirely
    /// inside the triple, since pushing it through would need a three-site
    /// exponent the frame cannot store.
    pub fn conjugate_through_ccz(&self, sites: (usize, usize, usize)) -> Result<ByproductFrame> {
        let t = [sites.0, sites.1, sites.2];
        if t[0] == t[1] || t[0] == t[2] || t[1] == t[2] {
            return Err(Error::DuplicateSite(t.to_vec()));
        }
        for a in 0..3 {
            for b in a + 1..3 {
                let p = pair(t[a], t[b])?;
                if self.cp.contains(&p) {
                    return Err(Error::PairInsideTriple(p.0, p.1));
                }
            }
        }
        let mut out = self.clone();
        for j in 0..3 {
            let (sj, sk, sl) = (t[j], t[(j + 1) % 3], t[(j + 2) % 3]);
            if self.x.contains(&sk) && self.x.contains(&sl) {
                toggle(&mut out.z, sj);
            }
            if self.x.contains(&sj) {
                toggle(&mut out.cp, pair(sk, sl)?);
            }
        }
        Ok(out)
    }

    /// Conjugation through a pair entangler: X on either site flips Z on the
    /// other. Pair phases commute with it.
    pub fn conjugate_through_cz(&self, i: usize, j: usize) -> Result<ByproductFrame> {
        pair(i, j)?;
        let mut out = self.clone();
        if self.x.contains(&i) {
            toggle(&mut out.z, j);
        }
        if self.x.contains(&j) {
            toggle(&mut out.z, i);
        }
        Ok(out)
    }

    /// Conjugation through a Hadamard on one site swaps that site's X and Z
    /// bits. A pair phase touching the site cannot be pushed through (the
    /// conjugate is no longer a product of X, Z and pair phases), so that
    /// case is an error rather than a silently wrong frame.
    pub fn conjugate_through_h(&self, site: usize) -> Result<ByproductFrame> {
        for &(p, q) in &self.cp {
            if p == site || q == site {
                return Err(Error::PairAtSwappedSite(site));
            }
        }
        let mut out = self.clone();
        let had_x = out.x.remove(&site);
        let had_z = out.z.remove(&site);
        if had_x {
            out.z.insert(site);
        }
        if had_z {
            out.x.insert(site);
        }
        Ok(out)
    }

    /// Renames sites through `map`, which must be injective on the frame's
    /// support.
    pub fn relabeled(&self, map: impl Fn(usize) -> usize) -> ByproductFrame {
        let mut out = ByproductFrame::identity();
        for &s in &self.x {
            toggle(&mut out.x, map(s));
        }
        for &s in &self.z {
            toggle(&mut out.z, map(s));
        }
        for &(p, q) in &self.cp {
            let (a, b) = (map(p), map(q));
            toggle(&mut out.cp, (a.min(b), a.max(b)));
        }
        out
    }

    /// Applies `op(self)` to the state: X layer, then Z layer, then pair
    /// phases.
    pub fn apply_to(&self, state: &mut StateVector) -> Result<()> {
        for &s in &self.x {
            state.apply_single(s, &gates::pauli_x())?;
        }
        for &s in &self.z {
            state.apply_single(s, &gates::pauli_z())?;
        }
        for &(p, q) in &self.cp {
            state.apply_cz(p, q)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("frame serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(format!("bad frame JSON: {e}")))
    }
}

/// The correction left on the three logical sites 4, 5, 6 after attaching
/// and measuring the four-ancilla enlargement chain, as a function of the
/// ancilla outcomes `s = [s7, s8, s9, s10]` in measurement order: Z bits
/// s8 on 4, s9 on 5, s7·s10 on 6, and pair phases s10 on (4, 6), s7 on
/// (5, 6). The Z on 6 goes nonlinear in the outcomes because the two pair
/// phases pass each other while the chain folds up. The effective network
/// operation is op(frame) times the three-site entangler on (4, 5, 6).
pub fn enlargement_frame(s: [u8; 4]) -> ByproductFrame {
    let [s7, s8, s9, s10] = s.map(|b| b & 1);
    let mut f = ByproductFrame::identity();
    if s8 == 1 {
        f.flip_z(4);
    }
    if s9 == 1 {
        f.flip_z(5);
    }
    if s7 & s10 == 1 {
        f.flip_z(6);
    }
    if s10 == 1 {
        f.flip_cp(4, 6).expect("distinct sites");
    }
    if s7 == 1 {
        f.flip_cp(5, 6).expect("distinct sites");
    }
    f
}

fn toggle<T: Ord>(set: &mut BTreeSet<T>, item: T) {
    if !set.remove(&item) {
        set.insert(item);
    }
}

fn sym_diff<T: Ord + Copy>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> BTreeSet<T> {
    a.symmetric_difference(b).copied().collect()
}
