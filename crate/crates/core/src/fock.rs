//! Bosonic number states over the truncated (band, site) orbital set.
//!
//! Occupation vectors are stored band-major: band 0 sites left to right,
//! then band 1, and so on. The basis is ordered lexicographically and
//! indexed by combinatorial ranking, so lookups need no hash map.

use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_BASIS_CAP: usize = 2_000_000;

/// One bosonic occupation vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NumberState {
    pub occupations: Vec<u8>,
    pub n_bosons: usize,
}

impl NumberState {
    pub fn new(occupations: Vec<u8>) -> Self {
        let n_bosons = occupations.iter().map(|&v| v as usize).sum();
        Self { occupations, n_bosons }
    }
}

/// Interaction class of a lowest-band triple-well state (N = 4 taxonomy).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InteractionClass {
    /// single pair {2,1,1}
    SinglePair,
    /// double pair {2,2,0}
    DoublePair,
    /// triplet {3,1,0}
    Triplet,
    /// quadruplet {4,0,0}
    Quadruplet,
    /// carries higher-band quanta
    Mixed,
    /// lowest-band but outside the N = 4 taxonomy
    Other,
}

impl InteractionClass {
    pub fn label(&self) -> &'static str {
        match self {
            InteractionClass::SinglePair => "SP",
            InteractionClass::DoublePair => "DP",
            InteractionClass::Triplet => "T",
            InteractionClass::Quadruplet => "Q",
            InteractionClass::Mixed => "mixed",
            InteractionClass::Other => "other",
        }
    }
}

/// Complete number-state basis for `n_bosons` over `n_orbitals` = n_bands *
/// n_sites orbitals.
#[derive(Debug, Clone)]
pub struct FockBasis {
    pub n_bosons: usize,
    pub n_orbitals: usize,
    pub n_sites: usize,
    pub n_bands: usize,
    pub states: Vec<Vec<u8>>,
    binom: Vec<Vec<u64>>,
}

/// Reflection metadata: partner index and sign per basis state.
#[derive(Debug, Clone)]
pub struct ParityInfo {
    pub partner: Vec<usize>,
    pub sign: Vec<i8>,
}

fn binomial_table(n: usize) -> Vec<Vec<u64>> {
    let mut t = vec![vec![0u64; n + 1]; n + 1];
    for i in 0..=n {
        t[i][0] = 1;
        for j in 1..=i {
            t[i][j] = t[i - 1][j - 1] + if j <= i - 1 { t[i - 1][j] } else { 0 };
        }
    }
    t
}

fn compositions(total: usize, slots: usize, binom: &[Vec<u64>]) -> u64 {
    if slots == 0 {
        return (total == 0) as u64;
    }
    binom[total + slots - 1][slots - 1]
}

/// Enumerate the basis. `n_sites`/`n_bands` fix the band-major layout;
/// `cap` guards against runaway sizes (`None` = default 2e6).
pub fn build_basis(
    n_bosons: usize,
    n_sites: usize,
    n_bands: usize,
    cap: Option<usize>,
) -> Result<FockBasis> {
    if n_sites == 0 || n_bands == 0 {
        return Err(Error::Config("S and n_bands must be positive".into()));
    }
    // n_bosons = 0 is the vacuum sector (a single empty state), which the
    // brute-force ladder construction needs for two-boson systems
    let m = n_sites * n_bands;
    let binom = binomial_table(n_bosons + m + 1);
    let size = compositions(n_bosons, m, &binom) as usize;
    let cap = cap.unwrap_or(DEFAULT_BASIS_CAP);
    if size > cap {
        return Err(Error::BasisCap { size, cap });
    }
    let mut states = Vec::with_capacity(size);
    let mut cur = vec![0u8; m];
    gen_lex(&mut states, &mut cur, 0, n_bosons);
    debug_assert_eq!(states.len(), size);
    Ok(FockBasis { n_bosons, n_orbitals: m, n_sites, n_bands, states, binom })
}

fn gen_lex(out: &mut Vec<Vec<u8>>, cur: &mut Vec<u8>, slot: usize, left: usize) {
    let m = cur.len();
    if slot == m - 1 {
        cur[slot] = left as u8;
        out.push(cur.clone());
        return;
    }
    for v in 0..=left {
        cur[slot] = v as u8;
        gen_lex(out, cur, slot + 1, left - v);
    }
    cur[slot] = 0;
}

impl FockBasis {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Lexicographic rank of an occupation vector (the inverse of `states`).
    pub fn index(&self, occ: &[u8]) -> usize {
        debug_assert_eq!(occ.len(), self.n_orbitals);
        let mut rank = 0u64;
        let mut left = self.n_bosons;
        for (i, &v) in occ.iter().enumerate() {
            let slots_after = self.n_orbitals - i - 1;
            for w in 0..v as usize {
                rank += compositions(left - w, slots_after, &self.binom);
            }
            left -= v as usize;
        }
        rank as usize
    }

    pub fn state(&self, i: usize) -> NumberState {
        NumberState::new(self.states[i].clone())
    }

    /// Occupation of orbital (band, site) in state `i`.
    pub fn occ(&self, i: usize, band: usize, site: usize) -> u8 {
        self.states[i][band * self.n_sites + site]
    }
}

/// Site-reversed occupations per band plus the reflection sign.
///
/// Each band-b Wannier orbital reflects with an intrinsic factor (-1)^b, so
/// a state picks up sign = prod_b (-1)^(b * N_b) with N_b its boson count in
/// band b.
pub fn reflect_state(occ: &[u8], n_sites: usize) -> (Vec<u8>, i8) {
    let n_bands = occ.len() / n_sites;
    let mut out = vec![0u8; occ.len()];
    let mut sign = 1i8;
    for b in 0..n_bands {
        let seg = &occ[b * n_sites..(b + 1) * n_sites];
        let nb: usize = seg.iter().map(|&v| v as usize).sum();
        if b % 2 == 1 && nb % 2 == 1 {
            sign = -sign;
        }
        for s in 0..n_sites {
            out[b * n_sites + s] = seg[n_sites - 1 - s];
        }
    }
    (out, sign)
}

impl ParityInfo {
    pub fn build(basis: &FockBasis) -> Self {
        let dim = basis.len();
        let mut partner = vec![0usize; dim];
        let mut sign = vec![0i8; dim];
        for i in 0..dim {
            let (r, s) = reflect_state(&basis.states[i], basis.n_sites);
            partner[i] = basis.index(&r);
            sign[i] = s;
        }
        ParityInfo { partner, sign }
    }

    pub fn n_self_symmetric(&self) -> usize {
        self.partner.iter().enumerate().filter(|&(i, &p)| i == p).count()
    }
}

/// Structural classes of a number state: the trap class h (bosons weighted
/// by squared distance from the center site) and the interaction class i.
pub fn classify_state(occ: &[u8], n_sites: usize) -> (u32, InteractionClass) {
    let n_bands = occ.len() / n_sites;
    let center = n_sites / 2;
    let mut h = 0u32;
    for b in 0..n_bands {
        for s in 0..n_sites {
            let d = s as i64 - center as i64;
            h += occ[b * n_sites + s] as u32 * (d * d) as u32;
        }
    }
    let higher: usize = occ[n_sites..].iter().map(|&v| v as usize).sum();
    if higher > 0 {
        return (h, InteractionClass::Mixed);
    }
    let mut mult: Vec<u8> = occ[..n_sites].to_vec();
    mult.sort_unstable_by(|a, b| b.cmp(a));
    let i_class = match (mult.first().cloned(), mult.get(1).cloned(), mult.get(2).cloned()) {
        (Some(2), Some(1), Some(1)) => InteractionClass::SinglePair,
        (Some(2), Some(2), Some(0)) => InteractionClass::DoublePair,
        (Some(3), Some(1), Some(0)) => InteractionClass::Triplet,
        (Some(4), Some(0), Some(0)) => InteractionClass::Quadruplet,
        _ => InteractionClass::Other,
    };
    (h, i_class)
}

/// Parity suffix for symmetric/antisymmetric combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComboParity {
    None,
    Symmetric,
    Antisymmetric,
}

/// Render a number state (or its parity combination) in the occupation
/// notation: `|1,3,0>`, `|1,3,0>_S`, `|1,1(0)x1(1),1>`.
///
/// Sites occupied purely in band 0 print a bare count; any site carrying
/// higher-band quanta prints its per-band factors joined by `x`.
pub fn format_label(occ: &[u8], n_sites: usize, combo: ComboParity) -> String {
    let n_bands = occ.len() / n_sites;
    let mut tokens = Vec::with_capacity(n_sites);
    for s in 0..n_sites {
        let per_band: Vec<(usize, u8)> = (0..n_bands)
            .filter_map(|b| {
                let v = occ[b * n_sites + s];
                (v > 0).then_some((b, v))
            })
            .collect();
        let tok = if per_band.is_empty() {
            "0".to_string()
        } else if per_band.len() == 1 && per_band[0].0 == 0 {
            format!("{}", per_band[0].1)
        } else {
            per_band
                .iter()
                .map(|(b, v)| format!("{v}({b})"))
                .collect::<Vec<_>>()
                .join("x")
        };
        tokens.push(tok);
    }
    let core = format!("|{}>", tokens.join(","));
    match combo {
        ComboParity::None => core,
        ComboParity::Symmetric => format!("{core}_S"),
        ComboParity::Antisymmetric => format!("{core}_A"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn basis_sizes() {
        assert_eq!(build_basis(4, 3, 3, None).unwrap().len(), 495);
        assert_eq!(build_basis(1, 3, 1, None).unwrap().len(), 3);
        assert_eq!(build_basis(5, 15, 1, None).unwrap().len(), 11628);
    }

    #[test]
    fn basis_cap_enforced() {
        let e = build_basis(5, 15, 1, Some(1000)).unwrap_err();
        match e {
            Error::BasisCap { size, cap } => {
                assert_eq!(size, 11628);
                assert_eq!(cap, 1000);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn index_round_trip() {
        let b = build_basis(4, 3, 3, None).unwrap();
        for (i, st) in b.states.iter().enumerate() {
            assert_eq!(b.index(st), i);
        }
        // lexicographic ordering
        for w in b.states.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn reflection_examples() {
        let (r, s) = reflect_state(&[1, 3, 0], 3);
        assert_eq!(r, vec![0, 3, 1]);
        assert_eq!(s, 1);
        let (r, s) = reflect_state(&[0, 4, 0], 3);
        assert_eq!(r, vec![0, 4, 0]);
        assert_eq!(s, 1);
        // one boson in band-1 left site
        let (r, s) = reflect_state(&[0, 0, 0, 1, 0, 0], 3);
        assert_eq!(r, vec![0, 0, 0, 0, 0, 1]);
        assert_eq!(s, -1);
        // one band-1 boson at the center well: self-partner, odd sign
        let (r, s) = reflect_state(&[0, 0, 0, 0, 1, 0], 3);
        assert_eq!(r, vec![0, 0, 0, 0, 1, 0]);
        assert_eq!(s, -1);
    }

    #[test]
    fn parity_info_counts_for_reference_basis() {
        // frozen by enumeration: N = 4, S = 3, 3 bands
        let b = build_basis(4, 3, 3, None).unwrap();
        let p = ParityInfo::build(&b);
        assert_eq!(p.n_self_symmetric(), 39);
        let self_odd = (0..b.len())
            .filter(|&i| p.partner[i] == i && p.sign[i] < 0)
            .count();
        assert_eq!(self_odd, 12);
        for i in 0..b.len() {
            assert_eq!(p.partner[p.partner[i]], i, "partner must be an involution");
            assert_eq!(p.sign[p.partner[i]], p.sign[i]);
        }
        let pairs = (b.len() - p.n_self_symmetric()) / 2;
        assert_eq!(pairs * 2 + p.n_self_symmetric(), b.len());
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_state(&[0, 4, 0], 3), (0, InteractionClass::Quadruplet));
        assert_eq!(classify_state(&[1, 2, 1], 3), (2, InteractionClass::SinglePair));
        assert_eq!(classify_state(&[2, 2, 0], 3), (2, InteractionClass::DoublePair));
        assert_eq!(classify_state(&[1, 3, 0], 3), (1, InteractionClass::Triplet));
        let (h, c) = classify_state(&[0, 3, 0, 0, 1, 0], 3);
        assert_eq!(h, 0);
        assert_eq!(c, InteractionClass::Mixed);
    }

    #[test]
    fn labels() {
        assert_eq!(format_label(&[1, 3, 0], 3, ComboParity::None), "|1,3,0>");
        assert_eq!(format_label(&[1, 3, 0], 3, ComboParity::Symmetric), "|1,3,0>_S");
        assert_eq!(
            format_label(&[1, 1, 1, 0, 1, 0], 3, ComboParity::None),
            "|1,1(0)x1(1),1>"
        );
        assert_eq!(
            format_label(&[0, 3, 0, 0, 0, 1], 3, ComboParity::Antisymmetric),
            "|0,3,1(1)>_A"
        );
    }

    proptest! {
        #[test]
        fn index_is_bijective_random(n in 1usize..5, s in 1usize..4, nb in 1usize..3) {
            let s = 2*s - 1; // odd sites
            let b = build_basis(n, s, nb, None).unwrap();
            for (i, st) in b.states.iter().enumerate() {
                prop_assert_eq!(b.index(st), i);
            }
        }

        #[test]
        fn reflection_involution_random(n in 1usize..5, s in 1usize..4, nb in 1usize..4) {
            let s = 2*s - 1;
            let b = build_basis(n, s, nb, None).unwrap();
            for st in &b.states {
                let (r, sg) = reflect_state(st, s);
                let (rr, sg2) = reflect_state(&r, s);
                prop_assert_eq!(&rr, st);
                prop_assert_eq!(sg, sg2);
            }
        }
    }
}
