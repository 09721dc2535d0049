//! Finitely generated discrete subgroups of PSL(2,Z): word search with exact
//! deduplication, fundamental-domain reduction for groups generated by a translation
//! and the inversion S, membership, and congruence coset labels.

use crate::algebra::{compose, mobius_act, GroupElement, IntGroupElement, UTBPoint};
use crate::error::{Result, ShearError};
use dashmap::DashSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// Boundary point of a cusp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CuspPoint {
    Infinity,
    Finite(f64),
}

/// A declared cusp with its width and, optionally, an explicit normalizer.
#[derive(Debug, Clone, PartialEq)]
pub struct Cusp {
    pub point: CuspPoint,
    pub width: f64,
    pub normalizer: Option<GroupElement>,
}

/// Shape of the reduction algorithm available for a group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reducer {
    /// Group generated by z -> z + omega and S; reduction into the Ford domain
    /// {|x| <= omega/2, |z| >= 1}. omega = 1 is PSL(2,Z).
    TranslationInversion { omega: i64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSpec {
    pub name: String,
    pub generators: Vec<IntGroupElement>,
    pub lattice: bool,
    pub cusps: Vec<Cusp>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum PointRepr {
    Num(f64),
    Text(String),
}

#[derive(Debug, Serialize, Deserialize)]
struct CuspRepr {
    point: PointRepr,
    width: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct SpecRepr {
    name: String,
    generators: Vec<[[i64; 2]; 2]>,
    lattice: bool,
    #[serde(default)]
    cusps: Vec<CuspRepr>,
}

impl GroupSpec {
    /// PSL(2,Z) with generators T = (1 1; 0 1) and S = (0 -1; 1 0).
    pub fn psl2z() -> Self {
        GroupSpec {
            name: "psl2z".into(),
            generators: vec![IntGroupElement::t_power(1), IntGroupElement::s()],
            lattice: true,
            cusps: vec![Cusp { point: CuspPoint::Infinity, width: 1.0, normalizer: None }],
        }
    }

    /// The thin group generated by (1 4; 0 1) and S.
    pub fn thin4() -> Self {
        GroupSpec {
            name: "thin4".into(),
            generators: vec![IntGroupElement::t_power(4), IntGroupElement::s()],
            lattice: false,
            cusps: vec![
                Cusp { point: CuspPoint::Infinity, width: 4.0, normalizer: None },
                Cusp { point: CuspPoint::Finite(0.0), width: 4.0, normalizer: None },
            ],
        }
    }

    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "psl2z" => Ok(Self::psl2z()),
            "thin4" => Ok(Self::thin4()),
            other => Err(ShearError::InvalidGroup(format!("unknown built-in group '{other}'"))),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: SpecRepr = serde_json::from_str(text).map_err(|e| ShearError::InvalidGroup(e.to_string()))?;
        let mut gens = Vec::new();
        for m in &r.generators {
            gens.push(IntGroupElement::new(m[0][0], m[0][1], m[1][0], m[1][1]).map_err(|e| ShearError::InvalidGroup(e.to_string()))?);
        }
        if gens.is_empty() {
            return Err(ShearError::InvalidGroup("no generators".into()));
        }
        let mut cusps = Vec::new();
        for c in &r.cusps {
            let point = match &c.point {
                PointRepr::Num(x) => CuspPoint::Finite(*x),
                PointRepr::Text(t) if t == "inf" || t == "infinity" => CuspPoint::Infinity,
                PointRepr::Text(t) => return Err(ShearError::InvalidGroup(format!("bad cusp point '{t}'"))),
            };
            if !(c.width > 0.0) {
                return Err(ShearError::InvalidGroup("cusp width must be positive".into()));
            }
            cusps.push(Cusp { point, width: c.width, normalizer: None });
        }
        Ok(GroupSpec { name: r.name, generators: gens, lattice: r.lattice, cusps })
    }

    pub fn to_json(&self) -> String {
        let r = SpecRepr {
            name: self.name.clone(),
            generators: self.generators.iter().map(|g| [[g.a, g.b], [g.c, g.d]]).collect(),
            lattice: self.lattice,
            cusps: self
                .cusps
                .iter()
                .map(|c| CuspRepr {
                    point: match c.point {
                        CuspPoint::Infinity => PointRepr::Text("inf".into()),
                        CuspPoint::Finite(x) => PointRepr::Num(x),
                    },
                    width: c.width,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&r).expect("spec serializes")
    }

    /// Recognizes groups generated by a translation and S.
    pub fn reducer(&self) -> Option<Reducer> {
        let s = IntGroupElement::s();
        let mut omega = None;
        let mut has_s = false;
        for g in &self.generators {
            if *g == s {
                has_s = true;
            } else if g.c == 0 && g.a == 1 && g.b != 0 {
                omega = Some(g.b.abs());
            } else {
                return None;
            }
        }
        match (has_s, omega, self.generators.len()) {
            (true, Some(omega), 2) => Some(Reducer::TranslationInversion { omega }),
            _ => None,
        }
    }

    /// Width of the cusp at infinity.
    pub fn omega(&self) -> f64 {
        self.cusps
            .iter()
            .find(|c| c.point == CuspPoint::Infinity)
            .map(|c| c.width)
            .unwrap_or(1.0)
    }

    /// Generators together with their inverses (involutions listed once).
    pub fn symmetric_generators(&self) -> Vec<IntGroupElement> {
        let mut out = Vec::new();
        for g in &self.generators {
            out.push(*g);
            let gi = g.inverse();
            if gi != *g {
                out.push(gi);
            }
        }
        out
    }

    /// Checks each declared cusp is fixed by a parabolic word of length at most 4
    /// whose conjugate translation length matches the declared width.
    pub fn check_cusps(&self) -> Result<()> {
        let search = enumerate_words(self, &|_| true, &|_| true, WordBudget { max_depth: 4, max_nodes: 100_000 });
        let elems = match search {
            Ok(r) => r.elements,
            Err(e) => e.partial,
        };
        for (i, c) in self.cusps.iter().enumerate() {
            let sigma = cusp_normalizer(self, i)?.0;
            let found = elems.iter().any(|g| {
                if g.is_identity() || (g.a + g.d).abs() != 2 {
                    return false;
                }
                let h = compose(&compose(&sigma, &GroupElement::from_int(g)), &sigma.inverse());
                h.c.abs() < 1e-9 && (h.b.abs() - c.width).abs() < 1e-9
            });
            if !found {
                return Err(ShearError::InvalidGroup(format!("cusp {i} is not fixed by a parabolic of width {}", c.width)));
            }
        }
        Ok(())
    }

    /// Conjugated spec h Γ h^{-1}; cusps are moved by h and normalizers composed with h^{-1}.
    pub fn conjugate(&self, h: &IntGroupElement) -> Result<Self> {
        let hi = h.inverse();
        let gens = self
            .generators
            .iter()
            .map(|g| h.checked_mul(g).and_then(|x| x.checked_mul(&hi)))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| ShearError::InvalidGroup("overflow while conjugating".into()))?;
        let hf = GroupElement::from_int(h);
        let mut cusps = Vec::new();
        for (i, c) in self.cusps.iter().enumerate() {
            let (sigma, _) = cusp_normalizer(self, i)?;
            let point = match c.point {
                CuspPoint::Infinity => {
                    if hf.c == 0.0 {
                        CuspPoint::Infinity
                    } else {
                        CuspPoint::Finite(hf.a / hf.c)
                    }
                }
                CuspPoint::Finite(x) => {
                    let den = hf.c * x + hf.d;
                    if den == 0.0 {
                        CuspPoint::Infinity
                    } else {
                        CuspPoint::Finite((hf.a * x + hf.b) / den)
                    }
                }
            };
            cusps.push(Cusp { point, width: c.width, normalizer: Some(compose(&sigma, &hf.inverse())) });
        }
        Ok(GroupSpec { name: format!("{}^h", self.name), generators: gens, lattice: self.lattice, cusps })
    }
}

/// Returns (sigma, omega) with sigma(cusp) = infinity.
pub fn cusp_normalizer(spec: &GroupSpec, index: usize) -> Result<(GroupElement, f64)> {
    let c = spec
        .cusps
        .get(index)
        .ok_or_else(|| ShearError::InvalidArgument(format!("cusp index {index} out of range")))?;
    if let Some(n) = c.normalizer {
        return Ok((n, c.width));
    }
    let sigma = match c.point {
        CuspPoint::Infinity => GroupElement::identity(),
        CuspPoint::Finite(x) => compose(&GroupElement::new(0.0, -1.0, 1.0, 0.0), &GroupElement::n(-x)),
    };
    Ok((sigma, c.width))
}

/// Caps on the word search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WordBudget {
    pub max_depth: usize,
    pub max_nodes: usize,
}

/// Outcome of a word search.
#[derive(Debug, Clone, PartialEq)]
pub struct WordSearch {
    /// Distinct elements accepted by the keep-predicate, sorted by entries.
    pub elements: Vec<IntGroupElement>,
    /// True when two consecutive layers added no accepted element and the frontier emptied
    /// or stopped contributing.
    pub saturated: bool,
    pub depth_reached: usize,
    pub nodes: usize,
}

/// Budget exhaustion with the partial result attached.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetExceeded {
    pub partial: Vec<IntGroupElement>,
    pub nodes: usize,
    pub depth: usize,
}

/// Breadth-first search over reduced words (no immediate cancellation), with a global
/// concurrent dedup set keyed by exact canonical entries. `keep` selects the reported
/// elements; `expand` decides whether a node's children are explored.
pub fn enumerate_words(
    spec: &GroupSpec,
    keep: &(dyn Fn(&IntGroupElement) -> bool + Sync),
    expand: &(dyn Fn(&IntGroupElement) -> bool + Sync),
    budget: WordBudget,
) -> std::result::Result<WordSearch, BudgetExceeded> {
    let gens = spec.symmetric_generators();
    let inv_index: Vec<usize> = gens
        .iter()
        .map(|g| gens.iter().position(|h| *h == g.inverse()).unwrap_or(usize::MAX))
        .collect();
    let seen: DashSet<IntGroupElement> = DashSet::new();
    let id = IntGroupElement::identity();
    seen.insert(id);
    let mut kept: Vec<IntGroupElement> = if keep(&id) { vec![id] } else { vec![] };
    // frontier entries: (element, index of last generator applied)
    let mut frontier: Vec<(IntGroupElement, usize)> = if expand(&id) { vec![(id, usize::MAX)] } else { vec![] };
    let mut nodes = 1usize;
    let mut empty_layers = 0;
    let mut depth = 0;
    while depth < budget.max_depth && !frontier.is_empty() {
        depth += 1;
        let next: Vec<(IntGroupElement, usize, bool)> = frontier
            .par_iter()
            .flat_map_iter(|(g, last)| {
                let mut out = Vec::with_capacity(gens.len());
                for (i, h) in gens.iter().enumerate() {
                    if *last != usize::MAX && inv_index[*last] == i {
                        continue;
                    }
                    if let Some(x) = g.checked_mul(h) {
                        if seen.insert(x) {
                            out.push((x, i, keep(&x)));
                        }
                    }
                }
                out
            })
            .collect();
        nodes += next.len();
        let new_kept = next.iter().filter(|t| t.2).count();
        kept.extend(next.iter().filter(|t| t.2).map(|t| t.0));
        if nodes > budget.max_nodes {
            kept.sort_by_key(|g| (g.a, g.b, g.c, g.d));
            return Err(BudgetExceeded { partial: kept, nodes, depth });
        }
        empty_layers = if new_kept == 0 { empty_layers + 1 } else { 0 };
        frontier = next.into_iter().filter(|t| expand(&t.0)).map(|t| (t.0, t.1)).collect();
    }
    kept.sort_by_key(|g| (g.a, g.b, g.c, g.d));
    Ok(WordSearch { elements: kept, saturated: frontier.is_empty() || empty_layers >= 2, depth_reached: depth, nodes })
}

/// Standard reduction for PSL(2,Z): the output has -1/2 <= x < 1/2, |z| >= 1, and on the
/// unit circle x >= 0. Returns the point and gamma with gamma·input = output.
pub fn reduce_to_fundamental_domain(p: &UTBPoint) -> Result<(UTBPoint, IntGroupElement)> {
    reduce_translation_inversion(p, 1)
}

const REDUCE_CAP: usize = 10_000;

/// Reduction into the Ford domain of the group generated by z -> z + omega and S.
pub fn reduce_translation_inversion(p: &UTBPoint, omega: i64) -> Result<(UTBPoint, IntGroupElement)> {
    let w = omega as f64;
    let s = IntGroupElement::s();
    let sf = GroupElement::from_int(&s);
    let mut z = *p;
    let mut g = IntGroupElement::identity();
    for _ in 0..REDUCE_CAP {
        let k = ((z.x + 0.5 * w) / w).floor() as i64;
        if k != 0 {
            z.x -= (k * omega) as f64;
            g = IntGroupElement::t_power(-k * omega).checked_mul(&g).ok_or(ShearError::IterationCap(REDUCE_CAP))?;
        }
        let r2 = z.x * z.x + z.y * z.y;
        if r2 < 1.0 || (r2 == 1.0 && z.x < 0.0) {
            z = mobius_act(&sf, &z)?;
            g = s.checked_mul(&g).ok_or(ShearError::IterationCap(REDUCE_CAP))?;
        } else {
            return Ok((z, g));
        }
    }
    Err(ShearError::IterationCap(REDUCE_CAP))
}

impl GroupSpec {
    /// Reduces a point to the group's fundamental domain.
    pub fn reduce(&self, p: &UTBPoint) -> Result<(UTBPoint, IntGroupElement)> {
        match self.reducer() {
            Some(Reducer::TranslationInversion { omega }) => reduce_translation_inversion(p, omega),
            None => Err(ShearError::InvalidGroup(format!("no reduction algorithm for group '{}'", self.name))),
        }
    }

    /// Exact membership for groups with a reducer: reduce g·z0 for a generic interior z0
    /// and check that the reducing word times g is the identity.
    pub fn contains(&self, g: &IntGroupElement) -> Result<bool> {
        let omega = match self.reducer() {
            Some(Reducer::TranslationInversion { omega }) => omega,
            None => return Err(ShearError::InvalidGroup(format!("no membership test for group '{}'", self.name))),
        };
        if omega == 1 {
            return Ok(true);
        }
        let z0 = UTBPoint::up(0.123_456_7, 1.765_432_1);
        let gz = mobius_act(&GroupElement::from_int(g), &z0)?;
        let (_, w) = reduce_translation_inversion(&gz, omega)?;
        Ok(w.checked_mul(g).map(|x| x.is_identity()).unwrap_or(false))
    }
}

/// Element of PSL(2, Z/q), stored with a canonical sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CosetLabel {
    pub q: i64,
    pub entries: [i64; 4],
}

impl std::fmt::Display for CosetLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let e = self.entries;
        write!(f, "{}.{}.{}.{}", e[0], e[1], e[2], e[3])
    }
}

pub fn coset_label(g: &IntGroupElement, q: i64) -> CosetLabel {
    assert!(q >= 1);
    let pos = [g.a, g.b, g.c, g.d].map(|x| x.rem_euclid(q));
    let neg = [g.a, g.b, g.c, g.d].map(|x| (-x).rem_euclid(q));
    CosetLabel { q, entries: pos.min(neg) }
}

impl CosetLabel {
    /// Label of a product, computed from the factors' labels alone.
    pub fn mul(&self, o: &CosetLabel) -> CosetLabel {
        let q = self.q;
        let [a, b, c, d] = self.entries;
        let [e, f, g, h] = o.entries;
        let pos = [(a * e + b * g), (a * f + b * h), (c * e + d * g), (c * f + d * h)].map(|x| x.rem_euclid(q));
        let neg = pos.map(|x| (-x).rem_euclid(q));
        CosetLabel { q, entries: pos.min(neg) }
    }
}

/// All labels reachable from the generators of `spec` at level q (the image of the group).
pub fn image_mod_q(spec: &GroupSpec, q: i64) -> Vec<CosetLabel> {
    let gens: Vec<CosetLabel> = spec.symmetric_generators().iter().map(|g| coset_label(g, q)).collect();
    let id = coset_label(&IntGroupElement::identity(), q);
    let mut seen: HashSet<CosetLabel> = HashSet::from([id]);
    let mut stack = vec![id];
    while let Some(x) = stack.pop() {
        for g in &gens {
            let y = x.mul(g);
            if seen.insert(y) {
                stack.push(y);
            }
        }
    }
    let mut v: Vec<_> = seen.into_iter().collect();
    v.sort();
    v
}
