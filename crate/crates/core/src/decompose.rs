//! Decomposition of a Lipschitz map on a cube `S` into pieces on which it is
//! `δ`-biLipschitz, plus a garbage set with small image.
//!
//! Cubes with small image content form `B1`, cubes with large `α` form
//! `B2`. `R1` is the union of `B1`, `R2` the points covered by at least
//! `L_mult` hats `Q̂` of `B2` cubes. Cubes that share a hat of a `B2` cube
//! `l` scales up are separated by a prefix-free word code; the remaining
//! points are grouped by the word of their bottom cube.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coarse::{alpha_cube, AlphaParams, CubeAlpha};
use crate::content::{content_upper, geometric_radii, ContentConfig, ContentEstimate};
use crate::cubes::{estimate_b, BEstimate, CubeTree};
use crate::error::{Error, Result};
use crate::maps::{LipschitzMap, MapSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertifyMode {
    Exhaustive,
    Sampled,
    /// Exhaustive when the pair count is at most the cap.
    Auto,
}

/// Which diameter inequality fixes the scale offset `l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LRule {
    /// `diam Q < b·diam S` for `Q ∈ Δ_k`, `S ∈ Δ_{k+l}`.
    Strict,
    /// `diam Q < 10b·diam S`, which is what separating `Q_0 ≠ Q_1` needs.
    Separation,
}

impl LRule {
    pub fn factor(self) -> f64 {
        match self {
            LRule::Strict => 1.0,
            LRule::Separation => 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposeParams {
    pub delta: f64,
    pub c1: f64,
    pub alpha_threshold: f64,
    /// Multiplicity cap `L` defining `R2`; `None` takes the smallest `L`
    /// with `|R2| < δ|S|`.
    pub l_mult: Option<usize>,
    pub l_rule: LRule,
    pub alpha: AlphaParams,
    pub seed: u64,
    /// Pairs sampled for `b`.
    pub b_pairs: usize,
    /// Content radii `ℓ(Q)·2^{-j}`, `j = 0..=content_levels`.
    pub content_levels: usize,
    pub certify: CertifyMode,
    pub pair_cap: u64,
    pub sample_pairs: usize,
    /// Run once per cube of this scale and take the union of the pieces,
    /// instead of once on the root.
    pub union_scale: Option<i32>,
}

impl Default for DecomposeParams {
    fn default() -> Self {
        DecomposeParams {
            delta: 0.05,
            c1: 1.0,
            alpha_threshold: 0.05,
            l_mult: None,
            l_rule: LRule::Separation,
            alpha: AlphaParams::default(),
            seed: 0,
            b_pairs: 10_000,
            content_levels: 3,
            certify: CertifyMode::Auto,
            pair_cap: 10_000_000,
            sample_pairs: 1_000_000,
            union_scale: None,
        }
    }
}

impl DecomposeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter("delta must lie in (0, 1)".into()));
        }
        if !(self.c1 > 0.0) {
            return Err(Error::InvalidParameter("c1 must be positive".into()));
        }
        if !(self.alpha_threshold > 0.0) {
            return Err(Error::InvalidParameter("alpha_threshold must be positive".into()));
        }
        if self.l_mult == Some(0) {
            return Err(Error::InvalidParameter("L_mult must be at least 1".into()));
        }
        self.alpha.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BadFamilies {
    pub b1: Vec<usize>,
    pub b2: Vec<usize>,
    /// `c1·δ`.
    pub b1_factor: f64,
    pub alpha_threshold: f64,
    /// `(cube, content of f(Q), |Q|)` for every cube of `Δ(S)`.
    pub contents: Vec<(usize, f64, f64)>,
}

/// Content of `f(P)` for a point set `P` at radii `r·2^{-j}`, with a single
/// ball about `f(anchor)`. Cells are floored at `Lip(f)·h/2`, the radius
/// that holds the image of one sample cell.
pub fn image_content(tree: &CubeTree, values: &MapSample, f: &LipschitzMap, pts: &[u32], r: f64, levels: usize, anchor: usize) -> Result<ContentEstimate> {
    let cd = values.cod_dim();
    let mut flat = Vec::with_capacity(pts.len() * cd);
    for &p in pts {
        flat.extend_from_slice(values.image(p as usize));
    }
    let cfg = ContentConfig {
        dimension: tree.lattice().metric().homogeneous_dimension() as f64,
        radii: geometric_radii(r, levels),
        floor: 0.5 * f.declared_lipschitz() * tree.lattice().resolution(),
        anchor: Some(values.image(anchor).to_vec()),
    };
    content_upper(f.codomain(), &flat, &cfg)
}

/// `B1 = {Q : content(f(Q)) < c1 δ |Q|}`, `B2 = {Q : α(Q) ≥ threshold}`
/// over `Δ(S)`.
pub fn classify_bad_cubes(
    f: &LipschitzMap,
    values: &MapSample,
    tree: &CubeTree,
    s: usize,
    alphas: &[CubeAlpha],
    params: &DecomposeParams,
) -> Result<BadFamilies> {
    if alphas.len() != tree.cubes().len() {
        return Err(Error::InvalidParameter("alpha values missing for some cubes".into()));
    }
    let factor = params.c1 * params.delta;
    let cell = tree.lattice().cell_volume();
    let mut fam = BadFamilies {
        b1: Vec::new(),
        b2: Vec::new(),
        b1_factor: factor,
        alpha_threshold: params.alpha_threshold,
        contents: Vec::new(),
    };
    for q in tree.descendants(s) {
        let cube = &tree.cubes()[q];
        let measure = cube.points.len() as f64 * cell;
        let c = image_content(tree, values, f, &cube.points, tree.side(cube.scale), params.content_levels, cube.center)?;
        fam.contents.push((q, c.upper, measure));
        if c.upper < factor * measure {
            fam.b1.push(q);
        }
        if alphas[q].alpha >= params.alpha_threshold {
            fam.b2.push(q);
        }
    }
    Ok(fam)
}

/// Union of the points of the given cubes, sorted.
pub fn union_points(tree: &CubeTree, cubes: &[usize]) -> Vec<u32> {
    let mut v: Vec<u32> = cubes.iter().flat_map(|&q| tree.cubes()[q].points.iter().copied()).collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Points of `Q̂`: the same-scale cubes meeting `2Q`.
pub fn hat_points(tree: &CubeTree, q: usize) -> Vec<u32> {
    union_points(tree, &tree.hat_cube(q))
}

#[derive(Debug, Clone, PartialEq)]
pub struct R2Set {
    pub points: Vec<u32>,
    /// `Σ_{Q ∈ B2} χ_{Q̂}(x)` per lattice point.
    pub multiplicity: Vec<u32>,
    /// `Σ_{Q ∈ B2} |Q̂|` in points.
    pub hat_mass: usize,
    /// The cap `L` used.
    pub l_mult: usize,
}

/// Smallest `L ≥ 1` with `#{x ∈ pts : mult(x) ≥ L} < δ·#pts`.
pub fn auto_l_mult(mult: &[u32], pts: &[u32], delta: f64) -> usize {
    let top = pts.iter().map(|&x| mult[x as usize] as usize).max().unwrap_or(0);
    let mut count = vec![0usize; top + 2];
    for &x in pts {
        count[mult[x as usize] as usize] += 1;
    }
    let budget = delta * pts.len() as f64;
    let mut above = 0;
    let mut l = top + 1;
    while l > 1 && ((above + count[l - 1]) as f64) < budget {
        above += count[l - 1];
        l -= 1;
    }
    l
}

/// `R2 = {x ∈ S : Σ_{Q ∈ B2} χ_{Q̂}(x) ≥ L_mult}`, with `L_mult` from
/// [`auto_l_mult`] when not given.
pub fn compute_r2(tree: &CubeTree, s: usize, b2: &[usize], l_mult: Option<usize>, delta: f64) -> R2Set {
    let mut mult = vec![0u32; tree.lattice().len()];
    let mut hat_mass = 0;
    for &q in b2 {
        let h = hat_points(tree, q);
        hat_mass += h.len();
        for x in h {
            mult[x as usize] += 1;
        }
    }
    let pts = &tree.cubes()[s].points;
    let l_mult = l_mult.unwrap_or_else(|| auto_l_mult(&mult, pts, delta));
    let points = pts
        .iter()
        .copied()
        .filter(|&x| mult[x as usize] as usize >= l_mult)
        .collect::<BTreeSet<u32>>()
        .into_iter()
        .collect();
    R2Set { points, multiplicity: mult, hat_mass, l_mult }
}

/// Smallest `l ≥ 1` with `diam Q < b·diam S'` for every `Q` at scale `k`
/// and `S'` at scale `k + l` (one-point cubes excluded from the minimum);
/// when no realized pair of scales satisfies it, the number of scales, so
/// that no pair is constrained.
pub fn choose_l(tree: &CubeTree, b: f64) -> usize {
    let levels = tree.levels();
    let k_min = tree.params().k_min;
    let mut max_d = vec![0.0f64; levels];
    let mut min_d = vec![f64::INFINITY; levels];
    for q in tree.cubes() {
        let s = (q.scale - k_min) as usize;
        let d = tree.diameter(q.id).value;
        max_d[s] = max_d[s].max(d);
        if q.points.len() > 1 {
            min_d[s] = min_d[s].min(d);
        }
    }
    for l in 1..levels {
        if (0..levels - l).all(|k| max_d[k] < b * min_d[k + l]) {
            return l;
        }
    }
    levels
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coding {
    pub alphabet: usize,
    pub l: usize,
    /// `a(Q)` per cube id (empty outside `Δ(S)`).
    pub words: Vec<Vec<u32>>,
    pub families: Families,
    /// Cubes for which no letter satisfied the separation rules.
    pub conflicts: Vec<usize>,
}

/// `F(Q)` stored as groups: for each `S' ∈ B2` the cubes at scale
/// `j(S') − l` inside `Ŝ'`. Members of a group are pairwise neighbors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Families {
    pub groups: Vec<Vec<usize>>,
    /// Group indices per cube id.
    pub member_of: Vec<Vec<u32>>,
}

impl Families {
    /// `F(Q)`, sorted.
    pub fn family(&self, q: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.member_of[q]
            .iter()
            .flat_map(|&g| self.groups[g as usize].iter().copied())
            .filter(|&o| o != q)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn is_empty_for(&self, q: usize) -> bool {
        self.member_of[q].iter().all(|&g| self.groups[g as usize].len() < 2)
    }

    /// `|F(Q)|`.
    pub fn size(&self, q: usize) -> usize {
        match self.member_of[q].as_slice() {
            [] => 0,
            [g] => self.groups[*g as usize].len() - 1,
            _ => self.family(q).len(),
        }
    }

    /// `T = max |F(Q)|`.
    pub fn max_size(&self) -> usize {
        (0..self.member_of.len())
            .map(|q| self.size(q))
            .max()
            .unwrap_or(0)
    }
}

/// `F(Q)`: same-scale `Q' ≠ Q` in `Δ(S)` such that `Q, Q' ⊆ Ŝ'` for some
/// `S' ∈ B2` at scale `j(Q) + l`.
pub fn neighbor_families(tree: &CubeTree, s: usize, b2: &[usize], l: usize) -> Families {
    let n = tree.cubes().len();
    let mut in_s = vec![false; n];
    for q in tree.descendants(s) {
        in_s[q] = true;
    }
    let mut fam = Families { groups: Vec::new(), member_of: vec![Vec::new(); n] };
    for &sp in b2 {
        let scale = tree.cubes()[sp].scale - l as i32;
        if scale < tree.params().k_min {
            continue;
        }
        let mut group: Vec<usize> = tree
            .hat_cube(sp)
            .into_iter()
            .flat_map(|h| tree.descendants(h))
            .filter(|&q| tree.cubes()[q].scale == scale && in_s[q])
            .collect();
        group.sort_unstable();
        group.dedup();
        if group.len() < 2 {
            continue;
        }
        let id = fam.groups.len() as u32;
        for &q in &group {
            fam.member_of[q].push(id);
        }
        fam.groups.push(group);
    }
    fam
}

fn is_prefix(a: &[u32], b: &[u32]) -> bool {
    a.len() <= b.len() && &b[..a.len()] == a
}

/// Whether `a(Q)` and `a(Q')` are separated: neither word is a prefix of
/// the other.
pub fn separated(a: &[u32], b: &[u32]) -> bool {
    !is_prefix(a, b) && !is_prefix(b, a)
}

/// Top-down word assignment (scale-major, index-minor). A cube with
/// nonempty `F(Q)` gets its parent's word plus the smallest letter
/// separating it from every already-coded member of `F(Q)`.
pub fn assign_words(tree: &CubeTree, s: usize, families: &Families, l: usize, alphabet: usize) -> Result<Coding> {
    if alphabet > u32::MAX as usize {
        return Err(Error::InvalidParameter("alphabet too large".into()));
    }
    let n = tree.cubes().len();
    let mut words: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut done = vec![false; n];
    let mut conflicts = Vec::new();
    let mut mark = vec![0usize; alphabet];
    let mut stamp = 0;
    let mut order = tree.descendants(s);
    order.sort_unstable();
    done[s] = true;
    for &q in &order {
        if q == s {
            continue;
        }
        let parent = tree.cubes()[q].parent.expect("non-root cube");
        let base = words[parent].clone();
        if families.is_empty_for(q) {
            words[q] = base;
        } else {
            // `base + c` clashes with a coded `w'` iff `w'` is a prefix of
            // `base` (every letter clashes) or `w'` extends `base` with `c`.
            let mut blocked = false;
            stamp += 1;
            'scan: for &g in &families.member_of[q] {
                for &o in &families.groups[g as usize] {
                    if o == q || !done[o] {
                        continue;
                    }
                    let w = &words[o];
                    if is_prefix(w, &base) {
                        blocked = true;
                        break 'scan;
                    }
                    if w.len() > base.len() && w.starts_with(&base) {
                        let c = w[base.len()] as usize;
                        if c < alphabet {
                            mark[c] = stamp;
                        }
                    }
                }
            }
            let mut w = base;
            if blocked {
                conflicts.push(q);
                w.push(0);
            } else {
                let c = (0..alphabet)
                    .find(|&c| mark[c] != stamp)
                    .ok_or(Error::AlphabetExhausted { cube: q, alphabet })?;
                w.push(c as u32);
            }
            words[q] = w;
        }
        done[q] = true;
    }
    Ok(Coding {
        alphabet,
        l,
        words,
        families: families.clone(),
        conflicts,
    })
}

/// Pairs `(Q, Q')`, `Q' ∈ F(Q)`, violating separation (conflict cubes
/// excluded). Within a group sorted by word, a prefix relation always shows
/// up between neighbors in the order, so empty output means every pair is
/// separated.
pub fn coding_violations(coding: &Coding) -> Vec<(usize, usize)> {
    let bad: BTreeSet<usize> = coding.conflicts.iter().copied().collect();
    let mut out = BTreeSet::new();
    for group in &coding.families.groups {
        let mut g: Vec<usize> = group.iter().copied().filter(|q| !bad.contains(q)).collect();
        g.sort_by(|&a, &b| coding.words[a].cmp(&coding.words[b]).then(a.cmp(&b)));
        for w in g.windows(2) {
            if !separated(&coding.words[w[0]], &coding.words[w[1]]) {
                out.insert((w[0].min(w[1]), w[0].max(w[1])));
            }
        }
    }
    out.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    /// Cube the run was made on.
    pub root: usize,
    pub word: Vec<u32>,
    pub points: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootRun {
    pub root: usize,
    pub families: BadFamilies,
    pub r1: Vec<u32>,
    pub r2: R2Set,
    /// Points of `Q̂` for `B2` cubes too fine for their `F` separation to
    /// exist in the tree, plus points of conflict cubes.
    pub unresolved: Vec<u32>,
    pub coding: Coding,
    pub t: usize,
    /// Output of [`coding_violations`]; empty when the word rules hold.
    pub violations: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub runs: Vec<RootRun>,
    pub pieces: Vec<Piece>,
    pub garbage: Vec<u32>,
    /// Piece index per lattice point (`None` in `Z`).
    pub assignment: Vec<Option<usize>>,
    pub b: BEstimate,
    pub l: usize,
    pub t: usize,
    pub max_word_len: usize,
    pub alphas: Vec<CubeAlpha>,
    pub doubling: usize,
}

impl Decomposition {
    /// Largest `L_mult` over the runs.
    pub fn l_mult(&self) -> usize {
        self.runs.iter().map(|r| r.r2.l_mult).max().unwrap_or(1)
    }

    /// `(T+1)^{L_mult+1}`, saturating.
    pub fn piece_bound(&self) -> f64 {
        libm::pow((self.t + 1) as f64, (self.l_mult() + 1) as f64)
    }

    /// Pieces and `Z` are disjoint and cover the sample set.
    pub fn check_partition(&self, n: usize) -> bool {
        let mut seen = vec![0u8; n];
        for p in &self.pieces {
            for &x in &p.points {
                seen[x as usize] += 1;
            }
        }
        for &x in &self.garbage {
            seen[x as usize] += 1;
        }
        seen.iter().all(|&c| c == 1)
    }
}

fn run_on(f: &LipschitzMap, values: &MapSample, tree: &CubeTree, s: usize, alphas: &[CubeAlpha], l: usize, params: &DecomposeParams) -> Result<RootRun> {
    let families = classify_bad_cubes(f, values, tree, s, alphas, params)?;
    let r1 = union_points(tree, &families.b1);
    let r2 = compute_r2(tree, s, &families.b2, params.l_mult, params.delta);
    let fam = neighbor_families(tree, s, &families.b2, l);
    let t = fam.max_size();
    let mut alphabet = t + 1;
    let coding = loop {
        match assign_words(tree, s, &fam, l, alphabet) {
            Ok(c) => break c,
            Err(Error::AlphabetExhausted { .. }) if alphabet < 2 * (t + 1) => alphabet += 1,
            Err(e) => return Err(e),
        }
    };
    let k_min = tree.params().k_min;
    let mut unresolved: BTreeSet<u32> = BTreeSet::new();
    for &q in &families.b2 {
        if tree.cubes()[q].scale - (l as i32) < k_min {
            unresolved.extend(hat_points(tree, q));
        }
    }
    for &q in &coding.conflicts {
        unresolved.extend(tree.cubes()[q].points.iter().copied());
    }
    let in_s: BTreeSet<u32> = tree.cubes()[s].points.iter().copied().collect();
    let violations = coding_violations(&coding);
    Ok(RootRun {
        root: s,
        families,
        r1,
        r2,
        unresolved: unresolved.into_iter().filter(|x| in_s.contains(x)).collect(),
        coding,
        t,
        violations,
    })
}

/// Runs the pipeline on the root (or on every cube of `union_scale`).
pub fn decompose(f: &LipschitzMap, values: &MapSample, tree: &CubeTree, params: &DecomposeParams) -> Result<Decomposition> {
    params.validate()?;
    let b = estimate_b(tree, params.b_pairs, params.seed);
    let l = choose_l(tree, params.l_rule.factor() * b.b);
    let roots: Vec<usize> = match params.union_scale {
        None => vec![tree.root()],
        Some(k) => {
            if k < tree.params().k_min || k > tree.params().k_max {
                return Err(Error::InvalidParameter("union scale outside the tree".into()));
            }
            tree.cubes_at_scale(k).to_vec()
        }
    };
    let mut alphas: Vec<CubeAlpha> = Vec::with_capacity(tree.cubes().len());
    for q in 0..tree.cubes().len() {
        alphas.push(alpha_cube(f, tree, q, &params.alpha, params.seed)?);
    }
    let n = tree.lattice().len();
    let bottom = tree.params().k_min;
    let mut runs = Vec::new();
    let mut pieces: Vec<Piece> = Vec::new();
    let mut assignment: Vec<Option<usize>> = vec![None; n];
    let mut garbage: Vec<u32> = Vec::new();
    for &s in &roots {
        let run = run_on(f, values, tree, s, &alphas, l, params)?;
        let mut z: BTreeSet<u32> = run.r1.iter().copied().collect();
        z.extend(run.r2.points.iter().copied());
        z.extend(run.unresolved.iter().copied());
        let mut by_word: BTreeMap<Vec<u32>, Vec<u32>> = BTreeMap::new();
        for &x in &tree.cubes()[s].points {
            if z.contains(&x) {
                continue;
            }
            let q = tree.cube_of(x as usize, bottom);
            by_word.entry(run.coding.words[q].clone()).or_default().push(x);
        }
        for (word, points) in by_word {
            let idx = pieces.len();
            for &x in &points {
                assignment[x as usize] = Some(idx);
            }
            pieces.push(Piece { root: s, word, points });
        }
        garbage.extend(z);
        runs.push(run);
    }
    garbage.sort_unstable();
    garbage.dedup();
    let t = runs.iter().map(|r| r.t).max().unwrap_or(0);
    let max_word_len = pieces.iter().map(|p| p.word.len()).max().unwrap_or(0);
    Ok(Decomposition {
        runs,
        pieces,
        garbage,
        assignment,
        b,
        l,
        t,
        max_word_len,
        alphas,
        doubling: tree.doubling_count(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PieceCertificate {
    pub piece: usize,
    pub points: usize,
    pub pairs: u64,
    pub exhaustive: bool,
    pub min_ratio: f64,
    /// Up to ten pairs with `d_H(f x, f y) < δ d(x, y)`.
    pub failures: Vec<(u32, u32, f64)>,
    pub failure_count: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certification {
    pub delta: f64,
    pub pieces: Vec<PieceCertificate>,
    pub all_pass: bool,
    /// Content of `f(Z)`, `f(R1)`, `f(R2)`.
    pub garbage_content: f64,
    pub r1_content: f64,
    pub r2_content: f64,
    /// `content(f(Z)) / (δ R^N)`.
    pub c: f64,
}

/// Checks `d_H(f x, f y) ≥ δ d(x, y)` on each piece and bounds the image
/// content of the garbage set.
pub fn certify(f: &LipschitzMap, values: &MapSample, tree: &CubeTree, dec: &Decomposition, params: &DecomposeParams) -> Result<Certification> {
    let lat = tree.lattice();
    let cod = f.codomain();
    let delta = params.delta;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0xC3E7);
    let mut out = Vec::new();
    for (i, piece) in dec.pieces.iter().enumerate() {
        let m = piece.points.len() as u64;
        let total = m * m.saturating_sub(1) / 2;
        let exhaustive = match params.certify {
            CertifyMode::Exhaustive => true,
            CertifyMode::Sampled => false,
            CertifyMode::Auto => total <= params.pair_cap,
        };
        let mut cert = PieceCertificate {
            piece: i,
            points: piece.points.len(),
            pairs: 0,
            exhaustive,
            min_ratio: f64::INFINITY,
            failures: Vec::new(),
            failure_count: 0,
        };
        let check = |x: u32, y: u32, cert: &mut PieceCertificate| {
            let d = lat.dist(x as usize, y as usize);
            if d == 0.0 {
                return;
            }
            cert.pairs += 1;
            let r = cod.dist(values.image(x as usize), values.image(y as usize)) / d;
            cert.min_ratio = cert.min_ratio.min(r);
            if r < delta {
                cert.failure_count += 1;
                if cert.failures.len() < 10 {
                    cert.failures.push((x, y, r));
                }
            }
        };
        let pts = &piece.points;
        if exhaustive {
            for a in 0..pts.len() {
                for b in a + 1..pts.len() {
                    check(pts[a], pts[b], &mut cert);
                }
            }
        } else if pts.len() > 1 {
            for _ in 0..params.sample_pairs {
                let a = rng.random_range(0..pts.len());
                let b = rng.random_range(0..pts.len());
                if a != b {
                    check(pts[a], pts[b], &mut cert);
                }
            }
        }
        out.push(cert);
    }
    let r = lat.radius();
    let content = |pts: &[u32]| -> Result<f64> {
        if pts.is_empty() {
            return Ok(0.0);
        }
        Ok(image_content(tree, values, f, pts, r, params.content_levels + tree.levels(), 0)?.upper)
    };
    let r1: Vec<u32> = dec.runs.iter().flat_map(|run| run.r1.iter().copied()).collect();
    let r2: Vec<u32> = dec.runs.iter().flat_map(|run| run.r2.points.iter().copied()).collect();
    let garbage_content = content(&dec.garbage)?;
    let n_dim = lat.metric().homogeneous_dimension() as f64;
    Ok(Certification {
        delta,
        all_pass: out.iter().all(|c| c.failure_count == 0),
        pieces: out,
        garbage_content,
        r1_content: content(&r1)?,
        r2_content: content(&r2)?,
        c: garbage_content / (delta * libm::pow(r, n_dim)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::abelian;
    use crate::cubes::TreeParams;
    use crate::group::CarnotGroup;
    use crate::lattice::{GradedLattice, DEFAULT_BUDGET};
    use crate::norm::Metric;
    use num_rational::BigRational;

    fn plane() -> Metric {
        Metric::unit(&CarnotGroup::new(abelian::<BigRational>(2).unwrap()))
    }

    fn plane_tree(h: f64) -> CubeTree {
        let lat = GradedLattice::build(&plane(), &[0.0, 0.0], 1.0, h, DEFAULT_BUDGET).unwrap();
        let p = TreeParams::auto(&lat, 4.0);
        CubeTree::build(lat, p).unwrap()
    }

    fn run(f: &LipschitzMap, tree: &CubeTree) -> (Decomposition, Certification) {
        let vals = MapSample::new(f, tree.lattice(), 2000, 1).unwrap();
        let params = DecomposeParams { b_pairs: 2000, ..Default::default() };
        let d = decompose(f, &vals, tree, &params).unwrap();
        let c = certify(f, &vals, tree, &d, &params).unwrap();
        (d, c)
    }

    #[test]
    fn identity_gives_one_piece() {
        let tree = plane_tree(0.05);
        let (d, c) = run(&LipschitzMap::identity(&plane()), &tree);
        assert!(d.runs[0].families.b1.is_empty() && d.runs[0].families.b2.is_empty());
        assert_eq!(d.pieces.len(), 1);
        assert_eq!(d.pieces[0].points.len(), tree.lattice().len());
        assert!(d.pieces[0].word.is_empty());
        assert!(d.check_partition(tree.lattice().len()));
        assert!(c.all_pass && c.pieces[0].exhaustive);
        assert!((c.pieces[0].min_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_sends_everything_to_garbage() {
        let tree = plane_tree(0.05);
        let m = plane();
        let (d, c) = run(&LipschitzMap::constant(&m, &m), &tree);
        assert_eq!(d.runs[0].families.b1.len(), tree.cubes().len());
        assert!(d.pieces.is_empty());
        assert_eq!(d.garbage.len(), tree.lattice().len());
        assert_eq!(c.garbage_content, 0.0);
        assert!(c.all_pass);
    }

    #[test]
    fn auto_multiplicity_cap() {
        let mult = [0, 1, 1, 2, 3, 3, 3, 5, 0, 0];
        let pts: Vec<u32> = (0..10).collect();
        for delta in [0.05, 0.15, 0.25, 0.45, 0.75, 1.0] {
            let l = auto_l_mult(&mult, &pts, delta);
            let count = |l: u32| mult.iter().filter(|&&m| m >= l).count() as f64;
            assert!(count(l as u32) < delta * 10.0, "delta {delta}");
            assert!(l == 1 || count(l as u32 - 1) >= delta * 10.0, "delta {delta}");
        }
    }

    #[test]
    fn r2_counts() {
        let tree = plane_tree(0.05);
        let b2: Vec<usize> = tree.cubes_at_scale(0).to_vec();
        let all = compute_r2(&tree, tree.root(), &b2, Some(1), 0.05);
        let union: BTreeSet<u32> = b2.iter().flat_map(|&q| hat_points(&tree, q)).collect();
        assert_eq!(all.points, union.into_iter().collect::<Vec<_>>());
        for lm in 1..5 {
            let r = compute_r2(&tree, tree.root(), &b2, Some(lm), 0.05);
            assert!(r.points.len() * lm <= r.hat_mass);
            assert_eq!(r.l_mult, lm);
        }
        let empty = compute_r2(&tree, tree.root(), &[], None, 0.05);
        assert!(empty.points.is_empty() && empty.l_mult == 1);
    }

    #[test]
    fn words_without_bad_cubes_are_empty() {
        let tree = plane_tree(0.05);
        let fam = neighbor_families(&tree, tree.root(), &[], 1);
        assert_eq!(fam.max_size(), 0);
        let c = assign_words(&tree, tree.root(), &fam, 1, 1).unwrap();
        assert!(c.words.iter().all(|w| w.is_empty()));
    }

    #[test]
    fn words_separate_families() {
        let tree = plane_tree(0.05);
        let b2: Vec<usize> = tree.cubes_at_scale(0).iter().chain(tree.cubes_at_scale(1)).copied().collect();
        let fam = neighbor_families(&tree, tree.root(), &b2, 1);
        let t = fam.max_size();
        assert!(t > 0);
        let c = assign_words(&tree, tree.root(), &fam, 1, t + 1).unwrap();
        assert!(c.conflicts.is_empty());
        // brute force over every pair in every family
        for q in 0..tree.cubes().len() {
            for o in fam.family(q) {
                assert!(separated(&c.words[q], &c.words[o]), "{q} {o}");
            }
            let mut nonempty = 0;
            let mut a = Some(q);
            while let Some(x) = a {
                nonempty += usize::from(!fam.is_empty_for(x));
                a = tree.cubes()[x].parent;
            }
            assert!(c.words[q].len() <= nonempty);
        }
        assert!(coding_violations(&c).is_empty());
    }

    #[test]
    fn violations_are_found() {
        let tree = plane_tree(0.05);
        let b2 = vec![tree.root()];
        let fam = neighbor_families(&tree, tree.root(), &b2, 1);
        let mut c = assign_words(&tree, tree.root(), &fam, 1, fam.max_size() + 1).unwrap();
        assert!(coding_violations(&c).is_empty());
        let g = &fam.groups[0];
        let w = c.words[g[0]].clone();
        c.words[g[1]] = w;
        assert!(!coding_violations(&c).is_empty());
    }

    #[test]
    fn l_is_monotone_in_b() {
        let tree = plane_tree(0.05);
        for b in [0.001, 0.01, 0.05, 0.1, 0.2, 0.5] {
            let l = choose_l(&tree, b);
            assert!(l >= 1 && l <= tree.levels());
            // a larger b loosens the inequality
            assert!(l <= choose_l(&tree, b / 2.0));
        }
    }
}
