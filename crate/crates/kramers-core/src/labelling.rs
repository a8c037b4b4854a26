//! Sublevel-set topology on a grid and the labelling of minima by separating saddles.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::landscape::{CriticalKind, CriticalPoint, Landscape};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabelError {
    #[error("grid too coarse near saddle {location:?}: {local} local components below the saddle level (expected 2)")]
    GridTooCoarse { location: Vec<f64>, local: usize },
    #[error("no local minimum found")]
    NoMinimum,
    #[error("internal labelling inconsistency: {0}")]
    Inconsistent(String),
    #[error("grid resolution must be at least 8 nodes per axis")]
    BadResolution,
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = self.parent[x as usize];
        }
        x
    }

    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (big, small) = if self.size[ra as usize] >= self.size[rb as usize] { (ra, rb) } else { (rb, ra) };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
        true
    }
}

/// Uniform node grid on [-L, L]^d with potential values cached at the nodes.
#[derive(Debug, Clone)]
pub struct SublevelTopology {
    pub dim: usize,
    pub n: usize,
    pub half_width: f64,
    pub delta: f64,
    pub values: Vec<f64>,
}

pub const OUTSIDE: u32 = u32::MAX;

/// Component labels of {V < level}; ids are dense and ordered by smallest node index.
#[derive(Debug, Clone)]
pub struct Components {
    pub level: f64,
    pub label: Vec<u32>,
    pub count: usize,
}

impl Components {
    pub fn of(&self, node: usize) -> Option<u32> {
        let l = self.label[node];
        (l != OUTSIDE).then_some(l)
    }
}

impl SublevelTopology {
    pub fn new(land: &Landscape, n: usize) -> Result<Self, LabelError> {
        if n < 8 {
            return Err(LabelError::BadResolution);
        }
        let dim = land.dim;
        let l = land.half_width;
        let delta = 2.0 * l / (n - 1) as f64;
        let total = n.pow(dim as u32);
        let mut x = vec![0.0; dim];
        let values = (0..total)
            .map(|k| {
                let mut r = k;
                for xi in x.iter_mut() {
                    *xi = -l + delta * (r % n) as f64;
                    r /= n;
                }
                land.potential(&x)
            })
            .collect();
        Ok(SublevelTopology { dim, n, half_width: l, delta, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn coords(&self, node: usize) -> Vec<f64> {
        let mut r = node;
        (0..self.dim)
            .map(|_| {
                let t = r % self.n;
                r /= self.n;
                -self.half_width + self.delta * t as f64
            })
            .collect()
    }

    pub fn nearest_node(&self, x: &[f64]) -> usize {
        let mut idx = 0usize;
        let mut stride = 1usize;
        for &xi in x {
            let t = ((xi + self.half_width) / self.delta).round().clamp(0.0, (self.n - 1) as f64) as usize;
            idx += t * stride;
            stride *= self.n;
        }
        idx
    }

    /// Face neighbours of `node`.
    pub fn neighbors(&self, node: usize, out: &mut Vec<usize>) {
        out.clear();
        let mut stride = 1usize;
        let mut r = node;
        for _ in 0..self.dim {
            let t = r % self.n;
            r /= self.n;
            if t > 0 {
                out.push(node - stride);
            }
            if t + 1 < self.n {
                out.push(node + stride);
            }
            stride *= self.n;
        }
    }

    pub fn components(&self, level: f64) -> Components {
        self.components_masked(level, |_| true)
    }

    /// Components of {V < level} intersected with a node mask.
    pub fn components_masked(&self, level: f64, mask: impl Fn(usize) -> bool) -> Components {
        let total = self.len();
        let inside: Vec<bool> = (0..total).map(|k| self.values[k] < level && mask(k)).collect();
        let mut uf = UnionFind::new(total);
        let mut nb = Vec::with_capacity(2 * self.dim);
        for k in 0..total {
            if !inside[k] {
                continue;
            }
            self.neighbors(k, &mut nb);
            for &q in &nb {
                if q > k && inside[q] {
                    uf.union(k as u32, q as u32);
                }
            }
        }
        let mut label = vec![OUTSIDE; total];
        let mut root_id: std::collections::HashMap<u32, u32> = std::collections::HashMap::new();
        let mut count = 0u32;
        for k in 0..total {
            if inside[k] {
                let r = uf.find(k as u32);
                let id = *root_id.entry(r).or_insert_with(|| {
                    count += 1;
                    count - 1
                });
                label[k] = id;
            }
        }
        Components { level, label, count: count as usize }
    }

    /// Nodes within Euclidean distance `r` of `x`.
    pub fn ball(&self, x: &[f64], r: f64) -> Vec<usize> {
        let reach = (r / self.delta).ceil() as isize;
        let centre: Vec<isize> =
            x.iter().map(|&xi| ((xi + self.half_width) / self.delta).round() as isize).collect();
        let mut out = Vec::new();
        let span = (2 * reach + 1) as usize;
        let total = span.pow(self.dim as u32);
        'outer: for k in 0..total {
            let mut r2 = 0.0;
            let mut idx = 0usize;
            let mut stride = 1usize;
            let mut rem = k;
            for (axis, &c) in centre.iter().enumerate() {
                let off = (rem % span) as isize - reach;
                rem /= span;
                let t = c + off;
                if t < 0 || t >= self.n as isize {
                    continue 'outer;
                }
                let xt = -self.half_width + self.delta * t as f64;
                r2 += (xt - x[axis]).powi(2);
                idx += t as usize * stride;
                stride *= self.n;
            }
            if r2 <= r * r {
                out.push(idx);
            }
        }
        out.sort_unstable();
        out
    }

    /// Components of {V < level} restricted to the given node set (face adjacency inside it).
    pub fn local_components(&self, nodes: &[usize], level: f64) -> Vec<Vec<usize>> {
        let set: Vec<usize> = nodes.iter().copied().filter(|&k| self.values[k] < level).collect();
        let pos: std::collections::HashMap<usize, u32> =
            set.iter().enumerate().map(|(i, &k)| (k, i as u32)).collect();
        let mut uf = UnionFind::new(set.len());
        let mut nb = Vec::new();
        for (i, &k) in set.iter().enumerate() {
            self.neighbors(k, &mut nb);
            for q in &nb {
                if let Some(&j) = pos.get(q) {
                    uf.union(i as u32, j);
                }
            }
        }
        let mut groups: Vec<(u32, Vec<usize>)> = Vec::new();
        for (i, &k) in set.iter().enumerate() {
            let r = uf.find(i as u32);
            match groups.iter_mut().find(|g| g.0 == r) {
                Some(g) => g.1.push(k),
                None => groups.push((r, vec![k])),
            }
        }
        groups.into_iter().map(|g| g.1).collect()
    }
}

/// Local picture at an index-1 saddle: the two descent sides as node sets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaddleSides {
    /// Index into the critical point list.
    pub saddle: usize,
    pub level: f64,
    pub sides: [Vec<usize>; 2],
    /// Global component of each side at `level`.
    pub global: [u32; 2],
    pub separating: bool,
}

pub const LOCAL_RADIUS_CELLS: f64 = 3.0;

fn critical_gap(criticals: &[CriticalPoint]) -> f64 {
    let mut vals: Vec<f64> = criticals.iter().map(|c| c.value).collect();
    vals.sort_by(f64::total_cmp);
    vals.windows(2).map(|w| w[1] - w[0]).filter(|&g| g > 1e-10).fold(f64::INFINITY, f64::min)
}

/// Offset below a saddle value used to split its two descent sides on the grid.
pub fn level_epsilon(cp: &CriticalPoint, topo: &SublevelTopology, criticals: &[CriticalPoint]) -> f64 {
    let h = cp.hessian_matrix();
    let lam1 = nalgebra::SymmetricEigen::new(h).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min).abs();
    let gap = critical_gap(criticals);
    (0.5 * gap).min(lam1 * topo.delta * topo.delta)
}

pub fn saddle_sides(
    idx: usize,
    criticals: &[CriticalPoint],
    topo: &SublevelTopology,
    level: f64,
    comps: &Components,
) -> Result<SaddleSides, LabelError> {
    let s = &criticals[idx];
    let ball = topo.ball(&s.location, LOCAL_RADIUS_CELLS * topo.delta);
    let local = topo.local_components(&ball, level);
    if local.len() != 2 {
        return Err(LabelError::GridTooCoarse { location: s.location.clone(), local: local.len() });
    }
    let g0 = comps.of(local[0][0]).ok_or_else(|| LabelError::Inconsistent("side outside sublevel set".into()))?;
    let g1 = comps.of(local[1][0]).ok_or_else(|| LabelError::Inconsistent("side outside sublevel set".into()))?;
    let mut it = local.into_iter();
    let sides = [it.next().unwrap_or_default(), it.next().unwrap_or_default()];
    Ok(SaddleSides { saddle: idx, level, sides, global: [g0, g1], separating: g0 != g1 })
}

/// The separating saddles, each with its local sides at level V(s) - epsilon.
pub fn separating_saddles(
    criticals: &[CriticalPoint],
    topo: &SublevelTopology,
) -> Result<Vec<SaddleSides>, LabelError> {
    let mut out = Vec::new();
    for (i, cp) in criticals.iter().enumerate() {
        if cp.kind != CriticalKind::Saddle {
            continue;
        }
        let level = cp.value - level_epsilon(cp, topo, criticals);
        let comps = topo.components(level);
        let sides = saddle_sides(i, criticals, topo, level, &comps)?;
        if sides.separating {
            out.push(sides);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WellEntry {
    /// Index into the critical point list.
    pub minimum: usize,
    /// Labelling round (1 for the global minimum).
    pub round: usize,
    /// sigma(m); `None` stands for +infinity.
    pub sigma: Option<f64>,
    /// sigma_{i-1}, the level whose component is E_-(m); `None` is +infinity.
    pub sigma_prev: Option<f64>,
    /// S(m) = sigma(m) - V(m); `None` is +infinity.
    pub barrier: Option<f64>,
    /// j(m) as indices into the critical point list (empty for the global minimum).
    pub saddles: Vec<usize>,
    /// Unit direction from each saddle in `saddles` into E(m).
    pub toward: Vec<Vec<f64>>,
    /// Global minimum of V on the partner component, when that component is unique.
    pub partner: Option<usize>,
    /// Another minimum in E(m) ties with the chosen one.
    pub tie: bool,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WellMap {
    /// sigma_2 > sigma_3 > ... (finite saddle values, descending).
    pub levels: Vec<f64>,
    /// Grid offset used below each level.
    pub level_eps: Vec<f64>,
    /// Entries in labelling order; the first is the global minimum.
    pub entries: Vec<WellEntry>,
}

impl WellMap {
    pub fn global_min(&self) -> &WellEntry {
        &self.entries[0]
    }

    pub fn entry_for(&self, minimum: usize) -> Option<&WellEntry> {
        self.entries.iter().find(|e| e.minimum == minimum)
    }

    pub fn n0(&self) -> usize {
        self.entries.len()
    }

    /// Smallest finite barrier.
    pub fn min_barrier(&self) -> Option<f64> {
        self.entries.iter().filter_map(|e| e.barrier).min_by(f64::total_cmp)
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            _ => {}
        }
    }
    false
}

const VALUE_TOL: f64 = 1e-10;

/// Picks the global minimum among `cands`; ties go to the lexicographically smallest location.
fn pick_min(criticals: &[CriticalPoint], cands: &[usize]) -> Option<(usize, bool)> {
    let vmin = cands.iter().map(|&i| criticals[i].value).min_by(f64::total_cmp)?;
    let mut tied: Vec<usize> = cands.iter().copied().filter(|&i| criticals[i].value <= vmin + VALUE_TOL).collect();
    tied.sort_by(|&a, &b| {
        if lex_less(&criticals[a].location, &criticals[b].location) {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        }
    });
    Some((tied[0], tied.len() > 1))
}

pub fn label_minima(
    criticals: &[CriticalPoint],
    separating: &[SaddleSides],
    topo: &SublevelTopology,
) -> Result<WellMap, LabelError> {
    let minima: Vec<usize> =
        criticals.iter().enumerate().filter(|(_, c)| c.kind == CriticalKind::Minimum).map(|(i, _)| i).collect();
    let (gmin, gtie) = pick_min(criticals, &minima).ok_or(LabelError::NoMinimum)?;
    let min_node: Vec<usize> = minima.iter().map(|&i| topo.nearest_node(&criticals[i].location)).collect();

    // distinct saddle values, descending
    let mut levels: Vec<f64> = Vec::new();
    let mut sorted: Vec<&SaddleSides> = separating.iter().collect();
    sorted.sort_by(|a, b| criticals[b.saddle].value.total_cmp(&criticals[a.saddle].value));
    for s in &sorted {
        let v = criticals[s.saddle].value;
        if levels.last().is_none_or(|&l| (l - v).abs() > VALUE_TOL) {
            levels.push(v);
        }
    }

    let mut entries = vec![WellEntry {
        minimum: gmin,
        round: 1,
        sigma: None,
        sigma_prev: None,
        barrier: None,
        saddles: Vec::new(),
        toward: Vec::new(),
        partner: None,
        tie: gtie,
        value: criticals[gmin].value,
    }];
    let mut labelled = vec![false; criticals.len()];
    labelled[gmin] = true;
    let mut level_eps = Vec::with_capacity(levels.len());

    for (li, &sigma) in levels.iter().enumerate() {
        let at_level: Vec<usize> = sorted
            .iter()
            .filter(|s| (criticals[s.saddle].value - sigma).abs() <= VALUE_TOL)
            .map(|s| s.saddle)
            .collect();
        let eps =
            at_level.iter().map(|&i| level_epsilon(&criticals[i], topo, criticals)).fold(f64::INFINITY, f64::min);
        level_eps.push(eps);
        let comps = topo.components(sigma - eps);
        let sides: Vec<SaddleSides> = at_level
            .iter()
            .map(|&i| saddle_sides(i, criticals, topo, sigma - eps, &comps))
            .collect::<Result<_, _>>()?;

        let mut members: Vec<Vec<usize>> = vec![Vec::new(); comps.count];
        for (k, &m) in minima.iter().enumerate() {
            if let Some(c) = comps.of(min_node[k]) {
                members[c as usize].push(m);
            }
        }
        for (cid, mins) in members.iter().enumerate() {
            if mins.is_empty() || mins.iter().any(|&m| labelled[m]) {
                continue;
            }
            let (m, tie) = pick_min(criticals, mins).ok_or(LabelError::NoMinimum)?;
            let mut saddles = Vec::new();
            let mut toward = Vec::new();
            let mut partner_comps: Vec<u32> = Vec::new();
            for sd in &sides {
                for side in 0..2 {
                    if sd.global[side] as usize == cid {
                        saddles.push(sd.saddle);
                        toward.push(direction(topo, &criticals[sd.saddle].location, &sd.sides[side]));
                        let other = sd.global[1 - side];
                        if other as usize != cid && !partner_comps.contains(&other) {
                            partner_comps.push(other);
                        }
                    }
                }
            }
            if saddles.is_empty() {
                return Err(LabelError::Inconsistent(format!(
                    "new component at level {sigma} has no separating saddle on its boundary"
                )));
            }
            let partner = if partner_comps.len() == 1 {
                pick_min(criticals, &members[partner_comps[0] as usize]).map(|p| p.0)
            } else {
                None
            };
            labelled[m] = true;
            entries.push(WellEntry {
                minimum: m,
                round: li + 2,
                sigma: Some(sigma),
                sigma_prev: if li == 0 { None } else { Some(levels[li - 1]) },
                barrier: Some(sigma - criticals[m].value),
                saddles,
                toward,
                partner,
                tie,
                value: criticals[m].value,
            });
        }
    }
    if let Some(&m) = minima.iter().find(|&&m| !labelled[m]) {
        return Err(LabelError::Inconsistent(format!("minimum at {:?} never labelled", criticals[m].location)));
    }
    Ok(WellMap { levels, level_eps, entries })
}

fn direction(topo: &SublevelTopology, s: &[f64], side: &[usize]) -> Vec<f64> {
    let mut mean = vec![0.0; s.len()];
    for &k in side {
        for (m, x) in mean.iter_mut().zip(topo.coords(k)) {
            *m += x;
        }
    }
    let mut d: Vec<f64> = mean.iter().zip(s).map(|(m, x)| m / side.len() as f64 - x).collect();
    let nrm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nrm > 0.0 {
        d.iter_mut().for_each(|v| *v /= nrm);
    }
    d
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GenericReport {
    pub generic: bool,
    pub double_well_equal_depth: bool,
    pub violations: Vec<String>,
}

pub fn check_generic(wm: &WellMap, criticals: &[CriticalPoint]) -> GenericReport {
    let mut violations = Vec::new();
    for e in &wm.entries {
        if e.tie {
            violations.push(format!("E(m) for minimum at {:?} has more than one global minimum", criticals[e.minimum].location));
        }
    }
    for (a, ea) in wm.entries.iter().enumerate() {
        for eb in wm.entries.iter().skip(a + 1) {
            if ea.saddles.iter().any(|s| eb.saddles.contains(s)) {
                violations.push(format!(
                    "j(m) shared between minima at {:?} and {:?}",
                    criticals[ea.minimum].location, criticals[eb.minimum].location
                ));
            }
        }
    }
    let double_well_equal_depth =
        wm.entries.len() == 2 && (wm.entries[0].value - wm.entries[1].value).abs() <= VALUE_TOL;
    GenericReport { generic: violations.is_empty(), double_well_equal_depth, violations }
}

/// One-stop analysis: grid topology, separating saddles, well map, genericity.
#[derive(Debug, Clone)]
pub struct Labelling {
    pub topo: SublevelTopology,
    pub separating: Vec<SaddleSides>,
    pub wellmap: WellMap,
    pub generic: GenericReport,
}

pub fn analyze(land: &Landscape, criticals: &[CriticalPoint], n: usize) -> Result<Labelling, LabelError> {
    let topo = SublevelTopology::new(land, n)?;
    let separating = separating_saddles(criticals, &topo)?;
    let wellmap = label_minima(criticals, &separating, &topo)?;
    let generic = check_generic(&wellmap, criticals);
    Ok(Labelling { topo, separating, wellmap, generic })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr;
    use crate::landscape::{find_critical_points, preset};

    fn run(land: &Landscape, n: usize) -> (Vec<CriticalPoint>, Labelling) {
        let cps = find_critical_points(land, 32).unwrap();
        let lab = analyze(land, &cps, n).unwrap();
        (cps, lab)
    }

    /// Exact 1D analysis of W: local maxima are saddles of W(x) + y^2, labelled by
    /// the same rounds on intervals.
    fn oracle_1d(w: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Vec<(f64, Option<f64>)> {
        let n = 200_000;
        let xs: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
        let vs: Vec<f64> = xs.iter().map(|&x| w(x)).collect();
        let mut mins = Vec::new();
        let mut maxs = Vec::new();
        for k in 1..n {
            if vs[k] < vs[k - 1] && vs[k] <= vs[k + 1] {
                mins.push(vs[k]);
            }
            if vs[k] > vs[k - 1] && vs[k] >= vs[k + 1] {
                maxs.push(vs[k]);
            }
        }
        // in 1D every interior max separates; each min's sigma is the lower of its two bounding maxima
        // unless it is the deepest in the merged basin, which is resolved by sweeping levels
        let mut out = Vec::new();
        let gmin = mins.iter().copied().fold(f64::INFINITY, f64::min);
        for (i, &m) in mins.iter().enumerate() {
            if m == gmin {
                out.push((m, None));
                continue;
            }
            // walk outwards: the first barrier above which the basin meets a deeper minimum
            let mut best = f64::INFINITY;
            // to the left
            let mut bar = f64::NEG_INFINITY;
            for j in (0..i).rev() {
                bar = bar.max(maxs[j]);
                if mins[j] < m {
                    best = best.min(bar);
                    break;
                }
            }
            let mut bar = f64::NEG_INFINITY;
            for j in i + 1..mins.len() {
                bar = bar.max(maxs[j - 1]);
                if mins[j] < m {
                    best = best.min(bar);
                    break;
                }
            }
            out.push((m, Some(best - m)));
        }
        out
    }

    fn compare_with_oracle(land: &Landscape, w: impl Fn(f64) -> f64) {
        let (cps, lab) = run(land, 256);
        let l = land.half_width;
        let mut oracle = oracle_1d(w, -l, l);
        oracle.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut got: Vec<(f64, Option<f64>)> =
            lab.wellmap.entries.iter().map(|e| (cps[e.minimum].value, e.barrier)).collect();
        got.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert_eq!(got.len(), oracle.len());
        for (g, o) in got.iter().zip(&oracle) {
            assert!((g.0 - o.0).abs() < 1e-8);
            match (g.1, o.1) {
                (None, None) => {}
                (Some(a), Some(b)) => assert!((a - b).abs() < 1e-8, "{a} vs {b}"),
                _ => panic!("barrier mismatch {g:?} vs {o:?}"),
            }
        }
    }

    #[test]
    fn tilted_double_well_matches_1d() {
        let land = preset("tilted_double_well", Some(0.5), 0.0).unwrap();
        compare_with_oracle(&land, |x| (x * x - 1.0).powi(2) + 0.5 * x);
        let (cps, lab) = run(&land, 256);
        assert_eq!(lab.separating.len(), 1);
        let wm = &lab.wellmap;
        assert_eq!(wm.entries.len(), 2);
        assert!(cps[wm.entries[0].minimum].location[0] < 0.0);
        let e = &wm.entries[1];
        assert_eq!(e.saddles.len(), 1);
        assert_eq!(e.partner, Some(wm.entries[0].minimum));
        assert!(lab.generic.generic);
        assert!(!lab.generic.double_well_equal_depth);
        // E(m) lies towards +x from the saddle
        assert!(e.toward[0][0] > 0.9);
    }

    #[test]
    fn triple_well_matches_1d() {
        let land = preset("triple_well", None, 0.0).unwrap();
        let w = |x: f64| x * x * (x - 2.0).powi(2) * (x + 2.0).powi(2) / 16.0 + 0.3 * x;
        compare_with_oracle(&land, w);
        let (cps, lab) = run(&land, 256);
        let wm = &lab.wellmap;
        assert_eq!(wm.levels.len(), 2);
        assert_eq!(wm.entries.len(), 3);
        assert!(lab.generic.generic);
        // labelling order: global (x=-2), then right well (sigma_2), then middle (sigma_3)
        assert!(cps[wm.entries[1].minimum].location[0] > 1.5);
        assert!(cps[wm.entries[2].minimum].location[0].abs() < 0.5);
        assert_eq!(wm.entries[2].sigma_prev, Some(wm.levels[0]));
    }

    #[test]
    fn symmetric_double_well_is_not_generic() {
        let land = preset("sym_double_well", None, 1.0).unwrap();
        let (cps, lab) = run(&land, 256);
        assert!(!lab.generic.generic);
        assert!(lab.generic.double_well_equal_depth);
        assert!(cps[lab.wellmap.entries[0].minimum].location[0] < 0.0);
        assert_eq!(lab.wellmap.entries[1].barrier, Some(1.0));
    }

    #[test]
    fn single_well_has_no_separating_saddle() {
        let land = preset("single_well", None, 0.0).unwrap();
        let (_, lab) = run(&land, 128);
        assert!(lab.separating.is_empty());
        assert_eq!(lab.wellmap.n0(), 1);
        assert_eq!(lab.wellmap.entries[0].barrier, None);
    }

    #[test]
    fn ring_saddle_does_not_separate() {
        // tilted ring valley: the saddle's two descent sides meet again at the minimum
        let v = expr::parse("(x^2 + y^2 - 1)^2 + 0.3*x", 2).unwrap();
        let zero = vec![expr::constant(0.0); 2];
        let land = Landscape::new("ring", 2, v, zero.clone(), zero, None, 1.6).unwrap();
        let cps = find_critical_points(&land, 32).unwrap();
        assert!(cps.iter().any(|c| c.kind == CriticalKind::Saddle));
        let topo = SublevelTopology::new(&land, 256).unwrap();
        assert!(separating_saddles(&cps, &topo).unwrap().is_empty());
    }

    #[test]
    fn refinement_is_stable() {
        let land = preset("triple_well", None, 0.5).unwrap();
        let cps = find_critical_points(&land, 32).unwrap();
        let a = analyze(&land, &cps, 160).unwrap().wellmap;
        let b = analyze(&land, &cps, 320).unwrap().wellmap;
        assert_eq!(a.entries.len(), b.entries.len());
        for (x, y) in a.entries.iter().zip(&b.entries) {
            assert_eq!(x.minimum, y.minimum);
            assert_eq!(x.saddles, y.saddles);
            assert_eq!(x.sigma, y.sigma);
        }
    }
}
