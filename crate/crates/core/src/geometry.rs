//! Function alphabet, distortion functionals, the side-channel polytope
//! `W1(E)` and the robust test-channel set `V(E, D)`.

use std::sync::Arc;

use crate::error::{check_size, Error, Result};
use crate::prob::{Alphabet, Channel, Distribution};

/// Largest function alphabet that is materialized.
pub const MAX_FUNCTIONS: usize = 4096;

/// Slack on `<=` comparisons against distortion levels.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Largest `|X| * |Y|` accepted by [`extreme_points_w1`].
pub const MAX_VERTEX_DIM: usize = 20;

/// Nonnegative bounded distortion matrix in which every row has a zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionMeasure {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    max_value: f64,
}

impl DistortionMeasure {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let nr = rows.len();
        let nc = rows.first().map(|r| r.len()).unwrap_or(0);
        if nr == 0 || nc == 0 {
            return Err(Error::InvalidDistortion("empty matrix".into()));
        }
        let mut data = Vec::with_capacity(nr * nc);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != nc {
                return Err(Error::InvalidDistortion(format!(
                    "row {i} has {} entries, expected {nc}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidDistortion(format!(
                        "entry ({i}, {j}) = {v} is not a finite nonnegative number"
                    )));
                }
            }
            if !row.contains(&0.0) {
                return Err(Error::InvalidDistortion(format!("row {i} has no zero entry")));
            }
            data.extend_from_slice(row);
        }
        let max_value = data.iter().cloned().fold(0.0, f64::max);
        Ok(DistortionMeasure {
            rows: nr,
            cols: nc,
            data,
            max_value,
        })
    }

    /// `d(i, j) = 1` if `i != j`, else 0. Needs `rows <= cols`.
    pub fn hamming(rows: usize, cols: usize) -> Result<Self> {
        DistortionMeasure::new(
            (0..rows)
                .map(|i| (0..cols).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn max_value(&self) -> f64 {
        self.max_value
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols).map(|r| r.to_vec()).collect()
    }

    /// True when the matrix is square and vanishes exactly on the diagonal.
    pub fn is_hamming_like(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..self.cols).all(|j| (self.get(i, j) == 0.0) == (i == j)))
    }
}

/// All maps `Y -> Xhat`. Function `u` sends `y` to digit `y` of `u` in base
/// `|Xhat|`, so the constant function `xhat` has index
/// `xhat * (1 + b + ... + b^{|Y|-1})`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionAlphabet {
    y_size: usize,
    xhat_size: usize,
    table: Vec<Vec<usize>>,
    constants: Vec<usize>,
}

impl FunctionAlphabet {
    pub fn new(y_size: usize, xhat_size: usize) -> Result<Self> {
        if y_size == 0 || xhat_size == 0 {
            return Err(Error::InvalidArgument("alphabet sizes must be positive".into()));
        }
        let count = (xhat_size as u128).checked_pow(y_size as u32);
        let count = match count {
            Some(c) if c <= MAX_FUNCTIONS as u128 => c as usize,
            _ => {
                return Err(Error::Unsupported(format!(
                    "|Xhat|^|Y| = {xhat_size}^{y_size} exceeds {MAX_FUNCTIONS} functions"
                )))
            }
        };
        let table: Vec<Vec<usize>> = (0..count)
            .map(|mut u| {
                (0..y_size)
                    .map(|_| {
                        let digit = u % xhat_size;
                        u /= xhat_size;
                        digit
                    })
                    .collect()
            })
            .collect();
        let constants = (0..count)
            .filter(|&u| table[u].iter().all(|&v| v == table[u][0]))
            .collect();
        Ok(FunctionAlphabet {
            y_size,
            xhat_size,
            table,
            constants,
        })
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn xhat_size(&self) -> usize {
        self.xhat_size
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.len(), "U").expect("function alphabet is nonempty")
    }

    pub fn function(&self, u: usize) -> &[usize] {
        &self.table[u]
    }

    #[inline]
    pub fn apply(&self, u: usize, y: usize) -> usize {
        self.table[u][y]
    }

    /// Indices of the constant functions, ordered by their value.
    pub fn constant_subset(&self) -> &[usize] {
        &self.constants
    }

    pub fn is_constant(&self, u: usize) -> bool {
        self.constants.binary_search(&u).is_ok()
    }

    pub fn constant(&self, xhat: usize) -> usize {
        self.constants[xhat]
    }

    pub fn index_of(&self, map: &[usize]) -> Result<usize> {
        check_size("function map", self.y_size, map.len())?;
        let mut idx = 0;
        for &v in map.iter().rev() {
            if v >= self.xhat_size {
                return Err(Error::SymbolOutOfRange {
                    symbol: v,
                    size: self.xhat_size,
                });
            }
            idx = idx * self.xhat_size + v;
        }
        Ok(idx)
    }

    /// The function `y -> y`, when `Y` and `Xhat` coincide.
    pub fn identity(&self) -> Option<usize> {
        if self.y_size != self.xhat_size {
            return None;
        }
        let map: Vec<usize> = (0..self.y_size).collect();
        self.index_of(&map).ok()
    }
}

/// A conditional law `V(u|x)` over the function alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct TestChannel {
    channel: Channel,
    functions: Arc<FunctionAlphabet>,
}

impl TestChannel {
    pub fn new(channel: Channel, functions: Arc<FunctionAlphabet>) -> Result<Self> {
        check_size("test channel outputs", functions.len(), channel.output_size())?;
        Ok(TestChannel { channel, functions })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, functions: Arc<FunctionAlphabet>) -> Result<Self> {
        let input = Alphabet::new(rows.len(), "X")?;
        let channel = Channel::new(input, functions.alphabet(), rows)?;
        TestChannel::new(channel, functions)
    }

    pub(crate) fn from_flat(nx: usize, data: Vec<f64>, functions: Arc<FunctionAlphabet>) -> Result<Self> {
        let channel = Channel::from_flat(Alphabet::new(nx, "X")?, functions.alphabet(), data)?;
        TestChannel::new(channel, functions)
    }

    /// Every input row puts all its mass on function `u`.
    pub fn point_mass(nx: usize, u: usize, functions: Arc<FunctionAlphabet>) -> Result<Self> {
        let channel = Channel::constant_output(Alphabet::new(nx, "X")?, functions.alphabet(), u)?;
        TestChannel::new(channel, functions)
    }

    /// Row `x` puts all its mass on function `map[x]`.
    pub fn deterministic(map: &[usize], functions: Arc<FunctionAlphabet>) -> Result<Self> {
        let channel = Channel::deterministic(Alphabet::new(map.len(), "X")?, functions.alphabet(), map)?;
        TestChannel::new(channel, functions)
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    pub fn functions(&self) -> &Arc<FunctionAlphabet> {
        &self.functions
    }

    pub fn input_size(&self) -> usize {
        self.channel.input_size()
    }

    #[inline]
    pub fn get(&self, x: usize, u: usize) -> f64 {
        self.channel.get(x, u)
    }

    pub fn as_flat(&self) -> &[f64] {
        self.channel.as_flat()
    }

    /// Largest per-row mass on non-constant functions.
    pub fn mass_outside_constants(&self) -> f64 {
        (0..self.input_size())
            .map(|x| {
                self.channel
                    .row(x)
                    .iter()
                    .enumerate()
                    .filter(|(u, _)| !self.functions.is_constant(*u))
                    .map(|(_, &p)| p)
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// `g(x, y) = sum_u V(u|x) d(x, u(y))`, the expected reproduction
    /// distortion when the side symbol is `y`; row-major `|X| x |Y|`.
    pub fn gains(&self, d: &DistortionMeasure) -> Result<Vec<f64>> {
        check_size("reproduction distortion rows", self.input_size(), d.rows())?;
        check_size("reproduction distortion columns", self.functions.xhat_size(), d.cols())?;
        Ok(expected_gains(self.channel.as_flat(), self.input_size(), &self.functions, d))
    }
}

pub(crate) fn expected_gains(v: &[f64], nx: usize, fa: &FunctionAlphabet, d: &DistortionMeasure) -> Vec<f64> {
    let nu = fa.len();
    let ny = fa.y_size();
    let mut g = vec![0.0; nx * ny];
    for x in 0..nx {
        for u in 0..nu {
            let p = v[x * nu + u];
            if p == 0.0 {
                continue;
            }
            for y in 0..ny {
                g[x * ny + y] += p * d.get(x, fa.apply(u, y));
            }
        }
    }
    g
}

/// The polytope `{W : e(P_X, W) <= E}` of side channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelClassW1 {
    source: Distribution,
    e: DistortionMeasure,
    budget: f64,
}

impl ChannelClassW1 {
    pub fn new(source: Distribution, e: DistortionMeasure, budget: f64) -> Result<Self> {
        check_size("side distortion rows", source.len(), e.rows())?;
        if !budget.is_finite() || budget < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "side distortion level must be finite and nonnegative, got {budget}"
            )));
        }
        Ok(ChannelClassW1 { source, e, budget })
    }

    pub fn source(&self) -> &Distribution {
        &self.source
    }

    pub fn side_measure(&self) -> &DistortionMeasure {
        &self.e
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn x_size(&self) -> usize {
        self.source.len()
    }

    pub fn y_size(&self) -> usize {
        self.e.cols()
    }

    pub fn contains(&self, w: &Channel) -> Result<bool> {
        Ok(side_distortion(&self.source, w, &self.e)? <= self.budget + MEMBERSHIP_TOL)
    }

    /// Deterministic channel sending each `x` to the first `y` with
    /// `e(x, y) = 0`; always a member.
    pub fn zero_distortion_channel(&self) -> Channel {
        let map: Vec<usize> = (0..self.x_size())
            .map(|x| self.e.row(x).iter().position(|&v| v == 0.0).expect("row has a zero"))
            .collect();
        Channel::deterministic(
            self.source.alphabet().clone(),
            Alphabet::new(self.y_size(), "Y").expect("nonempty"),
            &map,
        )
        .expect("valid map")
    }
}

/// `d(V, W) = sum P(x) V(u|x) W(y|x) d(x, u(y))`.
pub fn reproduction_distortion(
    v: &TestChannel,
    w: &Channel,
    px: &Distribution,
    d: &DistortionMeasure,
) -> Result<f64> {
    check_size("source vs test channel", px.len(), v.input_size())?;
    check_size("source vs side channel", px.len(), w.input_size())?;
    check_size("side channel outputs", v.functions().y_size(), w.output_size())?;
    let g = v.gains(d)?;
    Ok(weighted_sum(px.probs(), w.as_flat(), &g))
}

pub(crate) fn weighted_sum(px: &[f64], w: &[f64], g: &[f64]) -> f64 {
    let ny = w.len() / px.len();
    px.iter()
        .enumerate()
        .map(|(x, &p)| p * (0..ny).map(|y| w[x * ny + y] * g[x * ny + y]).sum::<f64>())
        .sum()
}

/// `e(P_X, W) = sum P(x) W(y|x) e(x, y)`.
pub fn side_distortion(px: &Distribution, w: &Channel, e: &DistortionMeasure) -> Result<f64> {
    check_size("source vs side channel", px.len(), w.input_size())?;
    check_size("side distortion rows", w.input_size(), e.rows())?;
    check_size("side distortion columns", w.output_size(), e.cols())?;
    let mut total = 0.0;
    for x in 0..px.len() {
        let row: f64 = w.row(x).iter().zip(e.row(x)).map(|(a, b)| a * b).sum();
        total += px.get(x) * row;
    }
    Ok(total)
}

/// Maximizer of a linear functional over `W1(E)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase {
    pub value: f64,
    pub channel: Channel,
}

/// `max_{W in W1(E)} d(V, W)`.
pub fn worst_case_distortion(
    v: &TestChannel,
    class: &ChannelClassW1,
    d: &DistortionMeasure,
) -> Result<WorstCase> {
    check_size("source vs test channel", class.x_size(), v.input_size())?;
    check_size("side channel outputs", v.functions().y_size(), class.y_size())?;
    let g = v.gains(d)?;
    let (value, flat) = maximize_linear_over_class(class.source.probs(), &class.e, class.budget, &g);
    let channel = Channel::from_flat(
        class.source.alphabet().clone(),
        Alphabet::new(class.y_size(), "Y")?,
        flat,
    )?;
    Ok(WorstCase { value, channel })
}

/// Maximizes `sum P(x) W(y|x) g(x, y)` over `W1(E)`.
///
/// One coupling constraint makes this a multiple-choice fractional knapsack:
/// each row walks the upper concave hull of its `(e(x,y), g(x,y))` points
/// starting from a zero-cost symbol, and the budget goes to hull edges in
/// order of decreasing slope. At most one row ends up split between two
/// adjacent hull vertices.
pub(crate) fn maximize_linear_over_class(
    px: &[f64],
    e: &DistortionMeasure,
    budget: f64,
    g: &[f64],
) -> (f64, Vec<f64>) {
    let nx = px.len();
    let ny = e.cols();
    let mut w = vec![0.0; nx * ny];
    let mut hulls: Vec<Vec<usize>> = Vec::with_capacity(nx);
    let mut edges: Vec<(f64, usize, usize)> = Vec::new();
    for x in 0..nx {
        let gx = &g[x * ny..(x + 1) * ny];
        if px[x] == 0.0 {
            let best = argmax(gx);
            w[x * ny + best] = 1.0;
            hulls.push(vec![best]);
            continue;
        }
        let hull = row_hull(e.row(x), gx);
        for k in 1..hull.len() {
            let (a, b) = (hull[k - 1], hull[k]);
            let slope = (gx[b] - gx[a]) / (e.get(x, b) - e.get(x, a));
            edges.push((slope, x, k));
        }
        hulls.push(hull);
    }
    edges.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    // Position reached on each row's hull, plus the fractional split.
    let mut level = vec![0usize; nx];
    let mut split: Option<(usize, f64)> = None;
    let mut remaining = budget;
    for &(_, x, k) in &edges {
        let hull = &hulls[x];
        let cost = px[x] * (e.get(x, hull[k]) - e.get(x, hull[k - 1]));
        if cost <= remaining {
            remaining -= cost;
            level[x] = k;
        } else {
            if remaining > 0.0 {
                split = Some((x, remaining / cost));
            }
            break;
        }
    }
    for x in 0..nx {
        if px[x] == 0.0 {
            continue;
        }
        let hull = &hulls[x];
        match split {
            Some((sx, t)) if sx == x => {
                w[x * ny + hull[level[x]]] += 1.0 - t;
                w[x * ny + hull[level[x] + 1]] += t;
            }
            _ => w[x * ny + hull[level[x]]] = 1.0,
        }
    }
    (weighted_sum(px, &w, g), w)
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Vertices of the upper concave frontier of points `(cost[y], gain[y])`,
/// from the best zero-cost point up to the overall best gain.
fn row_hull(cost: &[f64], gain: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..cost.len()).collect();
    order.sort_by(|&a, &b| cost[a].total_cmp(&cost[b]).then(gain[b].total_cmp(&gain[a])).then(a.cmp(&b)));
    let mut hull: Vec<usize> = Vec::new();
    for &y in &order {
        if let Some(&last) = hull.last() {
            if gain[y] <= gain[last] {
                continue;
            }
        }
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // Drop b when it lies on or below the chord a -> y.
            let cross = (cost[b] - cost[a]) * (gain[y] - gain[a]) - (gain[b] - gain[a]) * (cost[y] - cost[a]);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(y);
    }
    hull
}

/// Whether `max_{W in W1(E)} d(V, W) <= D + 1e-9`.
pub fn is_member_ved(
    v: &TestChannel,
    class: &ChannelClassW1,
    d: &DistortionMeasure,
    level: f64,
) -> Result<bool> {
    if level.is_nan() || level < 0.0 {
        return Err(Error::InvalidArgument(format!("distortion level {level} is negative")));
    }
    Ok(worst_case_distortion(v, class, d)?.value <= level + MEMBERSHIP_TOL)
}

/// All vertices of `W1(E)`: deterministic channels within budget, and
/// points where a single row is split between two outputs so that the
/// budget is met with equality.
pub fn extreme_points_w1(class: &ChannelClassW1) -> Result<Vec<Channel>> {
    let nx = class.x_size();
    let ny = class.y_size();
    if nx * ny > MAX_VERTEX_DIM {
        return Err(Error::Unsupported(format!(
            "vertex enumeration needs |X|*|Y| <= {MAX_VERTEX_DIM}, got {}",
            nx * ny
        )));
    }
    let px = class.source.probs();
    let e = &class.e;
    let budget = class.budget;
    let y_alphabet = Alphabet::new(ny, "Y")?;
    let x_alphabet = class.source.alphabet().clone();
    let mut out = Vec::new();
    let mut map = vec![0usize; nx];
    loop {
        let cost: f64 = (0..nx).map(|x| px[x] * e.get(x, map[x])).sum();
        if cost <= budget + MEMBERSHIP_TOL {
            out.push(Channel::deterministic(x_alphabet.clone(), y_alphabet.clone(), &map)?);
            for x in 0..nx {
                for y in 0..ny {
                    let shifted = cost + px[x] * (e.get(x, y) - e.get(x, map[x]));
                    if shifted > budget + MEMBERSHIP_TOL && cost < budget - MEMBERSHIP_TOL {
                        let t = (budget - cost) / (shifted - cost);
                        let mut rows: Vec<Vec<f64>> = map
                            .iter()
                            .map(|&m| {
                                let mut r = vec![0.0; ny];
                                r[m] = 1.0;
                                r
                            })
                            .collect();
                        rows[x][map[x]] = 1.0 - t;
                        rows[x][y] = t;
                        out.push(Channel::new(x_alphabet.clone(), y_alphabet.clone(), rows)?);
                    }
                }
            }
        }
        let mut i = 0;
        loop {
            if i == nx {
                return Ok(out);
            }
            map[i] += 1;
            if map[i] < ny {
                break;
            }
            map[i] = 0;
            i += 1;
        }
    }
}
