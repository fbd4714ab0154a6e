//! Diagnostics over a swept grid: argmins, zero-support masks and the
//! free-energy basins between them, and the behavior of `ψ` near the capacity
//! minimum.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::family::{ChannelFamily, FamilyKind};
use super::grid::LandscapeGrid;
use crate::capacity::{capacity, muroga_terms, perturb_off_diagonal, psi_matrix, MethodChoice, DEFAULT_MAX_ITER, FD_BA_TOL};
use crate::channel::ChannelMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_TIE_TOL: f64 = 1e-9;
/// Default ratio-to-global-max threshold for the "≈ 0" claims.
pub const DEFAULT_NEAR_ZERO_RATIO: f64 = 0.1;
/// Relative deviation below which `Σ_ℓ M_jℓ/p_ℓ ≈ Σ_ℓ M_kℓ/p_ℓ` is taken to hold.
pub const DEFAULT_PREMISE_TOL: f64 = 0.05;
/// Default half-width of the inter-mask band as a fraction of the grid size.
pub const BAND_FRACTION: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Quantity {
    #[serde(rename = "C")]
    Capacity,
    #[serde(rename = "t_mix")]
    TMix,
    #[serde(rename = "beta_inv_mix")]
    BetaInvMix,
    #[serde(rename = "F_mix")]
    FMix,
    #[serde(rename = "H")]
    Entropy,
}

impl Quantity {
    fn of(self, cell: &super::grid::CellRecord) -> f64 {
        match self {
            Self::Capacity => cell.capacity,
            Self::TMix => cell.t_mix,
            Self::BetaInvMix => cell.beta_inv_mix,
            Self::FMix => cell.f_mix,
            Self::Entropy => cell.entropy,
        }
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "C" => Ok(Self::Capacity),
            "t_mix" => Ok(Self::TMix),
            "beta_inv_mix" => Ok(Self::BetaInvMix),
            "F_mix" => Ok(Self::FMix),
            "H" => Ok(Self::Entropy),
            other => Err(Error::InvalidArgument(format!("unknown quantity {other:?}"))),
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Capacity => "C",
            Self::TMix => "t_mix",
            Self::BetaInvMix => "beta_inv_mix",
            Self::FMix => "F_mix",
            Self::Entropy => "H",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Minimizer {
    pub i: usize,
    pub j: usize,
    pub u: f64,
    pub v: f64,
    pub value: f64,
    /// L∞ distance in `(u, v)` to the line `v = 1 − u` (binary grids only).
    pub diagonal_distance: Option<f64>,
    /// The same distance in units of the grid step.
    pub diagonal_steps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArgminReport {
    pub quantity: Quantity,
    pub minimum: f64,
    pub tie_tol: f64,
    pub grid_step: f64,
    /// Every cell within `tie_tol` of the minimum, lowest value first.
    pub minimizers: Vec<Minimizer>,
}

impl ArgminReport {
    /// Whether every tied minimizer lies within `steps` grid steps of the diagonal.
    pub fn all_near_diagonal(&self, steps: f64) -> bool {
        self.minimizers
            .iter()
            .all(|m| m.diagonal_steps.is_some_and(|d| d <= steps + 1e-9))
    }
}

pub fn argmin_report(grid: &LandscapeGrid, quantity: Quantity, tie_tol: f64) -> Result<ArgminReport> {
    let values: Vec<(usize, f64)> = grid
        .cells
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_ok())
        .map(|(idx, c)| (idx, quantity.of(c)))
        .filter(|(_, x)| !x.is_nan())
        .collect();
    let minimum = values.iter().map(|&(_, x)| x).fold(f64::INFINITY, f64::min);
    if values.is_empty() {
        return Err(Error::AllCellsFailed);
    }
    let (du, dv) = grid.steps();
    let step = du.max(dv);
    let binary = grid.family == Some(FamilyKind::Biodmc);
    let mut minimizers: Vec<Minimizer> = values
        .iter()
        .filter(|&&(_, x)| x <= minimum + tie_tol)
        .map(|&(idx, value)| {
            let cell = &grid.cells[idx];
            let distance = binary.then(|| (cell.u + cell.v - 1.0).abs() / 2.0);
            Minimizer {
                i: idx / grid.n_v,
                j: idx % grid.n_v,
                u: cell.u,
                v: cell.v,
                value,
                diagonal_distance: distance,
                diagonal_steps: distance.map(|d| d / step),
            }
        })
        .collect();
    minimizers.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(ArgminReport { quantity, minimum, tie_tol, grid_step: step, minimizers })
}

fn min_separation_steps(a: &ArgminReport, b: &ArgminReport) -> f64 {
    a.minimizers
        .iter()
        .flat_map(|x| b.minimizers.iter().map(move |y| x.i.abs_diff(y.i).max(x.j.abs_diff(y.j))))
        .min()
        .map_or(f64::INFINITY, |d| d as f64)
}

/// Binary-channel check that `argmin C` and `argmin F_mix` sit on the
/// zero-capacity diagonal while `argmin H` does not.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagonalArgminReport {
    pub capacity: ArgminReport,
    pub free_energy: ArgminReport,
    pub entropy: ArgminReport,
    pub capacity_on_diagonal: bool,
    pub free_energy_on_diagonal: bool,
    pub entropy_on_diagonal: bool,
    /// Smallest L∞ grid distance between a `C` minimizer and an `F_mix` minimizer.
    pub separation_steps: f64,
    pub pass: bool,
}

pub fn diagonal_argmin_check(grid: &LandscapeGrid, tie_tol: f64) -> Result<DiagonalArgminReport> {
    if grid.family != Some(FamilyKind::Biodmc) {
        return Err(Error::InvalidArgument("the diagonal check needs a biodmc grid".into()));
    }
    let capacity = argmin_report(grid, Quantity::Capacity, tie_tol)?;
    let free_energy = argmin_report(grid, Quantity::FMix, tie_tol)?;
    let entropy = argmin_report(grid, Quantity::Entropy, tie_tol)?;
    let capacity_on_diagonal = capacity.all_near_diagonal(1.0);
    let free_energy_on_diagonal = free_energy.all_near_diagonal(1.0);
    let entropy_on_diagonal = entropy.all_near_diagonal(1.0);
    let separation_steps = min_separation_steps(&capacity, &free_energy);
    let pass = capacity_on_diagonal && free_energy_on_diagonal && separation_steps <= 2.0 && !entropy_on_diagonal;
    Ok(DiagonalArgminReport {
        capacity,
        free_energy,
        entropy,
        capacity_on_diagonal,
        free_energy_on_diagonal,
        entropy_on_diagonal,
        separation_steps,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaskSummary {
    /// 1-based input symbol whose capacity-achieving mass vanishes.
    pub symbol: usize,
    pub cells: usize,
    pub centroid_u: f64,
    pub centroid_v: f64,
    pub region: String,
    /// Smallest `F_mix` inside the mask (the plateau sits at 0).
    pub min_f_mix: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CornerReport {
    pub support_eps: f64,
    /// Cells whose two nearest distinct masks are at Chebyshev distances
    /// differing by at most this many cells form the inter-mask band.
    pub band_halfwidth: usize,
    pub masks: Vec<MaskSummary>,
    pub pairwise_disjoint: bool,
    pub band_cells: usize,
    pub band_area_fraction: f64,
    /// Strict 4-neighbor local minima of `F_mix`, as `(i, j)`.
    pub local_minima: Vec<(usize, usize)>,
    pub minima_in_band: usize,
    pub fraction_in_band: f64,
    pub note: Option<String>,
}

fn region_label(u: f64, v: f64) -> String {
    let vertical = if v < 0.5 { "lower" } else { "upper" };
    let horizontal = if u < 0.5 { "left" } else { "right" };
    format!("{vertical} {horizontal}")
}

/// Chebyshev distance from every cell to the nearest marked cell.
fn distance_map(marked: &[bool], n_u: usize, n_v: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; marked.len()];
    let mut queue = VecDeque::new();
    for (idx, &m) in marked.iter().enumerate() {
        if m {
            dist[idx] = 0;
            queue.push_back(idx);
        }
    }
    while let Some(idx) = queue.pop_front() {
        let (i, j) = (idx / n_v, idx % n_v);
        for di in -1i64..=1 {
            for dj in -1i64..=1 {
                let (a, b) = (i as i64 + di, j as i64 + dj);
                if a < 0 || b < 0 || a >= n_u as i64 || b >= n_v as i64 {
                    continue;
                }
                let next = a as usize * n_v + b as usize;
                if dist[next] == usize::MAX {
                    dist[next] = dist[idx] + 1;
                    queue.push_back(next);
                }
            }
        }
    }
    dist
}

/// Cells strictly below every valid 4-neighbor in `F_mix`.
pub fn local_minima(grid: &LandscapeGrid) -> Vec<(usize, usize)> {
    let mut minima = Vec::new();
    for i in 0..grid.n_u {
        for j in 0..grid.n_v {
            let cell = grid.cell(i, j);
            if !cell.is_ok() {
                continue;
            }
            let neighbors = [(i.wrapping_sub(1), j), (i + 1, j), (i, j.wrapping_sub(1)), (i, j + 1)];
            let is_min = neighbors
                .iter()
                .filter(|&&(a, b)| a < grid.n_u && b < grid.n_v)
                .map(|&(a, b)| grid.cell(a, b))
                .filter(|c| c.is_ok())
                .all(|c| cell.f_mix < c.f_mix);
            if is_min {
                minima.push((i, j));
            }
        }
    }
    minima
}

/// Masks where one capacity-achieving mass vanishes, the band between masks,
/// and how many local `F_mix` minima fall into that band.
pub fn corner_basin_diagnostics(
    grid: &LandscapeGrid,
    support_eps: f64,
    band_halfwidth: Option<usize>,
) -> Result<CornerReport> {
    if grid.n == 0 || grid.cells.iter().any(|c| c.p_star.len() != grid.n) {
        return Err(Error::MissingPStar);
    }
    let band_halfwidth = band_halfwidth
        .unwrap_or_else(|| ((BAND_FRACTION * grid.n_u.max(grid.n_v) as f64).round() as usize).max(1));
    let masks: Vec<Vec<bool>> = (0..grid.n)
        .map(|k| grid.cells.iter().map(|c| c.is_ok() && c.p_star[k] < support_eps).collect())
        .collect();
    let in_any: Vec<bool> = (0..grid.cells.len()).map(|idx| masks.iter().any(|m| m[idx])).collect();
    let overlap = (0..grid.cells.len())
        .filter(|&idx| masks.iter().filter(|m| m[idx]).count() > 1)
        .count();

    let summaries: Vec<MaskSummary> = masks
        .iter()
        .enumerate()
        .filter(|(_, m)| m.iter().any(|&x| x))
        .map(|(k, m)| {
            let members: Vec<_> = grid.cells.iter().zip(m).filter(|(_, &x)| x).map(|(c, _)| c).collect();
            let count = members.len();
            let centroid_u = members.iter().map(|c| c.u).sum::<f64>() / count as f64;
            let centroid_v = members.iter().map(|c| c.v).sum::<f64>() / count as f64;
            MaskSummary {
                symbol: k + 1,
                cells: count,
                centroid_u,
                centroid_v,
                region: region_label(centroid_u, centroid_v),
                min_f_mix: members.iter().map(|c| c.f_mix).fold(f64::INFINITY, f64::min),
            }
        })
        .collect();

    let minima = local_minima(grid);
    let mut note = None;
    let (band, minima_in_band) = if summaries.len() < 2 {
        note = Some(if summaries.is_empty() {
            "capacity-achieving distribution has full support everywhere; no corners".to_string()
        } else {
            "only one zero-support region; no inter-mask band".to_string()
        });
        (vec![false; grid.cells.len()], 0)
    } else {
        let distances: Vec<Vec<usize>> = summaries
            .iter()
            .map(|s| distance_map(&masks[s.symbol - 1], grid.n_u, grid.n_v))
            .collect();
        let band: Vec<bool> = (0..grid.cells.len())
            .map(|idx| {
                if in_any[idx] || !grid.cells[idx].is_ok() {
                    return false;
                }
                let mut d: Vec<usize> = distances.iter().map(|m| m[idx]).collect();
                d.sort_unstable();
                d[1] - d[0] <= band_halfwidth
            })
            .collect();
        let hits = minima.iter().filter(|&&(i, j)| band[grid.index(i, j)]).count();
        (band, hits)
    };
    let band_cells = band.iter().filter(|&&x| x).count();
    Ok(CornerReport {
        support_eps,
        band_halfwidth,
        pairwise_disjoint: overlap == 0,
        masks: summaries,
        band_cells,
        band_area_fraction: band_cells as f64 / grid.cells.len() as f64,
        fraction_in_band: if minima.is_empty() { 0.0 } else { minima_in_band as f64 / minima.len() as f64 },
        minima_in_band,
        local_minima: minima,
        note,
    })
}

/// One off-diagonal pair in the `∂ log Z/∂W_jk` check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogPartitionPair {
    pub j: usize,
    pub k: usize,
    /// `|s_j − s_k| / max(|s_j|, |s_k|)` with `s_i = Σ_ℓ M_iℓ/p_ℓ`.
    pub premise_deviation: f64,
    pub premise_holds: bool,
    /// Central difference of `log Z = −mean(log p*)`.
    pub d_log_z: f64,
    /// Exact `∂C/∂W_jk = ψ^(jk) p_j`.
    pub d_capacity: f64,
}

fn log_partition(w: &ChannelMatrix) -> Result<f64> {
    let p = crate::capacity::muroga_capacity(w)?.p_star;
    Ok(-p.weights().iter().map(|x| x.ln()).sum::<f64>() / p.len() as f64)
}

/// Evaluates `∂ log Z/∂W_jk` for every off-diagonal pair of a channel where
/// the Muroga solution applies. Pairs failing the premise are still listed.
pub fn log_partition_check(w: &ChannelMatrix, premise_tol: f64, h: f64) -> Result<Vec<LogPartitionPair>> {
    let terms = muroga_terms(w)?;
    let psi = psi_matrix(w, &terms)?;
    let p = crate::capacity::muroga_capacity(w)?.p_star;
    let n = w.n();
    let s: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|l| terms.inverse[(i, l)] / p[l]).sum())
        .collect();
    let mut pairs = Vec::new();
    for j in 0..n {
        for k in (0..n).filter(|&k| k != j) {
            let premise_deviation = (s[j] - s[k]).abs() / s[j].abs().max(s[k].abs());
            let plus = log_partition(&perturb_off_diagonal(w, j, k, h)?)?;
            let minus = log_partition(&perturb_off_diagonal(w, j, k, -h)?)?;
            pairs.push(LogPartitionPair {
                j,
                k,
                premise_deviation,
                premise_holds: premise_deviation < premise_tol,
                d_log_z: (plus - minus) / (2.0 * h),
                d_capacity: psi[(j, k)] * p[j],
            });
        }
    }
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiReport {
    pub argmin: (usize, usize),
    pub argmin_uv: (f64, f64),
    pub radius: usize,
    pub neighborhood_max_psi: f64,
    pub global_max_psi: f64,
    pub ratio: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Premise-satisfying pairs over the neighborhood.
    pub log_partition_pairs: Vec<LogPartitionPair>,
    /// Largest `|∂ log Z/∂W_jk| / |∂C/∂W_jk|` over those pairs.
    pub max_log_partition_ratio: Option<f64>,
}

fn max_psi(w: &ChannelMatrix) -> Result<f64> {
    let terms = muroga_terms(w)?;
    let psi = psi_matrix(w, &terms)?;
    Ok(crate::capacity::off_diagonal(&psi).map(f64::abs).fold(0.0, f64::max))
}

/// `max |ψ^(jk)|` around the grid argmin of `C`, relative to its global maximum.
pub fn near_argmin_psi_check(
    grid: &LandscapeGrid,
    family: &ChannelFamily,
    radius: usize,
    threshold: f64,
) -> Result<PsiReport> {
    let best = argmin_report(grid, Quantity::Capacity, 0.0)?;
    let m = &best.minimizers[0];
    let (ci, cj) = (m.i, m.j);
    let mut neighborhood_max: f64 = 0.0;
    let mut pairs = Vec::new();
    for i in ci.saturating_sub(radius)..=(ci + radius).min(grid.n_u - 1) {
        for j in cj.saturating_sub(radius)..=(cj + radius).min(grid.n_v - 1) {
            let cell = grid.cell(i, j);
            let w = family.evaluate(cell.u, cell.v)?;
            let value = max_psi(&w)
                .map_err(|e| Error::SingularNeighborhood(format!("cell ({i}, {j}) at ({}, {}): {e}", cell.u, cell.v)))?;
            neighborhood_max = neighborhood_max.max(value);
            if let Ok(found) = log_partition_check(&w, DEFAULT_PREMISE_TOL, 1e-5) {
                pairs.extend(found.into_iter().filter(|p| p.premise_holds));
            }
        }
    }
    let global_max = grid
        .cells
        .iter()
        .filter_map(|c| family.evaluate(c.u, c.v).ok())
        .filter_map(|w| max_psi(&w).ok())
        .fold(0.0, f64::max);
    let ratio = neighborhood_max / global_max;
    let max_log_partition_ratio = pairs
        .iter()
        .map(|p| (p.d_log_z / p.d_capacity).abs())
        .reduce(f64::max);
    Ok(PsiReport {
        argmin: (ci, cj),
        argmin_uv: (m.u, m.v),
        radius,
        neighborhood_max_psi: neighborhood_max,
        global_max_psi: global_max,
        ratio,
        threshold,
        pass: ratio <= threshold,
        log_partition_pairs: pairs,
        max_log_partition_ratio,
    })
}

/// Capacity at `(u, v)` for derivative probes along the family.
pub fn family_capacity(family: &ChannelFamily, u: f64, v: f64) -> Result<f64> {
    let w = family.evaluate(u, v)?;
    Ok(capacity(&w, MethodChoice::BlahutArimoto, FD_BA_TOL, DEFAULT_MAX_ITER)?.capacity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::grid::{sweep, CellRecord, SweepConfig};

    fn synthetic(n_u: usize, n_v: usize, f: impl Fn(usize, usize) -> f64) -> LandscapeGrid {
        let cells = (0..n_u * n_v)
            .map(|idx| {
                let (i, j) = (idx / n_v, idx % n_v);
                CellRecord {
                    u: i as f64 / (n_u - 1) as f64,
                    v: j as f64 / (n_v - 1) as f64,
                    capacity: f(i, j),
                    t_mix: 1.0,
                    beta_inv_mix: 1.0,
                    f_mix: f(i, j),
                    entropy: 0.5,
                    p_star: vec![0.5, 0.5],
                    degenerate: false,
                    error: None,
                }
            })
            .collect();
        LandscapeGrid { family: None, n_u, n_v, margin: 0.0, n: 2, cells }
    }

    #[test]
    fn constant_grid_ties_everywhere() {
        let grid = synthetic(4, 5, |_, _| 1.25);
        let r = argmin_report(&grid, Quantity::Capacity, 1e-12).unwrap();
        assert_eq!(r.minimizers.len(), 20);
        assert!(r.minimizers.iter().all(|m| m.diagonal_distance.is_none()));
    }

    #[test]
    fn all_failed_grid() {
        let mut grid = synthetic(2, 2, |_, _| 0.0);
        grid.cells.iter_mut().for_each(|c| c.error = Some("x".into()));
        assert!(matches!(argmin_report(&grid, Quantity::FMix, 0.0), Err(Error::AllCellsFailed)));
    }

    #[test]
    fn full_support_grid_has_no_corners() {
        let grid = synthetic(5, 5, |i, j| (i + j) as f64);
        let r = corner_basin_diagnostics(&grid, 1e-6, None).unwrap();
        assert!(r.masks.is_empty() && r.note.is_some() && r.band_cells == 0);
        assert_eq!(r.local_minima, vec![(0, 0)]);
    }

    #[test]
    fn missing_p_star() {
        let mut grid = synthetic(2, 2, |_, _| 0.0);
        grid.n = 0;
        assert!(matches!(corner_basin_diagnostics(&grid, 1e-6, None), Err(Error::MissingPStar)));
    }

    #[test]
    fn biodmc_argmins_on_small_grid() {
        let config = SweepConfig { n_u: 21, n_v: 21, ..SweepConfig::default() };
        let grid = sweep(&ChannelFamily::Biodmc, &config).unwrap();
        let r = diagonal_argmin_check(&grid, DEFAULT_TIE_TOL).unwrap();
        assert!(r.pass, "{r:#?}");
        assert_eq!(r.capacity.minimizers.len(), 21);
    }

    #[test]
    fn psi_check_fails_on_singular_argmin() {
        // Odd resolution puts a grid point exactly on W = 11ᵀ/3.
        let family = ChannelFamily::default_for(FamilyKind::Convex3);
        let config = SweepConfig { n_u: 11, n_v: 11, ..SweepConfig::default() };
        let grid = sweep(&family, &config).unwrap();
        assert!(matches!(
            near_argmin_psi_check(&grid, &family, 1, DEFAULT_NEAR_ZERO_RATIO),
            Err(Error::SingularNeighborhood(_))
        ));
    }

    #[test]
    fn psi_small_near_convex_argmin() {
        let family = ChannelFamily::default_for(FamilyKind::Convex3);
        let config = SweepConfig { n_u: 40, n_v: 40, ..SweepConfig::default() };
        let grid = sweep(&family, &config).unwrap();
        let r = near_argmin_psi_check(&grid, &family, 1, DEFAULT_NEAR_ZERO_RATIO).unwrap();
        assert!((r.argmin_uv.0 - 0.5).abs() < 0.05 && (r.argmin_uv.1 - 0.5).abs() < 0.05);
        assert!(r.pass, "{r:#?}");
    }

    #[test]
    fn good_channel_log_partition_flat() {
        let q = nalgebra::DMatrix::from_row_slice(3, 3, &[-0.9, 0.4, 0.5, 0.3, -0.5, 0.2, 0.35, 0.45, -0.8]);
        let w = crate::capacity::good_channel(&q, 0.05).unwrap();
        let pairs = log_partition_check(&w, DEFAULT_PREMISE_TOL, 1e-5).unwrap();
        let holding: Vec<_> = pairs.iter().filter(|p| p.premise_holds).collect();
        assert!(!holding.is_empty());
        for p in holding {
            assert!((p.d_log_z / p.d_capacity).abs() < DEFAULT_NEAR_ZERO_RATIO, "{p:?}");
        }
    }

    #[test]
    fn capacity_flat_in_u_where_first_symbol_unused() {
        // Lower-left corner of the constrained family: p_1 = 0.
        let family = ChannelFamily::default_for(FamilyKind::Constrained3);
        let w = family.evaluate(0.1, 0.1).unwrap();
        let p = capacity(&w, MethodChoice::BlahutArimoto, FD_BA_TOL, DEFAULT_MAX_ITER).unwrap().p_star;
        assert!(p[0] < 1e-10);
        let h = 1e-4;
        let dcdu = (family_capacity(&family, 0.1 + h, 0.1).unwrap() - family_capacity(&family, 0.1 - h, 0.1).unwrap()) / (2.0 * h);
        let dcdv = (family_capacity(&family, 0.1, 0.1 + h).unwrap() - family_capacity(&family, 0.1, 0.1 - h).unwrap()) / (2.0 * h);
        assert!(dcdu.abs() < 1e-6, "dC/du = {dcdu}");
        assert!(dcdv.abs() > 1e-3, "dC/dv = {dcdv}");
    }
}
