//! Half-plane grid, sampled fields, Lebesgue norms and the scaling map.
//!
//! Nodes sit at cell centres, `r_i = (i + 1/2) dr` and
//! `z_j = -z_max + (j + 1/2) dz`, so the axis `r = 0` is never sampled.
//! Field values are stored row-major with the radial index outermost:
//! `values[i * nz + j]`.

use std::fmt;
use std::io::{BufRead, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HalfPlaneGrid {
    pub nr: usize,
    pub nz: usize,
    pub dr: f64,
    pub dz: f64,
    pub r_max: f64,
    pub z_max: f64,
    pub r_nodes: Vec<f64>,
    pub z_nodes: Vec<f64>,
}

/// Uniform half-cell-offset grid on `]0, r_max] x [-z_max, z_max]`.
pub fn build_grid(nr: usize, nz: usize, r_max: f64, z_max: f64) -> Result<HalfPlaneGrid> {
    if nr < 4 || nz < 3 {
        return Err(Error::Config(format!("grid needs nr >= 4, nz >= 3 (got {nr} x {nz})")));
    }
    if !(r_max > 0.0 && r_max.is_finite() && z_max > 0.0 && z_max.is_finite()) {
        return Err(Error::Config(format!("truncation radii must be positive (r_max = {r_max}, z_max = {z_max})")));
    }
    let dr = r_max / nr as f64;
    let dz = 2.0 * z_max / nz as f64;
    let r_nodes = (0..nr).map(|i| (i as f64 + 0.5) * dr).collect();
    // Built from both ends so that z_j = -z_{nz-1-j} holds bit for bit.
    let z_nodes = (0..nz)
        .map(|j| {
            let k = nz - 1 - j;
            if j <= k {
                -z_max + (j as f64 + 0.5) * dz
            } else {
                z_max - (k as f64 + 0.5) * dz
            }
        })
        .collect();
    Ok(HalfPlaneGrid { nr, nz, dr, dz, r_max, z_max, r_nodes, z_nodes })
}

impl HalfPlaneGrid {
    pub fn len(&self) -> usize {
        self.nr * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.dr * self.dz
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nz + j
    }

    /// Same grid scaled by `1/lambda` (node counts kept).
    pub fn rescaled(&self, lambda: f64) -> Result<HalfPlaneGrid> {
        build_grid(self.nr, self.nz, self.r_max / lambda, self.z_max / lambda)
    }

    pub fn same_shape(&self, other: &HalfPlaneGrid) -> bool {
        self == other
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    OmegaTheta,
    UTheta,
    Eta,
    VEps,
    U,
    W,
    Generic,
}

impl Quantity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Quantity::OmegaTheta => "omega_theta",
            Quantity::UTheta => "u_theta",
            Quantity::Eta => "eta",
            Quantity::VEps => "V_eps",
            Quantity::U => "U",
            Quantity::W => "W",
            Quantity::Generic => "generic",
        }
    }

    /// Exponent `sigma` in `f -> lambda^sigma f(lambda x)` that keeps the
    /// critical norms fixed. `V_eps` depends on epsilon and has no fixed value.
    pub fn scaling_dimension(&self) -> Option<f64> {
        match self {
            Quantity::OmegaTheta => Some(2.0),
            Quantity::UTheta => Some(1.0),
            Quantity::Eta => Some(3.0),
            Quantity::U => Some(2.0),
            Quantity::W => Some(1.0 + 7.0 / 11.0),
            Quantity::VEps | Quantity::Generic => None,
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Quantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "omega_theta" => Quantity::OmegaTheta,
            "u_theta" => Quantity::UTheta,
            "eta" => Quantity::Eta,
            "V_eps" => Quantity::VEps,
            "U" => Quantity::U,
            "W" => Quantity::W,
            "generic" => Quantity::Generic,
            other => return Err(Error::Parse(format!("unknown quantity tag '{other}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: HalfPlaneGrid,
    pub values: Vec<f64>,
    pub quantity: Quantity,
}

impl ScalarField {
    pub fn zeros(grid: &HalfPlaneGrid, quantity: Quantity) -> Self {
        ScalarField { grid: grid.clone(), values: vec![0.0; grid.len()], quantity }
    }

    pub fn from_fn(grid: &HalfPlaneGrid, quantity: Quantity, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for &r in &grid.r_nodes {
            for &z in &grid.z_nodes {
                values.push(f(r, z));
            }
        }
        ScalarField { grid: grid.clone(), values, quantity }
    }

    pub fn new(grid: &HalfPlaneGrid, values: Vec<f64>, quantity: Quantity) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for a {}x{} grid", values.len(), grid.nr, grid.nz)));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return domain(format!("non-finite value at flat index {k}"));
        }
        Ok(ScalarField { grid: grid.clone(), values, quantity })
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.nz + j]
    }

    pub fn with_quantity(mut self, quantity: Quantity) -> Self {
        self.quantity = quantity;
        self
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            quantity: self.quantity,
        }
    }

    /// `a*self + b*other`, keeping the tag of `self`.
    pub fn lin_comb(&self, a: f64, other: &ScalarField, b: f64) -> Result<Self> {
        check_same(&self.grid, &other.grid)?;
        Ok(ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect(),
            quantity: self.quantity,
        })
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self> {
        self.lin_comb(1.0, other, -1.0)
    }

    pub fn mul(&self, other: &ScalarField) -> Result<Self> {
        check_same(&self.grid, &other.grid)?;
        Ok(ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(x, y)| x * y).collect(),
            quantity: Quantity::Generic,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

pub(crate) fn check_same(a: &HalfPlaneGrid, b: &HalfPlaneGrid) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "{}x{} (r_max {}, z_max {}) vs {}x{} (r_max {}, z_max {})",
            a.nr, a.nz, a.r_max, a.z_max, b.nr, b.nz, b.r_max, b.z_max
        )))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub grid: HalfPlaneGrid,
    pub ur: Vec<f64>,
    pub uz: Vec<f64>,
}

impl VelocityField {
    pub fn zeros(grid: &HalfPlaneGrid) -> Self {
        VelocityField { grid: grid.clone(), ur: vec![0.0; grid.len()], uz: vec![0.0; grid.len()] }
    }

    pub fn ur_field(&self) -> ScalarField {
        ScalarField { grid: self.grid.clone(), values: self.ur.clone(), quantity: Quantity::Generic }
    }

    pub fn uz_field(&self) -> ScalarField {
        ScalarField { grid: self.grid.clone(), values: self.uz.clone(), quantity: Quantity::Generic }
    }

    /// Pointwise modulus `|u~| = sqrt(ur^2 + uz^2)`.
    pub fn magnitude(&self) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.ur.iter().zip(&self.uz).map(|(a, b)| a.hypot(*b)).collect(),
            quantity: Quantity::Generic,
        }
    }

    /// Central-difference `d_r(r ur) + d_z(r uz)` on interior nodes; boundary
    /// rows and columns are set to zero.
    pub fn weighted_divergence(&self) -> ScalarField {
        let g = &self.grid;
        let mut out = vec![0.0; g.len()];
        for i in 1..g.nr - 1 {
            let (rm, r, rp) = (g.r_nodes[i - 1], g.r_nodes[i], g.r_nodes[i + 1]);
            for j in 1..g.nz - 1 {
                let dr_term = (rp * self.ur[g.idx(i + 1, j)] - rm * self.ur[g.idx(i - 1, j)]) / (2.0 * g.dr);
                let dz_term = r * (self.uz[g.idx(i, j + 1)] - self.uz[g.idx(i, j - 1)]) / (2.0 * g.dz);
                out[g.idx(i, j)] = dr_term + dz_term;
            }
        }
        ScalarField { grid: g.clone(), values: out, quantity: Quantity::Generic }
    }
}

fn check_p(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        domain(format!("Lebesgue exponent must satisfy p >= 1 (got {p})"))
    } else {
        Ok(())
    }
}

/// Midpoint-rule `(sum w_k |f_k|^p dA)^(1/p)` evaluated as
/// `m * (sum w_k (|f_k|/m)^p dA)^(1/p)` with `m = max |f|`, which is the
/// log-sum-exp stabilisation and stays finite for exponents in the hundreds.
fn lp_core(values: &[f64], weight: impl Fn(usize) -> f64, area: f64, p: f64) -> f64 {
    let m = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    if p.is_infinite() {
        return m;
    }
    let s: f64 = if p == 1.0 {
        values.iter().enumerate().map(|(k, v)| weight(k) * v.abs() / m).sum()
    } else if p == 2.0 {
        values
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let x = v / m;
                weight(k) * x * x
            })
            .sum()
    } else {
        values.iter().enumerate().map(|(k, v)| weight(k) * (v.abs() / m).powf(p)).sum()
    };
    m * (s * area).powf(1.0 / p)
}

/// `||f||_{L^p(Omega)}` for the planar measure `dr dz`.
pub fn lp_norm_planar(f: &ScalarField, p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(lp_core(&f.values, |_| 1.0, f.grid.cell_area(), p))
}

/// `||f||_{L^p}` for the volumetric measure `r dr dz` (no 2 pi factor).
pub fn lp_norm_volumetric(f: &ScalarField, p: f64) -> Result<f64> {
    check_p(p)?;
    let nz = f.grid.nz;
    let r = &f.grid.r_nodes;
    if p.is_infinite() {
        return Ok(f.max_abs());
    }
    Ok(lp_core(&f.values, |k| r[k / nz], f.grid.cell_area(), p))
}

/// Pointwise multiplication by `r^kappa`; the result is tagged generic.
pub fn weighted_field(f: &ScalarField, kappa: f64) -> ScalarField {
    let nz = f.grid.nz;
    let mut values = f.values.clone();
    if kappa != 0.0 {
        for (i, &r) in f.grid.r_nodes.iter().enumerate() {
            let w = r.powf(kappa);
            for v in &mut values[i * nz..(i + 1) * nz] {
                *v *= w;
            }
        }
    }
    ScalarField { grid: f.grid.clone(), values, quantity: Quantity::Generic }
}

/// Bilinear interpolation at `(r, z)`. Inside the truncation box but outside
/// the hull of the nodes the nearest edge value is used; outside the box the
/// result is `None`.
pub fn sample_bilinear(f: &ScalarField, r: f64, z: f64) -> Option<f64> {
    let g = &f.grid;
    if !(r >= 0.0 && r <= g.r_max && z >= -g.z_max && z <= g.z_max) {
        return None;
    }
    let x = (r / g.dr - 0.5).clamp(0.0, (g.nr - 1) as f64);
    let y = ((z + g.z_max) / g.dz - 0.5).clamp(0.0, (g.nz - 1) as f64);
    let i0 = (x.floor() as usize).min(g.nr - 2);
    let j0 = (y.floor() as usize).min(g.nz - 2);
    let (tx, ty) = (x - i0 as f64, y - j0 as f64);
    let v00 = f.at(i0, j0);
    let v01 = f.at(i0, j0 + 1);
    let v10 = f.at(i0 + 1, j0);
    let v11 = f.at(i0 + 1, j0 + 1);
    Some((1.0 - tx) * ((1.0 - ty) * v00 + ty * v01) + tx * ((1.0 - ty) * v10 + ty * v11))
}

#[derive(Debug, Clone)]
pub struct Rescaled {
    pub field: ScalarField,
    /// Fraction of the source `L^1(Omega)` mass lying outside the window the
    /// target grid sees.
    pub clipped_mass_fraction: f64,
}

/// `f -> lambda^sigma f(lambda .)` on the grid rescaled by `1/lambda`, with
/// `sigma` taken from the quantity tag.
pub fn rescale_data(f: &ScalarField, lambda: f64) -> Result<Rescaled> {
    let sigma = f
        .quantity
        .scaling_dimension()
        .ok_or_else(|| Error::Domain(format!("quantity {} has no fixed scaling dimension", f.quantity)))?;
    let target = f.grid.rescaled(lambda)?;
    rescale_onto(f, lambda, sigma, &target)
}

/// `f -> lambda^sigma f(lambda .)` sampled bilinearly onto an arbitrary target grid.
pub fn rescale_onto(f: &ScalarField, lambda: f64, sigma: f64, target: &HalfPlaneGrid) -> Result<Rescaled> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return domain(format!("scaling factor must be positive (got {lambda})"));
    }
    let amp = lambda.powf(sigma);
    let field = ScalarField::from_fn(target, f.quantity, |r, z| {
        sample_bilinear(f, lambda * r, lambda * z).map_or(0.0, |v| amp * v)
    });
    // Source cells whose centres fall outside the window seen by the target.
    let (rw, zw) = (lambda * target.r_max, lambda * target.z_max);
    let g = &f.grid;
    let (mut total, mut lost) = (0.0, 0.0);
    for (i, &r) in g.r_nodes.iter().enumerate() {
        for (j, &z) in g.z_nodes.iter().enumerate() {
            let m = f.at(i, j).abs();
            total += m;
            if r > rw || z.abs() > zw {
                lost += m;
            }
        }
    }
    let clipped_mass_fraction = if total > 0.0 { lost / total } else { 0.0 };
    Ok(Rescaled { field, clipped_mass_fraction })
}

/// Fraction of `L^1(Omega)` mass in the outer `band` cells along the
/// truncation boundary (`r = r_max`, `|z| = z_max`).
pub fn boundary_mass_fraction(f: &ScalarField, band: usize) -> f64 {
    let g = &f.grid;
    let (mut total, mut edge) = (0.0, 0.0);
    for i in 0..g.nr {
        for j in 0..g.nz {
            let m = f.at(i, j).abs();
            total += m;
            if i + band >= g.nr || j < band || j + band >= g.nz {
                edge += m;
            }
        }
    }
    if total > 0.0 {
        edge / total
    } else {
        0.0
    }
}

/// Writes the snapshot format: one ASCII header line
/// `nr nz dr dz r_max z_max quantity` and the values as little-endian f64.
pub fn write_snapshot(f: &ScalarField, mut w: impl Write) -> Result<()> {
    let g = &f.grid;
    writeln!(w, "{} {} {:?} {:?} {:?} {:?} {}", g.nr, g.nz, g.dr, g.dz, g.r_max, g.z_max, f.quantity)?;
    let mut buf = Vec::with_capacity(8 * f.values.len());
    for v in &f.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_snapshot(r: impl Read) -> Result<ScalarField> {
    let mut reader = std::io::BufReader::new(r);
    let mut header = String::new();
    reader.read_line(&mut header)?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 7 {
        return Err(Error::Parse(format!("snapshot header needs 7 fields, got {}", parts.len())));
    }
    let num = |k: usize| -> Result<f64> {
        parts[k].parse::<f64>().map_err(|e| Error::Parse(format!("header field {k}: {e}")))
    };
    let cnt = |k: usize| -> Result<usize> {
        parts[k].parse::<usize>().map_err(|e| Error::Parse(format!("header field {k}: {e}")))
    };
    let (nr, nz) = (cnt(0)?, cnt(1)?);
    let (dr, dz, r_max, z_max) = (num(2)?, num(3)?, num(4)?, num(5)?);
    let quantity: Quantity = parts[6].parse()?;
    let grid = build_grid(nr, nz, r_max, z_max)?;
    if grid.dr != dr || grid.dz != dz {
        return Err(Error::Parse("snapshot spacings disagree with r_max/nr, 2 z_max/nz".into()));
    }
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * grid.len() {
        return Err(Error::Parse(format!("snapshot body has {} bytes, expected {}", bytes.len(), 8 * grid.len())));
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
    ScalarField::new(&grid, values, quantity)
}

pub fn save_snapshot(f: &ScalarField, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_snapshot(f, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_snapshot(path: &Path) -> Result<ScalarField> {
    read_snapshot(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gaussian(g: &HalfPlaneGrid, r0: f64, z0: f64, w: f64) -> ScalarField {
        ScalarField::from_fn(g, Quantity::Generic, |r, z| (-((r - r0).powi(2) + (z - z0).powi(2)) / (w * w)).exp())
    }

    #[test]
    fn offset_nodes() {
        let g = build_grid(4, 4, 1.0, 1.0).unwrap();
        assert_eq!(g.r_nodes, vec![0.125, 0.375, 0.625, 0.875]);
        let g = build_grid(128, 256, 8.0, 8.0).unwrap();
        assert_eq!((g.dr, g.dz), (1.0 / 16.0, 1.0 / 16.0));
        let g = build_grid(4, 3, 1.0, 1.0).unwrap();
        assert_eq!(g.z_nodes, vec![-g.z_nodes[2], 0.0, g.z_nodes[2]]);
        assert!(build_grid(3, 8, 1.0, 1.0).is_err());
        assert!(build_grid(8, 8, 0.0, 1.0).is_err());
    }

    #[test]
    fn z_nodes_symmetric() {
        for nz in [4, 5, 7, 64, 255] {
            let g = build_grid(4, nz, 1.0, 1.3).unwrap();
            for j in 0..nz {
                assert_eq!(g.z_nodes[j], -g.z_nodes[nz - 1 - j]);
            }
            assert!(g.z_nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn bad_dimensions() {
        assert!(build_grid(3, 8, 1.0, 1.0).is_err());
        assert!(build_grid(8, 8, 0.0, 1.0).is_err());
        assert!(build_grid(8, 8, 1.0, -1.0).is_err());
    }

    #[test]
    fn indicator_and_zero() {
        let g = build_grid(8, 8, 1.0, 1.0).unwrap();
        let mut f = ScalarField::zeros(&g, Quantity::Generic);
        f.values[g.idx(3, 4)] = 1.0;
        assert!((lp_norm_planar(&f, 1.0).unwrap() - g.cell_area()).abs() < 1e-16);
        let z = ScalarField::zeros(&g, Quantity::Generic);
        for p in [1.0, 1.5, 2.0, 266.0, f64::INFINITY] {
            assert_eq!(lp_norm_planar(&z, p).unwrap(), 0.0);
            assert_eq!(lp_norm_volumetric(&z, p).unwrap(), 0.0);
        }
        assert!(lp_norm_planar(&f, 0.5).is_err());
    }

    #[test]
    fn volumetric_unit_square() {
        // constant 1 on [0,1] x [-1/2,1/2]: integral of r over [0,1] is 1/2
        let g = build_grid(64, 64, 1.0, 0.5).unwrap();
        let f = ScalarField::from_fn(&g, Quantity::Generic, |_, _| 1.0);
        assert!((lp_norm_volumetric(&f, 1.0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gaussian_l2_matches_refined() {
        let norm = |n: usize| {
            let g = build_grid(n, 2 * n, 4.0, 4.0).unwrap();
            lp_norm_planar(&gaussian(&g, 2.0, 0.3, 0.5), 2.0).unwrap()
        };
        let (coarse, fine) = (norm(32), norm(320));
        assert!((coarse - fine).abs() / fine < 1e-4);
    }

    #[test]
    fn large_exponent_no_overflow() {
        let g = build_grid(16, 16, 1.0, 1.0).unwrap();
        let f = gaussian(&g, 0.5, 0.0, 0.3).scaled(50.0);
        let n = lp_norm_volumetric(&f, 266.0).unwrap();
        assert!(n.is_finite() && n > 0.0 && n <= 50.0);
    }

    #[test]
    fn rescale_identity_and_exact_grid() {
        let g = build_grid(32, 64, 4.0, 4.0).unwrap();
        let f = gaussian(&g, 2.0, 0.0, 0.4).with_quantity(Quantity::OmegaTheta);
        let same = rescale_data(&f, 1.0).unwrap();
        assert_eq!(same.field.values, f.values);
        let half = rescale_data(&f, 0.5).unwrap();
        assert_eq!(half.field.grid.r_max, 8.0);
        assert_eq!(half.clipped_mass_fraction, 0.0);
        let n0 = lp_norm_planar(&f, 1.0).unwrap();
        let n1 = lp_norm_planar(&half.field, 1.0).unwrap();
        assert!((n0 - n1).abs() / n0 < 1e-13);
    }

    #[test]
    fn rescale_clipped_mass() {
        let g = build_grid(32, 32, 4.0, 4.0).unwrap();
        let f = ScalarField::from_fn(&g, Quantity::UTheta, |_, _| 1.0);
        let r = rescale_onto(&f, 1.0, 1.0, &build_grid(16, 32, 2.0, 4.0).unwrap()).unwrap();
        assert!((r.clipped_mass_fraction - 0.5).abs() < 1e-12);
    }

    #[test]
    fn snapshot_round_trip() {
        let g = build_grid(6, 5, 1.3, 0.7).unwrap();
        let f = ScalarField::from_fn(&g, Quantity::Eta, |r, z| {
            (r * 3.1).sin() / (1.0 + z * z) * 1e-300 + r.powf(1.0 / 3.0)
        });
        let mut buf = Vec::new();
        write_snapshot(&f, &mut buf).unwrap();
        let back = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(back, f);
        for (a, b) in back.values.iter().zip(&f.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    fn random_field(g: &HalfPlaneGrid, seed: &[f64]) -> ScalarField {
        ScalarField::from_fn(g, Quantity::Generic, |r, z| {
            seed[0] * (seed[1] * r).sin() + seed[2] * (seed[3] * z).cos() + seed[4] * r * z
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn volumetric_is_weighted_planar(seed in prop::collection::vec(-3.0f64..3.0, 5)) {
            let g = build_grid(12, 10, 2.0, 1.5).unwrap();
            let f = random_field(&g, &seed);
            for p in [1.0, 4.0 / 3.0, 2.0, 4.0] {
                let a = lp_norm_volumetric(&f, p).unwrap();
                let b = lp_norm_planar(&weighted_field(&f, 1.0 / p), p).unwrap();
                prop_assert!((a - b).abs() <= 1e-13 * a.max(1e-300));
            }
        }

        #[test]
        fn homogeneity(seed in prop::collection::vec(-3.0f64..3.0, 5)) {
            let g = build_grid(10, 10, 2.0, 1.5).unwrap();
            let f = random_field(&g, &seed);
            for c in [-2.0, 0.0, 3.0] {
                for p in [1.0, 2.0, 3.5, f64::INFINITY] {
                    let a = lp_norm_planar(&f.scaled(c), p).unwrap();
                    let b = f64::abs(c) * lp_norm_planar(&f, p).unwrap();
                    prop_assert!((a - b).abs() <= 1e-13 * b.max(1e-300));
                }
            }
        }

        #[test]
        fn cauchy_schwarz(s1 in prop::collection::vec(-3.0f64..3.0, 5), s2 in prop::collection::vec(-3.0f64..3.0, 5)) {
            let g = build_grid(10, 12, 2.0, 1.5).unwrap();
            let (f, h) = (random_field(&g, &s1), random_field(&g, &s2));
            let lhs = lp_norm_planar(&f.mul(&h).unwrap(), 1.0).unwrap();
            let rhs = lp_norm_planar(&f, 2.0).unwrap() * lp_norm_planar(&h, 2.0).unwrap();
            prop_assert!(lhs <= rhs * (1.0 + 1e-12));
        }

        #[test]
        fn weighted_inverse(kappa in -2.0f64..2.0, seed in prop::collection::vec(-3.0f64..3.0, 5)) {
            let g = build_grid(8, 8, 2.0, 1.0).unwrap();
            let f = random_field(&g, &seed);
            let back = weighted_field(&weighted_field(&f, kappa), -kappa);
            for (a, b) in back.values.iter().zip(&f.values) {
                prop_assert!((a - b).abs() <= 1e-14 * (1.0 + b.abs()));
            }
            prop_assert_eq!(weighted_field(&f, 0.0).values, f.values);
        }

        #[test]
        fn rescale_round_trip(lambda in 0.6f64..1.6) {
            // smooth field on a fixed grid, resampled there and back
            let g = build_grid(160, 192, 10.0, 6.0).unwrap();
            let f = gaussian(&g, 3.5, 0.0, 1.0);
            let there = rescale_onto(&f, lambda, 1.0, &g).unwrap().field;
            let back = rescale_onto(&there, 1.0 / lambda, 1.0, &g).unwrap().field;
            let err = lp_norm_planar(&back.sub(&f).unwrap(), 2.0).unwrap();
            prop_assert!(err <= 5e-3 * lp_norm_planar(&f, 2.0).unwrap());
        }
    }
}
