//! Axisymmetric Biot-Savart law: `(u^r, u^z)` from `omega` through
//!
//! ```text
//!   G_r = -(1/pi) (z - zb) / (r^{3/2} rb^{1/2}) F'(xi^2)
//!   G_z =  (1/pi) (r - rb) / (r^{3/2} rb^{1/2}) F'(xi^2)
//!          + (1/(4 pi)) rb^{1/2} / r^{3/2} (F(xi^2) - 2 xi^2 F'(xi^2))
//!   xi^2 = ((r - rb)^2 + (z - zb)^2) / (r rb)
//! ```
//!
//! Sources are integrated with the midpoint rule. The cell holding the target is
//! split 4 x 4 (two rounds of 2 x 2); the target then sits on sub-cell corners,
//! never on a sub-cell midpoint.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::grid::{
    lp_norm_planar, lp_norm_volumetric, weighted_field, HalfPlaneGrid, Quantity, ScalarField, VelocityField,
};
use crate::parallel::map_range;
use crate::special::f_pair;
use crate::Ratio;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSample {
    pub gr: f64,
    pub gz: f64,
    pub xi2: f64,
}

fn kernel_unchecked(r: f64, dz: f64, rb: f64) -> KernelSample {
    let dr = r - rb;
    let xi2 = dr.mul_add(dr, dz * dz) / (r * rb);
    let (f, fp) = f_pair(xi2);
    let pre = 1.0 / (PI * r * r.sqrt() * rb.sqrt());
    let gr = -pre * dz * fp;
    let gz = pre * dr * fp + 0.25 / PI * rb.sqrt() / (r * r.sqrt()) * (f - 2.0 * xi2 * fp);
    KernelSample { gr, gz, xi2 }
}

/// Kernel pair at target `(r, z)` and source `(rb, zb)`.
pub fn kernel_g(r: f64, z: f64, rb: f64, zb: f64) -> Result<KernelSample> {
    if !(r > 0.0 && rb > 0.0) {
        return domain(format!("kernel needs r, rb > 0 (got r = {r}, rb = {rb})"));
    }
    if r == rb && z == zb {
        return Err(Error::SingularPoint { r, z });
    }
    Ok(kernel_unchecked(r, z - zb, rb))
}

/// Self-cell weights `(sum G_r, sum G_z) dA/16` over the 4 x 4 sub-cell midpoints.
fn self_cell(r: f64, dr: f64, dz: f64) -> (f64, f64) {
    let (mut gr, mut gz) = (0.0, 0.0);
    for a in 0..4 {
        for b in 0..4 {
            let rb = r + (a as f64 - 1.5) * 0.25 * dr;
            let ddz = -(b as f64 - 1.5) * 0.25 * dz;
            let k = kernel_unchecked(r, ddz, rb);
            gr += k.gr;
            gz += k.gz;
        }
    }
    let w = dr * dz / 16.0;
    (gr * w, gz * w)
}

/// Kernel row for target radius `r_i` and source radius `rb_k`, indexed by the
/// offset `m = j - jb + nz - 1`, already multiplied by the cell area.
fn kernel_row(g: &HalfPlaneGrid, i: usize, k: usize) -> (Vec<f64>, Vec<f64>) {
    let n = 2 * g.nz - 1;
    let (r, rb) = (g.r_nodes[i], g.r_nodes[k]);
    let area = g.cell_area();
    let mut gr = vec![0.0; n];
    let mut gz = vec![0.0; n];
    for (m, (a, b)) in gr.iter_mut().zip(gz.iter_mut()).enumerate() {
        let off = m as isize - (g.nz as isize - 1);
        if off == 0 && i == k {
            let (sr, sz) = self_cell(r, g.dr, g.dz);
            *a = sr;
            *b = sz;
        } else {
            let ks = kernel_unchecked(r, off as f64 * g.dz, rb);
            *a = ks.gr * area;
            *b = ks.gz * area;
        }
    }
    (gr, gz)
}

/// Accumulates `u(i, j) += sum_jb T(j - jb) w(jb)` for one source row.
fn convolve_row(tr: &[f64], tz: &[f64], w: &[f64], nz: usize, ur: &mut [f64], uz: &mut [f64]) {
    for (jb, &wv) in w.iter().enumerate() {
        if wv == 0.0 {
            continue;
        }
        let base = nz - 1 - jb;
        let (sr, sz) = (&tr[base..base + nz], &tz[base..base + nz]);
        for j in 0..nz {
            ur[j] += sr[j] * wv;
            uz[j] += sz[j] * wv;
        }
    }
}

/// Entries above which the kernel table is not stored and rows are rebuilt
/// on the fly.
const TABLE_LIMIT: usize = 1 << 22;

/// Velocity reconstruction on a fixed grid. The kernel depends on `z - zb`
/// only, so it is tabulated per radial pair and offset and applied as a
/// convolution in `z`.
#[derive(Debug, Clone)]
pub struct BiotSavart {
    pub grid: HalfPlaneGrid,
    table: Option<(Vec<f64>, Vec<f64>)>,
}

impl BiotSavart {
    pub fn new(grid: &HalfPlaneGrid) -> BiotSavart {
        let n = 2 * grid.nz - 1;
        let table = (grid.nr * grid.nr * n <= TABLE_LIMIT).then(|| {
            let rows = map_range(grid.nr * grid.nr, |p| kernel_row(grid, p / grid.nr, p % grid.nr));
            let mut tr = Vec::with_capacity(grid.nr * grid.nr * n);
            let mut tz = Vec::with_capacity(grid.nr * grid.nr * n);
            for (a, b) in rows {
                tr.extend(a);
                tz.extend(b);
            }
            (tr, tz)
        });
        BiotSavart { grid: grid.clone(), table }
    }

    /// Same operator without the stored table; rows are rebuilt per call.
    pub fn streaming(grid: &HalfPlaneGrid) -> BiotSavart {
        BiotSavart { grid: grid.clone(), table: None }
    }

    pub fn is_tabulated(&self) -> bool {
        self.table.is_some()
    }

    pub fn velocity(&self, omega: &ScalarField) -> Result<VelocityField> {
        let g = &self.grid;
        if &omega.grid != g {
            return Err(Error::GridMismatch("vorticity is not on the Biot-Savart grid".into()));
        }
        let (nr, nz) = (g.nr, g.nz);
        let n = 2 * nz - 1;
        let live: Vec<usize> =
            (0..nr).filter(|&k| omega.values[k * nz..(k + 1) * nz].iter().any(|&v| v != 0.0)).collect();
        let rows = map_range(nr, |i| {
            let mut ur = vec![0.0; nz];
            let mut uz = vec![0.0; nz];
            for &k in &live {
                let w = &omega.values[k * nz..(k + 1) * nz];
                match &self.table {
                    Some((tr, tz)) => {
                        let o = (i * nr + k) * n;
                        convolve_row(&tr[o..o + n], &tz[o..o + n], w, nz, &mut ur, &mut uz);
                    }
                    None => {
                        let (tr, tz) = kernel_row(g, i, k);
                        convolve_row(&tr, &tz, w, nz, &mut ur, &mut uz);
                    }
                }
            }
            (ur, uz)
        });
        let mut out = VelocityField::zeros(g);
        for (i, (a, b)) in rows.into_iter().enumerate() {
            out.ur[i * nz..(i + 1) * nz].copy_from_slice(&a);
            out.uz[i * nz..(i + 1) * nz].copy_from_slice(&b);
        }
        Ok(out)
    }
}

/// Dense reference: every target against every source cell through
/// [`kernel_g`], with the self cell subdivided.
pub fn reconstruct_velocity_dense(omega: &ScalarField) -> VelocityField {
    let g = &omega.grid;
    let area = g.cell_area();
    let vals = map_range(g.len(), |t| {
        let (i, j) = (t / g.nz, t % g.nz);
        let (r, z) = (g.r_nodes[i], g.z_nodes[j]);
        let (mut ur, mut uz) = (0.0, 0.0);
        for (k, &rb) in g.r_nodes.iter().enumerate() {
            for (l, &zb) in g.z_nodes.iter().enumerate() {
                let w = omega.values[k * g.nz + l];
                if w == 0.0 {
                    continue;
                }
                let (a, b) = if k == i && l == j {
                    self_cell(r, g.dr, g.dz)
                } else {
                    let ks = kernel_g(r, z, rb, zb).expect("distinct nodes");
                    (ks.gr * area, ks.gz * area)
                };
                ur += a * w;
                uz += b * w;
            }
        }
        (ur, uz)
    });
    let mut out = VelocityField::zeros(g);
    for (n, (a, b)) in vals.into_iter().enumerate() {
        out.ur[n] = a;
        out.uz[n] = b;
    }
    out
}

pub fn reconstruct_velocity(omega: &ScalarField) -> Result<VelocityField> {
    if omega.quantity != Quantity::OmegaTheta && omega.quantity != Quantity::Generic {
        return domain(format!("expected an omega_theta field, got {}", omega.quantity));
    }
    BiotSavart::new(&omega.grid).velocity(omega)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UrOverRAudit {
    pub p: f64,
    pub q: f64,
    pub lambda: f64,
    pub lhs: f64,
    pub rhs_product: f64,
    pub ratio: Ratio,
}

/// `lambda = (p - 1)/2 + 3p/(2q)` in the `u^r/r` bound.
pub fn ur_over_r_lambda(p: f64, q: f64) -> Result<f64> {
    if !(p > 1.0 && p < 3.0) {
        return domain(format!("p must lie in ]1, 3[ (got {p})"));
    }
    let q_lo = 3.0 * p / (3.0 - p);
    if !(q > q_lo) {
        return domain(format!("q must exceed 3p/(3-p) = {q_lo} (got {q})"));
    }
    Ok(0.5 * (p - 1.0) + 1.5 * p / q)
}

/// `||u^r/r||_{L^q}` against `||eta||_{L^p}^lambda ||eta||_{L^{3p}}^{1-lambda}`,
/// all volumetric, with `eta = omega/r`.
pub fn ur_over_r_audit(omega: &ScalarField, u: &VelocityField, p: f64, q: f64) -> Result<UrOverRAudit> {
    let lambda = ur_over_r_lambda(p, q)?;
    let ur_r = weighted_field(&u.ur_field(), -1.0);
    let eta = weighted_field(omega, -1.0);
    let lhs = lp_norm_volumetric(&ur_r, q)?;
    let rhs = lp_norm_volumetric(&eta, p)?.powf(lambda) * lp_norm_volumetric(&eta, 3.0 * p)?.powf(1.0 - lambda);
    Ok(UrOverRAudit { p, q, lambda, lhs, rhs_product: rhs, ratio: Ratio::of(lhs, rhs) })
}

/// `||u~||_{L^q(Omega)} / ||omega||_{L^p(Omega)}`.
pub fn velocity_ratio(omega: &ScalarField, u: &VelocityField, p: f64, q: f64) -> Result<Ratio> {
    let num = lp_norm_planar(&u.magnitude(), q)?;
    let den = lp_norm_planar(omega, p)?;
    Ok(Ratio::of(num, den))
}
