//! Transforms, spectral derivatives and discrete norms.
//!
//! All norms are periodic-box norms: `||f||_r = (dV * sum |f_j|^r)^(1/r)` with
//! `dV` the cell volume. Under the unitary transform the spectral L² norm is
//! `(dV * sum |c_k|^2)^(1/2)`, which is what [`sobolev_norm`] weights.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, Space, MAX_DIM};

pub fn forward_dft(f: &Field) -> Result<Field> {
    f.require(Space::Physical)?;
    Ok(f.to_space(Space::Spectral))
}

pub fn inverse_dft(f: &Field) -> Result<Field> {
    f.require(Space::Spectral)?;
    Ok(f.to_space(Space::Physical))
}

/// Spectral gradient; one physical-space field per axis.
pub fn gradient(f: &Field) -> Vec<Field> {
    let spectral = f.to_space(Space::Spectral);
    let grid = spectral.grid().clone();
    let mut k = [0.0; MAX_DIM];
    (0..grid.dim())
        .map(|axis| {
            let mut component = spectral.clone();
            for (flat, v) in component.values_mut().iter_mut().enumerate() {
                grid.wavevector(flat, &mut k);
                *v *= Complex64::new(0.0, k[axis]);
            }
            component.in_space(Space::Physical)
        })
        .collect()
}

/// Discrete `L^r` norm of a physical field; `r = f64::INFINITY` gives the
/// nodal maximum.
pub fn lp_norm(f: &Field, r: f64) -> Result<f64> {
    f.require(Space::Physical)?;
    if r.is_nan() || r < 1.0 {
        return Err(Error::Domain(format!("L^r norm needs r >= 1, got {r}")));
    }
    Ok(lp_norm_of(f.values(), f.grid().cell_volume(), r))
}

pub(crate) fn lp_norm_of(values: &[Complex64], cell_volume: f64, r: f64) -> f64 {
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if r.is_infinite() || peak == 0.0 {
        return peak;
    }
    // Scale by the peak so large r cannot overflow.
    let sum: f64 = values.iter().map(|v| (v.norm() / peak).powf(r)).sum();
    peak * (cell_volume * sum).powf(1.0 / r)
}

/// L² norm in whichever space the field currently lives.
pub fn l2_norm(f: &Field) -> f64 {
    let sum: f64 = f.values().iter().map(|v| v.norm_sqr()).sum();
    (f.grid().cell_volume() * sum).sqrt()
}

/// `H^s` norm `(dV * sum (1+|k|^2)^s |c_k|^2)^(1/2)`.
pub fn sobolev_norm(f: &Field, s: f64) -> Result<f64> {
    if s.is_nan() || s < 0.0 {
        return Err(Error::Domain(format!("Sobolev index must be >= 0, got {s}")));
    }
    let spectral = f.to_space(Space::Spectral);
    let grid = spectral.grid();
    let sum: f64 =
        spectral.values().iter().zip(grid.k_squared()).map(|(c, &k2)| (1.0 + k2).powf(s) * c.norm_sqr()).sum();
    Ok((grid.cell_volume() * sum).sqrt())
}

/// `||f||_r + sum_j ||d_j f||_r`.
pub fn w1r_norm(f: &Field, r: f64) -> Result<f64> {
    let physical = f.to_space(Space::Physical);
    let mut total = lp_norm(&physical, r)?;
    for component in gradient(&physical) {
        total += lp_norm(&component, r)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::grid::Grid;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn constant_transforms_to_dc_only() {
        let g = Grid::line(8.0, 16).unwrap();
        let f = Field::constant(&g, Complex64::new(1.5, -0.5));
        let hat = forward_dft(&f).unwrap();
        let dc = Complex64::new(1.5, -0.5) * 4.0; // sqrt(16)
        assert!((hat.values()[0] - dc).norm() < 1e-13);
        assert!(hat.values()[1..].iter().all(|v| v.norm() < 1e-13));
    }

    #[test]
    fn dc_coefficient_inverts_to_constant() {
        // Unitary normalisation: DC coefficient sqrt(N) * c <-> constant c.
        let g = Grid::periodic(&[8.0, 3.0], &[16, 8]).unwrap();
        let c = Complex64::new(-0.25, 2.0);
        let mut hat = Field::zeros(&g, Space::Spectral);
        hat.values_mut()[0] = c * (g.len() as f64).sqrt();
        let f = inverse_dft(&hat).unwrap();
        assert!(f.values().iter().all(|v| (v - c).norm() < 1e-14));
    }

    #[test]
    fn pure_tone_hits_mode_one() {
        let g = Grid::line(2.0 * PI, 32).unwrap();
        let f = Field::from_fn(&g, |x| Complex64::from_polar(1.0, x[0]));
        let hat = forward_dft(&f).unwrap();
        let idx = g.mode_index(&[1]).unwrap();
        for (j, v) in hat.values().iter().enumerate() {
            if j == idx {
                assert!(v.norm() > 1.0);
            } else {
                assert!(v.norm() < 1e-12, "mode {j}: {v}");
            }
        }
    }

    #[test]
    fn zero_field_roundtrips_to_zero() {
        let g = Grid::line(1.0, 8).unwrap();
        let z = inverse_dft(&Field::zeros(&g, Space::Spectral)).unwrap();
        assert!(z.values().iter().all(|v| *v == Complex64::default()));
    }

    #[test]
    fn wrong_space_is_a_usage_error() {
        let g = Grid::line(1.0, 8).unwrap();
        assert!(forward_dft(&Field::zeros(&g, Space::Spectral)).is_err());
        assert!(inverse_dft(&Field::zeros(&g, Space::Physical)).is_err());
        assert!(lp_norm(&Field::zeros(&g, Space::Spectral), 2.0).is_err());
    }

    #[test]
    fn gradient_of_eigenfunction_and_sine() {
        let g = Grid::line(2.0 * PI, 64).unwrap();
        let f = Field::from_fn(&g, |x| Complex64::from_polar(1.0, x[0]));
        let df = &gradient(&f)[0];
        for (a, b) in df.values().iter().zip(f.values()) {
            assert!((a - Complex64::i() * b).norm() < 1e-12);
        }
        let s = Field::from_fn(&g, |x| Complex64::new((2.0 * x[0]).sin(), 0.0));
        let ds = &gradient(&s)[0];
        let mut x = [0.0];
        for (j, v) in ds.values().iter().enumerate() {
            g.node(j, &mut x);
            assert!((v - Complex64::new(2.0 * (2.0 * x[0]).cos(), 0.0)).norm() < 1e-11);
        }
        let c = Field::constant(&g, Complex64::new(3.0, 1.0));
        assert!(gradient(&c)[0].max_abs() < 1e-13);
    }

    #[test]
    fn constant_norms() {
        let g = Grid::line(8.0, 16).unwrap();
        let one = Field::constant(&g, Complex64::new(1.0, 0.0));
        assert!(close(lp_norm(&one, 2.0).unwrap(), 8f64.sqrt(), 1e-14));
        assert!(close(lp_norm(&one, 4.0).unwrap(), 8f64.powf(0.25), 1e-14));
        assert!(close(lp_norm(&one, f64::INFINITY).unwrap(), 1.0, 0.0));
        assert!(lp_norm(&one, 0.5).is_err());
        for s in [0.0, 0.5, 1.0, 3.0] {
            assert!(close(sobolev_norm(&one, s).unwrap(), 8f64.sqrt(), 1e-13));
        }
        assert!(sobolev_norm(&one, -1.0).is_err());
        assert!(close(w1r_norm(&one, 3.0).unwrap(), lp_norm(&one, 3.0).unwrap(), 1e-13));
    }

    #[test]
    fn single_mode_sobolev_and_w12() {
        let g = Grid::line(2.0 * PI, 32).unwrap();
        let f = Field::from_fn(&g, |x| Complex64::from_polar(1.0, x[0]));
        let l2 = lp_norm(&f, 2.0).unwrap();
        assert!(close(sobolev_norm(&f, 1.0).unwrap(), 2f64.sqrt() * l2, 1e-12));
        assert!(close(w1r_norm(&f, 2.0).unwrap(), 2.0 * l2, 1e-12));
    }

    // Closed-form integrals: int 2 sech^2 = 4, int 2 sech^2 tanh^2 = 4/3.
    #[test]
    fn soliton_profile_norms() {
        let g = Grid::line(60.0, 1024).unwrap();
        let f = Field::from_fn(&g, |x| Complex64::new(2f64.sqrt() / x[0].cosh(), 0.0));
        assert!(close(lp_norm(&f, 2.0).unwrap(), 2.0, 1e-6));
        assert!(close(w1r_norm(&f, 2.0).unwrap(), 2.0 + (4.0f64 / 3.0).sqrt(), 1e-4));
    }
}
