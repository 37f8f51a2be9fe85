//! Linearized closed-loop dynamics around synchronized operating points.
//!
//! Islanded: `A = −(m/n)·L` with `L` the complete-graph Laplacian, spectrum
//! `{0, −m, …, −m}`. Grid-connected: `B = −m·(a on the diagonal, b elsewhere)`,
//! spectrum `{−m(a + (n−1)b), −m(a − b), …}` with `a − b = 1`.

use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigenvalues, Matrix};
use crate::scalar::Scalar;

/// Threshold on `denom` below which the grid linearization is degenerate.
pub const DEGENERATE_DENOM: f64 = 1e-12;
/// `|λ₁| ≤ MARGINAL_BAND · m` is reported as marginal.
pub const MARGINAL_BAND: f64 = 1e-12;
/// Required agreement between analytic and numeric spectra, relative to the
/// matrix scale.
pub const EIGEN_AGREEMENT: f64 = 1e-9;
const JACOBI_TOL: f64 = 1e-14;
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stability {
    Stable,
    Marginal,
    Unstable,
}

impl Stability {
    pub fn as_str(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Marginal => "marginal",
            Stability::Unstable => "unstable",
        }
    }

    fn classify<T: Scalar>(lambda: T, band: T) -> Self {
        if lambda.abs() <= band {
            Stability::Marginal
        } else if lambda < T::zero() {
            Stability::Stable
        } else {
            Stability::Unstable
        }
    }
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A linearized system matrix with its closed-form and numerically computed
/// spectra (both ascending).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel<T> {
    pub matrix: Matrix<T>,
    pub analytic_eigs: Vec<T>,
    pub numeric_eigs: Vec<T>,
    pub stable: Stability,
}

impl<T: Scalar> LinearModel<T> {
    fn new(matrix: Matrix<T>, mut analytic_eigs: Vec<T>, stable: Stability) -> Result<Self> {
        analytic_eigs.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        let numeric_eigs = numeric_eigenvalues(&matrix)?;
        let gap = max_gap(&analytic_eigs, &numeric_eigs);
        if gap > eigen_tolerance(&matrix) {
            return Err(Error::EigenMismatch {
                gap: gap.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self {
            matrix,
            analytic_eigs,
            numeric_eigs,
            stable,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

fn max_gap<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc.max((*x - *y).abs()))
}

fn eigen_tolerance<T: Scalar>(matrix: &Matrix<T>) -> T {
    let floor = T::lit(EIGEN_AGREEMENT).max(T::epsilon() * T::lit(1e3) * T::count(matrix.dim()));
    floor * matrix.max_abs().max(T::one())
}

/// Closed-form coefficients of the grid-mode linearization
/// `Δφ_i = a·Δδ_i + b·Σ_{j≠i} Δδ_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridLinearization<T> {
    pub a: T,
    pub b: T,
    /// `n²V*² + V_g² − 2nV*V_g cos(δ_s − δ_g)`.
    pub denom: T,
}

fn check_dims<T: Scalar>(n: usize, m: T) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    if !m.is_finite() || m <= T::zero() {
        return Err(Error::invalid("droop_gain", "must be finite and > 0"));
    }
    Ok(())
}

/// Islanded Jacobian `−(m/n)·L`; marginal because of the rotation mode.
pub fn islanded_jacobian<T: Scalar>(n: usize, m: T) -> Result<LinearModel<T>> {
    check_dims(n, m)?;
    let nf = T::count(n);
    let laplacian = Matrix::from_fn(n, |i, j| if i == j { nf - T::one() } else { -T::one() });
    let matrix = laplacian.scaled(-m / nf);
    let mut eigs = vec![-m; n];
    eigs[n - 1] = T::zero();
    LinearModel::new(matrix, eigs, Stability::Marginal)
}

fn check_voltages<T: Scalar>(n: usize, v_star: T, v_g: T, angle_diff: T) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    if !v_star.is_finite() || v_star <= T::zero() {
        return Err(Error::invalid("v_star", "must be finite and > 0"));
    }
    if !v_g.is_finite() || v_g < T::zero() {
        return Err(Error::invalid("v_grid", "must be finite and >= 0"));
    }
    if !angle_diff.is_finite() {
        return Err(Error::invalid("angle_diff", "must be finite"));
    }
    Ok(())
}

fn grid_denominator<T: Scalar>(n: usize, v_star: T, v_g: T, cos: T) -> T {
    let nv = T::count(n) * v_star;
    nv * nv + v_g * v_g - T::lit(2.0) * nv * v_g * cos
}

/// Grid-mode linearization coefficients at `angle_diff = δ_s − δ_g`.
pub fn grid_ab<T: Scalar>(
    n: usize,
    v_star: T,
    v_g: T,
    angle_diff: T,
) -> Result<GridLinearization<T>> {
    check_voltages(n, v_star, v_g, angle_diff)?;
    let nf = T::count(n);
    let cos = angle_diff.cos();
    let denom = grid_denominator(n, v_star, v_g, cos);
    if denom <= T::lit(DEGENERATE_DENOM) {
        return Err(Error::DegeneratePoint {
            denom: denom.to_f64().unwrap_or(0.0),
        });
    }
    let vv = v_star * v_star;
    let cross = v_star * v_g * cos;
    let a = ((nf * nf - nf) * vv + v_g * v_g + (T::one() - T::lit(2.0) * nf) * cross) / denom;
    let b = (cross - nf * vv) / denom;
    Ok(GridLinearization { a, b, denom })
}

/// Grid-mode Jacobian `B = −m·(a·I + b·(J − I))`.
pub fn grid_jacobian<T: Scalar>(
    lin: &GridLinearization<T>,
    n: usize,
    m: T,
) -> Result<LinearModel<T>> {
    check_dims(n, m)?;
    let matrix = Matrix::from_fn(n, |i, j| if i == j { -m * lin.a } else { -m * lin.b });
    let common = -m * (lin.a + T::count(n - 1) * lin.b);
    let mut eigs = vec![-m * (lin.a - lin.b); n];
    eigs[0] = common;
    let verdict = Stability::classify(common, T::lit(MARGINAL_BAND) * m);
    LinearModel::new(matrix, eigs, verdict)
}

/// Sign test of `V_g − n·V*·cos(angle_diff)`.
///
/// Uses the same normalized quantity as the common-mode eigenvalue
/// (`−λ₁/m = V_g(V_g − nV*cos)/denom`) so the verdict always matches
/// [`grid_jacobian`]. At the degenerate point `nV*∠δ_s = V_g∠δ_g` the
/// condition sits exactly on its boundary and is reported as marginal.
pub fn stability_condition<T: Scalar>(
    n: usize,
    v_star: T,
    v_g: T,
    angle_diff: T,
) -> Result<Stability> {
    check_voltages(n, v_star, v_g, angle_diff)?;
    let cos = angle_diff.cos();
    let denom = grid_denominator(n, v_star, v_g, cos);
    if denom <= T::lit(DEGENERATE_DENOM) {
        return Ok(Stability::Marginal);
    }
    let margin = v_g - T::count(n) * v_star * cos;
    let rate = v_g * margin / denom;
    Ok(Stability::classify(-rate, T::lit(MARGINAL_BAND)))
}

/// All eigenvalues of a symmetric matrix, ascending (Jacobi rotations).
pub fn numeric_eigenvalues<T: Scalar>(matrix: &Matrix<T>) -> Result<Vec<T>> {
    let scale = matrix.max_abs().max(T::one());
    matrix.check_symmetric(T::lit(SYMMETRY_TOL) * scale)?;
    Ok(jacobi_eigenvalues(
        matrix,
        T::lit(JACOBI_TOL).max(T::epsilon()),
    ))
}

/// Closed-form spectrum of the matrix with `diag` on the diagonal and `off`
/// elsewhere: `{diag + (n−1)·off, diag − off (n−1 times)}`, ascending.
pub fn structured_eigenvalues<T: Scalar>(n: usize, diag: T, off: T) -> Vec<T> {
    let mut eigs = vec![diag - off; n];
    if n > 0 {
        eigs[0] = diag + T::count(n - 1) * off;
    }
    eigs.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    eigs
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    #[test]
    fn islanded_reference_plant_spectrum() {
        let lm = islanded_jacobian(4, 0.5_f64).unwrap();
        assert_eq!(lm.analytic_eigs, vec![-0.5, -0.5, -0.5, 0.0]);
        for (a, b) in lm.analytic_eigs.iter().zip(&lm.numeric_eigs) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(lm.stable, Stability::Marginal);
    }

    #[test]
    fn single_module_is_zero() {
        let lm = islanded_jacobian(1, 3.0_f64).unwrap();
        assert_eq!(lm.matrix.get(0, 0), 0.0);
        assert_eq!(lm.numeric_eigs, vec![0.0]);
    }

    #[test]
    fn six_modules_match_numeric() {
        let lm = islanded_jacobian(6, 1.3_f64).unwrap();
        for (a, b) in lm.analytic_eigs.iter().zip(&lm.numeric_eigs) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn laplacian_of_three() {
        let l = Matrix::from_fn(3, |i, j| if i == j { 2.0_f64 } else { -1.0 });
        let e = numeric_eigenvalues(&l).unwrap();
        // det(L - λI) = -λ(λ - 3)²
        assert!(e[0].abs() < 1e-14 && (e[1] - 3.0).abs() < 1e-14 && (e[2] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn asymmetric_rejected() {
        let m = Matrix::from_rows(&[vec![0.0_f64, 1.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(
            numeric_eigenvalues(&m),
            Err(Error::Asymmetric { .. })
        ));
    }

    #[test]
    fn grid_ab_hand_value() {
        // (0 + 1 - 1·0.5) / (1 + 1 - 2·0.5)
        let lin = grid_ab(1, 1.0_f64, 1.0, FRAC_PI_3).unwrap();
        assert!((lin.denom - 1.0).abs() < 1e-15);
        assert!((lin.a - 0.5).abs() < 1e-15);
        assert!((lin.a - lin.b - 1.0).abs() < 1e-15);
    }

    #[test]
    fn grid_ab_without_grid_recovers_islanded() {
        let n = 5;
        let lin = grid_ab(n, 78.75_f64, 0.0, 0.3).unwrap();
        assert!((lin.a - 4.0 / 5.0).abs() < 1e-15);
        assert!((lin.b + 1.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_point() {
        assert!(matches!(
            grid_ab(4, 78.75, 315.0, 0.0),
            Err(Error::DegeneratePoint { .. })
        ));
        assert_eq!(
            stability_condition(4, 78.75, 315.0, 0.0).unwrap(),
            Stability::Marginal
        );
    }

    #[test]
    fn reference_plant_quadrature_is_stable() {
        assert_eq!(
            stability_condition(4, 78.75, 315.0, FRAC_PI_2).unwrap(),
            Stability::Stable
        );
        let lin = grid_ab(4, 78.75, 315.0, FRAC_PI_2).unwrap();
        let lm = grid_jacobian(&lin, 4, 0.5).unwrap();
        assert_eq!(lm.stable, Stability::Stable);
        assert!(lm.analytic_eigs[0] < 0.0);
    }

    #[test]
    fn oversized_string_is_unstable_in_phase() {
        assert_eq!(
            stability_condition(4, 100.0, 315.0, 0.0).unwrap(),
            Stability::Unstable
        );
        let lin = grid_ab(4, 100.0, 315.0, 0.0).unwrap();
        let lm = grid_jacobian(&lin, 4, 0.5).unwrap();
        assert_eq!(lm.stable, Stability::Unstable);
    }

    #[test]
    fn boundary_off_the_degenerate_point_is_marginal() {
        // nV* = 400 > V_g, cos chosen so that V_g = nV* cos
        let angle = (315.0_f64 / 400.0).acos();
        let lin = grid_ab(4, 100.0, 315.0, angle).unwrap();
        let lm = grid_jacobian(&lin, 4, 0.5).unwrap();
        assert_eq!(lm.stable, Stability::Marginal);
        assert_eq!(
            stability_condition(4, 100.0, 315.0, angle).unwrap(),
            Stability::Marginal
        );
    }

    #[test]
    fn differential_modes_equal_minus_m() {
        let lin = grid_ab(6, 60.0_f64, 315.0, 1.0).unwrap();
        let lm = grid_jacobian(&lin, 6, 0.7).unwrap();
        let common = lm
            .analytic_eigs
            .iter()
            .filter(|&&e| (e + 0.7).abs() < 1e-12)
            .count();
        assert_eq!(common, 5);
    }

    #[test]
    fn structured_closed_form() {
        assert_eq!(structured_eigenvalues(3, 2.0, -1.0), vec![0.0, 3.0, 3.0]);
    }

    #[test]
    fn single_precision_jacobian() {
        let lm = islanded_jacobian(4, 0.5_f32).unwrap();
        assert_eq!(lm.stable, Stability::Marginal);
    }
}
