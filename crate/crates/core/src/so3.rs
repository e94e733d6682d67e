//! Rotation arithmetic on SO(3) and the closed-form minimizer of a linear
//! function over a single rotation.

use std::f64::consts::PI;
use std::ops::Mul;

use nalgebra::{Matrix3, Vector3, SVD};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tol;

/// A 3×3 rotation matrix (orthogonal, determinant +1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    /// Validates `m` against the default orthogonality and determinant tolerances.
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        Self::with_tolerance(m, tol::ORTHOGONALITY)
    }

    /// Validates `m` with a caller-chosen tolerance used for both checks.
    pub fn with_tolerance(m: Matrix3<f64>, tolerance: f64) -> Result<Self> {
        if !m.iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("rotation has non-finite entries"));
        }
        let ortho = orthogonality_error(&m);
        let det = (m.determinant() - 1.0).abs();
        if ortho > tolerance || det > tolerance {
            return Err(Error::invalid(format!(
                "matrix is not a rotation (‖MᵀM − I‖_F = {ortho:.3e}, |det − 1| = {det:.3e})"
            )));
        }
        Ok(Rotation(m))
    }

    /// Row-major entries, as stored in the text formats.
    pub fn from_row_slice(entries: &[f64]) -> Result<Self> {
        if entries.len() != 9 {
            return Err(Error::invalid(format!(
                "expected 9 rotation entries, got {}",
                entries.len()
            )));
        }
        Self::new(Matrix3::from_row_slice(entries))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Matrix3<f64> {
        self.0
    }

    pub fn transpose(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    /// Row-major copy of the nine entries.
    pub fn to_row_array(&self) -> [f64; 9] {
        let m = &self.0;
        [
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ]
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        ((self.0.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
    }
}

impl Mul for Rotation {
    type Output = Rotation;

    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl Mul<&Rotation> for &Rotation {
    type Output = Rotation;

    fn mul(self, rhs: &Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

/// `‖MᵀM − I‖_F`.
pub fn orthogonality_error(m: &Matrix3<f64>) -> f64 {
    (m.transpose() * m - Matrix3::identity()).norm()
}

/// Whether `m` passes both rotation checks at `tolerance`.
pub fn is_rotation(m: &Matrix3<f64>, tolerance: f64) -> bool {
    m.iter().all(|x| x.is_finite())
        && orthogonality_error(m) <= tolerance
        && (m.determinant() - 1.0).abs() <= tolerance
}

/// Unit axis and angle in `[−π, π]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisAngle {
    axis: Vector3<f64>,
    angle: f64,
}

impl AxisAngle {
    /// The axis must be unit length unless the angle is zero, in which case
    /// any finite axis describes the identity.
    pub fn new(axis: Vector3<f64>, angle: f64) -> Result<Self> {
        if !angle.is_finite() || !axis.iter().all(|x| x.is_finite()) {
            return Err(Error::invalid("axis-angle has non-finite components"));
        }
        if !(-PI..=PI).contains(&angle) {
            return Err(Error::invalid(format!("angle {angle} outside [-π, π]")));
        }
        if angle != 0.0 && (axis.norm_squared() - 1.0).abs() > tol::AXIS_NORM {
            return Err(Error::invalid(format!(
                "axis norm² is {}, expected 1",
                axis.norm_squared()
            )));
        }
        Ok(AxisAngle { axis, angle })
    }

    pub fn axis(&self) -> &Vector3<f64> {
        &self.axis
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }
}

/// Entrywise axis-angle parametrization with `δ = 1 − cos θ`, `ψ = sin θ`.
pub fn axis_angle_to_rotation(aa: &AxisAngle) -> Rotation {
    if aa.angle == 0.0 {
        return Rotation::identity();
    }
    let [u1, u2, u3] = [aa.axis.x, aa.axis.y, aa.axis.z];
    let c = aa.angle.cos();
    let delta = 1.0 - c;
    let psi = aa.angle.sin();
    #[rustfmt::skip]
    let m = Matrix3::new(
        c + delta * u1 * u1,      delta * u1 * u2 - u3 * psi, delta * u1 * u3 + u2 * psi,
        delta * u2 * u1 + u3 * psi, c + delta * u2 * u2,      delta * u2 * u3 - u1 * psi,
        delta * u3 * u1 - u2 * psi, delta * u3 * u2 + u1 * psi, c + delta * u3 * u3,
    );
    Rotation(m)
}

/// Closest rotation to `m` in Frobenius norm (the orthogonal polar factor).
///
/// Fails when the orthogonal factor is a reflection, i.e. `m` is nowhere
/// near SO(3).
pub fn nearest_rotation(m: &Matrix3<f64>) -> Result<Rotation> {
    if !m.iter().all(|x| x.is_finite()) {
        return Err(Error::numerical("matrix has non-finite entries"));
    }
    let svd = svd3(m)?;
    let q = svd.u * svd.v_t;
    if q.determinant() < 0.0 {
        return Err(Error::DegenerateInput(
            "orthogonal factor has determinant −1; no nearby rotation".into(),
        ));
    }
    Ok(Rotation(q))
}

/// `‖a − b‖²_F`.
pub fn chordal_sq(a: &Rotation, b: &Rotation) -> f64 {
    (a.0 - b.0).norm_squared()
}

/// How the angle of a random rotation is drawn.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AngleDistribution {
    /// Axis uniform on the sphere, angle `~ N(0, stddev²)`.
    Normal { stddev: f64 },
    /// Haar-uniform over SO(3).
    Uniform,
}

/// Draws a random rotation; deterministic given the state of `rng`.
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R, dist: AngleDistribution) -> Rotation {
    match dist {
        AngleDistribution::Normal { stddev } => {
            if stddev == 0.0 {
                return Rotation::identity();
            }
            let axis = random_unit_vector(rng);
            let z: f64 = rng.sample(StandardNormal);
            let angle = wrap_angle(stddev * z);
            axis_angle_to_rotation(&AxisAngle { axis, angle })
        }
        AngleDistribution::Uniform => {
            // Normalized 4D Gaussian is a uniform unit quaternion.
            let q = loop {
                let q: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
                let norm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-8 {
                    break q.map(|x| x / norm);
                }
            };
            let [w, x, y, z] = q;
            #[rustfmt::skip]
            let m = Matrix3::new(
                1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z),       2.0 * (x * z + w * y),
                2.0 * (x * y + w * z),       1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x),
                2.0 * (x * z - w * y),       2.0 * (y * z + w * x),       1.0 - 2.0 * (x * x + y * y),
            );
            Rotation(m)
        }
    }
}

fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v: Vector3<f64> = Vector3::from_fn(|_, _| rng.sample(StandardNormal));
        let norm = v.norm();
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

/// Maps an angle into `[−π, π]` without changing the rotation it describes.
fn wrap_angle(theta: f64) -> f64 {
    if (-PI..=PI).contains(&theta) {
        theta
    } else {
        (theta + PI).rem_euclid(2.0 * PI) - PI
    }
}

/// Cost matrix `A` of the problem `min tr(AX)` over `X ∈ SO(3)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearCost(Matrix3<f64>);

impl LinearCost {
    pub fn new(a: Matrix3<f64>) -> Result<Self> {
        if !a.iter().all(|x| x.is_finite()) {
            return Err(Error::numerical("cost matrix has non-finite entries"));
        }
        Ok(LinearCost(a))
    }

    pub(crate) fn from_matrix_unchecked(a: Matrix3<f64>) -> Self {
        LinearCost(a)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// `tr(A X)`.
    pub fn evaluate(&self, x: &Rotation) -> f64 {
        (self.0 * x.0).trace()
    }
}

/// SVD `A = U D̂ V̂ᵀ` after the sign fix that makes `det U · det V̂ = 1`.
///
/// When the raw factors have `det U · det V = −1`, both `D` and `V` are
/// negated (`flipped = true`), so `d_hat` is entrywise ≤ 0. Otherwise it is
/// entrywise ≥ 0.
#[derive(Clone, Copy, Debug)]
pub struct SignFixedSvd {
    pub u: Matrix3<f64>,
    pub d_hat: Vector3<f64>,
    pub v_hat: Matrix3<f64>,
    pub flipped: bool,
}

pub fn sign_fixed_svd(a: &Matrix3<f64>) -> Result<SignFixedSvd> {
    let svd = svd3(a)?;
    let v = svd.v_t.transpose();
    if svd.u.determinant() * v.determinant() > 0.0 {
        Ok(SignFixedSvd {
            u: svd.u,
            d_hat: svd.d,
            v_hat: v,
            flipped: false,
        })
    } else {
        Ok(SignFixedSvd {
            u: svd.u,
            d_hat: -svd.d,
            v_hat: -v,
            flipped: true,
        })
    }
}

struct Svd3 {
    u: Matrix3<f64>,
    d: Vector3<f64>,
    v_t: Matrix3<f64>,
}

fn svd3(a: &Matrix3<f64>) -> Result<Svd3> {
    let svd = SVD::try_new(*a, true, true, f64::EPSILON, 1000)
        .ok_or_else(|| Error::numerical("3×3 SVD did not converge"))?;
    match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => Ok(Svd3 {
            u,
            d: svd.singular_values,
            v_t,
        }),
        _ => Err(Error::numerical("3×3 SVD returned no singular vectors")),
    }
}

/// Global minimizer of `tr(AX)` over SO(3) and the attained value.
///
/// With the sign-fixed SVD `A = U D̂ V̂ᵀ`, the minimizer is `X = V̂ Σ̂ Uᵀ`
/// where `Σ̂ = I` if `D̂ ≤ 0`, and otherwise `Σ̂` is `−I` with `+1` at the
/// smallest singular value (lowest index on ties). `A = 0` yields the
/// identity.
pub fn solve_losso(cost: &LinearCost) -> Result<(Rotation, f64)> {
    let a = cost.matrix();
    if !a.iter().all(|x| x.is_finite()) {
        return Err(Error::numerical("cost matrix has non-finite entries"));
    }
    if a.iter().all(|&x| x == 0.0) {
        return Ok((Rotation::identity(), 0.0));
    }
    let svd = sign_fixed_svd(a)?;
    let sigma = if svd.flipped {
        Vector3::repeat(1.0)
    } else {
        let mut i_m = 0;
        for i in 1..3 {
            if svd.d_hat[i] < svd.d_hat[i_m] {
                i_m = i;
            }
        }
        let mut s = Vector3::repeat(-1.0);
        s[i_m] = 1.0;
        s
    };
    let x = svd.v_hat * Matrix3::from_diagonal(&sigma) * svd.u.transpose();
    let x = Rotation(x);
    Ok((x, cost.evaluate(&x)))
}

/// Brute-force minimizer of `tr(AX)` over an axis × angle grid, used as an
/// independent check on [`solve_losso`].
///
/// Axes are Fibonacci-sphere points (`resolution²` of them, plus the axes of
/// every coarser grid `resolution/2, resolution/4, … ≥ 16` so that doubling
/// the resolution refines the grid). Angles are `−π + 2πk/resolution`. The
/// grid value therefore never increases when the resolution doubles and is
/// never below the true minimum.
pub fn losso_oracle(cost: &LinearCost, resolution: usize) -> Result<(Rotation, f64)> {
    if resolution < 16 {
        return Err(Error::invalid(format!(
            "oracle resolution must be at least 16, got {resolution}"
        )));
    }
    let a = cost.matrix();
    let trace_a = a.trace();
    let angles: Vec<(f64, f64, f64)> = (0..resolution)
        .map(|k| {
            let theta = -PI + 2.0 * PI * k as f64 / resolution as f64;
            (theta, theta.cos(), theta.sin())
        })
        .collect();

    let mut best = (f64::INFINITY, Vector3::z(), 0.0);
    let mut level = resolution;
    loop {
        for u in fibonacci_sphere(level * level) {
            // tr(A (cosθ I + sinθ [u]× + (1 − cosθ) u uᵀ))
            let skew_term = (a * skew(&u)).trace();
            let outer_term = u.dot(&(a * u));
            for &(theta, c, s) in &angles {
                let value = c * trace_a + s * skew_term + (1.0 - c) * outer_term;
                if value < best.0 {
                    best = (value, u, theta);
                }
            }
        }
        if !level.is_multiple_of(2) || level / 2 < 16 {
            break;
        }
        level /= 2;
    }

    let (_, u, theta) = best;
    let x = Matrix3::identity() * theta.cos()
        + skew(&u) * theta.sin()
        + (u * u.transpose()) * (1.0 - theta.cos());
    let x = Rotation(x);
    Ok((x, cost.evaluate(&x)))
}

fn fibonacci_sphere(count: usize) -> impl Iterator<Item = Vector3<f64>> {
    let golden_angle = PI * (3.0 - 5f64.sqrt());
    (0..count).map(move |k| {
        let z = 1.0 - (2 * k + 1) as f64 / count as f64;
        let r = (1.0 - z * z).max(0.0).sqrt();
        let phi = golden_angle * k as f64;
        Vector3::new(r * phi.cos(), r * phi.sin(), z)
    })
}

pub(crate) fn skew(u: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -u.z, u.y, u.z, 0.0, -u.x, -u.y, u.x, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop, prop_assert, proptest};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rodrigues(u: &Vector3<f64>, theta: f64) -> Matrix3<f64> {
        Matrix3::identity() * theta.cos()
            + skew(u) * theta.sin()
            + u * u.transpose() * (1.0 - theta.cos())
    }

    fn random_cost(rng: &mut ChaCha8Rng) -> LinearCost {
        LinearCost::new(Matrix3::from_fn(|_, _| rng.sample(StandardNormal))).unwrap()
    }

    fn assert_rotation(m: &Matrix3<f64>) {
        assert!(orthogonality_error(m) <= tol::ORTHOGONALITY, "{m}");
        assert!((m.determinant() - 1.0).abs() <= tol::DETERMINANT, "{m}");
    }

    #[test]
    fn axis_angle_zero_angle_is_identity() {
        let aa = AxisAngle::new(Vector3::new(0.6, 0.0, 0.8), 0.0).unwrap();
        assert_eq!(*axis_angle_to_rotation(&aa).matrix(), Matrix3::identity());
    }

    #[test]
    fn axis_angle_half_turn_about_z() {
        let aa = AxisAngle::new(Vector3::z(), PI).unwrap();
        let r = axis_angle_to_rotation(&aa);
        let expected = Matrix3::from_diagonal(&Vector3::new(-1.0, -1.0, 1.0));
        assert!((r.matrix() - expected).norm() < 1e-15);
    }

    #[test]
    fn axis_angle_matches_rodrigues() {
        let u = Vector3::x();
        let aa = AxisAngle::new(u, PI / 3.0).unwrap();
        let r = axis_angle_to_rotation(&aa);
        assert!((r.matrix() - rodrigues(&u, PI / 3.0)).norm() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let u = random_unit_vector(&mut rng);
            let theta = rng.random_range(-PI..=PI);
            let r = axis_angle_to_rotation(&AxisAngle::new(u, theta).unwrap());
            assert!((r.matrix() - rodrigues(&u, theta)).norm() < 1e-14);
            assert_rotation(r.matrix());
        }
    }

    #[test]
    fn axis_angle_rejects_non_unit_axis() {
        assert!(AxisAngle::new(Vector3::new(1.0, 1.0, 0.0), 0.3).is_err());
        assert!(AxisAngle::new(Vector3::x(), 4.0).is_err());
        // Zero angle tolerates any axis.
        assert!(AxisAngle::new(Vector3::new(2.0, 0.0, 0.0), 0.0).is_ok());
    }

    #[test]
    fn nearest_rotation_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = random_rotation(&mut rng, AngleDistribution::Uniform);
        let p = nearest_rotation(r.matrix()).unwrap();
        assert!((p.matrix() - r.matrix()).norm() < 1e-14);
    }

    #[test]
    fn nearest_rotation_removes_scale() {
        let m = Matrix3::identity() * (1.0 + 1e-8);
        let p = nearest_rotation(&m).unwrap();
        assert!((p.matrix() - Matrix3::identity()).norm() < 1e-14);
    }

    #[test]
    fn nearest_rotation_agrees_with_losso() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let r = random_rotation(&mut rng, AngleDistribution::Uniform);
            let noise = Matrix3::from_fn(|_, _| 1e-6 * rng.sample::<f64, _>(StandardNormal));
            let m = r.matrix() + noise;
            let p = nearest_rotation(&m).unwrap();
            assert!((p.matrix() - r.matrix()).norm() < 1e-5);
            let (q, _) = solve_losso(&LinearCost::new(-m.transpose()).unwrap()).unwrap();
            assert!((p.matrix() - q.matrix()).norm() < 1e-12);
            assert_rotation(p.matrix());
        }
    }

    #[test]
    fn nearest_rotation_rejects_reflection() {
        let m = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(matches!(
            nearest_rotation(&m),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn random_rotation_zero_noise_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = random_rotation(&mut rng, AngleDistribution::Normal { stddev: 0.0 });
        assert_eq!(r, Rotation::identity());
    }

    #[test]
    fn random_rotation_is_deterministic() {
        for dist in [
            AngleDistribution::Uniform,
            AngleDistribution::Normal { stddev: 0.3 },
        ] {
            let a = random_rotation(&mut ChaCha8Rng::seed_from_u64(11), dist);
            let b = random_rotation(&mut ChaCha8Rng::seed_from_u64(11), dist);
            assert_eq!(a, b);
            assert_rotation(a.matrix());
        }
    }

    #[test]
    fn random_rotation_angle_is_half_normal() {
        let stddev = 0.2;
        let samples = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let angles: Vec<f64> = (0..samples)
            .map(|_| random_rotation(&mut rng, AngleDistribution::Normal { stddev }).angle())
            .collect();
        let mean = angles.iter().sum::<f64>() / samples as f64;
        let var = angles.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
        let stderr = (var / samples as f64).sqrt();
        let expected = stddev * (2.0 / PI).sqrt();
        assert!(
            (mean - expected).abs() < 3.0 * stderr,
            "mean {mean} vs {expected} (se {stderr})"
        );
    }

    #[test]
    fn chordal_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = random_rotation(&mut rng, AngleDistribution::Uniform);
        assert_eq!(chordal_sq(&r, &r), 0.0);

        let half_turn =
            Rotation::new(Matrix3::from_diagonal(&Vector3::new(-1.0, -1.0, 1.0))).unwrap();
        assert!((chordal_sq(&Rotation::identity(), &half_turn) - 8.0).abs() < 1e-15);

        for eps in [1e-3, 0.1, 1.0, 2.5] {
            let u = random_unit_vector(&mut rng);
            let r = axis_angle_to_rotation(&AxisAngle::new(u, eps).unwrap());
            let expected = 8.0 * (eps / 2.0).sin().powi(2);
            assert!((chordal_sq(&Rotation::identity(), &r) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn losso_negative_identity() {
        let (x, value) = solve_losso(&LinearCost::new(-Matrix3::identity()).unwrap()).unwrap();
        assert!((x.matrix() - Matrix3::identity()).norm() < 1e-14);
        assert!((value + 3.0).abs() < 1e-14);
    }

    #[test]
    fn losso_identity_reaches_minus_one() {
        let (x, value) = solve_losso(&LinearCost::new(Matrix3::identity()).unwrap()).unwrap();
        assert!((value + 1.0).abs() < 1e-14);
        assert_rotation(x.matrix());
    }

    #[test]
    fn losso_zero_cost_returns_identity() {
        let (x, value) = solve_losso(&LinearCost::new(Matrix3::zeros()).unwrap()).unwrap();
        assert_eq!(x, Rotation::identity());
        assert_eq!(value, 0.0);
    }

    #[test]
    fn losso_rejects_non_finite() {
        assert!(matches!(
            LinearCost::new(Matrix3::from_element(f64::NAN)),
            Err(Error::Numerical(_))
        ));
        let bad = LinearCost::from_matrix_unchecked(Matrix3::from_element(f64::INFINITY));
        assert!(matches!(solve_losso(&bad), Err(Error::Numerical(_))));
    }

    #[test]
    fn losso_rank_deficient() {
        let a = Matrix3::from_diagonal(&Vector3::new(2.0, 1.0, 0.0));
        let (x, value) = solve_losso(&LinearCost::new(a).unwrap()).unwrap();
        assert!((value + 3.0).abs() < 1e-14);
        assert_rotation(x.matrix());
    }

    #[test]
    fn losso_beats_oracle_on_random_costs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let cost = random_cost(&mut rng);
            let (_, exact) = solve_losso(&cost).unwrap();
            let (_, grid) = losso_oracle(&cost, 32).unwrap();
            assert!(exact <= grid + 1e-12, "{exact} > {grid}");
            assert!(grid - exact < 0.2, "grid slack {}", grid - exact);
        }
    }

    #[test]
    fn oracle_known_optima() {
        let (_, v) = losso_oracle(&LinearCost::new(-Matrix3::identity()).unwrap(), 16).unwrap();
        assert!((v + 3.0).abs() < 1e-12, "{v}");

        let cost = LinearCost::new(Matrix3::from_diagonal(&Vector3::new(3.0, 2.0, 1.0))).unwrap();
        let (_, exact) = solve_losso(&cost).unwrap();
        assert!((exact + 4.0).abs() < 1e-13);
        let (_, grid) = losso_oracle(&cost, 64).unwrap();
        assert!((-4.0 - 1e-12..-4.0 + 0.01).contains(&grid), "{grid}");
    }

    #[test]
    fn oracle_refinement_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let cost = random_cost(&mut rng);
            let (_, v16) = losso_oracle(&cost, 16).unwrap();
            let (_, v32) = losso_oracle(&cost, 32).unwrap();
            let (_, v64) = losso_oracle(&cost, 64).unwrap();
            assert!(v32 <= v16 && v64 <= v32);
        }
    }

    #[test]
    fn oracle_rejects_coarse_resolution() {
        let cost = LinearCost::new(Matrix3::identity()).unwrap();
        assert!(losso_oracle(&cost, 8).is_err());
    }

    #[test]
    fn oracle_error_shrinks_with_resolution() {
        // |closed form − grid| ≤ C / resolution, C = 4.
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let cost = random_cost(&mut rng);
            let (_, exact) = solve_losso(&cost).unwrap();
            for res in [16, 32, 64] {
                let (_, grid) = losso_oracle(&cost, res).unwrap();
                assert!(grid - exact >= -1e-12);
                assert!(
                    grid - exact <= 4.0 / res as f64,
                    "res {res}: {}",
                    grid - exact
                );
            }
        }
    }

    #[test]
    fn losso_optimal_against_many_rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let ys: Vec<Rotation> = (0..1000)
            .map(|_| random_rotation(&mut rng, AngleDistribution::Uniform))
            .collect();
        for _ in 0..1000 {
            let cost = random_cost(&mut rng);
            let (x, value) = solve_losso(&cost).unwrap();
            assert_rotation(x.matrix());
            for y in &ys {
                assert!(value <= cost.evaluate(y) + 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn sign_fix_reconstructs_and_has_uniform_sign(entries in prop::array::uniform9(-10.0f64..10.0)) {
            let a = Matrix3::from_row_slice(&entries);
            let svd = sign_fixed_svd(&a).unwrap();
            let reconstructed = svd.u * Matrix3::from_diagonal(&svd.d_hat) * svd.v_hat.transpose();
            prop_assert!((reconstructed - a).norm() <= 1e-12 * a.norm().max(1.0));
            prop_assert!((svd.u.determinant() * svd.v_hat.determinant() - 1.0).abs() < 1e-12);
            let all_nonneg = svd.d_hat.iter().all(|&d| d >= 0.0);
            let all_nonpos = svd.d_hat.iter().all(|&d| d <= 0.0);
            prop_assert!(all_nonneg || all_nonpos);
        }

        #[test]
        fn losso_output_is_rotation(entries in prop::array::uniform9(-1e3f64..1e3)) {
            let cost = LinearCost::new(Matrix3::from_row_slice(&entries)).unwrap();
            let (x, value) = solve_losso(&cost).unwrap();
            prop_assert!(orthogonality_error(x.matrix()) <= tol::ORTHOGONALITY);
            prop_assert!((x.matrix().determinant() - 1.0).abs() <= tol::DETERMINANT);
            prop_assert!((value - cost.evaluate(&x)).abs() == 0.0);
        }

        #[test]
        fn chordal_trace_identity(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_rotation(&mut rng, AngleDistribution::Uniform);
            let b = random_rotation(&mut rng, AngleDistribution::Uniform);
            let via_trace = 6.0 - 2.0 * (a.matrix().transpose() * b.matrix()).trace();
            prop_assert!((chordal_sq(&a, &b) - via_trace).abs() <= tol::IDENTITY);
        }
    }
}
