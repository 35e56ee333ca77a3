//! The 24-element single-qubit Clifford group with exact composition and
//! inversion lookup tables. Matrices are generated once by closing
//! {H, S} under multiplication modulo global phase; long sequences are
//! then composed by table lookup, so the inversion step carries no
//! accumulated floating-point drift.

use num_complex::Complex64;
use std::sync::OnceLock;

pub const GROUP_SIZE: usize = 24;

pub type Mat2 = [[Complex64; 2]; 2];

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[Complex64::ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn mat_vec(a: &Mat2, v: &[Complex64; 2]) -> [Complex64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

pub fn dagger(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

/// rho -> U rho U^dagger
pub fn conjugate(u: &Mat2, rho: &Mat2) -> Mat2 {
    mat_mul(u, &mat_mul(rho, &dagger(u)))
}

fn identity() -> Mat2 {
    [[Complex64::ONE, Complex64::ZERO], [Complex64::ZERO, Complex64::ONE]]
}

fn hadamard() -> Mat2 {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

fn phase_s() -> Mat2 {
    [[Complex64::ONE, Complex64::ZERO], [Complex64::ZERO, Complex64::I]]
}

/// Equality up to a global phase: a b^dagger proportional to identity.
fn eq_up_to_phase(a: &Mat2, b: &Mat2) -> bool {
    let p = mat_mul(a, &dagger(b));
    let off = p[0][1].norm() + p[1][0].norm();
    if off > 1e-9 {
        return false;
    }
    (p[0][0] - p[1][1]).norm() < 1e-9 && (p[0][0].norm() - 1.0).abs() < 1e-9
}

pub struct CliffordGroup {
    pub matrices: Vec<Mat2>,
    /// mult[a][b] = index of U_a U_b (up to phase)
    pub mult: Vec<[u8; GROUP_SIZE]>,
    /// inv[a] = index of U_a^dagger (up to phase)
    pub inv: [u8; GROUP_SIZE],
}

impl CliffordGroup {
    fn build() -> Self {
        let gens = [hadamard(), phase_s()];
        let mut matrices: Vec<Mat2> = vec![identity()];
        let mut frontier = vec![0usize];
        while let Some(i) = frontier.pop() {
            for g in &gens {
                let m = mat_mul(g, &matrices[i]);
                if !matrices.iter().any(|x| eq_up_to_phase(x, &m)) {
                    matrices.push(m);
                    frontier.push(matrices.len() - 1);
                }
            }
        }
        assert_eq!(matrices.len(), GROUP_SIZE, "H,S closure must have 24 elements");

        let find = |m: &Mat2| -> u8 {
            matrices
                .iter()
                .position(|x| eq_up_to_phase(x, m))
                .expect("product stays in the group") as u8
        };
        let mut mult = vec![[0u8; GROUP_SIZE]; GROUP_SIZE];
        for a in 0..GROUP_SIZE {
            for b in 0..GROUP_SIZE {
                mult[a][b] = find(&mat_mul(&matrices[a], &matrices[b]));
            }
        }
        let mut inv = [0u8; GROUP_SIZE];
        for (a, entry) in inv.iter_mut().enumerate() {
            *entry = find(&dagger(&matrices[a]));
        }
        CliffordGroup { matrices, mult, inv }
    }

    pub fn get() -> &'static CliffordGroup {
        static GROUP: OnceLock<CliffordGroup> = OnceLock::new();
        GROUP.get_or_init(CliffordGroup::build)
    }

    pub fn compose(&self, a: u8, b: u8) -> u8 {
        self.mult[a as usize][b as usize]
    }

    pub fn inverse(&self, a: u8) -> u8 {
        self.inv[a as usize]
    }

    pub fn matrix(&self, a: u8) -> &Mat2 {
        &self.matrices[a as usize]
    }
}
