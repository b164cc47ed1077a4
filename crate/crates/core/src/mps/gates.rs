//! Standard one- and two-qubit gates as row-major `DenseTensor` matrices.
//!
//! Two-qubit gates act on `|s_k s_{k+1}⟩` with `s_k` the more significant
//! bit.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use crate::error::{Error, Result};
use crate::pauli::PAULI;
use crate::tensor::{DenseTensor, C64, I, ONE, ZERO};

fn m2(v: [C64; 4]) -> DenseTensor {
    DenseTensor::new(vec![2, 2], v.to_vec()).expect("2x2")
}

pub fn identity() -> DenseTensor {
    DenseTensor::identity(2)
}

pub fn hadamard() -> DenseTensor {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    m2([h, h, h, -h])
}

pub fn s_gate() -> DenseTensor {
    m2([ONE, ZERO, ZERO, I])
}

pub fn t_gate() -> DenseTensor {
    m2([ONE, ZERO, ZERO, C64::from_polar(1.0, FRAC_PI_4)])
}

/// Control on the first (more significant) qubit.
pub fn cnot() -> DenseTensor {
    let mut g = DenseTensor::zeros(&[4, 4]);
    for (r, c) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        g.set(&[r, c], ONE);
    }
    g
}

/// Control on the second qubit.
pub fn cnot_reversed() -> DenseTensor {
    let mut g = DenseTensor::zeros(&[4, 4]);
    for (r, c) in [(0, 0), (1, 3), (2, 2), (3, 1)] {
        g.set(&[r, c], ONE);
    }
    g
}

/// `exp(−i θ/2 σ^α)`.
pub fn axis_rotation(alpha: usize, theta: f64) -> Result<DenseTensor> {
    if alpha > 3 {
        return Err(Error::Domain(format!("Pauli label {alpha}")));
    }
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let p = PAULI[alpha];
    Ok(m2(std::array::from_fn(|k| {
        let id = if k == 0 || k == 3 { ONE } else { ZERO };
        id * c - I * s * p[k]
    })))
}

/// The basis change `V_α = exp(−i (π/8) σ^α)`; `α = 0` is a global phase.
pub fn basis_rotation(alpha: usize) -> Result<DenseTensor> {
    axis_rotation(alpha, FRAC_PI_4)
}

/// `R_z(θ₁) R_y(θ₂) R_z(θ₃)`.
pub fn euler(theta1: f64, theta2: f64, theta3: f64) -> DenseTensor {
    let rz1 = axis_rotation(3, theta1).unwrap();
    let ry = axis_rotation(2, theta2).unwrap();
    let rz3 = axis_rotation(3, theta3).unwrap();
    rz1.matmul(&ry).unwrap().matmul(&rz3).unwrap()
}

/// `‖U†U − 𝟙‖_max ≤ tol`.
pub fn is_unitary(u: &DenseTensor, tol: f64) -> bool {
    if u.rank() != 2 || u.nrows() != u.ncols() || !u.is_finite() {
        return false;
    }
    let g = u.adjoint().unwrap().matmul(u).unwrap();
    g.max_abs_diff(&DenseTensor::identity(u.nrows())) <= tol
}
