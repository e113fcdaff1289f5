//! 3x3 symmetric helpers for the normal-equation solve.

pub(crate) type Mat3 = [[f64; 3]; 3];

pub(crate) fn gram<'a>(dirs: impl Iterator<Item = &'a [f64; 3]>) -> Mat3 {
    let mut g = [[0.0; 3]; 3];
    for d in dirs {
        for r in 0..3 {
            for c in 0..3 {
                g[r][c] += d[r] * d[c];
            }
        }
    }
    g
}

pub(crate) fn det(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Inverse via the adjugate; `None` when singular.
pub(crate) fn inverse(m: &Mat3) -> Option<Mat3> {
    let d = det(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
            let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
            inv[r][c] = (m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]) / d;
        }
    }
    Some(inv)
}

fn norm1(m: &Mat3) -> f64 {
    (0..3)
        .map(|c| (0..3).map(|r| m[r][c].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `||M||_1 * ||M^-1||_1`; infinite for singular matrices.
pub(crate) fn condition_1norm(m: &Mat3) -> f64 {
    match inverse(m) {
        Some(inv) => norm1(m) * norm1(&inv),
        None => f64::INFINITY,
    }
}

pub(crate) fn mul_vec(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let m = [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]];
        let inv = inverse(&m).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                let v: f64 = (0..3).map(|k| m[r][k] * inv[k][c]).sum();
                assert!((v - if r == c { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert_eq!(condition_1norm(&id), 1.0);
        assert!(condition_1norm(&[[1.0; 3]; 3]).is_infinite());
    }
}
