use nalgebra::{DMatrix, DVector};

use super::NetworkCase;

/// Adjacency and path matrices of the line graph.
///
/// `g[(k, l)] == 1` iff line `k` feeds line `l` directly; `h = (I - G)⁻¹`
/// has `h[(l, m)] == 1` iff line `m` is line `l` or lies below it.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphMatrices {
    pub g: DMatrix<i64>,
    pub h: DMatrix<i64>,
    pub e: DVector<f64>,
}

impl GraphMatrices {
    pub fn g_f64(&self) -> DMatrix<f64> {
        self.g.map(|v| v as f64)
    }

    pub fn h_f64(&self) -> DMatrix<f64> {
        self.h.map(|v| v as f64)
    }
}

pub fn graph_matrices(case: &NetworkCase) -> GraphMatrices {
    let n = case.n_lines();
    let mut g = DMatrix::<i64>::zeros(n, n);
    for l in 0..n {
        if let Some(k) = case.up_line(l) {
            g[(k, l)] = 1;
        }
    }
    // G is nilpotent on a tree, so the Neumann series terminates.
    let mut h = DMatrix::<i64>::identity(n, n);
    let mut power = g.clone();
    for _ in 0..n {
        if power.iter().all(|&v| v == 0) {
            break;
        }
        h += &power;
        power = &power * &g;
    }
    GraphMatrices {
        g,
        h,
        e: DVector::from_element(n, 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::bundled_case;

    #[test]
    fn path_matrix_inverts_i_minus_g() {
        for name in ["case5-arbitrage", "case34like"] {
            let case = bundled_case(name).unwrap();
            let gm = graph_matrices(&case);
            let n = case.n_lines();
            let id = DMatrix::<i64>::identity(n, n);
            assert_eq!(&gm.h * (&id - &gm.g), id, "{name}");
            assert!(gm.g.pow(n as u32).iter().all(|&v| v == 0), "{name}");
        }
    }

    #[test]
    fn branched_example() {
        // 0 - 1 - 2 - 3, 1 - 4
        let case = bundled_case("case5-arbitrage").unwrap();
        let gm = graph_matrices(&case);
        let expected = DMatrix::from_row_slice(4, 4, &[1, 1, 1, 1, 0, 1, 1, 0, 0, 0, 1, 0, 0, 0, 0, 1]);
        assert_eq!(gm.h, expected);
    }
}
