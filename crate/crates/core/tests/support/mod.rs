//! Shared helpers for the integration tests: a generator of random feasible
//! SDPs and a slow log-barrier reference solver that shares no code with the
//! library's interior-point method.

#![allow(dead_code)]

use ccmpc::sdp::{AffineExpr, PsdBlock, SdpProblem};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_sym(rng: &mut ChaCha8Rng, n: usize, density: f64) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            if rng.random::<f64>() < density {
                let v = rng.random_range(-1.0..1.0);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
    }
    a
}

fn random_pd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let r = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &r * r.transpose() / n as f64 + DMatrix::identity(n, n) * 0.3
}

/// Random `min c.x` over `F_j(x) >= 0` with at most 30 variables and block
/// sides at most 8. `x = 0` is strictly feasible and `c` is built from a
/// strictly feasible dual point, so an optimum exists.
pub fn random_sdp(rng: &mut ChaCha8Rng) -> SdpProblem {
    loop {
        let n = rng.random_range(2..=30);
        let nblocks = rng.random_range(1..=3);
        let sides: Vec<usize> = (0..nblocks).map(|_| rng.random_range(2..=8)).collect();
        let capacity: usize = sides.iter().map(|s| s * (s + 1) / 2).sum();
        if capacity < n + 2 {
            continue;
        }
        let mut p = SdpProblem::new(n);
        let mut c = vec![0.0; n];
        let density = rng.random_range(0.3..1.0);
        for (bi, &side) in sides.iter().enumerate() {
            let c0 = random_pd(rng, side);
            let z = random_pd(rng, side);
            let a: Vec<DMatrix<f64>> = (0..n).map(|_| random_sym(rng, side, density)).collect();
            let mut block = PsdBlock::new(format!("b{bi}"), side);
            for i in 0..side {
                for j in i..side {
                    let terms = (0..n)
                        .filter(|&k| a[k][(i, j)] != 0.0)
                        .map(|k| (k, a[k][(i, j)]));
                    block.set(i, j, AffineExpr::from_terms(c0[(i, j)], terms));
                }
            }
            for k in 0..n {
                c[k] += a[k].dot(&z);
            }
            p.blocks.push(block);
        }
        for _ in 0..rng.random_range(0..=2) {
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lambda = rng.random_range(0.5..1.5);
            for k in 0..n {
                c[k] += lambda * a[k];
            }
            p.inequalities.push(AffineExpr::from_terms(
                rng.random_range(0.5..2.0),
                a.into_iter().enumerate(),
            ));
        }
        for _ in 0..rng.random_range(0..=3.min(n - 1)) {
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mu = rng.random_range(-1.0..1.0);
            for k in 0..n {
                c[k] += mu * a[k];
            }
            p.equalities
                .push(AffineExpr::from_terms(0.0, a.into_iter().enumerate()));
        }
        p.objective = AffineExpr::from_terms(0.0, c.into_iter().enumerate());
        return p;
    }
}

/// Dense LMI data: `F_j(x) = C_j + sum_i x_i A_ij`, scalar inequalities as
/// 1x1 blocks.
struct Dense {
    constant: Vec<DMatrix<f64>>,
    coeff: Vec<Vec<DMatrix<f64>>>,
}

fn densify(p: &SdpProblem) -> Dense {
    let n = p.num_vars;
    let mut constant = Vec::new();
    let mut coeff = Vec::new();
    for b in &p.blocks {
        let d = b.dim();
        let mut c0 = DMatrix::zeros(d, d);
        let mut a = vec![DMatrix::zeros(d, d); n];
        for i in 0..d {
            for j in 0..d {
                let e = b.entry(i, j);
                c0[(i, j)] = e.constant;
                for &(k, v) in &e.terms {
                    a[k][(i, j)] = v;
                }
            }
        }
        constant.push(c0);
        coeff.push(a);
    }
    for e in &p.inequalities {
        constant.push(DMatrix::from_element(1, 1, e.constant));
        let mut a = vec![DMatrix::zeros(1, 1); n];
        for &(k, v) in &e.terms {
            a[k][(0, 0)] = v;
        }
        coeff.push(a);
    }
    Dense { constant, coeff }
}

/// Barrier value `-sum log det F_j`, or `None` outside the interior.
fn barrier(blocks: &[DMatrix<f64>]) -> Option<f64> {
    let mut v = 0.0;
    for f in blocks {
        let ch = f.clone().cholesky()?;
        v -= 2.0 * ch.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    }
    Some(v)
}

/// Optimal value by a path-following log-barrier method with damped Newton
/// steps, run on the null space of the equalities. Panics if the origin of
/// that null space is not strictly feasible.
pub fn barrier_oracle(p: &SdpProblem) -> f64 {
    let n = p.num_vars;
    let dense = densify(p);
    let c = DVector::from_fn(n, |k, _| {
        p.objective
            .terms
            .iter()
            .find(|t| t.0 == k)
            .map_or(0.0, |t| t.1)
    });

    // x = x0 + N z
    let (x0, basis) = if p.equalities.is_empty() {
        (DVector::zeros(n), DMatrix::identity(n, n))
    } else {
        let m = p.equalities.len();
        let mut e = DMatrix::zeros(m, n);
        let mut rhs = DVector::zeros(m);
        for (r, eq) in p.equalities.iter().enumerate() {
            rhs[r] = -eq.constant;
            for &(k, v) in &eq.terms {
                e[(r, k)] = v;
            }
        }
        let svd = e.clone().svd(true, true);
        let x0 = svd.solve(&rhs, 1e-12).unwrap();
        let rank = svd.singular_values.iter().filter(|s| **s > 1e-10).count();
        assert_eq!(rank, m, "oracle expects independent equalities");
        // trailing columns of a full Q for E^T span the null space of E
        let q = e.transpose().insert_columns(m, n - m, 0.0).qr().q();
        (x0, q.columns(m, n - m).into_owned())
    };
    let dim = basis.ncols();
    let ct = basis.transpose() * &c;
    let blocks_at = |z: &DVector<f64>| -> Vec<DMatrix<f64>> {
        let x = &x0 + &basis * z;
        dense
            .constant
            .iter()
            .zip(&dense.coeff)
            .map(|(c0, a)| {
                let mut f = c0.clone();
                for k in 0..n {
                    if x[k] != 0.0 {
                        f += &a[k] * x[k];
                    }
                }
                f
            })
            .collect()
    };
    // reduced coefficient matrices B_jk = sum_i N_ik A_ij
    let reduced: Vec<Vec<DMatrix<f64>>> = dense
        .coeff
        .iter()
        .map(|a| {
            (0..dim)
                .map(|k| {
                    let mut b = DMatrix::zeros(a[0].nrows(), a[0].ncols());
                    for i in 0..n {
                        if basis[(i, k)] != 0.0 {
                            b += &a[i] * basis[(i, k)];
                        }
                    }
                    b
                })
                .collect()
        })
        .collect();
    let total: usize = dense.constant.iter().map(|f| f.nrows()).sum();

    let mut z = DVector::zeros(dim);
    assert!(
        barrier(&blocks_at(&z)).is_some(),
        "start point is not strictly feasible"
    );
    let mut t = 1.0;
    while total as f64 / t > 1e-10 {
        for _ in 0..200 {
            let fs = blocks_at(&z);
            let inv: Vec<DMatrix<f64>> = fs
                .iter()
                .map(|f| f.clone().cholesky().unwrap().inverse())
                .collect();
            let mut g = &ct * t;
            let mut h = DMatrix::zeros(dim, dim);
            for (s, b) in inv.iter().zip(&reduced) {
                let sb: Vec<DMatrix<f64>> = b.iter().map(|bk| s * bk).collect();
                for k in 0..dim {
                    g[k] -= sb[k].trace();
                    for l in k..dim {
                        let v = sb[k].component_mul(&sb[l].transpose()).sum();
                        h[(k, l)] += v;
                        if l != k {
                            h[(l, k)] += v;
                        }
                    }
                }
            }
            let dz = -h
                .cholesky()
                .expect("barrier Hessian is positive definite")
                .solve(&g);
            let decrement = -g.dot(&dz);
            if decrement < 1e-12 {
                break;
            }
            let phi = |z: &DVector<f64>| barrier(&blocks_at(z)).map(|b| t * ct.dot(z) + b);
            let here = phi(&z).unwrap();
            let mut s = 1.0;
            loop {
                let trial = &z + &dz * s;
                if let Some(v) = phi(&trial) {
                    if v <= here - 0.25 * s * decrement {
                        z = trial;
                        break;
                    }
                }
                s *= 0.5;
                assert!(s > 1e-20, "line search failed");
            }
        }
        t *= 6.0;
    }
    c.dot(&(&x0 + &basis * &z)) + p.objective.constant
}
