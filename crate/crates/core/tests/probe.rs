use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nsdp_core::conesolve::{self, ConicQP, SubsolverConfig};
use nsdp_core::symmat::{self, BlockSymMatrix, SymBlock};

fn random_sym2(rng: &mut ChaCha8Rng) -> SymBlock {
    let a = rng.gen_range(-1.0..1.0);
    let b = rng.gen_range(-1.0..1.0);
    let c = rng.gen_range(-1.0..1.0);
    SymBlock::from_fn(2, |i, j| match (i, j) {
        (0, 0) => a,
        (1, 1) => c,
        _ => b,
    })
}

fn random_qp(rng: &mut ChaCha8Rng, nv: usize) -> (ConicQP, DVector<f64>) {
    let l = DMatrix::from_fn(nv, nv, |_, _| rng.gen_range(-1.0..1.0));
    let q = DMatrix::identity(nv, nv) + l.transpose() * &l;
    let c = DVector::from_fn(nv, |_, _| rng.gen_range(-2.0..2.0));

    let nonneg_idx: Vec<usize> = (0..nv).filter(|_| rng.gen_bool(0.5)).collect();
    let mut z0: DVector<f64> = DVector::from_fn(nv, |_, _| rng.gen_range(-1.5..1.5));
    for &i in &nonneg_idx {
        z0[i] = z0[i].abs() + 0.5;
    }

    let (a_eq, b_eq) = if rng.gen_bool(0.5) && nv > 1 {
        let mut row = DVector::from_fn(nv, |_, _| rng.gen_range(-1.0..1.0));
        if row.norm() < 0.3 {
            row[0] += 1.0;
        }
        let b = row.dot(&z0);
        (DMatrix::from_fn(1, nv, |_, j| row[j]), DVector::from_element(1, b))
    } else {
        (DMatrix::zeros(0, nv), DVector::zeros(0))
    };

    let mi: Vec<BlockSymMatrix> =
        (0..nv).map(|_| BlockSymMatrix::new(vec![random_sym2(rng)])).collect();
    let w = DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-1.0..1.0));
    let s = -(DMatrix::identity(2, 2) + &w * w.transpose());
    let mut m0 = BlockSymMatrix::new(vec![SymBlock::from_dense_symmetrize(&s)]);
    for (i, m) in mi.iter().enumerate() {
        m0 = m0.add_scaled(-z0[i], m);
    }

    (ConicQP { nv, q, c, a_eq, b_eq, nonneg_idx, psd_m0: m0, psd_mi: mi }, z0)
}

#[test]
fn probe_trial_41() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_cafe);
    let cfg = SubsolverConfig::default();
    for trial in 0..60usize {
        let nv = 1 + trial % 3;
        let (qp, z0) = random_qp(&mut rng, nv);
        if trial != 41 {
            continue;
        }
        let sol = conesolve::solve_conic_qp(&qp, &cfg);
        println!("trial {trial}: nv={nv} neq={} nonneg={:?}", qp.a_eq.nrows(), qp.nonneg_idx);
        println!("ipm status {:?} obj {:.10}", sol.status, sol.obj);
        println!("ipm z = {:?}", sol.z.as_slice());
        let lmax = symmat::lambda_max(&qp.psd_value(&sol.z)).unwrap();
        println!("ipm lambda_max(G(z)) = {:.3e}", lmax);
        if qp.a_eq.nrows() > 0 {
            let r = &qp.a_eq * &sol.z - &qp.b_eq;
            println!("ipm eq residual = {:.3e}", r.norm());
        }
        for &i in &qp.nonneg_idx {
            println!("ipm z[{i}] = {:.3e}", sol.z[i]);
        }
        println!("obj at z0 = {:.10}", qp.objective(&z0));

        // exhaustive feasible random search seeded from several points
        let feasible = |z: &DVector<f64>| -> bool {
            if qp.nonneg_idx.iter().any(|&i| z[i] < -1e-9) {
                return false;
            }
            if qp.a_eq.nrows() > 0 {
                let r = &qp.a_eq * z - &qp.b_eq;
                if r.norm() > 1e-9 {
                    return false;
                }
            }
            symmat::lambda_max(&qp.psd_value(z)).unwrap() <= 1e-9
        };
        println!("ipm point feasible per oracle test: {}", feasible(&sol.z));

        // walk from the ipm point back to strict feasibility and measure cost
        let mut zf = sol.z.clone();
        if qp.a_eq.nrows() > 0 {
            let a = qp.a_eq.row(0).transpose();
            let r = a.dot(&zf) - qp.b_eq[0];
            zf -= &a * (r / a.norm_squared());
        }
        let mut lo = 0.0_f64;
        let mut hi = 1.0_f64;
        let blend = |t: f64, zf: &DVector<f64>| -> DVector<f64> { zf * (1.0 - t) + &z0 * t };
        if !feasible(&blend(0.0, &zf)) {
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if feasible(&blend(mid, &zf)) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
        } else {
            hi = 0.0;
        }
        let zproj = blend(hi, &zf);
        println!(
            "nearest feasible blend t={:.3e} obj {:.10} lmax {:.3e}",
            hi,
            qp.objective(&zproj),
            symmat::lambda_max(&qp.psd_value(&zproj)).unwrap()
        );
    }
}
