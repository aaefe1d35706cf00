//! Reference outcomes for the regression suite.
//!
//! Each case records the final violation, objective, and (where meaningful)
//! minimizer the solver is expected to reach, with tolerances, plus whether
//! the case is a hard requirement or a best-effort one. Quasi-Newton paths
//! are start-dependent, so a handful of starts are graded softly: they must
//! terminate cleanly, but may settle at a different stationary point than
//! the reference runs did.

use crate::sqpcore::TerminationClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hardness {
    /// Counts toward the pass requirement of its problem.
    Hard,
    /// Must terminate cleanly with invariants intact; the reference values
    /// are advisory.
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpectedClass {
    Kkt,
    InfeasibleStationary,
}

impl ExpectedClass {
    pub fn matches(self, t: TerminationClass) -> bool {
        match self {
            ExpectedClass::Kkt => matches!(t, TerminationClass::Kkt),
            ExpectedClass::InfeasibleStationary => matches!(
                t,
                TerminationClass::InfeasibleStationaryKktShifted
                    | TerminationClass::InfeasibleStationaryCqFailShifted
            ),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExpectedOutcome {
    pub hardness: Hardness,
    /// Termination family, where the reference asserts one.
    pub class: Option<ExpectedClass>,
    pub v_star: f64,
    pub v_tol: f64,
    pub f_star: f64,
    pub f_tol: f64,
    /// Reference minimizer with max-norm tolerance, when unique enough to
    /// assert.
    pub x_star: Option<(Vec<f64>, f64)>,
}

impl ExpectedOutcome {
    /// True when final values sit inside every asserted tolerance band.
    pub fn values_ok(&self, x: &[f64], v: f64, f: f64) -> bool {
        if (v - self.v_star).abs() > self.v_tol {
            return false;
        }
        if (f - self.f_star).abs() > self.f_tol {
            return false;
        }
        if let Some((xs, tol)) = &self.x_star {
            let dist = x
                .iter()
                .zip(xs)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0_f64, f64::max);
            if dist > *tol {
                return false;
            }
        }
        true
    }

    pub fn class_ok(&self, t: TerminationClass) -> bool {
        self.class.map_or(true, |c| c.matches(t))
    }
}

#[derive(Debug, Clone)]
pub struct TestCase {
    pub problem: &'static str,
    pub x0: Vec<f64>,
    pub expected: ExpectedOutcome,
}

/// Minimum number of hard-graded cases that must hit their reference values
/// for this problem to pass the regression suite.
pub fn min_hard_passes(problem: &str) -> usize {
    match problem {
        "rosen-suzuki" => 10,
        "hock-schittkowski" => 3,
        _ => 1,
    }
}

pub(super) fn list_cases() -> Vec<TestCase> {
    let mut cases = Vec::new();

    cases.push(TestCase {
        problem: "isolated",
        x0: vec![3.0, 2.0],
        expected: ExpectedOutcome {
            hardness: Hardness::Hard,
            class: Some(ExpectedClass::InfeasibleStationary),
            v_star: 1.0,
            v_tol: 1e-3,
            f_star: 0.0,
            f_tol: 1e-3,
            x_star: Some((vec![0.0, 0.0], 1e-3)),
        },
    });

    cases.push(TestCase {
        problem: "nactive",
        x0: vec![-20.0, 10.0],
        expected: ExpectedOutcome {
            hardness: Hardness::Hard,
            class: Some(ExpectedClass::InfeasibleStationary),
            v_star: 1.0 / 3.0,
            v_tol: 1e-3,
            f_star: -1.0 / 3.0,
            f_tol: 1e-3,
            x_star: Some((vec![-1.0 / 3.0, 0.0], 1e-3)),
        },
    });

    cases.push(TestCase {
        problem: "counterexample",
        x0: vec![-4.0, 1.0, 1.0],
        expected: ExpectedOutcome {
            hardness: Hardness::Hard,
            class: None,
            v_star: 0.0,
            v_tol: 1e-4,
            f_star: 2.0,
            f_tol: 5e-3,
            x_star: Some((vec![2.0, 3.0, 0.0], 5e-3)),
        },
    });

    cases.push(TestCase {
        problem: "standard",
        x0: vec![-2.0, -2.0],
        expected: ExpectedOutcome {
            hardness: Hardness::Hard,
            class: None,
            // objective band [0.999, 1.01] written as center and half-width
            v_star: 0.0,
            v_tol: 1e-4,
            f_star: 1.0045,
            f_tol: 0.0055,
            x_star: Some((vec![1.0, 0.0], 2e-2)),
        },
    });

    // rosen-suzuki: the all-constant starts; +-1 land on infeasible
    // stationary points in the reference runs and are graded softly
    let rs_case = |c: f64, expected: ExpectedOutcome| TestCase {
        problem: "rosen-suzuki",
        x0: vec![c; 4],
        expected,
    };
    let rs_kkt = ExpectedOutcome {
        hardness: Hardness::Hard,
        class: None,
        v_star: 0.0,
        v_tol: 1e-3,
        f_star: -44.0,
        f_tol: 1e-2,
        x_star: None,
    };
    cases.push(rs_case(0.0, rs_kkt.clone()));
    for c in [1.0, 2.0, 3.0, 4.0, 5.0, 10.0, 100.0] {
        if c == 1.0 {
            cases.push(rs_case(
                1.0,
                ExpectedOutcome {
                    hardness: Hardness::Soft,
                    class: Some(ExpectedClass::InfeasibleStationary),
                    v_star: 0.72012,
                    v_tol: 1e-3,
                    f_star: -42.4746,
                    f_tol: 1e-2,
                    x_star: None,
                },
            ));
            cases.push(rs_case(
                -1.0,
                ExpectedOutcome {
                    hardness: Hardness::Soft,
                    class: Some(ExpectedClass::InfeasibleStationary),
                    v_star: 0.043135,
                    v_tol: 1e-3,
                    f_star: -21.2158,
                    f_tol: 1e-2,
                    x_star: None,
                },
            ));
        } else {
            cases.push(rs_case(c, rs_kkt.clone()));
            cases.push(rs_case(-c, rs_kkt.clone()));
        }
    }

    for c in 1..=5 {
        cases.push(TestCase {
            problem: "hock-schittkowski",
            x0: vec![c as f64; 6],
            expected: ExpectedOutcome {
                hardness: Hardness::Hard,
                class: None,
                v_star: 0.0,
                v_tol: 1e-3,
                f_star: 89.238,
                f_tol: 5e-2,
                x_star: None,
            },
        });
    }

    cases
}
