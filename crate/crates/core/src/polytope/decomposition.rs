use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::polytope::{Halfspace, HPolytope, LinearProgram, RowKind};
use crate::scalar::Scalar;
use crate::vecmath::Point;

/// `K = (N + D) ∩ [0,1]^n` for a general polytope `N` and a down-closed `D`.
///
/// Caches `m = min_{x ∈ N} ‖x‖_∞` and a point `y0` attaining it. The diameter
/// bound is computed on first use (it costs `2n` LPs).
#[derive(Clone, Debug)]
pub struct Decomposition<S> {
    general: HPolytope<S>,
    down: HPolytope<S>,
    m: S,
    y0: Point<S>,
    diameter: OnceLock<S>,
    joint_diameter: OnceLock<S>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(serialize = "S: Scalar", deserialize = "S: Scalar"))]
struct RawDecomposition<S> {
    #[serde(rename = "N")]
    general: HPolytope<S>,
    #[serde(rename = "D")]
    down: HPolytope<S>,
}

impl<S: Scalar> Serialize for Decomposition<S> {
    fn serialize<Se: serde::Serializer>(&self, s: Se) -> std::result::Result<Se::Ok, Se::Error> {
        RawDecomposition {
            general: self.general.clone(),
            down: self.down.clone(),
        }
        .serialize(s)
    }
}

impl<'de, S: Scalar> Deserialize<'de> for Decomposition<S> {
    fn deserialize<De: serde::Deserializer<'de>>(d: De) -> std::result::Result<Self, De::Error> {
        let raw = RawDecomposition::<S>::deserialize(d)?;
        Decomposition::new(raw.general, raw.down).map_err(serde::de::Error::custom)
    }
}

impl<S: Scalar> Decomposition<S> {
    pub fn new(general: HPolytope<S>, down: HPolytope<S>) -> Result<Self> {
        check_dim(general.dim(), down.dim())?;
        if !down.is_down_closed() {
            return Err(Error::Validation(
                "the second body of a decomposition must be down-closed".into(),
            ));
        }
        let (y0, m) = general.min_linf_point()?;
        if m >= S::one() - S::feas_tol() {
            log::warn!("min ℓ∞ norm of N is {m}: every approximation guarantee is vacuous");
        }
        Ok(Decomposition {
            general,
            down,
            m,
            y0,
            diameter: OnceLock::new(),
            joint_diameter: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.general.dim()
    }

    /// The general (not necessarily down-closed) body `N`.
    pub fn general(&self) -> &HPolytope<S> {
        &self.general
    }

    /// The down-closed body `D`.
    pub fn down(&self) -> &HPolytope<S> {
        &self.down
    }

    pub fn m(&self) -> S {
        self.m
    }

    pub fn y0(&self) -> &Point<S> {
        &self.y0
    }

    /// `{(a, b) : a ∈ N, b ∈ D, a + b <= 1}` as a polytope in `2n` coordinates.
    pub fn joint_polytope(&self) -> HPolytope<S> {
        let n = self.dim();
        let mut rows = Vec::with_capacity(self.general.rows().len() + self.down.rows().len() + n);
        rows.extend(self.general.rows().iter().cloned());
        rows.extend(self.down.rows().iter().map(|r| Halfspace {
            coeffs: r.coeffs.iter().map(|&(j, a)| (n + j, a)).collect(),
            rhs: r.rhs,
            eq: r.eq,
        }));
        for j in 0..n {
            rows.push(Halfspace::le(vec![(j, S::one()), (n + j, S::one())], S::one()));
        }
        // feasible: (y0, 0) lies in it, so skip the LP certificate
        HPolytope {
            n: 2 * n,
            rows,
            down_closed: false,
        }
    }

    /// An LP over the joint variables `(a, b) ∈ R^{2n}` with the membership
    /// rows of both blocks and the coupling `a + b <= 1` already in place.
    pub fn joint_program(&self) -> LinearProgram<S> {
        let n = self.dim();
        let mut lp = LinearProgram::new(2 * n);
        self.general.add_to_program(&mut lp, 0);
        self.down.add_to_program(&mut lp, n);
        for j in 0..n {
            lp.add_row(vec![(j, S::one()), (n + j, S::one())], RowKind::Le, S::one());
        }
        lp
    }

    /// `max_{x ∈ K} ⟨c, x⟩`, returned as the lifted pair `(a, b)` with `x = a + b`.
    pub fn maximize_linear(&self, c: &[S]) -> Result<(Vec<S>, Vec<S>, S)> {
        let n = self.dim();
        check_dim(n, c.len())?;
        let mut lp = self.joint_program();
        let mut obj = c.to_vec();
        obj.extend_from_slice(c);
        lp.set_objective(obj)?;
        let sol = lp.maximize()?;
        let (a, b) = sol.x.split_at(n);
        Ok((a.to_vec(), b.to_vec(), sol.objective))
    }

    /// A minimum `ℓ∞`-norm point of `K` in lifted form `(a, b)`.
    pub fn min_linf_lifted(&self) -> Result<(Vec<S>, Vec<S>, S)> {
        let n = self.dim();
        let mut lp = self.joint_program();
        let mut lp_t = LinearProgram::new(2 * n + 1);
        for j in 0..2 * n {
            let (lo, hi) = lp.bounds(j);
            lp_t.set_bounds(j, lo, hi);
        }
        lp_t.set_bounds(2 * n, S::zero(), S::one());
        for r in lp.rows() {
            lp_t.add_row(r.coeffs.clone(), r.kind, r.rhs);
        }
        for j in 0..n {
            lp_t.add_row(
                vec![(j, S::one()), (n + j, S::one()), (2 * n, -S::one())],
                RowKind::Le,
                S::zero(),
            );
        }
        let mut c = vec![S::zero(); 2 * n + 1];
        c[2 * n] = S::one();
        lp_t.set_objective(c)?;
        let t = lp_t.minimize()?.objective.max(S::zero());

        for j in 0..n {
            lp.add_row(vec![(j, S::one()), (n + j, S::one())], RowKind::Le, t);
        }
        lp.set_objective(vec![S::one(); 2 * n])?;
        let sol = lp.minimize()?;
        let (a, b) = sol.x.split_at(n);
        Ok((a.to_vec(), b.to_vec(), t))
    }

    /// `sqrt(Σ_i (hi_i - lo_i)^2)` over the per-coordinate ranges of `K`;
    /// an upper bound on its diameter, at most `sqrt(n)`.
    pub fn diameter_upper(&self) -> Result<S> {
        if let Some(&d) = self.diameter.get() {
            return Ok(d);
        }
        let n = self.dim();
        let mut total = S::zero();
        for i in 0..n {
            let mut c = vec![S::zero(); n];
            c[i] = S::one();
            let (_, _, hi) = self.maximize_linear(&c)?;
            c[i] = -S::one();
            let (_, _, neg_lo) = self.maximize_linear(&c)?;
            let w = (hi + neg_lo).max(S::zero());
            total += w * w;
        }
        let d = total.sqrt();
        Ok(*self.diameter.get_or_init(|| d))
    }

    /// Upper bound on the diameter of [`Decomposition::joint_polytope`]:
    /// coordinate `j` contributes `min(r_N² + r_D², 2)` where `r_N`, `r_D` are
    /// the coordinate ranges of the two bodies (the pair `(a_j, b_j)` lives in
    /// a triangle of diameter `√2`).
    pub fn joint_diameter_upper(&self) -> Result<S> {
        if let Some(&d) = self.joint_diameter.get() {
            return Ok(d);
        }
        let rn = self.general.coordinate_ranges()?;
        let rd = self.down.coordinate_ranges()?;
        let two = S::one() + S::one();
        let d = rn
            .iter()
            .zip(&rd)
            .map(|(&(l1, h1), &(l2, h2))| {
                let (a, b) = (h1 - l1, h2 - l2);
                (a * a + b * b).min(two)
            })
            .sum::<S>()
            .sqrt();
        Ok(*self.joint_diameter.get_or_init(|| d))
    }

    /// Residual of the constructive witness `w = y + (1 - y) ⊙ z` with
    /// `y ∈ N` and `(1 - y) ⊙ z ∈ D`.
    pub fn witness_residual(&self, y: &[S], z: &[S]) -> S {
        let shaded: Vec<S> = y.iter().zip(z).map(|(&a, &b)| (S::one() - a) * b).collect();
        self.general.residual(y).max(self.down.residual(&shaded))
    }

    /// Distance-like residual of `w` from `K`: the optimum of
    /// `min ‖s‖_1` subject to `a + b + s⁺ - s⁻ = w`, `a ∈ N`, `b ∈ D`.
    pub fn membership_residual(&self, w: &[S]) -> Result<S> {
        let n = self.dim();
        check_dim(n, w.len())?;
        let box_viol = w
            .iter()
            .fold(S::zero(), |acc, &v| acc.max(-v).max(v - S::one()));
        let mut lp = LinearProgram::new(4 * n);
        self.general.add_to_program(&mut lp, 0);
        self.down.add_to_program(&mut lp, n);
        let mut c = vec![S::zero(); 4 * n];
        for j in 0..n {
            lp.add_row(
                vec![
                    (j, S::one()),
                    (n + j, S::one()),
                    (2 * n + j, S::one()),
                    (3 * n + j, -S::one()),
                ],
                RowKind::Eq,
                w[j],
            );
            c[2 * n + j] = S::one();
            c[3 * n + j] = S::one();
        }
        lp.set_objective(c)?;
        let sol = lp.minimize()?;
        Ok(sol.objective.max(S::zero()).max(box_viol))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diameter_examples() {
        let d = Decomposition::new(HPolytope::<f64>::origin(4), HPolytope::unit_box(4)).unwrap();
        assert!((d.diameter_upper().unwrap() - 2.0).abs() < 1e-12);

        let d = Decomposition::new(
            HPolytope::<f64>::origin(2),
            HPolytope::sum_at_most(2, 1.0).unwrap(),
        )
        .unwrap();
        assert!((d.diameter_upper().unwrap() - 2f64.sqrt()).abs() < 1e-12);

        let single = HPolytope::<f64>::new(
            2,
            vec![
                Halfspace::eq(vec![(0, 1.0)], 0.3),
                Halfspace::eq(vec![(1, 1.0)], 0.6),
            ],
            false,
        )
        .unwrap();
        let d = Decomposition::new(single, HPolytope::origin(2)).unwrap();
        assert!(d.diameter_upper().unwrap().abs() < 1e-12);
    }

    #[test]
    fn requires_down_closed_second_body() {
        let n = HPolytope::<f64>::origin(2);
        let e = HPolytope::sum_equal(2, 0.5).unwrap();
        assert!(matches!(Decomposition::new(n, e), Err(Error::Validation(_))));
    }

    #[test]
    fn membership_via_lp() {
        // N = {Σ = 0.1}, D = {Σ <= 0.9}: K = {0.1 <= Σ <= 1}
        let d = Decomposition::new(
            HPolytope::<f64>::sum_equal(3, 0.1).unwrap(),
            HPolytope::sum_at_most(3, 0.9).unwrap(),
        )
        .unwrap();
        assert!(d.membership_residual(&[0.2, 0.2, 0.1]).unwrap() <= 1e-9);
        assert!(d.membership_residual(&[0.02, 0.02, 0.01]).unwrap() > 1e-3);
        assert!(d.membership_residual(&[0.5, 0.5, 0.5]).unwrap() > 1e-3);
        assert!((d.m() - 0.1 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn json_schema() {
        let json = r#"{"N":{"n":2,"rows":[{"a":[1,1],"b":0.1,"eq":true}],"down_closed":false},
                       "D":{"n":2,"rows":[{"a":[1,1],"b":0.9,"eq":false}],"down_closed":true}}"#;
        let d: Decomposition<f64> = serde_json::from_str(json).unwrap();
        assert!((d.m() - 0.05).abs() < 1e-12);
        let s = serde_json::to_string(&d).unwrap();
        let d2: Decomposition<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(d2.general(), d.general());
    }

    #[test]
    fn lifted_min_linf() {
        let d = Decomposition::new(
            HPolytope::<f64>::sum_equal(2, 0.1).unwrap(),
            HPolytope::sum_at_most(2, 0.9).unwrap(),
        )
        .unwrap();
        let (a, b, t) = d.min_linf_lifted().unwrap();
        assert!((t - 0.05).abs() < 1e-12);
        assert!((a[0] + b[0] - 0.05).abs() < 1e-9);
    }
}
