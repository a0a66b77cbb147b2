//! 2- and 3-connections, gauge transformations and curvatures, generic
//! over a calculus backend.

use nalgebra::DMatrix;

use crate::lie::Bilinear;
use crate::xmod::{CrossedModule, Rep};

/// Exterior calculus of algebra-valued forms plus group fields acting on them.
pub trait Calculus {
    type Form: Clone;
    type Group: Clone;

    fn ambient_dim(&self) -> usize;
    fn zero(&self, degree: usize, dim: usize) -> Self::Form;
    fn degree(&self, f: &Self::Form) -> usize;
    fn add(&self, a: &Self::Form, b: &Self::Form) -> Self::Form;
    fn sub(&self, a: &Self::Form, b: &Self::Form) -> Self::Form;
    fn scale(&self, a: &Self::Form, s: f64) -> Self::Form;
    fn d(&self, a: &Self::Form) -> Self::Form;
    fn wedge(&self, a: &Self::Form, b: &Self::Form, p: &Bilinear) -> Self::Form;
    /// Constant linear map on the algebra values.
    fn map(&self, m: &DMatrix<f64>, a: &Self::Form) -> Self::Form;
    /// `rho(g^{-1})(a)`.
    fn act_inv(&self, g: &Self::Group, rep: Rep, a: &Self::Form) -> Self::Form;
    /// `rho(g)(a)`.
    fn act(&self, g: &Self::Group, rep: Rep, a: &Self::Form) -> Self::Form;
    /// `g^{-1} A g + g^{-1} dg`.
    fn gauge_connection(&self, g: &Self::Group, a: &Self::Form) -> Self::Form;
    fn group_identity(&self) -> Self::Group;
    fn group_mul(&self, a: &Self::Group, b: &Self::Group) -> Self::Group;
    fn group_inv(&self, a: &Self::Group) -> Self::Group;
    /// Size of a residual form: exact-coefficient max for jets, L2 for grids.
    fn norm(&self, a: &Self::Form) -> f64;
}

/// Bilinear pairings of a module, precomputed once.
#[derive(Clone, Debug)]
pub struct Pairings {
    pub bracket_g: Bilinear,
    pub bracket_h: Bilinear,
    pub alpha: Bilinear,
    pub beta: Bilinear,
    pub peiffer: Bilinear,
}

impl Pairings {
    pub fn new(m: &CrossedModule) -> Self {
        Self {
            bracket_g: m.g.structure.clone(),
            bracket_h: m.h.structure.clone(),
            alpha: m.alpha_hat.as_bilinear(),
            beta: m.beta_hat.as_bilinear(),
            peiffer: m.peiffer.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TwoConnection<F> {
    pub a: F,
    pub b: F,
}

#[derive(Clone, Debug)]
pub struct ThreeConnection<F> {
    pub a: F,
    pub b: F,
    pub c: F,
}

#[derive(Clone, Debug)]
pub struct TwoGauge<G, F> {
    pub g: G,
    pub chi: F,
}

#[derive(Clone, Debug)]
pub struct ThreeGauge<G, F> {
    pub g: G,
    pub chi: F,
    pub lambda: F,
}

/// Gauge-theoretic operations of a module over a backend.
pub struct Engine<'a, C: Calculus> {
    pub calc: &'a C,
    pub module: &'a CrossedModule,
    pub pairs: Pairings,
}

impl<'a, C: Calculus> Engine<'a, C> {
    pub fn new(calc: &'a C, module: &'a CrossedModule) -> Self {
        Self {
            calc,
            module,
            pairs: Pairings::new(module),
        }
    }

    /// `A ^ A = 1/2 [A ^ A]` for a `g`-valued 1-form.
    pub fn a_wedge_a(&self, a: &C::Form) -> C::Form {
        self.calc
            .scale(&self.calc.wedge(a, a, &self.pairs.bracket_g), 0.5)
    }

    /// `chi ^ chi` for an `h`-valued 1-form.
    pub fn chi_wedge_chi(&self, chi: &C::Form) -> C::Form {
        self.calc
            .scale(&self.calc.wedge(chi, chi, &self.pairs.bracket_h), 0.5)
    }

    pub fn alpha_wedge(&self, a: &C::Form, w: &C::Form) -> C::Form {
        self.calc.wedge(a, w, &self.pairs.alpha)
    }

    pub fn beta_wedge(&self, a: &C::Form, w: &C::Form) -> C::Form {
        self.calc.wedge(a, w, &self.pairs.beta)
    }

    pub fn lift_wedge(&self, v: &C::Form, w: &C::Form) -> C::Form {
        self.calc.wedge(v, w, &self.pairs.peiffer)
    }

    pub fn t_hat(&self, f: &C::Form) -> C::Form {
        self.calc.map(&self.module.t_hat.matrix, f)
    }

    pub fn tau_hat(&self, f: &C::Form) -> C::Form {
        self.calc.map(&self.module.tau_hat.matrix, f)
    }

    /// `F_A = dA + A ^ A`.
    pub fn curvature(&self, a: &C::Form) -> C::Form {
        self.calc.add(&self.calc.d(a), &self.a_wedge_a(a))
    }

    /// `(F_A, Z_{A,B})` with `Z = dB + alpha(A) ^ B`.
    pub fn curvature2(&self, conn: &TwoConnection<C::Form>) -> (C::Form, C::Form) {
        let f = self.curvature(&conn.a);
        let z = self
            .calc
            .add(&self.calc.d(&conn.b), &self.alpha_wedge(&conn.a, &conn.b));
        (f, z)
    }

    /// `F_A - t(B)`.
    pub fn fake_curvature(&self, a: &C::Form, b: &C::Form) -> C::Form {
        self.calc.sub(&self.curvature(a), &self.t_hat(b))
    }

    /// `dB + alpha(A) ^ B - tau(C)`.
    pub fn fake_curvature3(&self, conn: &ThreeConnection<C::Form>) -> C::Form {
        let z = self
            .calc
            .add(&self.calc.d(&conn.b), &self.alpha_wedge(&conn.a, &conn.b));
        self.calc.sub(&z, &self.tau_hat(&conn.c))
    }

    /// `Y = dC + beta(A) ^ C + {B ^ B}`.
    pub fn curvature3(&self, conn: &ThreeConnection<C::Form>) -> C::Form {
        let y = self
            .calc
            .add(&self.calc.d(&conn.c), &self.beta_wedge(&conn.a, &conn.c));
        self.calc.add(&y, &self.lift_wedge(&conn.b, &conn.b))
    }

    /// `YM2 = |Z_{A,B}|^2` in the backend norm (an integral on grids).
    pub fn ym2(&self, conn: &TwoConnection<C::Form>) -> f64 {
        self.calc.norm(&self.curvature2(conn).1).powi(2)
    }

    /// `YM3 = |Y_{A,B,C}|^2`.
    pub fn ym3(&self, conn: &ThreeConnection<C::Form>) -> f64 {
        self.calc.norm(&self.curvature3(conn)).powi(2)
    }

    /// Bianchi residuals `dF + [A ^ F]` and `dZ + alpha(A) ^ Z`.
    pub fn bianchi(&self, conn: &TwoConnection<C::Form>) -> (C::Form, C::Form) {
        let (f, z) = self.curvature2(conn);
        let bf = self.calc.add(
            &self.calc.d(&f),
            &self.calc.wedge(&conn.a, &f, &self.pairs.bracket_g),
        );
        let bz = self
            .calc
            .add(&self.calc.d(&z), &self.alpha_wedge(&conn.a, &z));
        (bf, bz)
    }

    pub fn identity2(&self) -> TwoGauge<C::Group, C::Form> {
        TwoGauge {
            g: self.calc.group_identity(),
            chi: self.calc.zero(1, self.module.h.dim),
        }
    }

    pub fn identity3(&self) -> ThreeGauge<C::Group, C::Form> {
        ThreeGauge {
            g: self.calc.group_identity(),
            chi: self.calc.zero(1, self.module.h.dim),
            lambda: self.calc.zero(2, self.module.l.dim),
        }
    }

    /// `A' = g^{-1} A g + g^{-1} dg - t(chi)`,
    /// `B' = alpha(g^{-1}) B - alpha(A') ^ chi - d chi - chi ^ chi`.
    pub fn apply_gauge2(
        &self,
        gauge: &TwoGauge<C::Group, C::Form>,
        conn: &TwoConnection<C::Form>,
    ) -> TwoConnection<C::Form> {
        let c = self.calc;
        let a1 = c.sub(
            &c.gauge_connection(&gauge.g, &conn.a),
            &self.t_hat(&gauge.chi),
        );
        let b_rot = c.act_inv(&gauge.g, Rep::Alpha, &conn.b);
        let b1 = c.sub(
            &c.sub(
                &c.sub(&b_rot, &self.alpha_wedge(&a1, &gauge.chi)),
                &c.d(&gauge.chi),
            ),
            &self.chi_wedge_chi(&gauge.chi),
        );
        TwoConnection { a: a1, b: b1 }
    }

    /// Gauge equal to applying `first` and then `second`:
    /// `(g g', alpha(g'^{-1}) chi + chi')`.
    pub fn compose_gauge2(
        &self,
        first: &TwoGauge<C::Group, C::Form>,
        second: &TwoGauge<C::Group, C::Form>,
    ) -> TwoGauge<C::Group, C::Form> {
        let c = self.calc;
        TwoGauge {
            g: c.group_mul(&first.g, &second.g),
            chi: c.add(&c.act_inv(&second.g, Rep::Alpha, &first.chi), &second.chi),
        }
    }

    /// The coefficient rule as printed, `(g g', alpha(g') chi + chi')`.
    pub fn compose_gauge2_printed(
        &self,
        first: &TwoGauge<C::Group, C::Form>,
        second: &TwoGauge<C::Group, C::Form>,
    ) -> TwoGauge<C::Group, C::Form> {
        let c = self.calc;
        TwoGauge {
            g: c.group_mul(&first.g, &second.g),
            chi: c.add(&c.act(&second.g, Rep::Alpha, &first.chi), &second.chi),
        }
    }

    /// Inverse under `compose_gauge2`: `(g^{-1}, -alpha(g) chi)`.
    pub fn inverse_gauge2(
        &self,
        gauge: &TwoGauge<C::Group, C::Form>,
    ) -> TwoGauge<C::Group, C::Form> {
        let c = self.calc;
        TwoGauge {
            g: c.group_inv(&gauge.g),
            chi: c.scale(&c.act(&gauge.g, Rep::Alpha, &gauge.chi), -1.0),
        }
    }

    /// General 3-gauge action:
    /// `A'` as for 2-gauges, `B' = ... - tau(lambda)` and
    /// `C' = beta(g^{-1}) C - d lambda - beta(A') ^ lambda + {B' ^ chi}
    ///       + {chi ^ alpha(g^{-1}) B} + {tau(lambda) ^ chi}`.
    pub fn apply_gauge3(
        &self,
        gauge: &ThreeGauge<C::Group, C::Form>,
        conn: &ThreeConnection<C::Form>,
    ) -> ThreeConnection<C::Form> {
        let c = self.calc;
        let two = self.apply_gauge2(
            &TwoGauge {
                g: gauge.g.clone(),
                chi: gauge.chi.clone(),
            },
            &TwoConnection {
                a: conn.a.clone(),
                b: conn.b.clone(),
            },
        );
        let tl = self.tau_hat(&gauge.lambda);
        let b1 = c.sub(&two.b, &tl);
        let b_rot = c.act_inv(&gauge.g, Rep::Alpha, &conn.b);
        let mut c1 = c.act_inv(&gauge.g, Rep::Beta, &conn.c);
        c1 = c.sub(&c1, &c.d(&gauge.lambda));
        c1 = c.sub(&c1, &self.beta_wedge(&two.a, &gauge.lambda));
        c1 = c.add(&c1, &self.lift_wedge(&b1, &gauge.chi));
        c1 = c.add(&c1, &self.lift_wedge(&gauge.chi, &b_rot));
        c1 = c.add(&c1, &self.lift_wedge(&tl, &gauge.chi));
        ThreeConnection {
            a: two.a,
            b: b1,
            c: c1,
        }
    }

    /// `(g, 0, 0)`: conjugation of all three forms.
    pub fn special_g(
        &self,
        g: &C::Group,
        conn: &ThreeConnection<C::Form>,
    ) -> ThreeConnection<C::Form> {
        let c = self.calc;
        ThreeConnection {
            a: c.gauge_connection(g, &conn.a),
            b: c.act_inv(g, Rep::Alpha, &conn.b),
            c: c.act_inv(g, Rep::Beta, &conn.c),
        }
    }

    /// `(e, chi, 0)` with the `C` rule `C + {B' ^ chi} + {chi ^ B}`.
    pub fn special_chi(
        &self,
        chi: &C::Form,
        conn: &ThreeConnection<C::Form>,
    ) -> ThreeConnection<C::Form> {
        let (a1, b1) = self.special_chi_ab(chi, conn);
        let c = self.calc;
        let c1 = c.add(
            &c.add(&conn.c, &self.lift_wedge(&b1, chi)),
            &self.lift_wedge(chi, &conn.b),
        );
        ThreeConnection {
            a: a1,
            b: b1,
            c: c1,
        }
    }

    /// `(e, chi, 0)` with the `C` rule `C + {B' ^ chi} + {chi ^ B'}`.
    pub fn special_chi_printed(
        &self,
        chi: &C::Form,
        conn: &ThreeConnection<C::Form>,
    ) -> ThreeConnection<C::Form> {
        let (a1, b1) = self.special_chi_ab(chi, conn);
        let c = self.calc;
        let c1 = c.add(
            &c.add(&conn.c, &self.lift_wedge(&b1, chi)),
            &self.lift_wedge(chi, &b1),
        );
        ThreeConnection {
            a: a1,
            b: b1,
            c: c1,
        }
    }

    fn special_chi_ab(&self, chi: &C::Form, conn: &ThreeConnection<C::Form>) -> (C::Form, C::Form) {
        let c = self.calc;
        let a1 = c.sub(&conn.a, &self.t_hat(chi));
        let b1 = c.sub(
            &c.sub(&c.sub(&conn.b, &self.alpha_wedge(&a1, chi)), &c.d(chi)),
            &self.chi_wedge_chi(chi),
        );
        (a1, b1)
    }

    /// `(e, 0, lambda)`: `B' = B - tau(lambda)`, `C' = C - d lambda - beta(A) ^ lambda`.
    pub fn special_lambda(
        &self,
        lambda: &C::Form,
        conn: &ThreeConnection<C::Form>,
    ) -> ThreeConnection<C::Form> {
        let c = self.calc;
        ThreeConnection {
            a: conn.a.clone(),
            b: c.sub(&conn.b, &self.tau_hat(lambda)),
            c: c.sub(
                &c.sub(&conn.c, &c.d(lambda)),
                &self.beta_wedge(&conn.a, lambda),
            ),
        }
    }

    /// Applies 3-gauges left to right.
    pub fn apply_sequence3(
        &self,
        seq: &[ThreeGauge<C::Group, C::Form>],
        conn: &ThreeConnection<C::Form>,
    ) -> ThreeConnection<C::Form> {
        seq.iter()
            .fold(conn.clone(), |acc, g| self.apply_gauge3(g, &acc))
    }
}
