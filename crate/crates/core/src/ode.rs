//! Dormand-Prince 8(5,3) for linear matrix ODEs `Y' = C(x) Y`.
//!
//! The integration range is cut at caller-supplied stops. The coefficient
//! must be smooth inside each stop interval; no step crosses a stop, so a
//! piecewise-polynomial coefficient is always integrated on its own pieces.

#![allow(clippy::excessive_precision)]

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat2 = Matrix2<Complex64>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-11,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evals: usize,
}

const C2: f64 = 0.526001519587677318785587544488E-01;
const C3: f64 = 0.789002279381515978178381316732E-01;
const C4: f64 = 0.118350341907227396726757197510E+00;
const C5: f64 = 0.281649658092772603273242802490E+00;
const C6: f64 = 0.333333333333333333333333333333E+00;
const C7: f64 = 0.25E+00;
const C8: f64 = 0.307692307692307692307692307692E+00;
const C9: f64 = 0.651282051282051282051282051282E+00;
const C10: f64 = 0.6E+00;
const C11: f64 = 0.857142857142857142857142857142E+00;

const A21: f64 = 5.26001519587677318785587544488E-2;
const A31: f64 = 1.97250569845378994544595329183E-2;
const A32: f64 = 5.91751709536136983633785987549E-2;
const A41: f64 = 2.95875854768068491816892993775E-2;
const A43: f64 = 8.87627564304205475450678981324E-2;
const A51: f64 = 2.41365134159266685502369798665E-1;
const A53: f64 = -8.84549479328286085344864962717E-1;
const A54: f64 = 9.24834003261792003115737966543E-1;
const A61: f64 = 3.7037037037037037037037037037E-2;
const A64: f64 = 1.70828608729473871279604482173E-1;
const A65: f64 = 1.25467687566822425016691814123E-1;
const A71: f64 = 3.7109375E-2;
const A74: f64 = 1.70252211019544039314978060272E-1;
const A75: f64 = 6.02165389804559606850219397283E-2;
const A76: f64 = -1.7578125E-2;
const A81: f64 = 3.70920001185047927108779319836E-2;
const A84: f64 = 1.70383925712239993810214054705E-1;
const A85: f64 = 1.07262030446373284651809199168E-1;
const A86: f64 = -1.53194377486244017527936158236E-2;
const A87: f64 = 8.27378916381402288758473766002E-3;
const A91: f64 = 6.24110958716075717114429577812E-1;
const A94: f64 = -3.36089262944694129406857109825E0;
const A95: f64 = -8.68219346841726006818189891453E-1;
const A96: f64 = 2.75920996994467083049415600797E1;
const A97: f64 = 2.01540675504778934086186788979E1;
const A98: f64 = -4.34898841810699588477366255144E1;
const A101: f64 = 4.77662536438264365890433908527E-1;
const A104: f64 = -2.48811461997166764192642586468E0;
const A105: f64 = -5.90290826836842996371446475743E-1;
const A106: f64 = 2.12300514481811942347288949897E1;
const A107: f64 = 1.52792336328824235832596922938E1;
const A108: f64 = -3.32882109689848629194453265587E1;
const A109: f64 = -2.03312017085086261358222928593E-2;
const A111: f64 = -9.3714243008598732571704021658E-1;
const A114: f64 = 5.18637242884406370830023853209E0;
const A115: f64 = 1.09143734899672957818500254654E0;
const A116: f64 = -8.14978701074692612513997267357E0;
const A117: f64 = -1.85200656599969598641566180701E1;
const A118: f64 = 2.27394870993505042818970056734E1;
const A119: f64 = 2.49360555267965238987089396762E0;
const A1110: f64 = -3.0467644718982195003823669022E0;
const A121: f64 = 2.27331014751653820792359768449E0;
const A124: f64 = -1.05344954667372501984066689879E1;
const A125: f64 = -2.00087205822486249909675718444E0;
const A126: f64 = -1.79589318631187989172765950534E1;
const A127: f64 = 2.79488845294199600508499808837E1;
const A128: f64 = -2.85899827713502369474065508674E0;
const A129: f64 = -8.87285693353062954433549289258E0;
const A1210: f64 = 1.23605671757943030647266201528E1;
const A1211: f64 = 6.43392746015763530355970484046E-1;

const B1: f64 = 5.42937341165687622380535766363E-2;
const B6: f64 = 4.45031289275240888144113950566E0;
const B7: f64 = 1.89151789931450038304281599044E0;
const B8: f64 = -5.8012039600105847814672114227E0;
const B9: f64 = 3.1116436695781989440891606237E-1;
const B10: f64 = -1.52160949662516078556178806805E-1;
const B11: f64 = 2.01365400804030348374776537501E-1;
const B12: f64 = 4.47106157277725905176885569043E-2;

const BHH1: f64 = 0.244094488188976377952755905512E+00;
const BHH2: f64 = 0.733846688281611857341361741547E+00;
const BHH3: f64 = 0.220588235294117647058823529412E-01;

const ER1: f64 = 0.1312004499419488073250102996E-01;
const ER6: f64 = -0.1225156446376204440720569753E+01;
const ER7: f64 = -0.4957589496572501915214079952E+00;
const ER8: f64 = 0.1664377182454986536961530415E+01;
const ER9: f64 = -0.3503288487499736816886487290E+00;
const ER10: f64 = 0.3341791187130174790297318841E+00;
const ER11: f64 = 0.8192320648511571246570742613E-01;
const ER12: f64 = -0.2235530786388629525884427845E-01;

/// One DOP853 step. Returns the new state and the scaled error norm.
fn step<F: Fn(f64) -> Mat2>(coef: &F, x: f64, y: &Mat2, h: f64, opts: &OdeOptions) -> (Mat2, f64) {
    let f = |t: f64, v: &Mat2| coef(t) * v;
    let k1 = f(x, y);
    let k2 = f(x + C2 * h, &(y + k1 * Complex64::from(A21 * h)));
    let s = |terms: &[(&Mat2, f64)]| -> Mat2 {
        let mut acc = *y;
        for (k, a) in terms {
            acc += *k * Complex64::from(a * h);
        }
        acc
    };
    let k3 = f(x + C3 * h, &s(&[(&k1, A31), (&k2, A32)]));
    let k4 = f(x + C4 * h, &s(&[(&k1, A41), (&k3, A43)]));
    let k5 = f(x + C5 * h, &s(&[(&k1, A51), (&k3, A53), (&k4, A54)]));
    let k6 = f(x + C6 * h, &s(&[(&k1, A61), (&k4, A64), (&k5, A65)]));
    let k7 = f(
        x + C7 * h,
        &s(&[(&k1, A71), (&k4, A74), (&k5, A75), (&k6, A76)]),
    );
    let k8 = f(
        x + C8 * h,
        &s(&[(&k1, A81), (&k4, A84), (&k5, A85), (&k6, A86), (&k7, A87)]),
    );
    let k9 = f(
        x + C9 * h,
        &s(&[
            (&k1, A91),
            (&k4, A94),
            (&k5, A95),
            (&k6, A96),
            (&k7, A97),
            (&k8, A98),
        ]),
    );
    let k10 = f(
        x + C10 * h,
        &s(&[
            (&k1, A101),
            (&k4, A104),
            (&k5, A105),
            (&k6, A106),
            (&k7, A107),
            (&k8, A108),
            (&k9, A109),
        ]),
    );
    let k11 = f(
        x + C11 * h,
        &s(&[
            (&k1, A111),
            (&k4, A114),
            (&k5, A115),
            (&k6, A116),
            (&k7, A117),
            (&k8, A118),
            (&k9, A119),
            (&k10, A1110),
        ]),
    );
    let k12 = f(
        x + h,
        &s(&[
            (&k1, A121),
            (&k4, A124),
            (&k5, A125),
            (&k6, A126),
            (&k7, A127),
            (&k8, A128),
            (&k9, A129),
            (&k10, A1210),
            (&k11, A1211),
        ]),
    );
    let comb = |terms: &[(&Mat2, f64)]| -> Mat2 {
        let mut acc = Mat2::zeros();
        for (k, b) in terms {
            acc += *k * Complex64::from(*b);
        }
        acc
    };
    let slope = comb(&[
        (&k1, B1),
        (&k6, B6),
        (&k7, B7),
        (&k8, B8),
        (&k9, B9),
        (&k10, B10),
        (&k11, B11),
        (&k12, B12),
    ]);
    let y_new = y + slope * Complex64::from(h);
    let e5 = slope - comb(&[(&k1, BHH1), (&k9, BHH2), (&k12, BHH3)]);
    let e8 = comb(&[
        (&k1, ER1),
        (&k6, ER6),
        (&k7, ER7),
        (&k8, ER8),
        (&k9, ER9),
        (&k10, ER10),
        (&k11, ER11),
        (&k12, ER12),
    ]);
    let (mut err, mut err2) = (0.0, 0.0);
    for idx in 0..4 {
        let sk = opts.atol + opts.rtol * y[idx].norm().max(y_new[idx].norm());
        for (a, b) in [(e8[idx].re, e5[idx].re), (e8[idx].im, e5[idx].im)] {
            err += (a / sk) * (a / sk);
            err2 += (b / sk) * (b / sk);
        }
    }
    let mut deno = err + 0.01 * err2;
    if deno <= 0.0 {
        deno = 1.0;
    }
    let err = h.abs() * err * (1.0 / (8.0 * deno)).sqrt();
    (y_new, err)
}

/// Integrates `Y' = C(x) Y` from `stops[0]` with `Y = y0`, returning the
/// state at every stop. `coef(k)` gives the coefficient on interval
/// `[stops[k], stops[k+1]]`.
pub fn solve_linear<G, F>(
    stops: &[f64],
    y0: Mat2,
    coef: G,
    opts: &OdeOptions,
) -> Result<(Vec<Mat2>, OdeStats)>
where
    G: Fn(usize) -> F,
    F: Fn(f64) -> Mat2,
{
    let mut out = Vec::with_capacity(stops.len());
    let mut stats = OdeStats::default();
    let mut y = y0;
    out.push(y);
    let mut h_prev: Option<f64> = None;
    for (k, w) in stops.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            out.push(y);
            continue;
        }
        let cf = coef(k);
        // Initial step from the coefficient size.
        let scale = cf(a).iter().map(|c| c.norm()).fold(0.0, f64::max);
        let guess = 0.5 / (1.0 + scale);
        let mut h = h_prev.unwrap_or(guess).min(b - a);
        let mut x = a;
        while x < b {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(Error::Numerical(format!(
                    "step budget exhausted at x = {x}"
                )));
            }
            let last = x + h >= b || b - (x + h) < 1e-14;
            let hh = if last { b - x } else { h };
            let (y_new, err) = step(&cf, x, &y, hh, opts);
            stats.evals += 12;
            let fac = (err.powf(1.0 / 8.0) / 0.9).clamp(1.0 / 6.0, 3.0);
            if err <= 1.0 && y_new.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
                stats.accepted += 1;
                y = y_new;
                x = if last { b } else { x + hh };
                h = hh / fac;
                if !last {
                    h_prev = Some(h);
                }
            } else {
                stats.rejected += 1;
                h = hh / fac.max(1.0 / 0.9).max(1.2);
                if h < 1e-14 * (1.0 + x.abs()) {
                    return Err(Error::StepUnderflow { x, a, b });
                }
            }
        }
        out.push(y);
    }
    Ok((out, stats))
}
