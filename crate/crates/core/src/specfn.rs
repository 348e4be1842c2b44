//! Log-gamma, digamma and trigamma on the positive reals.
//!
//! All three shift small arguments upward with the functional recurrence and
//! then apply the Stirling-type asymptotic expansion. Log-gamma additionally
//! uses a zeta-series around its zeros at 1 and 2 so that relative accuracy
//! holds there too.

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Arguments below this are shifted up before the asymptotic series is used.
const ASYMPTOTIC_FROM: f64 = 10.0;

/// B_{2n} / (2n (2n-1)) for n = 1..8.
const LGAMMA_ASYMP: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// B_{2n} / (2n) for n = 1..7.
const DIGAMMA_ASYMP: [f64; 7] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32_760.0,
    1.0 / 12.0,
];

/// B_{2n} for n = 1..7.
const TRIGAMMA_ASYMP: [f64; 7] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
];

/// zeta(n) - 1 for n = 2..25.
#[allow(clippy::excessive_precision)]
const ZETA_MINUS_ONE: [f64; 24] = [
    0.644_934_066_848_226_436_47,
    0.202_056_903_159_594_285_4,
    0.082_323_233_711_138_191_516,
    0.036_927_755_143_369_926_331,
    0.017_343_061_984_449_139_715,
    0.008_349_277_381_922_826_839_8,
    0.004_077_356_197_944_339_378_7,
    0.002_008_392_826_082_214_417_9,
    0.000_994_575_127_818_085_337_15,
    0.000_494_188_604_119_464_558_7,
    0.000_246_086_553_308_048_298_64,
    0.000_122_713_347_578_489_146_75,
    0.000_061_248_135_058_704_829_259,
    0.000_030_588_236_307_020_493_552,
    0.000_015_282_259_408_651_871_733,
    0.000_007_637_197_637_899_762_273_6,
    0.000_003_817_293_264_999_839_856_5,
    0.000_001_908_212_716_553_938_925_7,
    0.000_000_953_962_033_872_796_113_15,
    0.000_000_476_932_986_787_806_463_12,
    0.000_000_238_450_502_727_732_99,
    0.000_000_119_219_925_965_311_073_07,
    0.000_000_059_608_189_051_259_479_612,
    0.000_000_029_803_503_514_652_280_186,
];

fn check_domain(function: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            function,
            value: x,
            expected: "finite x > 0",
        })
    }
}

/// ln Γ(x) for x > 0.
pub fn lgamma(x: f64) -> Result<f64> {
    check_domain("lgamma", x)?;
    Ok(lgamma_unchecked(x))
}

/// ψ(x) = d/dx ln Γ(x) for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    check_domain("digamma", x)?;
    Ok(digamma_unchecked(x))
}

/// ψ₁(x) = dψ/dx for x > 0.
pub fn trigamma(x: f64) -> Result<f64> {
    check_domain("trigamma", x)?;
    Ok(trigamma_unchecked(x))
}

fn lgamma_unchecked(x: f64) -> f64 {
    if (x - 1.0).abs() < 0.25 {
        let eps = x - 1.0;
        return -eps.ln_1p() + lgamma_near_one_tail(eps);
    }
    if (x - 2.0).abs() < 0.25 {
        // ln Γ(2+ε) = ln(1+ε) + ln Γ(1+ε); the ln(1+ε) terms cancel.
        return lgamma_near_one_tail(x - 2.0);
    }

    let mut z = x;
    let mut prod = 1.0;
    while z < ASYMPTOTIC_FROM {
        prod *= z;
        z += 1.0;
    }
    stirling_lgamma(z) - prod.ln()
}

/// ε(1-γ) + Σ_{n≥2} (-1)^n (ζ(n)-1) εⁿ / n, i.e. ln Γ(1+ε) + ln(1+ε).
fn lgamma_near_one_tail(eps: f64) -> f64 {
    let mut acc = 0.0;
    for (i, c) in ZETA_MINUS_ONE.iter().enumerate().rev() {
        let n = (i + 2) as f64;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        acc = acc * eps + sign * c / n;
    }
    eps * (1.0 - EULER_GAMMA) + acc * eps * eps
}

fn stirling_lgamma(z: f64) -> f64 {
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut series = 0.0;
    for c in LGAMMA_ASYMP.iter().rev() {
        series = series * inv2 + c;
    }
    (z - 0.5) * z.ln() - z + HALF_LN_2PI + series * inv
}

fn digamma_unchecked(x: f64) -> f64 {
    let mut z = x;
    let mut shift = 0.0;
    while z < ASYMPTOTIC_FROM {
        shift -= 1.0 / z;
        z += 1.0;
    }
    let inv2 = 1.0 / (z * z);
    let mut series = 0.0;
    for c in DIGAMMA_ASYMP.iter().rev() {
        series = series * inv2 + c;
    }
    shift + z.ln() - 0.5 / z - series * inv2
}

fn trigamma_unchecked(x: f64) -> f64 {
    let mut z = x;
    let mut shift = 0.0;
    while z < ASYMPTOTIC_FROM {
        shift += 1.0 / (z * z);
        z += 1.0;
    }
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut series = 0.0;
    for c in TRIGAMMA_ASYMP.iter().rev() {
        series = series * inv2 + c;
    }
    shift + inv + 0.5 * inv2 + series * inv2 * inv
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// (x, ln Γ(x), ψ(x), ψ₁(x)) evaluated at 40 significant digits with mpmath.
    const MPMATH: [(f64, f64, f64, f64); 30] = [
        (1e-6, 13.815509980749432, -1000000.57721402, 1000000000001.645),
        (1e-4, 9.2102826586339622, -10000.577051183514, 100000001.64469368),
        (0.001, 6.9071788853838537, -1000.5755719318103, 1000001.6425331958),
        (0.01, 4.5994798780420217, -100.56088545786867, 10001.621213528313),
        (0.1, 2.2527126517342059, -10.423754940411076, 101.43329915079275),
        (0.3, 1.0957979948180756, -3.5025242222001331, 12.245364546107731),
        (0.5, 0.57236494292470009, -1.9635100260214235, 4.9348022005446793),
        (0.75, 0.20328095143129537, -1.0858608797864722, 2.5418796476716065),
        (0.9, 0.066376239734742954, -0.75492694994705135, 1.9225399594772034),
        (0.99, 0.0058548067647097815, -0.59378630405559516, 1.6693041010718245),
        (1.001, -0.00057639359828330615, -0.57557193181030065, 1.6425331958689783),
        (1.1, -0.049872441259839762, -0.42375494041107667, 1.4332991507927587),
        (1.25, -0.098271836421813161, -0.22745353337626541, 1.1973291545071107),
        (1.5, -0.12078223763524522, 0.036489973978576521, 0.93480220054467931),
        (1.75, -0.084401121020485556, 0.24747245354686116, 0.76410186989382872),
        (1.99, -0.0041955290887916687, 0.41631470604541495, 0.64900005046474361),
        (2.01, 0.0042600229070983458, 0.42921355203231546, 0.64091747890629932),
        (2.3, 0.15418945495963047, 0.60003988036396948, 0.54253745866525846),
        (2.9, 0.60286961024931137, 0.88249995063774389, 0.41096374799332815),
        (3.5, 1.2009736023470742, 1.1031566406452432, 0.33035775610023486),
        (5.5, 3.9578139676187163, 1.6110931485817511, 0.19934238698962766),
        (7.25, 7.0521854507385394, 1.910453526883736, 0.14787923315893217),
        (9.99, 12.779315214350193, 2.2507003728312011, 0.10527695014824178),
        (10.0, 12.80182748008147, 2.2517525890667211, 0.10516633568168575),
        (12.5, 18.734347511936446, 2.485195651274912, 0.08328522460157837),
        (33.3, 82.603723581654943, 3.4904672385202428, 0.030485444095338888),
        (100.0, 359.1342053695754, 4.6001618527380874, 0.010050166663333571),
        (1234.5, 7550.5509010778949, 7.1180162318279978, 0.00081037272712696665),
        (1e5, 1051287.7089736569, 11.512920464961895, 1.0000050000166667e-5),
        (1e6, 12815504.569147612, 13.815510057964191, 1.0000005000001667e-6),
    ];

    #[test]
    fn lgamma_matches_high_precision_table() {
        for &(x, want, _, _) in &MPMATH {
            let got = lgamma(x).unwrap();
            let rel = ((got - want) / want).abs();
            assert!(rel <= 1e-12, "lgamma({x}) = {got}, want {want}, rel {rel:e}");
        }
    }

    #[test]
    fn digamma_matches_high_precision_table() {
        for &(x, _, want, _) in MPMATH.iter().filter(|r| r.0 >= 1e-4) {
            let got = digamma(x).unwrap();
            assert!((got - want).abs() <= 1e-10, "digamma({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn trigamma_matches_high_precision_table() {
        for &(x, _, _, want) in MPMATH.iter().filter(|r| r.0 >= 1e-4) {
            let got = trigamma(x).unwrap();
            assert!((got - want).abs() <= 1e-8, "trigamma({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn named_values() {
        assert_eq!(lgamma(1.0).unwrap(), 0.0);
        assert_eq!(lgamma(2.0).unwrap(), 0.0);
        assert!((lgamma(0.5).unwrap() - 0.572_364_942_924_700_08).abs() < 1e-13);

        assert!((digamma(1.0).unwrap() + 0.577_215_664_901_532_86).abs() < 1e-14);
        assert!((digamma(2.0).unwrap() - 0.422_784_335_098_467_14).abs() < 1e-14);
        assert!((digamma(0.5).unwrap() + 1.963_510_026_021_423_48).abs() < 1e-14);

        assert!((trigamma(1.0).unwrap() - 1.644_934_066_848_226_44).abs() < 1e-13);
        assert!((trigamma(2.0).unwrap() - 0.644_934_066_848_226_44).abs() < 1e-13);
        assert!((trigamma(0.5).unwrap() - 4.934_802_200_544_679_31).abs() < 1e-13);
    }

    #[test]
    fn rejects_non_positive_and_non_finite() {
        for bad in [0.0, -1.0, -0.5, f64::NAN, f64::INFINITY, f64::NEG_INFINITY] {
            assert!(matches!(lgamma(bad), Err(Error::Domain { .. })));
            assert!(matches!(digamma(bad), Err(Error::Domain { .. })));
            assert!(matches!(trigamma(bad), Err(Error::Domain { .. })));
        }
    }

    #[test]
    fn lgamma_agrees_with_lanczos_on_a_grid() {
        // statrs uses a Lanczos approximation, an independent route.
        let mut x = 0.013;
        while x < 2.0e3 {
            let want = statrs::function::gamma::ln_gamma(x);
            let got = lgamma(x).unwrap();
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0), "x={x}");
            x *= 1.37;
        }
    }

    #[test]
    fn central_difference_of_lgamma_is_digamma() {
        let h = 1e-5;
        let mut x = 0.5;
        while x <= 50.0 {
            let fd = (lgamma(x + h).unwrap() - lgamma(x - h).unwrap()) / (2.0 * h);
            assert!((fd - digamma(x).unwrap()).abs() <= 1e-6, "x={x}");
            x += 0.25;
        }
    }

    #[test]
    fn digamma_increasing_trigamma_positive() {
        let grid: Vec<f64> = (1..=4000).map(|i| i as f64 * 0.025).collect();
        for w in grid.windows(2) {
            assert!(digamma(w[1]).unwrap() > digamma(w[0]).unwrap());
        }
        assert!(grid.iter().all(|&x| trigamma(x).unwrap() > 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn digamma_recurrence(x in 0.01f64..100.0) {
            let lhs = digamma(x + 1.0).unwrap() - digamma(x).unwrap() - 1.0 / x;
            prop_assert!(lhs.abs() <= 1e-10);
        }

        #[test]
        fn trigamma_recurrence(x in 0.01f64..100.0) {
            let lhs = trigamma(x + 1.0).unwrap() - trigamma(x).unwrap() + 1.0 / (x * x);
            prop_assert!(lhs.abs() <= 1e-8);
        }

        #[test]
        fn lgamma_recurrence(x in 1e-3f64..1e3) {
            // ln Γ(x+1) = ln Γ(x) + ln x
            let lhs = lgamma(x + 1.0).unwrap();
            let rhs = lgamma(x).unwrap() + x.ln();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }
    }
}
