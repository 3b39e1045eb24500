//! The eighteen base test functions on their native domains.

use std::f64::consts::PI;

use super::BaseFunction;

pub fn beale(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    (1.5 - a + a * b).powi(2) + (2.25 - a + a * b * b).powi(2) + (2.625 - a + a * b.powi(3)).powi(2)
}

pub fn branin(x: &[f64]) -> f64 {
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let t = 1.0 / (8.0 * PI);
    (x[1] - b * x[0] * x[0] + c * x[0] - 6.0).powi(2) + 10.0 * (1.0 - t) * x[0].cos() + 10.0
}

pub fn brent(x: &[f64]) -> f64 {
    (x[0] + 10.0).powi(2) + (x[1] + 10.0).powi(2) + (-x[0] * x[0] - x[1] * x[1]).exp()
}

pub fn easom(x: &[f64]) -> f64 {
    -x[0].cos() * x[1].cos() * (-((x[0] - PI).powi(2) + (x[1] - PI).powi(2))).exp()
}

pub fn goldstein_price(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    let p = 1.0
        + (a + b + 1.0).powi(2) * (19.0 - 14.0 * a + 3.0 * a * a - 14.0 * b + 6.0 * a * b + 3.0 * b * b);
    let q = 30.0
        + (2.0 * a - 3.0 * b).powi(2)
            * (18.0 - 32.0 * a + 12.0 * a * a + 48.0 * b - 36.0 * a * b + 27.0 * b * b);
    p * q
}

const HARTMANN_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];

const HARTMANN3_A: [[f64; 3]; 4] = [
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
    [3.0, 10.0, 30.0],
    [0.1, 10.0, 35.0],
];

const HARTMANN3_P: [[f64; 3]; 4] = [
    [0.3689, 0.1170, 0.2673],
    [0.4699, 0.4387, 0.7470],
    [0.1091, 0.8732, 0.5547],
    [0.0381, 0.5743, 0.8828],
];

const HARTMANN6_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];

const HARTMANN6_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];

fn hartmann<const N: usize>(x: &[f64], a: &[[f64; N]; 4], p: &[[f64; N]; 4]) -> f64 {
    -(0..4)
        .map(|i| {
            let inner: f64 = (0..N).map(|j| a[i][j] * (x[j] - p[i][j]).powi(2)).sum();
            HARTMANN_ALPHA[i] * (-inner).exp()
        })
        .sum::<f64>()
}

pub fn hartmann3(x: &[f64]) -> f64 {
    hartmann(x, &HARTMANN3_A, &HARTMANN3_P)
}

pub fn hartmann6(x: &[f64]) -> f64 {
    hartmann(x, &HARTMANN6_A, &HARTMANN6_P)
}

pub fn levy(x: &[f64]) -> f64 {
    let w: Vec<f64> = x.iter().map(|v| 1.0 + (v - 1.0) / 4.0).collect();
    let n = w.len();
    let head = (PI * w[0]).sin().powi(2);
    let body: f64 = w[..n - 1]
        .iter()
        .map(|wi| (wi - 1.0).powi(2) * (1.0 + 10.0 * (PI * wi + 1.0).sin().powi(2)))
        .sum();
    let tail = (w[n - 1] - 1.0).powi(2) * (1.0 + (2.0 * PI * w[n - 1]).sin().powi(2));
    head + body + tail
}

/// Perm function `d, β` with `β = 0.5`.
pub fn perm(x: &[f64]) -> f64 {
    const BETA: f64 = 0.5;
    let n = x.len();
    (1..=n)
        .map(|i| {
            let inner: f64 = (1..=n)
                .map(|j| {
                    let jf = j as f64;
                    (jf.powi(i as i32) + BETA) * ((x[j - 1] / jf).powi(i as i32) - 1.0)
                })
                .sum();
            inner * inner
        })
        .sum()
}

pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (w[0] - 1.0).powi(2))
        .sum()
}

const SHEKEL_C: [[f64; 4]; 10] = [
    [4.0, 4.0, 4.0, 4.0],
    [1.0, 1.0, 1.0, 1.0],
    [8.0, 8.0, 8.0, 8.0],
    [6.0, 6.0, 6.0, 6.0],
    [3.0, 7.0, 3.0, 7.0],
    [2.0, 9.0, 2.0, 9.0],
    [5.0, 3.0, 5.0, 3.0],
    [8.0, 1.0, 8.0, 1.0],
    [6.0, 2.0, 6.0, 2.0],
    [7.0, 3.6, 7.0, 3.6],
];

const SHEKEL_BETA: [f64; 10] = [0.1, 0.2, 0.2, 0.4, 0.4, 0.6, 0.3, 0.7, 0.5, 0.5];

pub fn shekel(x: &[f64], m: usize) -> f64 {
    -SHEKEL_C[..m]
        .iter()
        .zip(&SHEKEL_BETA)
        .map(|(c, b)| {
            let d: f64 = c.iter().zip(x).map(|(ci, xi)| (xi - ci).powi(2)).sum();
            1.0 / (d + b)
        })
        .sum::<f64>()
}

pub fn shubert(x: &[f64]) -> f64 {
    x.iter()
        .map(|&xi| (1..=5).map(|j| j as f64 * ((j as f64 + 1.0) * xi + j as f64).cos()).sum::<f64>())
        .product()
}

pub fn six_hump_camel(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    (4.0 - 2.1 * a * a + a.powi(4) / 3.0) * a * a + a * b + (-4.0 + 4.0 * b * b) * b * b
}

pub fn styblinski_tang(x: &[f64]) -> f64 {
    0.5 * x.iter().map(|v| v.powi(4) - 16.0 * v * v + 5.0 * v).sum::<f64>()
}

pub fn trid(x: &[f64]) -> f64 {
    let squares: f64 = x.iter().map(|v| (v - 1.0).powi(2)).sum();
    let cross: f64 = x.windows(2).map(|w| w[0] * w[1]).sum();
    squares - cross
}

pub fn zettl(x: &[f64]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] - 2.0 * x[0]).powi(2) + 0.25 * x[0]
}

const STYBLINSKI_TANG_ROOT: f64 = -2.903_534_027_771_177;

fn cube(lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    (vec![lo; n], vec![hi; n])
}

/// All eighteen functions in alphabetical order.
pub fn all() -> Vec<BaseFunction> {
    let mut out = Vec::with_capacity(18);
    let (lo, hi) = cube(-4.5, 4.5, 2);
    out.push(BaseFunction::new("Beale", lo, hi, 0.0, vec![vec![3.0, 0.5]], beale));
    out.push(BaseFunction::new(
        "Branin",
        vec![-5.0, 0.0],
        vec![10.0, 15.0],
        0.397_887_357_729_738_3,
        vec![vec![-PI, 12.275], vec![PI, 2.275], vec![3.0 * PI, 2.475]],
        branin,
    ));
    let (lo, hi) = cube(-10.0, 10.0, 2);
    out.push(BaseFunction::new("Brent", lo, hi, (-200.0f64).exp(), vec![vec![-10.0, -10.0]], brent));
    let (lo, hi) = cube(-100.0, 100.0, 2);
    out.push(BaseFunction::new("Easom", lo, hi, -1.0, vec![vec![PI, PI]], easom));
    let (lo, hi) = cube(-2.0, 2.0, 2);
    out.push(BaseFunction::new("Goldstein-Price", lo, hi, 3.0, vec![vec![0.0, -1.0]], goldstein_price));
    let (lo, hi) = cube(0.0, 1.0, 3);
    out.push(BaseFunction::new(
        "Hartmann 3",
        lo,
        hi,
        -3.862_779_787_332_663,
        vec![vec![0.114_588_869_085_410_62, 0.555_648_892_832_236_7, 0.852_546_985_428_261_1]],
        hartmann3,
    ));
    let (lo, hi) = cube(0.0, 1.0, 6);
    out.push(BaseFunction::new(
        "Hartmann 6",
        lo,
        hi,
        -3.322_368_011_415_514_7,
        vec![vec![
            0.201_689_509_093_657_46,
            0.150_010_693_541_113_74,
            0.476_873_972_925_099_8,
            0.275_332_427_522_078_2,
            0.311_651_617_239_568_6,
            0.657_300_534_553_670_2,
        ]],
        hartmann6,
    ));
    let (lo, hi) = cube(-10.0, 10.0, 6);
    out.push(BaseFunction::new("Levy", lo, hi, 0.0, vec![vec![1.0; 6]], levy));
    let (lo, hi) = cube(-4.0, 4.0, 4);
    out.push(BaseFunction::new("Perm 4 0.5", lo, hi, 0.0, vec![vec![1.0, 2.0, 3.0, 4.0]], perm));
    let (lo, hi) = cube(-5.0, 10.0, 7);
    out.push(BaseFunction::new("Rosenbrock", lo, hi, 0.0, vec![vec![1.0; 7]], rosenbrock));
    let shekel_minimizers = [
        (5, -10.153_199_679_058_229, [4.000_037_152_376_549, 4.000_133_278_657_566, 4.000_037_151_057_555, 4.000_133_277_090_425]),
        (7, -10.402_915_336_777_745, [4.000_572_818_167_059, 3.999_606_207_067_230_5, 4.000_572_821_117_356, 3.999_606_210_400_273]),
        (10, -10.536_443_153_483_53, [4.000_746_867_869_747, 3.999_509_485_057_627_6, 4.000_746_868_809_279, 3.999_509_480_017_675]),
    ];
    for (m, f_star, x) in shekel_minimizers {
        let (lo, hi) = cube(0.0, 10.0, 4);
        out.push(BaseFunction::new(
            &format!("Shekel {m}"),
            lo,
            hi,
            f_star,
            vec![x.to_vec()],
            move |v: &[f64]| shekel(v, m),
        ));
    }
    let (lo, hi) = cube(-10.0, 10.0, 2);
    out.push(BaseFunction::new(
        "Shubert",
        lo,
        hi,
        -186.730_908_831_023_92,
        vec![vec![-7.083_506_409_397_382, 4.858_056_877_022_195]],
        shubert,
    ));
    out.push(BaseFunction::new(
        "Six-hump camel",
        vec![-3.0, -2.0],
        vec![3.0, 2.0],
        -1.031_628_453_489_877_4,
        vec![
            vec![0.089_842_008_935_272_33, -0.712_656_403_019_058],
            vec![-0.089_842_008_935_272_33, 0.712_656_403_019_058],
        ],
        six_hump_camel,
    ));
    let (lo, hi) = cube(-5.0, 5.0, 8);
    out.push(BaseFunction::new(
        "Styblinski-Tang",
        lo,
        hi,
        -313.329_325_630_171_3,
        vec![vec![STYBLINSKI_TANG_ROOT; 8]],
        styblinski_tang,
    ));
    let (lo, hi) = cube(-25.0, 25.0, 5);
    out.push(BaseFunction::new("Trid", lo, hi, -30.0, vec![vec![5.0, 8.0, 9.0, 8.0, 5.0]], trid));
    let (lo, hi) = cube(-5.0, 5.0, 2);
    out.push(BaseFunction::new(
        "Zettl",
        lo,
        hi,
        -0.003_791_237_220_468_898,
        vec![vec![-0.029_895_985_207_942_802, 0.0]],
        zettl,
    ));
    out
}
