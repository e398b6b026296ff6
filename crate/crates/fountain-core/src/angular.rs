//! Exact angular momentum algebra for the caesium D2 line.
//!
//! Wigner 3j and 6j symbols are evaluated through Racah's formulas with
//! big-integer rational arithmetic; the conversion to floating point happens
//! only at the return boundary. The Racah sums cancel catastrophically in
//! floating point, and several physical statements downstream (dark states,
//! branching ratios, row normalization) must hold exactly, not approximately.
//!
//! On top of the symbols sit the relative dipole strengths of the
//! 6S1/2 -> 6P3/2 transition (ground F = 3,4 to excited F' = 2..5, nuclear
//! spin 7/2) and the spontaneous-decay branching table. Strengths are
//! normalized so each ground sublevel's total over all polarizations and
//! excited levels is 1; the unnormalized row sum is exactly 1/2 for every
//! sublevel, which the table builder asserts, so the normalization is a
//! single global factor and relative rates are untouched.

use std::fmt;
use std::sync::LazyLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Angular momentum quantum number stored as twice its value, so both
/// integer and half-integer momenta are represented exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInt {
    twice: i32,
}

impl HalfInt {
    /// Builds from twice the value: `HalfInt::new(3)` is 3/2.
    pub const fn new(twice_value: i32) -> Self {
        Self { twice: twice_value }
    }

    /// Builds from a whole value: `HalfInt::from_int(3)` is 3.
    pub const fn from_int(value: i32) -> Self {
        Self { twice: 2 * value }
    }

    /// Twice the stored value.
    pub const fn twice(self) -> i32 {
        self.twice
    }

    /// Value as floating point.
    pub fn f64(self) -> f64 {
        f64::from(self.twice) / 2.0
    }

    /// Whole value if this is an integer momentum.
    pub const fn as_int(self) -> Option<i32> {
        if self.twice % 2 == 0 {
            Some(self.twice / 2)
        } else {
            None
        }
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice % 2 == 0 {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

/// Ground-manifold sublevel of Cs 6S1/2: F in {3, 4}, |m| <= F.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Sublevel {
    f: HalfInt,
    m: HalfInt,
}

/// Number of ground sublevels: 7 in F=3 plus 9 in F=4.
pub const GROUND_COUNT: usize = 16;

impl Sublevel {
    /// Builds (F, m) from whole quantum numbers; `None` unless F is 3 or 4
    /// and |m| <= F.
    pub fn new(f: i32, m: i32) -> Option<Self> {
        if (f == 3 || f == 4) && m.abs() <= f {
            Some(Self {
                f: HalfInt::from_int(f),
                m: HalfInt::from_int(m),
            })
        } else {
            None
        }
    }

    pub const fn f(self) -> HalfInt {
        self.f
    }

    pub const fn m(self) -> HalfInt {
        self.m
    }

    /// Dense index 0..16: F=3 block first (m ascending), then F=4.
    pub fn index(self) -> usize {
        let m = self.m.twice / 2;
        if self.f.twice == 6 {
            (m + 3) as usize
        } else {
            7 + (m + 4) as usize
        }
    }

    /// Inverse of [`Sublevel::index`].
    pub fn from_index(i: usize) -> Self {
        assert!(i < GROUND_COUNT, "sublevel index out of range: {i}");
        if i < 7 {
            Self::new(3, i as i32 - 3).unwrap()
        } else {
            Self::new(4, (i - 7) as i32 - 4).unwrap()
        }
    }

    /// All 16 ground sublevels in index order.
    pub fn all() -> [Self; GROUND_COUNT] {
        std::array::from_fn(Self::from_index)
    }
}

impl fmt::Display for Sublevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{}>", self.f, self.m)
    }
}

/// Excited-manifold sublevel of Cs 6P3/2: F' in {2..5}, |m'| <= F'.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ExcitedSublevel {
    f: HalfInt,
    m: HalfInt,
}

/// Number of excited sublevels: 5 + 7 + 9 + 11.
pub const EXCITED_COUNT: usize = 32;

impl ExcitedSublevel {
    /// Builds (F', m') from whole quantum numbers; `None` unless F' is in
    /// 2..=5 and |m'| <= F'.
    pub fn new(f: i32, m: i32) -> Option<Self> {
        if (2..=5).contains(&f) && m.abs() <= f {
            Some(Self {
                f: HalfInt::from_int(f),
                m: HalfInt::from_int(m),
            })
        } else {
            None
        }
    }

    pub const fn f(self) -> HalfInt {
        self.f
    }

    pub const fn m(self) -> HalfInt {
        self.m
    }

    /// Dense index 0..32: F'=2 block first (m ascending), then 3, 4, 5.
    pub fn index(self) -> usize {
        let f = self.f.twice / 2;
        let m = self.m.twice / 2;
        // Offset of block F' is sum of (2k+1) for k in 2..F'.
        let offset = match f {
            2 => 0,
            3 => 5,
            4 => 12,
            5 => 21,
            _ => unreachable!(),
        };
        offset + (m + f) as usize
    }

    /// Inverse of [`ExcitedSublevel::index`].
    pub fn from_index(i: usize) -> Self {
        assert!(i < EXCITED_COUNT, "excited index out of range: {i}");
        let (f, offset) = match i {
            0..=4 => (2, 0),
            5..=11 => (3, 5),
            12..=20 => (4, 12),
            _ => (5, 21),
        };
        Self::new(f, (i - offset) as i32 - f).unwrap()
    }

    /// All 32 excited sublevels in index order.
    pub fn all() -> [Self; EXCITED_COUNT] {
        std::array::from_fn(Self::from_index)
    }
}

impl fmt::Display for ExcitedSublevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}',{}>", self.f, self.m)
    }
}

fn factorial(n: i32) -> BigInt {
    debug_assert!(n >= 0, "factorial of negative argument");
    (1..=i64::from(n)).map(BigInt::from).product()
}

fn big_ratio(num: BigInt, den: BigInt) -> BigRational {
    BigRational::new(num, den)
}

/// Half of `t` if even, else `None`; Wigner arguments that fail integrality
/// conditions violate a selection rule and the symbol is zero.
fn half(t: i32) -> Option<i32> {
    (t % 2 == 0).then_some(t / 2)
}

fn triangle_ok(tj1: i32, tj2: i32, tj3: i32) -> bool {
    // Triangle inequality plus integer perimeter, all in twice-units.
    (tj1 + tj2 + tj3) % 2 == 0 && tj3 <= tj1 + tj2 && tj3 >= (tj1 - tj2).abs()
}

/// Triangle coefficient Delta(j1 j2 j3) as an exact rational.
fn triangle_coeff(tj1: i32, tj2: i32, tj3: i32) -> BigRational {
    let a = (tj1 + tj2 - tj3) / 2;
    let b = (tj1 - tj2 + tj3) / 2;
    let c = (-tj1 + tj2 + tj3) / 2;
    let d = (tj1 + tj2 + tj3) / 2 + 1;
    big_ratio(factorial(a) * factorial(b) * factorial(c), factorial(d))
}

/// Sign and exact square of a Wigner 3j symbol. The square carries all the
/// rational structure; the separated sign makes `sign * sqrt(square)` exact
/// up to the final floating conversion.
fn wigner3j_exact(tj1: i32, tj2: i32, tj3: i32, tm1: i32, tm2: i32, tm3: i32) -> (i8, BigRational) {
    let zero = (0, BigRational::zero());
    if tm1 + tm2 + tm3 != 0 || !triangle_ok(tj1, tj2, tj3) {
        return zero;
    }
    if tm1.abs() > tj1 || tm2.abs() > tj2 || tm3.abs() > tj3 {
        return zero;
    }
    // j + m must be an integer for each column.
    let (Some(j1m1), Some(j1p1)) = (half(tj1 - tm1), half(tj1 + tm1)) else {
        return zero;
    };
    let (Some(j2m2), Some(j2p2)) = (half(tj2 - tm2), half(tj2 + tm2)) else {
        return zero;
    };
    let (Some(j3m3), Some(j3p3)) = (half(tj3 - tm3), half(tj3 + tm3)) else {
        return zero;
    };

    let j12_3 = (tj1 + tj2 - tj3) / 2;
    let j3_2m1 = (tj3 - tj2 + tm1) / 2;
    let j3_1m2 = (tj3 - tj1 - tm2) / 2;

    let k_min = 0.max(-j3_2m1).max(-j3_1m2);
    let k_max = j12_3.min(j1m1).min(j2p2);
    if k_min > k_max {
        return zero;
    }

    let mut sum = BigRational::zero();
    for k in k_min..=k_max {
        let den = factorial(k)
            * factorial(j12_3 - k)
            * factorial(j1m1 - k)
            * factorial(j2p2 - k)
            * factorial(j3_2m1 + k)
            * factorial(j3_1m2 + k);
        let term = big_ratio(BigInt::one(), den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return zero;
    }

    let prefactor = triangle_coeff(tj1, tj2, tj3)
        * big_ratio(
            factorial(j1p1)
                * factorial(j1m1)
                * factorial(j2p2)
                * factorial(j2m2)
                * factorial(j3p3)
                * factorial(j3m3),
            BigInt::one(),
        );
    // Phase (-1)^(j1 - j2 - m3) is an integer power once selection rules hold.
    let phase_exp = (tj1 - tj2 - tm3) / 2;
    let mut sign: i8 = if phase_exp.rem_euclid(2) == 0 { 1 } else { -1 };
    if sum.is_negative() {
        sign = -sign;
    }
    (sign, prefactor * (&sum * &sum))
}

/// Sign and exact square of a Wigner 6j symbol via the single-sum Racah
/// formula over the four triads.
fn wigner6j_exact(tj1: i32, tj2: i32, tj3: i32, tj4: i32, tj5: i32, tj6: i32) -> (i8, BigRational) {
    let zero = (0, BigRational::zero());
    let triads = [
        (tj1, tj2, tj3),
        (tj1, tj5, tj6),
        (tj4, tj2, tj6),
        (tj4, tj5, tj3),
    ];
    if triads.iter().any(|&(a, b, c)| !triangle_ok(a, b, c)) {
        return zero;
    }

    let a: Vec<i32> = triads.iter().map(|&(x, y, z)| (x + y + z) / 2).collect();
    let b1 = (tj1 + tj2 + tj4 + tj5) / 2;
    let b2 = (tj2 + tj3 + tj5 + tj6) / 2;
    let b3 = (tj3 + tj1 + tj6 + tj4) / 2;

    let k_min = *a.iter().max().unwrap();
    let k_max = b1.min(b2).min(b3);
    if k_min > k_max {
        return zero;
    }

    let mut sum = BigRational::zero();
    for k in k_min..=k_max {
        let den = factorial(k - a[0])
            * factorial(k - a[1])
            * factorial(k - a[2])
            * factorial(k - a[3])
            * factorial(b1 - k)
            * factorial(b2 - k)
            * factorial(b3 - k);
        let term = big_ratio(factorial(k + 1), den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return zero;
    }

    let delta = triads
        .iter()
        .map(|&(x, y, z)| triangle_coeff(x, y, z))
        .product::<BigRational>();
    let sign: i8 = if sum.is_negative() { -1 } else { 1 };
    (sign, delta * (&sum * &sum))
}

fn signed_sqrt(sign: i8, square: BigRational) -> f64 {
    match sign {
        0 => 0.0,
        s => f64::from(s) * square.to_f64().expect("rational fits in f64").sqrt(),
    }
}

/// Wigner 3j symbol (j1 j2 j3; m1 m2 m3). Selection-rule failures
/// (triangle, m-sum, |m| > j, non-integer j+m) return 0 rather than error.
pub fn wigner3j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    m1: HalfInt,
    m2: HalfInt,
    m3: HalfInt,
) -> f64 {
    let (sign, square) = wigner3j_exact(j1.twice, j2.twice, j3.twice, m1.twice, m2.twice, m3.twice);
    signed_sqrt(sign, square)
}

/// Wigner 6j symbol {j1 j2 j3; j4 j5 j6}. Any triad violating the triangle
/// rules returns 0.
pub fn wigner6j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    j4: HalfInt,
    j5: HalfInt,
    j6: HalfInt,
) -> f64 {
    let (sign, square) = wigner6j_exact(j1.twice, j2.twice, j3.twice, j4.twice, j5.twice, j6.twice);
    signed_sqrt(sign, square)
}

// Twice-values of the fixed D2 angular momenta: J = 1/2, J' = 3/2, I = 7/2.
const TJ_GROUND: i32 = 1;
const TJ_EXCITED: i32 = 3;
const TI_NUCLEAR: i32 = 7;

/// Exact squared Zeeman weight |<F' m'|d_q|F m>|^2 between specific
/// sublevels, with the polarization index fixed by q = m' - m. The same
/// expression serves absorption and emission: the 3j symmetry relations
/// make it invariant under exchanging which level is the bra.
fn zeeman_weight_sq(tfp: i32, tmp: i32, tf: i32, tm: i32) -> BigRational {
    let (_, square) = wigner3j_exact(tfp, 2, tf, -tmp, tmp - tm, tm);
    square
}

/// Exact squared 6j factor {J J' 1; F' F I} shared by every strength and
/// branching entry of the line.
fn hyperfine_sixj_sq(tfp: i32, tf: i32) -> BigRational {
    let (_, square) = wigner6j_exact(TJ_GROUND, TJ_EXCITED, 2, tfp, tf, TI_NUCLEAR);
    square
}

struct Tables {
    /// Normalized strength by [ground index][q + 1][F' - 2]; the excited m'
    /// is implicitly m + q.
    strength: [[[f64; 4]; 3]; GROUND_COUNT],
    /// Spontaneous-decay distribution over ground sublevels per excited
    /// sublevel; each row sums to 1 exactly in the rational build.
    decay: [[f64; GROUND_COUNT]; EXCITED_COUNT],
    /// Branching by [F' - 2][F - 3].
    branching: [[f64; 2]; 4],
}

fn rational_int(n: i32) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

static TABLES: LazyLock<Tables> = LazyLock::new(|| {
    let half_rational = big_ratio(BigInt::one(), BigInt::from(2));

    let mut strength = [[[0.0; 4]; 3]; GROUND_COUNT];
    for g in Sublevel::all() {
        let tf = g.f().twice();
        let tm = g.m().twice();
        let mut row_sum = BigRational::zero();
        let mut row = vec![vec![BigRational::zero(); 4]; 3];
        for (qi, tq) in [(0usize, -2i32), (1, 0), (2, 2)] {
            for fp in 2..=5i32 {
                let tfp = 2 * fp;
                let tmp = tm + tq;
                if tmp.abs() > tfp {
                    continue;
                }
                let s = rational_int(fp * 2 + 1)
                    * rational_int(tf + 1)
                    * hyperfine_sixj_sq(tfp, tf)
                    * zeeman_weight_sq(tfp, tmp, tf, tm);
                row_sum += &s;
                row[qi][(fp - 2) as usize] = s;
            }
        }
        // Sum rule: every ground sublevel couples with total raw strength
        // exactly 1/2, so row normalization is one global factor of 2.
        assert_eq!(row_sum, half_rational, "strength row sum for {g}");
        for qi in 0..3 {
            for fpi in 0..4 {
                strength[g.index()][qi][fpi] = (&row[qi][fpi] / &row_sum).to_f64().unwrap();
            }
        }
    }

    let mut branching = [[0.0; 2]; 4];
    let mut branching_exact = Vec::with_capacity(4);
    for fp in 2..=5i32 {
        let tfp = 2 * fp;
        let w3 = rational_int(7) * hyperfine_sixj_sq(tfp, 6);
        let w4 = rational_int(9) * hyperfine_sixj_sq(tfp, 8);
        let total = &w3 + &w4;
        let b3 = &w3 / &total;
        let b4 = &w4 / &total;
        branching[(fp - 2) as usize] = [b3.to_f64().unwrap(), b4.to_f64().unwrap()];
        branching_exact.push([b3, b4]);
    }

    let mut decay = [[0.0; GROUND_COUNT]; EXCITED_COUNT];
    for e in ExcitedSublevel::all() {
        let tfp = e.f().twice();
        let tmp = e.m().twice();
        let fp_idx = (tfp / 2 - 2) as usize;
        let mut row_sum = BigRational::zero();
        let mut row: Vec<BigRational> = vec![BigRational::zero(); GROUND_COUNT];
        for g in Sublevel::all() {
            let tf = g.f().twice();
            let tm = g.m().twice();
            if (tmp - tm).abs() > 2 {
                continue;
            }
            let b = &branching_exact[fp_idx][(tf / 2 - 3) as usize];
            // (2F'+1) restores the m-summed emission weights to a unit
            // total within each ground hyperfine level.
            let w = b * rational_int(tfp + 1) * zeeman_weight_sq(tfp, tmp, tf, tm);
            row_sum += &w;
            row[g.index()] = w;
        }
        assert_eq!(row_sum, BigRational::one(), "decay row sum for {e}");
        for (i, w) in row.into_iter().enumerate() {
            decay[e.index()][i] = w.to_f64().unwrap();
        }
    }

    Tables {
        strength,
        decay,
        branching,
    }
});

/// Relative dipole strength S(g, q, e) of the D2 transition g -> e driven
/// with polarization q in {-1, 0, +1} (sigma-, pi, sigma+). Normalized so
/// the sum over all (q, e) for a fixed ground sublevel is 1. Zero whenever
/// e.m != g.m + q or the angular factors vanish.
pub fn dipole_strength(g: Sublevel, q: i32, e: ExcitedSublevel) -> f64 {
    assert!(
        (-1..=1).contains(&q),
        "polarization index must be -1, 0, or +1"
    );
    if e.m().twice() != g.m().twice() + 2 * q {
        return 0.0;
    }
    let fp_idx = (e.f().twice() / 2 - 2) as usize;
    TABLES.strength[g.index()][(q + 1) as usize][fp_idx]
}

/// Probability that spontaneous decay from excited sublevel `e` lands in
/// ground hyperfine level `f_ground` (3 or 4). Independent of e.m; the two
/// fractions sum to 1.
pub fn branching_fraction(e: ExcitedSublevel, f_ground: HalfInt) -> f64 {
    let f = f_ground.as_int().expect("ground F is a whole number");
    assert!(f == 3 || f == 4, "ground hyperfine level must be 3 or 4");
    TABLES.branching[(e.f().twice() / 2 - 2) as usize][(f - 3) as usize]
}

/// Spontaneous-decay distribution from `e` over the 16 ground sublevels,
/// indexed by [`Sublevel::index`]. Entries sum to 1.
pub fn decay_distribution(e: ExcitedSublevel) -> &'static [f64; GROUND_COUNT] {
    &TABLES.decay[e.index()]
}

/// One row of the strength table: ground sublevel, polarization, excited
/// sublevel reached, and the normalized strength (possibly zero).
#[derive(Clone, Copy, Debug)]
pub struct StrengthRow {
    pub ground: Sublevel,
    pub q: i32,
    pub excited: ExcitedSublevel,
    pub strength: f64,
}

/// Iterates every geometrically allowed channel (m' = m + q within the
/// excited manifold), including channels whose strength is exactly zero.
pub fn strength_table() -> Vec<StrengthRow> {
    let mut rows = Vec::new();
    for g in Sublevel::all() {
        for q in [-1i32, 0, 1] {
            for fp in 2..=5 {
                let m = g.m().twice() / 2;
                if let Some(e) = ExcitedSublevel::new(fp, m + q) {
                    rows.push(StrengthRow {
                        ground: g,
                        q,
                        excited: e,
                        strength: dipole_strength(g, q, e),
                    });
                }
            }
        }
    }
    rows
}
