use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::linalg::CMatrix;
use crate::{Error, Result};

/// Largest supported register. Probability tables grow as `6^n`.
pub const MAX_QUBITS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dimensions {
    pub n: usize,
    pub d: usize,
    pub num_settings: usize,
    pub num_outcomes: usize,
}

impl Dimensions {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::config(format!(
                "qubit count must be in 1..={MAX_QUBITS}, got {n}"
            )));
        }
        Ok(Dimensions {
            n,
            d: 1 << n,
            num_settings: 3usize.pow(n as u32),
            num_outcomes: 1 << n,
        })
    }

    /// Dimensions for a Hilbert space of size `d`, which must be a power of two.
    pub fn from_hilbert_dim(d: usize) -> Result<Self> {
        if d < 2 || !d.is_power_of_two() {
            return Err(Error::dim(format!("Hilbert dimension {d} is not 2^n with n >= 1")));
        }
        Self::new(d.trailing_zeros() as usize)
    }

    /// N = m * 3^n, the total number of recorded shots.
    pub fn quantum_sample_size(&self, shots_per_setting: u64) -> u64 {
        shots_per_setting * self.num_settings as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        match self {
            Axis::X => 'x',
            Axis::Y => 'y',
            Axis::Z => 'z',
        }
    }

    /// `U_a^†`, mapping computational amplitudes to eigenbasis amplitudes
    /// (`+1` first). `None` for Z, where it is the identity.
    pub(crate) fn basis_change_adjoint(self) -> Option<[[Complex64; 2]; 2]> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let r = |v: f64| Complex64::new(v * h, 0.0);
        let i = |v: f64| Complex64::new(0.0, v * h);
        match self {
            Axis::X => Some([[r(1.0), r(1.0)], [r(1.0), r(-1.0)]]),
            Axis::Y => Some([[r(1.0), i(-1.0)], [r(1.0), i(1.0)]]),
            Axis::Z => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// One measurement setting: a Pauli axis per qubit, qubit 1 first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Setting(pub Vec<Axis>);

impl Setting {
    pub fn from_index(n: usize, mut index: usize) -> Self {
        let mut axes = vec![Axis::X; n];
        for slot in axes.iter_mut().rev() {
            *slot = Axis::ALL[index % 3];
            index /= 3;
        }
        Setting(axes)
    }

    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, a| acc * 3 + a.index())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|a| write!(f, "{}", a.letter()))
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c.to_ascii_lowercase() {
                'x' => Ok(Axis::X),
                'y' => Ok(Axis::Y),
                'z' => Ok(Axis::Z),
                _ => Err(Error::parse(format!("bad setting letter {c:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Setting)
    }
}

/// One measurement record: a sign per qubit, qubit 1 first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Outcome(pub Vec<Sign>);

impl Outcome {
    pub fn from_index(n: usize, index: usize) -> Self {
        Outcome(
            (0..n)
                .map(|q| {
                    if index >> (n - 1 - q) & 1 == 0 {
                        Sign::Plus
                    } else {
                        Sign::Minus
                    }
                })
                .collect(),
        )
    }

    pub fn index(&self) -> usize {
        self.0
            .iter()
            .fold(0, |acc, s| (acc << 1) | usize::from(*s == Sign::Minus))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|s| write!(f, "{}", s.symbol()))
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '+' => Ok(Sign::Plus),
                '-' => Ok(Sign::Minus),
                _ => Err(Error::parse(format!("bad outcome symbol {c:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Outcome)
    }
}

/// All `3^n` settings in canonical order.
pub fn settings(n: usize) -> impl Iterator<Item = Setting> {
    (0..3usize.pow(n as u32)).map(move |i| Setting::from_index(n, i))
}

/// All `2^n` outcomes in canonical order.
pub fn outcomes(n: usize) -> impl Iterator<Item = Outcome> {
    (0..1usize << n).map(move |i| Outcome::from_index(n, i))
}

/// Projector onto the `sign` eigenvector of the Pauli matrix along `axis`.
pub fn pauli_factor_projector(axis: Axis, sign: Sign) -> Matrix2<Complex64> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let s = f64::from(sign.value());
    match axis {
        Axis::X => Matrix2::new(c(0.5, 0.0), c(0.5 * s, 0.0), c(0.5 * s, 0.0), c(0.5, 0.0)),
        Axis::Y => Matrix2::new(c(0.5, 0.0), c(0.0, -0.5 * s), c(0.0, 0.5 * s), c(0.5, 0.0)),
        Axis::Z => match sign {
            Sign::Plus => Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)),
            Sign::Minus => Matrix2::new(c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)),
        },
    }
}

/// Explicit `d x d` projector `P^a_s = P^{a_1}_{s_1} ⊗ ... ⊗ P^{a_n}_{s_n}`.
///
/// Reference implementation only; the probability code never builds these.
pub fn setting_projector(a: &Setting, s: &Outcome) -> Result<CMatrix> {
    if a.len() != s.len() || a.is_empty() {
        return Err(Error::dim(format!(
            "setting has {} qubits, outcome has {}",
            a.len(),
            s.len()
        )));
    }
    let mut acc = CMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    for (&axis, &sign) in a.0.iter().zip(&s.0) {
        let f = pauli_factor_projector(axis, sign);
        let f = CMatrix::from_iterator(2, 2, f.iter().copied());
        acc = acc.kronecker(&f);
    }
    Ok(acc)
}
