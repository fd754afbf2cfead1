//! Symmetric tridiagonal matrices: the classical test families and a
//! plain-text file format.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::dense::Mat;
use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix stored by its diagonal `a` and off-diagonal `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::InvalidOrder {
                n: 0,
                reason: "order must be positive",
            });
        }
        if b.len() + 1 != a.len() {
            return Err(Error::shape(
                format!("{} off-diagonal entries", a.len() - 1),
                b.len(),
            ));
        }
        if !a.iter().chain(&b).all(|x| x.is_finite()) {
            return Err(Error::NonFinite("tridiagonal entries"));
        }
        Ok(SymTridiagonal { a, b })
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.a
    }

    pub fn offdiag(&self) -> &[f64] {
        &self.b
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.a, self.b)
    }

    /// Entrywise max norm.
    pub fn norm_max(&self) -> f64 {
        self.a
            .iter()
            .chain(&self.b)
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn to_dense(&self) -> Mat {
        let n = self.n();
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.a[i];
        }
        for (i, &bi) in self.b.iter().enumerate() {
            m[(i, i + 1)] = bi;
            m[(i + 1, i)] = bi;
        }
        m
    }

    /// `y = T x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut y: Vec<f64> = self.a.iter().zip(x).map(|(a, x)| a * x).collect();
        for i in 0..n - 1 {
            y[i] += self.b[i] * x[i + 1];
            y[i + 1] += self.b[i] * x[i];
        }
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Clement,
    Legendre,
    Laguerre,
    Hermite,
    Toeplitz,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Clement,
        Family::Legendre,
        Family::Laguerre,
        Family::Hermite,
        Family::Toeplitz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Clement => "clement",
            Family::Legendre => "legendre",
            Family::Laguerre => "laguerre",
            Family::Hermite => "hermite",
            Family::Toeplitz => "toeplitz",
        }
    }

    pub fn generate(self, n: usize) -> Result<SymTridiagonal> {
        match self {
            Family::Clement => gen_clement(n),
            Family::Legendre => gen_legendre(n),
            Family::Laguerre => gen_laguerre(n),
            Family::Hermite => gen_hermite(n),
            Family::Toeplitz => gen_toeplitz(n),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown matrix family `{s}`")))
    }
}

fn require_order(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::InvalidOrder {
            n,
            reason: if min == 1 {
                "order must be positive"
            } else {
                "order must be at least 2"
            },
        });
    }
    Ok(())
}

/// Zero diagonal, `b_i = sqrt(i (n + 1 - i))` for `i = 1..n-1`.
pub fn gen_clement(n: usize) -> Result<SymTridiagonal> {
    require_order(n, 1)?;
    let b = (1..n)
        .map(|i| ((i * (n + 1 - i)) as f64).sqrt())
        .collect();
    SymTridiagonal::new(vec![0.0; n], b)
}

/// Zero diagonal, `b_{i-1} = i / sqrt((2i - 1)(2i + 1))` for `i = 2..n`.
pub fn gen_legendre(n: usize) -> Result<SymTridiagonal> {
    require_order(n, 2)?;
    let b = (2..=n)
        .map(|i| {
            let i = i as f64;
            i / ((2.0 * i - 1.0) * (2.0 * i + 1.0)).sqrt()
        })
        .collect();
    SymTridiagonal::new(vec![0.0; n], b)
}

/// Diagonal `3, 5, ..., 2n + 1`, off-diagonal `2, 3, ..., n`.
pub fn gen_laguerre(n: usize) -> Result<SymTridiagonal> {
    require_order(n, 1)?;
    let a = (1..=n).map(|i| (2 * i + 1) as f64).collect();
    let b = (1..n).map(|i| (i + 1) as f64).collect();
    SymTridiagonal::new(a, b)
}

/// Zero diagonal, `b_i = sqrt(i)`.
pub fn gen_hermite(n: usize) -> Result<SymTridiagonal> {
    require_order(n, 1)?;
    let b = (1..n).map(|i| (i as f64).sqrt()).collect();
    SymTridiagonal::new(vec![0.0; n], b)
}

/// `tridiag(1, 2, 1)`.
pub fn gen_toeplitz(n: usize) -> Result<SymTridiagonal> {
    require_order(n, 1)?;
    SymTridiagonal::new(vec![2.0; n], vec![1.0; n - 1])
}

/// Eigenvalues `2 + 2 cos(k pi / (n + 1))`, ascending.
pub fn toeplitz_eigenvalues(n: usize) -> Vec<f64> {
    (1..=n)
        .rev()
        .map(|k| 2.0 + 2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos())
        .collect()
}

fn join_floats(xs: &[f64]) -> String {
    let mut s = String::with_capacity(xs.len() * 20);
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        // `{:?}` prints the shortest string that parses back to the same bits.
        write!(s, "{x:?}").expect("writing to a String");
    }
    s
}

pub fn format_matrix(t: &SymTridiagonal) -> String {
    format!(
        "symtridiag {}\n{}\n{}\n",
        t.n(),
        join_floats(&t.a),
        join_floats(&t.b)
    )
}

pub fn write_matrix(t: &SymTridiagonal, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_matrix(t)).map_err(|e| Error::io(path, e))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<SymTridiagonal> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&text, path)
}

pub fn parse_matrix(text: &str, origin: &Path) -> Result<SymTridiagonal> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines();

    let header = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let mut words = header.split_whitespace();
    if words.next() != Some("symtridiag") {
        return Err(err(1, "expected header `symtridiag <n>`".into()));
    }
    let n: usize = words
        .next()
        .and_then(|w| w.parse().ok())
        .ok_or_else(|| err(1, "missing or malformed order".into()))?;
    if words.next().is_some() {
        return Err(err(1, "trailing tokens after order".into()));
    }
    if n == 0 {
        return Err(err(1, "order must be positive".into()));
    }

    let mut values = |line_no: usize, expected: usize, what: &str| -> Result<Vec<f64>> {
        let line = lines.next().unwrap_or("");
        let vals = line
            .split_whitespace()
            .map(|tok| {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| err(line_no, format!("bad number `{tok}`")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(err(line_no, format!("non-finite value `{tok}`")))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() != expected {
            return Err(err(
                line_no,
                format!("expected {expected} {what} values, found {}", vals.len()),
            ));
        }
        Ok(vals)
    };

    let a = values(2, n, "diagonal")?;
    let b = values(3, n - 1, "off-diagonal")?;
    if let Some((k, extra)) = lines.enumerate().find(|(_, l)| !l.trim().is_empty()) {
        return Err(err(4 + k, format!("unexpected trailing content `{extra}`")));
    }
    SymTridiagonal::new(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("<test>")
    }

    #[test]
    fn clement_small() {
        let t = gen_clement(2).unwrap();
        assert_eq!(t.diag(), &[0.0, 0.0]);
        assert_eq!(t.offdiag(), &[2f64.sqrt()]);
        assert!(gen_clement(0).is_err());
        // sqrt(i (n+1-i)) for n = 5
        let t = gen_clement(5).unwrap();
        let expect = [5f64, 8.0, 9.0, 8.0].map(f64::sqrt);
        assert_eq!(t.offdiag(), &expect);
    }

    #[test]
    fn legendre_small() {
        assert_eq!(gen_legendre(2).unwrap().offdiag(), &[2.0 / 15f64.sqrt()]);
        assert_eq!(
            gen_legendre(3).unwrap().offdiag(),
            &[2.0 / 15f64.sqrt(), 3.0 / 35f64.sqrt()]
        );
        assert!(gen_legendre(1).is_err());
    }

    #[test]
    fn laguerre_small() {
        let t = gen_laguerre(3).unwrap();
        assert_eq!(t.diag(), &[3.0, 5.0, 7.0]);
        assert_eq!(t.offdiag(), &[2.0, 3.0]);
        let t = gen_laguerre(1).unwrap();
        assert_eq!(t.diag(), &[3.0]);
        assert!(t.offdiag().is_empty());
    }

    #[test]
    fn hermite_and_toeplitz_small() {
        assert_eq!(gen_hermite(3).unwrap().offdiag(), &[1.0, 2f64.sqrt()]);
        let t = gen_toeplitz(3).unwrap();
        assert_eq!(t.diag(), &[2.0, 2.0, 2.0]);
        assert_eq!(t.offdiag(), &[1.0, 1.0]);
        assert_eq!(gen_toeplitz(1).unwrap().diag(), &[2.0]);
    }

    #[test]
    fn toeplitz_closed_form_n3() {
        let ev = toeplitz_eigenvalues(3);
        let s = 2f64.sqrt();
        assert!((ev[0] - (2.0 - s)).abs() < 1e-15);
        assert!((ev[1] - 2.0).abs() < 1e-15);
        assert!((ev[2] - (2.0 + s)).abs() < 1e-15);
    }

    #[test]
    fn family_names_parse() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert!("wilkinson".parse::<Family>().is_err());
    }

    #[test]
    fn generators_are_deterministic() {
        for f in Family::ALL {
            assert_eq!(f.generate(37).unwrap(), f.generate(37).unwrap());
        }
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let t = gen_clement(10).unwrap();
        let back = parse_matrix(&format_matrix(&t), p()).unwrap();
        assert_eq!(t, back);
        let odd = SymTridiagonal::new(vec![0.1, -1e-300, 1e300], vec![1.0 / 3.0, -0.0]).unwrap();
        let back = parse_matrix(&format_matrix(&odd), p()).unwrap();
        for (x, y) in odd.diag().iter().zip(back.diag()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        for (x, y) in odd.offdiag().iter().zip(back.offdiag()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.mtx");
        let t = gen_laguerre(17).unwrap();
        write_matrix(&t, &path).unwrap();
        assert_eq!(read_matrix(&path).unwrap(), t);
    }

    #[test]
    fn hand_written_toeplitz() {
        let text = "symtridiag 4\n2 2 2 2\n1 1 1\n";
        assert_eq!(parse_matrix(text, p()).unwrap(), gen_toeplitz(4).unwrap());
        let single = "symtridiag 1\n2\n";
        assert_eq!(parse_matrix(single, p()).unwrap(), gen_toeplitz(1).unwrap());
    }

    #[test]
    fn malformed_inputs_report_line() {
        let e = parse_matrix("symtridiag 3\n1 2 3\n1\n", p()).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = parse_matrix("symtridiag 3\n1 2\n1 1\n", p()).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = parse_matrix("symtridiag 2\n1 NaN\n1\n", p()).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = parse_matrix("symtridiag 2\n1 inf\n1\n", p()).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = parse_matrix("tridiag 2\n1 1\n1\n", p()).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }), "{e}");
        let e = parse_matrix("symtridiag 2\n1 1\n1\n7\n", p()).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 4, .. }), "{e}");
        let e = parse_matrix("symtridiag 0\n\n\n", p()).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }), "{e}");
    }

    #[test]
    fn constructor_rejects_bad_shapes() {
        assert!(SymTridiagonal::new(vec![], vec![]).is_err());
        assert!(SymTridiagonal::new(vec![1.0, 2.0], vec![]).is_err());
        assert!(SymTridiagonal::new(vec![1.0, f64::NAN], vec![0.0]).is_err());
    }

    #[test]
    fn matvec_matches_dense() {
        let t = gen_laguerre(6).unwrap();
        let x: Vec<f64> = (0..6).map(|i| i as f64 - 2.0).collect();
        let dense = t.to_dense();
        let y = t.matvec(&x);
        for i in 0..6 {
            let yi: f64 = (0..6).map(|j| dense[(i, j)] * x[j]).sum();
            assert_eq!(y[i], yi);
        }
    }
}
