//! Composite Hilbert space of one control atom and `N` ensemble atoms.
//!
//! Basis states are ordered control-major: the control level is the most
//! significant mixed-radix digit, followed by ensemble atom 0, atom 1, ...
//! Operators are applied matrix-free by walking the amplitude vector with the
//! stride of the addressed site.

use std::fmt;
use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Number of control-atom levels, `{|0>, |1>, |r>}`.
pub const CONTROL_DIM: usize = 3;

/// Default cap on the number of amplitudes in a composite state.
pub const DEFAULT_DIMENSION_CAP: usize = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ControlLevel {
    Zero,
    One,
    Rydberg,
}

impl ControlLevel {
    pub const ALL: [ControlLevel; 3] = [ControlLevel::Zero, ControlLevel::One, ControlLevel::Rydberg];

    pub fn index(self) -> usize {
        match self {
            ControlLevel::Zero => 0,
            ControlLevel::One => 1,
            ControlLevel::Rydberg => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            ControlLevel::Zero => "0",
            ControlLevel::One => "1",
            ControlLevel::Rydberg => "r",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "0" => Ok(ControlLevel::Zero),
            "1" => Ok(ControlLevel::One),
            "r" => Ok(ControlLevel::Rydberg),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EnsembleLevel {
    A,
    B,
    P,
    R,
}

impl EnsembleLevel {
    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'A' => Ok(EnsembleLevel::A),
            'B' => Ok(EnsembleLevel::B),
            'P' => Ok(EnsembleLevel::P),
            'R' => Ok(EnsembleLevel::R),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            EnsembleLevel::A => 'A',
            EnsembleLevel::B => 'B',
            EnsembleLevel::P => 'P',
            EnsembleLevel::R => 'R',
        }
    }
}

/// Parses a label string such as `"AAB"` into ensemble levels.
pub fn parse_labels(s: &str) -> Result<Vec<EnsembleLevel>> {
    s.trim().chars().map(EnsembleLevel::from_char).collect()
}

/// Which ensemble level set is used: the four-level atom or the three-level
/// atom left after eliminating the intermediate `|P>` state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Model {
    Full,
    Effective,
}

impl Model {
    pub fn levels(self) -> &'static [EnsembleLevel] {
        use EnsembleLevel::*;
        match self {
            Model::Full => &[A, B, P, R],
            Model::Effective => &[A, B, R],
        }
    }

    pub fn ensemble_dim(self) -> usize {
        self.levels().len()
    }

    pub fn level_index(self, level: EnsembleLevel) -> Option<usize> {
        self.levels().iter().position(|&l| l == level)
    }

    pub fn name(self) -> &'static str {
        match self {
            Model::Full => "FULL",
            Model::Effective => "EFFECTIVE",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" => Ok(Model::Full),
            "effective" | "eff" => Ok(Model::Effective),
            other => Err(Error::InvalidParameter(format!("unknown model `{other}`"))),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Level structure of the composite system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LevelScheme {
    model: Model,
    n_atoms: usize,
    block: usize,
}

impl LevelScheme {
    pub fn new(model: Model, n_atoms: usize) -> Result<Self> {
        Self::with_cap(model, n_atoms, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(model: Model, n_atoms: usize, cap: usize) -> Result<Self> {
        let d = model.ensemble_dim();
        let mut block: usize = 1;
        for _ in 0..n_atoms {
            block = block
                .checked_mul(d)
                .filter(|b| b.saturating_mul(CONTROL_DIM) <= cap)
                .ok_or(Error::TooLarge { dim: usize::MAX, cap })?;
        }
        let dim = block * CONTROL_DIM;
        if dim > cap {
            return Err(Error::TooLarge { dim, cap });
        }
        Ok(LevelScheme { model, n_atoms, block })
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    /// Levels per ensemble atom, `d_e`.
    pub fn ensemble_dim(&self) -> usize {
        self.model.ensemble_dim()
    }

    /// Size of one control block, `d_e^N`.
    pub fn block_len(&self) -> usize {
        self.block
    }

    /// Total dimension `d_c * d_e^N`.
    pub fn dim(&self) -> usize {
        CONTROL_DIM * self.block
    }

    /// Stride of a site in the amplitude vector.
    pub fn stride(&self, site: Site) -> Result<usize> {
        match site {
            Site::Control => Ok(self.block),
            Site::Atom(k) if k < self.n_atoms => {
                Ok(self.ensemble_dim().pow((self.n_atoms - 1 - k) as u32))
            }
            Site::Atom(k) => Err(Error::InvalidSite(format!(
                "atom {k} in a scheme with {} atoms",
                self.n_atoms
            ))),
        }
    }

    pub fn site_dim(&self, site: Site) -> usize {
        match site {
            Site::Control => CONTROL_DIM,
            Site::Atom(_) => self.ensemble_dim(),
        }
    }

    pub fn index(&self, control: ControlLevel, labels: &[EnsembleLevel]) -> Result<usize> {
        if labels.len() != self.n_atoms {
            return Err(Error::LabelCount { expected: self.n_atoms, got: labels.len() });
        }
        let d = self.ensemble_dim();
        let mut idx = control.index();
        for &l in labels {
            let digit = self
                .model
                .level_index(l)
                .ok_or_else(|| Error::UnknownLabel(format!("{} in {} scheme", l.as_char(), self.model)))?;
            idx = idx * d + digit;
        }
        Ok(idx)
    }

    /// Inverse of [`LevelScheme::index`].
    pub fn labels(&self, index: usize) -> Result<(ControlLevel, Vec<EnsembleLevel>)> {
        if index >= self.dim() {
            return Err(Error::IndexOutOfRange { index, dim: self.dim() });
        }
        let d = self.ensemble_dim();
        let levels = self.model.levels();
        let mut rest = index % self.block;
        let mut out = vec![EnsembleLevel::A; self.n_atoms];
        for slot in out.iter_mut().rev() {
            *slot = levels[rest % d];
            rest /= d;
        }
        let control = ControlLevel::from_index(index / self.block).expect("index < dim");
        Ok((control, out))
    }

    /// Level digit of `atom` in basis state `index`.
    #[inline]
    pub fn digit(&self, index: usize, atom: usize) -> usize {
        let d = self.ensemble_dim();
        (index / d.pow((self.n_atoms - 1 - atom) as u32)) % d
    }

    pub fn header(&self) -> String {
        format!(
            "scheme={} d_c={} d_e={} N={}",
            self.model.name(),
            CONTROL_DIM,
            self.ensemble_dim(),
            self.n_atoms
        )
    }
}

/// Index of the basis state `|control>|labels>`.
pub fn basis_index(scheme: &LevelScheme, control: ControlLevel, labels: &[EnsembleLevel]) -> Result<usize> {
    scheme.index(control, labels)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Site {
    Control,
    Atom(usize),
}

/// A site together with one of its levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SiteLevel {
    Control(ControlLevel),
    Atom(usize, EnsembleLevel),
}

impl SiteLevel {
    pub fn site(&self) -> Site {
        match *self {
            SiteLevel::Control(_) => Site::Control,
            SiteLevel::Atom(k, _) => Site::Atom(k),
        }
    }

    fn digit(&self, model: Model) -> Result<usize> {
        match *self {
            SiteLevel::Control(c) => Ok(c.index()),
            SiteLevel::Atom(_, l) => model
                .level_index(l)
                .ok_or_else(|| Error::UnknownLabel(format!("{} in {model} scheme", l.as_char()))),
        }
    }
}

/// Complex amplitude vector over the composite basis.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositeState {
    scheme: LevelScheme,
    amps: Vec<C64>,
}

impl CompositeState {
    pub fn zeros(scheme: LevelScheme) -> Self {
        CompositeState { scheme, amps: vec![C64::new(0.0, 0.0); scheme.dim()] }
    }

    pub fn basis(scheme: LevelScheme, control: ControlLevel, labels: &[EnsembleLevel]) -> Result<Self> {
        let mut s = Self::zeros(scheme);
        let i = scheme.index(control, labels)?;
        s.amps[i] = C64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn from_amplitudes(scheme: LevelScheme, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != scheme.dim() {
            return Err(Error::Dimension(format!(
                "{} amplitudes for a scheme of dimension {}",
                amps.len(),
                scheme.dim()
            )));
        }
        Ok(CompositeState { scheme, amps })
    }

    /// Product state `control ⊗ atom_0 ⊗ ... ⊗ atom_{N-1}`.
    pub fn product(scheme: LevelScheme, control: &[C64], atoms: &[Vec<C64>]) -> Result<Self> {
        if control.len() != CONTROL_DIM {
            return Err(Error::Dimension(format!("control factor of length {}", control.len())));
        }
        if atoms.len() != scheme.n_atoms() {
            return Err(Error::LabelCount { expected: scheme.n_atoms(), got: atoms.len() });
        }
        let d = scheme.ensemble_dim();
        let mut amps: Vec<C64> = control.to_vec();
        for a in atoms {
            if a.len() != d {
                return Err(Error::Dimension(format!("atom factor of length {} (d_e = {d})", a.len())));
            }
            amps = amps.iter().flat_map(|&x| a.iter().map(move |&y| x * y)).collect();
        }
        Ok(CompositeState { scheme, amps })
    }

    pub fn scheme(&self) -> LevelScheme {
        self.scheme
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn amplitude(&self, control: ControlLevel, labels: &[EnsembleLevel]) -> Result<C64> {
        Ok(self.amps[self.scheme.index(control, labels)?])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scaled(mut self, factor: C64) -> Self {
        self.amps.iter_mut().for_each(|a| *a *= factor);
        self
    }

    pub fn add(&self, other: &CompositeState) -> Result<CompositeState> {
        if self.scheme != other.scheme {
            return Err(Error::SchemeMismatch);
        }
        let amps = self.amps.iter().zip(&other.amps).map(|(a, b)| a + b).collect();
        Ok(CompositeState { scheme: self.scheme, amps })
    }

    /// Amplitudes of the ensemble block with the control atom in `level`.
    pub fn control_block(&self, level: ControlLevel) -> &[C64] {
        let b = self.scheme.block_len();
        &self.amps[level.index() * b..(level.index() + 1) * b]
    }

    /// Population of each control level.
    pub fn control_populations(&self) -> [f64; 3] {
        let mut out = [0.0; 3];
        for c in ControlLevel::ALL {
            out[c.index()] = self.control_block(c).iter().map(|a| a.norm_sqr()).sum();
        }
        out
    }

    /// Population of `level` summed over all ensemble atoms.
    pub fn ensemble_population(&self, level: EnsembleLevel) -> f64 {
        let Some(digit) = self.scheme.model().level_index(level) else {
            return 0.0;
        };
        let block = self.scheme.block_len();
        let n = self.scheme.n_atoms();
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let e = i % block;
                let count = (0..n).filter(|&k| self.scheme.digit(e, k) == digit).count();
                count as f64 * a.norm_sqr()
            })
            .sum()
    }
}

/// Dense single-site operator.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteOperator {
    site: Site,
    dim: usize,
    matrix: Vec<C64>,
}

impl SiteOperator {
    /// `matrix` is row-major `dim x dim`.
    pub fn new(site: Site, dim: usize, matrix: Vec<C64>) -> Result<Self> {
        if matrix.len() != dim * dim {
            return Err(Error::Dimension(format!("{} entries for a {dim}x{dim} matrix", matrix.len())));
        }
        Ok(SiteOperator { site, dim, matrix })
    }

    /// Like [`SiteOperator::new`] but rejects non-Hermitian matrices.
    pub fn hermitian(site: Site, dim: usize, matrix: Vec<C64>, tol: f64) -> Result<Self> {
        let op = Self::new(site, dim, matrix)?;
        if !op.is_hermitian(tol) {
            return Err(Error::InvalidParameter("site operator is not Hermitian".into()));
        }
        Ok(op)
    }

    /// `|to><from|` on one site.
    pub fn transition(site: Site, dim: usize, to: usize, from: usize) -> Result<Self> {
        if to >= dim || from >= dim {
            return Err(Error::Dimension(format!("level out of range for dimension {dim}")));
        }
        let mut m = vec![C64::new(0.0, 0.0); dim * dim];
        m[to * dim + from] = C64::new(1.0, 0.0);
        Self::new(site, dim, m)
    }

    pub fn identity(site: Site, dim: usize) -> Self {
        let mut m = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            m[i * dim + i] = C64::new(1.0, 0.0);
        }
        SiteOperator { site, dim, matrix: m }
    }

    pub fn site(&self) -> Site {
        self.site
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &[C64] {
        &self.matrix
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let d = self.dim;
        (0..d).all(|i| (0..d).all(|j| (self.matrix[i * d + j] - self.matrix[j * d + i].conj()).norm() <= tol))
    }
}

/// `out += (m ⊗ 1) psi` for a `d`-level site with the given stride.
#[inline]
pub(crate) fn accumulate_local(psi: &[C64], out: &mut [C64], d: usize, stride: usize, m: &[C64]) {
    let span = d * stride;
    for base in (0..psi.len()).step_by(span) {
        for i in base..base + stride {
            for a in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                let row = &m[a * d..(a + 1) * d];
                for (b, &mab) in row.iter().enumerate() {
                    if mab.re != 0.0 || mab.im != 0.0 {
                        acc += mab * psi[i + b * stride];
                    }
                }
                out[i + a * stride] += acc;
            }
        }
    }
}

/// Returns `(op ⊗ 1) state`.
pub fn apply_site_operator(state: &CompositeState, op: &SiteOperator) -> Result<CompositeState> {
    let scheme = state.scheme();
    let stride = scheme.stride(op.site())?;
    let d = scheme.site_dim(op.site());
    if op.dim() != d {
        return Err(Error::Dimension(format!("{}-level operator on a {d}-level site", op.dim())));
    }
    let mut out = CompositeState::zeros(scheme);
    accumulate_local(state.amplitudes(), &mut out.amps, d, stride, op.matrix());
    Ok(out)
}

/// Scales the amplitudes with `a` and `b` in the requested levels by
/// `coefficient` and zeroes everything else.
pub fn apply_two_site_projector(
    state: &CompositeState,
    a: SiteLevel,
    b: SiteLevel,
    coefficient: f64,
) -> Result<CompositeState> {
    let scheme = state.scheme();
    if a.site() == b.site() {
        return Err(Error::InvalidSite("two-site projector needs distinct sites".into()));
    }
    let (sa, sb) = (scheme.stride(a.site())?, scheme.stride(b.site())?);
    let (da, db) = (scheme.site_dim(a.site()), scheme.site_dim(b.site()));
    let (la, lb) = (a.digit(scheme.model())?, b.digit(scheme.model())?);
    let mut out = CompositeState::zeros(scheme);
    for (i, (o, &x)) in out.amps.iter_mut().zip(state.amplitudes()).enumerate() {
        if (i / sa) % da == la && (i / sb) % db == lb {
            *o = x * coefficient;
        }
    }
    Ok(out)
}

/// `<a|b>`, conjugating `a`.
pub fn overlap(a: &CompositeState, b: &CompositeState) -> Result<C64> {
    if a.scheme() != b.scheme() {
        return Err(Error::SchemeMismatch);
    }
    Ok(inner(a.amplitudes(), b.amplitudes()))
}

#[inline]
pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Writes the header line and one `index re im` line per nonzero amplitude.
pub fn write_snapshot<W: Write>(state: &CompositeState, mut w: W) -> Result<()> {
    writeln!(w, "{}", state.scheme().header())?;
    for (i, a) in state.amplitudes().iter().enumerate() {
        if a.re != 0.0 || a.im != 0.0 {
            writeln!(w, "{} {:.16e} {:.16e}", i, a.re, a.im)?;
        }
    }
    Ok(())
}

pub fn read_snapshot<R: BufRead>(r: R) -> Result<CompositeState> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Snapshot("empty input".into()))??;
    let mut model = None;
    let mut d_e = None;
    let mut n = None;
    for field in header.split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| Error::Snapshot(format!("bad header field `{field}`")))?;
        match k {
            "scheme" => model = Some(Model::parse(v).map_err(|_| Error::Snapshot(format!("bad scheme `{v}`")))?),
            "d_c" if v == "3" => {}
            "d_c" => return Err(Error::Snapshot(format!("unsupported d_c={v}"))),
            "d_e" => d_e = v.parse::<usize>().ok(),
            "N" => n = v.parse::<usize>().ok(),
            _ => return Err(Error::Snapshot(format!("unknown header key `{k}`"))),
        }
    }
    let (model, d_e, n) = match (model, d_e, n) {
        (Some(m), Some(d), Some(n)) => (m, d, n),
        _ => return Err(Error::Snapshot("incomplete header".into())),
    };
    if model.ensemble_dim() != d_e {
        return Err(Error::Snapshot(format!("d_e={d_e} inconsistent with scheme {model}")));
    }
    let mut state = CompositeState::zeros(LevelScheme::new(model, n)?);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let parsed = match parts.as_slice() {
            [i, re, im] => i.parse::<usize>().ok().zip(re.parse::<f64>().ok()).zip(im.parse::<f64>().ok()),
            _ => None,
        };
        let ((i, re), im) = parsed.ok_or_else(|| Error::Snapshot(format!("bad amplitude line `{line}`")))?;
        let dim = state.amps.len();
        let slot = state.amps.get_mut(i).ok_or(Error::IndexOutOfRange { index: i, dim })?;
        *slot = C64::new(re, im);
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use EnsembleLevel::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn index_examples() {
        let s0 = LevelScheme::new(Model::Full, 0).unwrap();
        assert_eq!(s0.index(ControlLevel::Zero, &[]).unwrap(), 0);
        let s1 = LevelScheme::new(Model::Full, 1).unwrap();
        assert_eq!(s1.index(ControlLevel::Zero, &[A]).unwrap(), 0);
        assert_eq!(s1.index(ControlLevel::One, &[A]).unwrap(), 4);
    }

    #[test]
    fn index_matches_enumeration() {
        let s = LevelScheme::new(Model::Full, 2).unwrap();
        let mut enumerated = Vec::new();
        for ctl in ControlLevel::ALL {
            for &a in Model::Full.levels() {
                for &b in Model::Full.levels() {
                    enumerated.push((ctl, vec![a, b]));
                }
            }
        }
        assert_eq!(enumerated.len(), 48);
        let pos = enumerated
            .iter()
            .position(|(ctl, l)| *ctl == ControlLevel::Rydberg && l == &vec![R, R])
            .unwrap();
        assert_eq!(pos, 47);
        assert_eq!(s.index(ControlLevel::Rydberg, &[R, R]).unwrap(), pos);
    }

    #[test]
    fn index_errors() {
        let s = LevelScheme::new(Model::Effective, 2).unwrap();
        assert!(matches!(s.index(ControlLevel::Zero, &[A]), Err(Error::LabelCount { .. })));
        assert!(matches!(s.index(ControlLevel::Zero, &[A, P]), Err(Error::UnknownLabel(_))));
        assert!(ControlLevel::parse("x").is_err());
        assert!(parse_labels("AQ").is_err());
    }

    #[test]
    fn dimension_cap() {
        assert!(LevelScheme::with_cap(Model::Full, 6, 20_000).is_ok());
        assert!(matches!(LevelScheme::with_cap(Model::Full, 7, 20_000), Err(Error::TooLarge { .. })));
        assert!(LevelScheme::new(Model::Full, 40).is_err());
    }

    #[test]
    fn transition_on_atom_zero() {
        let s = LevelScheme::new(Model::Full, 2).unwrap();
        let psi = CompositeState::basis(s, ControlLevel::Zero, &[A, A]).unwrap();
        let op = SiteOperator::transition(Site::Atom(0), 4, 1, 0).unwrap();
        let out = apply_site_operator(&psi, &op).unwrap();
        let expected = CompositeState::basis(s, ControlLevel::Zero, &[B, A]).unwrap();
        assert_eq!(out, expected);
        // input untouched
        assert_eq!(psi.amplitude(ControlLevel::Zero, &[A, A]).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn identity_leaves_state() {
        let s = LevelScheme::new(Model::Effective, 2).unwrap();
        let amps: Vec<C64> = (0..s.dim()).map(|i| c(i as f64, -(i as f64) * 0.5)).collect();
        let psi = CompositeState::from_amplitudes(s, amps).unwrap();
        for site in [Site::Control, Site::Atom(0), Site::Atom(1)] {
            let op = SiteOperator::identity(site, s.site_dim(site));
            assert_eq!(apply_site_operator(&psi, &op).unwrap(), psi);
        }
    }

    #[test]
    fn operator_dimension_mismatch() {
        let s = LevelScheme::new(Model::Effective, 1).unwrap();
        let psi = CompositeState::zeros(s);
        let op = SiteOperator::identity(Site::Atom(0), 4);
        assert!(matches!(apply_site_operator(&psi, &op), Err(Error::Dimension(_))));
        let op = SiteOperator::identity(Site::Atom(3), 3);
        assert!(matches!(apply_site_operator(&psi, &op), Err(Error::InvalidSite(_))));
    }

    #[test]
    fn hermitian_flag_checked() {
        let m = vec![c(1.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(2.0, 0.0)];
        assert!(SiteOperator::hermitian(Site::Control, 2, m, 1e-12).is_err());
    }

    #[test]
    fn projector_examples() {
        let s = LevelScheme::new(Model::Full, 2).unwrap();
        let amps: Vec<C64> = (0..s.dim()).map(|i| c(1.0 + i as f64, 0.5)).collect();
        let psi = CompositeState::from_amplitudes(s, amps).unwrap();
        let a = SiteLevel::Atom(0, R);
        let b = SiteLevel::Atom(1, R);
        let zero = apply_two_site_projector(&psi, a, b, 0.0).unwrap();
        assert!(zero.amplitudes().iter().all(|z| z.norm() == 0.0));

        let out = apply_two_site_projector(&psi, a, b, 2.5).unwrap();
        for (i, z) in out.amplitudes().iter().enumerate() {
            let (_, l) = s.labels(i).unwrap();
            if l == vec![R, R] {
                assert_eq!(*z, psi.amplitudes()[i] * 2.5);
            } else {
                assert_eq!(*z, c(0.0, 0.0));
            }
        }
        assert!(apply_two_site_projector(&psi, a, SiteLevel::Atom(0, A), 1.0).is_err());
        let eff = CompositeState::zeros(LevelScheme::new(Model::Effective, 2).unwrap());
        assert!(apply_two_site_projector(&eff, SiteLevel::Atom(0, P), b, 1.0).is_err());
    }

    #[test]
    fn overlap_conjugates_first_argument() {
        let s = LevelScheme::new(Model::Effective, 1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let a = CompositeState::product(s, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], &[vec![c(h, 0.0), c(0.0, h), c(0.0, 0.0)]])
            .unwrap();
        let b = CompositeState::product(s, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], &[vec![c(h, 0.0), c(0.0, -h), c(0.0, 0.0)]])
            .unwrap();
        assert!(overlap(&a, &b).unwrap().norm() < 1e-15);
        let self_ov = overlap(&a, &a).unwrap();
        assert!((self_ov.re - 1.0).abs() < 1e-15 && self_ov.im == 0.0);
        let other = CompositeState::zeros(LevelScheme::new(Model::Full, 1).unwrap());
        assert!(matches!(overlap(&a, &other), Err(Error::SchemeMismatch)));
    }

    #[test]
    fn snapshot_roundtrip_and_errors() {
        let s = LevelScheme::new(Model::Full, 2).unwrap();
        let mut psi = CompositeState::zeros(s);
        psi.amplitudes_mut()[5] = c(0.1, -1.0 / 3.0);
        psi.amplitudes_mut()[47] = c(std::f64::consts::PI, 1e-300);
        let mut buf = Vec::new();
        write_snapshot(&psi, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("scheme=FULL d_c=3 d_e=4 N=2\n"));
        assert_eq!(text.lines().count(), 3);
        let back = read_snapshot(&buf[..]).unwrap();
        assert_eq!(back, psi);

        assert!(read_snapshot("scheme=FULL d_c=3 d_e=3 N=1\n".as_bytes()).is_err());
        assert!(read_snapshot("scheme=EFFECTIVE d_c=3 d_e=3 N=1\n99 1 0\n".as_bytes()).is_err());
        assert!(read_snapshot("scheme=EFFECTIVE d_c=3 d_e=3 N=1\n1 x 0\n".as_bytes()).is_err());
    }
}
