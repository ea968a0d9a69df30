//! Synthetic dataset generators: desk-scale stand-ins for image benchmarks.

use rs2_core::dataset::Dataset;
use rs2_core::matrix::Matrix;
use rs2_core::rng::{Rng, Stream};
use rs2_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    GaussianBlobs,
    Concentric,
    Checkerboard,
}

impl GeneratorKind {
    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::GaussianBlobs => "gaussian_blobs",
            GeneratorKind::Concentric => "concentric",
            GeneratorKind::Checkerboard => "checkerboard",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gaussian_blobs" => Ok(GeneratorKind::GaussianBlobs),
            "concentric" => Ok(GeneratorKind::Concentric),
            "checkerboard" => Ok(GeneratorKind::Checkerboard),
            other => Err(Error::InvalidArgument(format!(
                "unknown dataset generator '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub kind: GeneratorKind,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    /// Class separation scale: blob-mean radius, ring spacing, or cell width.
    pub separation: f64,
    /// Noise scale added per coordinate.
    pub noise: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.k < 2 || self.n < self.k {
            return Err(Error::InvalidArgument(format!(
                "need N >= K >= 2, got N = {}, K = {}",
                self.n, self.k
            )));
        }
        if self.d == 0 {
            return Err(Error::InvalidArgument("d must be >= 1".into()));
        }
        let needs_plane = matches!(
            self.kind,
            GeneratorKind::Concentric | GeneratorKind::Checkerboard
        );
        if needs_plane && self.d < 2 {
            return Err(Error::InvalidArgument(format!(
                "{} needs d >= 2",
                self.kind.name()
            )));
        }
        if self.separation <= 0.0 || self.noise < 0.0 {
            return Err(Error::InvalidArgument(
                "separation must be positive and noise nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Deterministic dataset from a generator spec.
pub fn generate_dataset(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = Rng::new(spec.seed, Stream::DataGen, 0);
    let mut data = Vec::with_capacity(spec.n * spec.d);
    let mut labels = Vec::with_capacity(spec.n);
    match spec.kind {
        GeneratorKind::GaussianBlobs => {
            // Class means on a sphere of radius `separation`.
            let mut means = Vec::with_capacity(spec.k);
            for _ in 0..spec.k {
                let mut dir: Vec<f64> = (0..spec.d).map(|_| rng.normal()).collect();
                let norm: f64 = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm == 0.0 {
                    dir[0] = 1.0;
                } else {
                    for x in &mut dir {
                        *x /= norm;
                    }
                }
                means.push(dir.iter().map(|x| x * spec.separation).collect::<Vec<_>>());
            }
            for i in 0..spec.n {
                let class = i % spec.k;
                for &m in &means[class] {
                    data.push(m + spec.noise * rng.normal());
                }
                labels.push(class);
            }
        }
        GeneratorKind::Concentric => {
            // Class c lives on a ring of radius separation * (c + 1).
            for i in 0..spec.n {
                let class = i % spec.k;
                let radius = spec.separation * (class as f64 + 1.0);
                let angle = rng.next_f64() * std::f64::consts::TAU;
                data.push(radius * angle.cos() + spec.noise * rng.normal());
                data.push(radius * angle.sin() + spec.noise * rng.normal());
                for _ in 2..spec.d {
                    data.push(spec.noise * rng.normal());
                }
                labels.push(class);
            }
        }
        GeneratorKind::Checkerboard => {
            // Jittered square lattice with spacing `separation`; the label
            // interleaves along the diagonal, so with small noise every
            // lattice neighbor carries a different label.
            let side = (spec.n as f64).sqrt().ceil() as usize;
            for i in 0..spec.n {
                let (col, row) = (i % side, i / side);
                data.push(col as f64 * spec.separation + spec.noise * rng.normal());
                data.push(row as f64 * spec.separation + spec.noise * rng.normal());
                for _ in 2..spec.d {
                    data.push(spec.noise * rng.normal());
                }
                labels.push((col + row) % spec.k);
            }
        }
    }
    Dataset::new(Matrix::new(spec.n, spec.d, data)?, labels, spec.k)
}
