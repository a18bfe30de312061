//! Zero-padded linear convolution of grid fields with offset kernels.
//!
//! A kernel is tabulated on the `(2n - 1)^N` offsets `v - w` between grid
//! nodes. Fields and kernels are embedded in a `(2n)^N` periodic box, which
//! is large enough that circular convolution equals linear convolution on
//! the original nodes.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::VelocityGrid;

/// Multidimensional complex FFT on a cube with `side` points per axis.
pub(crate) struct FftNd {
    dim: usize,
    side: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftNd {
    pub fn new(dim: usize, side: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            dim,
            side,
            forward: planner.plan_fft_forward(side),
            inverse: planner.plan_fft_inverse(side),
        }
    }

    pub fn len(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    /// In-place transform; the inverse is unnormalized.
    pub fn process(&self, data: &mut [Complex64], inverse: bool) {
        let fft = if inverse { &self.inverse } else { &self.forward };
        let p = self.side;
        let mut lines = vec![Complex64::new(0.0, 0.0); data.len()];
        for axis in 0..self.dim {
            let stride = p.pow((self.dim - 1 - axis) as u32);
            if stride == 1 {
                data.par_chunks_mut(p).for_each_init(
                    || vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
                    |scratch, line| fft.process_with_scratch(line, scratch),
                );
                continue;
            }
            let block = p * stride;
            // Gather every line along `axis` contiguously, transform, scatter.
            gather(data, &mut lines, block, stride, p);
            lines.par_chunks_mut(p).for_each_init(
                || vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()],
                |scratch, line| fft.process_with_scratch(line, scratch),
            );
            scatter(&lines, data, block, stride, p);
        }
    }
}

fn gather(src: &[Complex64], dst: &mut [Complex64], block: usize, stride: usize, p: usize) {
    dst.par_chunks_mut(block)
        .zip(src.par_chunks(block))
        .for_each(|(d, s)| {
            for j in 0..stride {
                for t in 0..p {
                    d[j * p + t] = s[t * stride + j];
                }
            }
        });
}

fn scatter(src: &[Complex64], dst: &mut [Complex64], block: usize, stride: usize, p: usize) {
    dst.par_chunks_mut(block)
        .zip(src.par_chunks(block))
        .for_each(|(d, s)| {
            for j in 0..stride {
                for t in 0..p {
                    d[t * stride + j] = s[j * p + t];
                }
            }
        });
}

/// Cached kernel spectra for repeated convolutions on one grid.
pub struct ConvolutionPlan {
    grid: VelocityGrid,
    side: usize,
    fft: FftNd,
    spectra: Vec<Vec<Complex64>>,
}

impl ConvolutionPlan {
    /// `kernels[c]` holds kernel `c` on the `(2n - 1)^N` offset table (see
    /// [`offset_index`]).
    pub fn new(grid: &VelocityGrid, kernels: &[Vec<f64>]) -> Self {
        let n = grid.nodes_per_axis();
        let dim = grid.dim();
        let side = 2 * n;
        let fft = FftNd::new(dim, side);
        let m = 2 * n - 1;
        let table_len = m.pow(dim as u32);
        // Map each padded-box index to the offset it represents, if any.
        let offsets: Vec<Option<usize>> = (0..fft.len())
            .map(|q| {
                let mut rest = q;
                let mut idx = 0usize;
                let mut stride = 1usize;
                for _ in 0..dim {
                    let t = rest % side;
                    rest /= side;
                    let delta = if t < n { t as isize } else { t as isize - side as isize };
                    if delta.unsigned_abs() >= n {
                        return None;
                    }
                    idx += (delta + n as isize - 1) as usize * stride;
                    stride *= m;
                }
                Some(idx)
            })
            .collect();
        let mut spectra = Vec::with_capacity(kernels.len());
        for pair in kernels.chunks(2) {
            assert!(pair.iter().all(|k| k.len() == table_len));
            let mut buf: Vec<Complex64> = offsets
                .iter()
                .map(|o| match o {
                    Some(i) => Complex64::new(pair[0][*i], pair.get(1).map_or(0.0, |k| k[*i])),
                    None => Complex64::new(0.0, 0.0),
                })
                .collect();
            fft.process(&mut buf, false);
            let (a, b) = split_spectrum(&buf, dim, side);
            spectra.push(a);
            if pair.len() == 2 {
                spectra.push(b);
            }
        }
        Self {
            grid: grid.clone(),
            side,
            fft,
            spectra,
        }
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    pub fn kernel_count(&self) -> usize {
        self.spectra.len()
    }

    /// Spectra of zero-padded real fields, transformed two at a time.
    pub fn forward(&self, fields: &[&[f64]]) -> Vec<Vec<Complex64>> {
        let mut out = Vec::with_capacity(fields.len());
        for pair in fields.chunks(2) {
            let mut buf = self.embed(pair[0], pair.get(1).copied());
            self.fft.process(&mut buf, false);
            if pair.len() == 2 {
                let (a, b) = split_spectrum(&buf, self.grid.dim(), self.side);
                out.push(a);
                out.push(b);
            } else {
                out.push(buf);
            }
        }
        out
    }

    /// Real fields on the grid from spectra whose inverses are real,
    /// transformed two at a time.
    pub fn inverse(&self, spectra: &[Vec<Complex64>]) -> Vec<Vec<f64>> {
        let scale = 1.0 / self.fft.len() as f64;
        let i = Complex64::new(0.0, 1.0);
        let mut out = Vec::with_capacity(spectra.len());
        for pair in spectra.chunks(2) {
            let mut buf: Vec<Complex64> = match pair {
                [a, b] => a.par_iter().zip(b).map(|(x, y)| x + i * y).collect(),
                [a] => a.clone(),
                _ => unreachable!(),
            };
            self.fft.process(&mut buf, true);
            let (re, im) = self.restrict(&buf, scale);
            out.push(re);
            if pair.len() == 2 {
                out.push(im);
            }
        }
        out
    }

    /// `sum_c kernel[c] * field[c]` accumulated in Fourier space; each
    /// entry of `terms` is `(kernel index, field spectrum index)`.
    pub fn combine(&self, field_spectra: &[Vec<Complex64>], terms: &[(usize, usize)]) -> Vec<Complex64> {
        let len = self.fft.len();
        (0..len)
            .into_par_iter()
            .map(|q| {
                let mut acc = Complex64::new(0.0, 0.0);
                for &(c, s) in terms {
                    acc += self.spectra[c][q] * field_spectra[s][q];
                }
                acc
            })
            .collect()
    }

    /// Convolves one field with every cached kernel.
    pub fn convolve_all(&self, field: &[f64]) -> Vec<Vec<f64>> {
        let spec = self.forward(&[field]);
        let products: Vec<Vec<Complex64>> = (0..self.spectra.len())
            .map(|c| self.combine(&spec, &[(c, 0)]))
            .collect();
        self.inverse(&products)
    }

    fn embed(&self, re: &[f64], im: Option<&[f64]>) -> Vec<Complex64> {
        let n = self.grid.nodes_per_axis();
        let dim = self.grid.dim();
        let mut buf = vec![Complex64::new(0.0, 0.0); self.fft.len()];
        for k in 0..self.grid.len() {
            let q = padded_index(k, n, self.side, dim);
            buf[q] = Complex64::new(re[k], im.map_or(0.0, |x| x[k]));
        }
        buf
    }

    fn restrict(&self, buf: &[Complex64], scale: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.nodes_per_axis();
        let dim = self.grid.dim();
        (0..self.grid.len())
            .map(|k| {
                let z = buf[padded_index(k, n, self.side, dim)];
                (z.re * scale, z.im * scale)
            })
            .unzip()
    }
}

fn padded_index(k: usize, n: usize, side: usize, dim: usize) -> usize {
    let mut rest = k;
    let mut q = 0;
    let mut stride = 1;
    for _ in 0..dim {
        q += (rest % n) * stride;
        rest /= n;
        stride *= side;
    }
    q
}

/// Splits the spectrum of `x + i y` (x, y real) into the spectra of x and y.
fn split_spectrum(z: &[Complex64], dim: usize, side: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let half = Complex64::new(0.5, 0.0);
    let neg_half_i = Complex64::new(0.0, -0.5);
    z.par_iter()
        .enumerate()
        .map(|(q, &zq)| {
            let zm = z[mirror(q, dim, side)].conj();
            ((zq + zm) * half, (zq - zm) * neg_half_i)
        })
        .unzip()
}

fn mirror(q: usize, dim: usize, side: usize) -> usize {
    let mut rest = q;
    let mut out = 0;
    let mut stride = 1;
    for _ in 0..dim {
        let t = rest % side;
        rest /= side;
        out += ((side - t) % side) * stride;
        stride *= side;
    }
    out
}

/// Index of the offset `v - w` in a `(2n - 1)^N` table, first axis slowest.
pub fn offset_index(grid: &VelocityGrid, v: &[usize], w: &[usize]) -> usize {
    let n = grid.nodes_per_axis() as isize;
    let m = 2 * n - 1;
    v.iter()
        .zip(w)
        .fold(0isize, |acc, (&a, &b)| acc * m + (a as isize - b as isize + n - 1)) as usize
}
