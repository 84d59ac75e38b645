//! FFT magnitude features.

use std::f64::consts::PI;

use super::{PipelineError, SensorCube};

/// Replaces each (cycle, sensor) row of `D` time samples by the absolute
/// amplitudes of its discrete Fourier transform, zero-padded to the next
/// power of two, keeping bins `0..D/2` (DC included). The feature count
/// drops to `floor(D/2)`.
pub fn fft_magnitude(cube: &SensorCube) -> Result<SensorCube, PipelineError> {
    let d = cube.features();
    if d < 2 {
        return Err(PipelineError::InvalidArgument(
            "fft_magnitude needs at least 2 features".into(),
        ));
    }
    let padded = d.next_power_of_two();
    let kept = d / 2;
    let mut out = Vec::with_capacity(cube.cycles() * cube.sensors() * kept);
    let mut re = vec![0.0; padded];
    let mut im = vec![0.0; padded];
    for n in 0..cube.cycles() {
        for k in 0..cube.sensors() {
            let row = cube.row(n, k);
            re[..d].copy_from_slice(row);
            re[d..].fill(0.0);
            im.fill(0.0);
            fft_in_place(&mut re, &mut im);
            for b in 0..kept {
                out.push((re[b] * re[b] + im[b] * im[b]).sqrt());
            }
        }
    }
    SensorCube::new(
        out,
        cube.cycles(),
        cube.sensors(),
        kept,
        cube.sensor_names().to_vec(),
    )
}

/// Iterative radix-2 Cooley-Tukey transform; lengths must be powers of two.
pub fn fft_in_place(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    debug_assert!(n.is_power_of_two());
    debug_assert_eq!(n, im.len());

    // bit-reversal permutation
    let mut j = 0usize;
    for i in 0..n {
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
        let mut m = n >> 1;
        while m >= 1 && j & m != 0 {
            j ^= m;
            m >>= 1;
        }
        j |= m;
    }

    let mut len = 2;
    while len <= n {
        let angle = -2.0 * PI / len as f64;
        let (w_re, w_im) = (angle.cos(), angle.sin());
        let mut start = 0;
        while start < n {
            let mut cur_re = 1.0;
            let mut cur_im = 0.0;
            for offset in 0..len / 2 {
                let a = start + offset;
                let b = a + len / 2;
                let t_re = cur_re * re[b] - cur_im * im[b];
                let t_im = cur_re * im[b] + cur_im * re[b];
                re[b] = re[a] - t_re;
                im[b] = im[a] - t_im;
                re[a] += t_re;
                im[a] += t_im;
                let next_re = cur_re * w_re - cur_im * w_im;
                cur_im = cur_re * w_im + cur_im * w_re;
                cur_re = next_re;
            }
            start += len;
        }
        len <<= 1;
    }
}
