//! Forward and backward passes of the individual layers.
//!
//! Convolutions are 3x3, stride 1, zero padding 1, so spatial size is kept.
//! Pooling is 2x2 max with stride 2; odd trailing rows/columns are dropped.

use super::tensor::{Scalar, Tensor4};
use crate::error::{Error, Result};

pub const KERNEL: usize = 3;

fn check_conv(x: &Tensor4<impl Scalar>, w: &Tensor4<impl Scalar>, bias_len: usize) -> Result<()> {
    let [_, c, _, _] = x.dims();
    let [o, wc, kh, kw] = w.dims();
    if kh != KERNEL || kw != KERNEL {
        return Err(Error::invalid(format!(
            "expected 3x3 kernels, got {kh}x{kw}"
        )));
    }
    if wc != c {
        return Err(Error::DimensionMismatch {
            expected: wc,
            got: c,
        });
    }
    if bias_len != o {
        return Err(Error::DimensionMismatch {
            expected: o,
            got: bias_len,
        });
    }
    Ok(())
}

// Output rows `oy` for which input row `oy + k - 1` is inside `0..len`.
fn valid_range(len: usize, k: usize) -> (usize, usize) {
    let lo = if k == 0 { 1 } else { 0 };
    let hi = (len + 1).saturating_sub(k).min(len);
    (lo, hi)
}

pub fn conv2d_forward<T: Scalar>(x: &Tensor4<T>, w: &Tensor4<T>, bias: &[T]) -> Result<Tensor4<T>> {
    check_conv(x, w, bias.len())?;
    let [n, c, h, wd] = x.dims();
    let o = w.dims()[0];
    let mut out = Tensor4::zeros([n, o, h, wd]);
    let wv = w.data();
    for b in 0..n {
        for oc in 0..o {
            let plane = out.plane_mut(b, oc);
            plane.iter_mut().for_each(|v| *v = bias[oc]);
            for ic in 0..c {
                let input = x.plane(b, ic);
                for ky in 0..KERNEL {
                    let (y0, y1) = valid_range(h, ky);
                    for kx in 0..KERNEL {
                        let weight = wv[((oc * c + ic) * KERNEL + ky) * KERNEL + kx];
                        let (x0, x1) = valid_range(wd, kx);
                        for oy in y0..y1 {
                            let iy = oy + ky - 1;
                            let dst = &mut plane[oy * wd + x0..oy * wd + x1];
                            let src = &input[iy * wd + x0 + kx - 1..iy * wd + x1 + kx - 1];
                            for (d, &s) in dst.iter_mut().zip(src) {
                                *d = *d + weight * s;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Gradients `(d input, d weights, d bias)` of a convolution.
pub fn conv2d_backward<T: Scalar>(
    x: &Tensor4<T>,
    w: &Tensor4<T>,
    dout: &Tensor4<T>,
) -> Result<(Tensor4<T>, Tensor4<T>, Vec<T>)> {
    let [n, c, h, wd] = x.dims();
    let o = w.dims()[0];
    check_conv(x, w, o)?;
    if dout.dims() != [n, o, h, wd] {
        return Err(Error::invalid(format!(
            "upstream gradient {:?} does not match conv output {:?}",
            dout.dims(),
            [n, o, h, wd]
        )));
    }
    let mut dx = Tensor4::zeros(x.dims());
    let mut dw = Tensor4::zeros(w.dims());
    let mut db = vec![T::zero(); o];
    let wv = w.data();
    for b in 0..n {
        for oc in 0..o {
            let g = dout.plane(b, oc);
            db[oc] = db[oc] + g.iter().copied().sum::<T>();
            for ic in 0..c {
                let input = x.plane(b, ic);
                for ky in 0..KERNEL {
                    let (y0, y1) = valid_range(h, ky);
                    for kx in 0..KERNEL {
                        let widx = ((oc * c + ic) * KERNEL + ky) * KERNEL + kx;
                        let weight = wv[widx];
                        let (x0, x1) = valid_range(wd, kx);
                        let mut acc = T::zero();
                        for oy in y0..y1 {
                            let iy = oy + ky - 1;
                            let gs = &g[oy * wd + x0..oy * wd + x1];
                            let src = &input[iy * wd + x0 + kx - 1..iy * wd + x1 + kx - 1];
                            for (&gv, &s) in gs.iter().zip(src) {
                                acc = acc + gv * s;
                            }
                        }
                        dw.data_mut()[widx] = dw.data()[widx] + acc;
                        let dplane = dx.plane_mut(b, ic);
                        for oy in y0..y1 {
                            let iy = oy + ky - 1;
                            let gs = &g[oy * wd + x0..oy * wd + x1];
                            let dst = &mut dplane[iy * wd + x0 + kx - 1..iy * wd + x1 + kx - 1];
                            for (d, &gv) in dst.iter_mut().zip(gs) {
                                *d = *d + weight * gv;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok((dx, dw, db))
}

pub fn relu_forward<T: Scalar>(x: &mut Tensor4<T>) {
    for v in x.data_mut() {
        if *v < T::zero() {
            *v = T::zero();
        }
    }
}

/// Zeroes `grad` wherever the pre-activation was not positive.
pub fn relu_backward<T: Scalar>(pre: &Tensor4<T>, grad: &mut Tensor4<T>) {
    for (g, &p) in grad.data_mut().iter_mut().zip(pre.data()) {
        if p <= T::zero() {
            *g = T::zero();
        }
    }
}

/// 2x2/stride-2 max pooling. Also returns, for every output element, the
/// flat input index of the selected maximum (first in row-major window
/// order on ties).
pub fn maxpool2_forward<T: Scalar>(x: &Tensor4<T>) -> Result<(Tensor4<T>, Vec<usize>)> {
    let [n, c, h, w] = x.dims();
    if h < 2 || w < 2 {
        return Err(Error::invalid(format!(
            "max pooling needs spatial size >= 2, got {h}x{w}"
        )));
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Tensor4::zeros([n, c, oh, ow]);
    let mut argmax = Vec::with_capacity(n * c * oh * ow);
    for b in 0..n {
        for ch in 0..c {
            let base = (b * c + ch) * h * w;
            let input = x.plane(b, ch);
            let plane = out.plane_mut(b, ch);
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut best = (2 * oy) * w + 2 * ox;
                    for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                        let idx = (2 * oy + dy) * w + 2 * ox + dx;
                        if input[idx] > input[best] {
                            best = idx;
                        }
                    }
                    plane[oy * ow + ox] = input[best];
                    argmax.push(base + best);
                }
            }
        }
    }
    Ok((out, argmax))
}

pub fn maxpool2_backward<T: Scalar>(
    dout: &Tensor4<T>,
    argmax: &[usize],
    input_dims: [usize; 4],
) -> Tensor4<T> {
    let mut dx = Tensor4::zeros(input_dims);
    let d = dx.data_mut();
    for (&g, &i) in dout.data().iter().zip(argmax) {
        d[i] = d[i] + g;
    }
    dx
}

/// `logits[b][k] = sum_f x[b][f] * weight[f][k] + bias[k]`.
pub fn linear_forward<T: Scalar>(x: &[T], batch: usize, weight: &[T], bias: &[T]) -> Vec<T> {
    let classes = bias.len();
    let features = weight.len() / classes.max(1);
    let mut out = Vec::with_capacity(batch * classes);
    for b in 0..batch {
        let row = &x[b * features..(b + 1) * features];
        let mut logits = bias.to_vec();
        for (f, &xv) in row.iter().enumerate() {
            let wrow = &weight[f * classes..(f + 1) * classes];
            for (l, &wv) in logits.iter_mut().zip(wrow) {
                *l = *l + xv * wv;
            }
        }
        out.extend(logits);
    }
    out
}

/// Gradients `(d x, d weight, d bias)` of [`linear_forward`].
pub fn linear_backward<T: Scalar>(
    x: &[T],
    batch: usize,
    weight: &[T],
    dlogits: &[T],
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let classes = dlogits.len() / batch.max(1);
    let features = weight.len() / classes.max(1);
    let mut dx = vec![T::zero(); batch * features];
    let mut dw = vec![T::zero(); weight.len()];
    let mut db = vec![T::zero(); classes];
    for b in 0..batch {
        let g = &dlogits[b * classes..(b + 1) * classes];
        for (d, &gv) in db.iter_mut().zip(g) {
            *d = *d + gv;
        }
        for f in 0..features {
            let xv = x[b * features + f];
            let wrow = &weight[f * classes..(f + 1) * classes];
            let dwrow = &mut dw[f * classes..(f + 1) * classes];
            let mut acc = T::zero();
            for k in 0..classes {
                dwrow[k] = dwrow[k] + xv * g[k];
                acc = acc + wrow[k] * g[k];
            }
            dx[b * features + f] = acc;
        }
    }
    (dx, dw, db)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_keeps_spatial_size() {
        let x = Tensor4::<f32>::zeros([1, 3, 64, 64]);
        let w = Tensor4::<f32>::zeros([16, 3, 3, 3]);
        let out = conv2d_forward(&x, &w, &[0.0; 16]).unwrap();
        assert_eq!(out.dims(), [1, 16, 64, 64]);
    }

    #[test]
    fn delta_kernel_sums_channels() {
        let data: Vec<f64> = (0..2 * 4 * 5).map(|i| i as f64 * 0.5 - 3.0).collect();
        let x = Tensor4::new([1, 2, 4, 5], data).unwrap();
        let mut wdata = vec![0.0; 2 * 9];
        wdata[4] = 1.0;
        wdata[9 + 4] = 1.0;
        let w = Tensor4::new([1, 2, 3, 3], wdata).unwrap();
        let out = conv2d_forward(&x, &w, &[0.0]).unwrap();
        for i in 0..20 {
            assert_eq!(out.data()[i], x.plane(0, 0)[i] + x.plane(0, 1)[i]);
        }
    }

    #[test]
    fn conv_shape_errors() {
        let x = Tensor4::<f64>::zeros([1, 2, 4, 4]);
        let w = Tensor4::<f64>::zeros([1, 3, 3, 3]);
        assert!(conv2d_forward(&x, &w, &[0.0]).is_err());
        let w = Tensor4::<f64>::zeros([2, 2, 3, 3]);
        assert!(conv2d_forward(&x, &w, &[0.0]).is_err());
    }

    #[test]
    fn pool_small_cases() {
        let x = Tensor4::new([1, 1, 2, 2], vec![1.0f64, 2.0, 3.0, 4.0]).unwrap();
        let (out, arg) = maxpool2_forward(&x).unwrap();
        assert_eq!(out.data(), &[4.0]);
        assert_eq!(arg, vec![3]);

        let x = Tensor4::new([1, 1, 3, 5], vec![7.0f64; 15]).unwrap();
        let (out, arg) = maxpool2_forward(&x).unwrap();
        assert_eq!(out.dims(), [1, 1, 1, 2]);
        assert_eq!(out.data(), &[7.0, 7.0]);
        assert_eq!(arg, vec![0, 2]);

        let x = Tensor4::<f64>::zeros([1, 1, 1, 4]);
        assert!(maxpool2_forward(&x).is_err());
    }

    #[test]
    fn pool_backward_routes_to_argmax() {
        let x = Tensor4::new(
            [1, 1, 2, 4],
            vec![1.0f64, 5.0, 0.0, 0.0, 2.0, 3.0, 0.0, 9.0],
        )
        .unwrap();
        let (_, arg) = maxpool2_forward(&x).unwrap();
        let dout = Tensor4::new([1, 1, 1, 2], vec![10.0, 20.0]).unwrap();
        let dx = maxpool2_backward(&dout, &arg, x.dims());
        assert_eq!(dx.data(), &[0.0, 10.0, 0.0, 0.0, 0.0, 0.0, 0.0, 20.0]);
    }

    #[test]
    fn linear_known_values() {
        // x = [1, 2], W = [[1, 0, 2], [3, 1, 0]], b = [0.5, 0, -1]
        let out = linear_forward(
            &[1.0f64, 2.0],
            1,
            &[1.0, 0.0, 2.0, 3.0, 1.0, 0.0],
            &[0.5, 0.0, -1.0],
        );
        assert_eq!(out, vec![7.5, 2.0, 1.0]);
    }
}
