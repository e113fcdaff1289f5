//! Strided 2-D cross-correlation and its transpose, lowered to GEMM through
//! im2col / col2im.

use crate::neural::gemm::gemm;
use crate::neural::{NeuralError, Tensor};

/// Geometry shared by a convolution and its transpose: the "image" side is
/// `channels x height x width`, the "patch grid" side is `out_h x out_w`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Geometry {
    channels: usize,
    height: usize,
    width: usize,
    kernel: usize,
    stride: usize,
    pad: usize,
    out_h: usize,
    out_w: usize,
}

impl Geometry {
    fn new(
        channels: usize,
        height: usize,
        width: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
    ) -> Result<Self, NeuralError> {
        if stride == 0 || kernel == 0 || height + 2 * pad < kernel || width + 2 * pad < kernel {
            return Err(NeuralError::Shape(format!(
                "kernel {kernel} stride {stride} pad {pad} on {height}x{width}"
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            kernel,
            stride,
            pad,
            out_h: (height + 2 * pad - kernel) / stride + 1,
            out_w: (width + 2 * pad - kernel) / stride + 1,
        })
    }

    fn rows(&self) -> usize {
        self.channels * self.kernel * self.kernel
    }

    fn cols(&self) -> usize {
        self.out_h * self.out_w
    }
}

fn im2col(g: &Geometry, img: &[f64], cols: &mut [f64]) {
    let (k, p) = (g.kernel, g.pad);
    let ncols = g.cols();
    for c in 0..g.channels {
        let plane = &img[c * g.height * g.width..(c + 1) * g.height * g.width];
        for ky in 0..k {
            for kx in 0..k {
                let row = (c * k + ky) * k + kx;
                let dst = &mut cols[row * ncols..(row + 1) * ncols];
                for oy in 0..g.out_h {
                    let iy = (oy * g.stride + ky) as isize - p as isize;
                    let line = &mut dst[oy * g.out_w..(oy + 1) * g.out_w];
                    if iy < 0 || iy >= g.height as isize {
                        line.fill(0.0);
                        continue;
                    }
                    let src = &plane[iy as usize * g.width..(iy as usize + 1) * g.width];
                    for (ox, v) in line.iter_mut().enumerate() {
                        let ix = (ox * g.stride + kx) as isize - p as isize;
                        *v = if ix < 0 || ix >= g.width as isize {
                            0.0
                        } else {
                            src[ix as usize]
                        };
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters patch columns back, accumulating into `img`.
fn col2im(g: &Geometry, cols: &[f64], img: &mut [f64]) {
    let (k, p) = (g.kernel, g.pad);
    let ncols = g.cols();
    for c in 0..g.channels {
        let plane = &mut img[c * g.height * g.width..(c + 1) * g.height * g.width];
        for ky in 0..k {
            for kx in 0..k {
                let row = (c * k + ky) * k + kx;
                let src = &cols[row * ncols..(row + 1) * ncols];
                for oy in 0..g.out_h {
                    let iy = (oy * g.stride + ky) as isize - p as isize;
                    if iy < 0 || iy >= g.height as isize {
                        continue;
                    }
                    let dst = &mut plane[iy as usize * g.width..(iy as usize + 1) * g.width];
                    for (ox, v) in src[oy * g.out_w..(oy + 1) * g.out_w].iter().enumerate() {
                        let ix = (ox * g.stride + kx) as isize - p as isize;
                        if ix >= 0 && ix < g.width as isize {
                            dst[ix as usize] += v;
                        }
                    }
                }
            }
        }
    }
}

fn check_kernel(weight: &Tensor) -> Result<usize, NeuralError> {
    let [_, _, kh, kw] = weight.shape();
    if kh != kw {
        return Err(NeuralError::Shape(format!("non-square kernel {kh}x{kw}")));
    }
    Ok(kh)
}

fn check_bias(bias: Option<&Tensor>, channels: usize) -> Result<(), NeuralError> {
    match bias {
        Some(b) if b.len() != channels => Err(NeuralError::Shape(format!(
            "bias has {} values for {channels} channels",
            b.len()
        ))),
        _ => Ok(()),
    }
}

fn add_bias(out: &mut Tensor, bias: Option<&Tensor>) {
    if let Some(b) = bias {
        let hw = out.h() * out.w();
        for n in 0..out.n() {
            for (plane, bv) in out.item_mut(n).chunks_mut(hw).zip(b.data()) {
                plane.iter_mut().for_each(|v| *v += bv);
            }
        }
    }
}

fn bias_grad(grad_out: &Tensor) -> Vec<f64> {
    let hw = grad_out.h() * grad_out.w();
    let mut gb = vec![0.0; grad_out.c()];
    for n in 0..grad_out.n() {
        for (plane, g) in grad_out.item(n).chunks(hw).zip(gb.iter_mut()) {
            *g += plane.iter().sum::<f64>();
        }
    }
    gb
}

/// Saved state for the backward pass of a convolution.
#[derive(Debug, Clone)]
pub struct Conv2dCache {
    geometry: Geometry,
    batch: usize,
    cols: Vec<f64>,
}

/// Gradients produced by a convolution backward pass.
#[derive(Debug, Clone)]
pub struct ConvGrads {
    pub input: Option<Tensor>,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Cross-correlation of `input` (`N x C x H x W`) with `weight`
/// (`O x C x k x k`); output size `floor((H + 2 pad - k) / stride) + 1`.
pub fn conv2d_forward(
    input: &Tensor,
    weight: &Tensor,
    bias: Option<&Tensor>,
    stride: usize,
    pad: usize,
) -> Result<(Tensor, Conv2dCache), NeuralError> {
    let k = check_kernel(weight)?;
    let [n, c, h, w] = input.shape();
    let out_c = weight.n();
    if weight.c() != c {
        return Err(NeuralError::Shape(format!(
            "conv weight {:?} on input {:?}",
            weight.shape(),
            input.shape()
        )));
    }
    check_bias(bias, out_c)?;
    let g = Geometry::new(c, h, w, k, stride, pad)?;
    let (rows, ncols) = (g.rows(), g.cols());
    let mut cols = vec![0.0; n * rows * ncols];
    let mut out = Tensor::zeros([n, out_c, g.out_h, g.out_w]);
    for i in 0..n {
        let col = &mut cols[i * rows * ncols..(i + 1) * rows * ncols];
        im2col(&g, input.item(i), col);
        gemm(out_c, rows, ncols, weight.data(), false, col, false, out.item_mut(i), 0.0);
    }
    add_bias(&mut out, bias);
    out.ensure_finite("conv2d forward")?;
    Ok((
        out,
        Conv2dCache {
            geometry: g,
            batch: n,
            cols,
        },
    ))
}

pub fn conv2d_backward(
    cache: &Conv2dCache,
    weight: &Tensor,
    grad_out: &Tensor,
    need_input: bool,
) -> Result<ConvGrads, NeuralError> {
    let g = &cache.geometry;
    let out_c = weight.n();
    if grad_out.shape() != [cache.batch, out_c, g.out_h, g.out_w] {
        return Err(NeuralError::Shape(format!(
            "conv grad {:?} for output {:?}",
            grad_out.shape(),
            [cache.batch, out_c, g.out_h, g.out_w]
        )));
    }
    let (rows, ncols) = (g.rows(), g.cols());
    let mut gw = vec![0.0; weight.len()];
    let mut input = need_input.then(|| Tensor::zeros([cache.batch, g.channels, g.height, g.width]));
    let mut dcols = vec![0.0; rows * ncols];
    for i in 0..cache.batch {
        let col = &cache.cols[i * rows * ncols..(i + 1) * rows * ncols];
        gemm(out_c, ncols, rows, grad_out.item(i), false, col, true, &mut gw, 1.0);
        if let Some(gi) = input.as_mut() {
            gemm(rows, out_c, ncols, weight.data(), true, grad_out.item(i), false, &mut dcols, 0.0);
            col2im(g, &dcols, gi.item_mut(i));
        }
    }
    if let Some(gi) = &input {
        gi.ensure_finite("conv2d backward")?;
    }
    Ok(ConvGrads {
        input,
        weight: gw,
        bias: bias_grad(grad_out),
    })
}

#[derive(Debug, Clone)]
pub struct ConvTranspose2dCache {
    geometry: Geometry,
    input: Tensor,
}

/// Transposed convolution with `weight` laid out `C_in x C_out x k x k`;
/// output size `(H - 1) stride - 2 pad + k`. This is the adjoint of
/// [`conv2d_forward`] for the same weight buffer.
pub fn conv_transpose2d_forward(
    input: &Tensor,
    weight: &Tensor,
    bias: Option<&Tensor>,
    stride: usize,
    pad: usize,
) -> Result<(Tensor, ConvTranspose2dCache), NeuralError> {
    let k = check_kernel(weight)?;
    let [n, c_in, h, w] = input.shape();
    if weight.n() != c_in {
        return Err(NeuralError::Shape(format!(
            "conv_transpose weight {:?} on input {:?}",
            weight.shape(),
            input.shape()
        )));
    }
    let c_out = weight.c();
    check_bias(bias, c_out)?;
    let (oh, ow) = ((h - 1) * stride + k, (w - 1) * stride + k);
    if oh < 2 * pad + 1 || ow < 2 * pad + 1 {
        return Err(NeuralError::Shape(format!("conv_transpose pad {pad} too large")));
    }
    let g = Geometry::new(c_out, oh - 2 * pad, ow - 2 * pad, k, stride, pad)?;
    debug_assert_eq!((g.out_h, g.out_w), (h, w));
    let (rows, ncols) = (g.rows(), g.cols());
    let mut out = Tensor::zeros([n, c_out, g.height, g.width]);
    let mut cols = vec![0.0; rows * ncols];
    for i in 0..n {
        gemm(rows, c_in, ncols, weight.data(), true, input.item(i), false, &mut cols, 0.0);
        col2im(&g, &cols, out.item_mut(i));
    }
    add_bias(&mut out, bias);
    out.ensure_finite("conv_transpose2d forward")?;
    Ok((
        out,
        ConvTranspose2dCache {
            geometry: g,
            input: input.clone(),
        },
    ))
}

pub fn conv_transpose2d_backward(
    cache: &ConvTranspose2dCache,
    weight: &Tensor,
    grad_out: &Tensor,
    need_input: bool,
) -> Result<ConvGrads, NeuralError> {
    let g = &cache.geometry;
    let x = &cache.input;
    let c_in = x.c();
    if grad_out.shape() != [x.n(), g.channels, g.height, g.width] {
        return Err(NeuralError::Shape(format!(
            "conv_transpose grad {:?}",
            grad_out.shape()
        )));
    }
    let (rows, ncols) = (g.rows(), g.cols());
    let mut gw = vec![0.0; weight.len()];
    let mut input = need_input.then(|| Tensor::zeros(x.shape()));
    let mut dcols = vec![0.0; rows * ncols];
    for i in 0..x.n() {
        im2col(g, grad_out.item(i), &mut dcols);
        gemm(c_in, ncols, rows, x.item(i), false, &dcols, true, &mut gw, 1.0);
        if let Some(gi) = input.as_mut() {
            gemm(c_in, rows, ncols, weight.data(), false, &dcols, false, gi.item_mut(i), 0.0);
        }
    }
    if let Some(gi) = &input {
        gi.ensure_finite("conv_transpose2d backward")?;
    }
    Ok(ConvGrads {
        input,
        weight: gw,
        bias: bias_grad(grad_out),
    })
}
