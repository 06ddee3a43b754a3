//! Single-sample layer kernels and their backward passes.
//!
//! Feature maps are channel-major: `x[c * len + t]`.

/// Same-padded stride-1 convolution. `w` is `[out][inp][k]`.
pub fn conv_forward(x: &[f64], inp: usize, len: usize, w: &[f64], b: &[f64], out: usize, k: usize) -> Vec<f64> {
    let pad = k / 2;
    let mut y = vec![0.0; out * len];
    for f in 0..out {
        let yf = &mut y[f * len..(f + 1) * len];
        yf.fill(b[f]);
        for c in 0..inp {
            let xc = &x[c * len..(c + 1) * len];
            let wfc = &w[(f * inp + c) * k..(f * inp + c + 1) * k];
            for (j, &wv) in wfc.iter().enumerate() {
                // y[t] += w * x[t + j - pad] over the valid range of t.
                let lo = pad.saturating_sub(j);
                let hi = (len + pad).saturating_sub(j).min(len);
                if lo >= hi {
                    continue;
                }
                let xs = &xc[lo + j - pad..hi + j - pad];
                for (yv, xv) in yf[lo..hi].iter_mut().zip(xs) {
                    *yv += wv * xv;
                }
            }
        }
    }
    y
}

/// Accumulates weight and bias gradients; returns the input gradient.
#[allow(clippy::too_many_arguments)]
pub fn conv_backward(
    x: &[f64],
    inp: usize,
    len: usize,
    w: &[f64],
    out: usize,
    k: usize,
    dy: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
) -> Vec<f64> {
    let pad = k / 2;
    let mut dx = vec![0.0; inp * len];
    for f in 0..out {
        let dyf = &dy[f * len..(f + 1) * len];
        db[f] += dyf.iter().sum::<f64>();
        for c in 0..inp {
            let xc = &x[c * len..(c + 1) * len];
            let base = (f * inp + c) * k;
            let dxc = &mut dx[c * len..(c + 1) * len];
            for j in 0..k {
                let lo = pad.saturating_sub(j);
                let hi = (len + pad).saturating_sub(j).min(len);
                if lo >= hi {
                    continue;
                }
                let range = lo + j - pad..hi + j - pad;
                let dys = &dyf[lo..hi];
                dw[base + j] += dys.iter().zip(&xc[range.clone()]).map(|(a, b)| a * b).sum::<f64>();
                let wv = w[base + j];
                for (d, g) in dxc[range].iter_mut().zip(dys) {
                    *d += wv * g;
                }
            }
        }
    }
    dx
}

pub const NORM_EPS: f64 = 1e-8;

/// Per-channel normalization over `len` values followed by an affine map.
/// Returns the output and the normalized values.
pub fn norm_forward(x: &[f64], ch: usize, len: usize, gamma: &[f64], beta: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut y = vec![0.0; ch * len];
    let mut xhat = vec![0.0; ch * len];
    let mut inv_std = vec![0.0; ch];
    for c in 0..ch {
        let xc = &x[c * len..(c + 1) * len];
        let mean = xc.iter().sum::<f64>() / len as f64;
        let var = xc.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / len as f64;
        let is = 1.0 / (var + NORM_EPS).sqrt();
        inv_std[c] = is;
        for t in 0..len {
            let h = (xc[t] - mean) * is;
            xhat[c * len + t] = h;
            y[c * len + t] = gamma[c] * h + beta[c];
        }
    }
    (y, xhat, inv_std)
}

#[allow(clippy::too_many_arguments)]
pub fn norm_backward(
    xhat: &[f64],
    inv_std: &[f64],
    ch: usize,
    len: usize,
    gamma: &[f64],
    dy: &[f64],
    dgamma: &mut [f64],
    dbeta: &mut [f64],
) -> Vec<f64> {
    let n = len as f64;
    let mut dx = vec![0.0; ch * len];
    for c in 0..ch {
        let h = &xhat[c * len..(c + 1) * len];
        let g = &dy[c * len..(c + 1) * len];
        let mut sum_g = 0.0;
        let mut sum_gh = 0.0;
        for t in 0..len {
            sum_g += g[t];
            sum_gh += g[t] * h[t];
        }
        dgamma[c] += sum_gh;
        dbeta[c] += sum_g;
        // With dh = gamma * g: dx = inv_std / n * (n dh - sum dh - h sum(dh h)).
        let scale = gamma[c] * inv_std[c] / n;
        for t in 0..len {
            dx[c * len + t] = scale * (n * g[t] - sum_g - h[t] * sum_gh);
        }
    }
    dx
}

pub fn prelu_forward(x: &[f64], ch: usize, len: usize, a: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    for c in 0..ch {
        for v in &mut y[c * len..(c + 1) * len] {
            if *v <= 0.0 {
                *v *= a[c];
            }
        }
    }
    y
}

pub fn prelu_backward(x: &[f64], ch: usize, len: usize, a: &[f64], dy: &[f64], da: &mut [f64]) -> Vec<f64> {
    let mut dx = dy.to_vec();
    for c in 0..ch {
        for t in c * len..(c + 1) * len {
            if x[t] <= 0.0 {
                da[c] += x[t] * dy[t];
                dx[t] *= a[c];
            }
        }
    }
    dx
}

/// Non-overlapping width-2 max pooling; a trailing odd element is dropped.
/// Returns the pooled map and the winning input index of each output.
pub fn pool_forward(x: &[f64], ch: usize, len: usize) -> (Vec<f64>, Vec<usize>) {
    let half = len / 2;
    let mut y = Vec::with_capacity(ch * half);
    let mut arg = Vec::with_capacity(ch * half);
    for c in 0..ch {
        for t in 0..half {
            let i = c * len + 2 * t;
            let j = if x[i + 1] > x[i] { i + 1 } else { i };
            y.push(x[j]);
            arg.push(j);
        }
    }
    (y, arg)
}

pub fn pool_backward(arg: &[usize], in_size: usize, dy: &[f64]) -> Vec<f64> {
    let mut dx = vec![0.0; in_size];
    for (&i, &g) in arg.iter().zip(dy) {
        dx[i] += g;
    }
    dx
}

fn softmax_in_place(v: &mut [f64]) {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for x in v.iter_mut() {
        *x = (*x - m).exp();
        s += *x;
    }
    for x in v.iter_mut() {
        *x /= s;
    }
}

pub fn softmax(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    softmax_in_place(&mut out);
    out
}

/// Splits channels at `split`; weights the first half by a per-channel
/// softmax over time of the second half and sums over time. Returns the
/// pooled vector and the attention weights.
pub fn attention_forward(x: &[f64], ch: usize, len: usize, split: usize) -> (Vec<f64>, Vec<f64>) {
    debug_assert_eq!(ch, 2 * split);
    let mut weights = x[split * len..].to_vec();
    let mut z = vec![0.0; split];
    for c in 0..split {
        let s = &mut weights[c * len..(c + 1) * len];
        softmax_in_place(s);
        z[c] = x[c * len..(c + 1) * len].iter().zip(s.iter()).map(|(a, b)| a * b).sum();
    }
    (z, weights)
}

pub fn attention_backward(x: &[f64], weights: &[f64], len: usize, split: usize, dz: &[f64]) -> Vec<f64> {
    let mut dx = vec![0.0; 2 * split * len];
    for c in 0..split {
        let a = &x[c * len..(c + 1) * len];
        let s = &weights[c * len..(c + 1) * len];
        // dS = dz * a; dB = S * (dS - sum(dS S)).
        let dot: f64 = a.iter().zip(s).map(|(a, s)| a * s).sum::<f64>() * dz[c];
        for t in 0..len {
            dx[c * len + t] = dz[c] * s[t];
            dx[(split + c) * len + t] = s[t] * (dz[c] * a[t] - dot);
        }
    }
    dx
}

/// `w` is `[out][inp]`.
pub fn dense_forward(x: &[f64], w: &[f64], b: &[f64], out: usize) -> Vec<f64> {
    let inp = x.len();
    (0..out)
        .map(|o| b[o] + w[o * inp..(o + 1) * inp].iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
        .collect()
}

pub fn dense_backward(x: &[f64], w: &[f64], out: usize, dy: &[f64], dw: &mut [f64], db: &mut [f64]) -> Vec<f64> {
    let inp = x.len();
    let mut dx = vec![0.0; inp];
    for o in 0..out {
        db[o] += dy[o];
        let row = &w[o * inp..(o + 1) * inp];
        let drow = &mut dw[o * inp..(o + 1) * inp];
        for i in 0..inp {
            drow[i] += dy[o] * x[i];
            dx[i] += dy[o] * row[i];
        }
    }
    dx
}

pub fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}
