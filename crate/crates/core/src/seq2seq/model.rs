use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use super::{Affine, Layout, ModelParams, Seq2SeqError, Vocab};
use crate::rng::Rng;

/// How the forward pass runs.
pub enum Mode<'r> {
    /// No dropout; the decoder is fed the targets.
    Eval,
    /// Dropout masks drawn from `rng`; the decoder is fed the targets under
    /// teacher forcing and its own argmax predictions otherwise.
    Train { rng: &'r mut Rng, teacher_forcing: bool },
}

/// Output distribution and attention weights of one decoder step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepTrace {
    pub probs: Vec<f64>,
    pub attention: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct Forward {
    /// Mean cross-entropy over target positions, end marker included.
    pub loss: f64,
    pub steps: Vec<StepTrace>,
    tape: Tape,
}

impl Forward {
    /// Argmax class per step.
    pub fn predictions(&self) -> Vec<usize> {
        self.steps.iter().map(|s| argmax(&s.probs)).collect()
    }
}

#[derive(Clone, Debug)]
struct Cell {
    /// Layer input followed by the previous hidden state.
    v: Vec<f64>,
    c_prev: Vec<f64>,
    /// Activated gates: input, forget, candidate, output.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

#[derive(Clone, Debug, Default)]
struct Stack {
    tokens: Vec<usize>,
    /// Per step: embedding mask, then one mask per layer boundary. Empty
    /// vectors mean no dropout.
    masks: Vec<Vec<Vec<f64>>>,
    cells: Vec<Vec<Cell>>,
    /// Top-layer hidden state per step.
    top: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
struct AttnStep {
    alpha: Vec<f64>,
    ctx: Vec<f64>,
    /// `tanh(W_c [ctx; h] + b_c)`
    a: Vec<f64>,
}

#[derive(Clone, Debug, Default)]
struct Tape {
    enc: Stack,
    dec: Stack,
    /// `W_a e_i` per encoder position.
    attn: Vec<AttnStep>,
    features: Vec<Vec<f64>>,
    targets: Vec<usize>,
}

pub(crate) enum Feed<'t> {
    Targets { targets: &'t [usize], teacher: bool },
    Greedy { max_len: usize },
}

struct Net<'a> {
    p: &'a [f64],
    lay: Layout,
    hidden: usize,
    layers: usize,
    dropout: f64,
    sos: usize,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ca, ra) = a.split_at(a.len() / 4 * 4);
    let (cb, rb) = b.split_at(ca.len());
    for (x, y) in ca.chunks_exact(4).zip(cb.chunks_exact(4)) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

fn softmax(xs: &mut [f64]) {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for x in xs.iter_mut() {
        *x = libm::exp(*x - m);
        s += *x;
    }
    for x in xs.iter_mut() {
        *x /= s;
    }
}

fn draw_mask(n: usize, p: f64, rng: &mut Option<&mut Rng>) -> Vec<f64> {
    match rng {
        Some(rng) if p > 0.0 => {
            let keep = 1.0 / (1.0 - p);
            (0..n).map(|_| if rng.gen_bool(p) { 0.0 } else { keep }).collect()
        }
        _ => Vec::new(),
    }
}

fn apply_mask(x: &mut [f64], mask: &[f64]) {
    if !mask.is_empty() {
        for (xi, m) in x.iter_mut().zip(mask) {
            *xi *= m;
        }
    }
}

impl<'a> Net<'a> {
    fn new(params: &'a ModelParams) -> Self {
        Net {
            p: &params.values,
            lay: params.layout(),
            hidden: params.config.hidden,
            layers: params.config.layers,
            dropout: params.config.dropout,
            sos: params.vocab.sos(),
        }
    }

    fn row(&self, a: Affine, r: usize) -> &[f64] {
        &self.p[a.w + r * a.cols..a.w + (r + 1) * a.cols]
    }

    /// `W x + b`
    fn affine(&self, a: Affine, x: &[f64]) -> Vec<f64> {
        (0..a.rows)
            .map(|r| dot(self.row(a, r), x) + a.b.map_or(0.0, |b| self.p[b + r]))
            .collect()
    }

    fn lstm(&self, a: Affine, v: Vec<f64>, c_prev: &[f64]) -> (Cell, Vec<f64>, Vec<f64>) {
        let h = self.hidden;
        let mut gates = self.affine(a, &v);
        for (k, z) in gates.iter_mut().enumerate() {
            *z = if (2 * h..3 * h).contains(&k) { libm::tanh(*z) } else { sigmoid(*z) };
        }
        let mut c = vec![0.0; h];
        let mut tanh_c = vec![0.0; h];
        let mut out = vec![0.0; h];
        for k in 0..h {
            c[k] = gates[h + k] * c_prev[k] + gates[k] * gates[2 * h + k];
            tanh_c[k] = libm::tanh(c[k]);
            out[k] = gates[3 * h + k] * tanh_c[k];
        }
        let cell = Cell {
            v,
            c_prev: c_prev.to_vec(),
            gates,
            tanh_c,
        };
        (cell, out, c)
    }

    /// One step through the layer stack; `hs`/`cs` are updated in place.
    fn stack_step(
        &self,
        lstm: &[Affine],
        embed: Affine,
        token: usize,
        hs: &mut [Vec<f64>],
        cs: &mut [Vec<f64>],
        rng: &mut Option<&mut Rng>,
        stack: &mut Stack,
    ) {
        let mut masks = Vec::with_capacity(self.layers);
        let mut x = self.row(embed, token).to_vec();
        let m = draw_mask(x.len(), self.dropout, rng);
        apply_mask(&mut x, &m);
        masks.push(m);
        let mut cells = Vec::with_capacity(self.layers);
        for l in 0..self.layers {
            if l > 0 {
                x = hs[l - 1].clone();
                let m = draw_mask(x.len(), self.dropout, rng);
                apply_mask(&mut x, &m);
                masks.push(m);
            }
            let mut v = x;
            v.extend_from_slice(&hs[l]);
            let (cell, h, c) = self.lstm(lstm[l], v, &cs[l]);
            hs[l] = h;
            cs[l] = c;
            cells.push(cell);
            x = Vec::new();
        }
        stack.tokens.push(token);
        stack.masks.push(masks);
        stack.cells.push(cells);
        stack.top.push(hs[self.layers - 1].clone());
    }

    fn run(&self, input: &[usize], feed: Feed<'_>, mut rng: Option<&mut Rng>) -> (Tape, Vec<StepTrace>, Vec<usize>) {
        let h = self.hidden;
        let mut tape = Tape::default();
        let mut hs = vec![vec![0.0; h]; self.layers];
        let mut cs = vec![vec![0.0; h]; self.layers];
        for &t in input {
            self.stack_step(&self.lay.enc_lstm, self.lay.enc_embed, t, &mut hs, &mut cs, &mut rng, &mut tape.enc);
        }

        let (n_steps, targets) = match feed {
            Feed::Targets { targets, .. } => (targets.len(), Some(targets)),
            Feed::Greedy { max_len } => (max_len + 1, None),
        };
        let teacher = matches!(feed, Feed::Targets { teacher: true, .. });
        let mut steps = Vec::with_capacity(n_steps);
        let mut emitted = Vec::new();
        let mut token = self.sos;
        for j in 0..n_steps {
            self.stack_step(&self.lay.dec_lstm, self.lay.dec_embed, token, &mut hs, &mut cs, &mut rng, &mut tape.dec);
            let top = tape.dec.top.last().expect("just pushed");
            let (feature, attention) = match self.lay.attention {
                Some(wc) => {
                    let mut alpha: Vec<f64> = tape.enc.top.iter().map(|e| dot(top, e)).collect();
                    softmax(&mut alpha);
                    let mut ctx = vec![0.0; h];
                    for (al, e) in alpha.iter().zip(&tape.enc.top) {
                        axpy(&mut ctx, *al, e);
                    }
                    let mut v = ctx.clone();
                    v.extend_from_slice(top);
                    let a: Vec<f64> = self.affine(wc, &v).into_iter().map(libm::tanh).collect();
                    tape.attn.push(AttnStep {
                        alpha: alpha.clone(),
                        ctx,
                        a: a.clone(),
                    });
                    (a, Some(alpha))
                }
                None => (top.clone(), None),
            };
            let mut probs = self.affine(self.lay.out, &feature);
            softmax(&mut probs);
            tape.features.push(feature);
            let pred = argmax(&probs);
            steps.push(StepTrace { probs, attention });
            match targets {
                Some(t) => token = if teacher { t[j] } else { pred },
                None => {
                    if pred == Vocab::EOS || j == n_steps - 1 {
                        break;
                    }
                    emitted.push(pred);
                    token = pred;
                }
            }
        }
        if let Some(t) = targets {
            tape.targets = t.to_vec();
        }
        (tape, steps, emitted)
    }
}

fn check_tokens(params: &ModelParams, input: &[usize], target: &[usize]) -> Result<(), Seq2SeqError> {
    let n_in = params.vocab.n_input();
    let n_cls = params.vocab.n_classes();
    if let Some(t) = input.iter().find(|t| **t >= n_in) {
        return Err(Seq2SeqError::UnknownToken(alloc::format!("input index {t}")));
    }
    if let Some(t) = target.iter().find(|t| **t >= n_cls) {
        return Err(Seq2SeqError::UnknownToken(alloc::format!("output index {t}")));
    }
    if target.is_empty() {
        return Err(Seq2SeqError::UnknownToken("empty target".into()));
    }
    Ok(())
}

/// Forward pass with cross-entropy loss. `input` and `target` are token
/// indices including their end markers (see [`Vocab`]). The encoder stops at
/// the first end marker.
pub fn forward(params: &ModelParams, input: &[usize], target: &[usize], mode: Mode<'_>) -> Result<Forward, Seq2SeqError> {
    check_tokens(params, input, target)?;
    let input = truncate_at_eos(input);
    let net = Net::new(params);
    let (rng, teacher) = match mode {
        Mode::Eval => (None, true),
        Mode::Train { rng, teacher_forcing } => (Some(rng), teacher_forcing),
    };
    let (tape, steps, _) = net.run(input, Feed::Targets { targets: target, teacher }, rng);
    let loss = steps
        .iter()
        .zip(target)
        .map(|(s, &t)| -libm::log(s.probs[t]))
        .sum::<f64>()
        / target.len() as f64;
    Ok(Forward { loss, steps, tape })
}

fn truncate_at_eos(input: &[usize]) -> &[usize] {
    match input.iter().position(|t| *t == Vocab::EOS) {
        Some(i) => &input[..=i],
        None => input,
    }
}

/// Greedy decoding: argmax symbols until the end marker or `max_len`.
pub(crate) fn greedy(params: &ModelParams, input: &[usize], max_len: usize) -> Vec<usize> {
    let net = Net::new(params);
    let (_, _, emitted) = net.run(truncate_at_eos(input), Feed::Greedy { max_len }, None);
    emitted
}

/// Greedy decoding that also returns every step's distribution and
/// attention weights.
pub(crate) fn greedy_trace(params: &ModelParams, input: &[usize], max_len: usize) -> (Vec<usize>, Vec<StepTrace>) {
    let net = Net::new(params);
    let (_, steps, emitted) = net.run(truncate_at_eos(input), Feed::Greedy { max_len }, None);
    (emitted, steps)
}

/// Forward pass followed by backpropagation through time; the gradient has
/// the parameter layout.
pub fn forward_backward(
    params: &ModelParams,
    input: &[usize],
    target: &[usize],
    mode: Mode<'_>,
) -> Result<(Forward, Vec<f64>), Seq2SeqError> {
    let mut grad = vec![0.0; params.values.len()];
    let fwd = forward_backward_into(params, input, target, mode, &mut grad)?;
    Ok((fwd, grad))
}

/// Like [`forward_backward`], but adds the gradient into `grad`, which must
/// have the parameter layout.
pub fn forward_backward_into(
    params: &ModelParams,
    input: &[usize],
    target: &[usize],
    mode: Mode<'_>,
    grad: &mut [f64],
) -> Result<Forward, Seq2SeqError> {
    if grad.len() != params.values.len() {
        return Err(Seq2SeqError::ShapeMismatch {
            got: grad.len(),
            want: params.values.len(),
        });
    }
    let fwd = forward(params, input, target, mode)?;
    Net::new(params).backward(&fwd, grad);
    Ok(fwd)
}

impl Net<'_> {
    /// Accumulates `dW += dz vᵀ`, `db += dz` and returns `Wᵀ dz`.
    fn affine_back(&self, g: &mut [f64], a: Affine, v: &[f64], dz: &[f64]) -> Vec<f64> {
        let mut dv = vec![0.0; a.cols];
        for r in 0..a.rows {
            let d = dz[r];
            if d == 0.0 {
                continue;
            }
            axpy(&mut g[a.w + r * a.cols..a.w + (r + 1) * a.cols], d, v);
            axpy(&mut dv, d, self.row(a, r));
            if let Some(b) = a.b {
                g[b + r] += d;
            }
        }
        dv
    }

    /// `Wᵀ dz`, accumulating only the bias gradient.
    fn affine_back_input(&self, g: &mut [f64], a: Affine, dz: &[f64]) -> Vec<f64> {
        let mut dv = vec![0.0; a.cols];
        for (r, &d) in dz.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            axpy(&mut dv, d, self.row(a, r));
            if let Some(b) = a.b {
                g[b + r] += d;
            }
        }
        dv
    }

    /// `dW += Σ_t dz_t v_tᵀ` in one pass over the rows of `dW`.
    fn weight_back<'v>(&self, g: &mut [f64], a: Affine, terms: impl Iterator<Item = (&'v [f64], &'v [f64])> + Clone) {
        for r in 0..a.rows {
            let row = &mut g[a.w + r * a.cols..a.w + (r + 1) * a.cols];
            for (v, dz) in terms.clone() {
                if dz[r] != 0.0 {
                    axpy(row, dz[r], v);
                }
            }
        }
    }

    /// Backward through one cell given gradients on its hidden and cell
    /// outputs; returns gradients on the gate pre-activations and on the
    /// previous cell state.
    fn lstm_back(&self, cell: &Cell, dh: &[f64], dc: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let h = self.hidden;
        let gt = &cell.gates;
        let mut dz = vec![0.0; 4 * h];
        let mut dc_prev = vec![0.0; h];
        for k in 0..h {
            let (i, f, gg, o) = (gt[k], gt[h + k], gt[2 * h + k], gt[3 * h + k]);
            let tc = cell.tanh_c[k];
            let dct = dc[k] + dh[k] * o * (1.0 - tc * tc);
            dz[k] = dct * gg * i * (1.0 - i);
            dz[h + k] = dct * cell.c_prev[k] * f * (1.0 - f);
            dz[2 * h + k] = dct * i * (1.0 - gg * gg);
            dz[3 * h + k] = dh[k] * tc * o * (1.0 - o);
            dc_prev[k] = dct * f;
        }
        (dz, dc_prev)
    }

    /// Backward through a stack; `extra[t]` is added to the top hidden
    /// gradient at step `t`. Returns the gradients on the initial states.
    fn stack_back(
        &self,
        g: &mut [f64],
        lstm: &[Affine],
        embed: Affine,
        stack: &Stack,
        extra: &[Vec<f64>],
        mut dh_next: Vec<Vec<f64>>,
        mut dc_next: Vec<Vec<f64>>,
    ) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let h = self.hidden;
        let top = self.layers - 1;
        let n = stack.tokens.len();
        let mut dzs: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(n); self.layers];
        for t in (0..n).rev() {
            let mut dh_layer: Vec<f64> = dh_next[top].clone();
            axpy(&mut dh_layer, 1.0, &extra[t]);
            for l in (0..self.layers).rev() {
                let cell = &stack.cells[t][l];
                let (dz, dc_prev) = self.lstm_back(cell, &dh_layer, &dc_next[l]);
                let dv = self.affine_back_input(g, lstm[l], &dz);
                dzs[l].push(dz);
                let in_len = dv.len() - h;
                dh_next[l] = dv[in_len..].to_vec();
                dc_next[l] = dc_prev;
                let mut dx = dv[..in_len].to_vec();
                apply_mask(&mut dx, &stack.masks[t][l]);
                if l > 0 {
                    dh_layer = dh_next[l - 1].clone();
                    axpy(&mut dh_layer, 1.0, &dx);
                } else {
                    let tok = stack.tokens[t];
                    axpy(&mut g[embed.w + tok * embed.cols..embed.w + (tok + 1) * embed.cols], 1.0, &dx);
                }
            }
        }
        for (l, dz) in dzs.iter().enumerate() {
            let terms = dz.iter().rev().enumerate().map(|(t, d)| (stack.cells[t][l].v.as_slice(), d.as_slice()));
            self.weight_back(g, lstm[l], terms);
        }
        (dh_next, dc_next)
    }

    /// Adds the gradient of `fwd.loss` to `g`.
    fn backward(&self, fwd: &Forward, g: &mut [f64]) {
        let h = self.hidden;
        let tape = &fwd.tape;
        let n = tape.targets.len() as f64;
        let n_enc = tape.enc.tokens.len();
        let mut d_top_dec = Vec::with_capacity(tape.targets.len());
        let mut d_enc_top = vec![vec![0.0; h]; n_enc];

        for (j, step) in fwd.steps.iter().enumerate() {
            let mut dlogits = step.probs.clone();
            dlogits[tape.targets[j]] -= 1.0;
            for d in dlogits.iter_mut() {
                *d /= n;
            }
            let df = self.affine_back(g, self.lay.out, &tape.features[j], &dlogits);
            let top = &tape.dec.top[j];
            let dh = match self.lay.attention {
                Some(wc) => {
                    let at = &tape.attn[j];
                    let dz: Vec<f64> = df.iter().zip(&at.a).map(|(d, a)| d * (1.0 - a * a)).collect();
                    let mut v = at.ctx.clone();
                    v.extend_from_slice(top);
                    let dv = self.affine_back(g, wc, &v, &dz);
                    let (dctx, dh_direct) = dv.split_at(h);
                    let mut dh = dh_direct.to_vec();
                    let dalpha: Vec<f64> = tape.enc.top.iter().map(|e| dot(dctx, e)).collect();
                    let mean: f64 = at.alpha.iter().zip(&dalpha).map(|(a, d)| a * d).sum();
                    for i in 0..n_enc {
                        axpy(&mut d_enc_top[i], at.alpha[i], dctx);
                        let ds = at.alpha[i] * (dalpha[i] - mean);
                        axpy(&mut dh, ds, &tape.enc.top[i]);
                        axpy(&mut d_enc_top[i], ds, top);
                    }
                    dh
                }
                None => df,
            };
            d_top_dec.push(dh);
        }

        let zeros = vec![vec![0.0; h]; self.layers];
        let (dh0, dc0) = self.stack_back(
            g,
            &self.lay.dec_lstm,
            self.lay.dec_embed,
            &tape.dec,
            &d_top_dec,
            zeros.clone(),
            zeros,
        );
        self.stack_back(g, &self.lay.enc_lstm, self.lay.enc_embed, &tape.enc, &d_enc_top, dh0, dc0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::Lexicon;
    use crate::rng;
    use crate::seq2seq::{init_model, ModelConfig};

    fn model(hidden: usize, layers: usize, dropout: f64, attention: bool, seed: u64) -> ModelParams {
        let vocab = Vocab::from_lexicon(&Lexicon::canonical());
        init_model(&ModelConfig::new(layers, hidden, dropout, attention), &vocab, seed).unwrap()
    }

    fn example(p: &ModelParams) -> (Vec<usize>, Vec<usize>) {
        let instr = "wif blicket dax kiki lug".parse().unwrap();
        let out = "BLUE GREEN RED GREEN".parse().unwrap();
        (p.vocab.encode_input(&instr).unwrap(), p.vocab.encode_output(&out).unwrap())
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / (a.abs() + b.abs()).max(1e-6)
    }

    /// Central differences on 200 random coordinates.
    fn grad_check(p: &ModelParams, dropout_seed: Option<u64>, teacher: bool) -> f64 {
        let (x, y) = example(p);
        let loss_at = |q: &ModelParams| -> f64 {
            match dropout_seed {
                Some(s) => {
                    let mut r = rng::seeded(s);
                    forward(q, &x, &y, Mode::Train { rng: &mut r, teacher_forcing: teacher }).unwrap().loss
                }
                None => forward(q, &x, &y, Mode::Eval).unwrap().loss,
            }
        };
        let grad = match dropout_seed {
            Some(s) => {
                let mut r = rng::seeded(s);
                forward_backward(p, &x, &y, Mode::Train { rng: &mut r, teacher_forcing: teacher }).unwrap().1
            }
            None => forward_backward(p, &x, &y, Mode::Eval).unwrap().1,
        };
        let mut pick = rng::seeded(77);
        let eps = 1e-4;
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            let k = pick.gen_range(0..p.values.len());
            let mut q = p.clone();
            q.values[k] += eps;
            let up = loss_at(&q);
            q.values[k] -= 2.0 * eps;
            let down = loss_at(&q);
            let numeric = (up - down) / (2.0 * eps);
            worst = worst.max(rel_err(grad[k], numeric));
        }
        worst
    }

    /// Larger weights than the default init, so gradients are not tiny.
    fn spread(mut p: ModelParams) -> ModelParams {
        for v in p.values.iter_mut() {
            *v *= 6.0;
        }
        p
    }

    #[test]
    fn gradients_match_finite_differences() {
        for attention in [false, true] {
            for layers in [1, 2] {
                let p = spread(model(4, layers, 0.0, attention, 3));
                let e = grad_check(&p, None, true);
                assert!(e < 1e-4, "attention={attention} layers={layers}: {e}");
            }
        }
    }

    #[test]
    fn gradients_with_fixed_dropout_masks() {
        for attention in [false, true] {
            let p = spread(model(4, 2, 0.3, attention, 5));
            let e = grad_check(&p, Some(12), true);
            assert!(e < 1e-4, "attention={attention}: {e}");
            let e = grad_check(&p, Some(13), false);
            assert!(e < 1e-4, "free-running attention={attention}: {e}");
        }
    }

    #[test]
    fn distributions_are_normalized() {
        let p = model(6, 2, 0.0, true, 1);
        let (x, y) = example(&p);
        let f = forward(&p, &x, &y, Mode::Eval).unwrap();
        for s in &f.steps {
            assert!((s.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let a = s.attention.as_ref().unwrap();
            assert!(a.iter().all(|w| *w >= 0.0));
            assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(a.len(), x.len());
        }
    }

    #[test]
    fn uniform_output_costs_log_k() {
        let mut p = model(5, 1, 0.0, false, 2);
        let out = p.layout().out;
        for v in &mut p.values[out.w..out.w + out.rows * out.cols + out.rows] {
            *v = 0.0;
        }
        let (x, y) = example(&p);
        let f = forward(&p, &x, &y, Mode::Eval).unwrap();
        assert!((f.loss - 7f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn eval_is_reproducible() {
        let p = model(8, 2, 0.5, true, 4);
        let (x, y) = example(&p);
        let a = forward(&p, &x, &y, Mode::Eval).unwrap().loss;
        let b = forward(&p, &x, &y, Mode::Eval).unwrap().loss;
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn encoder_stops_at_the_first_end_marker() {
        let p = model(4, 1, 0.0, false, 4);
        let (x, y) = example(&p);
        let mut longer = x.clone();
        longer.extend([1, 2, 3]);
        let a = forward(&p, &x, &y, Mode::Eval).unwrap().loss;
        let b = forward(&p, &longer, &y, Mode::Eval).unwrap().loss;
        assert_eq!(a, b);
    }

    #[test]
    fn out_of_range_tokens() {
        let p = model(4, 1, 0.0, false, 4);
        assert!(matches!(forward(&p, &[99, 0], &[0], Mode::Eval), Err(Seq2SeqError::UnknownToken(_))));
        assert!(matches!(forward(&p, &[1, 0], &[7], Mode::Eval), Err(Seq2SeqError::UnknownToken(_))));
    }
}
