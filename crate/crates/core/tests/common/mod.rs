//! Oracles shared by the integration tests.

#![allow(dead_code)]

use fcg_core::fracture::{MaterialSpec, PlateSpec};
use fcg_core::nn::{Activation, Dense, LstmStack, LstmState, Parameterized, Tensor2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FD_STEP: f64 = 1e-6;

/// Relative error that falls back to absolute error near zero.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < 1e-6 {
        (analytic - numeric).abs()
    } else {
        (analytic - numeric).abs() / scale
    }
}

fn random_tensor(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Tensor2 {
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    Tensor2::from_vec(rows, cols, data).unwrap()
}

fn dot(a: &Tensor2, b: &Tensor2) -> f64 {
    a.data.iter().zip(&b.data).map(|(x, y)| x * y).sum()
}

/// Worst relative error between the dense backward pass and central
/// differences of a random linear functional of its output.
pub fn dense_gradient_error(seed: u64) -> (f64, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let batch = rng.random_range(1..5);
    let inputs = rng.random_range(1..8);
    let outputs = rng.random_range(1..8);
    let act = [Activation::Identity, Activation::Tanh, Activation::Sigmoid][rng.random_range(0..3)];
    let mut layer = Dense::new(inputs, outputs, act, &mut rng);
    layer.bias = random_tensor(1, outputs, &mut rng);
    let x = random_tensor(batch, inputs, &mut rng);
    let probe = random_tensor(batch, outputs, &mut rng);

    let (_, cache) = layer.forward(&x).unwrap();
    let (dx, grads) = layer.backward(&cache, &probe, true).unwrap();
    let dx = dx.unwrap();
    let analytic = grads.into_vec();

    let loss = |l: &Dense, x: &Tensor2| dot(&l.infer(x).unwrap(), &probe);
    let mut worst = 0.0f64;
    for (p, g) in analytic.iter().enumerate() {
        for i in 0..g.data.len() {
            let mut plus = layer.clone();
            plus.params_mut()[p].data[i] += FD_STEP;
            let mut minus = layer.clone();
            minus.params_mut()[p].data[i] -= FD_STEP;
            let numeric = (loss(&plus, &x) - loss(&minus, &x)) / (2.0 * FD_STEP);
            worst = worst.max(rel_err(g.data[i], numeric));
        }
    }
    for i in 0..x.data.len() {
        let mut xp = x.clone();
        xp.data[i] += FD_STEP;
        let mut xm = x.clone();
        xm.data[i] -= FD_STEP;
        let numeric = (loss(&layer, &xp) - loss(&layer, &xm)) / (2.0 * FD_STEP);
        worst = worst.max(rel_err(dx.data[i], numeric));
    }
    (worst, format!("dense {batch}x{inputs}->{outputs} {act:?}"))
}

/// Same check for a stacked LSTM unrolled over several steps, covering
/// parameters, inputs and initial states.
pub fn lstm_gradient_error(seed: u64) -> (f64, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let batch = rng.random_range(1..4);
    let inputs = rng.random_range(1..5);
    let hidden = rng.random_range(1..6);
    let depth = rng.random_range(1..3);
    let steps = rng.random_range(1..5);
    let stack = LstmStack::new(inputs, hidden, depth, &mut rng);
    let xs: Vec<Tensor2> = (0..steps).map(|_| random_tensor(batch, inputs, &mut rng)).collect();
    let init: Vec<LstmState> = (0..depth)
        .map(|_| LstmState {
            h: random_tensor(batch, hidden, &mut rng),
            c: random_tensor(batch, hidden, &mut rng),
        })
        .collect();
    let probe_out: Vec<Tensor2> = (0..steps).map(|_| random_tensor(batch, hidden, &mut rng)).collect();
    let probe_final: Vec<LstmState> = (0..depth)
        .map(|_| LstmState {
            h: random_tensor(batch, hidden, &mut rng),
            c: random_tensor(batch, hidden, &mut rng),
        })
        .collect();

    let loss = |s: &LstmStack, xs: &[Tensor2], init: &[LstmState]| {
        let trace = s.forward(xs, init).unwrap();
        let mut total: f64 = trace.outputs.iter().zip(&probe_out).map(|(o, p)| dot(o, p)).sum();
        for (st, p) in trace.final_states.iter().zip(&probe_final) {
            total += dot(&st.h, &p.h) + dot(&st.c, &p.c);
        }
        total
    };

    let trace = stack.forward(&xs, &init).unwrap();
    let (grads, d_init, d_inputs) = stack.backward(&trace, &probe_out, &probe_final).unwrap();
    let analytic: Vec<Tensor2> = grads.into_iter().flat_map(|g| g.into_vec()).collect();

    let mut worst = 0.0f64;
    for (p, g) in analytic.iter().enumerate() {
        for i in 0..g.data.len() {
            let mut plus = stack.clone();
            plus.params_mut()[p].data[i] += FD_STEP;
            let mut minus = stack.clone();
            minus.params_mut()[p].data[i] -= FD_STEP;
            let numeric = (loss(&plus, &xs, &init) - loss(&minus, &xs, &init)) / (2.0 * FD_STEP);
            worst = worst.max(rel_err(g.data[i], numeric));
        }
    }
    for t in 0..steps {
        for i in 0..xs[t].data.len() {
            let mut xp = xs.clone();
            xp[t].data[i] += FD_STEP;
            let mut xm = xs.clone();
            xm[t].data[i] -= FD_STEP;
            let numeric = (loss(&stack, &xp, &init) - loss(&stack, &xm, &init)) / (2.0 * FD_STEP);
            worst = worst.max(rel_err(d_inputs[t].data[i], numeric));
        }
    }
    for l in 0..depth {
        for which in 0..2 {
            let n = init[l].h.data.len();
            for i in 0..n {
                let bump = |delta: f64| {
                    let mut s = init.clone();
                    if which == 0 {
                        s[l].h.data[i] += delta;
                    } else {
                        s[l].c.data[i] += delta;
                    }
                    s
                };
                let numeric =
                    (loss(&stack, &xs, &bump(FD_STEP)) - loss(&stack, &xs, &bump(-FD_STEP))) / (2.0 * FD_STEP);
                let a = if which == 0 { d_init[l].h.data[i] } else { d_init[l].c.data[i] };
                worst = worst.max(rel_err(a, numeric));
            }
        }
    }
    (
        worst,
        format!("lstm batch {batch} in {inputs} hidden {hidden} depth {depth} steps {steps}"),
    )
}

/// Straight-crack life under constant tension: sum of the Paris increments
/// of every step, with the SIF evaluated independently.
pub fn closed_form_life(plate: &PlateSpec, material: &MaterialSpec, tension: f64) -> f64 {
    let limit = plate.max_crack_fraction * plate.width;
    let mut life = 0.0;
    let mut step = 0usize;
    loop {
        let a = plate.notch_length + step as f64 * plate.advance_step;
        if a >= limit {
            break;
        }
        let r = a / plate.width;
        let f = 1.12 - 0.231 * r + 10.55 * r.powi(2) - 21.72 * r.powi(3) + 30.39 * r.powi(4);
        let dk = tension * (std::f64::consts::PI * a).sqrt() * f;
        life += plate.advance_step / (material.paris_c * dk.powf(material.paris_m));
        step += 1;
    }
    life
}
