mod common;

use common::{dense_gradient_error, lstm_gradient_error};

const TOL: f64 = 1e-4;

#[test]
fn dense_backward_matches_finite_differences() {
    for seed in 0..24 {
        let (err, shape) = dense_gradient_error(seed);
        assert!(err < TOL, "{shape}: relative error {err:e}");
    }
}

#[test]
fn lstm_backward_matches_finite_differences() {
    for seed in 100..124 {
        let (err, shape) = lstm_gradient_error(seed);
        assert!(err < TOL, "{shape}: relative error {err:e}");
    }
}

fn check_model<M: fcg_core::nn::Parameterized + Clone>(
    model: &M,
    loss_and_grads: impl Fn(&M) -> (f64, Vec<fcg_core::nn::Tensor2>),
) -> f64 {
    let (_, grads) = loss_and_grads(model);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for (p, g) in grads.iter().enumerate() {
        // a strided subset keeps the larger blocks cheap
        let stride = (g.data.len() / 40).max(1);
        for i in (0..g.data.len()).step_by(stride) {
            let mut plus = model.clone();
            plus.params_mut()[p].data[i] += h;
            let mut minus = model.clone();
            minus.params_mut()[p].data[i] -= h;
            let numeric = (loss_and_grads(&plus).0 - loss_and_grads(&minus).0) / (2.0 * h);
            // whole-model losses are O(10), so roundoff swamps entries below ~1e-4
            let a = g.data[i];
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-4));
        }
    }
    worst
}

#[test]
fn vae_objective_gradient_matches_finite_differences() {
    use fcg_core::model::vae::standard_normal;
    use fcg_core::model::VaeModel;
    use fcg_core::nn::{ReconstructionNorm, Tensor2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    for (seed, recon) in [(1u64, ReconstructionNorm::SumSquared), (2, ReconstructionNorm::MeanSquared)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vae = VaeModel::new(8, 8, 2, &[6, 4], &mut rng).unwrap();
        let x = Tensor2::from_vec(3, 64, (0..192).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
        let noise = standard_normal(3, 2, &mut rng);
        let err = check_model(&vae, |m| m.batch_gradients(&x, &noise, recon).unwrap());
        assert!(err < TOL, "{recon:?}: {err:e}");
    }
}

#[test]
fn sequence_objective_gradient_matches_finite_differences() {
    use fcg_core::model::SeqModel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    for seed in 0..3u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = SeqModel::new(2, 4, &mut rng);
        let trajs: Vec<Vec<Vec<f64>>> = (0..3)
            .map(|_| (0..5).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect())
            .collect();
        let refs: Vec<&Vec<Vec<f64>>> = trajs.iter().collect();
        let rare = [false, true, false];
        let prefix = 1 + seed as usize;
        let err = check_model(&model, |m| m.batch_gradients(&refs, &rare, prefix, 7.0).unwrap());
        assert!(err < TOL, "seed {seed}: {err:e}");
    }
}
