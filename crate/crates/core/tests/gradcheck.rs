//! Central finite-difference oracle for the analytic layer gradients.

use fairfix_core::net::{Activation, DenseLayer, Matrix, Model};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;
const REL_TOL: f64 = 1e-4;
const ABS_FLOOR: f64 = 1e-8;

fn random_model(rng: &mut ChaCha8Rng) -> Model {
    let depth = rng.gen_range(1..=3);
    let hidden_acts = [
        Activation::Relu,
        Activation::Sigmoid,
        Activation::Tanh,
        Activation::Identity,
    ];
    let mut dims = vec![rng.gen_range(2..=8)];
    for _ in 0..depth {
        dims.push(rng.gen_range(2..=8));
    }
    let mut layers = Vec::new();
    for l in 0..depth {
        let (in_dim, out_dim) = (dims[l], dims[l + 1]);
        let mut w = Matrix::zeros(in_dim, out_dim);
        for i in 0..in_dim {
            for j in 0..out_dim {
                w.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        let biases: Vec<f64> = (0..out_dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let act = if l == depth - 1 {
            Activation::Softmax
        } else {
            hidden_acts[rng.gen_range(0..hidden_acts.len())]
        };
        layers.push(DenseLayer::new(w, biases, act).unwrap());
    }
    Model::new(dims[0], layers).unwrap()
}

fn random_samples(rng: &mut ChaCha8Rng, model: &Model, n: usize) -> Vec<(Vec<f64>, usize)> {
    (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..model.input_dim())
                .map(|_| rng.gen_range(-2.0..2.0))
                .collect();
            let y = rng.gen_range(0..model.num_classes());
            (x, y)
        })
        .collect()
}

/// Rebuilds the model with a single weight shifted; independent of the
/// patching code under test elsewhere.
fn shifted_model(model: &Model, layer: usize, row: usize, col: usize, delta: f64) -> Model {
    let layers = model
        .layers()
        .iter()
        .enumerate()
        .map(|(l, src)| {
            let mut data = src.weights().as_slice().to_vec();
            if l == layer {
                data[row * src.out_dim() + col] += delta;
            }
            let w = Matrix::from_flat(src.in_dim(), src.out_dim(), data).unwrap();
            DenseLayer::new(w, src.biases().to_vec(), src.activation()).unwrap()
        })
        .collect();
    Model::new(model.input_dim(), layers).unwrap()
}

fn mean_loss(model: &Model, samples: &[(Vec<f64>, usize)]) -> f64 {
    samples
        .iter()
        .map(|(x, y)| model.loss(x, *y).unwrap())
        .sum::<f64>()
        / samples.len() as f64
}

/// Runs the check for every layer of every random net; returns the worst
/// relative error seen.
pub fn max_gradient_error(seeds: core::ops::Range<u64>) -> f64 {
    let mut worst: f64 = 0.0;
    for seed in seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng);
        let samples = random_samples(&mut rng, &model, 6);
        let sample_refs: Vec<(&[f64], usize)> =
            samples.iter().map(|(x, y)| (x.as_slice(), *y)).collect();
        for layer in 0..model.num_layers() {
            let grad = model.grad_target_layer(&sample_refs, layer).unwrap();
            for row in 0..grad.rows() {
                for col in 0..grad.cols() {
                    let plus = shifted_model(&model, layer, row, col, H);
                    let minus = shifted_model(&model, layer, row, col, -H);
                    let fd = (mean_loss(&plus, &samples) - mean_loss(&minus, &samples)) / (2.0 * H);
                    let analytic = grad.get(row, col);
                    let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(ABS_FLOOR);
                    worst = worst.max(rel);
                    assert!(
                        rel < REL_TOL,
                        "seed {seed} layer {layer} weight ({row}, {col}): analytic {analytic}, fd {fd}, rel {rel}"
                    );
                }
            }
        }
    }
    worst
}

#[test]
fn analytic_gradients_match_central_differences() {
    let worst = max_gradient_error(0..5);
    assert!(worst < REL_TOL);
}
