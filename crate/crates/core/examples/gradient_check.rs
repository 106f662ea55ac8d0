//! Compares reverse-mode gradients of a small MLP with central finite
//! differences.
//!
//! cargo run --example gradient_check

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sentiment_ensemble::nn::{Activation, Mlp};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let net = Mlp::new(&[4, 16, 16, 2], Activation::Tanh, Activation::Identity, &mut rng);
    let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    let upstream = [0.7, -1.3];
    // Scalar loss L = upstream . f(x), so dL/dθ is exactly what backward returns.
    let loss = |n: &Mlp| -> f64 { n.forward(&x).unwrap().iter().zip(&upstream).map(|(a, b)| a * b).sum() };

    let tape = net.backward(&x, &upstream).unwrap();
    let h = 1e-6;
    let mut worst = 0.0f64;
    for (li, (gw, gb)) in tape.params.layers.iter().enumerate() {
        for (wi, g) in gw.iter().enumerate() {
            let mut p = net.clone();
            p.layers[li].weights[wi] += h;
            let mut m = net.clone();
            m.layers[li].weights[wi] -= h;
            let fd = (loss(&p) - loss(&m)) / (2.0 * h);
            worst = worst.max((fd - g).abs() / fd.abs().max(g.abs()).max(1e-8));
        }
        for (bi, g) in gb.iter().enumerate() {
            let mut p = net.clone();
            p.layers[li].bias[bi] += h;
            let mut m = net.clone();
            m.layers[li].bias[bi] -= h;
            let fd = (loss(&p) - loss(&m)) / (2.0 * h);
            worst = worst.max((fd - g).abs() / fd.abs().max(g.abs()).max(1e-8));
        }
    }
    println!("{} parameters, max relative error {worst:.2e}", net.param_count());
}
