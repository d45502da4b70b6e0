use ndarray::Array2;
use std::time::Instant;
fn main() {
    for &(b, n) in &[(256usize, 300usize), (512, 300), (256, 600), (1000, 1000)] {
        let a = Array2::<f64>::from_elem((b, n), 1.00001);
        let k = Array2::<f64>::from_elem((n, n), 0.5);
        let t = Instant::now();
        let mut acc = 0.0;
        let reps = 20;
        for _ in 0..reps {
            let c = a.dot(&k);
            acc += c[[0, 0]];
        }
        let dt = t.elapsed().as_secs_f64() / reps as f64;
        let flops = 2.0 * b as f64 * n as f64 * n as f64;
        println!("B={b} n={n}: {:.2} ms, {:.2} GFLOP/s (acc {acc:.1})", dt * 1e3, flops / dt / 1e9);
    }
    let v: Vec<f64> = (0..1_000_000).map(|i| -(i as f64) * 1e-6).collect();
    let t = Instant::now();
    let s: f64 = v.iter().map(|x| x.exp()).sum();
    println!("1M exp: {:.1} ms (s={s:.2})", t.elapsed().as_secs_f64() * 1e3);
}
