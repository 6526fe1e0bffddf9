use mayer_core::flow::a2_diagnostics;
use mayer_core::scale::ScaleModel;
use mayer_core::QuadratureSpec;
use std::f64::consts::PI;
use std::time::Instant;

fn main() {
    let model = ScaleModel::exponential(5.0 * PI, 2.0).unwrap();
    let q = QuadratureSpec { abs_tol: 1e-7, rel_tol: 1e-7, max_subdivisions: 400 };
    // warm the tables
    let t = Instant::now();
    let _ = a2_diagnostics(&model, -2.0, 0.0, &q).unwrap();
    println!("first call (tables + eval): {:.2?}", t.elapsed());
    for t0 in [-2.0, -4.0, -8.0, -12.0] {
        let t = Instant::now();
        let (_, minus) = a2_diagnostics(&model, t0, 0.0, &q).unwrap();
        println!("t0 = {t0}: a2- = {minus:.8e}  [{:.2?}]", t.elapsed());
    }
}
