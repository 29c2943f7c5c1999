//! A two-layer classifier on the tape: gradient check, then a few SGD steps.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rdr::tensor::{grad_check, sgd_step, ParamRegistry, Tape, Targets, Tensor, Var, DEFAULT_EPSILON};

fn loss(tape: &mut Tape, params: &ParamRegistry) -> rdr::Result<Var> {
    let x = tape.constant(Tensor::from_rows(&[
        &[1.0, -0.5, 0.2],
        &[0.3, 0.8, -1.0],
        &[-0.7, 0.1, 0.4],
    ])?);
    let w1 = tape.param(params, "w1")?;
    let b1 = tape.param(params, "b1")?;
    let w2 = tape.param(params, "w2")?;
    let h = tape.matmul(x, w1)?;
    let h = tape.add_row(h, b1)?;
    let h = tape.tanh(h);
    let z = tape.matmul(h, w2)?;
    tape.softmax_cross_entropy(z, &Targets::Indices(vec![0, 1, 1]))
}

fn main() -> rdr::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut params = ParamRegistry::new();
    params.insert_uniform("w1", vec![3, 4], &mut rng)?;
    params.insert_uniform("b1", vec![4], &mut rng)?;
    params.insert_uniform("w2", vec![4, 2], &mut rng)?;

    let report = grad_check(loss, &params, DEFAULT_EPSILON)?;
    println!(
        "grad_check: {} elements, max relative error {:.2e}",
        report.checked, report.max_relative_error
    );

    for step in 0..=50 {
        let mut tape = Tape::new();
        let l = loss(&mut tape, &params)?;
        if step % 10 == 0 {
            println!("step {step:>2}  loss {:.6}", tape.item(l));
        }
        tape.backward_into(l, &mut params)?;
        sgd_step(&mut params, 0.5)?;
    }
    Ok(())
}
