//! Closed-form multipliers for a log-separable game, checked against the
//! KKT conditions at the inner maximizers.

use stackgda::kkt::{
    closed_form_multipliers, verify_homogeneity, verify_kkt_stationarity, CobbDouglasToyGame, LogSeparableGame,
    StructuredGameSpec,
};

fn main() -> stackgda::Result<()> {
    let spec = StructuredGameSpec::new(vec![2.0, 0.5], vec![1.0, 1.5], vec![3.0, 4.0])?;
    let lambda = closed_form_multipliers(&spec)?;
    println!("lambda* = {lambda:?}");

    let game = CobbDouglasToyGame::new(
        spec,
        vec![vec![0.3, 0.7], vec![0.5, 0.5]],
        vec![vec![0.6, 0.4], vec![0.1, 0.9]],
    )?;
    let outer = vec![vec![1.0, 2.0], vec![0.5, 4.0], vec![3.0, 3.0]];
    let report = verify_kkt_stationarity(&game, &lambda, |x| game.inner_argmax(x), &outer)?;
    println!("KKT residuals: {report:?}");

    let h = verify_homogeneity(
        |y| game.f2(&outer[0], 0, y),
        &[vec![0.4, 1.1], vec![2.0, 0.3]],
        &[0.5, 2.0, 7.0],
    );
    println!("f2 homogeneity violation: {:.2e}", h.max_violation());

    let fisher = closed_form_multipliers(&StructuredGameSpec::fisher(&[12.0, 17.5, 10.25])?)?;
    println!("Fisher program multipliers: {fisher:?}");
    Ok(())
}
