//! Exact and iterative projections onto the sets the solvers use.

use stackgda::projection::{budget_set, project_budget_exact};
use stackgda::{project, ProjectionMode, ProjectionOptions, ProjectionSpec};

fn main() -> stackgda::Result<()> {
    let v = [1.5, -0.3, 2.0];
    let dykstra = ProjectionOptions::default();
    let pocs = ProjectionOptions {
        mode: ProjectionMode::Pocs,
        ..Default::default()
    };

    let slice = ProjectionSpec::Intersection(vec![
        ProjectionSpec::unit_box(3),
        ProjectionSpec::Halfspace {
            normal: vec![1.0, 1.0, 1.0],
            offset: 1.0,
        },
    ]);
    println!("box and halfspace, dykstra: {:?}", project(&slice, &v, &dykstra)?);
    println!("box and halfspace, pocs:    {:?}", project(&slice, &v, &pocs)?);

    // a buyer with budget 10 facing prices (4, 2, 0): the free good is unconstrained
    let prices = [4.0, 2.0, 0.0];
    let budget = budget_set(&prices, 10.0);
    let wish = [3.0, 1.0, 5.0];
    println!("budget set:                 {:?}", project(&budget, &wish, &dykstra)?);
    println!("closed form:                {:?}", project_budget_exact(&prices, 10.0, &wish));
    Ok(())
}
