//! Assembles the P1 operators on a small mesh and prints their basic
//! properties.

use chsh::{assemble_lumped_mass, assemble_stiffness, build_mesh, split_stiffness};

fn main() -> chsh::Result<()> {
    let mesh = build_mesh(4)?;
    let mass = assemble_lumped_mass(&mesh);
    let a = assemble_stiffness(&mesh)?;
    let split = split_stiffness(&a)?;

    println!("{} nodes, {} triangles", mesh.n_nodes(), mesh.n_elements());
    println!("sum of lumped mass: {}", mass.iter().sum::<f64>());
    println!("stiffness nonzeros: {}", a.nnz());

    let c = mesh.node_at(2, 2);
    print!("row of the centre node:");
    for (j, v) in a.row(c) {
        print!(" ({j}, {v})");
    }
    println!();
    println!("diagonal of the splitting at the centre: {}", split.a_diag[c]);
    Ok(())
}
