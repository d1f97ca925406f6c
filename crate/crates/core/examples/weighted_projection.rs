use chsh::{in_k, project_k, project_k_fast, ProjMatrix};

fn main() -> chsh::Result<()> {
    let points = [(2.0, 2.0), (-3.0, -0.5), (0.2, 0.3), (0.0, -1.0)];
    let diagonal = ProjMatrix::new(4.0, 0.0, 1.0)?;
    let coupled = ProjMatrix::new(4.0, 1.9, 1.0)?;

    for x in points {
        let exact = project_k(&coupled, x)?;
        let diag = project_k(&diagonal, x)?;
        let fast = project_k_fast(&diagonal, x)?;
        println!(
            "x = {x:?}  inside: {}  coupled -> ({:.6}, {:.6})  diagonal -> ({:.6}, {:.6})  branch rule -> ({:.6}, {:.6})",
            in_k(x.0, x.1, 0.0),
            exact.phi,
            exact.psi,
            diag.phi,
            diag.psi,
            fast.phi,
            fast.psi
        );
    }
    Ok(())
}
