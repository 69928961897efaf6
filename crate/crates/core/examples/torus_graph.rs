//! Lattice-torus graph: degree conservation and condensation statistics.

use bigjumps::torus::{condensation_stats, generate_graph, generate_graph_planted, GraphLimits, TorusConfig};

fn main() -> bigjumps::Result<()> {
    for half in [16, 32, 64] {
        let cfg = TorusConfig::new(2, half, 3.0, 1)?;
        let s = generate_graph(&cfg)?;
        let stats = condensation_stats(&s, 3, 0.1);
        println!(
            "N = {half:3}, n = {:6}: edges {}, rho_n {:.3}, top-3 out share {:.4}, max in share {:.5}",
            s.n(),
            s.edge_count,
            s.rho_n,
            stats.top_k_out_share,
            stats.max_in_share
        );
    }
    let cfg = TorusConfig::new(2, 16, 3.0, 1)?;
    let planted = generate_graph_planted(&cfg, &[(0, 100.0)], GraphLimits::default())?;
    let stats = condensation_stats(&planted, 1, 0.5);
    println!("one covering radius: {} big vertex, out share {:.5}", stats.big_out_count, stats.top_k_out_share);
    Ok(())
}
