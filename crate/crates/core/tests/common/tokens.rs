//! Token invariants over generated cascades.

use autocas::cascade::{build_cascade_graph, generate_synthetic_corpus, SyntheticConfig};
use autocas::global::{global_embed, GlobalEmbedConfig};
use autocas::local::{local_embed, LocalEmbedConfig};
use autocas::tokenizer::{build_sequence, FusedTable, TokenizerConfig};

/// Checks width, exact zero padding and the monotone prefix property on
/// `count` synthetic cascades; returns how many were truncated.
pub fn check_invariants(count: usize) -> Result<usize, String> {
    let corpus = generate_synthetic_corpus(&SyntheticConfig {
        num_cascades: count,
        graph_size: 1500,
        branching: 0.8,
        mean_delay: 300.0,
        seed: 11,
        ..Default::default()
    })
    .map_err(|e| e.to_string())?;
    let gcfg = GlobalEmbedConfig {
        dim: 6,
        ..Default::default()
    };
    let global = global_embed(&corpus.global, &gcfg).map_err(|e| e.to_string())?;
    let lcfg = LocalEmbedConfig {
        scales: vec![1.0],
        sample_points: vec![0.0, 3.0],
        ..Default::default()
    };
    let tcfg = TokenizerConfig {
        num_patches: 6,
        max_len: 5,
        observation_time: None,
    };
    let d = lcfg.dim() + gcfg.dim;
    let t_obs = corpus.meta.observation_time;
    let mut truncated = 0;
    for r in &corpus.records {
        let g = build_cascade_graph(r, t_obs);
        let le = local_embed(&g, &lcfg).map_err(|e| e.to_string())?;
        let h = FusedTable::build(&le, &global, false).map_err(|e| e.to_string())?;
        let seq = build_sequence(&g, &tcfg, t_obs, &h).map_err(|e| e.to_string())?;
        if seq.size != tcfg.max_len * d || seq.data.len() != tcfg.num_patches * seq.size {
            return Err(format!("cascade {}: token size {} for l*d = {}", r.id, seq.size, tcfg.max_len * d));
        }
        for n in 0..tcfg.num_patches {
            let tok = seq.token(n);
            let used = seq.active[n].min(tcfg.max_len);
            if tok[used * d..].iter().any(|&x| x != 0.0) {
                return Err(format!("cascade {} token {n}: padding is not exactly zero", r.id));
            }
            if (0..used).any(|slot| tok[slot * d..(slot + 1) * d].iter().all(|&x| x == 0.0)) {
                return Err(format!("cascade {} token {n}: empty user slot", r.id));
            }
            if n > 0 {
                let prev = seq.active[n - 1].min(tcfg.max_len);
                if seq.active[n] < seq.active[n - 1] || tok[..prev * d] != seq.token(n - 1)[..prev * d] {
                    return Err(format!("cascade {} token {n}: not an extension of token {}", r.id, n - 1));
                }
            }
        }
        if seq.active[tcfg.num_patches - 1] != r.popularity_at(t_obs) {
            return Err(format!("cascade {}: last token misses adopters", r.id));
        }
        if seq.active[tcfg.num_patches - 1] > tcfg.max_len {
            truncated += 1;
        }
    }
    Ok(truncated)
}
