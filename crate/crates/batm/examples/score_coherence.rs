//! Score topic word sets with C_v coherence: boolean sliding-window counts,
//! NPMI context vectors, cosine similarity, arithmetic mean.
//!
//! ```bash
//! cargo run --release --example score_coherence
//! ```

use batm::coherence::{build_window_counts, coherence_report, npmi, render_table, DEFAULT_EPS};
use batm::corpus::tokenize;
use batm::topics::TopicDescriptor;

fn main() -> batm::Result<()> {
    // A corpus with two clear themes and some background chatter.
    let texts = [
        "the team scored a late goal and the keeper saved the match",
        "a goal from midfield won the match for the home team",
        "the keeper kept the team in the match until the winning goal",
        "the away team pressed but the keeper denied every goal",
        "shares fell as the market digested the bank earnings report",
        "the bank raised rates and the market sold off shares",
        "investors dumped bank shares after the earnings warning",
        "the market cheered record bank earnings and shares rallied",
        "weather stayed mild across the region all week",
        "the festival drew visitors from across the region",
    ];
    let docs: Vec<Vec<String>> = texts
        .iter()
        .map(|t| tokenize(t).into_iter().map(|tok| tok.text).collect())
        .collect();

    let football = ["goal", "keeper", "match", "team"];
    let finance = ["market", "shares", "earnings", "bank"];
    let mixed = ["goal", "earnings", "weather", "festival"];

    let tracked: Vec<String> = football
        .iter()
        .chain(&finance)
        .chain(&mixed)
        .map(|s| s.to_string())
        .collect();
    let counts = build_window_counts(&docs, &tracked, 110)?;
    println!(
        "{} windows of size {} over {} documents",
        counts.total_windows,
        counts.window_size,
        docs.len()
    );
    println!(
        "npmi(goal, keeper)  = {:+.4}",
        npmi(&counts, "goal", "keeper", DEFAULT_EPS)?
    );
    println!(
        "npmi(goal, market)  = {:+.4}",
        npmi(&counts, "goal", "market", DEFAULT_EPS)?
    );
    println!(
        "npmi(shares, bank)  = {:+.4}",
        npmi(&counts, "shares", "bank", DEFAULT_EPS)?
    );

    let descriptor = |head: usize, words: &[&str]| TopicDescriptor {
        head,
        terms: words.iter().map(|w| (w.to_string(), 1.0)).collect(),
    };
    let result = coherence_report(
        &[
            descriptor(0, &football),
            descriptor(1, &finance),
            descriptor(2, &mixed),
        ],
        &docs,
        110,
        25,
        DEFAULT_EPS,
    )?;
    println!("\n{}", render_table(&result));
    Ok(())
}
