use tenfinger_core::sim::{eligible_trace, SimConfig, Typist};
use tenfinger_core::protocol::ClientMessage;
use tenfinger_core::{run_pipeline, KeyLayout, PipelineConfig};

#[test]
fn clean_center_taps_spell_the_word() {
    let layout = KeyLayout::qwerty();
    let mut t = Typist::new(&layout, SimConfig { iki_jitter_ms: 0.0, ..SimConfig::default() });
    for c in "eligible".chars() {
        t.tap_at(layout.center(c));
    }
    let out = run_pipeline(&t.touch_events(), &layout, &PipelineConfig::default()).unwrap();
    assert_eq!(out.letters, "eligible");
    assert!(out.suppressed.is_empty());
}

#[test]
fn bundled_eligible_fixture_matches_the_generator() {
    let layout = KeyLayout::qwerty();
    let generated: Vec<_> = eligible_trace(&layout)
        .into_iter()
        .filter_map(|m| match m {
            ClientMessage::Touch { e } => Some(e),
            _ => None,
        })
        .collect();
    let bundled = tenfinger_core::pipeline::parse_touch_log(include_str!("../../../data/fixtures/eligible.jsonl")).unwrap();
    assert_eq!(generated, bundled);
}
