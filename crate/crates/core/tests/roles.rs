//! The nearest-entity role heuristic has no syntax. These pin its known misreadings so a
//! change in behaviour is noticed.

use framescope::semframe::{extract_roles, tag_sentence, Gazetteer, Lexicon};
use framescope::taxonomy::Taxonomies;

fn roles_of(sentence: &str) -> (Option<String>, Option<String>) {
    let frames = Taxonomies::stock().frames;
    let occ = tag_sentence("x", 0, sentence, &Lexicon::stock())
        .into_iter()
        .find(|o| o.frame_name == "Attack" || o.frame_name == "Killing")
        .expect("role-bearing trigger");
    let frame = frames.get(&occ.frame_name).unwrap();
    let occ = extract_roles(occ, sentence, &Gazetteer::stock(), frame);
    let get = |r: &str| occ.roles.get(r).map(|f| f.text.clone());
    (get("Assailant"), get("Victim"))
}

#[test]
fn lowercase_victim_is_skipped_for_a_later_name() {
    assert_eq!(roles_of("The Houthis attacked ships in the Red Sea."), (Some("Houthis".into()), Some("Red Sea".into())));
}

#[test]
fn passive_agent_is_not_found_without_a_name() {
    // "the army" is neither capitalized nor listed, so the nearest later entity wins.
    assert_eq!(roles_of("Refugees were shelled by the army near Rafah."), (Some("Rafah".into()), Some("Refugees".into())));
}

#[test]
fn adjacent_gazetteer_names_are_separate_entities() {
    assert_eq!(roles_of("Hamas killed Israeli hostages."), (Some("Hamas".into()), Some("Israeli".into())));
}

#[test]
fn nouns_that_open_a_sentence_count_as_names() {
    assert_eq!(roles_of("Outrage grew after the massacre."), (Some("Outrage".into()), None));
}
