//! Renders the fixed answer prompt for one item, with and without events.

use sedqa::decoder::Event;
use sedqa::ingest::OptionSet;
use sedqa::prompt::build_prompt;

fn main() -> sedqa::Result<()> {
    let events = vec![
        Event {
            class_label: "Dog".into(),
            start_s: 0.4,
            end_s: 1.2,
        },
        Event {
            class_label: "Siren".into(),
            start_s: 0.8,
            end_s: 2.0,
        },
        Event {
            class_label: "Dog".into(),
            start_s: 2.56,
            end_s: 3.0,
        },
    ];
    let question = "Which sound event occurs first in the clip?";
    let options = OptionSet::new(["Dog", "Siren", "Speech", "Water tap"])?;

    println!("{}", build_prompt(&events, question, &options));
    println!("=== the same item when the decoder found nothing ===\n");
    println!("{}", build_prompt(&[], question, &options));
    Ok(())
}
