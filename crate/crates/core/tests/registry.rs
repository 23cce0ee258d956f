use proptest::prelude::*;
use sgqa_core::template::{ParseError, TemplateError};
use sgqa_core::{Binding, ObjectRef, QuestionType, Registry, Relation, SlotKind, SlotValue};

#[test]
fn shipped_registry_shape() {
    let r = Registry::builtin();
    assert_eq!(r.qtypes().len(), 5);
    assert_eq!(r.qtypes(), QuestionType::ALL.into_iter().collect());
    assert_eq!(r.hops(), [0u8, 1].into_iter().collect());
    assert_eq!(r.variant_count(), 66);
}

#[test]
fn round_trip_is_byte_identical() {
    let r = Registry::builtin();
    assert_eq!(r.to_text(), Registry::builtin_text());
    assert_eq!(Registry::parse(&r.to_text()).unwrap(), r);
}

#[test]
fn table_examples_parse() {
    let r = Registry::builtin();
    let exist = r.get("exist_h1_relate").unwrap();
    assert_eq!((exist.qtype, exist.hop), (QuestionType::Exist, 1));
    let names: Vec<String> = exist.slots.iter().map(|s| s.to_string()).collect();
    assert_eq!(names, ["A", "O", "R", "A2", "O2"]);
    assert_eq!(exist.variants[0], "Are there any <A2> <O2>s to the <R> of the <A> <O>?");
    let count = r.get("count_h0_plain").unwrap();
    assert_eq!((count.qtype, count.hop), (QuestionType::Count, 0));
    assert_eq!(count.variants[0], "How many <A> <O>s are there?");
}

#[test]
fn dangling_reference_is_rejected() {
    let text = "version 1\n\ntemplate t\nqtype exist\nhop 0\nslots A O\nprogram scene filter_status(A) filter_category(O) exist\nvariant Are there <A> <O>s to the <R2> of it?\nend\n";
    match Registry::parse(text) {
        Err(ParseError::Template { source: TemplateError::DanglingReference { .. } | TemplateError::UnknownPlaceholder { .. }, .. }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn rendering_examples() {
    let r = Registry::builtin();
    let b = Binding::new()
        .with("A2", SlotValue::Status(Some("moving".into())))
        .with("O2", SlotValue::Object(ObjectRef::Category("pedestrian".into())))
        .with("R", SlotValue::Relation(Relation::Front))
        .with("A", SlotValue::Status(Some("stopped".into())))
        .with("O", SlotValue::Object(ObjectRef::Category("bus".into())));
    assert_eq!(
        r.get("exist_h1_relate").unwrap().render(0, &b).unwrap(),
        "Are there any moving pedestrians to the front of the stopped bus?"
    );
    let me = b.clone().with("A", SlotValue::Status(None)).with("O", SlotValue::Object(ObjectRef::Me));
    let text = r.get("exist_h1_relate").unwrap().render(0, &me).unwrap();
    assert_eq!(text, "Are there any moving pedestrians to the front of me?");
    let plain = Binding::new()
        .with("A", SlotValue::Status(None))
        .with("O", SlotValue::Object(ObjectRef::Category("car".into())));
    assert_eq!(r.get("count_h0_plain").unwrap().render(0, &plain).unwrap(), "How many cars are there?");
}

fn value_for(kind: SlotKind, pick: usize) -> SlotValue {
    const STATUSES: [&str; 8] = ["", "moving", "stopped", "parked", "standing", "sitting", "with_rider", "without_rider"];
    const NOUNS: [&str; 12] = [
        "me", "thing", "car", "truck", "bus", "trailer", "construction_vehicle", "pedestrian", "motorcycle", "bicycle",
        "traffic_cone", "barrier",
    ];
    match kind {
        SlotKind::Attribute => SlotValue::Status((!pick.is_multiple_of(8)).then(|| STATUSES[pick % 8].to_string())),
        SlotKind::Object => SlotValue::Object(match NOUNS[pick % 12] {
            "me" => ObjectRef::Me,
            "thing" => ObjectRef::Thing,
            c => ObjectRef::Category(c.into()),
        }),
        SlotKind::Relation => SlotValue::Relation(Relation::ALL[pick % 6]),
    }
}

proptest! {
    #[test]
    fn rendered_text_is_clean(template in 0usize..17, variant in 0usize..8, picks in proptest::collection::vec(0usize..1000, 10)) {
        let r = Registry::builtin();
        let t = &r.templates[template];
        let mut b = Binding::new();
        for (slot, pick) in t.slots.iter().zip(picks) {
            b.insert(*slot, value_for(slot.kind, pick));
        }
        let text = t.render(variant % t.variants.len(), &b).unwrap();
        prop_assert!(!text.contains('<') && !text.contains('>') && !text.contains('[') && !text.contains(']'), "{}", text);
        prop_assert!(!text.contains("  ") && !text.contains(" ?") && text == text.trim(), "{}", text);
        prop_assert!(!text.contains("the me") && !text.contains("a me ") && !text.contains(" mes"), "{}", text);
        prop_assert!(text.ends_with('?') || text.ends_with('.'), "{}", text);
    }
}
