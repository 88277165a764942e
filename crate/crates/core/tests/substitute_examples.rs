use redactor_core::corpus::{read_corpus, Document, PiiCategory};
use redactor_core::ledger::{CreatedBy, Ledger};
use redactor_core::policy::Decision;
use redactor_core::substitute::{
    apply_strategy, invalidate, realistic_pseudonym, PseudonymConstraints, Seed, Strategy, SubstituteError,
};

fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn shipped_pools_give_the_golden_names() {
    let c = PseudonymConstraints::default();
    let mut ledger = Ledger::new();
    let name = realistic_pseudonym("Myriam Zegman", PiiCategory::PersonName, "en", &c, &mut ledger, Seed(0)).unwrap();
    assert_eq!(name, "Rachel Kaufman");
    let handle = realistic_pseudonym("@MaryJohanson1987", PiiCategory::Username, "en", &c, &mut ledger, Seed(0)).unwrap();
    assert_eq!(handle, "@LaraWilson1989");
    assert_eq!(ledger.len(), 2);
}

#[test]
fn repeated_calls_reuse_the_ledger() {
    let c = PseudonymConstraints::default();
    let mut ledger = Ledger::new();
    let a = realistic_pseudonym("Myriam Zegman", PiiCategory::PersonName, "fr", &c, &mut ledger, Seed(3)).unwrap();
    let b = realistic_pseudonym("Myriam Zegman", PiiCategory::PersonName, "ar", &c, &mut ledger, Seed(9)).unwrap();
    assert_eq!(a, b);
    assert_eq!(ledger.len(), 1);
}

#[test]
fn reviewer_mappings_are_respected() {
    let c = PseudonymConstraints::default();
    let mut ledger = Ledger::new();
    ledger
        .record("@ProudBoys-Massachusetts-admin", PiiCategory::Username, "@Proud_Boys_MA_main", "en", CreatedBy::Reviewer)
        .unwrap();
    let got = realistic_pseudonym("@ProudBoys-Massachusetts-admin", PiiCategory::Username, "en", &c, &mut ledger, Seed(0));
    assert_eq!(got.unwrap(), "@Proud_Boys_MA_main");
}

#[test]
fn phone_link_keeps_its_prefix() {
    let surface = "https://wa.me/+93722758";
    for seed in 0..20 {
        let out = invalidate(surface, PiiCategory::Url, Seed(seed)).unwrap();
        assert!(out.starts_with("https://wa.me/+"), "{out}");
        assert_eq!(out.len(), surface.len());
        let tail = &out["https://wa.me/+".len()..];
        assert!(tail.chars().all(|c| c.is_ascii_digit()), "{out}");
        let changed = tail.chars().zip("93722758".chars()).filter(|(a, b)| a != b).count();
        assert!(changed >= 3, "{out}");
    }
}

#[test]
fn invalidation_always_changes_the_input() {
    let inputs = [
        ("https://wa.me/+93722758", PiiCategory::Url),
        ("https://www.gofundme.com/f/help-anna", PiiCategory::Url),
        ("@marie.delattre1", PiiCategory::Username),
        ("anna.weber+news@mail.example", PiiCategory::Email),
        ("+33 6 12 34 56 78", PiiCategory::Phone),
        ("#JusticePourAnna", PiiCategory::Hashtag),
    ];
    for (surface, category) in inputs {
        for seed in 0..10 {
            assert_ne!(invalidate(surface, category, Seed(seed)).unwrap(), surface);
        }
    }
    assert!(matches!(invalidate("a.b", PiiCategory::Url, Seed(0)), Err(SubstituteError::TooShort { .. })));
}

#[test]
fn kept_documents_are_untouched_by_every_strategy() {
    let mut doc: Document = read_corpus(fixture("shoutout.jsonl")).unwrap().remove(0);
    for span in &mut doc.spans {
        span.decision = Some(Decision::Keep);
    }
    let c = PseudonymConstraints::default();
    for strategy in Strategy::ALL {
        let mut ledger = Ledger::new();
        let out = apply_strategy(&doc, strategy, Some(&mut ledger), &c, Seed(0)).unwrap();
        assert_eq!(out, doc, "{strategy}");
        assert!(ledger.is_empty());
    }
}
