//! Seeded synthetic corpus for end-to-end checks and the utility grid.
//!
//! Labels are driven by cue words that never overlap entity surfaces, so a
//! classifier's accuracy does not depend on which identifiers survive.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{CallForActionLevel, Detector, Document, EntitySpan, NerLabel, PiiCategory};
use crate::policy::SubjectRole;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub docs: usize,
    pub seed: u64,
    /// Share of documents whose label is redrawn at random.
    pub label_noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            docs: 240,
            seed: 0,
            label_noise: 0.05,
        }
    }
}

struct Entity {
    surface: &'static str,
    category: PiiCategory,
    role: SubjectRole,
    langs: &'static [&'static str],
    ner: Option<NerLabel>,
    sensitive: bool,
}

const LATIN: &[&str] = &["en", "fr"];
const EN: &[&str] = &["en"];
const FR: &[&str] = &["fr"];
const AR: &[&str] = &["ar"];
const ALL: &[&str] = &["en", "fr", "ar"];

/// The entity planted in several documents of two languages.
pub const PLANTED: &str = "Myriam Zegman";

macro_rules! e {
    ($s:literal, $c:ident, $r:ident, $l:expr) => {
        e!($s, $c, $r, $l, None, false)
    };
    ($s:literal, $c:ident, $r:ident, $l:expr, $n:expr) => {
        e!($s, $c, $r, $l, $n, false)
    };
    ($s:literal, $c:ident, $r:ident, $l:expr, $n:expr, $sens:expr) => {
        Entity {
            surface: $s,
            category: PiiCategory::$c,
            role: SubjectRole::$r,
            langs: $l,
            ner: $n,
            sensitive: $sens,
        }
    };
}

const ROSTER: &[Entity] = &[
    e!("Myriam Zegman", PersonName, PrivateIndividual, LATIN, Some(NerLabel::Per)),
    e!("Virginia", PersonName, PrivateIndividual, EN, Some(NerLabel::Per)),
    e!("Muhammed", PersonName, PrivateIndividual, ALL, Some(NerLabel::Per)),
    e!("Odile Brassac", PersonName, DeceasedPrivatePerson, FR, Some(NerLabel::Per)),
    e!("Tobias Wendland", PersonName, ConvictedUnclearOrMinor, EN, Some(NerLabel::Per)),
    e!("Emmanuel Macron", PersonName, PublicFigure, LATIN, Some(NerLabel::Per)),
    e!("سمير بن عمار", PersonName, PrivateIndividual, AR, Some(NerLabel::Per)),
    e!("فاطمة الزهراء", PersonName, Unassigned, AR, Some(NerLabel::Per)),
    e!("@MaryJohanson1987", Username, PrivateIndividual, EN),
    e!("@marie.delattre1", Username, PrivateIndividual, FR),
    e!("@handsomephilantropist", Username, Unassigned, LATIN),
    e!("@quietriver_77", Username, RadicalOrgAccount, EN),
    e!("@BigVoiceNews", Username, Influencer, LATIN),
    e!("@صوت_الحرية", Username, PrivateIndividual, AR),
    e!("https://wa.me/+93722758", Url, PrivateIndividual, ALL),
    e!("https://www.gofundme.com/f/help-odile", Url, DeceasedPrivatePerson, FR),
    e!("t.me/joinchat/AbCdEf12", Url, RadicalOrgAccount, ALL, None, true),
    e!("https://example.social/posts/88412", Url, Unassigned, EN),
    e!("odile.brassac@mail.example", Email, PrivateIndividual, FR),
    e!("tenants.union@post.example", Email, VulnerableLinkedOrganization, EN),
    e!("samir.amar@mail.example", Email, PrivateIndividual, AR),
    e!("+33 6 12 34 56 78", Phone, PrivateIndividual, FR),
    e!("+1 415 555 0134", Phone, PublicFigure, EN),
    e!("+212 661 234 567", Phone, PrivateIndividual, AR),
    e!("Rue Alphonse Metayer", Address, PrivateIndividual, FR, Some(NerLabel::Loc)),
    e!("221 Baker Street", Address, PrivateIndividual, EN, Some(NerLabel::Loc)),
    e!("شارع الاستقلال", Address, PrivateIndividual, AR, Some(NerLabel::Loc)),
    e!("Roubaix", Location, PrivateIndividual, FR, Some(NerLabel::Loc)),
    e!("Dearborn", Location, PrivateIndividual, EN, Some(NerLabel::Loc)),
    e!("Molenbeek", Location, Unassigned, LATIN, Some(NerLabel::Loc)),
    e!("الرقة", Location, PrivateIndividual, AR, Some(NerLabel::Loc)),
    e!("Tenants Union", OrgName, VulnerableLinkedOrganization, EN, Some(NerLabel::Org)),
    e!("Collectif Justice", OrgName, GenericOrganization, FR, Some(NerLabel::Org)),
    e!("Ligue Solidaire", OrgName, PrivateIndividual, FR, Some(NerLabel::Org)),
    e!("جمعية الوفاق", OrgName, VulnerableLinkedOrganization, AR, Some(NerLabel::Org)),
    e!("#JusticePourAdama", Hashtag, Unassigned, FR),
    e!("#StopTheSteal", Hashtag, PrivateIndividual, EN),
    e!("#marche2024", Hashtag, Unassigned, FR),
    e!("#حرية", Hashtag, Unassigned, AR),
    e!("Midnight Protest Song", MediaTitle, PrivateIndividual, EN, Some(NerLabel::OthMusic)),
    e!("Chant Des Partisans", MediaTitle, Unassigned, FR, Some(NerLabel::OthMusic), true),
    e!("نشيد الحرية", MediaTitle, Unassigned, AR, Some(NerLabel::OthMusic)),
    e!("Moroccan", Other, PrivateIndividual, EN),
    e!("marocaine", Other, Unassigned, FR),
    e!("مغربي", Other, PrivateIndividual, AR),
];

/// Entity-free words that carry the label, per language and level.
fn cues(lang: &str, level: CallForActionLevel) -> &'static [&'static str] {
    use CallForActionLevel::*;
    match (lang, level) {
        ("fr", Negative) => &["calme", "recette", "soleil", "vacances", "tranquille"],
        ("fr", Low) => &["peutêtre", "envisager", "unjour", "curieux", "éventuellement"],
        ("fr", Moderate) => &["soutenir", "partager", "signer", "rejoindre", "relayer"],
        ("fr", High) => &["mobilisation", "cesoir", "rassemblement", "obligatoire", "venez"],
        ("fr", VeryHigh) => &["immédiatement", "toutes", "bloquer", "déferlante", "irrésistible"],
        ("ar", Negative) => &["هادئ", "وصفة", "مشمس", "عطلة", "راحة"],
        ("ar", Low) => &["ربما", "نفكر", "يوما", "مثير", "احتمال"],
        ("ar", Moderate) => &["ادعموا", "شاركوا", "وقعوا", "انضموا", "انشروا"],
        ("ar", High) => &["احتشدوا", "الليلة", "تجمع", "واجب", "تعالوا"],
        ("ar", VeryHigh) => &["فورا", "الجميع", "اغلقوا", "طوفان", "لايوقف"],
        (_, Negative) => &["calm", "recipe", "sunny", "holiday", "relaxing"],
        (_, Low) => &["perhaps", "consider", "someday", "curious", "possibly"],
        (_, Moderate) => &["support", "share", "sign", "join", "spread"],
        (_, High) => &["mobilize", "tonight", "rally", "mandatory", "come"],
        (_, VeryHigh) => &["immediately", "everyone", "blockade", "flood", "unstoppable"],
    }
}

fn filler(lang: &str) -> &'static [&'static str] {
    match lang {
        "fr" => &["les", "amis", "pour", "avec", "nous", "encore", "voilà", "toujours", "chez", "demain"],
        "ar" => &["في", "مع", "على", "من", "هذا", "كل", "بعد", "قبل", "عند", "اليوم"],
        _ => &["the", "friends", "for", "with", "we", "again", "here", "always", "about", "tomorrow"],
    }
}

/// Sentence frame around an entity slot, per language and category.
fn frame(lang: &str, category: PiiCategory) -> (&'static str, &'static str) {
    use PiiCategory::*;
    match (lang, category) {
        ("fr", PersonName) => ("Merci", "pour tout."),
        ("fr", Username) => ("Suivez", "pour les infos."),
        ("fr", Url) => ("Détails sur", "dès maintenant."),
        ("fr", Email) => ("Écrivez à", "svp."),
        ("fr", Phone) => ("Appelez le", "ce soir."),
        ("fr", Address) => ("Rendezvous", "demain."),
        ("fr", Location) => ("On était à", "la semaine dernière."),
        ("fr", OrgName) => ("Bravo à", "et ses bénévoles."),
        ("fr", Hashtag) => ("Encore", "en tendance."),
        ("fr", MediaTitle) => ("On écoute", "en boucle."),
        ("fr", Other) => ("La communauté", "a parlé."),
        ("ar", PersonName) => ("شكرا", "على كل شيء."),
        ("ar", Username) => ("تابعوا", "للأخبار."),
        ("ar", Url) => ("التفاصيل على", "الآن."),
        ("ar", Email) => ("راسلونا على", "من فضلكم."),
        ("ar", Phone) => ("اتصلوا على", "مساء."),
        ("ar", Address) => ("اللقاء في", "غدا."),
        ("ar", Location) => ("كنا في", "الأسبوع الماضي."),
        ("ar", OrgName) => ("تحية إلى", "ومتطوعيها."),
        ("ar", Hashtag) => ("مرة أخرى", "في الترند."),
        ("ar", MediaTitle) => ("نستمع إلى", "باستمرار."),
        ("ar", Other) => ("الجالية", "تكلمت."),
        (_, PersonName) => ("Thanks", "for everything."),
        (_, Username) => ("Follow", "for updates."),
        (_, Url) => ("Details at", "right now."),
        (_, Email) => ("Write to", "please."),
        (_, Phone) => ("Call", "tonight."),
        (_, Address) => ("Meet at", "tomorrow."),
        (_, Location) => ("We were in", "last week."),
        (_, OrgName) => ("Shoutout to", "and its volunteers."),
        (_, Hashtag) => ("Trending", "again."),
        (_, MediaTitle) => ("Listening to", "on repeat."),
        (_, Other) => ("The", "community spoke up."),
    }
}

const LANGS: [&str; 3] = ["en", "fr", "ar"];

fn split_name(i: usize, n: usize) -> &'static str {
    let train = n * 70 / 100;
    let dev = n * 8 / 100;
    if i < train {
        "train"
    } else if i < train + dev {
        "dev"
    } else {
        "test"
    }
}

/// Builds a corpus of `config.docs` documents with undecided, role-tagged spans.
pub fn synthetic_corpus(config: &SynthConfig) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..config.docs).collect();
    order.shuffle(&mut rng);
    let mut split_of = vec![""; config.docs];
    for (rank, &i) in order.iter().enumerate() {
        split_of[i] = split_name(rank, config.docs);
    }

    let mut docs = Vec::with_capacity(config.docs);
    for (i, split) in split_of.into_iter().enumerate() {
        let lang = if i < 4 { LATIN[i % 2] } else { LANGS[i % 3] };
        let mut level = CallForActionLevel::ALL[rng.gen_range(0..5)];

        let cue = cues(lang, level);
        let fill = filler(lang);
        let mut words: Vec<&str> = cue.choose_multiple(&mut rng, 3).copied().collect();
        words.extend(fill.choose_multiple(&mut rng, 3).copied());
        words.shuffle(&mut rng);
        let mut text = words.join(" ");
        text.push('.');

        let eligible: Vec<&Entity> = ROSTER.iter().filter(|e| e.langs.contains(&lang)).collect();
        let count = rng.gen_range(2..=4);
        let mut chosen: Vec<&Entity> = eligible.choose_multiple(&mut rng, count).copied().collect();
        if i < 4 && !chosen.iter().any(|e| e.surface == PLANTED) {
            chosen[0] = &ROSTER[0];
        }

        let mut spans = Vec::new();
        for entity in chosen {
            let (before, after) = frame(lang, entity.category);
            text.push(' ');
            text.push_str(before);
            text.push(' ');
            let start = text.chars().count();
            text.push_str(entity.surface);
            let end = text.chars().count();
            text.push(' ');
            text.push_str(after);
            let mut span = EntitySpan::new(start, end, entity.surface, Detector::Manual)
                .with_category(entity.category)
                .with_role(entity.role);
            span.ner_label = entity.ner;
            span.sensitive = entity.sensitive;
            spans.push(span);
        }
        if rng.gen_bool(0.2) {
            let (label, word) = match lang {
                "fr" => (NerLabel::OthEvent, "Printemps"),
                "ar" => (NerLabel::OthEvent, "الربيع"),
                _ => (NerLabel::OthEvent, "Spring"),
            };
            text.push(' ');
            let start = text.chars().count();
            text.push_str(word);
            text.push('.');
            spans.push(EntitySpan::new(start, start + word.chars().count(), word, Detector::Manual).with_ner_label(label));
        }

        if rng.gen_bool(config.label_noise) {
            level = CallForActionLevel::ALL[rng.gen_range(0..5)];
        }
        let mut doc = Document::new(format!("syn-{i:04}"), lang, text);
        doc.source = "synthetic".into();
        doc.cfa_label = Some(level);
        doc.spans = spans;
        doc.meta.insert("split".into(), split.into());
        docs.push(doc);
    }
    docs
}
