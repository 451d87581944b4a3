//! Character inventories and normalization for Hebrew-script Judeo-Arabic
//! and Arabic-script text.
//!
//! Everything here works on storage order and individual scalars; no shaping
//! or bidi handling is attempted.

use thiserror::Error;
use unicode_general_category::{get_general_category, GeneralCategory};

/// HEBREW MARK UPPER DOT, the diacritic that turns e.g. כ into the spelling of خ.
pub const UPPER_DOT: char = '\u{05C4}';

/// Marks that are visually confusable with the upper dot and get rewritten to
/// [`UPPER_DOT`] when they follow a Hebrew letter.
const UPPER_DOT_LOOKALIKES: [char; 2] = [
    '\u{0307}', // combining dot above
    '\u{0358}', // combining dot above right
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScriptError {
    #[error("{0:?} (U+{cp:04X}) is not a Hebrew-script character", cp = *.0 as u32)]
    NotHebrewScript(char),
    #[error("empty token")]
    EmptyToken,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HebrewKind {
    BaseLetter,
    FinalFormLetter,
    UpperDotMark,
    /// Vowel points, dagesh, shin/sin dots, rafe and meteg.
    NiqqudMark,
    /// Cantillation, generic combining marks and the remaining scalars of the
    /// Hebrew block (ligatures, unassigned code points).
    OtherMark,
    /// Hebrew punctuation (maqaf, sof pasuq, geresh, ...) and punctuation
    /// shared with other scripts.
    Punctuation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HebrewChar {
    pub codepoint: char,
    pub kind: HebrewKind,
}

impl HebrewChar {
    /// The letter this scalar counts as for mapping purposes: finals resolve
    /// to their base form, non-letters yield `None`.
    pub fn base_letter(&self) -> Option<char> {
        match self.kind {
            HebrewKind::BaseLetter => Some(self.codepoint),
            HebrewKind::FinalFormLetter => final_to_base(self.codepoint),
            _ => None,
        }
    }
}

/// The 22 Hebrew letters in alphabetical order.
pub const HEBREW_BASE_LETTERS: [char; 22] = [
    'א', 'ב', 'ג', 'ד', 'ה', 'ו', 'ז', 'ח', 'ט', 'י', 'כ', 'ל', 'מ', 'נ', 'ס', 'ע', 'פ', 'צ', 'ק',
    'ר', 'ש', 'ת',
];

/// Final form to base letter.
pub fn final_to_base(ch: char) -> Option<char> {
    match ch {
        'ך' => Some('כ'),
        'ם' => Some('מ'),
        'ן' => Some('נ'),
        'ף' => Some('פ'),
        'ץ' => Some('צ'),
        _ => None,
    }
}

pub fn is_hebrew_letter(ch: char) -> bool {
    ('\u{05D0}'..='\u{05EA}').contains(&ch)
}

pub fn is_niqqud(ch: char) -> bool {
    matches!(ch,
        '\u{05B0}'..='\u{05BD}' | '\u{05BF}' | '\u{05C1}' | '\u{05C2}' | '\u{05C5}' | '\u{05C7}')
}

pub fn is_cantillation(ch: char) -> bool {
    ('\u{0591}'..='\u{05AF}').contains(&ch)
}

fn is_hebrew_punctuation(ch: char) -> bool {
    matches!(ch, '\u{05BE}' | '\u{05C0}' | '\u{05C3}' | '\u{05C6}' | '\u{05F3}' | '\u{05F4}')
}

/// Combining marks from the script-neutral diacritic blocks.
fn is_generic_combining(ch: char) -> bool {
    matches!(ch,
        '\u{0300}'..='\u{036F}'
        | '\u{1AB0}'..='\u{1AFF}'
        | '\u{1DC0}'..='\u{1DFF}'
        | '\u{20D0}'..='\u{20FF}'
        | '\u{FE20}'..='\u{FE2F}')
}

/// True for any scalar with general category P* or S*.
pub fn is_punctuation_char(ch: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(ch),
        ConnectorPunctuation
            | DashPunctuation
            | OpenPunctuation
            | ClosePunctuation
            | InitialPunctuation
            | FinalPunctuation
            | OtherPunctuation
            | MathSymbol
            | CurrencySymbol
            | ModifierSymbol
            | OtherSymbol
    )
}

fn is_nonspacing_mark(ch: char) -> bool {
    matches!(
        get_general_category(ch),
        GeneralCategory::NonspacingMark | GeneralCategory::EnclosingMark | GeneralCategory::SpacingMark
    )
}

pub fn classify_hebrew(ch: char) -> Result<HebrewChar, ScriptError> {
    let kind = match ch {
        UPPER_DOT => HebrewKind::UpperDotMark,
        c if final_to_base(c).is_some() => HebrewKind::FinalFormLetter,
        c if is_hebrew_letter(c) => HebrewKind::BaseLetter,
        c if is_niqqud(c) => HebrewKind::NiqqudMark,
        c if is_hebrew_punctuation(c) => HebrewKind::Punctuation,
        '\u{0590}'..='\u{05FF}' => HebrewKind::OtherMark,
        c if is_generic_combining(c) => HebrewKind::OtherMark,
        c if is_punctuation_char(c) => HebrewKind::Punctuation,
        c => return Err(ScriptError::NotHebrewScript(c)),
    };
    Ok(HebrewChar { codepoint: ch, kind })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArabicKind {
    BaseLetter,
    TehMarbuta,
    /// Bare hamza, hamza-carrying alif/waw/ya, and the combining madda and
    /// hamza marks.
    HamzaForm,
    Diacritic,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ArabicChar {
    pub codepoint: char,
    pub kind: ArabicKind,
}

/// The 28 letters of the Arabic abjad.
pub const ARABIC_BASE_LETTERS: [char; 28] = [
    'ا', 'ب', 'ت', 'ث', 'ج', 'ح', 'خ', 'د', 'ذ', 'ر', 'ز', 'س', 'ش', 'ص', 'ض', 'ط', 'ظ', 'ع', 'غ',
    'ف', 'ق', 'ك', 'ل', 'م', 'ن', 'ه', 'و', 'ي',
];

pub const TEH_MARBUTA: char = 'ة';

/// Tashkeel, superscript alif and the Quranic annotation marks. The combining
/// madda/hamza marks (U+0653..U+0655) are orthographic and are not included.
pub fn is_arabic_diacritic(ch: char) -> bool {
    matches!(ch,
        '\u{0610}'..='\u{061A}'
        | '\u{064B}'..='\u{0652}'
        | '\u{0656}'..='\u{065F}'
        | '\u{0670}'
        | '\u{06D6}'..='\u{06DC}'
        | '\u{06DF}'..='\u{06E4}'
        | '\u{06E7}'..='\u{06E8}'
        | '\u{06EA}'..='\u{06ED}')
}

/// Classifies a scalar of the Arabic block; `None` for anything outside it.
pub fn classify_arabic(ch: char) -> Option<ArabicChar> {
    if !('\u{0600}'..='\u{06FF}').contains(&ch) {
        return None;
    }
    let kind = match ch {
        TEH_MARBUTA => ArabicKind::TehMarbuta,
        'ء' | 'آ' | 'أ' | 'ؤ' | 'إ' | 'ئ' | '\u{0653}'..='\u{0655}' => ArabicKind::HamzaForm,
        c if ARABIC_BASE_LETTERS.contains(&c) => ArabicKind::BaseLetter,
        c if is_arabic_diacritic(c) => ArabicKind::Diacritic,
        _ => ArabicKind::Other,
    };
    Some(ArabicChar { codepoint: ch, kind })
}

/// Which marks [`normalize`] removes. Cantillation is always removed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NormalizationPolicy {
    pub strip_niqqud: bool,
    pub strip_upper_dot: bool,
    pub strip_arabic_diacritics: bool,
    pub normalize_final_forms: bool,
}

impl NormalizationPolicy {
    pub const fn all() -> Self {
        Self {
            strip_niqqud: true,
            strip_upper_dot: true,
            strip_arabic_diacritics: true,
            normalize_final_forms: true,
        }
    }

    pub const fn upper_dot_only() -> Self {
        Self {
            strip_niqqud: false,
            strip_upper_dot: true,
            strip_arabic_diacritics: false,
            normalize_final_forms: false,
        }
    }

    pub const fn arabic_diacritics_only() -> Self {
        Self {
            strip_niqqud: false,
            strip_upper_dot: false,
            strip_arabic_diacritics: true,
            normalize_final_forms: false,
        }
    }
}

/// Rewrites upper-dot look-alikes that follow a Hebrew letter (possibly with
/// other marks in between) to [`UPPER_DOT`].
pub fn canonicalize_upper_dots(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut in_hebrew_letter = false;
    for ch in text.chars() {
        if UPPER_DOT_LOOKALIKES.contains(&ch) && in_hebrew_letter {
            out.push(UPPER_DOT);
            continue;
        }
        if !is_nonspacing_mark(ch) {
            in_hebrew_letter = is_hebrew_letter(ch);
        }
        out.push(ch);
    }
    out
}

pub fn normalize(text: &str, policy: &NormalizationPolicy) -> String {
    canonicalize_upper_dots(text)
        .chars()
        .filter(|&c| {
            !(is_cantillation(c)
                || (policy.strip_niqqud && is_niqqud(c))
                || (policy.strip_upper_dot && c == UPPER_DOT)
                || (policy.strip_arabic_diacritics && is_arabic_diacritic(c)))
        })
        .map(|c| match final_to_base(c) {
            Some(base) if policy.normalize_final_forms => base,
            _ => c,
        })
        .collect()
}

/// True iff every scalar of `token` is punctuation or a symbol.
pub fn is_punctuation_token(token: &str) -> Result<bool, ScriptError> {
    if token.is_empty() {
        return Err(ScriptError::EmptyToken);
    }
    Ok(token.chars().all(is_punctuation_char))
}

pub fn contains_niqqud(token: &str) -> bool {
    token.chars().any(is_niqqud)
}
