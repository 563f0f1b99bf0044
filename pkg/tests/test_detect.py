"""Rule-by-rule detector behaviour, span exactness and overlap resolution."""

import datetime as dt

import pytest

from radpipe.core import PhiCategory, PhiSpan, RawDocument
from radpipe.detect import AnnotatedDocument, DetectorConfig, detect, resolve_overlaps
from radpipe.lexicon import Lexicon


def make_config(**overrides) -> DetectorConfig:
    base = dict(
        first_names=Lexicon.from_entries("first_names", ["Luc", "Claire"]),
        last_names=Lexicon.from_entries("last_names", ["Marchal"]),
        cities=Lexicon.from_entries("cities", ["Namur", "La Louvière", "Braine-le-Comte"]),
        institutions=Lexicon.from_entries("institutions", ["Institut Jules Bordet"]),
    )
    base.update(overrides)
    return DetectorConfig(**base)


def make_doc(text: str, names=()) -> RawDocument:
    return RawDocument(
        doc_id="d1",
        patient_id="p1",
        date=dt.date(2020, 6, 15),
        text=text,
        known_patient_names=tuple(names),
    )


def spans_of(text: str, names=(), cfg: DetectorConfig | None = None):
    annotated = detect(make_doc(text, names), cfg or make_config())
    return [(s.surface, s.category) for s in annotated.spans]


# -- R1: known patient names ------------------------------------------------

def test_patient_full_name_merges_components():
    got = spans_of("le patient Jean Dupont revient.", names=[("Jean", "Dupont")])
    assert got == [("Jean Dupont", PhiCategory.PATIENT_NAME)]


def test_patient_components_match_case_insensitively():
    got = spans_of("suivi de DUPONT et de jean.", names=[("Jean", "Dupont")])
    assert got == [
        ("DUPONT", PhiCategory.PATIENT_NAME),
        ("jean", PhiCategory.PATIENT_NAME),
    ]


def test_patient_initial_form():
    got = spans_of("courrier pour J. Dupont ce jour.", names=[("Jean", "Dupont")])
    assert got == [("J. Dupont", PhiCategory.PATIENT_NAME)]


def test_patient_single_letter_component_is_ignored():
    # A one-letter "last name" would light up the whole text.
    got = spans_of("le cas a été revu.", names=[("Jean", "a")])
    assert got == []


def test_patient_name_requires_word_boundaries():
    got = spans_of("les dupontistes ne sont pas concernés.", names=[("Jean", "Dupont")])
    assert got == []


# -- R2: other person names ---------------------------------------------------

def test_title_span_excludes_the_title():
    got = spans_of("avis du Dr Marchal demandé.")
    assert got == [("Marchal", PhiCategory.PERSON_NAME)]


@pytest.mark.parametrize("title", ["Dr", "Dr.", "Docteur", "Pr", "Professeur",
                                   "Monsieur", "Madame", "M.", "Mme", "Mlle"])
def test_all_default_titles_trigger(title):
    got = spans_of(f"vu par {title} Lemaire en salle.")
    assert got == [("Lemaire", PhiCategory.PERSON_NAME)]


def test_title_scan_crosses_particles():
    # "Van" counts as a particle, not as one of the capitalized tokens.
    got = spans_of("opéré par le Dr Van Der Linden hier.")
    assert got == [("Van Der Linden", PhiCategory.PERSON_NAME)]


def test_title_scan_stops_at_three_capitalized_tokens():
    got = spans_of("opéré par le Dr Nolens Maes Peeters Claessens hier.")
    assert got == [("Nolens Maes Peeters", PhiCategory.PERSON_NAME)]


def test_title_followed_by_lowercase_is_silent():
    assert spans_of("le docteur est passé ce matin.") == []


def test_title_does_not_fire_inside_words():
    assert spans_of("il prend les mesures Adaptées.") == []


def test_firstname_lexicon_needs_a_following_capitalized_token():
    assert spans_of("Luc est venu seul.") == []
    got = spans_of("appel de Luc Evrard au sujet du plâtre.")
    assert got == [("Luc Evrard", PhiCategory.PERSON_NAME)]


def test_firstname_lexicon_span_includes_first_name():
    got = spans_of("examen relu avec Claire de Wouters hier.")
    assert got == [("Claire de Wouters", PhiCategory.PERSON_NAME)]


# -- R3: locations ------------------------------------------------------------

def test_city_lexicon_hit():
    assert spans_of("le patient habite Namur depuis 2001.") == [("Namur", PhiCategory.LOCATION)]


def test_multiword_and_hyphenated_cities():
    assert spans_of("domicilié à La Louvière actuellement.") == [("La Louvière", PhiCategory.LOCATION)]
    assert spans_of("transfert vers Braine-le-Comte organisé.") == [("Braine-le-Comte", PhiCategory.LOCATION)]


def test_postal_code_extends_city_span():
    assert spans_of("adresse : 5000 Namur pour le courrier.") == [("5000 Namur", PhiCategory.LOCATION)]


def test_street_requires_house_number():
    assert spans_of("la rue des Lilas est fermée.") == []
    got = spans_of("vit au 12 rue des Lilas depuis peu.")
    assert got == [("12 rue des Lilas", PhiCategory.LOCATION)]


def test_street_span_stops_before_lowercase():
    got = spans_of("domicile au 4, avenue Louise depuis mars.")
    assert got == [("4, avenue Louise", PhiCategory.LOCATION)]


# -- R4: institutions ----------------------------------------------------------

def test_institution_lexicon_phrase():
    got = spans_of("adressé par Institut Jules Bordet pour avis.")
    assert got == [("Institut Jules Bordet", PhiCategory.INSTITUTION)]


def test_institution_keyword_plus_capitalized_tail():
    got = spans_of("hospitalisé à la clinique Sainte-Anne hier.")
    assert got == [("clinique Sainte-Anne", PhiCategory.INSTITUTION)]
    got = spans_of("transfert au CHU de Liège accepté.")
    assert got == [("CHU de Liège", PhiCategory.INSTITUTION)]


def test_institution_keyword_alone_is_silent():
    assert spans_of("l'hôpital reste saturé cette semaine.") == []
    assert spans_of("une maison de repos médicalisée est envisagée.") == []


# -- R5: dates -----------------------------------------------------------------

@pytest.mark.parametrize("surface", ["14/03/2019", "14.03.2019", "3-4-2019", "14/03/19"])
def test_numeric_date_formats(surface):
    assert spans_of(f"contrôle du {surface} sans remarque.") == [(surface, PhiCategory.DATE)]


def test_textual_date_full_and_abbreviated():
    assert spans_of("revu le 14 mars 2019 au matin.") == [("14 mars 2019", PhiCategory.DATE)]
    assert spans_of("opéré le 3 janv. 2021 en urgence.") == [("3 janv. 2021", PhiCategory.DATE)]


def test_date_requires_day_number():
    assert spans_of("reprise prévue courant janvier 2027.") == []


def test_numeric_date_not_inside_longer_number():
    assert spans_of("code 114/03/2019 technique") == []


# -- R6: ages ------------------------------------------------------------------

def test_age_detection():
    assert spans_of("patient de 82 ans admis ce jour.") == [("82 ans", PhiCategory.AGE)]


def test_age_requires_digits_and_word_boundary():
    assert spans_of("suivi depuis trois ans environ.") == []
    assert spans_of("les 82 anses du panier.") == []


# -- R7: id numbers --------------------------------------------------------------

def test_id_number_minimum_digits():
    assert spans_of("dossier 1234567 classé.") == [("1234567", PhiCategory.ID_NUMBER)]
    assert spans_of("dossier 123456 classé.") == []


def test_id_minimum_is_configurable():
    cfg = make_config(min_id_digits=5)
    assert spans_of("dossier 12345 classé.", cfg=cfg) == [("12345", PhiCategory.ID_NUMBER)]


def test_belgian_national_number():
    got = spans_of("registre national 85.07.30-033.81 vérifié.")
    assert got == [("85.07.30-033.81", PhiCategory.ID_NUMBER)]


# -- R8: phone numbers -------------------------------------------------------------

@pytest.mark.parametrize("surface", [
    "081/22.33.44",
    "+32 475 12 34 56",
    "04 76 23 11 09",
])
def test_phone_formats(surface):
    assert spans_of(f"joignable au {surface} en journée.") == [(surface, PhiCategory.PHONE_NUMBER)]


def test_leading_zero_date_is_not_a_phone():
    # dd/mm/yyyy starts with 0 but carries only seven further digits.
    assert spans_of("vu le 02/04/2019 en consultation.") == [("02/04/2019", PhiCategory.DATE)]


# -- R9: emails and urls -------------------------------------------------------------

def test_email_detection():
    got = spans_of("écrire à secretariat.ortho@exemple-sante.be rapidement.")
    assert got == [("secretariat.ortho@exemple-sante.be", PhiCategory.URL_EMAIL)]


def test_url_detection_and_trailing_punctuation():
    got = spans_of("voir https://portail.exemple.be/consignes.")
    assert got == [("https://portail.exemple.be/consignes", PhiCategory.URL_EMAIL)]
    got = spans_of("infos sur www.exemple.org, merci.")
    assert got == [("www.exemple.org", PhiCategory.URL_EMAIL)]


# -- uppercase softening ---------------------------------------------------------

def test_uppercase_line_still_detected():
    # Softening restores one capital per word, so the title scan works;
    # spans still index the original (uppercase) text.
    got = spans_of("COMPTE RENDU CONCERNANT MME VERCRUYSSE")
    assert got == [("VERCRUYSSE", PhiCategory.PERSON_NAME)]


# -- overlap resolution ------------------------------------------------------------

def _span(start, end, category, text):
    return PhiSpan(start, end, category, text[start:end])


def test_resolution_prefers_longer_spans():
    text = "CHU de Namur"
    inst = _span(0, 12, PhiCategory.INSTITUTION, text)
    loc = _span(7, 12, PhiCategory.LOCATION, text)
    cfg = make_config()
    assert resolve_overlaps([loc, inst], cfg.category_precedence) == [inst]


def test_resolution_breaks_length_ties_by_precedence():
    text = "0512345678"
    phone = _span(0, 10, PhiCategory.PHONE_NUMBER, text)
    ident = _span(0, 10, PhiCategory.ID_NUMBER, text)
    cfg = make_config()
    assert resolve_overlaps([phone, ident], cfg.category_precedence) == [ident]


def test_resolution_output_sorted_and_deduplicated():
    text = "abc def ghi"
    a = _span(0, 3, PhiCategory.DATE, text)
    b = _span(8, 11, PhiCategory.AGE, text)
    assert resolve_overlaps([b, a, a], make_config().category_precedence) == [a, b]


def test_detect_integration_keeps_institution_over_inner_city():
    got = spans_of("admis au CHU de Namur hier soir.")
    assert got == [("CHU de Namur", PhiCategory.INSTITUTION)]


def test_contiguous_ten_digit_run_is_an_id_not_a_phone():
    # Equal-length candidates from R7 and R8; precedence favours the id.
    assert spans_of("code brut 0512345678 transmis.") == [("0512345678", PhiCategory.ID_NUMBER)]


def test_detect_normalizes_to_nfc():
    decomposed = "opéré le 14/03/2019 à Namur."
    annotated = detect(make_doc(decomposed), make_config())
    assert [s.surface for s in annotated.spans] == ["14/03/2019", "Namur"]
    for span in annotated.spans:
        span.validate_against(annotated.doc.text)


def test_annotated_document_rejects_overlapping_spans():
    text = "abcdef"
    doc = make_doc(text)
    a = _span(0, 4, PhiCategory.DATE, text)
    b = _span(2, 6, PhiCategory.AGE, text)
    with pytest.raises(ValueError):
        AnnotatedDocument(doc=doc, spans=(a, b))
