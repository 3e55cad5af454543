#!/usr/bin/env python3
"""Regenerates data/stimuli/*.jsonl: 2x2x2 agreement-attraction items.

Each frame yields eight sentences (syncretism x grammaticality x attractor
number). Spans are half-open code-point offsets into `text`.
"""

import json
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "stimuli"
CONDITIONS = [
    (s, g, a)
    for s in ("syncretic", "nonsyncretic")
    for g in ("gram", "ungram")
    for a in ("sg", "pl")
]


def build(parts):
    """Joins (text, role) parts with spaces; returns text and role spans."""
    text, spans = "", {}
    for i, (piece, role) in enumerate(parts):
        if i and not piece[:1] in ".,!?":
            text += " "
        start = len(text)
        text += piece
        if role:
            spans[role] = [start, len(text)]
    return text, spans


def record(item_id, language, cond, parts, head_number=None):
    text, spans = build(parts)
    s, g, a = cond
    rec = {
        "item_id": item_id,
        "language": language,
        "syncretism": s,
        "grammaticality": g,
        "attractor_number": a,
        "text": text,
        "head_span": spans["head"],
        "attractor_span": spans["attractor"],
        "verb_span": spans["verb"],
    }
    if head_number:
        rec["head_number"] = head_number
    return rec


# The manipulated noun is the possessed noun (syncretic: plain plural) or the
# possessor (non-syncretic: genitive plural).
ENGLISH = [
    ("statue", "in", "elf's", "elves'", "garden", "gardens", "old"),
    ("gate", "near", "man's", "men's", "field", "fields", "broken"),
    ("lamp", "by", "woman's", "women's", "desk", "desks", "bright"),
    ("toy", "under", "child's", "children's", "bed", "beds", "red"),
    ("path", "behind", "wolf's", "wolves'", "den", "dens", "narrow"),
    ("hole", "beside", "mouse's", "mice's", "nest", "nests", "deep"),
    ("fence", "around", "goose's", "geese's", "pond", "ponds", "new"),
    ("map", "inside", "thief's", "thieves'", "bag", "bags", "torn"),
    ("letter", "from", "wife's", "wives'", "sister", "sisters", "long"),
    ("cart", "beside", "ox's", "oxen's", "stall", "stalls", "empty"),
    ("key", "to", "king's", "kings'", "cabinet", "cabinets", "lost"),
    ("note", "on", "clerk's", "clerks'", "file", "files", "wrong"),
    ("roof", "of", "farmer's", "farmers'", "barn", "barns", "leaking"),
    ("door", "of", "teacher's", "teachers'", "office", "offices", "open"),
    ("photo", "of", "sailor's", "sailors'", "ship", "ships", "blurry"),
    ("label", "on", "baker's", "bakers'", "box", "boxes", "faded"),
]


def english():
    out = []
    for n, (head, prep, pos_sg, pos_pl, noun_sg, noun_pl, pred) in enumerate(ENGLISH, 1):
        for cond in CONDITIONS:
            s, g, a = cond
            verb = "is" if g == "gram" else "are"
            if s == "syncretic":
                possessor, noun = (pos_pl, None), (noun_sg if a == "sg" else noun_pl, "attractor")
            else:
                possessor, noun = (pos_sg if a == "sg" else pos_pl, "attractor"), (noun_pl, None)
            parts = [("The", None), (head, "head"), (prep, None), ("the", None), possessor, noun,
                     (verb, "verb"), (pred, None), (".", None)]
            out.append(record(n, "en", cond, parts))
    return out


# Syncretic: accusative "die" (same as nominative). Non-syncretic: dative
# "der"/"den".
GERMAN = [
    ("Stellungnahme", "zu", "gegen", "Demonstration", "Demonstrationen", "umstritten"),
    ("Rede", "zu", "über", "Reform", "Reformen", "lang"),
    ("Spende", "von", "für", "Schule", "Schulen", "großzügig"),
    ("Brücke", "zu", "über", "Insel", "Inseln", "marode"),
    ("Frage", "nach", "über", "Regel", "Regeln", "berechtigt"),
    ("Mauer", "bei", "um", "Kirche", "Kirchen", "alt"),
    ("Karte", "mit", "ohne", "Straße", "Straßen", "ungenau"),
    ("Reise", "mit", "ohne", "Freundin", "Freundinnen", "teuer"),
    ("Arbeit", "mit", "für", "Familie", "Familien", "anstrengend"),
    ("Debatte", "nach", "über", "Wahl", "Wahlen", "hitzig"),
    ("Warnung", "vor", "über", "Gefahr", "Gefahren", "deutlich"),
    ("Spur", "zu", "durch", "Höhle", "Höhlen", "schmal"),
    ("Sorge", "bei", "um", "Pflanze", "Pflanzen", "groß"),
    ("Hilfe", "von", "für", "Nachbarin", "Nachbarinnen", "willkommen"),
    ("Anfrage", "von", "für", "Firma", "Firmen", "dringend"),
    ("Einladung", "zu", "für", "Feier", "Feiern", "freundlich"),
]


def german():
    out = []
    for n, (head, dat, acc, sg, pl, pred) in enumerate(GERMAN, 1):
        for cond in CONDITIONS:
            s, g, a = cond
            verb = "war" if g == "gram" else "waren"
            if s == "syncretic":
                prep, det = acc, "die"
            else:
                prep, det = dat, "der" if a == "sg" else "den"
            noun = sg if a == "sg" else pl
            parts = [("Die", None), (head, "head"), (prep, None), (det, None), (noun, "attractor"),
                     (verb, "verb"), (pred, None), (".", None)]
            out.append(record(n, "de", cond, parts))
    return out


# Syncretic: accusative (plural equals nominative plural). Non-syncretic:
# genitive. Forms: acc sg, acc pl, gen sg, gen pl.
RUSSIAN = [
    ("Дорога", "шла", "шли", "через", "вдоль", ("рощу", "рощи", "рощи", "рощ"), "мимо реки"),
    ("Тропинка", "вела", "вели", "на", "у", ("гору", "горы", "горы", "гор"), "к озеру"),
    ("Очередь", "тянулась", "тянулись", "в", "около", ("библиотеку", "библиотеки", "библиотеки", "библиотек"), "до вечера"),
    ("Статья", "вышла", "вышли", "про", "для", ("школу", "школы", "школы", "школ"), "в понедельник"),
    ("Письмо", "пришло", "пришли", "про", "для", ("выставку", "выставки", "выставки", "выставок"), "утром"),
    ("Билет", "стоил", "стоили", "на", "для", ("экскурсию", "экскурсии", "экскурсии", "экскурсий"), "дорого"),
    ("Мост", "стоял", "стояли", "через", "около", ("реку", "реки", "реки", "рек"), "давно"),
    ("Плата", "выросла", "выросли", "за", "для", ("квартиру", "квартиры", "квартиры", "квартир"), "весной"),
    ("Заявка", "поступила", "поступили", "на", "для", ("премию", "премии", "премии", "премий"), "вовремя"),
    ("Подарок", "понравился", "понравились", "на", "для", ("свадьбу", "свадьбы", "свадьбы", "свадеб"), "всем"),
    ("Приглашение", "пришло", "пришли", "на", "для", ("встречу", "встречи", "встречи", "встреч"), "вчера"),
    ("Вход", "был", "были", "в", "у", ("шахту", "шахты", "шахты", "шахт"), "рядом с дорогой"),
    ("Путь", "занял", "заняли", "через", "вдоль", ("пустыню", "пустыни", "пустыни", "пустынь"), "неделю"),
    ("Указатель", "висел", "висели", "на", "около", ("станцию", "станции", "станции", "станций"), "у входа"),
    ("Проект", "появился", "появились", "про", "для", ("больницу", "больницы", "больницы", "больниц"), "в газете"),
    ("Рассказ", "вышел", "вышли", "про", "после", ("войну", "войны", "войны", "войн"), "осенью"),
]

# Plural-head frames; agreement is plural, the error is singular.
RUSSIAN_PLURAL_HEAD = [
    ("Дороги", "шла", "шли", "через", "вдоль", ("рощу", "рощи", "рощи", "рощ"), "мимо реки"),
    ("Тропинки", "вела", "вели", "на", "у", ("гору", "горы", "горы", "гор"), "к озеру"),
    ("Статьи", "вышла", "вышли", "про", "для", ("школу", "школы", "школы", "школ"), "в понедельник"),
    ("Мосты", "стоял", "стояли", "через", "около", ("реку", "реки", "реки", "рек"), "давно"),
]


def russian():
    out = []
    frames = [(f, "sg") for f in RUSSIAN] + [(f, "pl") for f in RUSSIAN_PLURAL_HEAD]
    for n, ((head, v_sg, v_pl, acc, gen, forms, tail), head_number) in enumerate(frames, 1):
        for cond in CONDITIONS:
            s, g, a = cond
            agree, error = (v_sg, v_pl) if head_number == "sg" else (v_pl, v_sg)
            verb = agree if g == "gram" else error
            prep = acc if s == "syncretic" else gen
            idx = (0 if s == "syncretic" else 2) + (0 if a == "sg" else 1)
            parts = [(head, "head"), (prep, None), (forms[idx], "attractor"), (verb, "verb"), (tail, None), (".", None)]
            out.append(record(n, "ru", cond, parts, head_number))
    return out


# Attractor precedes the head. Syncretic head: consonant-final, possessive
# -I (same as accusative). Non-syncretic head: vowel-final, possessive -sI.
TURKISH = [
    ("Teknisyenin", "Teknisyenlerin", "eğitmeni", "hocası", "dün", "koştu", "koştular"),
    ("Öğrencinin", "Öğrencilerin", "öğretmeni", "dadısı", "sabah", "güldü", "güldüler"),
    ("Askerin", "Askerlerin", "komutanı", "abisi", "akşam", "uyudu", "uyudular"),
    ("Doktorun", "Doktorların", "asistanı", "aşçısı", "erken", "geldi", "geldiler"),
    ("Oyuncunun", "Oyuncuların", "antrenörü", "amcası", "bugün", "konuştu", "konuştular"),
    ("Müşterinin", "Müşterilerin", "avukatı", "bekçisi", "hemen", "çıktı", "çıktılar"),
    ("Yolcunun", "Yolcuların", "şoförü", "kapıcısı", "yine", "bağırdı", "bağırdılar"),
    ("Çiftçinin", "Çiftçilerin", "ortağı", "komşusu", "erkenden", "ayrıldı", "ayrıldılar"),
    ("Sanatçının", "Sanatçıların", "menajeri", "teyzesi", "gece", "döndü", "döndüler"),
    ("İşçinin", "İşçilerin", "patronu", "ustası", "öğlen", "dinlendi", "dinlendiler"),
    ("Öğretmenin", "Öğretmenlerin", "müdürü", "annesi", "sonunda", "gitti", "gittiler"),
    ("Polisin", "Polislerin", "şefi", "çaycısı", "aniden", "kaçtı", "kaçtılar"),
    ("Yazarın", "Yazarların", "editörü", "ablası", "geçen hafta", "evlendi", "evlendiler"),
    ("Hastanın", "Hastaların", "doktoru", "hemşiresi", "biraz önce", "yoruldu", "yoruldular"),
    ("Pilotun", "Pilotların", "kaptanı", "babası", "sessizce", "bekledi", "beklediler"),
    ("Dansçının", "Dansçıların", "koreografı", "hocası", "sonra", "çıktı", "çıktılar"),
]


def turkish():
    out = []
    for n, (att_sg, att_pl, head_syn, head_non, adverb, v_sg, v_pl) in enumerate(TURKISH, 1):
        for cond in CONDITIONS:
            s, g, a = cond
            parts = [
                (att_sg if a == "sg" else att_pl, "attractor"),
                (head_syn if s == "syncretic" else head_non, "head"),
                (adverb, None),
                (v_sg if g == "gram" else v_pl, "verb"),
                (".", None),
            ]
            out.append(record(n, "tr", cond, parts))
    return out


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, records in [("english", english()), ("german", german()), ("russian", russian()), ("turkish", turkish())]:
        with open(OUT / f"{name}.jsonl", "w", encoding="utf-8", newline="\n") as f:
            for r in records:
                f.write(json.dumps(r, ensure_ascii=False) + "\n")
        print(f"{name}: {len(records)} sentences")


if __name__ == "__main__":
    main()
