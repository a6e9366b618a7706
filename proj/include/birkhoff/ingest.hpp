// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "birkhoff/score.hpp"

namespace birkhoff {

enum class SourceFormat { smf, scoretext };

struct ParseWarning {
    std::string location;
    std::string message;
};

struct ParseDiagnostics {
    std::vector<ParseWarning> warnings;
    SourceFormat source_format = SourceFormat::scoretext;
};

struct ParseResult {
    Score score;
    ParseDiagnostics diagnostics;
};

// ---------------------------------------------------------------------------
// Validation

enum class Violation {
    EmptyScore,
    NotesUnsorted,
    NonPositiveDuration,
    NegativeOnset,
    PitchOutOfRange,
    InvalidVoice,
    ChordsUnordered,
    ChordRootOutOfRange,
    TonicOutOfRange,
    NonPositiveBeatsPerBar,
};

constexpr std::string_view to_string(Violation v) noexcept {
    switch (v) {
    case Violation::EmptyScore: return "EmptyScore";
    case Violation::NotesUnsorted: return "NotesUnsorted";
    case Violation::NonPositiveDuration: return "NonPositiveDuration";
    case Violation::NegativeOnset: return "NegativeOnset";
    case Violation::PitchOutOfRange: return "PitchOutOfRange";
    case Violation::InvalidVoice: return "InvalidVoice";
    case Violation::ChordsUnordered: return "ChordsUnordered";
    case Violation::ChordRootOutOfRange: return "ChordRootOutOfRange";
    case Violation::TonicOutOfRange: return "TonicOutOfRange";
    case Violation::NonPositiveBeatsPerBar: return "NonPositiveBeatsPerBar";
    }
    return "Unknown";
}

/// One entry per broken invariant (not per offending note).
inline std::vector<Violation> validate_score(const Score& s) {
    std::vector<Violation> out;
    auto flag = [&](bool broken, Violation v) {
        if (broken) out.push_back(v);
    };
    flag(s.notes.empty(), Violation::EmptyScore);
    flag(!std::is_sorted(s.notes.begin(), s.notes.end(), note_less), Violation::NotesUnsorted);
    flag(std::any_of(s.notes.begin(), s.notes.end(), [](const NoteEvent& n) { return n.duration <= 0; }),
         Violation::NonPositiveDuration);
    flag(std::any_of(s.notes.begin(), s.notes.end(), [](const NoteEvent& n) { return n.onset < 0; }),
         Violation::NegativeOnset);
    flag(std::any_of(s.notes.begin(), s.notes.end(),
                     [](const NoteEvent& n) { return n.pitch.midi < 0 || n.pitch.midi > 127; }),
         Violation::PitchOutOfRange);
    flag(std::any_of(s.notes.begin(), s.notes.end(), [](const NoteEvent& n) { return n.voice != 0 && n.voice != 1; }),
         Violation::InvalidVoice);
    bool ordered = true;
    for (std::size_t i = 1; i < s.chords.size(); ++i) ordered = ordered && s.chords[i - 1].onset < s.chords[i].onset;
    flag(!ordered, Violation::ChordsUnordered);
    flag(std::any_of(s.chords.begin(), s.chords.end(), [](const ChordAnnotation& c) { return c.root < 0 || c.root > 11; }),
         Violation::ChordRootOutOfRange);
    flag(s.key.tonic < 0 || s.key.tonic > 11, Violation::TonicOutOfRange);
    flag(s.beats_per_bar <= 0, Violation::NonPositiveBeatsPerBar);
    return out;
}

// ---------------------------------------------------------------------------
// Score interchange text (.score.json)

namespace detail {

using nlohmann::json;

inline constexpr std::int64_t kMaxDecimalDenominator = 64;

inline Beat beat_from_decimal(double v, const std::string& where) {
    if (!std::isfinite(v) || std::abs(v) > 1e12)
        throw Error(ErrorKind::RangeError, where + ": beat value out of range");
    for (std::int64_t den = 1; den <= kMaxDecimalDenominator; ++den) {
        const double scaled = v * static_cast<double>(den);
        const double r = std::round(scaled);
        if (std::abs(scaled - r) <= 1e-9 * std::max(1.0, std::abs(scaled)))
            return Beat(static_cast<std::int64_t>(r), den);
    }
    throw Error(ErrorKind::SchemaError, where + ": " + std::to_string(v) + " is not a multiple of 1/64 or coarser");
}

/// "n/d" (exact) or a decimal literal.
inline Beat parse_beat_text(const std::string& s, const std::string& where) {
    auto fail = [&] { return Error(ErrorKind::SchemaError, where + ": cannot read '" + s + "' as a beat value"); };
    const char* b = s.data();
    const char* e = b + s.size();
    if (const auto slash = s.find('/'); slash != std::string::npos) {
        std::int64_t num = 0, den = 0;
        auto r1 = std::from_chars(b, b + slash, num);
        auto r2 = std::from_chars(b + slash + 1, e, den);
        if (r1.ec != std::errc{} || r1.ptr != b + slash || r2.ec != std::errc{} || r2.ptr != e) throw fail();
        if (den <= 0) throw Error(ErrorKind::RangeError, where + ": non-positive denominator in '" + s + "'");
        return Beat(num, den);
    }
    double v = 0.0;
    auto r = std::from_chars(b, e, v);
    if (s.empty() || r.ec != std::errc{} || r.ptr != e) throw fail();
    return beat_from_decimal(v, where);
}

inline Beat parse_beat(const json& v, const std::string& where) {
    if (v.is_number_integer()) return Beat(v.get<std::int64_t>());
    if (v.is_number_float()) return beat_from_decimal(v.get<double>(), where);
    if (v.is_string()) return parse_beat_text(v.get<std::string>(), where);
    throw Error(ErrorKind::SchemaError, where + ": expected a number or \"n/d\" string");
}

inline json beat_to_json(const Beat& b) {
    if (b.denominator() == 1) return b.numerator();
    return std::to_string(b.numerator()) + "/" + std::to_string(b.denominator());
}

inline const json& require(const json& obj, const char* field, const std::string& where) {
    if (!obj.is_object()) throw Error(ErrorKind::SchemaError, where + ": expected an object");
    auto it = obj.find(field);
    if (it == obj.end()) throw Error(ErrorKind::SchemaError, where + ": missing field '" + field + "'");
    return *it;
}

inline std::int64_t require_int(const json& obj, const char* field, const std::string& where) {
    const auto& v = require(obj, field, where);
    if (!v.is_number_integer()) throw Error(ErrorKind::SchemaError, where + "." + field + ": expected an integer");
    return v.get<std::int64_t>();
}

inline std::string require_string(const json& obj, const char* field, const std::string& where) {
    const auto& v = require(obj, field, where);
    if (!v.is_string()) throw Error(ErrorKind::SchemaError, where + "." + field + ": expected a string");
    return v.get<std::string>();
}

inline KeySignature parse_key(const json& doc, const std::string& where) {
    const auto& k = require(doc, "key", where);
    KeySignature key;
    const auto tonic = require_int(k, "tonic", where + ".key");
    if (tonic < 0 || tonic > 11) throw Error(ErrorKind::RangeError, where + ".key.tonic: outside 0-11");
    key.tonic = static_cast<int>(tonic);
    const auto mode = require_string(k, "mode", where + ".key");
    if (mode == "major") key.mode = Mode::major;
    else if (mode == "minor") key.mode = Mode::minor;
    else throw Error(ErrorKind::SchemaError, where + ".key.mode: expected \"major\" or \"minor\"");
    return key;
}

inline std::vector<ChordAnnotation> parse_chords(const json& doc, const std::string& where) {
    const auto& arr = require(doc, "chords", where);
    if (!arr.is_array()) throw Error(ErrorKind::SchemaError, where + ".chords: expected an array");
    std::vector<ChordAnnotation> chords;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string at = where + ".chords[" + std::to_string(i) + "]";
        ChordAnnotation c;
        c.onset = parse_beat(require(arr[i], "onset", at), at + ".onset");
        const auto root = require_int(arr[i], "root", at);
        if (root < 0 || root > 11) throw Error(ErrorKind::RangeError, at + ".root: outside 0-11");
        c.root = static_cast<int>(root);
        const auto q = parse_quality(require_string(arr[i], "quality", at));
        if (!q) throw Error(ErrorKind::SchemaError, at + ".quality: unknown chord quality");
        c.quality = *q;
        if (!chords.empty() && c.onset <= chords.back().onset)
            throw Error(ErrorKind::OrderError, at + ": chord onsets must be strictly increasing");
        chords.push_back(c);
    }
    return chords;
}

inline json key_to_json(const KeySignature& k) {
    return {{"tonic", k.tonic}, {"mode", std::string(to_string(k.mode))}};
}

inline json chords_to_json(const std::vector<ChordAnnotation>& chords) {
    json arr = json::array();
    for (const auto& c : chords)
        arr.push_back({{"onset", beat_to_json(c.onset)}, {"root", c.root}, {"quality", std::string(to_string(c.quality))}});
    return arr;
}

}  // namespace detail

inline Score score_from_json(const nlohmann::json& doc, const std::string& where = "score") {
    using detail::require;
    if (!doc.is_object()) throw Error(ErrorKind::SchemaError, where + ": expected an object");
    Score s;
    if (auto it = doc.find("id"); it != doc.end()) {
        if (!it->is_string()) throw Error(ErrorKind::SchemaError, where + ".id: expected a string");
        s.id = it->get<std::string>();
    }
    s.key = detail::parse_key(doc, where);
    const auto bpb = detail::require_int(doc, "beats_per_bar", where);
    if (bpb <= 0 || bpb > 64) throw Error(ErrorKind::RangeError, where + ".beats_per_bar: outside 1-64");
    s.beats_per_bar = static_cast<int>(bpb);

    const auto& notes = require(doc, "notes", where);
    if (!notes.is_array()) throw Error(ErrorKind::SchemaError, where + ".notes: expected an array");
    s.notes.reserve(notes.size());
    for (std::size_t i = 0; i < notes.size(); ++i) {
        const std::string at = where + ".notes[" + std::to_string(i) + "]";
        NoteEvent n;
        n.onset = detail::parse_beat(require(notes[i], "onset", at), at + ".onset");
        n.duration = detail::parse_beat(require(notes[i], "duration", at), at + ".duration");
        const auto pitch = detail::require_int(notes[i], "pitch", at);
        if (pitch < 0 || pitch > 127) throw Error(ErrorKind::RangeError, at + ".pitch: " + std::to_string(pitch) + " outside 0-127");
        n.pitch = Pitch{static_cast<int>(pitch)};
        const auto voice = detail::require_int(notes[i], "voice", at);
        if (voice != 0 && voice != 1) throw Error(ErrorKind::RangeError, at + ".voice: expected 0 or 1");
        n.voice = static_cast<int>(voice);
        if (n.onset < 0) throw Error(ErrorKind::RangeError, at + ".onset: negative");
        if (n.duration <= 0) throw Error(ErrorKind::RangeError, at + ".duration: must be positive");
        s.notes.push_back(n);
    }
    s.sort_notes();
    s.chords = detail::parse_chords(doc, where);

    if (auto it = doc.find("label"); it != doc.end() && !it->is_null()) {
        if (!it->is_string()) throw Error(ErrorKind::SchemaError, where + ".label: expected a string");
        auto label = parse_label(it->get<std::string>());
        if (!label) throw Error(ErrorKind::SchemaError, where + ".label: expected \"composer\" or \"ai\"");
        s.label = label;
    }
    return s;
}

inline nlohmann::json score_to_json(const Score& s) {
    nlohmann::json notes = nlohmann::json::array();
    for (const auto& n : s.notes)
        notes.push_back({{"onset", detail::beat_to_json(n.onset)},
                         {"duration", detail::beat_to_json(n.duration)},
                         {"pitch", n.pitch.midi},
                         {"voice", n.voice}});
    nlohmann::json doc = {
        {"id", s.id},
        {"key", detail::key_to_json(s.key)},
        {"beats_per_bar", s.beats_per_bar},
        {"notes", std::move(notes)},
        {"chords", detail::chords_to_json(s.chords)},
    };
    if (s.label) doc["label"] = std::string(to_string(*s.label));
    return doc;
}

/// Compact single-line rendering; suitable for line-delimited datasets.
inline std::string serialize_score_text(const Score& s) { return score_to_json(s).dump(); }

inline ParseResult parse_score_text(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::SchemaError, std::string("not a JSON document: ") + e.what());
    }
    ParseResult r;
    r.diagnostics.source_format = SourceFormat::scoretext;
    r.score = score_from_json(doc);
    if (r.score.notes.empty()) r.diagnostics.warnings.push_back({"notes", "score has no notes"});
    return r;
}

/// Sidecar `<name>.chords.json`: {key: {tonic, mode}, chords: [...]}.
inline void apply_chord_sidecar(Score& score, std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::SchemaError, std::string("chord sidecar is not JSON: ") + e.what());
    }
    score.key = detail::parse_key(doc, "sidecar");
    score.chords = detail::parse_chords(doc, "sidecar");
}

inline std::string chord_sidecar_text(const Score& s) {
    return nlohmann::json{{"key", detail::key_to_json(s.key)}, {"chords", detail::chords_to_json(s.chords)}}.dump();
}

// ---------------------------------------------------------------------------
// Standard MIDI File

namespace detail {

class ByteReader {
public:
    ByteReader(std::span<const std::uint8_t> data, ErrorKind on_eof) : data_(data), on_eof_(on_eof) {}

    std::size_t pos() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    bool done() const noexcept { return pos_ >= data_.size(); }

    std::uint8_t u8() {
        need(1);
        return data_[pos_++];
    }
    std::uint8_t peek() {
        need(1);
        return data_[pos_];
    }
    std::uint16_t u16() {
        need(2);
        const auto v = static_cast<std::uint16_t>((data_[pos_] << 8) | data_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | data_[pos_ + i];
        pos_ += 4;
        return v;
    }
    /// MIDI variable-length quantity, at most four bytes.
    std::uint32_t vlq() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            const auto b = u8();
            v = (v << 7) | (b & 0x7F);
            if ((b & 0x80) == 0) return v;
        }
        throw Error(on_eof_, "variable-length quantity longer than 4 bytes at offset " + std::to_string(pos_));
    }
    std::span<const std::uint8_t> bytes(std::size_t n) {
        need(n);
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    void skip(std::size_t n) { bytes(n); }

private:
    void need(std::size_t n) const {
        if (remaining() < n) throw Error(on_eof_, "unexpected end of data at offset " + std::to_string(pos_));
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
    ErrorKind on_eof_;
};

struct RawNote {
    std::uint64_t on_tick = 0;
    std::uint64_t off_tick = 0;
    int pitch = 0;
    int channel = 0;
    std::size_t track = 0;
};

struct TrackScan {
    std::vector<RawNote> notes;
    std::optional<std::pair<std::uint64_t, KeySignature>> key;
    std::optional<std::pair<std::uint64_t, std::pair<int, int>>> time_signature;
};

inline KeySignature key_from_sharps(int sharps, bool minor) {
    const int major_tonic = (((sharps * 7) % 12) + 12) % 12;
    return {minor ? (major_tonic + 9) % 12 : major_tonic, minor ? Mode::minor : Mode::major};
}

inline TrackScan scan_track(std::span<const std::uint8_t> chunk, std::size_t track, ParseDiagnostics& diag) {
    const std::string where = "track " + std::to_string(track);
    ByteReader r(chunk, ErrorKind::MalformedTrack);
    TrackScan out;
    std::map<std::pair<int, int>, std::uint64_t> open;  // (channel, pitch) -> on tick
    std::uint64_t tick = 0;
    std::uint8_t running = 0;

    auto close = [&](int ch, int pitch, std::uint64_t at) {
        auto it = open.find({ch, pitch});
        if (it == open.end()) {
            diag.warnings.push_back({where, "note-off without note-on, pitch " + std::to_string(pitch)});
            return;
        }
        if (at > it->second) out.notes.push_back({it->second, at, pitch, ch, track});
        else diag.warnings.push_back({where, "zero-length note dropped, pitch " + std::to_string(pitch)});
        open.erase(it);
    };

    bool ended = false;
    while (!r.done() && !ended) {
        tick += r.vlq();
        std::uint8_t status = r.peek();
        if (status & 0x80) {
            r.u8();
        } else {
            if (running == 0) throw Error(ErrorKind::MalformedTrack, where + ": data byte without running status");
            status = running;
        }

        if (status == 0xFF) {
            const auto type = r.u8();
            const auto len = r.vlq();
            const auto data = r.bytes(len);
            if (type == 0x2F) {
                ended = true;
            } else if (type == 0x59 && len >= 2) {
                const int sf = static_cast<std::int8_t>(data[0]);
                if (sf < -7 || sf > 7 || data[1] > 1) diag.warnings.push_back({where, "invalid key signature ignored"});
                else if (!out.key) out.key = {tick, key_from_sharps(sf, data[1] == 1)};
            } else if (type == 0x58 && len >= 2) {
                if (!out.time_signature) out.time_signature = {tick, {data[0], data[1]}};
            }
            running = 0;
            continue;
        }
        if (status == 0xF0 || status == 0xF7) {
            r.skip(r.vlq());
            running = 0;
            continue;
        }
        if (status >= 0xF0) throw Error(ErrorKind::MalformedTrack, where + ": unexpected system message in file");

        running = status;
        const int kind = status & 0xF0;
        const int ch = status & 0x0F;
        const int n_data = (kind == 0xC0 || kind == 0xD0) ? 1 : 2;
        std::uint8_t d[2] = {0, 0};
        for (int i = 0; i < n_data; ++i) {
            d[i] = r.u8();
            if (d[i] & 0x80) throw Error(ErrorKind::MalformedTrack, where + ": status byte where data byte expected");
        }
        if (kind == 0x90 && d[1] > 0) {
            if (open.count({ch, d[0]})) {
                diag.warnings.push_back({where, "overlapping note-on closes previous note, pitch " + std::to_string(d[0])});
                close(ch, d[0], tick);
            }
            open[{ch, d[0]}] = tick;
        } else if (kind == 0x80 || kind == 0x90) {
            close(ch, d[0], tick);
        }
    }
    if (!ended) diag.warnings.push_back({where, "missing end-of-track event"});
    if (!open.empty()) {
        const auto& [cp, t] = *open.begin();
        throw Error(ErrorKind::DanglingNoteOn, where + ": note-on for pitch " + std::to_string(cp.second) + " at tick " +
                                                   std::to_string(t) + " never released");
    }
    return out;
}

}  // namespace detail

/// Standard MIDI File, format 0 or 1, metrical timing. Format 1 note-bearing
/// tracks map to voices in file order; in format 0 the channels do, in order
/// of first use. Chords are never present in SMF; see apply_chord_sidecar.
inline ParseResult parse_smf(std::span<const std::uint8_t> bytes) {
    ParseResult res;
    res.diagnostics.source_format = SourceFormat::smf;
    auto& diag = res.diagnostics;

    detail::ByteReader r(bytes, ErrorKind::MalformedHeader);
    if (r.remaining() < 14) throw Error(ErrorKind::MalformedHeader, "file shorter than an SMF header");
    const auto magic = r.bytes(4);
    if (!std::equal(magic.begin(), magic.end(), "MThd")) throw Error(ErrorKind::MalformedHeader, "missing MThd");
    const auto header_len = r.u32();
    if (header_len < 6) throw Error(ErrorKind::MalformedHeader, "header chunk shorter than 6 bytes");
    const auto format = r.u16();
    const auto ntracks = r.u16();
    const auto division = r.u16();
    if (format == 2) throw Error(ErrorKind::UnsupportedFormat, "format 2 (independent sequences)");
    if (format > 2) throw Error(ErrorKind::MalformedHeader, "unknown format " + std::to_string(format));
    if (division & 0x8000) throw Error(ErrorKind::UnsupportedFormat, "SMPTE time division");
    if (division == 0) throw Error(ErrorKind::ZeroDivision, "division is 0 ticks per quarter note");
    if (r.remaining() < header_len - 6) throw Error(ErrorKind::MalformedHeader, "truncated header chunk");
    r.skip(header_len - 6);

    std::vector<detail::TrackScan> tracks;
    while (r.remaining() >= 8) {
        const auto type = r.bytes(4);
        const auto len = r.u32();
        if (len > r.remaining()) throw Error(ErrorKind::MalformedTrack, "chunk length exceeds file size");
        const auto body = r.bytes(len);
        if (std::equal(type.begin(), type.end(), "MTrk")) tracks.push_back(detail::scan_track(body, tracks.size(), diag));
        else diag.warnings.push_back({"chunk", "skipped unknown chunk"});
    }
    if (!r.done()) diag.warnings.push_back({"file", "trailing bytes after last chunk"});
    if (tracks.size() != ntracks)
        diag.warnings.push_back({"header", "header announces " + std::to_string(ntracks) + " tracks, found " +
                                               std::to_string(tracks.size())});

    // voice assignment
    std::vector<detail::RawNote> raw;
    for (auto& t : tracks) raw.insert(raw.end(), t.notes.begin(), t.notes.end());
    std::stable_sort(raw.begin(), raw.end(),
                     [](const auto& a, const auto& b) { return a.on_tick < b.on_tick; });
    std::vector<std::size_t> voice_keys;  // track index (format 1) or channel (format 0)
    for (auto& t : tracks) {
        if (format == 1 && !t.notes.empty()) voice_keys.push_back(t.notes.front().track);
    }
    if (format == 0)
        for (const auto& n : raw)
            if (std::find(voice_keys.begin(), voice_keys.end(), n.channel) == voice_keys.end())
                voice_keys.push_back(static_cast<std::size_t>(n.channel));
    if (voice_keys.size() > 2)
        throw Error(ErrorKind::UnsupportedFormat, std::to_string(voice_keys.size()) + " note-bearing " +
                                                      (format == 0 ? "channels" : "tracks") + "; at most 2 supported");

    auto& score = res.score;
    for (const auto& n : raw) {
        const std::size_t key = format == 0 ? static_cast<std::size_t>(n.channel) : n.track;
        const auto voice = std::find(voice_keys.begin(), voice_keys.end(), key) - voice_keys.begin();
        NoteEvent e;
        e.onset = Beat(static_cast<std::int64_t>(n.on_tick), division);
        e.duration = Beat(static_cast<std::int64_t>(n.off_tick - n.on_tick), division);
        e.pitch = Pitch{n.pitch};
        e.voice = static_cast<int>(voice);
        score.notes.push_back(e);
    }
    score.sort_notes();

    std::optional<std::pair<std::uint64_t, KeySignature>> key;
    std::optional<std::pair<std::uint64_t, std::pair<int, int>>> ts;
    for (const auto& t : tracks) {
        if (t.key && (!key || t.key->first < key->first)) key = t.key;
        if (t.time_signature && (!ts || t.time_signature->first < ts->first)) ts = t.time_signature;
    }
    if (key) score.key = key->second;
    else diag.warnings.push_back({"file", "no key signature; assuming C major"});
    if (ts) {
        const auto [numer, denom_pow] = ts->second;
        // beats are quarter notes: a bar of numer/2^denom_pow whole notes
        const std::int64_t quarter_units = static_cast<std::int64_t>(numer) * 4;
        const std::int64_t denom = denom_pow < 16 ? (std::int64_t{1} << denom_pow) : 0;
        if (numer > 0 && denom > 0 && quarter_units % denom == 0) score.beats_per_bar = static_cast<int>(quarter_units / denom);
        else if (numer > 0) score.beats_per_bar = numer;
    }
    diag.warnings.push_back({"file", "SMF carries no chord annotations"});
    if (score.notes.empty()) diag.warnings.push_back({"file", "no notes found"});
    return res;
}

namespace detail {

inline void put_vlq(std::vector<std::uint8_t>& out, std::uint32_t v) {
    std::uint8_t buf[4];
    int n = 0;
    buf[n++] = v & 0x7F;
    while ((v >>= 7) != 0) buf[n++] = static_cast<std::uint8_t>((v & 0x7F) | 0x80);
    while (n > 0) out.push_back(buf[--n]);
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint32_t to_tick(const Beat& b, int division) {
    const Beat t = b * Beat(division);
    if (t.denominator() != 1 || t.numerator() < 0)
        throw Error(ErrorKind::InvalidArgument, "beat value not representable at this division");
    return static_cast<std::uint32_t>(t.numerator());
}

inline void put_chunk(std::vector<std::uint8_t>& out, const char* type, const std::vector<std::uint8_t>& body) {
    out.insert(out.end(), type, type + 4);
    put_u32(out, static_cast<std::uint32_t>(body.size()));
    out.insert(out.end(), body.begin(), body.end());
}

}  // namespace detail

/// Format-1 writer: a conductor track (key and time signature) followed by
/// one track per voice. Every onset and duration must land on a tick.
inline std::vector<std::uint8_t> encode_smf(const Score& score, int division = 480) {
    std::vector<std::uint8_t> out = {'M', 'T', 'h', 'd'};
    detail::put_u32(out, 6);
    detail::put_u16(out, 1);

    std::vector<std::vector<std::uint8_t>> tracks;
    {
        std::vector<std::uint8_t> t;
        int sharps = 0;
        const int major_tonic = score.key.mode == Mode::major ? score.key.tonic : (score.key.tonic + 3) % 12;
        for (int s = -5; s <= 6; ++s)
            if ((((s * 7) % 12) + 12) % 12 == major_tonic) sharps = s;
        t.insert(t.end(), {0x00, 0xFF, 0x59, 0x02, static_cast<std::uint8_t>(static_cast<std::int8_t>(sharps)),
                           static_cast<std::uint8_t>(score.key.mode == Mode::minor ? 1 : 0)});
        t.insert(t.end(), {0x00, 0xFF, 0x58, 0x04, static_cast<std::uint8_t>(score.beats_per_bar), 0x02, 24, 8});
        t.insert(t.end(), {0x00, 0xFF, 0x2F, 0x00});
        tracks.push_back(std::move(t));
    }
    for (int voice = 0; voice < 2; ++voice) {
        struct Ev {
            std::uint32_t tick;
            bool on;
            int pitch;
        };
        std::vector<Ev> evs;
        for (const auto& n : score.notes) {
            if (n.voice != voice) continue;
            evs.push_back({detail::to_tick(n.onset, division), true, n.pitch.midi});
            evs.push_back({detail::to_tick(n.end(), division), false, n.pitch.midi});
        }
        if (evs.empty()) continue;
        std::stable_sort(evs.begin(), evs.end(), [](const Ev& a, const Ev& b) {
            if (a.tick != b.tick) return a.tick < b.tick;
            return !a.on && b.on;  // releases first
        });
        std::vector<std::uint8_t> t;
        std::uint32_t prev = 0;
        for (const auto& e : evs) {
            detail::put_vlq(t, e.tick - prev);
            prev = e.tick;
            t.push_back(static_cast<std::uint8_t>((e.on ? 0x90 : 0x80) | voice));
            t.push_back(static_cast<std::uint8_t>(e.pitch));
            t.push_back(e.on ? 80 : 0);
        }
        t.insert(t.end(), {0x00, 0xFF, 0x2F, 0x00});
        tracks.push_back(std::move(t));
    }
    detail::put_u16(out, static_cast<std::uint16_t>(tracks.size()));
    detail::put_u16(out, static_cast<std::uint16_t>(division));
    for (const auto& t : tracks) detail::put_chunk(out, "MTrk", t);
    return out;
}

// ---------------------------------------------------------------------------
// Files

inline std::string read_text_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<std::uint8_t> read_binary_file(const std::filesystem::path& p) {
    const auto s = read_text_file(p);
    return {s.begin(), s.end()};
}

inline bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

/// Loads `.mid`/`.midi` (plus `<name>.chords.json` when present) or a
/// `.score.json` document. The score id defaults to the file name without
/// its extension.
inline ParseResult load_score_file(const std::filesystem::path& p) {
    const std::string name = p.filename().string();
    ParseResult r;
    std::string stem;
    if (ends_with(name, ".mid") || ends_with(name, ".midi")) {
        r = parse_smf(read_binary_file(p));
        stem = name.substr(0, name.rfind('.'));
        const auto sidecar = p.parent_path() / (stem + ".chords.json");
        if (std::filesystem::exists(sidecar)) {
            apply_chord_sidecar(r.score, read_text_file(sidecar));
            std::erase_if(r.diagnostics.warnings, [](const ParseWarning& w) {
                return w.message == "SMF carries no chord annotations" || w.message == "no key signature; assuming C major";
            });
        }
    } else {
        r = parse_score_text(read_text_file(p));
        stem = ends_with(name, ".score.json") ? name.substr(0, name.size() - 11) : p.stem().string();
    }
    if (r.score.id.empty()) r.score.id = stem;
    return r;
}

}  // namespace birkhoff
