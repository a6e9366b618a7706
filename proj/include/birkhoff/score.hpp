// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/rational.hpp>

#include "birkhoff/error.hpp"

namespace birkhoff {

/// Exact beat position or length. Onsets and durations stay rational so that
/// sweeps over note boundaries never accumulate float drift.
using Beat = boost::rational<std::int64_t>;

inline double to_double(const Beat& b) { return boost::rational_cast<double>(b); }

struct Pitch {
    int midi = 60;

    static Pitch checked(int midi) {
        if (midi < 0 || midi > 127)
            throw Error(ErrorKind::RangeError, "pitch " + std::to_string(midi) + " outside 0-127");
        return Pitch{midi};
    }

    int pitch_class() const noexcept { return ((midi % 12) + 12) % 12; }

    friend constexpr auto operator<=>(const Pitch&, const Pitch&) = default;
};

inline constexpr int kMelodyVoice = 0;
inline constexpr int kAccompanimentVoice = 1;

struct NoteEvent {
    Beat onset{0};
    Beat duration{1};
    Pitch pitch{};
    int voice = 0;

    Beat end() const { return onset + duration; }

    friend bool operator==(const NoteEvent&, const NoteEvent&) = default;
};

/// Canonical note order: onset, then pitch, then voice, then duration.
inline bool note_less(const NoteEvent& a, const NoteEvent& b) {
    if (a.onset != b.onset) return a.onset < b.onset;
    if (a.pitch != b.pitch) return a.pitch < b.pitch;
    if (a.voice != b.voice) return a.voice < b.voice;
    return a.duration < b.duration;
}

enum class ChordQuality { major, minor, diminished, augmented, dominant7, major7, minor7 };

inline constexpr std::array<ChordQuality, 7> kAllQualities = {
    ChordQuality::major,     ChordQuality::minor,  ChordQuality::diminished, ChordQuality::augmented,
    ChordQuality::dominant7, ChordQuality::major7, ChordQuality::minor7,
};

constexpr std::string_view to_string(ChordQuality q) noexcept {
    switch (q) {
    case ChordQuality::major: return "major";
    case ChordQuality::minor: return "minor";
    case ChordQuality::diminished: return "diminished";
    case ChordQuality::augmented: return "augmented";
    case ChordQuality::dominant7: return "dominant7";
    case ChordQuality::major7: return "major7";
    case ChordQuality::minor7: return "minor7";
    }
    return "major";
}

inline std::optional<ChordQuality> parse_quality(std::string_view s) {
    for (auto q : kAllQualities)
        if (to_string(q) == s) return q;
    return std::nullopt;
}

/// Semitone offsets above the root.
inline std::vector<int> chord_intervals(ChordQuality q) {
    switch (q) {
    case ChordQuality::major: return {0, 4, 7};
    case ChordQuality::minor: return {0, 3, 7};
    case ChordQuality::diminished: return {0, 3, 6};
    case ChordQuality::augmented: return {0, 4, 8};
    case ChordQuality::dominant7: return {0, 4, 7, 10};
    case ChordQuality::major7: return {0, 4, 7, 11};
    case ChordQuality::minor7: return {0, 3, 7, 10};
    }
    return {0};
}

struct ChordAnnotation {
    Beat onset{0};
    int root = 0;  // pitch class
    ChordQuality quality = ChordQuality::major;

    bool contains_pitch_class(int pc) const {
        for (int iv : chord_intervals(quality))
            if ((root + iv) % 12 == ((pc % 12) + 12) % 12) return true;
        return false;
    }

    friend bool operator==(const ChordAnnotation&, const ChordAnnotation&) = default;
};

enum class Mode { major, minor };

constexpr std::string_view to_string(Mode m) noexcept { return m == Mode::major ? "major" : "minor"; }

struct KeySignature {
    int tonic = 0;
    Mode mode = Mode::major;

    friend bool operator==(const KeySignature&, const KeySignature&) = default;
};

enum class Label { ai = 0, composer = 1 };

constexpr std::string_view to_string(Label l) noexcept { return l == Label::composer ? "composer" : "ai"; }

inline std::optional<Label> parse_label(std::string_view s) {
    if (s == "composer") return Label::composer;
    if (s == "ai") return Label::ai;
    return std::nullopt;
}

struct Score {
    std::vector<NoteEvent> notes;
    std::vector<ChordAnnotation> chords;
    KeySignature key{};
    int beats_per_bar = 4;
    std::optional<Label> label;
    std::string id;

    void sort_notes() { std::stable_sort(notes.begin(), notes.end(), note_less); }

    Beat total_duration() const {
        Beat end{0};
        for (const auto& n : notes) end = std::max(end, n.end());
        return end;
    }

    friend bool operator==(const Score&, const Score&) = default;
};

/// Counts per ordered bin. `Bin` is the label type (pitch class, snapped
/// duration, byte value, ...).
template <class Bin>
struct Histogram {
    std::vector<Bin> bin_labels;
    std::vector<std::uint64_t> counts;
    std::uint64_t total = 0;

    std::vector<double> probabilities() const {
        std::vector<double> p(counts.size(), 0.0);
        if (total == 0) return p;
        for (std::size_t i = 0; i < counts.size(); ++i)
            p[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
        return p;
    }
};

inline int interval_semitones(Pitch a, Pitch b) noexcept { return std::abs(a.midi - b.midi); }

/// Compound intervals fold into 1..12; unison is treated as octave-equivalent (12).
inline int reduce_to_interval_class(int semitones) {
    if (semitones < 0) throw Error(ErrorKind::InvalidArgument, "negative interval");
    if (semitones == 0) return 12;
    return ((semitones - 1) % 12) + 1;
}

inline Histogram<int> build_pitch_class_histogram(const Score& score) {
    if (score.notes.empty()) throw Error(ErrorKind::EmptyScore, "score '" + score.id + "' has no notes");
    Histogram<int> h;
    h.bin_labels.resize(12);
    for (int pc = 0; pc < 12; ++pc) h.bin_labels[pc] = pc;
    h.counts.assign(12, 0);
    for (const auto& n : score.notes) ++h.counts[n.pitch.pitch_class()];
    h.total = score.notes.size();
    return h;
}

inline const std::array<Beat, 8>& duration_bins() {
    static const std::array<Beat, 8> bins = {Beat(1, 4), Beat(1, 2), Beat(3, 4), Beat(1),
                                             Beat(3, 2), Beat(2),    Beat(3),    Beat(4)};
    return bins;
}

/// Index into duration_bins(); ties go to the shorter bin, anything past the
/// last bin lands in it.
inline std::size_t snap_duration(const Beat& d) {
    const auto& bins = duration_bins();
    if (d >= bins.back()) return bins.size() - 1;
    std::size_t best = 0;
    Beat best_dist = boost::abs(d - bins[0]);
    for (std::size_t i = 1; i < bins.size(); ++i) {
        Beat dist = boost::abs(d - bins[i]);
        if (dist < best_dist) {
            best = i;
            best_dist = dist;
        }
    }
    return best;
}

inline Histogram<Beat> build_duration_histogram(const Score& score) {
    if (score.notes.empty()) throw Error(ErrorKind::EmptyScore, "score '" + score.id + "' has no notes");
    const auto& bins = duration_bins();
    Histogram<Beat> h;
    h.bin_labels.assign(bins.begin(), bins.end());
    h.counts.assign(bins.size(), 0);
    for (const auto& n : score.notes) ++h.counts[snap_duration(n.duration)];
    h.total = score.notes.size();
    return h;
}

/// Pitches sounding throughout [onset, end). Duplicate pitches (unison
/// between voices) are kept.
struct Sonority {
    Beat onset{0};
    Beat end{0};
    std::vector<Pitch> pitches;
};

/// Sweep over every onset/offset boundary; each non-silent gap between two
/// consecutive boundaries yields one sonority. Output does not depend on the
/// input note order.
inline std::vector<Sonority> extract_sonorities(const Score& score) {
    std::vector<NoteEvent> notes = score.notes;
    std::sort(notes.begin(), notes.end(), note_less);

    std::vector<Beat> bounds;
    bounds.reserve(notes.size() * 2);
    for (const auto& n : notes) {
        bounds.push_back(n.onset);
        bounds.push_back(n.end());
    }
    std::sort(bounds.begin(), bounds.end());
    bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());

    std::vector<Sonority> out;
    std::vector<const NoteEvent*> active;
    std::size_t next = 0;
    for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
        const Beat t = bounds[k];
        std::erase_if(active, [&](const NoteEvent* n) { return n->end() <= t; });
        while (next < notes.size() && notes[next].onset <= t) {
            if (notes[next].end() > t) active.push_back(&notes[next]);
            ++next;
        }
        if (active.empty()) continue;
        Sonority s{t, bounds[k + 1], {}};
        for (const auto* n : active) s.pitches.push_back(n->pitch);
        std::sort(s.pitches.begin(), s.pitches.end());
        out.push_back(std::move(s));
    }
    return out;
}

inline std::vector<Sonority> multi_pitch_sonorities(const Score& score) {
    auto all = extract_sonorities(score);
    std::erase_if(all, [](const Sonority& s) { return s.pitches.size() < 2; });
    return all;
}

}  // namespace birkhoff
