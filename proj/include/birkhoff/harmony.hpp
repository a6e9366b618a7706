// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "birkhoff/score.hpp"

namespace birkhoff {

enum class IntervalCategory { perfect_consonance, imperfect_consonance, mild_dissonance, sharp_dissonance, tritone };

inline IntervalCategory interval_category(int interval_class) {
    switch (interval_class) {
    case 5: case 7: case 12: return IntervalCategory::perfect_consonance;
    case 3: case 4: case 8: case 9: return IntervalCategory::imperfect_consonance;
    case 2: case 10: return IntervalCategory::mild_dissonance;
    case 1: case 11: return IntervalCategory::sharp_dissonance;
    case 6: return IntervalCategory::tritone;
    default:
        throw Error(ErrorKind::InvalidArgument, "interval class " + std::to_string(interval_class) + " outside 1-12");
    }
}

/// Per-category weight used to derive the default alpha vector.
struct CategoryWeights {
    double perfect = 1.0;
    double imperfect = 0.8;
    double mild = 0.4;
    double sharp = 0.1;
    double tritone = 0.0;

    double operator()(IntervalCategory c) const noexcept {
        switch (c) {
        case IntervalCategory::perfect_consonance: return perfect;
        case IntervalCategory::imperfect_consonance: return imperfect;
        case IntervalCategory::mild_dissonance: return mild;
        case IntervalCategory::sharp_dissonance: return sharp;
        case IntervalCategory::tritone: return tritone;
        }
        return 0.0;
    }
};

struct IntervalWeights {
    std::array<double, 12> alpha{};  // alpha[i - 1] weights interval class i
    double theta_ih = 0.0;

    static IntervalWeights from_categories(const CategoryWeights& cw = {}, double theta = 0.0) {
        IntervalWeights w;
        for (int ic = 1; ic <= 12; ++ic) w.alpha[ic - 1] = cw(interval_category(ic));
        w.theta_ih = theta;
        return w;
    }
};

/// Fraction of all pairwise intervals (across every multi-pitch sonority)
/// falling into each interval class; index i-1 holds class i.
inline std::array<double, 12> interval_class_ratios(const Score& score) {
    std::array<std::uint64_t, 12> counts{};
    std::uint64_t total = 0;
    for (const auto& s : multi_pitch_sonorities(score)) {
        for (std::size_t i = 0; i < s.pitches.size(); ++i)
            for (std::size_t j = i + 1; j < s.pitches.size(); ++j) {
                ++counts[reduce_to_interval_class(interval_semitones(s.pitches[i], s.pitches[j])) - 1];
                ++total;
            }
    }
    if (total == 0) throw Error(ErrorKind::NoSonorities, "score '" + score.id + "' has no simultaneous notes");
    std::array<double, 12> pir{};
    for (std::size_t i = 0; i < 12; ++i) pir[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
    return pir;
}

inline double interval_harmony(const Score& score, const IntervalWeights& w) {
    const auto pir = interval_class_ratios(score);
    double ih = 0.0;
    for (std::size_t i = 0; i < 12; ++i) ih += w.alpha[i] * pir[i];
    return ih + w.theta_ih;
}

// ---------------------------------------------------------------------------
// Chord progression tension

struct TensionWeights {
    std::array<double, 6> lambda{1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6, 1.0 / 6};
};

/// Steps between two pitch classes on the circle of fifths, 0..6.
inline int fifths_distance(int pc_a, int pc_b) noexcept {
    const int a = (((pc_a % 12) + 12) % 12) * 7 % 12;
    const int b = (((pc_b % 12) + 12) % 12) * 7 % 12;
    const int d = std::abs(a - b);
    return std::min(d, 12 - d);
}

/// Scale degree 1..7 of a pitch class in the key, or nullopt when chromatic.
/// Minor keys accept both the natural and the raised seventh.
inline std::optional<int> scale_degree(int pc, const KeySignature& key) {
    static constexpr std::array<int, 7> major_steps = {0, 2, 4, 5, 7, 9, 11};
    static constexpr std::array<int, 7> minor_steps = {0, 2, 3, 5, 7, 8, 10};
    const int offset = (((pc - key.tonic) % 12) + 12) % 12;
    const auto& steps = key.mode == Mode::major ? major_steps : minor_steps;
    for (int d = 0; d < 7; ++d)
        if (steps[d] == offset) return d + 1;
    if (key.mode == Mode::minor && offset == 11) return 7;
    return std::nullopt;
}

enum class HarmonicFunction { tonic, subdominant, dominant, other };

inline HarmonicFunction harmonic_function(int root, const KeySignature& key) {
    const auto deg = scale_degree(root, key);
    if (!deg) return HarmonicFunction::other;
    switch (*deg) {
    case 1: case 6: return HarmonicFunction::tonic;
    case 2: case 4: return HarmonicFunction::subdominant;
    case 5: case 7: return HarmonicFunction::dominant;
    default: return HarmonicFunction::other;
    }
}

inline double quality_dissonance(ChordQuality q) noexcept {
    switch (q) {
    case ChordQuality::major:
    case ChordQuality::minor: return 0.0;
    case ChordQuality::dominant7: return 0.4;
    case ChordQuality::minor7:
    case ChordQuality::major7: return 0.5;
    case ChordQuality::diminished: return 0.8;
    case ChordQuality::augmented: return 1.0;
    }
    return 1.0;
}

/// The six bounded tension terms of one chord, each in [0, 1].
struct TensionTerms {
    double previous = 0.0;    // distance to the preceding chord
    double key = 0.0;         // distance to the tonic
    double final_chord = 0.0; // tonic-relative distance to the closing chord
    double quality = 0.0;     // intrinsic chord dissonance
    double melody = 0.0;      // share of melody notes outside the chord
    double function = 0.0;    // T/S/D functional distance
    bool melody_missing = false;

    std::array<double, 6> as_array() const { return {previous, key, final_chord, quality, melody, function}; }
};

/// Share of the distinct melody pitch classes sounding in [begin, end) that
/// are not chord tones. Returns nullopt when no melody note overlaps the span.
inline std::optional<double> melody_misfit(const Score& score, const ChordAnnotation& chord, const Beat& begin,
                                           const Beat& end) {
    std::array<bool, 12> present{};
    for (const auto& n : score.notes) {
        if (n.voice != kMelodyVoice) continue;
        if (n.onset >= end || n.end() <= begin) continue;
        present[n.pitch.pitch_class()] = true;
    }
    std::size_t classes = 0, fitting = 0;
    for (int pc = 0; pc < 12; ++pc) {
        if (!present[pc]) continue;
        ++classes;
        if (chord.contains_pitch_class(pc)) ++fitting;
    }
    if (classes == 0) return std::nullopt;
    return 1.0 - static_cast<double>(fitting) / static_cast<double>(classes);
}

/// Tension terms of `score.chords[index]`. The chord spans until the next
/// annotation, or until the end of the score for the last one.
inline TensionTerms chord_tension_terms(const Score& score, std::size_t index) {
    const auto& chords = score.chords;
    if (index >= chords.size()) throw Error(ErrorKind::InvalidArgument, "chord index out of range");
    const auto& chord = chords[index];
    const auto& key = score.key;

    TensionTerms t;
    if (index > 0) t.previous = fifths_distance(chord.root, chords[index - 1].root) / 6.0;
    t.key = fifths_distance(chord.root, key.tonic) / 6.0;
    const int offset = chord.root - key.tonic;
    const int final_offset = chords.back().root - key.tonic;
    t.final_chord = fifths_distance(offset, final_offset) / 6.0;
    t.quality = quality_dissonance(chord.quality);

    const Beat begin = chord.onset;
    const Beat end = index + 1 < chords.size() ? chords[index + 1].onset : std::max(score.total_duration(), begin);
    if (auto m = melody_misfit(score, chord, begin, end)) {
        t.melody = *m;
    } else {
        t.melody = 0.0;
        t.melody_missing = true;
    }

    switch (harmonic_function(chord.root, key)) {
    case HarmonicFunction::tonic: t.function = 0.0; break;
    case HarmonicFunction::subdominant: t.function = 1.0 / 3.0; break;
    case HarmonicFunction::dominant: t.function = 2.0 / 3.0; break;
    case HarmonicFunction::other: t.function = 1.0; break;
    }
    return t;
}

inline double chord_tension(const TensionTerms& terms, const TensionWeights& w) {
    const auto v = terms.as_array();
    double t = 0.0;
    for (std::size_t k = 0; k < 6; ++k) t += w.lambda[k] * v[k];
    return t;
}

/// One minus the mean chord tension, so larger values read as more harmonious.
inline double chord_progression_harmony(const Score& score, const TensionWeights& w) {
    if (score.chords.empty()) throw Error(ErrorKind::NoChords, "score '" + score.id + "' has no chord annotations");
    double sum = 0.0;
    for (std::size_t i = 0; i < score.chords.size(); ++i) sum += chord_tension(chord_tension_terms(score, i), w);
    return 1.0 - sum / static_cast<double>(score.chords.size());
}

}  // namespace birkhoff
