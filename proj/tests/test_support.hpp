#pragma once

#include <string>
#include <vector>

#include "birkhoff/corpus.hpp"
#include "birkhoff/score.hpp"

namespace birkhoff::testing {

inline NoteEvent note(Beat onset, Beat duration, int pitch, int voice = kMelodyVoice) {
    return {onset, duration, Pitch::checked(pitch), voice};
}

inline Score make_score(std::vector<NoteEvent> notes, std::vector<ChordAnnotation> chords = {},
                        KeySignature key = {}, int beats_per_bar = 4) {
    Score s;
    s.notes = std::move(notes);
    s.chords = std::move(chords);
    s.key = key;
    s.beats_per_bar = beats_per_bar;
    s.sort_notes();
    return s;
}

/// Monophonic line, one note per beat.
inline Score line(const std::vector<int>& pitches, Beat step = Beat(1)) {
    std::vector<NoteEvent> notes;
    for (std::size_t i = 0; i < pitches.size(); ++i)
        notes.push_back(note(step * static_cast<std::int64_t>(i), step, pitches[i]));
    return make_score(std::move(notes));
}

/// Seeded two-voice score: a random melody on an eighth-note grid over
/// random block chords, one per bar. Pitches stay inside 36..96 so any
/// transposition by up to an octave remains valid.
inline Score random_score(std::uint64_t seed, std::size_t bars = 8) {
    Rng rng(seed, 0, 0x7e57);
    Score s;
    s.key = {rng.between(0, 11), rng.chance(0.5) ? Mode::major : Mode::minor};
    s.beats_per_bar = 4;
    for (std::size_t b = 0; b < bars; ++b) {
        const Beat onset(static_cast<std::int64_t>(4 * b));
        const auto q = kAllQualities[rng.below(kAllQualities.size())];
        const int root = rng.between(0, 11);
        s.chords.push_back({onset, root, q});
        for (int iv : chord_intervals(q)) s.notes.push_back(note(onset, Beat(4), 48 + root + iv, kAccompanimentVoice));
        Beat t(0);
        while (t < 4) {
            Beat d(rng.between(1, 4), 2);
            if (t + d > 4) d = Beat(4) - t;
            if (!rng.chance(0.1)) s.notes.push_back(note(onset + t, d, rng.between(60, 84)));
            t += d;
        }
    }
    s.sort_notes();
    s.id = "random-" + std::to_string(seed);
    return s;
}

inline Score transpose(const Score& s, int semitones) {
    Score t = s;
    for (auto& n : t.notes) n.pitch = Pitch::checked(n.pitch.midi + semitones);
    for (auto& c : t.chords) c.root = ((c.root + semitones) % 12 + 12) % 12;
    t.key.tonic = ((t.key.tonic + semitones) % 12 + 12) % 12;
    t.sort_notes();
    return t;
}

}  // namespace birkhoff::testing
