// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "birkhoff/harmony.hpp"
#include "birkhoff/ingest.hpp"
#include "birkhoff/io.hpp"
#include "birkhoff/score.hpp"

namespace birkhoff {

// ---------------------------------------------------------------------------
// Deterministic randomness

/// mt19937_64 with hand-written draws. The standard distributions are
/// implementation-defined, so they would make corpora differ across
/// standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0, std::uint32_t tag = 0) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), tag};
        engine_.seed(seq);
    }

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n), n > 0, by rejection.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x;
        do x = engine_();
        while (x >= limit);
        return x % n;
    }

    int between(int lo, int hi) { return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1))); }

    bool chance(double p) { return uniform() < p; }

    /// Index drawn proportionally to non-negative weights.
    std::size_t weighted(std::span<const double> w) {
        double total = 0.0;
        for (double v : w) total += v;
        double u = uniform() * total;
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (u < w[i]) return i;
            u -= w[i];
        }
        return w.size() - 1;
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Configuration

struct ProgressionChord {
    int root = 0;  // pitch class
    ChordQuality quality = ChordQuality::major;

    friend bool operator==(const ProgressionChord&, const ProgressionChord&) = default;
};

/// One chord per bar, cycled over the piece.
struct Progression {
    std::string name;
    KeySignature key;
    std::vector<ProgressionChord> chords;

    friend bool operator==(const Progression&, const Progression&) = default;
};

/// Twelve common pop progressions, each placed in a different key.
inline std::vector<Progression> default_progression_pool() {
    using enum ChordQuality;
    struct Template {
        const char* name;
        Mode mode;
        std::vector<std::pair<int, ChordQuality>> chords;  // offset from tonic
    };
    const std::vector<Template> templates = {
        {"I-V-vi-IV", Mode::major, {{0, major}, {7, major}, {9, minor}, {5, major}}},
        {"vi-IV-I-V", Mode::major, {{9, minor}, {5, major}, {0, major}, {7, major}}},
        {"I-IV-V-IV", Mode::major, {{0, major}, {5, major}, {7, major}, {5, major}}},
        {"I-vi-IV-V", Mode::major, {{0, major}, {9, minor}, {5, major}, {7, major}}},
        {"I-IV-vi-V", Mode::major, {{0, major}, {5, major}, {9, minor}, {7, major}}},
        {"ii7-V7-Imaj7-Imaj7", Mode::major, {{2, minor7}, {7, dominant7}, {0, major7}, {0, major7}}},
        {"I-V-IV-I", Mode::major, {{0, major}, {7, major}, {5, major}, {0, major}}},
        {"IV-I-V-vi", Mode::major, {{5, major}, {0, major}, {7, major}, {9, minor}}},
        {"I-iii-IV-V", Mode::major, {{0, major}, {4, minor}, {5, major}, {7, major}}},
        {"i-VI-III-VII", Mode::minor, {{0, minor}, {8, major}, {3, major}, {10, major}}},
        {"i-iv-VII-III", Mode::minor, {{0, minor}, {5, minor}, {10, major}, {3, major}}},
        {"i-VII-VI-V7", Mode::minor, {{0, minor}, {10, major}, {8, major}, {7, dominant7}}},
    };
    std::vector<Progression> pool;
    for (std::size_t i = 0; i < templates.size(); ++i) {
        Progression p;
        p.name = templates[i].name;
        p.key = {static_cast<int>(i * 7 % 12), templates[i].mode};
        for (auto [offset, q] : templates[i].chords) p.chords.push_back({(p.key.tonic + offset) % 12, q});
        pool.push_back(std::move(p));
    }
    return pool;
}

struct GenConfig {
    std::uint64_t seed = 42;
    std::size_t n_pairs = 100;
    std::size_t bars = 16;
    int beats_per_bar = 4;
    std::vector<Progression> progression_pool = default_progression_pool();

    void validate() const {
        if (n_pairs < 1) throw Error(ErrorKind::InvalidArgument, "n_pairs must be at least 1");
        if (bars < 4) throw Error(ErrorKind::InvalidArgument, "bars must be at least 4");
        if (beats_per_bar < 1 || beats_per_bar > 64)
            throw Error(ErrorKind::InvalidArgument, "beats_per_bar must lie in 1..64");
        if (progression_pool.empty()) throw Error(ErrorKind::InvalidArgument, "progression_pool is empty");
        for (const auto& p : progression_pool)
            if (p.chords.empty()) throw Error(ErrorKind::InvalidArgument, "progression '" + p.name + "' has no chords");
    }
};

inline nlohmann::json gen_config_to_json(const GenConfig& c) {
    nlohmann::json pool = nlohmann::json::array();
    for (const auto& p : c.progression_pool) {
        nlohmann::json chords = nlohmann::json::array();
        for (const auto& ch : p.chords) chords.push_back({{"root", ch.root}, {"quality", std::string(to_string(ch.quality))}});
        pool.push_back({{"name", p.name}, {"key", detail::key_to_json(p.key)}, {"chords", std::move(chords)}});
    }
    return {{"seed", c.seed},
            {"n_pairs", c.n_pairs},
            {"bars", c.bars},
            {"beats_per_bar", c.beats_per_bar},
            {"progression_pool", std::move(pool)}};
}

/// Missing fields keep their defaults; unknown fields are rejected.
inline GenConfig gen_config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorKind::SchemaError, "config: expected an object");
    GenConfig c;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "seed") c.seed = value.get<std::uint64_t>();
            else if (key == "n_pairs") c.n_pairs = value.get<std::size_t>();
            else if (key == "bars") c.bars = value.get<std::size_t>();
            else if (key == "beats_per_bar") c.beats_per_bar = value.get<int>();
            else if (key == "progression_pool") {
                if (!value.is_array()) throw Error(ErrorKind::SchemaError, "config.progression_pool: expected an array");
                c.progression_pool.clear();
                for (std::size_t i = 0; i < value.size(); ++i) {
                    const std::string at = "config.progression_pool[" + std::to_string(i) + "]";
                    Progression p;
                    if (auto it = value[i].find("name"); it != value[i].end()) p.name = it->get<std::string>();
                    p.key = detail::parse_key(value[i], at);
                    for (const auto& ch : detail::require(value[i], "chords", at)) {
                        const auto root = detail::require_int(ch, "root", at + ".chords");
                        if (root < 0 || root > 11) throw Error(ErrorKind::RangeError, at + ": chord root outside 0..11");
                        const auto q = parse_quality(detail::require_string(ch, "quality", at + ".chords"));
                        if (!q) throw Error(ErrorKind::SchemaError, at + ": unknown chord quality");
                        p.chords.push_back({static_cast<int>(root), *q});
                    }
                    c.progression_pool.push_back(std::move(p));
                }
            } else {
                throw Error(ErrorKind::SchemaError, "config: unknown field '" + key + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::SchemaError, std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Generators

namespace detail {

enum : std::uint32_t { kPairStream = 0, kComposerStream = 1, kAiStream = 2 };

inline std::string pair_id(std::uint64_t seed, std::size_t index) {
    std::ostringstream os;
    os << 's' << seed << "/p";
    os.width(5);
    os.fill('0');
    os << index;
    return os.str();
}

/// Shared skeleton of pair `index`: key, chords and accompaniment.
inline Score pair_skeleton(const GenConfig& cfg, std::size_t index) {
    Rng rng(cfg.seed, index, kPairStream);
    const auto& prog = cfg.progression_pool[rng.below(cfg.progression_pool.size())];
    Score s;
    s.key = prog.key;
    s.beats_per_bar = cfg.beats_per_bar;
    const Beat bar_len(cfg.beats_per_bar);
    for (std::size_t bar = 0; bar < cfg.bars; ++bar) {
        const auto& ch = prog.chords[bar % prog.chords.size()];
        const Beat onset = bar_len * static_cast<std::int64_t>(bar);
        s.chords.push_back({onset, ch.root, ch.quality});
        for (int iv : chord_intervals(ch.quality))
            s.notes.push_back({onset, bar_len, Pitch::checked(48 + ch.root + iv), kAccompanimentVoice});
    }
    return s;
}

inline std::size_t motif_bars(const GenConfig& cfg, std::size_t index) {
    Rng rng(cfg.seed, index, kPairStream);
    const auto& prog = cfg.progression_pool[rng.below(cfg.progression_pool.size())];
    return std::clamp<std::size_t>(prog.chords.size(), 2, 4);
}

/// Chord tone of `chord` closest to `near`, ties going down.
inline int nearest_chord_tone(const ChordAnnotation& chord, int near) {
    int best = near, best_d = 128;
    for (int p = near - 12; p <= near + 12; ++p)
        if (p >= 0 && p <= 127 && chord.contains_pitch_class(p % 12) && std::abs(p - near) < best_d) {
            best = p;
            best_d = std::abs(p - near);
        }
    return best;
}

/// Next scale tone above (dir > 0) or below `p`.
inline int scale_step(int p, int dir, const KeySignature& key) {
    for (int q = p + dir; q >= 0 && q <= 127; q += dir)
        if (scale_degree(q % 12, key)) return q;
    return p;
}

struct MotifNote {
    Beat offset;  // from the start of the section
    Beat duration;
    int pitch;
};

/// Melody over `nbars` bars: chord tones on beats, scale passing tones on
/// off-beats, durations from {1/2, 1, 2}.
inline std::vector<MotifNote> make_motif(Rng& rng, const Score& skeleton, std::size_t first_bar, std::size_t nbars,
                                         int start_pitch) {
    const Beat bar_len(skeleton.beats_per_bar);
    static const std::array<Beat, 3> choices = {Beat(1, 2), Beat(1), Beat(2)};
    static constexpr std::array<double, 3> weights = {0.55, 0.30, 0.15};
    std::vector<MotifNote> out;
    int pitch = start_pitch;
    for (std::size_t b = 0; b < nbars; ++b) {
        const auto& chord = skeleton.chords[first_bar + b];
        Beat t(0);
        while (t < bar_len) {
            Beat d;
            do d = choices[rng.weighted(weights)];
            while (t + d > bar_len);
            if (t.denominator() == 1) {
                const int target = pitch + rng.between(-7, 7);
                pitch = nearest_chord_tone(chord, std::clamp(target, 60 + skeleton.key.tonic - 7, 74 + skeleton.key.tonic));
            } else {
                pitch = scale_step(pitch, rng.chance(0.5) ? 1 : -1, skeleton.key);
            }
            out.push_back({bar_len * static_cast<std::int64_t>(b) + t, d, pitch});
            t += d;
        }
    }
    return out;
}

}  // namespace detail

/// Positive-class surrogate: a motif spanning one pass of the progression,
/// laid out as A A B A (cycled), with a small seeded variation per
/// repetition.
inline Score gen_composer_like(const GenConfig& cfg, std::size_t index) {
    cfg.validate();
    Score s = detail::pair_skeleton(cfg, index);
    Rng rng(cfg.seed, index, detail::kComposerStream);
    const std::size_t mb = detail::motif_bars(cfg, index);
    const int home = 60 + s.key.tonic;
    const auto a = detail::make_motif(rng, s, 0, mb, home);
    const auto b = detail::make_motif(rng, s, 0, mb, home + 4);
    static constexpr std::array<char, 4> form = {'A', 'A', 'B', 'A'};
    const Beat bar_len(cfg.beats_per_bar);
    const Beat end = bar_len * static_cast<std::int64_t>(cfg.bars);
    for (std::size_t section = 0; section * mb < cfg.bars; ++section) {
        auto motif = form[section % form.size()] == 'A' ? a : b;
        const std::size_t first_bar = section * mb;
        if (section > 0 && rng.chance(0.5)) {
            // re-voice one beat-aligned note to another chord tone
            auto& n = motif[rng.below(motif.size())];
            const std::size_t bar = first_bar + static_cast<std::size_t>(to_double(n.offset / bar_len));
            if (n.offset.denominator() == 1 && bar < s.chords.size())
                n.pitch = detail::nearest_chord_tone(s.chords[bar], n.pitch + (rng.chance(0.5) ? 3 : -3));
        }
        const Beat base = bar_len * static_cast<std::int64_t>(first_bar);
        for (const auto& n : motif) {
            const Beat onset = base + n.offset;
            if (onset >= end) break;
            s.notes.push_back({onset, std::min(n.duration, end - onset), Pitch::checked(n.pitch), kMelodyVoice});
        }
    }
    s.sort_notes();
    s.label = Label::composer;
    s.id = detail::pair_id(cfg.seed, index) + "/composer";
    return s;
}

/// Negative-class surrogate: a chromatic random walk within 14 semitones of
/// the tonic, durations from all eight bins (mostly sixteenths), and rests.
inline Score gen_ai_like(const GenConfig& cfg, std::size_t index) {
    cfg.validate();
    Score s = detail::pair_skeleton(cfg, index);
    Rng rng(cfg.seed, index, detail::kAiStream);
    const auto& bins = duration_bins();
    static constexpr std::array<double, 8> weights = {0.85, 0.03, 0.02, 0.03, 0.02, 0.02, 0.02, 0.01};
    static constexpr std::array<double, 7> steps = {0.01, 0.02, 0.07, 0.80, 0.07, 0.02, 0.01};  // -3..+3
    const int home = 60 + s.key.tonic;
    const Beat end = Beat(cfg.beats_per_bar) * static_cast<std::int64_t>(cfg.bars);
    int pitch = home;
    Beat t(0);
    while (t < end) {
        const Beat d = std::min(bins[rng.weighted(weights)], end - t);
        if (!rng.chance(0.15)) {
            int step = static_cast<int>(rng.weighted(steps)) - 3;
            if (pitch != home && rng.chance(0.8)) step = pitch > home ? -std::abs(step) : std::abs(step);
            if (pitch != home && step == 0 && rng.chance(0.35)) step = pitch > home ? -1 : 1;  // mean reversion
            pitch = std::clamp(pitch + step, home - 14, home + 14);
            s.notes.push_back({t, d, Pitch::checked(pitch), kMelodyVoice});
        }
        t += d;
    }
    s.sort_notes();
    s.label = Label::ai;
    s.id = detail::pair_id(cfg.seed, index) + "/ai";
    return s;
}

/// Pairs in index order, composer before ai within each pair.
inline std::vector<Score> generate_corpus(const GenConfig& cfg, unsigned jobs = 1) {
    cfg.validate();
    std::vector<Score> out(2 * cfg.n_pairs);
    auto work = [&](std::size_t i) {
        out[2 * i] = gen_composer_like(cfg, i);
        out[2 * i + 1] = gen_ai_like(cfg, i);
    };
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(cfg.n_pairs)));
    if (jobs == 1) {
        for (std::size_t i = 0; i < cfg.n_pairs; ++i) work(i);
        return out;
    }
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < jobs; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < cfg.n_pairs; i += jobs) work(i);
        });
    pool.clear();
    return out;
}

// ---------------------------------------------------------------------------
// Split

/// Scores sharing everything before the last '/' of their id form one
/// group (a generated pair); ids without '/' are their own group.
inline std::string group_key(const std::string& id) {
    const auto slash = id.rfind('/');
    return slash == std::string::npos ? id : id.substr(0, slash);
}

struct Split {
    std::vector<Score> train;
    std::vector<Score> test;
};

/// Seeded shuffle of groups, then the first ceil(ratio * groups) go to
/// train. Groups never straddle the boundary.
inline Split split_dataset(const std::vector<Score>& scores, double ratio = 0.7, std::uint64_t seed = 42) {
    if (scores.empty()) throw Error(ErrorKind::InvalidArgument, "cannot split an empty dataset");
    if (!(ratio > 0.0 && ratio < 1.0)) throw Error(ErrorKind::InvalidArgument, "split ratio must lie in (0, 1)");
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        auto key = group_key(scores[i].id);
        auto [it, fresh] = members.try_emplace(key);
        if (fresh) order.push_back(key);
        it->second.push_back(i);
    }
    Rng rng(seed, 0, 0x5u);
    rng.shuffle(order);
    const auto n_train = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(order.size()) - 1e-9));
    Split out;
    for (std::size_t g = 0; g < order.size(); ++g)
        for (auto i : members[order[g]]) (g < n_train ? out.train : out.test).push_back(scores[i]);
    return out;
}

// ---------------------------------------------------------------------------
// Dataset files: one compact score document per line

inline std::string dataset_text(const std::vector<Score>& scores) {
    std::string out;
    for (const auto& s : scores) {
        out += serialize_score_text(s);
        out += '\n';
    }
    return out;
}

inline void write_dataset(const std::vector<Score>& scores, const std::filesystem::path& path) {
    write_file_atomic(path, dataset_text(scores));
}

/// Blank lines are skipped. Errors carry the 1-based line number.
inline std::vector<Score> parse_dataset(std::string_view text) {
    std::vector<Score> out;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
        try {
            out.push_back(parse_score_text(line).score);
        } catch (const Error& e) {
            throw LineError(e.kind(), line_no, e.what());
        }
    }
    return out;
}

inline std::vector<Score> read_dataset(const std::filesystem::path& path) {
    return parse_dataset(read_text_file(path));
}

}  // namespace birkhoff
