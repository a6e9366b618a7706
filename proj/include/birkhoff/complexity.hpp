// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <zlib.h>

#include "birkhoff/score.hpp"

namespace birkhoff {

/// Shannon entropy in bits over the non-empty bins.
template <class Bin>
double shannon_entropy(const Histogram<Bin>& h) {
    if (h.total == 0) throw Error(ErrorKind::EmptyHistogram, "histogram has no samples");
    double H = 0.0;
    for (double p : h.probabilities())
        if (p > 0.0) H -= p * std::log2(p);
    return H;
}

struct EntropyWeights {
    double eta1 = 1.0;
    double eta2 = 1.0;
    double theta_e = 0.0;
};

struct EntropyFeature {
    double pitch = 0.0;   // PHE
    double rhythm = 0.0;  // RHE
    double combined = 0.0;
};

inline EntropyFeature entropy_feature(const Score& score, const EntropyWeights& w = {}) {
    EntropyFeature f;
    f.pitch = shannon_entropy(build_pitch_class_histogram(score));
    f.rhythm = shannon_entropy(build_duration_histogram(score));
    f.combined = w.eta1 * f.pitch + w.eta2 * f.rhythm + w.theta_e;
    return f;
}

// ---------------------------------------------------------------------------
// Canonical byte stream

namespace detail {

inline void put_varint(std::vector<std::uint8_t>& out, std::uint64_t v) {
    while (v >= 0x80) {
        out.push_back(static_cast<std::uint8_t>(v | 0x80));
        v >>= 7;
    }
    out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint64_t zigzag(std::int64_t v) noexcept {
    return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
}

inline void put_beat(std::vector<std::uint8_t>& out, const Beat& b) {
    put_varint(out, zigzag(b.numerator()));
    put_varint(out, static_cast<std::uint64_t>(b.denominator()));
}

}  // namespace detail

/// Deterministic encoding of the musical content (no id, no label):
///
///   "BSC" 0x01 | tonic | mode | varint beats_per_bar | varint note_count
///   per note (canonical order): delta-onset num/den, duration num/den, pitch, voice
///   if chords: 'C' | varint chord_count | per chord: delta-onset num/den, root, quality
///
/// Numerators are zigzag varints, denominators plain varints.
inline std::vector<std::uint8_t> canonical_serialize(const Score& score) {
    std::vector<NoteEvent> notes = score.notes;
    std::sort(notes.begin(), notes.end(), note_less);

    std::vector<std::uint8_t> out = {'B', 'S', 'C', 0x01};
    out.push_back(static_cast<std::uint8_t>(score.key.tonic));
    out.push_back(score.key.mode == Mode::major ? 0 : 1);
    detail::put_varint(out, static_cast<std::uint64_t>(score.beats_per_bar));
    detail::put_varint(out, notes.size());

    Beat prev{0};
    for (const auto& n : notes) {
        detail::put_beat(out, n.onset - prev);
        detail::put_beat(out, n.duration);
        out.push_back(static_cast<std::uint8_t>(n.pitch.midi));
        out.push_back(static_cast<std::uint8_t>(n.voice));
        prev = n.onset;
    }

    if (!score.chords.empty()) {
        out.push_back('C');
        detail::put_varint(out, score.chords.size());
        prev = Beat(0);
        for (const auto& c : score.chords) {
            detail::put_beat(out, c.onset - prev);
            out.push_back(static_cast<std::uint8_t>(c.root));
            out.push_back(static_cast<std::uint8_t>(c.quality));
            prev = c.onset;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Compression

/// Raw DEFLATE (no zlib/gzip wrapper) at a fixed level, window and memLevel,
/// so the compressed size depends only on the input bytes.
struct CompressorSetting {
    std::string algorithm = "deflate-raw";
    int level = 9;
};

inline std::vector<std::uint8_t> compress(std::span<const std::uint8_t> in, const CompressorSetting& cfg = {}) {
    if (cfg.algorithm != "deflate-raw")
        throw Error(ErrorKind::InvalidArgument, "unknown compressor '" + cfg.algorithm + "'");
    z_stream zs{};
    if (deflateInit2(&zs, cfg.level, Z_DEFLATED, -15, 8, Z_DEFAULT_STRATEGY) != Z_OK)
        throw Error(ErrorKind::InvalidArgument, "deflateInit2 failed");
    std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(in.size())));
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = deflate(&zs, Z_FINISH);
    out.resize(zs.total_out);
    deflateEnd(&zs);
    if (rc != Z_STREAM_END) throw Error(ErrorKind::InvalidArgument, "deflate did not finish");
    return out;
}

inline std::vector<std::uint8_t> decompress(std::span<const std::uint8_t> in) {
    z_stream zs{};
    if (inflateInit2(&zs, -15) != Z_OK) throw Error(ErrorKind::InvalidArgument, "inflateInit2 failed");
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    std::vector<std::uint8_t> out;
    std::array<std::uint8_t, 4096> buf{};
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        zs.next_out = buf.data();
        zs.avail_out = static_cast<uInt>(buf.size());
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw Error(ErrorKind::InvalidArgument, "corrupt deflate stream");
        }
        out.insert(out.end(), buf.begin(), buf.begin() + (buf.size() - zs.avail_out));
        if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
            inflateEnd(&zs);
            throw Error(ErrorKind::InvalidArgument, "truncated deflate stream");
        }
    }
    inflateEnd(&zs);
    return out;
}

/// Zeroth-order entropy of a byte stream, bits per byte.
inline double byte_entropy(std::span<const std::uint8_t> bytes) {
    Histogram<int> h;
    h.counts.assign(256, 0);
    for (auto b : bytes) ++h.counts[b];
    h.total = bytes.size();
    if (h.total == 0) return 0.0;
    return shannon_entropy(h);
}

struct ComplexityReport {
    std::size_t n_symbols = 0;        // N, bytes in the stream
    double per_symbol_entropy = 0.0;  // H_m, bits per byte
    double compressed_bits = 0.0;     // K
    double feature = 0.0;             // (N*H_m - K) / (N*H_m), clamped to [-1, 1]
    bool degenerate = false;
};

/// Redundancy of a byte stream relative to its zeroth-order information
/// content. A zero-entropy stream is fully redundant and scores 1.
inline ComplexityReport redundancy_ratio(std::span<const std::uint8_t> bytes, const CompressorSetting& cfg = {}) {
    ComplexityReport r;
    r.n_symbols = bytes.size();
    r.per_symbol_entropy = byte_entropy(bytes);
    r.compressed_bits = 8.0 * static_cast<double>(compress(bytes, cfg).size());
    const double info = static_cast<double>(r.n_symbols) * r.per_symbol_entropy;
    if (info <= 0.0) {
        r.feature = 1.0;
        r.degenerate = true;
        return r;
    }
    r.feature = std::clamp((info - r.compressed_bits) / info, -1.0, 1.0);
    return r;
}

/// Also flags scores with fewer than two notes: there is no sequence for the
/// compressor to find redundancy in, so the value is not comparable.
inline ComplexityReport kolmogorov_complexity(const Score& score, const CompressorSetting& cfg = {}) {
    if (score.notes.empty()) throw Error(ErrorKind::EmptyScore, "score '" + score.id + "' has no notes");
    auto r = redundancy_ratio(canonical_serialize(score), cfg);
    if (score.notes.size() < 2) r.degenerate = true;
    return r;
}

}  // namespace birkhoff
