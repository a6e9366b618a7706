// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "birkhoff/score.hpp"

namespace birkhoff {

using ChromaFrame = std::array<double, 12>;

/// One frame per beat: frame t holds the duration each pitch class sounds in
/// [t, t+1), scaled to unit Euclidean norm. Silent frames stay all-zero.
struct ChromaSequence {
    std::vector<ChromaFrame> frames;

    std::size_t size() const noexcept { return frames.size(); }
};

inline bool is_zero(const ChromaFrame& f) noexcept {
    return std::all_of(f.begin(), f.end(), [](double v) { return v == 0.0; });
}

inline ChromaSequence chroma_sequence(const Score& score) {
    ChromaSequence seq;
    const Beat total = score.total_duration();
    if (total <= 0) return seq;
    const auto n = static_cast<std::size_t>((total.numerator() + total.denominator() - 1) / total.denominator());
    seq.frames.assign(n, ChromaFrame{});

    for (const auto& note : score.notes) {
        const Beat end = note.end();
        auto first = static_cast<std::int64_t>(note.onset.numerator() / note.onset.denominator());
        for (std::int64_t t = first; Beat(t) < end && static_cast<std::size_t>(t) < n; ++t) {
            const Beat lo = std::max(note.onset, Beat(t));
            const Beat hi = std::min(end, Beat(t + 1));
            if (hi > lo) seq.frames[static_cast<std::size_t>(t)][note.pitch.pitch_class()] += to_double(hi - lo);
        }
    }
    for (auto& f : seq.frames) {
        double norm = 0.0;
        for (double v : f) norm += v * v;
        if (norm == 0.0) continue;
        norm = std::sqrt(norm);
        for (double& v : f) v /= norm;
    }
    return seq;
}

struct SelfSimilarityMatrix {
    std::size_t n = 0;
    std::vector<double> values;  // row-major n x n

    double operator()(std::size_t i, std::size_t j) const noexcept { return values[i * n + j]; }
};

inline SelfSimilarityMatrix build_ssm(const ChromaSequence& c) {
    SelfSimilarityMatrix m;
    m.n = c.size();
    m.values.assign(m.n * m.n, 0.0);
    for (std::size_t i = 0; i < m.n; ++i) {
        const bool zi = is_zero(c.frames[i]);
        m.values[i * m.n + i] = 1.0;
        if (zi) continue;
        for (std::size_t j = i + 1; j < m.n; ++j) {
            double dot = 0.0;
            for (std::size_t k = 0; k < 12; ++k) dot += c.frames[i][k] * c.frames[j][k];
            m.values[i * m.n + j] = dot;
            m.values[j * m.n + i] = dot;
        }
    }
    return m;
}

/// Half-open frame range [start, end).
struct Segment {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t length() const noexcept { return end - start; }
};

struct SegmentFitness {
    double sigma_bar = 0.0;  // mean similarity of the non-trivial repetitions
    double gamma_bar = 0.0;  // share of the piece they cover
    std::size_t repetitions = 0;

    double fitness() const noexcept {
        const double s = sigma_bar + gamma_bar;
        return s > 0.0 ? 2.0 * sigma_bar * gamma_bar / s : 0.0;
    }
};

inline constexpr double kPathThreshold = 0.85;
inline constexpr std::size_t kMaxCandidateSegments = 2000;

namespace detail {

/// Prefix sums along every diagonal: cum[(i+1)*(n+1) + (j+1)] = sum of
/// ssm(i-k, j-k) for k = 0..min(i, j).
class DiagonalSums {
public:
    explicit DiagonalSums(const SelfSimilarityMatrix& ssm) : n_(ssm.n), cum_((ssm.n + 1) * (ssm.n + 1), 0.0) {
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j)
                cum_[(i + 1) * (n_ + 1) + (j + 1)] = cum_[i * (n_ + 1) + j] + ssm(i, j);
    }

    /// Sum of ssm(a + k, b + k) for k in [0, len).
    double path(std::size_t a, std::size_t b, std::size_t len) const noexcept {
        return cum_[(a + len) * (n_ + 1) + (b + len)] - cum_[a * (n_ + 1) + b];
    }

private:
    std::size_t n_;
    std::vector<double> cum_;
};

/// Best-total-weight set of non-overlapping windows of `len` frames whose
/// starts lie in [lo, hi - len]. Returns (total weight, window count).
inline std::pair<double, std::size_t> best_family(std::span<const double> weight, std::size_t lo, std::size_t hi,
                                                  std::size_t len) {
    if (hi < lo + len) return {0.0, 0};
    const std::size_t span_len = hi - lo;
    std::vector<double> best(span_len + 1, 0.0);
    std::vector<std::size_t> count(span_len + 1, 0);
    for (std::size_t k = span_len; k-- > 0;) {
        best[k] = best[k + 1];
        count[k] = count[k + 1];
        const std::size_t s = lo + k;
        if (k + len <= span_len && weight[s] > 0.0) {
            const double take = weight[s] + best[k + len];
            if (take > best[k]) {
                best[k] = take;
                count[k] = count[k + len] + 1;
            }
        }
    }
    return {best[0], count[0]};
}

inline SegmentFitness segment_fitness(const DiagonalSums& sums, std::size_t n, const Segment& seg) {
    const std::size_t len = seg.length();
    // weight[s] = mean path similarity when it clears the threshold, else 0
    std::vector<double> weight(n, 0.0);
    for (std::size_t s = 0; s + len <= n; ++s) {
        const double p = sums.path(seg.start, s, len) / static_cast<double>(len);
        if (p >= kPathThreshold) weight[s] = p;
    }
    const auto [left_w, left_c] = best_family(weight, 0, seg.start, len);
    const auto [right_w, right_c] = best_family(weight, seg.end, n, len);

    SegmentFitness f;
    f.repetitions = left_c + right_c;
    if (f.repetitions == 0) return f;
    f.sigma_bar = (left_w + right_w) / static_cast<double>(f.repetitions);
    f.gamma_bar = static_cast<double>(f.repetitions * len) / static_cast<double>(n);
    return f;
}

}  // namespace detail

/// Repetition quality of one segment: the segment is matched along the main
/// diagonal direction against every other start; matches with mean
/// similarity >= kPathThreshold form candidate repetitions, and the best
/// non-overlapping family (the segment's own occurrence is always part of it
/// and excluded from both scores) is kept.
inline SegmentFitness segment_fitness(const SelfSimilarityMatrix& ssm, const Segment& seg) {
    if (seg.end > ssm.n || seg.start >= seg.end)
        throw Error(ErrorKind::InvalidArgument, "segment outside the matrix");
    if (seg.length() < 2) throw Error(ErrorKind::SegmentTooShort, "segment shorter than 2 frames");
    return detail::segment_fitness(detail::DiagonalSums(ssm), ssm.n, seg);
}

/// Stride used for both segment lengths and starts so that at most
/// kMaxCandidateSegments candidates are scanned. Stride 1 until that cap is
/// exceeded, then the smallest stride that fits.
inline std::size_t candidate_stride(std::size_t n) {
    auto count = [n](std::size_t stride) {
        std::size_t c = 0;
        for (std::size_t len = 2; len <= n / 2; len += stride) c += (n - len) / stride + 1;
        return c;
    };
    std::size_t stride = 1;
    while (count(stride) > kMaxCandidateSegments) ++stride;
    return stride;
}

inline double self_similarity_fitness(const SelfSimilarityMatrix& ssm) {
    const std::size_t n = ssm.n;
    if (n < 4) throw Error(ErrorKind::ScoreTooShort, "fewer than 4 beat frames");
    const detail::DiagonalSums sums(ssm);
    const std::size_t stride = candidate_stride(n);
    double best = 0.0;
    for (std::size_t len = 2; len <= n / 2; len += stride)
        for (std::size_t start = 0; start + len <= n; start += stride)
            best = std::max(best, detail::segment_fitness(sums, n, {start, start + len}).fitness());
    return best;
}

inline double self_similarity_fitness(const Score& score) {
    return self_similarity_fitness(build_ssm(chroma_sequence(score)));
}

// ---------------------------------------------------------------------------
// Skewness

struct Skewness {
    double value = 0.0;
    bool degenerate = false;  // zero variance or fewer than two samples
};

/// Biased (population) sample skewness m3 / m2^(3/2).
inline Skewness sample_skewness(std::span<const double> xs) {
    if (xs.size() < 2) return {0.0, true};
    const double n = static_cast<double>(xs.size());
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double m2 = 0.0, m3 = 0.0;
    for (double x : xs) {
        const double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if (m2 <= 1e-20 * (1.0 + mean * mean)) return {0.0, true};
    return {m3 / std::pow(m2, 1.5), false};
}

struct SkewnessWeights {
    double beta1 = 1.0;
    double beta2 = 1.0;
    double theta_sk = 0.0;
};

struct SkewnessFeature {
    double pitch = 0.0;   // PS
    double rhythm = 0.0;  // RS
    double combined = 0.0;
    bool pitch_degenerate = false;
    bool rhythm_degenerate = false;
};

/// Absolute pitch and rhythm skewness over every note of both voices.
inline SkewnessFeature skewness_feature(const Score& score, const SkewnessWeights& w = {}) {
    if (score.notes.empty()) throw Error(ErrorKind::EmptyScore, "score '" + score.id + "' has no notes");
    std::vector<double> pitches, durations;
    pitches.reserve(score.notes.size());
    durations.reserve(score.notes.size());
    for (const auto& n : score.notes) {
        pitches.push_back(n.pitch.midi);
        durations.push_back(to_double(n.duration));
    }
    const auto ps = sample_skewness(pitches);
    const auto rs = sample_skewness(durations);
    SkewnessFeature f;
    f.pitch = std::abs(ps.value);
    f.rhythm = std::abs(rs.value);
    f.pitch_degenerate = ps.degenerate;
    f.rhythm_degenerate = rs.degenerate;
    f.combined = w.beta1 * f.pitch + w.beta2 * f.rhythm + w.theta_sk;
    return f;
}

}  // namespace birkhoff
